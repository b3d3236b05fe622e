#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace capasim {

/// Agent-initiated actions. Hospitalization is not an action; it is the
/// consequence of reaching the deprived terminal state.
enum class ActionId : std::uint8_t {
  RequestPHC = 0,      // a1
  SkipPHC = 1,         // a2
  EngageSocial = 2,    // a3
  StayDisengaged = 3,  // a4
};

inline constexpr std::size_t kNumActions = 4;
inline constexpr std::array<ActionId, kNumActions> kAllActions = {
    ActionId::RequestPHC, ActionId::SkipPHC, ActionId::EngageSocial, ActionId::StayDisengaged};

constexpr std::size_t index_of(ActionId a) noexcept { return static_cast<std::size_t>(a); }

/// "a1".."a4"
std::string_view to_string(ActionId a) noexcept;
std::optional<ActionId> parse_action(std::string_view s) noexcept;

enum class TerminalKind : std::uint8_t { NotTerminal, Deprived, Healthy };
std::string_view to_string(TerminalKind k) noexcept;

enum class Facility : std::uint8_t { PHC = 0, SocialServices = 1, ICU = 2 };
std::string_view to_string(Facility f) noexcept;

enum class Service : std::uint8_t { PHC, ICU };
std::string_view to_string(Service s) noexcept;

struct Cell {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Currency in integer cents. No floating-point money anywhere.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money cents(std::int64_t c) noexcept { return Money(c); }
  static constexpr Money euros(std::int64_t e) noexcept { return Money(e * 100); }

  constexpr std::int64_t cents() const noexcept { return cents_; }

  constexpr Money operator+(Money o) const noexcept { return Money(cents_ + o.cents_); }
  constexpr Money operator-(Money o) const noexcept { return Money(cents_ - o.cents_); }
  constexpr Money& operator+=(Money o) noexcept {
    cents_ += o.cents_;
    return *this;
  }
  constexpr Money& operator-=(Money o) noexcept {
    cents_ -= o.cents_;
    return *this;
  }
  friend constexpr auto operator<=>(Money, Money) = default;

  /// "12.30"
  std::string to_string() const;

 private:
  constexpr explicit Money(std::int64_t c) noexcept : cents_(c) {}
  std::int64_t cents_ = 0;
};

/// Discrete health: level index in [0, levels-1], value = level * delta.
struct HealthScale {
  int levels = 4;
  double delta = 0.5;

  constexpr int max_level() const noexcept { return levels - 1; }
  constexpr double value(int level) const noexcept { return level * delta; }

  /// Converts a health amount to whole steps of `delta`; throws ArgumentError
  /// when the amount is not on the grid.
  int steps_of(double amount) const;

  friend bool operator==(const HealthScale&, const HealthScale&) = default;
};

}  // namespace capasim
