#include "capasim/types.hpp"

#include <cmath>
#include <cstdlib>

#include "capasim/errors.hpp"

namespace capasim {

std::string_view to_string(ActionId a) noexcept {
  switch (a) {
    case ActionId::RequestPHC:
      return "a1";
    case ActionId::SkipPHC:
      return "a2";
    case ActionId::EngageSocial:
      return "a3";
    case ActionId::StayDisengaged:
      return "a4";
  }
  return "?";
}

std::optional<ActionId> parse_action(std::string_view s) noexcept {
  for (auto a : kAllActions) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::string_view to_string(TerminalKind k) noexcept {
  switch (k) {
    case TerminalKind::NotTerminal:
      return "none";
    case TerminalKind::Deprived:
      return "deprived";
    case TerminalKind::Healthy:
      return "healthy";
  }
  return "?";
}

std::string_view to_string(Facility f) noexcept {
  switch (f) {
    case Facility::PHC:
      return "phc";
    case Facility::SocialServices:
      return "social_services";
    case Facility::ICU:
      return "icu";
  }
  return "?";
}

std::string_view to_string(Service s) noexcept { return s == Service::PHC ? "PHC" : "ICU"; }

std::string Money::to_string() const {
  const auto whole = std::llabs(cents_) / 100;
  const auto frac = std::llabs(cents_) % 100;
  std::string out = cents_ < 0 ? "-" : "";
  out += std::to_string(whole);
  out += '.';
  if (frac < 10) out += '0';
  out += std::to_string(frac);
  return out;
}

int HealthScale::steps_of(double amount) const {
  const double steps = amount / delta;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9) {
    throw ArgumentError("health delta " + std::to_string(amount) + " is not a multiple of " +
                        std::to_string(delta));
  }
  return static_cast<int>(rounded);
}

}  // namespace capasim
