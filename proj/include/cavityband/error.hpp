#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cavityband {

enum class Errc {
  InvalidArgument,
  NonConvergence,
  LengthNotPowerOfTwo,
  UnderdeterminedFit,
  IllConditioned,
  InsufficientSamples,
  Diverged,
  ExpansionPole,
  BadExtent,
  PacketTooWide,
  ZoneBoundaryOverlap,
  NormDrift,
  EmptySelection,
  FitDegenerate,
  TooFewOscillations,
  NotAGap,
  NoHoleDetected,
  NotCleared,
  ConfigError,
};

constexpr std::string_view to_string(Errc e) noexcept {
  switch (e) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::LengthNotPowerOfTwo: return "LengthNotPowerOfTwo";
    case Errc::UnderdeterminedFit: return "UnderdeterminedFit";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::Diverged: return "Diverged";
    case Errc::ExpansionPole: return "ExpansionPole";
    case Errc::BadExtent: return "BadExtent";
    case Errc::PacketTooWide: return "PacketTooWide";
    case Errc::ZoneBoundaryOverlap: return "ZoneBoundaryOverlap";
    case Errc::NormDrift: return "NormDrift";
    case Errc::EmptySelection: return "EmptySelection";
    case Errc::FitDegenerate: return "FitDegenerate";
    case Errc::TooFewOscillations: return "TooFewOscillations";
    case Errc::NotAGap: return "NotAGap";
    case Errc::NoHoleDetected: return "NoHoleDetected";
    case Errc::NotCleared: return "NotCleared";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the Errc codes so the
/// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cavityband
