#pragma once

// Internal quantities are SI (m, s, veh). These helpers are used only where
// values cross the configuration and report boundary.
namespace comc::units {

inline constexpr double kSecondsPerHour = 3600.0;

constexpr double kmh_to_ms(double kmh) { return kmh / 3.6; }
constexpr double ms_to_kmh(double ms) { return ms * 3.6; }
constexpr double vph_to_vps(double vph) { return vph / kSecondsPerHour; }
constexpr double vps_to_vph(double vps) { return vps * kSecondsPerHour; }

}  // namespace comc::units
