#pragma once

// Unit conventions: frequencies of optical transitions are stored as angular
// frequencies (rad/s); electrical frequencies (beat, bandwidth, sampling) in
// Hz; times in s; phases in rad. Human units are used only at the boundary.

#include <numbers>
#include <string>
#include <string_view>

namespace xps::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double mhz_to_angular(double mhz) { return kTwoPi * mhz * 1e6; }
constexpr double angular_to_mhz(double w) { return w / (kTwoPi * 1e6); }
constexpr double mhz_to_hz(double mhz) { return mhz * 1e6; }
constexpr double hz_to_mhz(double hz) { return hz * 1e-6; }
constexpr double ns_to_s(double ns) { return ns * 1e-9; }
constexpr double s_to_ns(double s) { return s * 1e9; }
constexpr double urad_to_rad(double u) { return u * 1e-6; }
constexpr double rad_to_urad(double r) { return r * 1e6; }
constexpr double mrad_to_rad(double m) { return m * 1e-3; }
constexpr double rad_to_mrad(double r) { return r * 1e3; }

enum class Dimension { time, frequency, phase, dimensionless };

std::string_view dimension_name(Dimension d);

/// Parses "40", "40ns", "40 ns", "2.4us", "6 MHz", "-13 urad" ...
///
/// A bare number is read in `default_unit`. A suffix must belong to the
/// requested dimension; anything else throws DomainError. The result is in
/// the SI unit of the dimension (s, Hz, rad).
double parse_quantity(std::string_view text, Dimension dim,
                      std::string_view default_unit);

/// Scale factor from `unit` to the SI unit of `dim`; throws on mismatch.
double unit_scale(std::string_view unit, Dimension dim);

}  // namespace xps::units
