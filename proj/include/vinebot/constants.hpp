#pragma once

#include <numbers>

namespace vinebot {

inline constexpr double kGravity = 9.80665;            // m/s^2
inline constexpr double kPi = std::numbers::pi;

inline constexpr double kDefaultGeometricFactor = 0.5; // growth/inversion symmetry
inline constexpr double kLabTubeDiameter = 0.088;      // m, LDPE body
inline constexpr double kCalibratedGeometricFactor = 0.503;
inline constexpr double kCalibratedEversionForce = 2.52; // N
inline constexpr double kLabTailMass = 0.009;          // kg, 0.25 m of tail
inline constexpr double kLabTailLength = 0.25;         // m

inline constexpr double kTunedCouplingLow = 12.0;      // N
inline constexpr double kTunedCouplingHigh = 24.0;     // N

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

} // namespace vinebot
