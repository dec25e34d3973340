#pragma once

// Quasi-static growth and inversion force balances of an everting tube, and
// least-squares calibration of its geometric factor and eversion resistance.

#include "vinebot/constants.hpp"
#include "vinebot/error.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace vinebot {

namespace detail {

// Non-strict comparison with slack for round-off, so the closed-form boundary
// pressure is accepted by the inequality it was solved from.
inline bool at_least(double lhs, double rhs) {
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return lhs >= rhs - 1e-12 * scale;
}

inline bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace detail

/// Geometry and material resistances of the everting tube.
class VineBodySpec {
public:
    VineBodySpec(double diameter, double geometric_factor_C = kDefaultGeometricFactor, double f_eversion = 0.0,
                 double f_inversion = 0.0)
        : diameter_(diameter), c_(geometric_factor_C), f_eversion_(f_eversion), f_inversion_(f_inversion) {
        VINEBOT_REQUIRE(std::isfinite(diameter) && diameter > 0.0, ErrorCode::InvalidArgument,
                        "VineBodySpec.diameter must be > 0");
        VINEBOT_REQUIRE(std::isfinite(geometric_factor_C) && geometric_factor_C > 0.0 && geometric_factor_C <= 1.0,
                        ErrorCode::InvalidArgument, "VineBodySpec.geometric_factor_C must be in (0, 1]");
        VINEBOT_REQUIRE(detail::finite_nonneg(f_eversion), ErrorCode::InvalidArgument,
                        "VineBodySpec.f_eversion must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(f_inversion), ErrorCode::InvalidArgument,
                        "VineBodySpec.f_inversion must be >= 0");
    }

    /// The 88 mm LDPE body with calibrated C and eversion resistance.
    static VineBodySpec calibrated_lab() {
        return VineBodySpec(kLabTubeDiameter, kCalibratedGeometricFactor, kCalibratedEversionForce);
    }

    [[nodiscard]] double diameter() const { return diameter_; }
    [[nodiscard]] double geometric_factor() const { return c_; }
    [[nodiscard]] double f_eversion() const { return f_eversion_; }
    [[nodiscard]] double f_inversion() const { return f_inversion_; }

    [[nodiscard]] VineBodySpec with_calibration(double c, double f_eversion) const {
        return VineBodySpec(diameter_, c, f_eversion, f_inversion_);
    }

private:
    double diameter_;
    double c_;
    double f_eversion_;
    double f_inversion_;
};

/// Resistive axial forces acting during growth. All entries are magnitudes.
struct LoadState {
    double t_tail = 0.0;      // N, tension of the uneverted tail
    double f_load = 0.0;      // N, tether + payload resistance
    double w_axial = 0.0;     // N, axial weight of a tip mount
    double f_mount_ext = 0.0; // N, friction on the exterior of a tip mount

    void validate() const {
        VINEBOT_REQUIRE(detail::finite_nonneg(t_tail), ErrorCode::InvalidArgument, "LoadState.t_tail must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(f_load), ErrorCode::InvalidArgument, "LoadState.f_load must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(w_axial), ErrorCode::InvalidArgument, "LoadState.w_axial must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(f_mount_ext), ErrorCode::InvalidArgument,
                        "LoadState.f_mount_ext must be >= 0");
    }
};

struct CalibrationTrial {
    double applied_load = 0.0;             // N
    double observed_growth_pressure = 0.0; // Pa
};

struct CalibrationResult {
    double geometric_factor_C = 0.0;
    double f_eversion = 0.0; // N
    double rms_residual = 0.0; // Pa
};

/// Weight of a hanging mass, used for vertical tails and payloads.
inline double weight_of(double mass_kg) { return mass_kg * kGravity; }

inline double cross_section_area(const VineBodySpec& body) {
    const double r = body.diameter() / 2.0;
    return kPi * r * r;
}

/// Lowest pressure at which C*P*A balances eversion resistance, tail tension and load.
/// Mount-specific fields of `load` are ignored.
inline double min_growth_pressure(const VineBodySpec& body, const LoadState& load) {
    load.validate();
    const double resistive = body.f_eversion() + load.t_tail + load.f_load;
    return resistive / (body.geometric_factor() * cross_section_area(body));
}

inline bool growth_occurs(const VineBodySpec& body, double pressure, const LoadState& load) {
    VINEBOT_REQUIRE(detail::finite_nonneg(pressure), ErrorCode::InvalidArgument, "pressure must be >= 0");
    load.validate();
    const double propulsive = body.geometric_factor() * pressure * cross_section_area(body);
    return detail::at_least(propulsive, body.f_eversion() + load.t_tail + load.f_load);
}

/// Inversion uses the symmetric factor 1/2 regardless of the calibrated C.
inline bool inversion_occurs(const VineBodySpec& body, double pressure, double t_tail) {
    VINEBOT_REQUIRE(detail::finite_nonneg(pressure), ErrorCode::InvalidArgument, "pressure must be >= 0");
    VINEBOT_REQUIRE(detail::finite_nonneg(t_tail), ErrorCode::InvalidArgument, "t_tail must be >= 0");
    return detail::at_least(t_tail, 0.5 * pressure * cross_section_area(body) + body.f_inversion());
}

/// Fits P*A = load/C + F_eversion/C by ordinary least squares on (load, P*A).
/// Minimizing squared residuals in P*A is the same problem as in P since A is fixed.
inline CalibrationResult fit_calibration(std::span<const CalibrationTrial> trials, double area) {
    VINEBOT_REQUIRE(std::isfinite(area) && area > 0.0, ErrorCode::InvalidArgument, "area must be > 0");
    VINEBOT_REQUIRE(trials.size() >= 2, ErrorCode::Unidentifiable, "calibration needs at least two trials");
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials[i];
        VINEBOT_REQUIRE(detail::finite_nonneg(t.applied_load), ErrorCode::InvalidArgument,
                        "trial " + std::to_string(i) + ": applied_load must be >= 0");
        VINEBOT_REQUIRE(std::isfinite(t.observed_growth_pressure) && t.observed_growth_pressure > 0.0,
                        ErrorCode::InvalidArgument,
                        "trial " + std::to_string(i) + ": observed_growth_pressure must be > 0");
    }

    const double n = static_cast<double>(trials.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& t : trials) {
        mean_x += t.applied_load;
        mean_y += t.observed_growth_pressure * area;
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& t : trials) {
        const double dx = t.applied_load - mean_x;
        sxx += dx * dx;
        sxy += dx * (t.observed_growth_pressure * area - mean_y);
    }
    const double x_scale = std::max(1.0, std::abs(mean_x));
    VINEBOT_REQUIRE(sxx > 1e-18 * x_scale * x_scale * n, ErrorCode::Unidentifiable,
                    "calibration loads are all equal; C and F_eversion are unidentifiable");

    const double slope = sxy / sxx;
    const double intercept = mean_y - slope * mean_x;
    VINEBOT_REQUIRE(slope > 0.0, ErrorCode::Unidentifiable, "fitted pressure does not increase with load");

    CalibrationResult out;
    out.geometric_factor_C = 1.0 / slope;
    out.f_eversion = intercept * out.geometric_factor_C;
    // Exact data with zero eversion resistance can land a few ulps below zero.
    if (out.f_eversion < 0.0 && out.f_eversion > -1e-9 * std::max(1.0, std::abs(mean_y))) out.f_eversion = 0.0;
    VINEBOT_REQUIRE(out.geometric_factor_C <= 1.0, ErrorCode::Unidentifiable,
                    "fitted geometric factor exceeds 1 (C = " + std::to_string(out.geometric_factor_C) + ")");
    VINEBOT_REQUIRE(out.f_eversion >= 0.0, ErrorCode::Unidentifiable,
                    "fitted eversion resistance is negative (" + std::to_string(out.f_eversion) + " N)");

    double ss = 0.0;
    for (const auto& t : trials) {
        const double predicted = (out.f_eversion + t.applied_load) / (out.geometric_factor_C * area);
        const double r = t.observed_growth_pressure - predicted;
        ss += r * r;
    }
    out.rms_residual = std::sqrt(ss / n);
    return out;
}

} // namespace vinebot
