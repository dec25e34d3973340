#pragma once

// Enclosed tip mounts: a clamp on the tail that carries the payload to the tip.
//
// A constant-force mount grips the tail with a fixed maximum friction. The
// passively adapting mount is a two-arm scissor clamp closed by a spring;
// when the everting tip pushes on the arms (F_va, F_vb) the moment about each
// arm pivot drops and the clamp friction drops with it.

#include "vinebot/constants.hpp"
#include "vinebot/core_model.hpp"
#include "vinebot/error.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace vinebot {

class ConstantForceMount {
public:
    ConstantForceMount(double f_coupling_max, double mass = 0.0, double f_mount_ext = 0.0)
        : f_coupling_max_(f_coupling_max), mass_(mass), f_mount_ext_(f_mount_ext) {
        VINEBOT_REQUIRE(std::isfinite(f_coupling_max) && f_coupling_max > 0.0, ErrorCode::InvalidArgument,
                        "ConstantForceMount.f_coupling_max must be > 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(mass), ErrorCode::InvalidArgument, "ConstantForceMount.mass must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(f_mount_ext), ErrorCode::InvalidArgument,
                        "ConstantForceMount.f_mount_ext must be >= 0");
    }

    [[nodiscard]] double f_coupling_max() const { return f_coupling_max_; }
    [[nodiscard]] double mass() const { return mass_; }
    [[nodiscard]] double f_mount_ext() const { return f_mount_ext_; }

private:
    double f_coupling_max_;
    double mass_;
    double f_mount_ext_;
};

/// Clamp geometry of the adaptive mount. Lever lengths are the perpendicular
/// moment arms about the arm pivot of the spring force (ns, nm) and of the tip
/// contact forces (na, nb). `arm_d` and `arm_w` are the moment arms of the
/// clamp normal and friction resultants.
struct AdaptiveGeometry {
    double mu_s = 1.0;
    double arm_d = 0.010;    // m
    double arm_w = 0.003;    // m
    double lever_ns = 0.020; // m
    double lever_na = 0.040; // m
    double lever_nm = 0.020; // m
    double lever_nb = 0.040; // m
    double contact_angle = kPi / 4.0; // rad, tip contact force vs growth axis

    void validate() const {
        VINEBOT_REQUIRE(std::isfinite(mu_s) && mu_s > 0.0, ErrorCode::InvalidArgument, "AdaptiveMount.mu_s must be > 0");
        VINEBOT_REQUIRE(std::isfinite(arm_w) && arm_w >= 0.0, ErrorCode::InvalidArgument,
                        "AdaptiveMount.arm_w must be >= 0");
        VINEBOT_REQUIRE(std::isfinite(arm_d) && arm_d > mu_s * arm_w, ErrorCode::InvalidArgument,
                        "AdaptiveMount.arm_d must exceed mu_s * arm_w");
        for (double lever : {lever_ns, lever_na, lever_nm, lever_nb}) {
            VINEBOT_REQUIRE(std::isfinite(lever) && lever > 0.0, ErrorCode::InvalidArgument,
                            "AdaptiveMount lever lengths must be > 0");
        }
        VINEBOT_REQUIRE(std::isfinite(contact_angle) && contact_angle > 0.0 && contact_angle < kPi / 2.0,
                        ErrorCode::InvalidArgument, "AdaptiveMount.contact_angle must be in (0, pi/2)");
    }

    /// Effective arm of the friction resultant on arm A (d/mu - w) and arm B (d/mu + w).
    [[nodiscard]] double effective_arm_a() const { return arm_d / mu_s - arm_w; }
    [[nodiscard]] double effective_arm_b() const { return arm_d / mu_s + arm_w; }
};

class AdaptiveMount {
public:
    AdaptiveMount(double spring_force_fs, AdaptiveGeometry geometry = {}, double mass = 0.0, double f_mount_ext = 0.0)
        : spring_force_(spring_force_fs), geometry_(geometry), mass_(mass), f_mount_ext_(f_mount_ext) {
        VINEBOT_REQUIRE(std::isfinite(spring_force_fs) && spring_force_fs > 0.0, ErrorCode::InvalidArgument,
                        "AdaptiveMount.spring_force_fs must be > 0");
        geometry_.validate();
        VINEBOT_REQUIRE(detail::finite_nonneg(mass), ErrorCode::InvalidArgument, "AdaptiveMount.mass must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(f_mount_ext), ErrorCode::InvalidArgument,
                        "AdaptiveMount.f_mount_ext must be >= 0");
    }

    /// Picks the spring force so that the clamp friction with no tip contact equals `target`.
    static AdaptiveMount tuned_to(double target, AdaptiveGeometry geometry = {}, double mass = 0.0,
                                  double f_mount_ext = 0.0) {
        VINEBOT_REQUIRE(std::isfinite(target) && target > 0.0, ErrorCode::InvalidArgument,
                        "tuned coupling target must be > 0");
        geometry.validate();
        const double per_newton =
            geometry.lever_ns / geometry.effective_arm_a() + geometry.lever_nm / geometry.effective_arm_b();
        return AdaptiveMount(target / per_newton, geometry, mass, f_mount_ext);
    }

    [[nodiscard]] double spring_force() const { return spring_force_; }
    [[nodiscard]] const AdaptiveGeometry& geometry() const { return geometry_; }
    [[nodiscard]] double mass() const { return mass_; }
    [[nodiscard]] double f_mount_ext() const { return f_mount_ext_; }

private:
    double spring_force_;
    AdaptiveGeometry geometry_;
    double mass_;
    double f_mount_ext_;
};

using Mount = std::variant<ConstantForceMount, AdaptiveMount>;

inline const char* mount_kind(const Mount& mount) {
    return std::holds_alternative<ConstantForceMount>(mount) ? "constant" : "adaptive";
}

inline double mount_mass(const Mount& mount) {
    return std::visit([](const auto& m) { return m.mass(); }, mount);
}

inline double mount_friction_ext(const Mount& mount) {
    return std::visit([](const auto& m) { return m.f_mount_ext(); }, mount);
}

/// Loss of propulsive force spent pushing the mount off the tip, as a function
/// of the total axial contact force. Affine and non-decreasing.
struct InteractionModel {
    double gain = 1.0;
    double offset = 0.0; // N

    void validate() const {
        VINEBOT_REQUIRE(detail::finite_nonneg(gain), ErrorCode::InvalidArgument, "InteractionModel.gain must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(offset), ErrorCode::InvalidArgument,
                        "InteractionModel.offset must be >= 0");
    }

    double operator()(double total_axial_contact) const { return offset + gain * total_axial_contact; }
};

template <typename L>
concept LossModel = requires(const L& loss, double f) {
    { loss(f) } -> std::convertible_to<double>;
};

inline double interaction_loss(const InteractionModel& model, double total_axial_contact) {
    model.validate();
    VINEBOT_REQUIRE(detail::finite_nonneg(total_axial_contact), ErrorCode::InvalidArgument,
                    "total axial contact force must be >= 0");
    return model(total_axial_contact);
}

/// Coupling friction at which a mount just slips without touching the tip.
inline double ideal_coupling_friction(double f_load, double w_axial, double f_mount_ext) {
    VINEBOT_REQUIRE(detail::finite_nonneg(f_load) && detail::finite_nonneg(w_axial) && detail::finite_nonneg(f_mount_ext),
                    ErrorCode::InvalidArgument, "ideal_coupling_friction inputs must be >= 0");
    return std::max(0.0, f_load + w_axial - f_mount_ext);
}

struct ArmFrictions {
    double arm_a = 0.0; // N
    double arm_b = 0.0; // N
    [[nodiscard]] double total() const { return arm_a + arm_b; }
};

/// Per-arm clamp friction from the moment balance about each arm pivot,
/// clamped at zero once the contact moment exceeds the spring moment.
inline ArmFrictions adaptive_arm_frictions(const AdaptiveMount& mount, double f_va, double f_vb) {
    VINEBOT_REQUIRE(detail::finite_nonneg(f_va) && detail::finite_nonneg(f_vb), ErrorCode::InvalidArgument,
                    "tip contact forces must be >= 0");
    const auto& g = mount.geometry();
    const double fs = mount.spring_force();
    ArmFrictions out;
    out.arm_a = std::max(0.0, (g.lever_ns * fs - g.lever_na * f_va) / g.effective_arm_a());
    out.arm_b = std::max(0.0, (g.lever_nm * fs - g.lever_nb * f_vb) / g.effective_arm_b());
    return out;
}

inline double adaptive_coupling_friction(const AdaptiveMount& mount, double f_va, double f_vb) {
    return adaptive_arm_frictions(mount, f_va, f_vb).total();
}

inline double zero_contact_coupling(const Mount& mount) {
    if (const auto* c = std::get_if<ConstantForceMount>(&mount)) return c->f_coupling_max();
    return adaptive_coupling_friction(std::get<AdaptiveMount>(mount), 0.0, 0.0);
}

namespace detail {

inline bool can_pull_forward(double coupling, double f_load, double w_axial, double f_mount) {
    return at_least(coupling, f_load + w_axial + f_mount);
}

inline double constant_required_fva(double coupling, double f_load, double w_axial, double f_mount) {
    return std::max(0.0, coupling - f_load - w_axial + f_mount);
}

} // namespace detail

inline bool can_pull_forward(const Mount& mount, double f_load, double w_axial) {
    VINEBOT_REQUIRE(detail::finite_nonneg(f_load) && detail::finite_nonneg(w_axial), ErrorCode::InvalidArgument,
                    "can_pull_forward inputs must be >= 0");
    return detail::can_pull_forward(zero_contact_coupling(mount), f_load, w_axial, mount_friction_ext(mount));
}

/// Smallest axial tip contact force that makes a constant-force mount slip.
inline double constant_required_fva(const ConstantForceMount& mount, double f_load, double w_axial) {
    VINEBOT_REQUIRE(detail::finite_nonneg(f_load) && detail::finite_nonneg(w_axial), ErrorCode::InvalidArgument,
                    "constant_required_fva inputs must be >= 0");
    return detail::constant_required_fva(mount.f_coupling_max(), f_load, w_axial, mount.f_mount_ext());
}

struct MountEquilibrium {
    double f_va = 0.0;        // N, contact force on arm A
    double f_vb = 0.0;        // N, contact force on arm B
    double f_coupling = 0.0;  // N, clamp friction at (f_va, f_vb)
    ArmFrictions arms;
    double total_axial = 0.0; // N, F_va,a + F_vb,a
    bool converged = false;
    double residual = 0.0;    // N, |slip-condition residual|
    int iterations = 0;
};

struct EquilibriumOptions {
    double tolerance = 1e-9; // N
    int max_iterations = 200;
    double upper_bound = -1.0; // N; negative selects the force at which the clamp fully opens
};

namespace detail {

inline MountEquilibrium adaptive_equilibrium(const AdaptiveMount& mount, double f_load, double w_axial, double f_mount,
                                             const EquilibriumOptions& opts) {
    const auto& g = mount.geometry();
    const double cos_c = std::cos(g.contact_angle);
    const double external = f_load + w_axial - f_mount;

    // Positive while the clamp still holds; non-increasing in the symmetric contact force.
    const auto slip_residual = [&](double f) {
        return adaptive_coupling_friction(mount, f, f) - (2.0 * f * cos_c + external);
    };

    const auto finish = [&](double f, bool converged, int iterations) {
        MountEquilibrium eq;
        eq.f_va = f;
        eq.f_vb = f;
        eq.arms = adaptive_arm_frictions(mount, f, f);
        eq.f_coupling = eq.arms.total();
        eq.total_axial = 2.0 * f * cos_c;
        eq.converged = converged;
        eq.residual = f > 0.0 ? std::abs(slip_residual(f)) : std::max(0.0, slip_residual(0.0));
        eq.iterations = iterations;
        return eq;
    };

    if (slip_residual(0.0) <= 0.0) return finish(0.0, true, 0);

    double hi = opts.upper_bound;
    if (hi < 0.0) {
        const double f_open = std::max(g.lever_ns * mount.spring_force() / g.lever_na,
                                       g.lever_nm * mount.spring_force() / g.lever_nb);
        hi = std::max(f_open, -external / (2.0 * cos_c));
        // The second bound is itself the root when the clamp is already open; step past it.
        for (int grow = 0; grow < 64 && slip_residual(hi) > 0.0; ++grow) hi = 2.0 * hi + 1e-12;
    }
    VINEBOT_REQUIRE(std::isfinite(hi) && slip_residual(hi) <= 0.0, ErrorCode::Unsatisfiable,
                    "adaptive mount cannot be pushed off the tip below F_upper = " + std::to_string(hi) + " N");

    double lo = 0.0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (slip_residual(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (std::abs(slip_residual(hi)) < opts.tolerance) return finish(hi, true, it);
    }
    return finish(hi, false, opts.max_iterations);
}

} // namespace detail

/// Symmetric contact (F_va = F_vb) at which the adaptive mount is just pushed
/// off the tip, found by bisection on the contact force.
inline MountEquilibrium adaptive_equilibrium(const AdaptiveMount& mount, double f_load, double w_axial,
                                             const EquilibriumOptions& opts = {}) {
    VINEBOT_REQUIRE(detail::finite_nonneg(f_load) && detail::finite_nonneg(w_axial), ErrorCode::InvalidArgument,
                    "adaptive_equilibrium inputs must be >= 0");
    return detail::adaptive_equilibrium(mount, f_load, w_axial, mount.f_mount_ext(), opts);
}

/// Total axial tip contact force needed for growth with the mount installed.
/// `f_mount` is the total exterior friction on the mount.
inline double required_axial_contact(const Mount& mount, double f_load, double w_axial, double f_mount) {
    if (const auto* c = std::get_if<ConstantForceMount>(&mount)) {
        return detail::constant_required_fva(c->f_coupling_max(), f_load, w_axial, f_mount);
    }
    const auto eq = detail::adaptive_equilibrium(std::get<AdaptiveMount>(mount), f_load, w_axial, f_mount, {});
    VINEBOT_REQUIRE(eq.converged, ErrorCode::Unsatisfiable,
                    "adaptive equilibrium did not converge (residual " + std::to_string(eq.residual) + " N)");
    return eq.total_axial;
}

/// Pressure at which growth proceeds with the mount at the tip:
/// C*P*A = F_ev + T_tail + F_load + W + f_mount + loss(contact).
/// The mount's own exterior friction is added to `load.f_mount_ext`.
template <LossModel Loss>
double growth_pressure_with_mount(const VineBodySpec& body, const Mount& mount, const Loss& loss,
                                  const LoadState& load) {
    load.validate();
    const double f_mount = mount_friction_ext(mount) + load.f_mount_ext;
    VINEBOT_REQUIRE(detail::can_pull_forward(zero_contact_coupling(mount), load.f_load, load.w_axial, f_mount),
                    ErrorCode::MountLeftBehind,
                    std::string(mount_kind(mount)) + " mount left behind: coupling " +
                        std::to_string(zero_contact_coupling(mount)) + " N < load + W + f_mount = " +
                        std::to_string(load.f_load + load.w_axial + f_mount) + " N");
    const double contact = required_axial_contact(mount, load.f_load, load.w_axial, f_mount);
    const double resistive = body.f_eversion() + load.t_tail + load.f_load + load.w_axial + f_mount + loss(contact);
    return resistive / (body.geometric_factor() * cross_section_area(body));
}

inline double growth_pressure_with_mount(const VineBodySpec& body, const Mount& mount, const InteractionModel& model,
                                         const LoadState& load) {
    model.validate();
    return growth_pressure_with_mount<InteractionModel>(body, mount, model, load);
}

struct SweepRow {
    double load = 0.0;     // N
    double pressure = 0.0; // Pa
    std::string mount_kind; // "none", "constant" or "adaptive"
};

/// Pressure-vs-load curves for vertical growth: no mount, then each mount in
/// order. A mount's weight acts fully along the axis. Loads the mount cannot
/// pull forward are left out of that mount's curve.
inline std::vector<SweepRow> sweep_mounts(const VineBodySpec& body, std::span<const Mount> mounts,
                                          const InteractionModel& model, std::span<const double> loads,
                                          double t_tail) {
    std::vector<SweepRow> rows;
    for (double load : loads) {
        LoadState state{.t_tail = t_tail, .f_load = load};
        rows.push_back({load, min_growth_pressure(body, state), "none"});
        for (const auto& mount : mounts) {
            state.w_axial = weight_of(mount_mass(mount));
            if (!can_pull_forward(mount, load, state.w_axial)) continue;
            rows.push_back({load, growth_pressure_with_mount(body, mount, model, state), mount_kind(mount)});
        }
    }
    return rows;
}

} // namespace vinebot
