#include "vinebot/tip_mount.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace vinebot;

namespace {

AdaptiveGeometry random_geometry(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lever(0.005, 0.08), mu(0.3, 1.5), w(0.0, 0.006), angle(0.1, 1.4);
    AdaptiveGeometry g;
    g.mu_s = mu(rng);
    g.arm_w = w(rng);
    g.arm_d = g.mu_s * g.arm_w + std::uniform_real_distribution<double>(0.002, 0.03)(rng);
    g.lever_ns = lever(rng);
    g.lever_na = lever(rng);
    g.lever_nm = lever(rng);
    g.lever_nb = lever(rng);
    g.contact_angle = angle(rng);
    return g;
}

// Slip residual re-derived from the arm moment balances, independent of the solver.
double back_substituted_residual(const AdaptiveMount& m, const MountEquilibrium& eq, double f_load, double w_axial) {
    const auto& g = m.geometry();
    const double fa = std::max(0.0, (g.lever_ns * m.spring_force() - g.lever_na * eq.f_va) / (g.arm_d / g.mu_s - g.arm_w));
    const double fb = std::max(0.0, (g.lever_nm * m.spring_force() - g.lever_nb * eq.f_vb) / (g.arm_d / g.mu_s + g.arm_w));
    const double axial = (eq.f_va + eq.f_vb) * std::cos(g.contact_angle);
    const double r = fa + fb - (f_load + w_axial - m.f_mount_ext() + axial);
    return eq.f_va > 0.0 ? std::abs(r) : std::max(0.0, r);
}

} // namespace

TEST(IdealCoupling, Examples) {
    EXPECT_DOUBLE_EQ(ideal_coupling_friction(10, 1, 0), 11.0);
    EXPECT_DOUBLE_EQ(ideal_coupling_friction(0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(ideal_coupling_friction(12, 0.5, 2), 10.5);
    EXPECT_DOUBLE_EQ(ideal_coupling_friction(1, 0, 5), 0.0);
    EXPECT_THROW(ideal_coupling_friction(-1, 0, 0), Error);
}

TEST(CanPullForward, Examples) {
    const Mount m = ConstantForceMount(12.0);
    EXPECT_TRUE(can_pull_forward(m, 11.0, 0.5));
    EXPECT_FALSE(can_pull_forward(m, 12.0, 0.5));
    EXPECT_TRUE(can_pull_forward(m, 0.0, 0.0));
    EXPECT_TRUE(can_pull_forward(Mount(AdaptiveMount::tuned_to(12.0)), 11.5, 0.5));
    EXPECT_FALSE(can_pull_forward(Mount(AdaptiveMount::tuned_to(12.0)), 11.6, 0.5));
}

TEST(ConstantRequiredContact, Examples) {
    EXPECT_DOUBLE_EQ(constant_required_fva(ConstantForceMount(12.0), 12.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(constant_required_fva(ConstantForceMount(12.0), 4.0, 0.5), 7.5);
    EXPECT_DOUBLE_EQ(constant_required_fva(ConstantForceMount(24.0), 4.0, 0.5), 19.5);
}

TEST(ConstantRequiredContact, NonIncreasingAndZeroPastSlip) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    for (int i = 0; i < 500; ++i) {
        const ConstantForceMount m(0.1 + u(rng), 0.0, u(rng) / 10.0);
        const double w = u(rng) / 10.0, a = u(rng), b = u(rng);
        const double lo = std::min(a, b), hi = std::max(a, b);
        EXPECT_GE(constant_required_fva(m, lo, w), constant_required_fva(m, hi, w));
        const double past = m.f_coupling_max() + m.f_mount_ext() + 0.01;
        EXPECT_DOUBLE_EQ(constant_required_fva(m, past, 0.0), 0.0);
    }
}

TEST(MountValidation, RejectsInvalid) {
    EXPECT_THROW(ConstantForceMount(0.0), Error);
    EXPECT_THROW(ConstantForceMount(1.0, -1.0), Error);
    AdaptiveGeometry g;
    g.arm_d = 0.002; // d/mu - w < 0
    EXPECT_THROW(AdaptiveMount(1.0, g), Error);
    g = {};
    g.contact_angle = kPi / 2.0;
    EXPECT_THROW(AdaptiveMount(1.0, g), Error);
    EXPECT_THROW(AdaptiveMount(0.0), Error);
    EXPECT_THROW(AdaptiveMount::tuned_to(-3.0), Error);
}

TEST(AdaptiveCoupling, ZeroContactFormula) {
    AdaptiveGeometry g;
    g.lever_ns = g.lever_nm = 0.05;
    g.arm_d = 0.01;
    g.mu_s = 1.0;
    g.arm_w = 0.004;
    const AdaptiveMount m(30.0, g);
    EXPECT_NEAR(adaptive_coupling_friction(m, 0, 0), 1.5 / 0.006 + 1.5 / 0.014, 1e-9);
    EXPECT_NEAR(adaptive_coupling_friction(m, 0, 0), 357.142857142857, 1e-6);
}

TEST(AdaptiveCoupling, TunedDefaultsAndOpening) {
    const auto m = AdaptiveMount::tuned_to(12.0);
    EXPECT_NEAR(m.spring_force(), 2.73, 1e-12);
    EXPECT_NEAR(adaptive_coupling_friction(m, 0, 0), 12.0, 1e-9);
    EXPECT_DOUBLE_EQ(adaptive_coupling_friction(m, 1.365, 1.365), 0.0);
    EXPECT_DOUBLE_EQ(adaptive_coupling_friction(m, 100.0, 100.0), 0.0);
    EXPECT_LT(adaptive_coupling_friction(m, 0.4, 0.0), adaptive_coupling_friction(m, 0.2, 0.0));
}

TEST(AdaptiveCoupling, MonotoneAndTunedAtZeroProperty) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> target(0.5, 40.0), f(0.0, 50.0);
    for (int i = 0; i < 500; ++i) {
        const double t = target(rng);
        const auto m = AdaptiveMount::tuned_to(t, random_geometry(rng));
        EXPECT_NEAR(adaptive_coupling_friction(m, 0, 0), t, 1e-9);
        const double a = f(rng), b = f(rng), c = f(rng);
        EXPECT_GE(adaptive_coupling_friction(m, std::min(a, b), c), adaptive_coupling_friction(m, std::max(a, b), c));
        EXPECT_GE(adaptive_coupling_friction(m, c, std::min(a, b)), adaptive_coupling_friction(m, c, std::max(a, b)));
    }
}

TEST(AdaptiveEquilibrium, SlipsWithoutContactPastTunedValue) {
    const auto m = AdaptiveMount::tuned_to(12.0);
    const auto eq = adaptive_equilibrium(m, 12.0, 0.5);
    EXPECT_TRUE(eq.converged);
    EXPECT_DOUBLE_EQ(eq.f_va, 0.0);
    EXPECT_DOUBLE_EQ(eq.total_axial, 0.0);
}

TEST(AdaptiveEquilibrium, BelowConstantRequirement) {
    const auto m = AdaptiveMount::tuned_to(12.0);
    const auto eq = adaptive_equilibrium(m, 4.0, 0.5);
    ASSERT_TRUE(eq.converged);
    EXPECT_NEAR(eq.f_va, 0.7349034405585045, 1e-8);
    EXPECT_NEAR(eq.total_axial, 1.0393104126724868, 1e-8);
    EXPECT_LT(eq.total_axial, constant_required_fva(ConstantForceMount(12.0), 4.0, 0.5));
    EXPECT_LT(eq.residual, 1e-9);
    EXPECT_LT(back_substituted_residual(m, eq, 4.0, 0.5), 1e-9);
    EXPECT_DOUBLE_EQ(eq.f_va, eq.f_vb);
}

TEST(AdaptiveEquilibrium, ReportsNonConvergence) {
    const auto m = AdaptiveMount::tuned_to(12.0);
    const auto eq = adaptive_equilibrium(m, 4.0, 0.5, {.tolerance = 1e-9, .max_iterations = 3});
    EXPECT_FALSE(eq.converged);
    EXPECT_EQ(eq.iterations, 3);
    EXPECT_GT(eq.residual, 1e-9);
}

TEST(AdaptiveEquilibrium, UnsatisfiableUpperBound) {
    const auto m = AdaptiveMount::tuned_to(12.0);
    try {
        adaptive_equilibrium(m, 4.0, 0.5, {.upper_bound = 0.1});
        FAIL() << "expected an unsatisfiable bound";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Unsatisfiable);
    }
}

TEST(AdaptiveEquilibrium, BackSubstitutionProperty) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> target(0.5, 40.0), frac(0.0, 1.2), mass(0.0, 0.2), fm(0.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const auto m = AdaptiveMount::tuned_to(target(rng), random_geometry(rng), mass(rng), fm(rng));
        const double w = weight_of(m.mass());
        const double load = frac(rng) * adaptive_coupling_friction(m, 0, 0);
        const auto eq = adaptive_equilibrium(m, load, w);
        ASSERT_TRUE(eq.converged);
        EXPECT_LT(eq.residual, 1e-9);
        EXPECT_LT(back_substituted_residual(m, eq, load, w), 1e-9);
        EXPECT_GE(eq.f_coupling, 0.0);
    }
}

TEST(InteractionLoss, Examples) {
    const InteractionModel m{1.2, 0.3};
    EXPECT_DOUBLE_EQ(interaction_loss(m, 0.0), 0.3);
    EXPECT_NEAR(interaction_loss(m, 5.0), 6.3, 1e-12);
    EXPECT_DOUBLE_EQ(interaction_loss({0.0, 0.0}, 17.0), 0.0);
    EXPECT_THROW(interaction_loss({-1.0, 0.0}, 1.0), Error);
}

TEST(GrowthWithMount, LosslessAtSlipBoundary) {
    const auto body = VineBodySpec::calibrated_lab();
    const double a = cross_section_area(body);
    const Mount m = ConstantForceMount(12.0);
    const LoadState load{.t_tail = 0.1, .f_load = 11.5, .w_axial = 0.5};
    const double expected = min_growth_pressure(body, load) + 0.5 / (body.geometric_factor() * a);
    EXPECT_NEAR(growth_pressure_with_mount(body, m, InteractionModel{0.0, 0.0}, load), expected, 1e-9);
}

TEST(GrowthWithMount, ConstantSlopeFollowsGain) {
    const auto body = VineBodySpec::calibrated_lab();
    const double ca = body.geometric_factor() * cross_section_area(body);
    const Mount m = ConstantForceMount(12.0);
    for (double g : {0.0, 0.4, 1.0, 1.7}) {
        const InteractionModel model{g, 0.0};
        const double p4 = growth_pressure_with_mount(body, m, model, {.f_load = 4.0});
        const double p10 = growth_pressure_with_mount(body, m, model, {.f_load = 10.0});
        EXPECT_NEAR(p10 - p4, (1.0 - g) * 6.0 / ca, 1e-8);
    }
}

TEST(GrowthWithMount, AdaptiveBelowConstantBelowTuned) {
    const auto body = VineBodySpec::calibrated_lab();
    const Mount c = ConstantForceMount(12.0, 0.05);
    const Mount a = AdaptiveMount::tuned_to(12.0, {}, 0.05);
    const double w = weight_of(0.05);
    for (double load = 0.0; load < 12.0 - w - 1e-9; load += 0.5) {
        const LoadState s{.t_tail = 0.0883, .f_load = load, .w_axial = w};
        const double pa = growth_pressure_with_mount(body, a, InteractionModel{}, s);
        const double pc = growth_pressure_with_mount(body, c, InteractionModel{}, s);
        EXPECT_LT(pa, pc) << "load " << load;
        EXPECT_GE(pa, min_growth_pressure(body, s));
    }
    const LoadState edge{.f_load = 12.0 - w, .w_axial = w};
    EXPECT_NEAR(growth_pressure_with_mount(body, a, InteractionModel{}, edge),
                growth_pressure_with_mount(body, c, InteractionModel{}, edge), 1e-6);
}

TEST(GrowthWithMount, OrderingPropertyOverRandomMounts) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> target(1.0, 30.0), frac(0.0, 0.999), gain(0.0, 2.0);
    const auto body = VineBodySpec::calibrated_lab();
    for (int i = 0; i < 300; ++i) {
        const double t = target(rng);
        const Mount a = AdaptiveMount::tuned_to(t, random_geometry(rng));
        const Mount c = ConstantForceMount(t);
        const InteractionModel model{gain(rng), 0.1};
        const LoadState s{.f_load = frac(rng) * t};
        EXPECT_LE(growth_pressure_with_mount(body, a, model, s), growth_pressure_with_mount(body, c, model, s) + 1e-9);
    }
}

TEST(GrowthWithMount, MountLeftBehind) {
    const auto body = VineBodySpec::calibrated_lab();
    try {
        growth_pressure_with_mount(body, Mount(ConstantForceMount(12.0)), InteractionModel{},
                                   {.f_load = 12.0, .w_axial = 0.5});
        FAIL() << "expected mount left behind";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MountLeftBehind);
    }
}

TEST(GrowthWithMount, CustomLossModel) {
    const auto body = VineBodySpec::calibrated_lab();
    const auto quadratic = [](double f) { return 0.1 * f * f; };
    const Mount c = ConstantForceMount(12.0);
    const double p = growth_pressure_with_mount(body, c, quadratic, {.f_load = 2.0});
    const double expected = (body.f_eversion() + 2.0 + 0.1 * 100.0) / (body.geometric_factor() * cross_section_area(body));
    EXPECT_NEAR(p, expected, 1e-9);
}

TEST(SweepMounts, SkipsStrandedRowsAndOrdersCurves) {
    const auto body = VineBodySpec::calibrated_lab();
    const std::vector<Mount> mounts{ConstantForceMount(12.0, 0.05), AdaptiveMount::tuned_to(12.0, {}, 0.05)};
    const std::vector<double> loads{2, 4, 6, 8, 10, 12};
    const auto rows = sweep_mounts(body, mounts, InteractionModel{}, loads, 0.0883);
    ASSERT_EQ(rows.size(), 5u * 3u + 1u);
    EXPECT_EQ(rows.back().mount_kind, "none");
    for (std::size_t i = 0; i + 2 < rows.size(); i += 3) {
        EXPECT_EQ(rows[i].mount_kind, "none");
        EXPECT_EQ(rows[i + 1].mount_kind, "constant");
        EXPECT_EQ(rows[i + 2].mount_kind, "adaptive");
        EXPECT_LE(rows[i].pressure, rows[i + 2].pressure);
        EXPECT_LT(rows[i + 2].pressure, rows[i + 1].pressure);
    }
}
