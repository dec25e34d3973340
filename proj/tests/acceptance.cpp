// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include "vinebot/io.hpp"
#include "vinebot/vinebot.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace vinebot;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

std::vector<CalibrationTrial> trials_for(double c, double f_ev, double area, int reps, double noise,
                                         std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<CalibrationTrial> out;
    for (double load : {0.0, 4.0, 8.0, 12.0}) {
        for (int r = 0; r < reps; ++r) out.push_back({load, (f_ev + load) / (c * area) * (1.0 + noise * n(rng))});
    }
    return out;
}

Outcome calibration_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    const double c = kCalibratedGeometricFactor, fe = kCalibratedEversionForce;
    const double area = cross_section_area(VineBodySpec(kLabTubeDiameter));
    std::mt19937_64 rng(1);
    const auto exact = fit_calibration(trials_for(c, fe, area, 1, 0.0, rng), area);
    const double err_c = std::abs(exact.geometric_factor_C - c) / c;
    const double err_f = std::abs(exact.f_eversion - fe) / fe;

    int ok = 0;
    const int replicates = 1000;
    for (int i = 0; i < replicates; ++i) {
        std::mt19937_64 r(1000 + static_cast<std::uint64_t>(i));
        const auto fit = fit_calibration(trials_for(c, fe, area, 10, 0.01, r), area);
        if (std::abs(fit.geometric_factor_C - c) <= 0.02 * c && std::abs(fit.f_eversion - fe) <= 0.1) ++ok;
    }
    const double rate = static_cast<double>(ok) / replicates;
    const double secs = seconds_since(t0);
    return {err_c <= 1e-6 && err_f <= 1e-6 && rate >= 0.95 && secs < 1.0,
            fmt("exact rel err C %.2e, F %.2e; noisy success %.1f%%; %.3f s", err_c, err_f, 100.0 * rate, secs)};
}

Outcome zero_load_pressure() {
    const double p = min_growth_pressure(VineBodySpec::calibrated_lab(), {.t_tail = weight_of(kLabTailMass)});
    return {std::abs(p - 852.5) <= 1.0, fmt("%.3f Pa", p)};
}

std::vector<double> grid_below(double limit, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(limit * i / n);
    return out;
}

Outcome mount_ordering() {
    const auto body = VineBodySpec::calibrated_lab();
    const InteractionModel model{};
    const double half_a = 0.5 * cross_section_area(body);
    const double mass = 0.05;
    const double w = weight_of(mass);
    const double t_tail = weight_of(kLabTailMass);
    bool ok = true;
    double worst_gap = -1e300;
    double worst_spread = 0.0;
    double worst_allow = 0.0;
    for (double tuned : {kTunedCouplingLow, kTunedCouplingHigh}) {
        const Mount c = ConstantForceMount(tuned, mass);
        const Mount a = AdaptiveMount::tuned_to(tuned, {}, mass);
        // Loads the mounts can still pull forward; above tuned - W they are left behind.
        for (double load : grid_below(tuned - w, 200)) {
            const LoadState s{.t_tail = t_tail, .f_load = load, .w_axial = w};
            const double pn = min_growth_pressure(body, s);
            const double pc = growth_pressure_with_mount(body, c, model, s);
            const double pa = growth_pressure_with_mount(body, a, model, s);
            ok = ok && pa < pc && pa >= pn && pc >= pn;
            worst_gap = std::max(worst_gap, pa - pc);
        }
        // Convergence at the slip boundary with weight, and at the tuned load itself for weightless mounts.
        const auto spread = [&](const Mount& cm, const Mount& am, const LoadState& s) {
            const double pn = min_growth_pressure(body, s);
            const double pc = growth_pressure_with_mount(body, cm, model, s);
            const double pa = growth_pressure_with_mount(body, am, model, s);
            return std::max({pn, pc, pa}) - std::min({pn, pc, pa});
        };
        const double s1 = spread(c, a, {.t_tail = t_tail, .f_load = tuned - w, .w_axial = w});
        const double s2 = spread(ConstantForceMount(tuned), AdaptiveMount::tuned_to(tuned), {.t_tail = t_tail, .f_load = tuned});
        const double allow1 = w / half_a + 1.0;
        const double allow2 = 1.0;
        ok = ok && s1 <= allow1 && s2 <= allow2;
        worst_spread = std::max({worst_spread, s1, s2});
        worst_allow = std::max(worst_allow, allow1);
    }
    return {ok, fmt("max(adaptive - constant) %.1f Pa; max spread at tuned load %.2f Pa (allowed %.2f Pa)", worst_gap,
                    worst_spread, worst_allow)};
}

Outcome constant_flatness() {
    const auto body = VineBodySpec::calibrated_lab();
    const double mass = 0.05;
    const double w = weight_of(mass);
    double worst = 0.0;
    for (double tuned : {kTunedCouplingLow, kTunedCouplingHigh}) {
        const Mount c = ConstantForceMount(tuned, mass);
        double lo = 1e300, hi = -1e300;
        auto loads = grid_below(tuned - w, 200);
        loads.push_back(tuned - w);
        for (double load : loads) {
            const double p = growth_pressure_with_mount(body, c, InteractionModel{1.0, 0.0},
                                                        {.t_tail = weight_of(kLabTailMass), .f_load = load, .w_axial = w});
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        worst = std::max(worst, hi - lo);
    }
    return {worst <= 1.0, fmt("max - min = %.3e Pa", worst)};
}

Outcome equilibrium_residuals() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lever(0.005, 0.08), mu(0.3, 1.5), wv(0.0, 0.006), extra(0.002, 0.03),
        angle(0.1, 1.4), spring(0.5, 50.0), frac(0.0, 1.0), mass(0.0, 0.3), fm(0.0, 1.0);
    double worst = 0.0;
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        AdaptiveGeometry g;
        g.mu_s = mu(rng);
        g.arm_w = wv(rng);
        g.arm_d = g.mu_s * g.arm_w + extra(rng);
        g.lever_ns = lever(rng);
        g.lever_na = lever(rng);
        g.lever_nm = lever(rng);
        g.lever_nb = lever(rng);
        g.contact_angle = angle(rng);
        const AdaptiveMount m(spring(rng), g, mass(rng), fm(rng));
        const double w = weight_of(m.mass());
        const double load = frac(rng) * adaptive_coupling_friction(m, 0, 0);
        const auto eq = adaptive_equilibrium(m, load, w);
        // Arm moment balances and the slip condition, recomputed from scratch.
        const double fa = std::max(0.0, (g.lever_ns * m.spring_force() - g.lever_na * eq.f_va) / (g.arm_d / g.mu_s - g.arm_w));
        const double fb = std::max(0.0, (g.lever_nm * m.spring_force() - g.lever_nb * eq.f_vb) / (g.arm_d / g.mu_s + g.arm_w));
        const double arm_res = std::max(std::abs(fa - eq.arms.arm_a), std::abs(fb - eq.arms.arm_b));
        const double slip = fa + fb - (load + w - m.f_mount_ext() + (eq.f_va + eq.f_vb) * std::cos(g.contact_angle));
        const double slip_res = eq.f_va > 0.0 ? std::abs(slip) : std::max(0.0, slip);
        const double r = std::max(arm_res, slip_res);
        worst = std::max(worst, r);
        if (!eq.converged || r >= 1e-9) ++failures;
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 5.0, fmt("worst residual %.2e N, %.0f failures, %.3f s", worst, failures, secs)};
}

PathMetrics round_trip(const PipeSpec& pipe, const NoiseSpec& noise) {
    const auto logs = synth_logs(pipe, noise, 100.0);
    const auto rec = reconstruct_path(segment_path(logs.log, logs.markers), Vec3::Zero(), 0.01);
    return path_metrics(rec, reconstruct_path(pipe.segments(), Vec3::Zero(), 0.01));
}

Outcome noise_free_round_trip() {
    const auto m = round_trip(lab_pipe(), NoiseSpec{});
    return {m.max_orientation_dev < 1e-6 && m.length_dev < 1e-6,
            fmt("orientation %.2e rad, length %.2e m", m.max_orientation_dev, m.length_dev)};
}

Outcome noisy_round_trip() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pipe = lab_pipe();
    int ok = 0;
    double worst_deg = 0.0, worst_len = 0.0;
    const int replicates = 500;
    for (int i = 0; i < replicates; ++i) {
        const auto m = round_trip(pipe, NoiseSpec::documented_default(static_cast<std::uint64_t>(i)));
        const double deg = rad2deg(m.max_orientation_dev);
        worst_deg = std::max(worst_deg, deg);
        worst_len = std::max(worst_len, m.length_dev);
        if (deg < 2.6 && m.length_dev < 0.10) ++ok;
    }
    const double rate = static_cast<double>(ok) / replicates;
    const double secs = seconds_since(t0);
    return {rate >= 0.90 && secs < 30.0, fmt("within bounds %.1f%%; worst %.3f deg, %.4f m; %.2f s", 100.0 * rate,
                                             worst_deg, worst_len, secs)};
}

Outcome field_reconstruction() {
    const auto pipe = field_pipe();
    const auto& segs = pipe.segments();
    const auto line = reconstruct_path(segs, Vec3::Zero(), 0.01);
    double worst = 0.0;
    int junctions = 0;
    for (std::size_t i = 1; i < line.points.size(); ++i) {
        const auto a = static_cast<std::size_t>(line.segment_index[i - 1]);
        const auto b = static_cast<std::size_t>(line.segment_index[i]);
        if (a == b) continue;
        // The spool-to-pipe transition has no elbow; it is a kink by construction.
        if (segs[a].kind == SegmentKind::Straight && segs[b].kind == SegmentKind::Straight) continue;
        worst = std::max(worst, angle_between(line.tangents[i - 1], line.start_tangents[b]));
        ++junctions;
    }
    const double len_err = std::abs(line.total_length() - 16.75);
    return {len_err <= 1e-6 && worst < 1e-9 && junctions == 2,
            fmt("length %.9f m; worst tangent jump %.2e rad over %.0f elbow junctions", line.total_length(), worst,
                junctions)};
}

Outcome lab_pressure() {
    const auto trace = simulate_growth(lab_pipe(), RobotConfig::lab_default(), 10000.0, 0.01);
    if (trace.samples.empty()) return {false, "no samples"};
    const double p = trace.samples.front().pressure;
    return {std::abs(p - 3400.0) <= 0.3 * 3400.0, fmt("initial pressure %.1f Pa", p)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome cli_determinism() {
    const fs::path root = fs::temp_directory_path() / "vinebot_acceptance_determinism";
    fs::remove_all(root);
    const auto run = [&](const std::string& name, const std::string& args) {
        fs::create_directories(root / name);
        const std::string cmd = std::string("\"") + VINEBOT_CLI_PATH + "\" --seed 7 --out \"" + (root / name).string() +
                                "\" " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    bool ok = run("sim1", "simulate --pipe field --synth-logs") && run("sim2", "simulate --pipe field --synth-logs") &&
              run("syn1", "synth-logs --pipe lab") && run("syn2", "synth-logs --pipe lab");
    int compared = 0;
    for (const auto& [a, b] : {std::pair{"sim1", "sim2"}, std::pair{"syn1", "syn2"}}) {
        for (const auto& entry : fs::directory_iterator(root / a)) {
            const auto other = root / b / entry.path().filename();
            ok = ok && fs::exists(other) && slurp(entry.path()) == slurp(other) && !slurp(other).empty();
            ++compared;
        }
    }
    fs::remove_all(root);
    return {ok && compared == 9, fmt("%.0f files compared byte for byte", compared)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"calibration recovery", calibration_recovery},
        {"zero-load growth pressure", zero_load_pressure},
        {"mount ordering and convergence", mount_ordering},
        {"constant-mount flatness", constant_flatness},
        {"adaptive equilibrium residuals", equilibrium_residuals},
        {"noise-free mapping round trip", noise_free_round_trip},
        {"noisy mapping round trip", noisy_round_trip},
        {"field geometry reconstruction", field_reconstruction},
        {"lab pressure consistency", lab_pressure},
        {"CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
