// vinebot: command-line front end for the growth, tip-mount, simulation and
// mapping models. Every subcommand writes into --out (default ".").

#include "vinebot/vinebot.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace vinebot;
using io::Json;

namespace {

constexpr double kDefaultMountMass = 0.05; // kg, mount body in sweeps

struct Globals {
    std::uint64_t seed = 7;
    std::string out = ".";
    bool show_defaults = false;
};

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Unidentifiable: return 3;
    case ErrorCode::Parse: return 4;
    case ErrorCode::Io: return 5;
    default: return 1;
    }
}

fs::path out_path(const Globals& g, const std::string& name) {
    std::error_code ec;
    fs::create_directories(g.out, ec);
    VINEBOT_REQUIRE(!ec, ErrorCode::Io, "cannot create output directory " + g.out + ": " + ec.message());
    return fs::path(g.out) / name;
}

Json defaults_json() {
    const auto noise = NoiseSpec::documented_default(0);
    return Json{{"gravity_m_s2", kGravity},
                {"default_C", kDefaultGeometricFactor},
                {"calibrated_C", kCalibratedGeometricFactor},
                {"calibrated_f_eversion_N", kCalibratedEversionForce},
                {"body_diameter_m", kLabTubeDiameter},
                {"tail_mass_kg", kLabTailMass},
                {"tuned_couplings_N", {kTunedCouplingLow, kTunedCouplingHigh}},
                {"sweep_mount_mass_kg", kDefaultMountMass},
                {"adaptive_geometry", io::to_json(Mount(AdaptiveMount::tuned_to(kTunedCouplingLow)))["geometry"]},
                {"robot", io::to_json(RobotConfig::lab_default())},
                {"noise",
                 {{"accel_sigma_m_s2", noise.accel_sigma},
                  {"mag_sigma", noise.mag_sigma},
                  {"marker_sigma_m", noise.marker_sigma}}},
                {"reference_field", {kReferenceField.x(), kReferenceField.y(), kReferenceField.z()}},
                {"equilibrium", {{"tolerance_N", 1e-9}, {"max_iterations", 200}}},
                {"seed", 7}};
}

PipeSpec load_pipe(const std::string& arg) {
    if (arg == "lab") return lab_pipe();
    if (arg == "field") return field_pipe();
    return io::pipe_from_json(io::read_json_file(arg));
}

std::vector<double> parse_loads(const std::string& text) {
    std::vector<double> loads;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        VINEBOT_REQUIRE(used > 0 && cell.find_first_not_of(" \t", used) == std::string::npos && v >= 0.0,
                        ErrorCode::Parse, "--loads: bad value '" + cell + "'");
        loads.push_back(v);
    }
    return loads;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::string trials;
    double diameter = kLabTubeDiameter;
    double area = 0.0;
};

void run_calibrate(const Globals& g, const CalibrateArgs& a) {
    const auto trials = io::read_calibration_csv(fs::path(a.trials));
    const double area = a.area > 0.0 ? a.area : cross_section_area(VineBodySpec(a.diameter));
    const auto result = fit_calibration(trials, area);
    io::write_json_file(out_path(g, "calibration.json"), io::to_json(result));
    std::printf("C = %.6f\nF_eversion = %.6f N\nrms residual = %.6g Pa\n", result.geometric_factor_C, result.f_eversion,
                result.rms_residual);
}

struct SweepArgs {
    std::string config;
    std::string loads = "0,1,2,3,4,5,6,7,8,9,10,11,12";
    double tuned = kTunedCouplingLow;
};

void run_sweep(const Globals& g, const SweepArgs& a) {
    VineBodySpec body = VineBodySpec::calibrated_lab();
    InteractionModel model;
    double tail_mass = kLabTailMass;
    std::vector<Mount> mounts{ConstantForceMount(a.tuned, kDefaultMountMass),
                              AdaptiveMount::tuned_to(a.tuned, {}, kDefaultMountMass)};
    if (!a.config.empty()) {
        const Json j = io::read_json_file(a.config);
        io::detail::reject_unknown(j, a.config, {"body", "interaction", "tail_mass_kg", "mounts"});
        if (j.contains("body")) body = io::body_from_json(j.at("body"), body);
        if (j.contains("interaction")) model = io::interaction_from_json(j.at("interaction"));
        tail_mass = io::detail::get_num(j, a.config, "tail_mass_kg", tail_mass);
        if (j.contains("mounts")) {
            VINEBOT_REQUIRE(j.at("mounts").is_array(), ErrorCode::Parse, a.config + ": 'mounts' must be an array");
            mounts.clear();
            for (const auto& m : j.at("mounts")) mounts.push_back(io::mount_from_json(m));
        }
    }
    const auto loads = parse_loads(a.loads);
    const auto rows = sweep_mounts(body, mounts, model, loads, weight_of(tail_mass));
    io::write_file(out_path(g, "sweep.csv"), [&](std::ostream& out) { io::write_sweep_csv(out, rows); });
    std::printf("%zu rows over %zu loads\n", rows.size(), loads.size());
}

struct SimulateArgs {
    std::string pipe = "lab";
    std::string robot;
    double p_max = 10000.0;
    double step = 0.01;
    bool synth = false;
    double sample_rate = 100.0;
    bool noise_free = false;
};

void write_synth(const Globals& g, const PipeSpec& pipe, const SimulateArgs& a) {
    const NoiseSpec noise = a.noise_free ? NoiseSpec{0.0, 0.0, 0.0, g.seed} : NoiseSpec::documented_default(g.seed);
    const auto logs = synth_logs(pipe, noise, a.sample_rate);
    io::write_file(out_path(g, "log.csv"), [&](std::ostream& out) { io::write_log_csv(out, logs.log); });
    io::write_file(out_path(g, "markers.csv"), [&](std::ostream& out) { io::write_markers_csv(out, logs.markers); });
    io::write_file(out_path(g, "truth.csv"), [&](std::ostream& out) {
        io::write_polyline_csv(out, reconstruct_path(pipe.segments()));
    });
    io::write_json_file(out_path(g, "pipe.json"), io::to_json(pipe));
    std::printf("%zu samples, %zu markers\n", logs.log.size(), logs.markers.size());
}

void run_simulate(const Globals& g, const SimulateArgs& a) {
    const PipeSpec pipe = load_pipe(a.pipe);
    const RobotConfig robot = a.robot.empty() ? RobotConfig::lab_default() : io::robot_from_json(io::read_json_file(a.robot));
    const auto trace = simulate_growth(pipe, robot, a.p_max, a.step);
    for (const auto& w : trace.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    io::write_file(out_path(g, "trace.csv"), [&](std::ostream& out) { io::write_trace_csv(out, trace); });
    std::printf("status = %s\nmax reachable length = %.4f m of %.4f m\n", to_string(trace.status),
                trace.max_reachable_length, pipe.total_length());
    if (!trace.samples.empty()) std::printf("initial pressure = %.1f Pa\n", trace.samples.front().pressure);
    if (a.synth) write_synth(g, pipe, a);
}

struct ReconstructArgs {
    std::string log;
    std::string markers;
    std::string truth;
    double spacing = 0.01;
};

Polyline3D load_truth(const std::string& path, double spacing) {
    if (path == "lab" || path == "field" || fs::path(path).extension() == ".json") {
        return reconstruct_path(load_pipe(path).segments(), Vec3::Zero(), spacing);
    }
    return io::read_file<Polyline3D>(path, [](std::istream& in, const std::string& src) {
        return io::read_polyline_csv(in, src);
    });
}

void print_metrics(const PathMetrics& m) {
    std::printf("orientation deviation = %.6f deg\nlength deviation = %.6f m\n", rad2deg(m.max_orientation_dev),
                m.length_dev);
}

void run_reconstruct(const Globals& g, const ReconstructArgs& a) {
    const auto log = io::read_file<SensorLog>(a.log, [](std::istream& in, const std::string& src) {
        return io::read_log_csv(in, src);
    });
    const auto markers = io::read_file<std::vector<Marker>>(a.markers, [](std::istream& in, const std::string& src) {
        return io::read_markers_csv(in, src);
    });
    const auto segments = segment_path(log, markers);
    const auto line = reconstruct_path(segments, Vec3::Zero(), a.spacing);
    io::write_file(out_path(g, "polyline.csv"), [&](std::ostream& out) { io::write_polyline_csv(out, line); });
    io::write_json_file(out_path(g, "segments.json"), io::segments_to_json(segments));
    for (const auto& s : segments) {
        if (s.kind == SegmentKind::Straight) {
            const Heading h = heading_of(s.direction);
            std::printf("straight %.3f m  azimuth %.1f deg  depression %.1f deg\n", s.length, rad2deg(h.azimuth),
                        rad2deg(h.depression));
        } else {
            std::printf("elbow    %.3f m  bend %.1f deg\n", s.length, rad2deg(s.bend_angle));
        }
    }
    if (!a.truth.empty()) {
        const auto m = path_metrics(line, load_truth(a.truth, a.spacing));
        io::write_json_file(out_path(g, "metrics.json"), io::to_json(m));
        print_metrics(m);
    }
}

struct ScoreArgs {
    std::string reconstructed;
    std::string truth;
};

void run_score(const Globals& g, const ScoreArgs& a) {
    const auto line = io::read_file<Polyline3D>(a.reconstructed, [](std::istream& in, const std::string& src) {
        return io::read_polyline_csv(in, src);
    });
    const auto m = path_metrics(line, load_truth(a.truth, 0.01));
    io::write_json_file(out_path(g, "metrics.json"), io::to_json(m));
    print_metrics(m);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Growth, tip-mount, pipe simulation and mapping tools for everting vine robots"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed for synthetic data")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_flag("--show-defaults", g.show_defaults, "Print every physical default and exit");

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "Fit C and F_eversion to growth-pressure trials");
    calibrate->add_option("--trials", cal.trials, "CSV with header load_N,pressure_Pa")->required()->check(CLI::ExistingFile);
    auto* dia = calibrate->add_option("--diameter", cal.diameter, "Body diameter in m")->capture_default_str();
    calibrate->add_option("--area", cal.area, "Cross-section area in m^2 (overrides --diameter)")->excludes(dia);

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep-mounts", "Pressure-vs-load curves without a mount and with each mount");
    sweep->add_option("--config", sw.config, "JSON with body, interaction, tail_mass_kg, mounts")->check(CLI::ExistingFile);
    sweep->add_option("--loads", sw.loads, "Comma-separated load grid in N (may be empty)")->capture_default_str();
    sweep->add_option("--tuned", sw.tuned, "Zero-contact coupling of the default mounts in N")->capture_default_str();

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "March growth through a pipe and write the pressure trace");
    simulate->add_option("--pipe", sim.pipe, "Pipe JSON, or 'lab' / 'field'")->capture_default_str();
    simulate->add_option("--robot", sim.robot, "Robot JSON (defaults to the lab robot)")->check(CLI::ExistingFile);
    simulate->add_option("--p-max", sim.p_max, "Maximum pressure in Pa")->capture_default_str();
    simulate->add_option("--step", sim.step, "March step in m")->capture_default_str();
    simulate->add_flag("--synth-logs", sim.synth, "Also write synthetic IMU logs and markers");
    simulate->add_option("--sample-rate", sim.sample_rate, "IMU samples per metre")->capture_default_str();
    simulate->add_flag("--noise-free", sim.noise_free, "Synthesize logs without noise");

    SimulateArgs syn;
    auto* synth = app.add_subcommand("synth-logs", "Write synthetic IMU logs, markers and ground truth for a pipe");
    synth->add_option("--pipe", syn.pipe, "Pipe JSON, or 'lab' / 'field'")->capture_default_str();
    synth->add_option("--sample-rate", syn.sample_rate, "IMU samples per metre")->capture_default_str();
    synth->add_flag("--noise-free", syn.noise_free, "Synthesize logs without noise");

    ReconstructArgs rec;
    auto* reconstruct = app.add_subcommand("reconstruct", "Rebuild the pipe centerline from logs and markers");
    reconstruct->add_option("--log", rec.log, "Sensor log CSV")->required()->check(CLI::ExistingFile);
    reconstruct->add_option("--markers", rec.markers, "Marker table CSV")->required()->check(CLI::ExistingFile);
    reconstruct->add_option("--truth", rec.truth, "Ground truth: pipe JSON, 'lab'/'field', or polyline CSV");
    reconstruct->add_option("--spacing", rec.spacing, "Polyline sample spacing in m")->capture_default_str();

    ScoreArgs sc;
    auto* score = app.add_subcommand("score", "Compare a reconstructed polyline with ground truth");
    score->add_option("--reconstructed", sc.reconstructed, "Polyline CSV")->required()->check(CLI::ExistingFile);
    score->add_option("--truth", sc.truth, "Pipe JSON, 'lab'/'field', or polyline CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (g.show_defaults) {
            std::cout << defaults_json().dump(2) << '\n';
            return 0;
        }
        if (calibrate->parsed()) {
            run_calibrate(g, cal);
        } else if (sweep->parsed()) {
            run_sweep(g, sw);
        } else if (simulate->parsed()) {
            run_simulate(g, sim);
        } else if (synth->parsed()) {
            write_synth(g, load_pipe(syn.pipe), syn);
        } else if (reconstruct->parsed()) {
            run_reconstruct(g, rec);
        } else if (score->parsed()) {
            run_score(g, sc);
        } else {
            std::cout << app.help() << '\n';
            return 2;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", to_string(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
