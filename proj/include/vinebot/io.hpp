#pragma once

// Text formats: CSV tables and JSON documents for every file the tools read
// or write. Readers report the offending line or key.

#include "vinebot/core_model.hpp"
#include "vinebot/error.hpp"
#include "vinebot/mapping.hpp"
#include "vinebot/pipesim.hpp"
#include "vinebot/tip_mount.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace vinebot::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that round-trips to the same double.
inline std::string fmt_num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// CSV plumbing

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline Error csv_error(const std::string& source, std::size_t line, const std::string& what) {
    return Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ": " + what);
}

inline double parse_double(const std::string& cell, const std::string& source, std::size_t line,
                           const std::string& column) {
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw csv_error(source, line, "column '" + column + "': not a number: '" + cell + "'");
    }
    return v;
}

inline int parse_int(const std::string& cell, const std::string& source, std::size_t line, const std::string& column) {
    int v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw csv_error(source, line, "column '" + column + "': not an integer: '" + cell + "'");
    }
    return v;
}

/// Reads a CSV with an exact header; calls `row(cells, line_no)` for each
/// non-blank data line.
template <typename RowFn>
void read_csv(std::istream& in, const std::string& source, const std::vector<std::string>& header, RowFn&& row) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            if (cells != header) {
                std::string expected;
                for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
                throw csv_error(source, line_no, "expected header '" + expected + "'");
            }
            have_header = true;
            continue;
        }
        if (cells.size() != header.size()) {
            throw csv_error(source, line_no,
                            "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
        }
        row(cells, line_no);
    }
    if (!have_header) throw csv_error(source, line_no, "missing header");
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    VINEBOT_REQUIRE(in.good(), ErrorCode::Io, "cannot open " + path.string());
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    VINEBOT_REQUIRE(out.good(), ErrorCode::Io, "cannot write " + path.string());
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// JSON plumbing

namespace detail {

inline void reject_unknown(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    VINEBOT_REQUIRE(j.is_object(), ErrorCode::Parse, where + ": expected a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        VINEBOT_REQUIRE(ok.contains(key), ErrorCode::Parse, where + ": unknown key '" + key + "'");
    }
}

inline double get_num(const Json& j, const std::string& where, const char* key, std::optional<double> fallback = {}) {
    if (!j.contains(key)) {
        VINEBOT_REQUIRE(fallback.has_value(), ErrorCode::Parse, where + ": missing key '" + key + "'");
        return *fallback;
    }
    VINEBOT_REQUIRE(j.at(key).is_number(), ErrorCode::Parse, where + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

inline Json parse_json(std::istream& in, const std::string& source) {
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Parse, source + ": " + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Calibration

inline const std::vector<std::string> kCalibrationHeader{"load_N", "pressure_Pa"};

inline std::vector<CalibrationTrial> read_calibration_csv(std::istream& in, const std::string& source = "<trials>") {
    std::vector<CalibrationTrial> trials;
    detail::read_csv(in, source, kCalibrationHeader, [&](const auto& cells, std::size_t line) {
        CalibrationTrial t;
        t.applied_load = detail::parse_double(cells[0], source, line, "load_N");
        t.observed_growth_pressure = detail::parse_double(cells[1], source, line, "pressure_Pa");
        if (t.applied_load < 0.0) throw detail::csv_error(source, line, "load_N must be >= 0");
        if (t.observed_growth_pressure <= 0.0) throw detail::csv_error(source, line, "pressure_Pa must be > 0");
        trials.push_back(t);
    });
    return trials;
}

inline std::vector<CalibrationTrial> read_calibration_csv(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_calibration_csv(in, path.string());
}

inline void write_calibration_csv(std::ostream& out, std::span<const CalibrationTrial> trials) {
    out << "load_N,pressure_Pa\n";
    for (const auto& t : trials) out << fmt_num(t.applied_load) << ',' << fmt_num(t.observed_growth_pressure) << '\n';
}

inline Json to_json(const CalibrationResult& r) {
    return Json{{"C", r.geometric_factor_C}, {"f_eversion_N", r.f_eversion}, {"rms_residual_Pa", r.rms_residual}};
}

inline CalibrationResult calibration_from_json(const Json& j) {
    detail::reject_unknown(j, "calibration", {"C", "f_eversion_N", "rms_residual_Pa"});
    return {detail::get_num(j, "calibration", "C"), detail::get_num(j, "calibration", "f_eversion_N"),
            detail::get_num(j, "calibration", "rms_residual_Pa", 0.0)};
}

// ---------------------------------------------------------------------------
// Body, mounts, robot

inline Json to_json(const VineBodySpec& b) {
    return Json{{"diameter_m", b.diameter()},
                {"C", b.geometric_factor()},
                {"f_eversion_N", b.f_eversion()},
                {"f_inversion_N", b.f_inversion()}};
}

inline VineBodySpec body_from_json(const Json& j, const VineBodySpec& defaults = VineBodySpec::calibrated_lab()) {
    detail::reject_unknown(j, "body", {"diameter_m", "C", "f_eversion_N", "f_inversion_N"});
    return VineBodySpec(detail::get_num(j, "body", "diameter_m", defaults.diameter()),
                        detail::get_num(j, "body", "C", defaults.geometric_factor()),
                        detail::get_num(j, "body", "f_eversion_N", defaults.f_eversion()),
                        detail::get_num(j, "body", "f_inversion_N", defaults.f_inversion()));
}

inline Json to_json(const Mount& mount) {
    if (const auto* c = std::get_if<ConstantForceMount>(&mount)) {
        return Json{{"kind", "constant"},
                    {"f_coupling_max_N", c->f_coupling_max()},
                    {"mass_kg", c->mass()},
                    {"f_mount_ext_N", c->f_mount_ext()}};
    }
    const auto& a = std::get<AdaptiveMount>(mount);
    const auto& g = a.geometry();
    return Json{{"kind", "adaptive"},
                {"spring_force_N", a.spring_force()},
                {"geometry",
                 {{"mu_s", g.mu_s},
                  {"arm_d_m", g.arm_d},
                  {"arm_w_m", g.arm_w},
                  {"lever_ns_m", g.lever_ns},
                  {"lever_na_m", g.lever_na},
                  {"lever_nm_m", g.lever_nm},
                  {"lever_nb_m", g.lever_nb},
                  {"contact_angle_deg", rad2deg(g.contact_angle)}}},
                {"mass_kg", a.mass()},
                {"f_mount_ext_N", a.f_mount_ext()}};
}

/// Mount objects carry `kind: constant|adaptive`. Adaptive mounts give either
/// `spring_force_N` or `tuned_to_N`.
inline Mount mount_from_json(const Json& j) {
    VINEBOT_REQUIRE(j.is_object() && j.contains("kind") && j.at("kind").is_string(), ErrorCode::Parse,
                    "mount: missing string key 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        detail::reject_unknown(j, "mount", {"kind", "f_coupling_max_N", "mass_kg", "f_mount_ext_N"});
        return ConstantForceMount(detail::get_num(j, "mount", "f_coupling_max_N"),
                                  detail::get_num(j, "mount", "mass_kg", 0.0),
                                  detail::get_num(j, "mount", "f_mount_ext_N", 0.0));
    }
    VINEBOT_REQUIRE(kind == "adaptive", ErrorCode::Parse, "mount.kind: expected 'constant' or 'adaptive', got '" + kind + "'");
    detail::reject_unknown(j, "mount", {"kind", "spring_force_N", "tuned_to_N", "geometry", "mass_kg", "f_mount_ext_N"});
    AdaptiveGeometry g;
    if (j.contains("geometry")) {
        const auto& gj = j.at("geometry");
        const std::string w = "mount.geometry";
        detail::reject_unknown(gj, w, {"mu_s", "arm_d_m", "arm_w_m", "lever_ns_m", "lever_na_m", "lever_nm_m",
                                       "lever_nb_m", "contact_angle_deg"});
        g.mu_s = detail::get_num(gj, w, "mu_s", g.mu_s);
        g.arm_d = detail::get_num(gj, w, "arm_d_m", g.arm_d);
        g.arm_w = detail::get_num(gj, w, "arm_w_m", g.arm_w);
        g.lever_ns = detail::get_num(gj, w, "lever_ns_m", g.lever_ns);
        g.lever_na = detail::get_num(gj, w, "lever_na_m", g.lever_na);
        g.lever_nm = detail::get_num(gj, w, "lever_nm_m", g.lever_nm);
        g.lever_nb = detail::get_num(gj, w, "lever_nb_m", g.lever_nb);
        g.contact_angle = deg2rad(detail::get_num(gj, w, "contact_angle_deg", rad2deg(g.contact_angle)));
    }
    const double mass = detail::get_num(j, "mount", "mass_kg", 0.0);
    const double f_ext = detail::get_num(j, "mount", "f_mount_ext_N", 0.0);
    const bool has_spring = j.contains("spring_force_N");
    const bool has_tuned = j.contains("tuned_to_N");
    VINEBOT_REQUIRE(has_spring != has_tuned, ErrorCode::Parse,
                    "mount: adaptive mounts need exactly one of 'spring_force_N' or 'tuned_to_N'");
    if (has_tuned) return AdaptiveMount::tuned_to(detail::get_num(j, "mount", "tuned_to_N"), g, mass, f_ext);
    return AdaptiveMount(detail::get_num(j, "mount", "spring_force_N"), g, mass, f_ext);
}

inline Json to_json(const InteractionModel& m) { return Json{{"gain", m.gain}, {"offset_N", m.offset}}; }

inline InteractionModel interaction_from_json(const Json& j) {
    detail::reject_unknown(j, "interaction", {"gain", "offset_N"});
    InteractionModel m;
    m.gain = detail::get_num(j, "interaction", "gain", m.gain);
    m.offset = detail::get_num(j, "interaction", "offset_N", m.offset);
    m.validate();
    return m;
}

inline Json to_json(const TetherSpec& t) {
    return Json{{"mass_per_length_kg_m", t.mass_per_length}, {"mu_pipe", t.mu_pipe}};
}

inline TetherSpec tether_from_json(const Json& j, const std::string& where, TetherSpec defaults) {
    detail::reject_unknown(j, where, {"mass_per_length_kg_m", "mu_pipe"});
    defaults.mass_per_length = detail::get_num(j, where, "mass_per_length_kg_m", defaults.mass_per_length);
    defaults.mu_pipe = detail::get_num(j, where, "mu_pipe", defaults.mu_pipe);
    defaults.validate();
    return defaults;
}

inline Json to_json(const RobotConfig& r) {
    return Json{{"body", to_json(r.body)},
                {"mount", r.mount ? to_json(*r.mount) : Json(nullptr)},
                {"interaction", to_json(r.interaction)},
                {"tail", to_json(r.tail)},
                {"tether", to_json(r.tether)},
                {"payload_mass_kg", r.payload_mass},
                {"payload_mu", r.payload_mu},
                {"base_tail_tension_N", r.base_tail_tension}};
}

/// Missing keys fall back to RobotConfig::lab_default(); `"mount": null`
/// removes the mount.
inline RobotConfig robot_from_json(const Json& j) {
    detail::reject_unknown(j, "robot", {"body", "mount", "interaction", "tail", "tether", "payload_mass_kg",
                                        "payload_mu", "base_tail_tension_N"});
    RobotConfig r = RobotConfig::lab_default();
    if (j.contains("body")) r.body = body_from_json(j.at("body"), r.body);
    if (j.contains("mount")) {
        if (j.at("mount").is_null()) {
            r.mount.reset();
        } else {
            r.mount = mount_from_json(j.at("mount"));
        }
    }
    if (j.contains("interaction")) r.interaction = interaction_from_json(j.at("interaction"));
    if (j.contains("tail")) r.tail = tether_from_json(j.at("tail"), "robot.tail", r.tail);
    if (j.contains("tether")) r.tether = tether_from_json(j.at("tether"), "robot.tether", r.tether);
    r.payload_mass = detail::get_num(j, "robot", "payload_mass_kg", r.payload_mass);
    r.payload_mu = detail::get_num(j, "robot", "payload_mu", r.payload_mu);
    r.base_tail_tension = detail::get_num(j, "robot", "base_tail_tension_N", r.base_tail_tension);
    r.validate();
    return r;
}

// ---------------------------------------------------------------------------
// Sweeps and traces

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "load_N,pressure_Pa,mount_kind\n";
    for (const auto& r : rows) out << fmt_num(r.load) << ',' << fmt_num(r.pressure) << ',' << r.mount_kind << '\n';
}

inline void write_trace_csv(std::ostream& out, const GrowthTrace& trace) {
    out << "length_m,t_tail_N,f_load_N,pressure_Pa\n";
    for (const auto& s : trace.samples) {
        out << fmt_num(s.everted_length) << ',' << fmt_num(s.t_tail) << ',' << fmt_num(s.f_load) << ','
            << fmt_num(s.pressure) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Pipes

inline Json to_json(const PipeSpec& pipe) {
    Json segs = Json::array();
    for (const auto& e : pipe.entries()) {
        Json s{{"kind", to_string(e.kind)}, {"length_m", e.length}};
        if (e.kind == SegmentKind::Straight) {
            s["azimuth_deg"] = rad2deg(e.azimuth);
            s["depression_deg"] = rad2deg(e.depression);
        } else {
            s["bend_angle_deg"] = rad2deg(*e.bend_angle);
        }
        segs.push_back(s);
    }
    return Json{{"inner_diameter_m", pipe.inner_diameter()}, {"segments", segs}};
}

inline PipeSpec pipe_from_json(const Json& j) {
    detail::reject_unknown(j, "pipe", {"inner_diameter_m", "segments"});
    VINEBOT_REQUIRE(j.contains("segments") && j.at("segments").is_array(), ErrorCode::Parse,
                    "pipe: missing array 'segments'");
    std::vector<PipeSegmentEntry> entries;
    std::size_t k = 0;
    for (const auto& sj : j.at("segments")) {
        const std::string where = "pipe.segments[" + std::to_string(k++) + "]";
        detail::reject_unknown(sj, where, {"kind", "length_m", "azimuth_deg", "depression_deg", "bend_angle_deg"});
        VINEBOT_REQUIRE(sj.contains("kind") && sj.at("kind").is_string(), ErrorCode::Parse, where + ": missing 'kind'");
        const auto kind = sj.at("kind").get<std::string>();
        PipeSegmentEntry e;
        e.length = detail::get_num(sj, where, "length_m");
        if (kind == "straight") {
            e.kind = SegmentKind::Straight;
            e.azimuth = deg2rad(detail::get_num(sj, where, "azimuth_deg", 0.0));
            e.depression = deg2rad(detail::get_num(sj, where, "depression_deg", 0.0));
        } else if (kind == "elbow") {
            e.kind = SegmentKind::Elbow;
            if (sj.contains("bend_angle_deg")) e.bend_angle = deg2rad(detail::get_num(sj, where, "bend_angle_deg"));
        } else {
            throw Error(ErrorCode::Parse, where + ".kind: expected 'straight' or 'elbow', got '" + kind + "'");
        }
        entries.push_back(e);
    }
    return PipeSpec::from_entries(detail::get_num(j, "pipe", "inner_diameter_m"), entries);
}

// ---------------------------------------------------------------------------
// Sensor logs, markers, polylines

inline const std::vector<std::string> kLogHeader{"t_s", "ax", "ay", "az", "mx", "my", "mz", "marker_id"};
inline const std::vector<std::string> kMarkerHeader{"marker_id", "odometry_m", "label"};
inline const std::vector<std::string> kPolylineHeader{"s_m", "x_m", "y_m", "z_m", "segment_index"};

inline void write_log_csv(std::ostream& out, const SensorLog& log) {
    out << "t_s,ax,ay,az,mx,my,mz,marker_id\n";
    for (const auto& s : log) {
        out << fmt_num(s.t) << ',' << fmt_num(s.accel.x()) << ',' << fmt_num(s.accel.y()) << ',' << fmt_num(s.accel.z())
            << ',' << fmt_num(s.mag.x()) << ',' << fmt_num(s.mag.y()) << ',' << fmt_num(s.mag.z()) << ',';
        if (s.marker_id) out << *s.marker_id;
        out << '\n';
    }
}

inline SensorLog read_log_csv(std::istream& in, const std::string& source = "<log>") {
    SensorLog log;
    detail::read_csv(in, source, kLogHeader, [&](const auto& c, std::size_t line) {
        ImuSample s;
        s.t = detail::parse_double(c[0], source, line, "t_s");
        for (int i = 0; i < 3; ++i) {
            s.accel[i] = detail::parse_double(c[1 + i], source, line, kLogHeader[1 + i]);
            s.mag[i] = detail::parse_double(c[4 + i], source, line, kLogHeader[4 + i]);
        }
        if (!c[7].empty()) s.marker_id = detail::parse_int(c[7], source, line, "marker_id");
        log.push_back(s);
    });
    return log;
}

inline void write_markers_csv(std::ostream& out, std::span<const Marker> markers) {
    out << "marker_id,odometry_m,label\n";
    for (const auto& m : markers) out << m.id << ',' << fmt_num(m.odometry) << ',' << to_string(m.label) << '\n';
}

inline std::vector<Marker> read_markers_csv(std::istream& in, const std::string& source = "<markers>") {
    std::vector<Marker> markers;
    detail::read_csv(in, source, kMarkerHeader, [&](const auto& c, std::size_t line) {
        Marker m;
        m.id = detail::parse_int(c[0], source, line, "marker_id");
        m.odometry = detail::parse_double(c[1], source, line, "odometry_m");
        const auto label = parse_marker_label(c[2]);
        if (!label) {
            throw detail::csv_error(source, line,
                                    "marker " + std::to_string(m.id) + ": missing or unknown label '" + c[2] + "'");
        }
        m.label = *label;
        markers.push_back(m);
    });
    return markers;
}

inline void write_polyline_csv(std::ostream& out, const Polyline3D& line) {
    out << "s_m,x_m,y_m,z_m,segment_index\n";
    for (std::size_t i = 0; i < line.points.size(); ++i) {
        const auto& p = line.points[i];
        out << fmt_num(line.arc_length[i]) << ',' << fmt_num(p.x()) << ',' << fmt_num(p.y()) << ',' << fmt_num(p.z())
            << ',' << line.segment_index[i] << '\n';
    }
}

/// Tangents are not stored in the file; they are rebuilt from chords.
inline Polyline3D read_polyline_csv(std::istream& in, const std::string& source = "<polyline>") {
    Polyline3D line;
    detail::read_csv(in, source, kPolylineHeader, [&](const auto& c, std::size_t row) {
        const double s = detail::parse_double(c[0], source, row, "s_m");
        const Vec3 p(detail::parse_double(c[1], source, row, "x_m"), detail::parse_double(c[2], source, row, "y_m"),
                     detail::parse_double(c[3], source, row, "z_m"));
        const int idx = detail::parse_int(c[4], source, row, "segment_index");
        if (!line.points.empty()) {
            if (!(s > line.arc_length.back())) throw detail::csv_error(source, row, "s_m must be strictly increasing");
            if (idx != line.segment_index.back() && idx != line.segment_index.back() + 1) {
                throw detail::csv_error(source, row, "segment_index must be non-decreasing by steps of one");
            }
        } else if (idx != 0) {
            throw detail::csv_error(source, row, "first segment_index must be 0");
        }
        line.points.push_back(p);
        line.arc_length.push_back(s);
        line.segment_index.push_back(idx);
    });
    estimate_tangents(line);
    return line;
}

inline Json to_json(const PathMetrics& m) {
    return Json{{"max_orientation_dev_rad", m.max_orientation_dev},
                {"max_orientation_dev_deg", rad2deg(m.max_orientation_dev)},
                {"length_dev_m", m.length_dev}};
}

inline Json segments_to_json(std::span<const PathSegment> segments) {
    Json arr = Json::array();
    for (const auto& s : segments) {
        Json j{{"kind", to_string(s.kind)}, {"length_m", s.length}};
        if (s.kind == SegmentKind::Straight) {
            const Heading h = heading_of(s.direction);
            j["azimuth_deg"] = rad2deg(h.azimuth);
            j["depression_deg"] = rad2deg(h.depression);
        } else {
            j["bend_angle_deg"] = rad2deg(s.bend_angle);
        }
        arr.push_back(j);
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Path helpers

template <typename T, typename Reader>
T read_file(const std::filesystem::path& path, Reader&& reader) {
    auto in = detail::open_in(path);
    return reader(in, path.string());
}

inline Json read_json_file(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return detail::parse_json(in, path.string());
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    auto out = detail::open_out(path);
    writer(out);
    VINEBOT_REQUIRE(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
    write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

} // namespace vinebot::io
