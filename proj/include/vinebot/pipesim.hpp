#pragma once

// Quasi-static growth through a pipe and synthetic sensor logs for it.

#include "vinebot/constants.hpp"
#include "vinebot/core_model.hpp"
#include "vinebot/error.hpp"
#include "vinebot/mapping.hpp"
#include "vinebot/tip_mount.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace vinebot {

/// One segment as written in pipe files: straights carry a heading, elbows a
/// bend angle that must agree with their neighbours (filled in when absent).
struct PipeSegmentEntry {
    SegmentKind kind = SegmentKind::Straight;
    double length = 0.0;     // m
    double azimuth = 0.0;    // rad, straights
    double depression = 0.0; // rad, straights
    std::optional<double> bend_angle; // rad, elbows
};

class PipeSpec {
public:
    PipeSpec(double inner_diameter, std::vector<PathSegment> segments)
        : inner_diameter_(inner_diameter), segments_(std::move(segments)) {
        VINEBOT_REQUIRE(std::isfinite(inner_diameter) && inner_diameter > 0.0, ErrorCode::InvalidArgument,
                        "PipeSpec.inner_diameter must be > 0");
        VINEBOT_REQUIRE(!segments_.empty(), ErrorCode::InvalidArgument, "PipeSpec needs at least one segment");
        VINEBOT_REQUIRE(segments_.front().kind == SegmentKind::Straight && segments_.back().kind == SegmentKind::Straight,
                        ErrorCode::InvalidArgument, "PipeSpec must start and end with a straight");
        for (std::size_t k = 1; k + 1 < segments_.size(); ++k) {
            if (segments_[k].kind != SegmentKind::Elbow) continue;
            VINEBOT_REQUIRE(segments_[k - 1].kind == SegmentKind::Straight &&
                                segments_[k + 1].kind == SegmentKind::Straight,
                            ErrorCode::InvalidArgument, "segment " + std::to_string(k) + ": elbow must sit between straights");
            const double bend = angle_between(segments_[k - 1].direction, segments_[k + 1].direction);
            VINEBOT_REQUIRE(bend > 1e-9 && bend < kPi - 1e-9, ErrorCode::DegenerateGeometry,
                            "segment " + std::to_string(k) + ": elbow between parallel straights");
            VINEBOT_REQUIRE(std::abs(bend - segments_[k].bend_angle) < 1e-6, ErrorCode::InvalidArgument,
                            "segment " + std::to_string(k) + ": bend angle " +
                                std::to_string(rad2deg(segments_[k].bend_angle)) +
                                " deg disagrees with neighbouring straights (" + std::to_string(rad2deg(bend)) + " deg)");
        }
    }

    static PipeSpec from_entries(double inner_diameter, const std::vector<PipeSegmentEntry>& entries) {
        std::vector<PathSegment> segs;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& e = entries[k];
            if (e.kind == SegmentKind::Straight) {
                segs.push_back(PathSegment::straight(e.length, direction_from(e.azimuth, e.depression)));
                continue;
            }
            VINEBOT_REQUIRE(k > 0 && k + 1 < entries.size() && entries[k - 1].kind == SegmentKind::Straight &&
                                entries[k + 1].kind == SegmentKind::Straight,
                            ErrorCode::InvalidArgument, "segment " + std::to_string(k) + ": elbow must sit between straights");
            const double implied = angle_between(direction_from(entries[k - 1].azimuth, entries[k - 1].depression),
                                                 direction_from(entries[k + 1].azimuth, entries[k + 1].depression));
            segs.push_back(PathSegment::elbow(e.length, e.bend_angle.value_or(implied)));
        }
        return PipeSpec(inner_diameter, std::move(segs));
    }

    [[nodiscard]] double inner_diameter() const { return inner_diameter_; }
    [[nodiscard]] const std::vector<PathSegment>& segments() const { return segments_; }

    [[nodiscard]] double total_length() const {
        double total = 0.0;
        for (const auto& s : segments_) total += s.length;
        return total;
    }

    [[nodiscard]] std::vector<PipeSegmentEntry> entries() const {
        std::vector<PipeSegmentEntry> out;
        for (const auto& s : segments_) {
            PipeSegmentEntry e;
            e.kind = s.kind;
            e.length = s.length;
            if (s.kind == SegmentKind::Straight) {
                const Heading h = heading_of(s.direction);
                e.azimuth = h.azimuth;
                e.depression = h.depression;
            } else {
                e.bend_angle = s.bend_angle;
            }
            out.push_back(e);
        }
        return out;
    }

private:
    double inner_diameter_;
    std::vector<PathSegment> segments_;
};

/// Lab rig: 4.57 m in a horizontal plane with three 90 degree elbows of
/// 0.15 m centerline radius.
inline PipeSpec lab_pipe() {
    const double elbow = 0.15 * kPi / 2.0;
    const double last = 4.57 - 3.0 * elbow - (1.2 + 1.0 + 1.1);
    const auto straight = [](double len, double az_deg) {
        return PipeSegmentEntry{SegmentKind::Straight, len, deg2rad(az_deg), 0.0, std::nullopt};
    };
    const PipeSegmentEntry bend{SegmentKind::Elbow, elbow, 0.0, 0.0, std::nullopt};
    return PipeSpec::from_entries(0.10, {straight(1.2, 0.0), bend, straight(1.0, 90.0), bend, straight(1.1, 0.0), bend,
                                         straight(last, -90.0)});
}

/// Field site: 3.6 m vertical spool down into the pipe, 4.5 m heading west at
/// 8.7 deg depression, a 0.25 m 116 deg elbow, then 8.4 m at 6.2 deg depression.
inline PipeSpec field_pipe() {
    const double dep1 = deg2rad(8.7);
    const double dep2 = deg2rad(6.2);
    const double bend = deg2rad(116.0);
    const double cos_daz =
        (std::cos(bend) - std::sin(dep1) * std::sin(dep2)) / (std::cos(dep1) * std::cos(dep2));
    const double az1 = deg2rad(90.0);
    const double az2 = az1 + std::acos(std::clamp(cos_daz, -1.0, 1.0));
    return PipeSpec::from_entries(
        0.10, {PipeSegmentEntry{SegmentKind::Straight, 3.6, 0.0, kPi / 2.0, std::nullopt},
               PipeSegmentEntry{SegmentKind::Straight, 4.5, az1, dep1, std::nullopt},
               PipeSegmentEntry{SegmentKind::Elbow, 0.25, 0.0, 0.0, bend},
               PipeSegmentEntry{SegmentKind::Straight, 8.4, az2, dep2, std::nullopt}});
}

struct Pose {
    Vec3 position = Vec3::Zero();
    Vec3 tangent = Vec3::UnitX();
};

/// Centerline position and tangent at arc length `s` from the pipe entrance.
inline Pose pose_at(const PipeSpec& pipe, double s, const Vec3& origin = Vec3::Zero()) {
    const auto& segs = pipe.segments();
    Pose pose{origin, segs.front().direction};
    double walked = 0.0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const auto& seg = segs[k];
        const double ds = std::clamp(s - walked, 0.0, seg.length);
        const bool last = k + 1 == segs.size();
        if (seg.kind == SegmentKind::Straight) {
            pose.tangent = seg.direction;
            pose.position += ds * seg.direction;
        } else {
            const Vec3 t_in = segs[k - 1].direction;
            const Vec3 t_out = segs[k + 1].direction;
            const Vec3 normal = (t_out - t_out.dot(t_in) * t_in).normalized();
            const double radius = seg.length / seg.bend_angle;
            const double phi = seg.bend_angle * ds / seg.length;
            pose.position += radius * std::sin(phi) * t_in + radius * (1.0 - std::cos(phi)) * normal;
            pose.tangent = std::cos(phi) * t_in + std::sin(phi) * normal;
        }
        walked += seg.length;
        if (s <= walked || last) break;
    }
    return pose;
}

struct TetherSpec {
    double mass_per_length = 0.0; // kg/m
    double mu_pipe = 0.0;         // friction against the pipe wall

    void validate() const {
        VINEBOT_REQUIRE(detail::finite_nonneg(mass_per_length), ErrorCode::InvalidArgument,
                        "TetherSpec.mass_per_length must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(mu_pipe), ErrorCode::InvalidArgument, "TetherSpec.mu_pipe must be >= 0");
    }
};

/// Tension at the tip end of a tether laid along the centerline from the
/// entrance to `everted_length`, starting at `entry_tension`. Straights add
/// weight along the axis plus wall friction from the normal weight; elbows
/// amplify the incoming tension by exp(mu * turned angle) and add the weight
/// lifted through the arc. Tension never drops below zero.
inline double tail_tension(const PipeSpec& pipe, const TetherSpec& tether, double everted_length,
                           double entry_tension = 0.0) {
    tether.validate();
    VINEBOT_REQUIRE(detail::finite_nonneg(entry_tension), ErrorCode::InvalidArgument, "entry tension must be >= 0");
    const double total = pipe.total_length();
    VINEBOT_REQUIRE(std::isfinite(everted_length) && everted_length >= 0.0 && everted_length <= total * (1.0 + 1e-12),
                    ErrorCode::InvalidArgument, "everted length outside the pipe");

    const double w = tether.mass_per_length * kGravity; // N/m
    const auto& segs = pipe.segments();
    double tension = entry_tension;
    double walked = 0.0;
    for (std::size_t k = 0; k < segs.size() && walked < everted_length; ++k) {
        const auto& seg = segs[k];
        const double ds = std::min(seg.length, everted_length - walked);
        if (seg.kind == SegmentKind::Straight) {
            const double rise = seg.direction.z();
            const double normal = std::sqrt(std::max(0.0, 1.0 - rise * rise));
            tension += w * ds * (rise + tether.mu_pipe * normal);
        } else {
            const Vec3 t_in = segs[k - 1].direction;
            const Vec3 t_out = segs[k + 1].direction;
            const Vec3 normal = (t_out - t_out.dot(t_in) * t_in).normalized();
            const double radius = seg.length / seg.bend_angle;
            const double phi = seg.bend_angle * ds / seg.length;
            const double dz = radius * std::sin(phi) * t_in.z() + radius * (1.0 - std::cos(phi)) * normal.z();
            tension = tension * std::exp(tether.mu_pipe * phi) + w * dz;
        }
        tension = std::max(0.0, tension);
        walked += seg.length;
    }
    return tension;
}

/// Everything about the robot that the growth march needs besides the pipe.
struct RobotConfig {
    VineBodySpec body = VineBodySpec::calibrated_lab();
    std::optional<Mount> mount;
    InteractionModel interaction;
    TetherSpec tail{kLabTailMass / kLabTailLength, 0.1}; // uneverted tail material
    TetherSpec tether{0.04, 0.3};                        // data/power cable
    double payload_mass = 0.6;      // kg carried at the tip, excluding mount mass
    double payload_mu = 0.5;        // sliding friction of the tip assembly
    double base_tail_tension = 2.0; // N, base station drag on the tail

    void validate() const {
        tail.validate();
        tether.validate();
        interaction.validate();
        VINEBOT_REQUIRE(detail::finite_nonneg(payload_mass), ErrorCode::InvalidArgument, "payload_mass must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(payload_mu), ErrorCode::InvalidArgument, "payload_mu must be >= 0");
        VINEBOT_REQUIRE(detail::finite_nonneg(base_tail_tension), ErrorCode::InvalidArgument,
                        "base_tail_tension must be >= 0");
    }

    /// Calibrated body with an adaptive mount tuned to 12 N carrying 600 g.
    static RobotConfig lab_default() {
        RobotConfig cfg;
        cfg.mount = AdaptiveMount::tuned_to(kTunedCouplingLow);
        return cfg;
    }
};

enum class GrowthStatus { ReachedEnd, PressureLimit, MountStranded };

inline const char* to_string(GrowthStatus s) {
    switch (s) {
    case GrowthStatus::ReachedEnd: return "reached_end";
    case GrowthStatus::PressureLimit: return "pressure_limit";
    case GrowthStatus::MountStranded: return "mount_stranded";
    }
    return "?";
}

struct GrowthSample {
    double everted_length = 0.0; // m
    double t_tail = 0.0;         // N
    double f_load = 0.0;         // N
    double pressure = 0.0;       // Pa
};

struct GrowthTrace {
    std::vector<GrowthSample> samples;
    double max_reachable_length = 0.0; // m
    GrowthStatus status = GrowthStatus::ReachedEnd;
    std::vector<std::string> warnings;
};

/// Load state with the tip at `s`. With a mount the carried mass appears as
/// the axial weight W and sliding friction f_mount; without one it is part of
/// F_load.
inline LoadState load_at(const PipeSpec& pipe, const RobotConfig& robot, double s) {
    const double carried = robot.payload_mass + (robot.mount ? mount_mass(*robot.mount) : 0.0);
    const Vec3 t = pose_at(pipe, s).tangent;
    const double rise = t.z();
    const double normal = std::sqrt(std::max(0.0, 1.0 - rise * rise));
    const double weight = weight_of(carried);

    LoadState load;
    load.t_tail = tail_tension(pipe, robot.tail, s, robot.base_tail_tension);
    load.f_load = tail_tension(pipe, robot.tether, s);
    if (robot.mount) {
        load.w_axial = std::max(0.0, weight * rise);
        load.f_mount_ext = robot.payload_mu * weight * normal;
    } else {
        load.f_load = std::max(0.0, load.f_load + weight * (rise + robot.payload_mu * normal));
    }
    return load;
}

inline double pressure_at(const RobotConfig& robot, const LoadState& load) {
    if (!robot.mount) return min_growth_pressure(robot.body, load);
    return growth_pressure_with_mount(robot.body, *robot.mount, robot.interaction, load);
}

/// Marches the tip through the pipe in steps of `step`, stopping at the pipe
/// end, when the pressure to grow exceeds `p_max`, or when the mount can no
/// longer pull its load. Samples beyond the stopping point are not recorded.
inline GrowthTrace simulate_growth(const PipeSpec& pipe, const RobotConfig& robot, double p_max, double step) {
    VINEBOT_REQUIRE(std::isfinite(step) && step > 0.0, ErrorCode::InvalidArgument, "step must be > 0");
    VINEBOT_REQUIRE(std::isfinite(p_max) && p_max > 0.0, ErrorCode::InvalidArgument, "p_max must be > 0");
    robot.validate();

    GrowthTrace trace;
    if (robot.body.diameter() > pipe.inner_diameter()) {
        trace.warnings.push_back("body diameter " + std::to_string(robot.body.diameter()) +
                                 " m exceeds pipe inner diameter " + std::to_string(pipe.inner_diameter()) + " m");
    }
    const double total = pipe.total_length();
    const auto n = static_cast<long>(std::ceil(total / step - 1e-9));
    for (long k = 0; k <= n; ++k) {
        const double s = std::min(total, static_cast<double>(k) * step);
        const LoadState load = load_at(pipe, robot, s);
        if (robot.mount) {
            const double f_mount = mount_friction_ext(*robot.mount) + load.f_mount_ext;
            if (!detail::can_pull_forward(zero_contact_coupling(*robot.mount), load.f_load, load.w_axial, f_mount)) {
                trace.status = GrowthStatus::MountStranded;
                return trace;
            }
        }
        const double p = pressure_at(robot, load);
        if (p > p_max) {
            trace.status = GrowthStatus::PressureLimit;
            return trace;
        }
        trace.samples.push_back({s, load.t_tail, load.f_load, p});
        trace.max_reachable_length = s;
    }
    trace.status = GrowthStatus::ReachedEnd;
    return trace;
}

/// Convenience overload matching the single-tether form: `tether` replaces the
/// robot's cable spec and the mount/interaction are given explicitly.
inline GrowthTrace simulate_growth(const PipeSpec& pipe, const VineBodySpec& body, const std::optional<Mount>& mount,
                                   const InteractionModel& model, const TetherSpec& tether, double p_max, double step,
                                   RobotConfig base = {}) {
    base.body = body;
    base.mount = mount;
    base.interaction = model;
    base.tether = tether;
    return simulate_growth(pipe, base, p_max, step);
}

// ---------------------------------------------------------------------------
// Synthetic logs

inline const Vec3 kReferenceField{0.2, 0.0, -0.4}; // north and down, arbitrary units

struct NoiseSpec {
    double accel_sigma = 0.0;  // m/s^2
    double mag_sigma = 0.0;    // field units
    double marker_sigma = 0.0; // m
    std::uint64_t seed = 0;

    void validate() const {
        VINEBOT_REQUIRE(detail::finite_nonneg(accel_sigma) && detail::finite_nonneg(mag_sigma) &&
                            detail::finite_nonneg(marker_sigma),
                        ErrorCode::InvalidArgument, "noise sigmas must be >= 0");
    }

    /// 0.05 m/s^2 accelerometer, 0.5 % of the reference field, 2 cm markers.
    static NoiseSpec documented_default(std::uint64_t seed) {
        return NoiseSpec{0.05, 0.005 * kReferenceField.norm(), 0.02, seed};
    }
};

struct SynthOptions {
    Vec3 field = kReferenceField;
    double gravity = kGravity;
    double speed = 0.05; // m/s, tip speed used to timestamp samples
};

struct SynthLogs {
    SensorLog log;
    std::vector<Marker> markers;
};

/// Walks the centerline emitting IMU samples every 1/sample_per_m metres and a
/// marked sample at every segment boundary. Marker odometry is the boundary
/// arc length plus Gaussian noise.
inline SynthLogs synth_logs(const PipeSpec& pipe, const NoiseSpec& noise, double sample_per_m,
                            const SynthOptions& opts = {}) {
    VINEBOT_REQUIRE(std::isfinite(sample_per_m) && sample_per_m > 0.0, ErrorCode::InvalidArgument,
                    "sample_per_m must be > 0");
    noise.validate();
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const auto jitter = [&](double sigma) { return sigma > 0.0 ? sigma * unit(rng) : 0.0; };
    const auto jitter3 = [&](double sigma) {
        const double x = jitter(sigma);
        const double y = jitter(sigma);
        const double z = jitter(sigma);
        return Vec3(x, y, z);
    };

    const auto& segs = pipe.segments();
    std::vector<std::pair<double, MarkerLabel>> boundaries{{0.0, MarkerLabel::StraightStart}};
    double s = 0.0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        s += segs[k].length;
        if (k + 1 == segs.size()) {
            boundaries.emplace_back(s, MarkerLabel::StraightEnd);
        } else if (segs[k + 1].kind == SegmentKind::Elbow) {
            boundaries.emplace_back(s, MarkerLabel::ElbowStart);
        } else if (segs[k].kind == SegmentKind::Elbow) {
            boundaries.emplace_back(s, MarkerLabel::ElbowEnd);
        } else {
            boundaries.emplace_back(s, MarkerLabel::StraightStart);
        }
    }

    SynthLogs out;
    const auto emit = [&](double at, std::optional<int> marker) {
        const WorldRotation r = frame_along(pose_at(pipe, at).tangent);
        ImuSample sample;
        sample.t = at / opts.speed;
        sample.accel = r.to_sensor(Vec3(0.0, 0.0, opts.gravity)) + jitter3(noise.accel_sigma);
        sample.mag = r.to_sensor(opts.field) + jitter3(noise.mag_sigma);
        sample.marker_id = marker;
        out.log.push_back(sample);
    };

    const double total = pipe.total_length();
    const auto n = static_cast<long>(std::floor(total * sample_per_m + 1e-9));
    std::size_t next = 0;
    for (long i = 0; i <= n; ++i) {
        const double at = std::min(total, static_cast<double>(i) / sample_per_m);
        while (next < boundaries.size() && boundaries[next].first <= at + 1e-9) {
            const int id = static_cast<int>(next) + 1;
            emit(boundaries[next].first, id);
            out.markers.push_back({id, boundaries[next].first + jitter(noise.marker_sigma), boundaries[next].second});
            ++next;
        }
        const double prev_marker = next > 0 ? boundaries[next - 1].first : -1.0;
        if (std::abs(at - prev_marker) > 1e-9) emit(at, std::nullopt);
    }
    while (next < boundaries.size()) {
        const int id = static_cast<int>(next) + 1;
        emit(boundaries[next].first, id);
        out.markers.push_back({id, boundaries[next].first + jitter(noise.marker_sigma), boundaries[next].second});
        ++next;
    }
    return out;
}

} // namespace vinebot
