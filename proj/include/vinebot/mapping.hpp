#pragma once

// Pipe centerline reconstruction from accelerometer/magnetometer attitude and
// odometry markers placed along the tether.
//
// World frame: z up (opposite gravity), x magnetic north, y west. At rest the
// accelerometer reads the specific force, i.e. +g along world z. The sensor
// x axis points along the direction of travel.

#include "vinebot/constants.hpp"
#include "vinebot/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vinebot {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline const Vec3 kSensorForward{1.0, 0.0, 0.0};
inline const Vec3 kWorldUp{0.0, 0.0, 1.0};

/// Angle between two non-zero vectors, accurate near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Proper rotation taking sensor-frame coordinates to world coordinates.
class WorldRotation {
public:
    WorldRotation() : m_(Mat3::Identity()) {}

    explicit WorldRotation(const Mat3& m) : m_(m) {
        VINEBOT_REQUIRE(m.allFinite(), ErrorCode::InvalidArgument, "rotation has non-finite entries");
        VINEBOT_REQUIRE((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9,
                        ErrorCode::InvalidArgument, "rotation columns are not orthonormal");
        VINEBOT_REQUIRE(std::abs(m.determinant() - 1.0) < 1e-9, ErrorCode::InvalidArgument,
                        "rotation determinant is not +1");
    }

    [[nodiscard]] const Mat3& matrix() const { return m_; }
    [[nodiscard]] Vec3 to_world(const Vec3& sensor) const { return m_ * sensor; }
    [[nodiscard]] Vec3 to_sensor(const Vec3& world) const { return m_.transpose() * world; }

private:
    Mat3 m_;
};

/// Minimum separation between the gravity and magnetic directions.
inline constexpr double kMinFieldSeparation = kPi / 180.0;

/// Attitude from one accelerometer and one magnetometer reading (TRIAD with
/// gravity as the primary vector).
inline WorldRotation world_rotation(const Vec3& accel, const Vec3& mag) {
    VINEBOT_REQUIRE(accel.allFinite() && accel.norm() > 0.0, ErrorCode::InvalidArgument, "accelerometer reading is zero");
    VINEBOT_REQUIRE(mag.allFinite() && mag.norm() > 0.0, ErrorCode::InvalidArgument, "magnetometer reading is zero");
    const double sep = angle_between(accel, mag);
    VINEBOT_REQUIRE(sep > kMinFieldSeparation && sep < kPi - kMinFieldSeparation, ErrorCode::DegenerateGeometry,
                    "magnetic field is parallel to gravity; heading is undefined");

    const Vec3 z = accel.normalized();
    const Vec3 x = (mag - mag.dot(z) * z).normalized();
    const Vec3 y = z.cross(x);
    Mat3 m;
    m.row(0) = x.transpose();
    m.row(1) = y.transpose();
    m.row(2) = z.transpose();
    return WorldRotation(m);
}

/// Sensor frame whose forward axis is `direction`, with sensor z kept as close
/// to world up as possible. Vertical directions fall back to north as the
/// reference.
inline WorldRotation frame_along(const Vec3& direction) {
    VINEBOT_REQUIRE(direction.allFinite() && direction.norm() > 0.0, ErrorCode::InvalidArgument,
                    "frame direction is zero");
    const Vec3 fwd = direction.normalized();
    Vec3 ref = kWorldUp;
    if (fwd.cross(ref).norm() < 1e-6) ref = Vec3::UnitX();
    const Vec3 up = (ref - ref.dot(fwd) * fwd).normalized();
    const Vec3 side = up.cross(fwd);
    Mat3 m;
    m.col(0) = fwd;
    m.col(1) = side;
    m.col(2) = up;
    return WorldRotation(m);
}

struct Heading {
    double azimuth = 0.0;    // rad, from north (+x) toward west (+y)
    double depression = 0.0; // rad, positive below horizontal
    bool vertical = false;   // azimuth undefined
};

inline Heading heading_of(const Vec3& world_direction) {
    VINEBOT_REQUIRE(world_direction.allFinite() && world_direction.norm() > 0.0, ErrorCode::InvalidArgument,
                    "direction is zero");
    const Vec3 d = world_direction.normalized();
    Heading h;
    h.depression = -std::asin(std::clamp(d.z(), -1.0, 1.0));
    if (std::hypot(d.x(), d.y()) < 1e-12) {
        h.vertical = true;
        h.azimuth = 0.0;
    } else {
        h.azimuth = std::atan2(d.y(), d.x());
    }
    return h;
}

inline Heading heading_and_depression(const WorldRotation& rot, const Vec3& axis = kSensorForward) {
    VINEBOT_REQUIRE(axis.allFinite() && axis.norm() > 0.0, ErrorCode::InvalidArgument, "sensor axis is zero");
    return heading_of(rot.to_world(axis));
}

inline Vec3 direction_from(double azimuth, double depression) {
    return {std::cos(depression) * std::cos(azimuth), std::cos(depression) * std::sin(azimuth), -std::sin(depression)};
}

// ---------------------------------------------------------------------------
// Sensor logs and markers

struct ImuSample {
    double t = 0.0; // s
    Vec3 accel = Vec3::Zero();
    Vec3 mag = Vec3::Zero();
    std::optional<int> marker_id;
};

using SensorLog = std::vector<ImuSample>;

enum class MarkerLabel { StraightStart, StraightEnd, ElbowStart, ElbowEnd };

inline const char* to_string(MarkerLabel label) {
    switch (label) {
    case MarkerLabel::StraightStart: return "straight_start";
    case MarkerLabel::StraightEnd: return "straight_end";
    case MarkerLabel::ElbowStart: return "elbow_start";
    case MarkerLabel::ElbowEnd: return "elbow_end";
    }
    return "?";
}

inline std::optional<MarkerLabel> parse_marker_label(const std::string& s) {
    if (s == "straight_start") return MarkerLabel::StraightStart;
    if (s == "straight_end") return MarkerLabel::StraightEnd;
    if (s == "elbow_start") return MarkerLabel::ElbowStart;
    if (s == "elbow_end") return MarkerLabel::ElbowEnd;
    return std::nullopt;
}

struct Marker {
    int id = 0;
    double odometry = 0.0; // m of cable paid out
    MarkerLabel label = MarkerLabel::StraightStart;
};

// ---------------------------------------------------------------------------
// Path segments

enum class SegmentKind { Straight, Elbow };

inline const char* to_string(SegmentKind kind) { return kind == SegmentKind::Straight ? "straight" : "elbow"; }

struct PathSegment {
    SegmentKind kind = SegmentKind::Straight;
    double length = 0.0;                  // m, run length or elbow arc length
    Vec3 direction = Vec3::UnitX();       // straight only, unit world vector
    WorldRotation orientation;            // straight only, mean sensor attitude
    double bend_angle = 0.0;              // rad, elbow only

    static PathSegment straight(double length, const Vec3& direction) {
        VINEBOT_REQUIRE(std::isfinite(length) && length > 0.0, ErrorCode::InvalidArgument,
                        "straight segment length must be > 0");
        PathSegment s;
        s.kind = SegmentKind::Straight;
        s.length = length;
        s.direction = direction.normalized();
        s.orientation = frame_along(s.direction);
        return s;
    }

    static PathSegment elbow(double arc_length, double bend_angle) {
        VINEBOT_REQUIRE(std::isfinite(arc_length) && arc_length > 0.0, ErrorCode::InvalidArgument,
                        "elbow arc length must be > 0");
        VINEBOT_REQUIRE(std::isfinite(bend_angle) && bend_angle > 0.0 && bend_angle < kPi,
                        ErrorCode::InvalidArgument, "elbow bend angle must be in (0, pi)");
        PathSegment s;
        s.kind = SegmentKind::Elbow;
        s.length = arc_length;
        s.bend_angle = bend_angle;
        return s;
    }
};

/// Chordal L2 mean of rotations: the arithmetic mean projected back onto SO(3).
inline WorldRotation chordal_mean(std::span<const WorldRotation> rotations) {
    VINEBOT_REQUIRE(!rotations.empty(), ErrorCode::InvalidArgument, "cannot average zero rotations");
    Mat3 sum = Mat3::Zero();
    for (const auto& r : rotations) sum += r.matrix();
    Eigen::JacobiSVD<Mat3> svd(sum, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return WorldRotation(svd.matrixU() * d * svd.matrixV().transpose());
}

namespace detail {

inline Error marker_error(const Marker& m, const std::string& what) {
    return Error(ErrorCode::Parse, "marker " + std::to_string(m.id) + " (" + to_string(m.label) + " at " +
                                       std::to_string(m.odometry) + " m): " + what);
}

struct Span {
    SegmentKind kind;
    std::size_t start; // index into marker table
    std::size_t end;
};

} // namespace detail

/// Splits a labelled log into straights and elbows.
///
/// Marker grammar, in table order: `straight_start` opens a straight (closing
/// an open one at a kink); `elbow_start` closes the open straight and opens an
/// elbow; `elbow_end` closes the elbow and opens the next straight;
/// `straight_end` closes the open straight and must be the last marker.
inline std::vector<PathSegment> segment_path(const SensorLog& log, std::span<const Marker> markers,
                                             const Vec3& axis = kSensorForward) {
    std::vector<PathSegment> segments;
    if (markers.empty()) return segments;

    std::map<int, std::size_t> row_of;
    for (std::size_t i = 0; i < log.size(); ++i) {
        if (log[i].marker_id) row_of.emplace(*log[i].marker_id, i);
    }

    std::map<int, std::size_t> seen;
    for (std::size_t i = 0; i < markers.size(); ++i) {
        const auto& m = markers[i];
        if (!seen.emplace(m.id, i).second) throw detail::marker_error(m, "duplicate marker id");
        if (!row_of.contains(m.id)) throw detail::marker_error(m, "marker does not appear in the sensor log");
        if (!std::isfinite(m.odometry)) throw detail::marker_error(m, "odometry is not finite");
        if (i > 0) {
            const auto& prev = markers[i - 1];
            if (!(m.odometry > prev.odometry)) {
                throw detail::marker_error(m, "odometry not strictly increasing after marker " + std::to_string(prev.id));
            }
            if (row_of.at(m.id) <= row_of.at(prev.id)) {
                throw detail::marker_error(m, "logged before marker " + std::to_string(prev.id));
            }
        }
    }

    std::vector<detail::Span> spans;
    enum class State { Idle, InStraight, InElbow, Done } state = State::Idle;
    std::size_t open = 0;
    for (std::size_t i = 0; i < markers.size(); ++i) {
        const auto& m = markers[i];
        switch (m.label) {
        case MarkerLabel::StraightStart:
            if (state == State::InElbow) throw detail::marker_error(m, "elbow is missing its elbow_end");
            if (state == State::Done) throw detail::marker_error(m, "marker after straight_end");
            if (state == State::InStraight) spans.push_back({SegmentKind::Straight, open, i});
            state = State::InStraight;
            open = i;
            break;
        case MarkerLabel::ElbowStart:
            if (state != State::InStraight) throw detail::marker_error(m, "elbow has no incoming straight");
            spans.push_back({SegmentKind::Straight, open, i});
            state = State::InElbow;
            open = i;
            break;
        case MarkerLabel::ElbowEnd:
            if (state != State::InElbow) throw detail::marker_error(m, "elbow_end without elbow_start");
            spans.push_back({SegmentKind::Elbow, open, i});
            state = State::InStraight;
            open = i;
            break;
        case MarkerLabel::StraightEnd:
            if (state != State::InStraight) throw detail::marker_error(m, "straight_end without an open straight");
            spans.push_back({SegmentKind::Straight, open, i});
            state = State::Done;
            break;
        }
    }
    if (state == State::InElbow) throw detail::marker_error(markers.back(), "elbow has no outgoing straight");
    if (state == State::InStraight) throw detail::marker_error(markers.back(), "missing straight_end");

    for (const auto& span : spans) {
        const auto& a = markers[span.start];
        const auto& b = markers[span.end];
        const double length = b.odometry - a.odometry;
        if (span.kind == SegmentKind::Elbow) {
            PathSegment s;
            s.kind = SegmentKind::Elbow;
            s.length = length;
            segments.push_back(s);
            continue;
        }
        std::size_t first = row_of.at(a.id) + 1;
        std::size_t last = row_of.at(b.id); // exclusive
        if (first >= last) {
            first = row_of.at(a.id);
            last = row_of.at(b.id) + 1;
        }
        std::vector<WorldRotation> rotations;
        Vec3 dir_sum = Vec3::Zero();
        for (std::size_t r = first; r < last; ++r) {
            try {
                rotations.push_back(world_rotation(log[r].accel, log[r].mag));
            } catch (const Error& e) {
                throw detail::marker_error(a, "log row " + std::to_string(r) + ": " + e.what());
            }
            dir_sum += rotations.back().to_world(axis);
        }
        if (dir_sum.norm() < 1e-12) throw detail::marker_error(a, "straight has no consistent direction");
        PathSegment s = PathSegment::straight(length, dir_sum);
        s.orientation = chordal_mean(rotations);
        segments.push_back(s);
    }

    for (std::size_t k = 0; k < segments.size(); ++k) {
        if (segments[k].kind != SegmentKind::Elbow) continue;
        const double bend = angle_between(segments[k - 1].direction, segments[k + 1].direction);
        if (!(bend > 1e-9 && bend < kPi - 1e-9)) {
            const auto& span = spans[k];
            throw Error(ErrorCode::DegenerateGeometry, "marker " + std::to_string(markers[span.start].id) +
                                                           ": elbow joins parallel or reversed straights");
        }
        segments[k].bend_angle = bend;
    }
    return segments;
}

// ---------------------------------------------------------------------------
// Polylines

struct Polyline3D {
    std::vector<Vec3> points;
    std::vector<double> arc_length;        // m, cumulative along the path
    std::vector<Vec3> tangents;            // unit tangent at each point
    std::vector<int> segment_index;        // owning segment of each point
    std::vector<Vec3> start_tangents;      // tangent at the start of each segment

    [[nodiscard]] bool empty() const { return points.empty(); }
    [[nodiscard]] double total_length() const { return arc_length.empty() ? 0.0 : arc_length.back(); }
    [[nodiscard]] int segment_count() const { return static_cast<int>(start_tangents.size()); }
};

/// Spherical interpolation between unit vectors; t outside [0, 1] extrapolates.
inline Vec3 slerp(const Vec3& a, const Vec3& b, double t) {
    const double omega = angle_between(a, b);
    if (omega < 1e-12) return a;
    return (std::sin((1.0 - t) * omega) * a + std::sin(t * omega) * b) / std::sin(omega);
}

/// Rebuilds tangents for polylines read without them. Interior points use the
/// central chord and segment ends extrapolate the chord turning rate, both of
/// which are exact for uniformly sampled straights and circular arcs.
inline void estimate_tangents(Polyline3D& line) {
    const std::size_t n = line.points.size();
    line.tangents.assign(n, Vec3::UnitX());
    line.start_tangents.clear();
    if (n < 2) return;
    const int segs = line.segment_index.back() + 1;
    line.start_tangents.assign(static_cast<std::size_t>(segs), Vec3::UnitX());

    std::size_t first = 0; // span start: junction point, or 0 for the first segment
    while (first + 1 < n) {
        const int k = line.segment_index[first + 1];
        std::size_t last = first + 1;
        while (last + 1 < n && line.segment_index[last + 1] == k) ++last;

        const auto chord = [&](std::size_t i) { return Vec3((line.points[i + 1] - line.points[i]).normalized()); };
        const std::size_t chords = last - first;
        Vec3 t_start = chord(first);
        Vec3 t_end = chord(last - 1);
        if (chords >= 2) {
            t_start = slerp(chord(first), chord(first + 1), -0.5);
            t_end = slerp(chord(last - 2), chord(last - 1), 1.5);
        }
        line.start_tangents[static_cast<std::size_t>(k)] = t_start;
        if (first == 0) line.tangents[0] = t_start;
        for (std::size_t i = first + 1; i < last; ++i) {
            line.tangents[i] = (line.points[i + 1] - line.points[i - 1]).normalized();
        }
        line.tangents[last] = t_end;
        first = last;
    }
}

/// Extrudes straights and sweeps elbows as circular arcs tangent to both
/// neighbouring straights, in the plane they span.
inline Polyline3D reconstruct_path(std::span<const PathSegment> segments, const Vec3& origin = Vec3::Zero(),
                                   double sample_spacing = 0.01) {
    VINEBOT_REQUIRE(std::isfinite(sample_spacing) && sample_spacing > 0.0, ErrorCode::InvalidArgument,
                    "sample spacing must be > 0");
    Polyline3D line;
    if (segments.empty()) return line;
    VINEBOT_REQUIRE(segments.front().kind == SegmentKind::Straight, ErrorCode::InvalidArgument,
                    "path cannot start with an elbow (no incoming tangent)");

    for (std::size_t k = 0; k < segments.size(); ++k) {
        const auto& seg = segments[k];
        VINEBOT_REQUIRE(std::isfinite(seg.length) && seg.length > 0.0, ErrorCode::InvalidArgument,
                        "segment " + std::to_string(k) + ": length must be > 0");
        if (seg.kind != SegmentKind::Elbow) continue;
        VINEBOT_REQUIRE(k + 1 < segments.size() && segments[k + 1].kind == SegmentKind::Straight &&
                            segments[k - 1].kind == SegmentKind::Straight,
                        ErrorCode::InvalidArgument, "segment " + std::to_string(k) + ": elbow must sit between straights");
        const double bend = angle_between(segments[k - 1].direction, segments[k + 1].direction);
        VINEBOT_REQUIRE(bend > 1e-9 && bend < kPi - 1e-9, ErrorCode::DegenerateGeometry,
                        "segment " + std::to_string(k) + ": elbow between parallel straights");
        VINEBOT_REQUIRE(std::abs(bend - seg.bend_angle) < 1e-6, ErrorCode::InvalidArgument,
                        "segment " + std::to_string(k) + ": bend angle disagrees with neighbouring straights");
    }

    const auto push = [&](const Vec3& p, double s, const Vec3& t, int idx) {
        line.points.push_back(p);
        line.arc_length.push_back(s);
        line.tangents.push_back(t);
        line.segment_index.push_back(idx);
    };

    Vec3 pos = origin;
    double s0 = 0.0;
    push(pos, 0.0, segments.front().direction, 0);

    for (std::size_t k = 0; k < segments.size(); ++k) {
        const auto& seg = segments[k];
        const int idx = static_cast<int>(k);
        const auto n = static_cast<int>(std::max(1.0, std::ceil(seg.length / sample_spacing - 1e-12)));
        if (seg.kind == SegmentKind::Straight) {
            const Vec3 d = seg.direction;
            line.start_tangents.push_back(d);
            for (int i = 1; i <= n; ++i) {
                const double ds = seg.length * i / n;
                push(pos + ds * d, s0 + ds, d, idx);
            }
            pos += seg.length * d;
        } else {
            const Vec3 t_in = segments[k - 1].direction;
            const Vec3 t_out = segments[k + 1].direction;
            const Vec3 normal = (t_out - t_out.dot(t_in) * t_in).normalized();
            const double theta = angle_between(t_in, t_out);
            const double radius = seg.length / theta;
            line.start_tangents.push_back(t_in);
            for (int i = 1; i <= n; ++i) {
                const double phi = theta * i / n;
                const Vec3 p = pos + radius * std::sin(phi) * t_in + radius * (1.0 - std::cos(phi)) * normal;
                const Vec3 t = std::cos(phi) * t_in + std::sin(phi) * normal;
                push(p, s0 + seg.length * i / n, t, idx);
            }
            pos = line.points.back();
        }
        s0 += seg.length;
        line.arc_length.back() = s0;
    }
    return line;
}

struct PathMetrics {
    double max_orientation_dev = 0.0; // rad
    double length_dev = 0.0;          // m
};

namespace detail {

struct TangentSample {
    double u;
    Vec3 t;
};

// (u, tangent) samples per segment with u the fractional arc length inside it.
inline std::vector<std::vector<TangentSample>> segment_tangent_samples(const Polyline3D& line) {
    const int segs = line.segment_count();
    std::vector<std::vector<TangentSample>> out(static_cast<std::size_t>(segs));
    std::vector<double> start(static_cast<std::size_t>(segs), 0.0);
    std::vector<double> end(static_cast<std::size_t>(segs), 0.0);
    for (std::size_t i = 1; i < line.points.size(); ++i) {
        const auto k = static_cast<std::size_t>(line.segment_index[i]);
        if (line.segment_index[i] != line.segment_index[i - 1]) start[k] = line.arc_length[i - 1];
        end[k] = line.arc_length[i];
    }
    for (int k = 0; k < segs; ++k) out[static_cast<std::size_t>(k)].push_back({0.0, line.start_tangents[static_cast<std::size_t>(k)]});
    for (std::size_t i = 1; i < line.points.size(); ++i) {
        const auto k = static_cast<std::size_t>(line.segment_index[i]);
        const double len = end[k] - start[k];
        const double u = len > 0.0 ? (line.arc_length[i] - start[k]) / len : 1.0;
        out[k].push_back({u, line.tangents[i]});
    }
    return out;
}

inline Vec3 tangent_at(const std::vector<TangentSample>& samples, double u) {
    if (u <= samples.front().u) return samples.front().t;
    if (u >= samples.back().u) return samples.back().t;
    const auto it = std::lower_bound(samples.begin(), samples.end(), u,
                                     [](const TangentSample& s, double v) { return s.u < v; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = hi.u > lo.u ? (u - lo.u) / (hi.u - lo.u) : 1.0;
    const Vec3 t = (1.0 - w) * lo.t + w * hi.t;
    return t.norm() > 0.0 ? Vec3(t.normalized()) : hi.t;
}

inline double max_deviation(const std::vector<std::vector<TangentSample>>& a,
                            const std::vector<std::vector<TangentSample>>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (const auto& s : a[k]) worst = std::max(worst, angle_between(s.t, tangent_at(b[k], s.u)));
    }
    return worst;
}

// Whole-path samples keyed by fractional arc length, for mismatched segmentations.
inline std::vector<std::vector<TangentSample>> global_tangent_samples(const Polyline3D& line) {
    std::vector<TangentSample> out;
    const double total = line.total_length();
    for (std::size_t i = 0; i < line.points.size(); ++i) out.push_back({line.arc_length[i] / total, line.tangents[i]});
    return {out};
}

} // namespace detail

/// Orientation deviation is the largest angle between tangents matched by
/// fractional arc length, segment by segment when both paths share the same
/// segmentation and over the whole path otherwise. Length deviation is the
/// absolute difference in total arc length.
inline PathMetrics path_metrics(const Polyline3D& reconstructed, const Polyline3D& ground_truth) {
    VINEBOT_REQUIRE(!reconstructed.empty() && !ground_truth.empty(), ErrorCode::InvalidArgument,
                    "path_metrics needs two non-empty polylines");
    VINEBOT_REQUIRE(reconstructed.total_length() > 0.0 && ground_truth.total_length() > 0.0,
                    ErrorCode::DegenerateGeometry, "arc-length alignment needs paths of non-zero length");
    PathMetrics m;
    m.length_dev = std::abs(reconstructed.total_length() - ground_truth.total_length());
    if (reconstructed.segment_count() == ground_truth.segment_count()) {
        const auto a = detail::segment_tangent_samples(reconstructed);
        const auto b = detail::segment_tangent_samples(ground_truth);
        m.max_orientation_dev = std::max(detail::max_deviation(a, b), detail::max_deviation(b, a));
    } else {
        const auto a = detail::global_tangent_samples(reconstructed);
        const auto b = detail::global_tangent_samples(ground_truth);
        m.max_orientation_dev = std::max(detail::max_deviation(a, b), detail::max_deviation(b, a));
    }
    return m;
}

} // namespace vinebot
