#include "sps_racing/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sps_racing {
namespace {

constexpr double kStationTol = 1e-9;
constexpr double kTieTol = 1e-9;

Point2 left_normal(double heading) { return {-std::sin(heading), std::cos(heading)}; }

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }

Point2 point_on(const Segment& s, double t) {
  const Point2 origin{s.start.x, s.start.y};
  if (s.kind == SegmentKind::kLine) return origin + t * unit_vector(s.start.heading);
  const double inv_k = 1.0 / s.curvature;
  const Point2 center = origin + inv_k * left_normal(s.start.heading);
  return center - inv_k * left_normal(s.start.heading + s.curvature * t);
}

double heading_on(const Segment& s, double t) {
  if (s.kind == SegmentKind::kLine) return s.start.heading;
  return s.start.heading + s.curvature * t;
}

struct Candidate {
  double distance;
  double t_raw;  // unclamped arc-length parameter
  double t;      // clamped to [0, length]
  double e;
};

Candidate project_onto(const Segment& s, Point2 p) {
  const Point2 origin{s.start.x, s.start.y};
  if (s.kind == SegmentKind::kLine) {
    const Point2 u = unit_vector(s.start.heading);
    const double t_raw = dot(p - origin, u);
    const double t = std::clamp(t_raw, 0.0, s.length);
    const Point2 q = point_on(s, t);
    return {distance(p, q), t_raw, t, cross(u, p - q)};
  }
  const double inv_k = 1.0 / s.curvature;
  const Point2 center = origin + inv_k * left_normal(s.start.heading);
  const Point2 r0 = origin - center;
  const Point2 rp = p - center;
  if (norm(rp) < 1e-12) {
    throw AmbiguousProjection("point coincides with an arc center");
  }
  const double phi = std::atan2(cross(r0, rp), dot(r0, rp));
  double t_raw = phi / s.curvature;
  const double full_turn = 2.0 * std::numbers::pi / std::abs(s.curvature);
  if (t_raw < 0.0 && t_raw + full_turn <= s.length) t_raw += full_turn;
  const double t = std::clamp(t_raw, 0.0, s.length);
  const Point2 q = point_on(s, t);
  const Point2 tangent = unit_vector(heading_on(s, t));
  return {distance(p, q), t_raw, t, cross(tangent, p - q)};
}

}  // namespace

Track::Track(Pose2 start, const std::vector<SegmentSpec>& specs, double track_width,
             double car_width)
    : track_width_(track_width), car_width_(car_width) {
  if (!(car_width > 0.0) || !(track_width > car_width)) {
    throw TrackError("track requires track_width > car_width > 0");
  }
  if (specs.empty()) throw TrackError("track has no segments");
  Pose2 pose = start;
  for (const SegmentSpec& spec : specs) {
    if (!(spec.length > 0.0)) throw TrackError("segment length must be positive");
    const double k = spec.kind == SegmentKind::kArc ? spec.curvature : 0.0;
    if (spec.kind == SegmentKind::kArc && k == 0.0) {
      throw TrackError("arc segment needs nonzero curvature");
    }
    Segment seg{spec.kind, pose, spec.length, k, length_};
    const Point2 end = point_on(seg, spec.length);
    pose = Pose2{end.x, end.y, heading_on(seg, spec.length)};
    segments_.push_back(seg);
    length_ += spec.length;
  }
}

Track Track::straight(Point2 start, double heading, double length, double track_width,
                      double car_width) {
  return Track(Pose2{start.x, start.y, heading}, {SegmentSpec{SegmentKind::kLine, length, 0.0}},
               track_width, car_width);
}

const Segment& Track::segment_at(double d) const {
  if (d < -kStationTol || d > length_ + kStationTol) {
    throw OutOfRange("station " + std::to_string(d) + " outside [0, " +
                     std::to_string(length_) + "]");
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), d,
                             [](double x, const Segment& s) { return x < s.start_station; });
  if (it != segments_.begin()) --it;
  return *it;
}

Projection Track::to_frenet(Point2 p) const {
  double best_dist = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  Candidate best{};
  std::vector<Candidate> candidates;
  candidates.reserve(segments_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    candidates.push_back(project_onto(segments_[i], p));
    if (candidates.back().distance < best_dist) {
      best_dist = candidates.back().distance;
      best_idx = i;
      best = candidates.back();
    }
  }
  const double best_station = segments_[best_idx].start_station + best.t;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i == best_idx) continue;
    const double station = segments_[i].start_station + candidates[i].t;
    if (candidates[i].distance <= best_dist + kTieTol &&
        std::abs(station - best_station) > 1e-6) {
      throw AmbiguousProjection("point is equidistant from stations " +
                                std::to_string(best_station) + " and " +
                                std::to_string(station));
    }
  }
  const Segment& seg = segments_[best_idx];
  if ((best_idx == 0 && best.t_raw < -kStationTol) ||
      (best_idx + 1 == segments_.size() && best.t_raw > seg.length + kStationTol)) {
    throw OutOfRange("point projects beyond the end of the track");
  }
  Projection out{{best_station, best.e}, false};
  out.off_track = std::abs(best.e) > 0.5 * track_width_;
  return out;
}

std::pair<Point2, double> Track::from_frenet(FrenetPose f) const {
  const Segment& seg = segment_at(f.d);
  const double t = std::clamp(f.d - seg.start_station, 0.0, seg.length);
  const double heading = heading_on(seg, t);
  const Point2 center = point_on(seg, t);
  return {center + f.e * left_normal(heading), wrap_angle(heading)};
}

double Track::tangent_angle(double d) const {
  const Segment& seg = segment_at(d);
  return wrap_angle(heading_on(seg, std::clamp(d - seg.start_station, 0.0, seg.length)));
}

double Track::curvature_at(double d) const { return segment_at(d).curvature; }

double Track::max_abs_curvature() const {
  double k = 0.0;
  for (const Segment& s : segments_) k = std::max(k, std::abs(s.curvature));
  return k;
}

}  // namespace sps_racing
