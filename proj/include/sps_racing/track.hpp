#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sps_racing/geometry.hpp"

namespace sps_racing {

class TrackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two centerline segments claim the same point with different stations.
class AmbiguousProjection : public TrackError {
 public:
  using TrackError::TrackError;
};

class OutOfRange : public TrackError {
 public:
  using TrackError::TrackError;
};

enum class SegmentKind { kLine, kArc };

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

/// Segment description as it appears in a scenario config. Lines ignore
/// `curvature`; arcs turn left for positive curvature.
struct SegmentSpec {
  SegmentKind kind = SegmentKind::kLine;
  double length = 0.0;
  double curvature = 0.0;
};

struct Segment {
  SegmentKind kind;
  Pose2 start;
  double length;
  double curvature;
  double start_station;
};

/// Station `d` along the centerline and signed lateral offset `e` (left
/// positive).
struct FrenetPose {
  double d = 0.0;
  double e = 0.0;
};

struct Projection {
  FrenetPose pose;
  bool off_track = false;
};

/// Piecewise line/arc centerline with constant width. Immutable once built.
class Track {
 public:
  Track(Pose2 start, const std::vector<SegmentSpec>& specs, double track_width,
        double car_width);

  /// Straight track along `heading` starting at `start`.
  static Track straight(Point2 start, double heading, double length, double track_width,
                        double car_width);

  /// Projects `p` onto the closest centerline point. Throws AmbiguousProjection
  /// when distinct stations are equally close and OutOfRange when `p` lies
  /// beyond either end of the track.
  Projection to_frenet(Point2 p) const;

  /// Point at `f` and the centerline heading at `f.d`.
  std::pair<Point2, double> from_frenet(FrenetPose f) const;

  double tangent_angle(double d) const;

  /// Signed curvature at station `d`.
  double curvature_at(double d) const;

  double length() const { return length_; }
  double track_width() const { return track_width_; }
  double car_width() const { return car_width_; }
  /// Largest |e| that keeps the whole car body on the track.
  double lateral_limit() const { return 0.5 * (track_width_ - car_width_); }
  double max_abs_curvature() const;
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  const Segment& segment_at(double d) const;

  std::vector<Segment> segments_;
  double length_ = 0.0;
  double track_width_;
  double car_width_;
};

}  // namespace sps_racing
