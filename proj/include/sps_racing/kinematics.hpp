#pragma once

#include <optional>
#include <stdexcept>

#include "sps_racing/geometry.hpp"

namespace sps_racing {

/// The steering input leaves the arcsin/sqrt domain of the step map.
class DomainViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Unreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VehicleState {
  double px = 0.0;
  double py = 0.0;
  double theta = 0.0;
  double v = 0.0;

  Point2 position() const { return {px, py}; }
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct ControlInput {
  double accel = 0.0;
  double steer = 0.0;
};

struct KinematicsConfig {
  double tau_s = 0.4;
  double wheelbase = 2.5;
  double v_max = 12.0;
  double steer_limit = 0.6;
};

struct StepResult {
  VehicleState state;
  bool speed_clamped = false;
};

/// Rear-axle rolling distance over one step.
double rolling_distance(const KinematicsConfig& cfg, double v, double steer);

/// Largest |steer| accepted at speed `v`: the configured cap, tightened so
/// that tau_s * v * |sin(steer)| stays strictly below the wheelbase.
double steer_bound(const KinematicsConfig& cfg, double v);

/// One step of the discrete kinematics. The new speed is clamped to
/// [0, v_max]; throws DomainViolation when tau_s * v * |sin(steer)| > b.
StepResult step(const KinematicsConfig& cfg, const VehicleState& s, const ControlInput& u);

/// One-step inverse: the position after a step always lies on the ray along
/// the current heading, at a distance fixed by v and |steer|. Solves |steer|
/// from that distance and the acceleration from `target_v`. The sign of the
/// steering follows `target_heading` when given, otherwise it is positive.
/// Throws Unreachable when the target is off the heading ray or outside the
/// reachable distance band.
ControlInput inverse_step(const KinematicsConfig& cfg, const VehicleState& s, Point2 target,
                          double target_v, std::optional<double> target_heading = {});

/// Look-ahead control used by trajectory tracking: picks the steering that
/// points the post-step heading at `aim` (seen from the post-step position)
/// and the acceleration that reaches `target_v`, both within bounds.
ControlInput aim_step(const KinematicsConfig& cfg, const VehicleState& s, Point2 aim,
                      double target_v);

}  // namespace sps_racing
