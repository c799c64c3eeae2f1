#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sps_racing/geometry.hpp"
#include "sps_racing/kinematics.hpp"
#include "sps_racing/track.hpp"

namespace sps_racing {

class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LowGameConfig {
  int horizon = 15;  // T
  double tau_s = 0.4;
  double w1 = 100.0;
  double gamma_max = 0.16;
  double d_safe = 1.8;
  /// Extra clearance the planner keeps on top of d_safe so that tracking
  /// deviations cannot eat into the safety distance.
  double collision_margin = 0.15;
  double d_res = 0.4;
  double e_res = 0.2;
  int ibr_max_iters = 20;
  /// Consecutive IBR iterates closer than this (max waypoint shift, meters)
  /// count as converged; zero means identical lattice paths.
  double ibr_tolerance = 0.0;
  double tracking_tolerance = 0.2;
  /// Steps by which the second mover's intention lags the first mover's
  /// within each round.
  int follower_delay = 0;

  void validate() const;
};

/// Waypoint of a lattice path. Stages 0 (start) and 1 (the step fixed by the
/// initial speed and heading) are off-grid and carry index -1.
struct LatticeState {
  int tau = 0;
  int d_index = -1;
  int e_index = -1;
  friend bool operator==(const LatticeState&, const LatticeState&) = default;
};

struct Waypoint {
  LatticeState state;
  FrenetPose frenet;
  Point2 point;
};

struct LatticePath {
  std::vector<Waypoint> waypoints;  // horizon + 1 entries
  double cost = 0.0;
  /// True when no collision-free lattice path existed and the braking
  /// fallback produced this path.
  bool fallback = false;

  std::vector<Point2> points() const;
  bool same_states(const LatticePath& other) const;
};

/// Per-timestep lateral targets e*(tau), tau in [0, T).
using LateralProfile = std::vector<double>;

/// Discretized (station, lateral) grid for one player, anchored at the
/// station reached after the fixed first step. Transition geometry is
/// stage-independent and precomputed once, so the lattice can be reused by
/// every best response of the same player from the same start.
class Lattice {
 public:
  Lattice(const Track& track, const LowGameConfig& cfg, const VehicleState& start, double v_max);

  int horizon() const { return cfg_.horizon; }
  int lateral_levels() const { return n_lat_; }
  int max_increment() const { return max_inc_; }
  int lateral_window() const { return lat_window_; }
  double v_max() const { return v_max_; }
  double lateral_value(int j) const;
  double station_value(int k) const { return anchor_station_ + k * cfg_.d_res; }
  const Waypoint& start() const { return start_; }
  const Waypoint& first_step() const { return first_; }
  /// Grid point at (k, j) if it lies on the track.
  std::optional<Point2> grid_point(int k, int j) const;

  /// Speed term of a transition between two points, or nullopt when the
  /// displacement bound or heading bound is violated.
  std::optional<double> transition_cost(Point2 from, Point2 to) const;

  /// Exact optimum of the discretized best-response problem against the
  /// opponent's positions (one per timestep, or empty for no opponent).
  /// Throws Infeasible when no collision-free path exists.
  LatticePath best_response(const LateralProfile& profile, std::span<const Point2> opponent) const;

  /// Hold the current lane and advance as far as collision-free each step.
  LatticePath braking_path(const LateralProfile& profile, std::span<const Point2> opponent) const;

  /// Objective of an arbitrary path (same sum the DP minimizes); nullopt if
  /// any constraint is violated.
  std::optional<double> path_objective(const std::vector<Waypoint>& path,
                                       const LateralProfile& profile,
                                       std::span<const Point2> opponent) const;

  Waypoint make_waypoint(int tau, int k, int j) const;
  bool collision_free(Point2 p, int tau, std::span<const Point2> opponent) const;

 private:
  double table_cost(int k, int dk, int j, int dj) const;
  void build_tables();

  const Track* track_;
  LowGameConfig cfg_;
  double v_max_;
  double anchor_station_;
  int n_lat_;
  int max_inc_;
  int lat_window_;
  int max_k_;
  Waypoint start_;
  Waypoint first_;
  std::vector<Point2> grid_points_;
  std::vector<char> grid_valid_;
  std::vector<double> step_cost_;  // NaN marks an infeasible transition
  std::vector<double> first_cost_;  // stage 1 -> (k, j), NaN if infeasible
};

/// Convenience wrapper: builds a lattice for `start` and solves
/// one best response against a Frenet opponent trajectory (may be empty).
LatticePath best_response_dp(const Track& track, const LowGameConfig& cfg,
                             const LateralProfile& profile,
                             const std::vector<FrenetPose>& opponent, const VehicleState& start,
                             double v_max);

}  // namespace sps_racing
