#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "sps_racing/history.hpp"
#include "sps_racing/kinematics.hpp"
#include "sps_racing/lattice.hpp"
#include "sps_racing/sps_rules.hpp"
#include "sps_racing/track.hpp"

namespace sps_racing {

class TrackingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps a complete history to the player's per-step lateral targets: the
/// round-r action holds on [r*T/M, (r+1)*T/M). A positive `delay` shifts the
/// player's actions that many steps later; before its first action takes
/// effect the target is `initial`.
LateralProfile strategy_profile(const History& h, Player player, const GameShape& shape,
                                int horizon, int delay = 0, double initial = 0.0);

struct TrackedTrajectory {
  std::vector<VehicleState> states;  // T + 1
  double max_deviation = 0.0;
  bool within_tolerance = true;
};

/// Follows the waypoints with the discrete kinematics. Throws
/// std::invalid_argument when consecutive waypoints are farther apart than
/// one step at v_max.
TrackedTrajectory track_lattice_path(const KinematicsConfig& kin,
                                     std::span<const Point2> waypoints,
                                     const VehicleState& start, double tolerance);

struct PlayerSolution {
  LatticePath path;
  TrackedTrajectory tracked;
  FrenetTrajectory frenet;  // from the tracked Cartesian states
  double progress = 0.0;    // d(T) - d(0)
};

struct GneResult {
  std::array<PlayerSolution, 2> players;  // indexed by Player
  bool converged = false;
  int iterations = 0;
  bool fallback_used = false;
  bool tracking_ok = true;
  double min_distance = 0.0;  // over the tracked trajectories

  const PlayerSolution& of(Player p) const { return players[index_of(p)]; }
};

enum class IbrWarmStart {
  /// Defender's trajectory starts as its best response with no opponent.
  kDefenderSolo,
  /// Defender's trajectory starts as a constant-speed lane-holding path.
  kLaneHolding,
};

struct PlayerSetup {
  VehicleState start;
  KinematicsConfig kinematics;  // v_max is per player
};

/// Solves the low-level game for any history from a fixed pair of starts.
/// Lattices are built once and reused across histories; solve() is const
/// and safe to call concurrently.
class GneSolver {
 public:
  GneSolver(const Track& track, const LowGameConfig& cfg, const GameShape& shape,
            const PlayerSetup& attacker, const PlayerSetup& defender,
            IbrWarmStart warm_start = IbrWarmStart::kDefenderSolo);

  GneResult solve(const History& h) const;

  const Lattice& lattice(Player p) const { return lattices_[index_of(p)]; }
  const Track& track() const { return *track_; }
  const LowGameConfig& config() const { return cfg_; }
  const GameShape& shape() const { return shape_; }

  /// Lattice path for `p`: DP best response, or braking fallback when the
  /// DP is infeasible. Second member reports the fallback.
  std::pair<LatticePath, bool> respond(Player p, const LateralProfile& profile,
                                       std::span<const Point2> opponent) const;

 private:
  LatticePath lane_holding(Player p) const;

  const Track* track_;
  LowGameConfig cfg_;
  GameShape shape_;
  std::array<PlayerSetup, 2> setups_;
  std::vector<Lattice> lattices_;
  IbrWarmStart warm_start_;
};

/// One-shot convenience wrapper around GneSolver.
GneResult solve_gnep(const Track& track, const LowGameConfig& cfg, const GameShape& shape,
                     const History& h, const PlayerSetup& attacker, const PlayerSetup& defender);

struct UtilityConfig {
  double beta = 1.1;
  double omega = 15.0;
  double reg = 0.1;  // per change of the attacker's action between rounds
};

/// Regularizer: reg coefficient times the number of round-to-round changes in
/// the attacker's actions.
double attacker_regularizer(const History& h, const GameShape& shape, double reg);

/// (u_A, u_D). The SPS term enters the defender's utility only when
/// `penalize_defender` is set.
std::pair<double, double> utilities(const FrenetTrajectory& attacker,
                                    const FrenetTrajectory& defender, const History& h,
                                    const GameShape& shape, const SpsConfig& sps,
                                    bool penalize_defender, const UtilityConfig& ucfg);

}  // namespace sps_racing
