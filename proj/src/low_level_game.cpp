#include "sps_racing/low_level_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sps_racing {

LateralProfile strategy_profile(const History& h, Player player, const GameShape& shape,
                                int horizon, int delay, double initial) {
  if (!h.complete(shape)) throw IncompleteHistory("strategy profile needs a complete history");
  if (shape.rounds < 1 || horizon % shape.rounds != 0) {
    throw ConfigError("horizon " + std::to_string(horizon) + " is not divisible by " +
                      std::to_string(shape.rounds) + " rounds");
  }
  const std::vector<double> actions = h.displacements_of(player, shape);
  const int per_round = horizon / shape.rounds;
  if (delay < 0 || delay >= per_round) {
    throw ConfigError("delay must lie in [0, T/M)");
  }
  LateralProfile profile(horizon);
  for (int tau = 0; tau < horizon; ++tau) {
    profile[tau] = tau < delay ? initial : actions[(tau - delay) / per_round];
  }
  return profile;
}

namespace {

// Speed whose next step covers `dist` while turning by `turn`: the rolling
// distance with heading change turn is sqrt((tau v)^2 - (b sin turn)^2) +
// b (1 - cos turn).
double speed_for(const KinematicsConfig& kin, double dist, double turn) {
  const double b = kin.wheelbase;
  const double along = dist - b * (1.0 - std::cos(turn));
  const double side = b * std::sin(turn);
  return std::sqrt(along * along + side * side) / kin.tau_s;
}

}  // namespace

TrackedTrajectory track_lattice_path(const KinematicsConfig& kin,
                                     std::span<const Point2> waypoints,
                                     const VehicleState& start, double tolerance) {
  const std::size_t n = waypoints.size();
  if (n < 2) throw std::invalid_argument("lattice path needs at least two waypoints");
  const double reach = kin.v_max * kin.tau_s + 1e-6;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (distance(waypoints[i], waypoints[i + 1]) > reach) {
      throw std::invalid_argument("waypoints " + std::to_string(i) + " and " +
                                  std::to_string(i + 1) + " are farther apart than one step");
    }
  }

  TrackedTrajectory out;
  out.states.reserve(n);
  out.states.push_back(start);
  auto heading_between = [&](std::size_t i) {
    return heading_of(waypoints[i + 1] - waypoints[i]);
  };

  for (std::size_t tau = 0; tau + 1 < n; ++tau) {
    const VehicleState& s = out.states.back();
    // The control at tau fixes where the car lands at tau+2: aim the
    // post-step heading there and pick the speed that covers the distance.
    Point2 aim;
    if (tau + 2 < n) {
      aim = waypoints[tau + 2];
    } else {
      aim = waypoints[tau + 1] + (waypoints[tau + 1] - waypoints[tau]);
    }
    ControlInput u = aim_step(kin, s, aim, s.v);
    const Point2 landed =
        s.position() + rolling_distance(kin, s.v, u.steer) * unit_vector(s.theta);
    double target_v;
    if (tau + 2 < n) {
      const double turn = tau + 3 < n ? wrap_angle(heading_between(tau + 2) -
                                                   heading_of(waypoints[tau + 2] - landed))
                                      : 0.0;
      target_v = speed_for(kin, distance(landed, waypoints[tau + 2]), turn);
    } else {
      target_v = distance(waypoints[tau], waypoints[tau + 1]) / kin.tau_s;
    }
    target_v = std::clamp(target_v, 0.0, kin.v_max);
    u.accel = (target_v - s.v) / kin.tau_s;
    const StepResult r = step(kin, s, u);
    out.states.push_back(r.state);
    out.max_deviation =
        std::max(out.max_deviation, distance(r.state.position(), waypoints[tau + 1]));
  }
  out.within_tolerance = out.max_deviation <= tolerance;
  return out;
}

GneSolver::GneSolver(const Track& track, const LowGameConfig& cfg, const GameShape& shape,
                     const PlayerSetup& attacker, const PlayerSetup& defender,
                     IbrWarmStart warm_start)
    : track_(&track), cfg_(cfg), shape_(shape), setups_{attacker, defender},
      warm_start_(warm_start) {
  cfg_.validate();
  if (shape_.rounds < 1 || cfg_.horizon % shape_.rounds != 0) {
    throw ConfigError("horizon must be divisible by the number of rounds");
  }
  for (PlayerSetup& s : setups_) s.kinematics.tau_s = cfg_.tau_s;
  const double gap = distance(attacker.start.position(), defender.start.position());
  if (!(gap > cfg_.d_safe)) throw Infeasible("start states closer than d_safe");
  lattices_.reserve(2);
  for (const PlayerSetup& s : setups_) {
    lattices_.emplace_back(track, cfg_, s.start, s.kinematics.v_max);
  }
}

std::pair<LatticePath, bool> GneSolver::respond(Player p, const LateralProfile& profile,
                                                std::span<const Point2> opponent) const {
  const Lattice& lat = lattice(p);
  try {
    return {lat.best_response(profile, opponent), false};
  } catch (const Infeasible&) {
    return {lat.braking_path(profile, opponent), true};
  }
}

LatticePath GneSolver::lane_holding(Player p) const {
  const Lattice& lat = lattice(p);
  const VehicleState& s = setups_[index_of(p)].start;
  LatticePath path;
  path.waypoints.push_back(lat.start());
  path.waypoints.push_back(lat.first_step());
  const double e = lat.first_step().frenet.e;
  const double step_len = cfg_.tau_s * s.v;
  for (int tau = 2; tau <= cfg_.horizon; ++tau) {
    const double d = std::min(lat.first_step().frenet.d + (tau - 1) * step_len, track_->length());
    path.waypoints.push_back(Waypoint{{tau, -1, -1}, {d, e}, track_->from_frenet({d, e}).first});
  }
  return path;
}

namespace {

bool same_path(const LatticePath& a, const LatticePath& b, double tolerance) {
  if (tolerance <= 0.0) return a.same_states(b);
  if (a.waypoints.size() != b.waypoints.size()) return false;
  for (std::size_t i = 0; i < a.waypoints.size(); ++i) {
    if (distance(a.waypoints[i].point, b.waypoints[i].point) > tolerance) return false;
  }
  return true;
}

}  // namespace

GneResult GneSolver::solve(const History& h) const {
  auto profile_of = [&](Player p) {
    const int delay = p == shape_.leader ? 0 : cfg_.follower_delay;
    return strategy_profile(h, p, shape_, cfg_.horizon, delay,
                            lattice(p).start().frenet.e);
  };
  const LateralProfile profile_a = profile_of(Player::kAttacker);
  const LateralProfile profile_d = profile_of(Player::kDefender);

  GneResult result;
  std::pair<LatticePath, bool> defender;
  if (warm_start_ == IbrWarmStart::kDefenderSolo) {
    defender = respond(Player::kDefender, profile_d, {});
  } else {
    defender = {lane_holding(Player::kDefender), false};
  }
  std::pair<LatticePath, bool> attacker;
  bool have_attacker = false;

  for (int it = 1; it <= cfg_.ibr_max_iters; ++it) {
    const std::vector<Point2> d_points = defender.first.points();
    auto a_new = respond(Player::kAttacker, profile_a, d_points);
    const std::vector<Point2> a_points = a_new.first.points();
    auto d_new = respond(Player::kDefender, profile_d, a_points);
    const bool stable = have_attacker && same_path(a_new.first, attacker.first, cfg_.ibr_tolerance) &&
                        same_path(d_new.first, defender.first, cfg_.ibr_tolerance);
    attacker = std::move(a_new);
    defender = std::move(d_new);
    have_attacker = true;
    result.iterations = it;
    if (stable) {
      result.converged = true;
      break;
    }
  }
  result.fallback_used = attacker.second || defender.second;

  const std::array<const LatticePath*, 2> paths{&attacker.first, &defender.first};
  for (int i = 0; i < 2; ++i) {
    PlayerSolution& sol = result.players[i];
    sol.path = *paths[i];
    const std::vector<Point2> pts = sol.path.points();
    sol.tracked = track_lattice_path(setups_[i].kinematics, pts, setups_[i].start,
                                     cfg_.tracking_tolerance);
    result.tracking_ok = result.tracking_ok && sol.tracked.within_tolerance;
    sol.frenet.reserve(sol.tracked.states.size());
    for (const VehicleState& s : sol.tracked.states) {
      const FrenetPose f = track_->to_frenet(s.position()).pose;
      sol.frenet.push_back({f.d, f.e, s.v});
    }
    sol.progress = sol.frenet.back().d - sol.frenet.front().d;
  }

  result.min_distance = std::numeric_limits<double>::infinity();
  const auto& sa = result.players[0].tracked.states;
  const auto& sd = result.players[1].tracked.states;
  for (std::size_t t = 0; t < sa.size() && t < sd.size(); ++t) {
    result.min_distance = std::min(result.min_distance, distance(sa[t].position(), sd[t].position()));
  }
  return result;
}

GneResult solve_gnep(const Track& track, const LowGameConfig& cfg, const GameShape& shape,
                     const History& h, const PlayerSetup& attacker, const PlayerSetup& defender) {
  return GneSolver(track, cfg, shape, attacker, defender).solve(h);
}

double attacker_regularizer(const History& h, const GameShape& shape, double reg) {
  const std::vector<std::uint8_t> acts = h.actions_of(Player::kAttacker, shape);
  int changes = 0;
  for (std::size_t i = 1; i < acts.size(); ++i) changes += acts[i] != acts[i - 1];
  return reg * changes;
}

std::pair<double, double> utilities(const FrenetTrajectory& attacker,
                                    const FrenetTrajectory& defender, const History& h,
                                    const GameShape& shape, const SpsConfig& sps,
                                    bool penalize_defender, const UtilityConfig& ucfg) {
  if (attacker.empty() || defender.empty()) {
    throw std::invalid_argument("utilities need non-empty trajectories");
  }
  const double prog_a = attacker.back().d - attacker.front().d;
  const double prog_d = defender.back().d - defender.front().d;
  const double u_a = ucfg.beta * prog_a - prog_d - attacker_regularizer(h, shape, ucfg.reg);
  double u_d = ucfg.beta * prog_d - prog_a;
  if (penalize_defender && sps_penalty(defender, attacker, sps)) u_d -= ucfg.omega;
  return {u_a, u_d};
}

}  // namespace sps_racing
