#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sps_racing/low_level_game.hpp"

using namespace sps_racing;

namespace {

const Track& road() {
  static const Track t = Track::straight({0.0, 0.0}, 0.0, 150.0, 5.8, 1.8);
  return t;
}

PlayerSetup setup_at(double x, double y, double v) {
  PlayerSetup s;
  s.start = {x, y, 0.0, v};
  s.kinematics.v_max = v;
  return s;
}

void check_path_feasible(const LatticePath& path, const Track& track, const LowGameConfig& cfg,
                         double v_max) {
  for (std::size_t tau = 1; tau + 1 < path.waypoints.size(); ++tau) {
    const Point2 a = path.waypoints[tau].point, b = path.waypoints[tau + 1].point;
    CHECK(distance(a, b) <= v_max * cfg.tau_s + 1e-9);
    if (distance(a, b) > 0.0) {
      const double xi = track.tangent_angle(track.to_frenet(0.5 * (a + b)).pose.d);
      CHECK(std::abs(wrap_angle(heading_of(b - a) - xi)) <= cfg.gamma_max);
    }
  }
}

}  // namespace

TEST_CASE("tracking reproduces a straight constant-speed path") {
  const KinematicsConfig kin;
  std::vector<Point2> wps;
  for (int tau = 0; tau <= 15; ++tau) wps.push_back({4.0 * tau, 0.0});
  const TrackedTrajectory tr = track_lattice_path(kin, wps, {0.0, 0.0, 0.0, 10.0}, 0.2);
  REQUIRE(tr.states.size() == 16);
  CHECK(tr.max_deviation < 1e-9);
  CHECK(tr.within_tolerance);
  for (const VehicleState& s : tr.states) {
    CHECK(s.theta == 0.0);
    CHECK(s.v == doctest::Approx(10.0));
  }
}

TEST_CASE("tracking a planned lane change stays within 0.2 m") {
  const LowGameConfig cfg;
  const Lattice lat(road(), cfg, {0.0, -1.0, 0.0, 12.0}, 12.0);
  LateralProfile prof(15, -1.0);
  for (int tau = 5; tau < 15; ++tau) prof[tau] = 1.0;
  const LatticePath path = lat.best_response(prof, {});
  CHECK(path.waypoints.back().frenet.e == doctest::Approx(1.0));
  KinematicsConfig kin;
  const TrackedTrajectory tr = track_lattice_path(kin, path.points(), {0.0, -1.0, 0.0, 12.0}, 0.2);
  CHECK(tr.max_deviation <= 0.2);
  for (std::size_t i = 1; i < tr.states.size(); ++i) {
    // The tracked states follow the step map exactly.
    CHECK(tr.states[i].v <= kin.v_max);
  }
}

TEST_CASE("tracking rejects waypoints farther than one step") {
  const KinematicsConfig kin;
  const std::vector<Point2> wps{{0.0, 0.0}, {4.0, 0.0}, {9.0, 0.0}};
  CHECK_THROWS_AS(track_lattice_path(kin, wps, {0.0, 0.0, 0.0, 10.0}, 0.2), std::invalid_argument);
}

TEST_CASE("decoupled players converge quickly to their solo optima") {
  const LowGameConfig cfg;
  const GameShape shape;
  const PlayerSetup a = setup_at(0.0, -2.0, 11.0);
  const PlayerSetup d = setup_at(60.0, 2.0, 10.0);
  const History h({1, 0, 1, 0, 1, 0});  // D keeps +1, A keeps -1
  const GneSolver solver(road(), cfg, shape, a, d);
  const GneResult r = solver.solve(h);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK_FALSE(r.fallback_used);
  CHECK(r.tracking_ok);
  const LatticePath solo_a =
      solver.lattice(Player::kAttacker)
          .best_response(strategy_profile(h, Player::kAttacker, shape, 15, 0, -2.0), {});
  CHECK(r.of(Player::kAttacker).path.same_states(solo_a));
  CHECK(r.of(Player::kAttacker).progress == doctest::Approx(15 * 4.4).epsilon(0.02));
}

TEST_CASE("lane conflict keeps the safety distance") {
  const LowGameConfig cfg;
  const GameShape shape;
  const PlayerSetup a = setup_at(0.0, 0.0, 12.0);
  const PlayerSetup d = setup_at(8.0, 0.0, 10.0);
  for (const History& h : oracle::all_histories(shape)) {
    const GneResult r = solve_gnep(road(), cfg, shape, h, a, d);
    CHECK(r.min_distance >= cfg.d_safe);
    if (!r.fallback_used) {
      check_path_feasible(r.of(Player::kAttacker).path, road(), cfg, 12.0);
      check_path_feasible(r.of(Player::kDefender).path, road(), cfg, 10.0);
    }
    for (const PlayerSolution& s : r.players) {
      CHECK(s.frenet.size() == 16);
      CHECK(s.tracked.max_deviation <= cfg.tracking_tolerance);
    }
  }
}

TEST_CASE("solver is deterministic") {
  const LowGameConfig cfg;
  const GameShape shape;
  const History h({0, 1, 1, 0, 0, 1});
  const PlayerSetup a = setup_at(0.0, 1.0, 12.0);
  const PlayerSetup d = setup_at(7.0, -1.0, 10.0);
  const GneResult r1 = solve_gnep(road(), cfg, shape, h, a, d);
  const GneResult r2 = solve_gnep(road(), cfg, shape, h, a, d);
  for (int i = 0; i < 2; ++i) {
    CHECK(r1.players[i].path.same_states(r2.players[i].path));
    CHECK(r1.players[i].tracked.states == r2.players[i].tracked.states);
  }
  CHECK(r1.iterations == r2.iterations);
}

TEST_CASE("converged small games admit no profitable unilateral deviation") {
  std::mt19937_64 rng(17);
  int converged = 0;
  double worst = 0.0;
  for (int i = 0; i < 60 && converged < 25; ++i) {
    const oracle::GneCertificate c = oracle::random_gne_certificate(rng);
    if (!c.converged) continue;
    ++converged;
    CHECK(c.certified);
    worst = std::max(worst, c.worst_gain);
  }
  CHECK(converged >= 20);
  CHECK(worst <= 1e-9);
}

TEST_CASE("start states too close are rejected") {
  const LowGameConfig cfg;
  CHECK_THROWS_AS(GneSolver(road(), cfg, GameShape{}, setup_at(0, 0, 10), setup_at(1, 0, 10)),
                  Infeasible);
  LowGameConfig odd = cfg;
  odd.horizon = 16;
  CHECK_THROWS_AS(GneSolver(road(), odd, GameShape{}, setup_at(0, 0, 10), setup_at(9, 0, 10)),
                  ConfigError);
}

TEST_CASE("utilities") {
  const GameShape shape;
  const History steady({0, 1, 0, 1, 0, 1});
  FrenetTrajectory a{{0.0, 0.0, 12.0}, {72.0, 0.0, 12.0}};
  FrenetTrajectory d{{10.0, 0.0, 10.0}, {70.0, 0.0, 10.0}};
  SpsConfig sps;
  const UtilityConfig ucfg;
  auto [ua, ud] = utilities(a, d, steady, shape, sps, true, ucfg);
  CHECK(ua == doctest::Approx(19.2));
  CHECK(ud == doctest::Approx(-6.0));

  // Defender weaves in front: block flags 0 1 0 1.
  FrenetTrajectory a4{{0, 0, 12}, {10, 0, 12}, {20, 0, 12}, {72, 0, 12}};
  FrenetTrajectory d4{{20, 3, 10}, {25, 0, 10}, {30, 3, 10}, {80, 0, 10}};
  auto [ua4, ud4] = utilities(a4, d4, steady, shape, sps, true, ucfg);
  CHECK(ua4 == doctest::Approx(19.2));
  CHECK(ud4 == doctest::Approx(-21.0));
  CHECK(utilities(a4, d4, steady, shape, sps, false, ucfg).second == doctest::Approx(-6.0));

  // Equal progress, beta = 1: zero before the regularizer.
  UtilityConfig flat = ucfg;
  flat.beta = 1.0;
  const History weaving({0, 0, 0, 1, 0, 0});  // A: -1 +1 -1
  auto [ue, de] = utilities(d, d, weaving, shape, sps, false, flat);
  CHECK(de == 0.0);
  CHECK(ue == doctest::Approx(-0.2));
  CHECK(attacker_regularizer(weaving, shape, 0.1) == doctest::Approx(0.2));
  CHECK(attacker_regularizer(steady, shape, 0.1) == 0.0);
  CHECK_THROWS_AS(utilities({}, d, steady, shape, sps, false, ucfg), std::invalid_argument);
}
