#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sps_racing/lattice.hpp"

using namespace sps_racing;

TEST_CASE("free road holds the center and drives at v_max") {
  const Track track = Track::straight({0.0, 0.0}, 0.0, 120.0, 5.8, 1.8);
  const LowGameConfig cfg;
  const Lattice lat(track, cfg, {0.0, 0.0, 0.0, 12.0}, 12.0);
  CHECK(lat.lateral_levels() == 21);
  CHECK(lat.max_increment() == 12);
  CHECK(lat.lateral_value(10) == 0.0);

  const LatticePath path = lat.best_response(LateralProfile(15, 0.0), {});
  REQUIRE(path.waypoints.size() == 16);
  CHECK_FALSE(path.fallback);
  for (int tau = 0; tau <= 15; ++tau) {
    const Waypoint& w = path.waypoints[tau];
    CHECK(w.frenet.e == 0.0);
    CHECK(w.frenet.d == doctest::Approx(4.8 * tau));
  }
  CHECK(path.cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("grid and transitions") {
  const Track track = Track::straight({0.0, 0.0}, 0.0, 60.0, 5.8, 1.8);
  const LowGameConfig cfg;
  const Lattice lat(track, cfg, {0.0, 0.0, 0.0, 10.0}, 12.0);
  CHECK(lat.first_step().point.x == doctest::Approx(4.0));
  CHECK(lat.station_value(0) == doctest::Approx(4.0));
  CHECK(lat.station_value(3) == doctest::Approx(5.2));
  CHECK_FALSE(lat.grid_point(0, 21));
  CHECK_FALSE(lat.grid_point(-1, 0));

  // Straight move at 10 m/s: (10 - 12)^2.
  const auto c = lat.transition_cost({0.0, 0.0}, {4.0, 0.0});
  REQUIRE(c);
  CHECK(*c == doctest::Approx(4.0));
  CHECK_FALSE(lat.transition_cost({0.0, 0.0}, {5.0, 0.0}));   // beyond v_max * tau_s
  CHECK_FALSE(lat.transition_cost({0.0, 0.0}, {4.0, 1.0}));   // heading 0.245 > 0.16
  CHECK(lat.transition_cost({0.0, 0.0}, {4.0, 0.6}));         // heading 0.149
  CHECK(*lat.transition_cost({1.0, 1.0}, {1.0, 1.0}) == doctest::Approx(144.0));
}

TEST_CASE("dynamic program matches exhaustive search") {
  std::mt19937_64 rng(99);
  int solved = 0, infeasible = 0, with_opponent = 0;
  for (int i = 0; i < 150; ++i) {
    const oracle::DpInstance inst = oracle::random_dp_instance(rng);
    const Lattice lat(inst.track, inst.cfg, inst.start, inst.v_max);
    const oracle::SmallLattice brute(inst.track, inst.cfg, inst.start, inst.v_max);
    CHECK(lat.lateral_levels() == brute.levels());
    const auto best = brute.best(inst.profile, inst.opponent);
    if (!best) {
      CHECK_THROWS_AS(lat.best_response(inst.profile, inst.opponent), Infeasible);
      ++infeasible;
      continue;
    }
    const LatticePath path = lat.best_response(inst.profile, inst.opponent);
    CHECK(path.cost == *best);
    const auto replay = brute.cost(oracle::decision_nodes(path), inst.profile, inst.opponent);
    REQUIRE(replay);
    CHECK(*replay == path.cost);
    const auto objective = lat.path_objective(path.waypoints, inst.profile, inst.opponent);
    REQUIRE(objective);
    CHECK(*objective == doctest::Approx(path.cost).epsilon(1e-12));
    ++solved;
    with_opponent += !inst.opponent.empty();
  }
  CHECK(solved >= 100);
  CHECK(with_opponent >= 20);
  MESSAGE(solved << " solved, " << infeasible << " infeasible");
}

TEST_CASE("opponent ahead in lane forces a lane change or braking") {
  const Track track = Track::straight({0.0, 0.0}, 0.0, 120.0, 5.8, 1.8);
  const LowGameConfig cfg;
  const Lattice lat(track, cfg, {0.0, 0.0, 0.0, 12.0}, 12.0);
  std::vector<Point2> slow;
  for (int tau = 0; tau <= 15; ++tau) slow.push_back({8.0 + 2.0 * tau, 0.0});
  const LatticePath path = lat.best_response(LateralProfile(15, 0.0), slow);
  for (int tau = 1; tau <= 15; ++tau) {
    CHECK(distance(path.waypoints[tau].point, slow[tau]) > cfg.d_safe + cfg.collision_margin);
  }
}

TEST_CASE("braking fallback") {
  const Track track = Track::straight({0.0, 0.0}, 0.0, 120.0, 5.8, 1.8);
  const LowGameConfig cfg;
  const Lattice lat(track, cfg, {0.0, 0.0, 0.0, 12.0}, 12.0);
  // An opponent sitting on the first step makes every path infeasible.
  std::vector<Point2> wall(16, Point2{4.8, 0.0});
  CHECK_THROWS_AS(lat.best_response(LateralProfile(15, 0.0), wall), Infeasible);
  const LatticePath brake = lat.braking_path(LateralProfile(15, 0.0), wall);
  CHECK(brake.fallback);
  CHECK(brake.waypoints.size() == 16);
  for (std::size_t tau = 2; tau < brake.waypoints.size(); ++tau) {
    CHECK(brake.waypoints[tau].frenet.e == 0.0);
    CHECK(brake.waypoints[tau].frenet.d >= brake.waypoints[tau - 1].frenet.d - 1e-9);
  }
}

TEST_CASE("configuration errors") {
  const Track track = Track::straight({0.0, 0.0}, 0.0, 120.0, 5.8, 1.8);
  LowGameConfig cfg;
  CHECK_THROWS_AS(Lattice(track, cfg, {0, 0, 0, 13.0}, 12.0), ConfigError);
  cfg.horizon = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.e_res = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  const Lattice lat(track, cfg, {0, 0, 0, 12.0}, 12.0);
  CHECK_THROWS_AS(lat.best_response(LateralProfile(14, 0.0), {}), ConfigError);
  CHECK_THROWS_AS(lat.best_response(LateralProfile(15, 0.0), std::vector<Point2>(3)), ConfigError);

  const Track tight(Pose2{}, {{SegmentKind::kArc, 5.0, 0.6}}, 5.8, 1.8);
  CHECK_THROWS_AS(Lattice(tight, cfg, {0, 0, 0, 5.0}, 12.0), ConfigError);
}

TEST_CASE("frenet wrapper") {
  const Track track = Track::straight({0.0, 0.0}, 0.0, 120.0, 5.8, 1.8);
  const LowGameConfig cfg;
  std::vector<FrenetPose> opp;
  for (int tau = 0; tau <= 15; ++tau) opp.push_back({30.0 + 12.0 * 0.4 * tau, 0.0});
  const LatticePath path =
      best_response_dp(track, cfg, LateralProfile(15, 0.0), opp, {0, 0, 0, 12.0}, 12.0);
  CHECK(path.waypoints.back().frenet.d == doctest::Approx(72.0));
}
