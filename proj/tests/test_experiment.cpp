#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sps_racing/experiment.hpp"

using namespace sps_racing;

namespace {

Track scenario_track(Scenario s, const ExperimentParams& p) {
  const ScenarioGeometry g = default_geometry(s);
  return Track(g.start, g.segments, p.sps.track_width, p.sps.car_width);
}

EpisodeMetrics metric(SpsRule rule, int setting, double dx, bool violated) {
  EpisodeMetrics m;
  m.cell = {Scenario::kStraightaway, rule, setting};
  m.leading_distance = dx;
  m.violated = violated;
  m.frames = 16;
  m.witness_frames = violated ? 4 : 0;
  m.min_distance = 3.0 + dx;
  return m;
}

}  // namespace

TEST_CASE("scenario geometry") {
  const ExperimentParams p;
  const Track straight = scenario_track(Scenario::kStraightaway, p);
  CHECK(straight.length() == 120.0);
  const Track corner = scenario_track(Scenario::kCorner, p);
  CHECK(corner.max_abs_curvature() == doctest::Approx(0.1));
  CHECK(corner.tangent_angle(corner.length()) == doctest::Approx(std::numbers::pi));
  CHECK(parse_scenario(to_string(Scenario::kCorner)) == Scenario::kCorner);
  CHECK_THROWS_AS(parse_scenario("oval"), std::invalid_argument);

  const VehicleState v = vehicle_state(straight, {7.5, 1.0, 12.0});
  CHECK(v.px == doctest::Approx(-2.5));
  CHECK(v.py == doctest::Approx(1.0));
  CHECK(v.v == 12.0);
}

TEST_CASE("sampled starts") {
  const ExperimentParams p;
  for (Scenario s : kAllScenarios) {
    const Track track = scenario_track(s, p);
    const auto a = sample_initial_states(s, track, p, 50, 3);
    const auto b = sample_initial_states(s, track, p, 50, 3);
    const auto c = sample_initial_states(s, track, p, 50, 4);
    REQUIRE(a.size() == 50);
    bool differs = false;
    for (int i = 0; i < 50; ++i) {
      CHECK(a[i].attacker.d == b[i].attacker.d);
      CHECK(a[i].defender.v == b[i].defender.v);
      differs = differs || a[i].attacker.d != c[i].attacker.d;
      CHECK(a[i].attacker.v > a[i].defender.v);
      CHECK(a[i].attacker.d < a[i].defender.d);
      const VehicleState va = vehicle_state(track, a[i].attacker);
      const VehicleState vd = vehicle_state(track, a[i].defender);
      CHECK(distance(va.position(), vd.position()) > p.low.d_safe);
      CHECK(std::abs(a[i].attacker.e) <= track.lateral_limit());
    }
    CHECK(differs);
  }
}

TEST_CASE("nominal episodes") {
  const ExperimentParams p;
  for (Scenario s : kAllScenarios) {
    const Track track = scenario_track(s, p);
    EpisodeContext ctx(track, p, nominal_start(s));
    for (SpsRule rule : kAllCases) {
      for (int setting = 1; setting <= 4; ++setting) {
        const EpisodeResult r = run_episode(ctx, {s, rule, setting, 1, 0, nominal_start(s)});
        const FrenetTrajectory& fa = r.gne.of(Player::kAttacker).frenet;
        const FrenetTrajectory& fd = r.gne.of(Player::kDefender).frenet;
        SpsConfig sps = p.sps;
        sps.active_rules = rule;
        // Stored verdict and block flags come from the exported trajectories.
        bool om = false, es = false;
        std::vector<bool> flags;
        for (std::size_t t = 0; t < fa.size(); ++t) {
          flags.push_back(fd[t].d > fa[t].d && std::abs(fd[t].e - fa[t].e) <= sps.car_width);
        }
        om = oracle::one_motion(flags);
        es = oracle::enough_space(fd, fa, sps);
        const bool want = rule == SpsRule::kOneMotion    ? om
                          : rule == SpsRule::kEnoughSpace ? es
                                                          : (om || es);
        CHECK(r.verdict.violated == want);
        CHECK(r.blocks == flags);
        CHECK(r.leading_distance == fa.back().d - fd.back().d);
        CHECK(r.gne.min_distance >= p.low.d_safe);
        CHECK(r.realized.complete(p.mcts.shape));
        if (setting == 2 || setting == 4) CHECK_FALSE(r.verdict.violated);
        if (setting <= 2) CHECK(r.realized == r.stage1);
      }
    }
    CHECK(ctx.cached() <= 64);
  }
  CHECK_THROWS_AS(run_episode(scenario_track(Scenario::kStraightaway, p), p,
                              {Scenario::kStraightaway, SpsRule::kOneMotion, 5, 0, 0,
                               nominal_start(Scenario::kStraightaway)}),
                  std::invalid_argument);
}

TEST_CASE("aggregation and table layout") {
  std::vector<EpisodeMetrics> ms{metric(SpsRule::kOneMotion, 1, 2.0, true),
                                 metric(SpsRule::kOneMotion, 1, -1.0, false),
                                 metric(SpsRule::kOneMotion, 1, 5.0, true),
                                 metric(SpsRule::kOneMotion, 1, 2.0, false)};
  const CellSummary s = aggregate(ms);
  CHECK(s.episodes == 4);
  CHECK(s.mean_leading_distance == doctest::Approx(2.0));
  CHECK(s.violation_rate == doctest::Approx(0.5));
  CHECK(s.violation_frames == doctest::Approx(0.125));
  CHECK(s.min_distance == doctest::Approx(2.0));
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);

  std::vector<EpisodeMetrics> all;
  for (Scenario sc : kAllScenarios)
    for (SpsRule rule : kAllCases)
      for (int setting = 1; setting <= 4; ++setting) {
        EpisodeMetrics m = metric(rule, setting, setting + 0.5, setting == 1);
        m.cell.scenario = sc;
        all.push_back(m);
      }
  const auto cells = aggregate_cells(all);
  CHECK(cells.size() == 24);
  const std::string table = format_table(cells);
  std::vector<std::string> lines;
  std::istringstream is(table);
  for (std::string line; std::getline(is, line);) lines.push_back(line);
  REQUIRE(lines.size() == 7);
  CHECK(lines[0].find("S1") != std::string::npos);
  CHECK(lines[0].find("C4") != std::string::npos);
  CHECK(lines[1].rfind("SPS1 ", 0) == 0);
  CHECK(lines[1].find("1.50      2.50      3.50      4.50") != std::string::npos);
  CHECK(lines[2].find("1.00      0.00      0.00      0.00") != std::string::npos);
  CHECK(lines[5].rfind("SPS1 and SPS2", 0) == 0);

  all.pop_back();
  CHECK_THROWS_AS(format_table(aggregate_cells(all)), std::invalid_argument);
}

TEST_CASE("batch results do not depend on the worker count") {
  ExperimentParams p;
  p.mcts.iterations = 300;
  BatchPlan plan;
  plan.scenarios = {Scenario::kStraightaway};
  plan.cases = {SpsRule::kOneMotion};
  plan.settings = {1, 3};
  plan.samples = 2;
  plan.seed = 9;
  plan.workers = 1;
  int sunk = 0;
  const auto one = run_batch(p, plan, [&](const EpisodeResult&) { ++sunk; });
  plan.workers = 2;
  const auto two = run_batch(p, plan);
  CHECK(sunk == 4);
  REQUIRE(one.size() == 4);
  REQUIRE(two.size() == 4);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].cell == two[i].cell);
    CHECK(one[i].sample == two[i].sample);
    CHECK(one[i].leading_distance == two[i].leading_distance);
    CHECK(one[i].violated == two[i].violated);
  }
  CHECK(episode_seed(9, Scenario::kStraightaway, 0) != episode_seed(9, Scenario::kStraightaway, 1));
  CHECK(episode_seed(9, Scenario::kStraightaway, 0) != episode_seed(9, Scenario::kCorner, 0));
}
