#include <cmath>
#include <fstream>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sps_racing/trajectory_io.hpp"

using namespace sps_racing;

namespace {

TrajectoryRecord sample_record() {
  TrajectoryRecord rec;
  rec.header = {{"scenario", "straightaway"}, {"sps_case", "OM"}, {"setting", "2"},
                {"sample", "3"},              {"leading_distance", "-1.25"},
                {"violated", "1"},            {"witness_frames", "4"},
                {"min_distance", "2.5"},      {"fallback", "0"},
                {"tracking_ok", "1"},         {"history", "D:+1 A:-1"}};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int tau = 0; tau <= 15; ++tau) {
    for (Player p : {Player::kAttacker, Player::kDefender}) {
      rec.rows.push_back({tau, p, u(rng), u(rng), u(rng) / 50.0, std::abs(u(rng)) / 8.0,
                          std::abs(u(rng)), u(rng) / 40.0, tau % 3 == 1});
    }
  }
  return rec;
}

}  // namespace

TEST_CASE("write and read round trip exactly") {
  const TrajectoryRecord rec = sample_record();
  std::stringstream ss;
  write_trajectories(ss, rec);
  const TrajectoryRecord back = read_trajectories(ss);
  CHECK(back == rec);
  for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789, 0.0}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("columns may come in any order") {
  std::istringstream is("# a: b\nplayer,tau,e,d,v,theta,py,px,block\nD,0,1,2,3,4,5,6,1\n");
  const TrajectoryRecord rec = read_trajectories(is);
  REQUIRE(rec.rows.size() == 1);
  CHECK(rec.rows[0].player == Player::kDefender);
  CHECK(rec.rows[0].px == 6.0);
  CHECK(rec.rows[0].e == 1.0);
  CHECK(rec.rows[0].block);
  CHECK(rec.get("a") == "b");
  CHECK_THROWS_AS(rec.get("missing"), std::out_of_range);
}

TEST_CASE("parse errors") {
  std::istringstream empty("\n  \n");
  CHECK_THROWS_AS(read_trajectories(empty), EmptyInput);

  auto row_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      read_trajectories(is);
    } catch (const TrajectoryParseError& e) {
      return e.row();
    }
    return -1;
  };
  CHECK(row_of("# k: v\ntau,player,px,py,theta,v,d,block\n") == 2);
  {
    std::istringstream is("tau,player,px,py,theta,v,d,block\n");
    try {
      read_trajectories(is);
    } catch (const TrajectoryParseError& e) {
      CHECK(std::string(e.what()).find("'e'") != std::string::npos);
    }
  }
  const std::string head = "tau,player,px,py,theta,v,d,e,block\n";
  CHECK(row_of(head + "0,A,1,2,3,4,5,6,0\n0,X,1,2,3,4,5,6,0\n") == 3);
  CHECK(row_of(head + "0,A,1,2,x,4,5,6,0\n") == 2);
  CHECK(row_of(head + "0,A,1,2,3,4,5,6\n") == 2);
  CHECK(row_of(head + "0,A,1,2,3,4,5,6,2\n") == 2);
  CHECK(row_of(head + "0,A,1,2,3,4,5,6,0\n# late: header\n") == 3);
  CHECK(row_of("# only: header\n") == 1);
}

TEST_CASE("frenet rows and metrics") {
  const TrajectoryRecord rec = sample_record();
  const FrenetTrajectory fa = frenet_of(rec, Player::kAttacker);
  REQUIRE(fa.size() == 16);
  CHECK(fa[5].d == rec.rows[10].d);
  CHECK(fa[5].v == rec.rows[10].v);

  const EpisodeMetrics m = metrics_from_record(rec);
  CHECK(m.cell.scenario == Scenario::kStraightaway);
  CHECK(m.cell.setting == 2);
  CHECK(m.sample == 3);
  CHECK(m.leading_distance == -1.25);
  CHECK(m.violated);
  CHECK(m.frames == 16);

  TrajectoryRecord gap = rec;
  gap.rows.erase(gap.rows.begin() + 4);  // attacker at tau 2
  CHECK_THROWS_AS(frenet_of(gap, Player::kAttacker), std::invalid_argument);
}

TEST_CASE("batch directory loading and table idempotence") {
  const auto dir = std::filesystem::temp_directory_path() / "spsrace_io_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::vector<EpisodeMetrics> direct;
  int i = 0;
  for (Scenario sc : kAllScenarios) {
    for (SpsRule rule : kAllCases) {
      for (int setting = 1; setting <= 4; ++setting) {
        TrajectoryRecord rec = sample_record();
        rec.header[0].second = std::string(to_string(sc));
        rec.header[1].second = std::string(to_string(rule));
        rec.header[2].second = std::to_string(setting);
        rec.header[4].second = format_double(0.5 * i - 3.0);
        write_trajectories(dir / ("ep" + std::to_string(100 + i++) + ".csv"), rec);
        direct.push_back(metrics_from_record(rec));
      }
    }
  }
  std::ofstream(dir / "notes.txt") << "ignored\n";
  const auto loaded = load_batch_metrics(dir);
  REQUIRE(loaded.size() == direct.size());
  const std::string t1 = format_table(aggregate_cells(loaded));
  CHECK(t1 == format_table(aggregate_cells(direct)));
  CHECK(t1 == format_table(aggregate_cells(load_batch_metrics(dir))));
  std::filesystem::remove_all(dir);
}
