#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "sps_racing/history.hpp"
#include "sps_racing/low_level_game.hpp"

using namespace sps_racing;

TEST_CASE("turn order and per-player actions") {
  const GameShape shape;
  CHECK(shape.depth() == 6);
  CHECK(shape.mover_at(0) == Player::kDefender);
  CHECK(shape.mover_at(1) == Player::kAttacker);
  const History h({0, 1, 1, 0, 1, 1});
  CHECK(h.complete(shape));
  CHECK(h.actions_of(Player::kDefender, shape) == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(h.actions_of(Player::kAttacker, shape) == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(h.displacements_of(Player::kAttacker, shape) == std::vector<double>{1.0, -1.0, 1.0});
  CHECK(History({0, 1}).to_move(shape) == Player::kDefender);
}

TEST_CASE("describe and parse round trip") {
  const GameShape shape;
  const History h({0, 1, 1});
  CHECK(h.describe(shape) == "D:-1 A:+1 D:+1");
  for (const History& full : oracle::all_histories(shape)) {
    CHECK(parse_history(full.describe(shape), shape) == full);
  }
  CHECK(parse_history("", shape).empty());
  CHECK_THROWS_AS(parse_history("A:+1", shape), std::invalid_argument);
  CHECK_THROWS_AS(parse_history("D:+2", shape), std::invalid_argument);
  CHECK_THROWS_AS(parse_history("D+1", shape), std::invalid_argument);
  CHECK_THROWS_AS(parse_player("X"), std::invalid_argument);
}

TEST_CASE("keys are unique across every prefix") {
  GameShape shape;
  shape.action_set = {-1.0, 0.0, 1.0};
  std::set<std::uint64_t> keys;
  std::size_t count = 0;
  std::vector<History> layer{History{}};
  for (int d = 0; d <= shape.depth(); ++d) {
    std::vector<History> next;
    for (const History& h : layer) {
      keys.insert(h.key(shape));
      ++count;
      for (std::uint8_t a = 0; a < 3 && d < shape.depth(); ++a) next.push_back(h.append(a));
    }
    layer = std::move(next);
  }
  CHECK(keys.size() == count);
}

TEST_CASE("strategy profile") {
  const GameShape shape;
  const History h({1, 0, 0, 1, 1, 0});  // D:+1 A:-1 D:-1 A:+1 D:+1 A:-1
  const LateralProfile d = strategy_profile(h, Player::kDefender, shape, 15);
  const LateralProfile a = strategy_profile(h, Player::kAttacker, shape, 15);
  REQUIRE(d.size() == 15);
  for (int tau = 0; tau < 15; ++tau) {
    const double want_d = tau < 5 ? 1.0 : tau < 10 ? -1.0 : 1.0;
    const double want_a = tau < 5 ? -1.0 : tau < 10 ? 1.0 : -1.0;
    CHECK(d[tau] == want_d);
    CHECK(a[tau] == want_a);
  }

  const LateralProfile lag = strategy_profile(h, Player::kAttacker, shape, 15, 2, 0.5);
  CHECK(lag[0] == 0.5);
  CHECK(lag[1] == 0.5);
  CHECK(lag[2] == -1.0);
  CHECK(lag[7] == 1.0);
  CHECK(lag[14] == -1.0);

  CHECK_THROWS_AS(strategy_profile(History({1, 0}), Player::kDefender, shape, 15), IncompleteHistory);
  CHECK_THROWS_AS(strategy_profile(h, Player::kDefender, shape, 14), ConfigError);
  CHECK_THROWS_AS(strategy_profile(h, Player::kDefender, shape, 15, 5), ConfigError);
  CHECK_THROWS_AS(strategy_profile(h, Player::kDefender, shape, 15, -1), ConfigError);
}
