#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sps_racing/history.hpp"

namespace sps_racing {

class NoChildren : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MctsConfig {
  double c = 30.0;
  int iterations = 5000;
  std::uint64_t seed = 0;
  GameShape shape;
};

/// (u_A, u_D) of a complete history.
using Utility = std::pair<double, double>;
using UtilityFn = std::function<Utility(const History&)>;

struct GameTreeNode {
  History history;
  int parent = -1;
  int visits = 0;
  /// Utility sums per player over iterations that took the edge into this
  /// node, i.e. Q^i(parent, action).
  std::array<double, 2> q{0.0, 0.0};
  std::vector<int> children;  // by action index, -1 when unexpanded
};

class GameTree {
 public:
  explicit GameTree(const GameShape& shape);

  const GameShape& shape() const { return shape_; }
  std::size_t size() const { return nodes_.size(); }
  const GameTreeNode& node(int i) const { return nodes_.at(i); }
  GameTreeNode& node(int i) { return nodes_.at(i); }
  const GameTreeNode& root() const { return nodes_.front(); }

  int child(int node, std::uint8_t action) const;
  int add_child(int node, std::uint8_t action);
  /// Node index of `h`, or -1 if it was never expanded.
  int find(const History& h) const;

  /// argmax_a N(h + a) over expanded children, ties by action order;
  /// nullopt for unknown or childless nodes.
  std::optional<std::uint8_t> best_action(const History& h) const;

  /// One line per node: history, N, Q_A, Q_D, extracted action.
  void write_summary(std::ostream& os) const;

 private:
  GameShape shape_;
  std::vector<GameTreeNode> nodes_;
};

/// UCT choice for the player to move at `node`. Throws
/// NoChildren when the node has no expanded child.
std::uint8_t uct_select(const GameTree& tree, int node, double c);

/// UCT score of one child: Q/N(child) + c * sqrt(ln N(parent) / N(child)).
double uct_value(double q, int child_visits, int parent_visits, double c);

/// Actions of one player extracted from a solved tree, with a deterministic
/// fallback at nodes the tree never reached: repeat the player's previous
/// action, or `opening` in the first round.
class Policy {
 public:
  Policy(const GameTree& tree, Player player, std::uint8_t opening)
      : tree_(&tree), player_(player), opening_(opening) {}

  Player player() const { return player_; }
  std::uint8_t operator()(const History& h) const;

 private:
  const GameTree* tree_;
  Player player_;
  std::uint8_t opening_;
};

struct MctsResult {
  GameTree tree;
  std::size_t utility_evaluations = 0;  // distinct complete histories
  History realized;                     // greedy play-out of the policy from the root
};

/// Monte Carlo tree search over the intention game. When `fixed` is given,
/// that player's moves are dictated by it and its nodes get a single child.
MctsResult run_mcts(const MctsConfig& cfg, const UtilityFn& utility,
                    const std::function<std::uint8_t(const History&)>& fixed = {},
                    std::optional<Player> fixed_player = {});

struct InductionResult {
  /// Equilibrium action at every non-terminal history (keyed by History::key).
  std::unordered_map<std::uint64_t, std::uint8_t> policy;
  Utility value;
  History path;  // equilibrium play from the root
};

/// Exact subgame-perfect solution by enumerating the whole tree; each mover
/// maximizes its own value, ties by action order. Throws TooLarge when the
/// tree has more than `node_budget` nodes.
InductionResult backward_induction(const GameShape& shape, const UtilityFn& utility,
                                   std::size_t node_budget = 1u << 20);

}  // namespace sps_racing
