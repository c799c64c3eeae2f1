#include "sps_racing/high_level_game.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sps_racing {

GameTree::GameTree(const GameShape& shape) : shape_(shape) {
  if (shape_.rounds < 1 || shape_.num_actions() < 1) {
    throw std::invalid_argument("game needs at least one round and one action");
  }
  if (shape_.num_actions() > 255) throw std::invalid_argument("too many actions");
  GameTreeNode root;
  root.children.assign(shape_.num_actions(), -1);
  nodes_.push_back(std::move(root));
}

int GameTree::child(int node, std::uint8_t action) const {
  const auto& ch = nodes_.at(node).children;
  return action < ch.size() ? ch[action] : -1;
}

int GameTree::add_child(int node, std::uint8_t action) {
  if (int existing = child(node, action); existing >= 0) return existing;
  GameTreeNode n;
  n.history = nodes_.at(node).history.append(action);
  n.parent = node;
  if (!n.history.complete(shape_)) n.children.assign(shape_.num_actions(), -1);
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(n));
  nodes_[node].children.at(action) = index;
  return index;
}

int GameTree::find(const History& h) const {
  int node = 0;
  for (std::size_t i = 0; i < h.size() && node >= 0; ++i) node = child(node, h[i]);
  return node;
}

std::optional<std::uint8_t> GameTree::best_action(const History& h) const {
  const int node = find(h);
  if (node < 0) return std::nullopt;
  std::optional<std::uint8_t> best;
  int best_visits = -1;
  const auto& ch = nodes_[node].children;
  for (std::size_t a = 0; a < ch.size(); ++a) {
    if (ch[a] < 0) continue;
    if (nodes_[ch[a]].visits > best_visits) {
      best_visits = nodes_[ch[a]].visits;
      best = static_cast<std::uint8_t>(a);
    }
  }
  return best;
}

void GameTree::write_summary(std::ostream& os) const {
  os << "history,visits,q_attacker,q_defender,action\n";
  for (const GameTreeNode& n : nodes_) {
    os << '"' << n.history.describe(shape_) << "\"," << n.visits << ',' << n.q[0] << ','
       << n.q[1] << ',';
    if (const auto a = best_action(n.history)) os << shape_.action_set[*a];
    os << '\n';
  }
}

double uct_value(double q, int child_visits, int parent_visits, double c) {
  return q / child_visits +
         c * std::sqrt(std::log(static_cast<double>(parent_visits)) / child_visits);
}

std::uint8_t uct_select(const GameTree& tree, int node, double c) {
  const GameTreeNode& n = tree.node(node);
  const int mover = index_of(n.history.to_move(tree.shape()));
  std::optional<std::uint8_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n.children.size(); ++a) {
    if (n.children[a] < 0) continue;
    const GameTreeNode& ch = tree.node(n.children[a]);
    const double score = uct_value(ch.q[mover], ch.visits, n.visits, c);
    if (!best || score > best_score) {
      best_score = score;
      best = static_cast<std::uint8_t>(a);
    }
  }
  if (!best) throw NoChildren("node '" + n.history.describe(tree.shape()) + "' has no children");
  return *best;
}

std::uint8_t Policy::operator()(const History& h) const {
  if (h.to_move(tree_->shape()) != player_) {
    throw std::logic_error("policy queried at the other player's node");
  }
  if (const auto a = tree_->best_action(h)) return *a;
  const std::vector<std::uint8_t> own = h.actions_of(player_, tree_->shape());
  return own.empty() ? opening_ : own.back();
}

MctsResult run_mcts(const MctsConfig& cfg, const UtilityFn& utility,
                    const std::function<std::uint8_t(const History&)>& fixed,
                    std::optional<Player> fixed_player) {
  if (cfg.iterations < 1) throw std::invalid_argument("MCTS needs at least one iteration");
  if (cfg.c < 0.0) throw std::invalid_argument("exploration constant must be non-negative");
  if (fixed_player.has_value() != static_cast<bool>(fixed)) {
    throw std::invalid_argument("fixed policy and fixed player go together");
  }
  const GameShape& shape = cfg.shape;
  MctsResult result{GameTree(shape), 0, {}};
  GameTree& tree = result.tree;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> pick_action(0, shape.num_actions() - 1);
  std::unordered_map<std::uint64_t, Utility> memo;

  auto is_fixed = [&](const History& h) {
    return fixed_player && h.to_move(shape) == *fixed_player;
  };
  auto evaluate = [&](const History& h) -> const Utility& {
    const std::uint64_t key = h.key(shape);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, utility(h)).first;
    return it->second;
  };

  std::vector<int> path;
  std::vector<std::uint8_t> unexplored;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    path.assign(1, 0);
    int node = 0;
    // Selection and expansion.
    while (!tree.node(node).history.complete(shape)) {
      const History& h = tree.node(node).history;
      if (is_fixed(h)) {
        const std::uint8_t a = fixed(h);
        const bool fresh = tree.child(node, a) < 0;
        node = tree.add_child(node, a);
        path.push_back(node);
        if (fresh) break;
        continue;
      }
      unexplored.clear();
      for (int a = 0; a < shape.num_actions(); ++a) {
        if (tree.child(node, static_cast<std::uint8_t>(a)) < 0) {
          unexplored.push_back(static_cast<std::uint8_t>(a));
        }
      }
      if (!unexplored.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, unexplored.size() - 1);
        node = tree.add_child(node, unexplored[pick(rng)]);
        path.push_back(node);
        break;
      }
      node = tree.child(node, uct_select(tree, node, cfg.c));
      path.push_back(node);
    }
    // Random roll-out.
    History h = tree.node(node).history;
    while (!h.complete(shape)) {
      h.push(is_fixed(h) ? fixed(h) : static_cast<std::uint8_t>(pick_action(rng)));
    }
    const Utility u = evaluate(h);
    // Back-propagation.
    for (std::size_t i = 0; i < path.size(); ++i) {
      GameTreeNode& n = tree.node(path[i]);
      n.visits += 1;
      if (i > 0) {
        n.q[0] += u.first;
        n.q[1] += u.second;
      }
    }
  }
  result.utility_evaluations = memo.size();

  History h;
  while (!h.complete(shape)) {
    if (is_fixed(h)) {
      h.push(fixed(h));
    } else if (const auto a = tree.best_action(h)) {
      h.push(*a);
    } else {
      const auto own = h.actions_of(h.to_move(shape), shape);
      h.push(own.empty() ? 0 : own.back());
    }
  }
  result.realized = h;
  return result;
}

namespace {

struct Inducer {
  const GameShape& shape;
  const UtilityFn& utility;
  InductionResult& out;

  Utility solve(const History& h) {
    if (h.complete(shape)) return utility(h);
    const int mover = index_of(h.to_move(shape));
    Utility best{};
    std::uint8_t best_a = 0;
    for (int a = 0; a < shape.num_actions(); ++a) {
      const Utility v = solve(h.append(static_cast<std::uint8_t>(a)));
      const double own = mover == 0 ? v.first : v.second;
      const double cur = mover == 0 ? best.first : best.second;
      if (a == 0 || own > cur) {
        best = v;
        best_a = static_cast<std::uint8_t>(a);
      }
    }
    out.policy[h.key(shape)] = best_a;
    return best;
  }
};

}  // namespace

InductionResult backward_induction(const GameShape& shape, const UtilityFn& utility,
                                   std::size_t node_budget) {
  double nodes = 0.0;
  double layer = 1.0;
  for (int d = 0; d <= shape.depth(); ++d) {
    nodes += layer;
    layer *= shape.num_actions();
  }
  if (nodes > static_cast<double>(node_budget)) {
    throw TooLarge("game tree has " + std::to_string(nodes) + " nodes, budget is " +
                   std::to_string(node_budget));
  }
  InductionResult out;
  Inducer ind{shape, utility, out};
  out.value = ind.solve(History{});
  History h;
  while (!h.complete(shape)) h.push(out.policy.at(h.key(shape)));
  out.path = h;
  return out;
}

}  // namespace sps_racing
