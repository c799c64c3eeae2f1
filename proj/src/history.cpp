#include "sps_racing/history.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace sps_racing {

std::string_view to_string(Player p) { return p == Player::kAttacker ? "A" : "D"; }

Player parse_player(std::string_view text) {
  if (text == "A" || text == "attacker") return Player::kAttacker;
  if (text == "D" || text == "defender") return Player::kDefender;
  throw std::invalid_argument("unknown player '" + std::string(text) + "'");
}

std::vector<std::uint8_t> History::actions_of(Player p, const GameShape& shape) const {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (shape.mover_at(i) == p) out.push_back(actions_[i]);
  }
  return out;
}

std::vector<double> History::displacements_of(Player p, const GameShape& shape) const {
  std::vector<double> out;
  for (std::uint8_t a : actions_of(p, shape)) out.push_back(shape.action_set.at(a));
  return out;
}

std::uint64_t History::key(const GameShape& shape) const {
  const std::uint64_t radix = static_cast<std::uint64_t>(shape.num_actions()) + 1;
  std::uint64_t k = 0;
  for (auto it = actions_.rbegin(); it != actions_.rend(); ++it) k = k * radix + (*it + 1u);
  return k;
}

std::string History::describe(const GameShape& shape) const {
  std::ostringstream os;
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (i) os << ' ';
    const double a = shape.action_set.at(actions_[i]);
    os << to_string(shape.mover_at(i)) << ':' << (a >= 0 ? "+" : "") << a;
  }
  return os.str();
}

History parse_history(std::string_view text, const GameShape& shape) {
  History h;
  std::istringstream is{std::string(text)};
  std::string token;
  while (is >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad history token " + token);
    const Player p = parse_player(token.substr(0, colon));
    if (p != shape.mover_at(h.size())) {
      throw std::invalid_argument("history token " + token + " out of turn");
    }
    std::string_view num = std::string_view(token).substr(colon + 1);
    if (!num.empty() && num.front() == '+') num.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      throw std::invalid_argument("bad action value in " + token);
    }
    bool found = false;
    for (int a = 0; a < shape.num_actions(); ++a) {
      if (std::abs(shape.action_set[a] - value) < 1e-9) {
        h.push(static_cast<std::uint8_t>(a));
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("action " + token + " not in the action set");
  }
  return h;
}

}  // namespace sps_racing
