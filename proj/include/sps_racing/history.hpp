#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sps_racing {

enum class Player : int { kAttacker = 0, kDefender = 1 };

inline constexpr Player other(Player p) {
  return p == Player::kAttacker ? Player::kDefender : Player::kAttacker;
}
inline constexpr int index_of(Player p) { return static_cast<int>(p); }
std::string_view to_string(Player p);
Player parse_player(std::string_view text);

class IncompleteHistory : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shape of the intention game: M rounds, both players move once per round,
/// `leader` first. Actions are lateral targets in meters.
struct GameShape {
  int rounds = 3;
  std::vector<double> action_set{-1.0, 1.0};
  Player leader = Player::kDefender;

  int depth() const { return 2 * rounds; }
  int num_actions() const { return static_cast<int>(action_set.size()); }
  Player mover_at(std::size_t ply) const { return ply % 2 == 0 ? leader : other(leader); }
};

/// Sequence of action indices; ply i is played by shape.mover_at(i).
class History {
 public:
  History() = default;
  explicit History(std::vector<std::uint8_t> actions) : actions_(std::move(actions)) {}

  std::size_t size() const { return actions_.size(); }
  bool empty() const { return actions_.empty(); }
  std::uint8_t operator[](std::size_t i) const { return actions_[i]; }
  const std::vector<std::uint8_t>& actions() const { return actions_; }

  History append(std::uint8_t action) const {
    History h = *this;
    h.actions_.push_back(action);
    return h;
  }
  void push(std::uint8_t action) { actions_.push_back(action); }

  bool complete(const GameShape& shape) const {
    return static_cast<int>(actions_.size()) == shape.depth();
  }
  Player to_move(const GameShape& shape) const { return shape.mover_at(actions_.size()); }

  /// Action indices played by `p`, one per round so far.
  std::vector<std::uint8_t> actions_of(Player p, const GameShape& shape) const;
  /// Same, mapped to lateral displacements.
  std::vector<double> displacements_of(Player p, const GameShape& shape) const;

  /// Mixed-radix encoding, unique among histories of one shape.
  std::uint64_t key(const GameShape& shape) const;

  /// e.g. "D:+1 A:-1 D:+1"
  std::string describe(const GameShape& shape) const;

  friend bool operator==(const History&, const History&) = default;
  friend auto operator<=>(const History&, const History&) = default;

 private:
  std::vector<std::uint8_t> actions_;
};

/// Parses the describe() format back into a history.
History parse_history(std::string_view text, const GameShape& shape);

}  // namespace sps_racing
