#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace sps_racing {

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SpsRule { kOneMotion, kEnoughSpace, kBoth };

std::string_view to_string(SpsRule rule);
/// Accepts "OM", "ES", "OM_and_ES" (and the SPS1/SPS2/SPS1_SPS2 aliases).
SpsRule parse_sps_rule(std::string_view text);

struct SpsConfig {
  double car_width = 1.8;
  double track_width = 5.8;
  double delta_v = 1.5;
  SpsRule active_rules = SpsRule::kOneMotion;
};

struct FrenetSample {
  double d = 0.0;
  double e = 0.0;
  double v = 0.0;
};

using FrenetTrajectory = std::vector<FrenetSample>;

/// Defender strictly ahead and laterally within one car width of the attacker.
bool block(double d_defender, double e_defender, double d_attacker, double e_attacker,
           double car_width);

std::vector<bool> block_flags(const FrenetTrajectory& defender, const FrenetTrajectory& attacker,
                              double car_width);

/// Timesteps t1 < t2 < t3 < t4 with block pattern (0, 1, 0, 1).
using OneMotionWitness = std::array<std::size_t, 4>;
/// t1 < t2: qualifying un-blocked step, then a block.
using EnoughSpaceWitness = std::array<std::size_t, 2>;

/// Single left-to-right scan for the alternating pattern over block flags.
std::optional<OneMotionWitness> find_one_motion(const std::vector<bool>& blocks);

std::optional<OneMotionWitness> violates_one_motion(const FrenetTrajectory& defender,
                                                    const FrenetTrajectory& attacker,
                                                    double car_width);

std::optional<EnoughSpaceWitness> violates_enough_space(const FrenetTrajectory& defender,
                                                        const FrenetTrajectory& attacker,
                                                        const SpsConfig& cfg);

struct SpsVerdict {
  bool violated = false;
  std::optional<OneMotionWitness> one_motion;
  std::optional<EnoughSpaceWitness> enough_space;
  /// Timesteps covered by the earliest witnessing interval of each active
  /// rule (union).
  std::size_t witness_frames = 0;
};

/// Evaluates the active rules; kBoth is the union of the two detectors.
SpsVerdict evaluate_sps(const FrenetTrajectory& defender, const FrenetTrajectory& attacker,
                        const SpsConfig& cfg);

inline bool sps_penalty(const FrenetTrajectory& defender, const FrenetTrajectory& attacker,
                        const SpsConfig& cfg) {
  return evaluate_sps(defender, attacker, cfg).violated;
}

}  // namespace sps_racing
