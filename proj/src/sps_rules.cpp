#include "sps_racing/sps_rules.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sps_racing {
namespace {

void require_same_length(const FrenetTrajectory& a, const FrenetTrajectory& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("trajectory lengths differ: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

}  // namespace

std::string_view to_string(SpsRule rule) {
  switch (rule) {
    case SpsRule::kOneMotion:
      return "OM";
    case SpsRule::kEnoughSpace:
      return "ES";
    case SpsRule::kBoth:
      return "OM_and_ES";
  }
  return "?";
}

SpsRule parse_sps_rule(std::string_view text) {
  if (text == "OM" || text == "SPS1") return SpsRule::kOneMotion;
  if (text == "ES" || text == "SPS2") return SpsRule::kEnoughSpace;
  if (text == "OM_and_ES" || text == "SPS1_SPS2" || text == "both") return SpsRule::kBoth;
  throw std::invalid_argument("unknown SPS rule '" + std::string(text) +
                              "' (expected OM, ES or OM_and_ES)");
}

bool block(double d_defender, double e_defender, double d_attacker, double e_attacker,
           double car_width) {
  return d_defender > d_attacker && std::abs(e_defender - e_attacker) <= car_width;
}

std::vector<bool> block_flags(const FrenetTrajectory& defender, const FrenetTrajectory& attacker,
                              double car_width) {
  require_same_length(defender, attacker);
  std::vector<bool> flags(defender.size());
  for (std::size_t t = 0; t < defender.size(); ++t) {
    flags[t] = block(defender[t].d, defender[t].e, attacker[t].d, attacker[t].e, car_width);
  }
  return flags;
}

std::optional<OneMotionWitness> find_one_motion(const std::vector<bool>& blocks) {
  constexpr std::array<bool, 4> kPattern{false, true, false, true};
  OneMotionWitness witness{};
  std::size_t matched = 0;
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    if (blocks[t] == kPattern[matched]) {
      witness[matched++] = t;
      if (matched == kPattern.size()) return witness;
    }
  }
  return std::nullopt;
}

std::optional<OneMotionWitness> violates_one_motion(const FrenetTrajectory& defender,
                                                    const FrenetTrajectory& attacker,
                                                    double car_width) {
  return find_one_motion(block_flags(defender, attacker, car_width));
}

std::optional<EnoughSpaceWitness> violates_enough_space(const FrenetTrajectory& defender,
                                                        const FrenetTrajectory& attacker,
                                                        const SpsConfig& cfg) {
  require_same_length(defender, attacker);
  std::optional<std::size_t> first;
  for (std::size_t t = 0; t < defender.size(); ++t) {
    const FrenetSample& dd = defender[t];
    const FrenetSample& aa = attacker[t];
    const bool blocked = block(dd.d, dd.e, aa.d, aa.e, cfg.car_width);
    if (first && blocked) return EnoughSpaceWitness{*first, t};
    if (!first && !blocked && aa.v - dd.v > cfg.delta_v &&
        0.5 * cfg.track_width - std::abs(aa.e) <= cfg.car_width) {
      first = t;
    }
  }
  return std::nullopt;
}

SpsVerdict evaluate_sps(const FrenetTrajectory& defender, const FrenetTrajectory& attacker,
                        const SpsConfig& cfg) {
  SpsVerdict verdict;
  const bool om = cfg.active_rules != SpsRule::kEnoughSpace;
  const bool es = cfg.active_rules != SpsRule::kOneMotion;
  if (om) verdict.one_motion = violates_one_motion(defender, attacker, cfg.car_width);
  if (es) verdict.enough_space = violates_enough_space(defender, attacker, cfg);
  verdict.violated = verdict.one_motion.has_value() || verdict.enough_space.has_value();

  std::vector<bool> covered(defender.size(), false);
  auto mark = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t <= hi; ++t) covered[t] = true;
  };
  if (verdict.one_motion) mark((*verdict.one_motion)[0], (*verdict.one_motion)[3]);
  if (verdict.enough_space) mark((*verdict.enough_space)[0], (*verdict.enough_space)[1]);
  verdict.witness_frames = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
  return verdict;
}

}  // namespace sps_racing
