#pragma once

#include <array>
#include <functional>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sps_racing/high_level_game.hpp"
#include "sps_racing/low_level_game.hpp"
#include "sps_racing/sps_rules.hpp"
#include "sps_racing/track.hpp"

namespace sps_racing {

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { kStraightaway, kCorner };
std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

/// Frenet start of one vehicle; heading follows the centerline and v_max
/// equals the start speed.
struct StartState {
  double d = 0.0;
  double e = 0.0;
  double v = 0.0;
};

struct InitialCondition {
  StartState attacker;
  StartState defender;
};

/// Centerline geometry of a scenario.
struct ScenarioGeometry {
  Pose2 start;
  std::vector<SegmentSpec> segments;
};

ScenarioGeometry default_geometry(Scenario s);
InitialCondition nominal_start(Scenario s);

/// Everything an episode needs besides its start and labels.
struct ExperimentParams {
  LowGameConfig low;
  KinematicsConfig kinematics;  // v_max is overwritten per player
  SpsConfig sps;                // active_rules is overwritten per case
  UtilityConfig utility;
  MctsConfig mcts;              // seed is overwritten per episode
  IbrWarmStart warm_start = IbrWarmStart::kDefenderSolo;

  void validate() const;
};

VehicleState vehicle_state(const Track& track, const StartState& s);

struct EpisodeConfig {
  Scenario scenario = Scenario::kStraightaway;
  SpsRule sps_case = SpsRule::kOneMotion;
  int setting = 1;
  std::uint64_t seed = 0;
  int sample = 0;
  InitialCondition start;
};

struct EpisodeResult {
  EpisodeConfig config;
  History stage1;    // realized history of the first solve
  History realized;  // history the trajectories come from
  GneResult gne;
  Utility utilities{0.0, 0.0};  // under the setting's defender penalty flag
  double leading_distance = 0.0;  // d_A(T) - d_D(T)
  SpsVerdict verdict;
  std::vector<bool> blocks;
  double wall_seconds = 0.0;
};

/// Low-level solutions for one pair of start states, shared by every case and
/// setting run from it. Trajectories do not depend on the SPS case, only the
/// utilities do. Not thread-safe; use one context per worker.
class EpisodeContext {
 public:
  EpisodeContext(const Track& track, const ExperimentParams& params, const InitialCondition& start);

  const GneResult& solve(const History& h);
  const Track& track() const { return *track_; }
  const ExperimentParams& params() const { return params_; }
  const InitialCondition& start() const { return start_; }
  std::size_t cached() const { return cache_.size(); }

 private:
  const Track* track_;
  ExperimentParams params_;
  InitialCondition start_;
  GneSolver solver_;
  std::unordered_map<std::uint64_t, std::unique_ptr<GneResult>> cache_;
};

/// Runs one (case, setting) episode from the context's start. Settings:
/// 1 nobody knows the rules, 2 both know, 3 only the attacker, 4 only the
/// defender; 3 and 4 use the two-stage scheme.
EpisodeResult run_episode(EpisodeContext& ctx, const EpisodeConfig& cfg);

/// Convenience overload that builds its own context.
EpisodeResult run_episode(const Track& track, const ExperimentParams& params,
                          const EpisodeConfig& cfg);

/// Random starts around the nominal one, deterministic in `seed`. Starts whose
/// free-flow positions at steps 0 and 1 are within d_safe plus the planner
/// margin are redrawn.
std::vector<InitialCondition> sample_initial_states(Scenario s, const Track& track,
                                                    const ExperimentParams& params, int count,
                                                    std::uint64_t seed);

struct CellKey {
  Scenario scenario;
  SpsRule sps_case;
  int setting;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellSummary {
  int episodes = 0;
  double mean_leading_distance = 0.0;
  double violation_rate = 0.0;   // fraction of episodes with a violation
  double violation_frames = 0.0;  // mean fraction of frames inside witness intervals
  double min_distance = 0.0;
  int fallbacks = 0;
  int tracking_failures = 0;
};

/// Compact per-episode record used by aggregation and the batch files.
struct EpisodeMetrics {
  CellKey cell;
  int sample = 0;
  double leading_distance = 0.0;
  bool violated = false;
  std::size_t witness_frames = 0;
  std::size_t frames = 0;
  double min_distance = 0.0;
  bool fallback = false;
  bool tracking_ok = true;
};

EpisodeMetrics metrics_of(const EpisodeResult& r);

/// Throws std::invalid_argument on an empty input.
CellSummary aggregate(const std::vector<EpisodeMetrics>& episodes);

std::map<CellKey, CellSummary> aggregate_cells(const std::vector<EpisodeMetrics>& episodes);

/// Rows: each case with a leading-distance row and a violation-rate row.
/// Columns: straightaway settings 1-4, then corner settings 1-4. Throws when
/// a cell is empty.
std::string format_table(const std::map<CellKey, CellSummary>& cells);

/// Per-episode seed derived from the batch seed.
std::uint64_t episode_seed(std::uint64_t batch_seed, Scenario s, int sample);

struct BatchPlan {
  std::vector<Scenario> scenarios{Scenario::kStraightaway, Scenario::kCorner};
  std::vector<SpsRule> cases{SpsRule::kOneMotion, SpsRule::kEnoughSpace, SpsRule::kBoth};
  std::vector<int> settings{1, 2, 3, 4};
  int samples = 50;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Runs every (scenario, sample, case, setting) episode of the plan. Samples
/// are distributed over `workers` threads; `sink` is called once per episode
/// under a lock. Returns the metrics sorted by cell and sample.
std::vector<EpisodeMetrics> run_batch(
    const ExperimentParams& params, const BatchPlan& plan,
    const std::function<void(const EpisodeResult&)>& sink = {});

/// Worker count from SPSRACE_WORKERS, else the hardware concurrency.
int default_workers();

inline constexpr std::array<SpsRule, 3> kAllCases{SpsRule::kOneMotion, SpsRule::kEnoughSpace,
                                                  SpsRule::kBoth};
inline constexpr std::array<Scenario, 2> kAllScenarios{Scenario::kStraightaway,
                                                       Scenario::kCorner};

}  // namespace sps_racing
