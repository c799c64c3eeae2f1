#include "sps_racing/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace sps_racing {

std::string_view to_string(Scenario s) {
  return s == Scenario::kStraightaway ? "straightaway" : "corner";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "straightaway" || text == "straight") return Scenario::kStraightaway;
  if (text == "corner") return Scenario::kCorner;
  throw std::invalid_argument("unknown scenario '" + std::string(text) +
                              "' (expected straightaway or corner)");
}

ScenarioGeometry default_geometry(Scenario s) {
  if (s == Scenario::kStraightaway) {
    return {{-10.0, 0.0, 0.0}, {{SegmentKind::kLine, 120.0, 0.0}}};
  }
  return {{0.0, -25.0, std::numbers::pi / 2},
          {{SegmentKind::kLine, 15.0, 0.0},
           {SegmentKind::kArc, 5.0 * std::numbers::pi, 0.1},
           {SegmentKind::kLine, 60.0, 0.0}}};
}

InitialCondition nominal_start(Scenario s) {
  if (s == Scenario::kStraightaway) return {{7.5, 1.0, 12.0}, {10.0, -1.0, 10.0}};
  return {{2.5, -1.0, 12.0}, {5.0, 1.0, 10.0}};
}

void ExperimentParams::validate() const {
  low.validate();
  if (!(sps.car_width > 0.0) || !(sps.track_width > sps.car_width)) {
    throw ConfigError("need 0 < car_width < track_width");
  }
  if (!(sps.delta_v > 0.0)) throw ConfigError("delta_v must be positive");
  if (!(kinematics.wheelbase > 0.0)) throw ConfigError("wheelbase must be positive");
  if (!(kinematics.steer_limit > 0.0)) throw ConfigError("steer_limit must be positive");
  if (mcts.iterations < 1) throw ConfigError("mcts iterations must be positive");
  if (mcts.c < 0.0) throw ConfigError("exploration constant must be non-negative");
  if (mcts.shape.rounds < 1 || low.horizon % mcts.shape.rounds != 0) {
    throw ConfigError("horizon must be divisible by the number of rounds");
  }
  if (mcts.shape.action_set.empty()) throw ConfigError("action set is empty");
}

VehicleState vehicle_state(const Track& track, const StartState& s) {
  const auto [p, heading] = track.from_frenet({s.d, s.e});
  return {p.x, p.y, heading, s.v};
}

namespace {

PlayerSetup setup_for(const Track& track, const ExperimentParams& params, const StartState& s) {
  PlayerSetup out{vehicle_state(track, s), params.kinematics};
  out.kinematics.v_max = s.v;
  out.kinematics.tau_s = params.low.tau_s;
  return out;
}

std::uint8_t nearest_action(const GameShape& shape, double e) {
  std::uint8_t best = 0;
  for (int a = 1; a < shape.num_actions(); ++a) {
    if (std::abs(shape.action_set[a] - e) < std::abs(shape.action_set[best] - e)) {
      best = static_cast<std::uint8_t>(a);
    }
  }
  return best;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

EpisodeContext::EpisodeContext(const Track& track, const ExperimentParams& params,
                               const InitialCondition& start)
    : track_(&track),
      params_(params),
      start_(start),
      solver_(track, params.low, params.mcts.shape, setup_for(track, params, start.attacker),
              setup_for(track, params, start.defender), params.warm_start) {}

const GneResult& EpisodeContext::solve(const History& h) {
  const std::uint64_t key = h.key(params_.mcts.shape);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_.emplace(key, std::make_unique<GneResult>(solver_.solve(h))).first;
  }
  return *it->second;
}

EpisodeResult run_episode(EpisodeContext& ctx, const EpisodeConfig& cfg) {
  if (cfg.setting < 1 || cfg.setting > 4) {
    throw std::invalid_argument("setting must be 1, 2, 3 or 4");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentParams& params = ctx.params();
  const GameShape& shape = params.mcts.shape;
  SpsConfig sps = params.sps;
  sps.active_rules = cfg.sps_case;

  auto utility_fn = [&](bool penalize) -> UtilityFn {
    return [&ctx, &shape, &params, sps, penalize](const History& h) {
      const GneResult& g = ctx.solve(h);
      return utilities(g.of(Player::kAttacker).frenet, g.of(Player::kDefender).frenet, h, shape,
                       sps, penalize, params.utility);
    };
  };

  EpisodeResult out;
  out.config = cfg;
  MctsConfig mcts = params.mcts;
  mcts.seed = cfg.seed;
  // Stage 1: settings 2 and 3 solve with the penalty in the defender's
  // utility, settings 1 and 4 without.
  const bool stage1_penalty = cfg.setting == 2 || cfg.setting == 3;
  bool final_penalty = stage1_penalty;
  try {
    const MctsResult stage1 = run_mcts(mcts, utility_fn(stage1_penalty));
    out.stage1 = stage1.realized;
    out.realized = stage1.realized;
    if (cfg.setting >= 3) {
      // Stage 2: freeze the attacker's stage-1 policy and re-solve the
      // defender with the opposite knowledge.
      const Policy attacker(stage1.tree, Player::kAttacker,
                            nearest_action(shape, ctx.start().attacker.e));
      final_penalty = cfg.setting == 4;
      MctsConfig mcts2 = mcts;
      mcts2.seed = splitmix(cfg.seed);
      const MctsResult stage2 =
          run_mcts(mcts2, utility_fn(final_penalty), std::cref(attacker), Player::kAttacker);
      out.realized = stage2.realized;
    }
    out.gne = ctx.solve(out.realized);
  } catch (const TrackError& e) {
    throw SolverFailure(std::string("episode left the track: ") + e.what());
  }

  const FrenetTrajectory& fa = out.gne.of(Player::kAttacker).frenet;
  const FrenetTrajectory& fd = out.gne.of(Player::kDefender).frenet;
  out.utilities = utilities(fa, fd, out.realized, shape, sps, final_penalty, params.utility);
  out.leading_distance = fa.back().d - fd.back().d;
  out.verdict = evaluate_sps(fd, fa, sps);
  out.blocks = block_flags(fd, fa, sps.car_width);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

EpisodeResult run_episode(const Track& track, const ExperimentParams& params,
                          const EpisodeConfig& cfg) {
  EpisodeContext ctx(track, params, cfg.start);
  return run_episode(ctx, cfg);
}

std::vector<InitialCondition> sample_initial_states(Scenario s, const Track& track,
                                                    const ExperimentParams& params, int count,
                                                    std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample count must be non-negative");
  const InitialCondition nominal = nominal_start(s);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> deficit(2.0, 4.0);
  std::uniform_real_distribution<double> lateral(0.0, 1.2);
  std::uniform_real_distribution<double> speed_a(11.0, 13.0);
  std::uniform_real_distribution<double> speed_d(9.0, 11.0);
  const double clearance = params.low.d_safe + params.low.collision_margin;
  const double sign_a = nominal.attacker.e < 0.0 ? -1.0 : 1.0;
  const double sign_d = nominal.defender.e < 0.0 ? -1.0 : 1.0;

  std::vector<InitialCondition> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    InitialCondition c;
    c.defender.d = nominal.defender.d;
    c.attacker.d = nominal.defender.d - deficit(rng);
    c.attacker.e = sign_a * lateral(rng);
    c.defender.e = sign_d * lateral(rng);
    c.attacker.v = speed_a(rng);
    c.defender.v = speed_d(rng);
    const VehicleState a = vehicle_state(track, c.attacker);
    const VehicleState d = vehicle_state(track, c.defender);
    auto ahead = [&](const VehicleState& v) {
      return v.position() + (params.low.tau_s * v.v) * unit_vector(v.theta);
    };
    if (distance(a.position(), d.position()) <= clearance) continue;
    if (distance(ahead(a), ahead(d)) <= clearance) continue;
    out.push_back(c);
  }
  return out;
}

EpisodeMetrics metrics_of(const EpisodeResult& r) {
  EpisodeMetrics m;
  m.cell = {r.config.scenario, r.config.sps_case, r.config.setting};
  m.sample = r.config.sample;
  m.leading_distance = r.leading_distance;
  m.violated = r.verdict.violated;
  m.witness_frames = r.verdict.witness_frames;
  m.frames = r.gne.of(Player::kAttacker).frenet.size();
  m.min_distance = r.gne.min_distance;
  m.fallback = r.gne.fallback_used;
  m.tracking_ok = r.gne.tracking_ok;
  return m;
}

CellSummary aggregate(const std::vector<EpisodeMetrics>& episodes) {
  if (episodes.empty()) throw std::invalid_argument("cannot aggregate an empty cell");
  CellSummary s;
  s.episodes = static_cast<int>(episodes.size());
  s.min_distance = std::numeric_limits<double>::infinity();
  double dx = 0.0, violations = 0.0, frames = 0.0;
  for (const EpisodeMetrics& m : episodes) {
    dx += m.leading_distance;
    violations += m.violated ? 1.0 : 0.0;
    frames += m.frames ? static_cast<double>(m.witness_frames) / m.frames : 0.0;
    s.min_distance = std::min(s.min_distance, m.min_distance);
    s.fallbacks += m.fallback;
    s.tracking_failures += !m.tracking_ok;
  }
  s.mean_leading_distance = dx / s.episodes;
  s.violation_rate = violations / s.episodes;
  s.violation_frames = frames / s.episodes;
  return s;
}

std::map<CellKey, CellSummary> aggregate_cells(const std::vector<EpisodeMetrics>& episodes) {
  std::map<CellKey, std::vector<EpisodeMetrics>> groups;
  for (const EpisodeMetrics& m : episodes) groups[m.cell].push_back(m);
  std::map<CellKey, CellSummary> out;
  for (const auto& [key, list] : groups) out.emplace(key, aggregate(list));
  return out;
}

std::string format_table(const std::map<CellKey, CellSummary>& cells) {
  auto case_label = [](SpsRule r) -> std::string {
    switch (r) {
      case SpsRule::kOneMotion:
        return "SPS1";
      case SpsRule::kEnoughSpace:
        return "SPS2";
      case SpsRule::kBoth:
        return "SPS1 and SPS2";
    }
    return "?";
  };
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(16) << "case" << std::setw(10) << "metric";
  for (Scenario sc : kAllScenarios) {
    for (int setting = 1; setting <= 4; ++setting) {
      os << std::right << std::setw(10)
         << (sc == Scenario::kStraightaway ? "S" : "C") + std::to_string(setting);
    }
  }
  os << '\n';
  for (SpsRule rule : kAllCases) {
    for (int row = 0; row < 2; ++row) {
      os << std::left << std::setw(16) << (row == 0 ? case_label(rule) : "") << std::setw(10)
         << (row == 0 ? "dx_mean" : "viol_rate");
      for (Scenario sc : kAllScenarios) {
        for (int setting = 1; setting <= 4; ++setting) {
          const auto it = cells.find({sc, rule, setting});
          if (it == cells.end()) {
            throw std::invalid_argument("missing cell " + std::string(to_string(sc)) + "/" +
                                        case_label(rule) + "/setting " +
                                        std::to_string(setting));
          }
          const double v =
              row == 0 ? it->second.mean_leading_distance : it->second.violation_rate;
          os << std::right << std::setw(10) << v;
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

std::uint64_t episode_seed(std::uint64_t batch_seed, Scenario s, int sample) {
  return splitmix(splitmix(batch_seed) ^ (static_cast<std::uint64_t>(s) << 32) ^
                  static_cast<std::uint64_t>(sample));
}

int default_workers() {
  if (const char* env = std::getenv("SPSRACE_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("SPSRACE_WORKERS must be a positive integer, got '") +
                                env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<EpisodeMetrics> run_batch(const ExperimentParams& params, const BatchPlan& plan,
                                      const std::function<void(const EpisodeResult&)>& sink) {
  params.validate();
  struct Job {
    Scenario scenario;
    int sample;
    InitialCondition start;
    const Track* track;
  };
  std::vector<std::unique_ptr<Track>> tracks;
  std::vector<Job> jobs;
  for (Scenario sc : plan.scenarios) {
    const ScenarioGeometry g = default_geometry(sc);
    tracks.push_back(std::make_unique<Track>(g.start, g.segments, params.sps.track_width,
                                             params.sps.car_width));
    const auto starts = sample_initial_states(sc, *tracks.back(), params, plan.samples,
                                              splitmix(plan.seed ^ static_cast<std::uint64_t>(sc)));
    for (int i = 0; i < plan.samples; ++i) jobs.push_back({sc, i, starts[i], tracks.back().get()});
  }

  std::vector<EpisodeMetrics> metrics;
  std::mutex lock;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        const Job& job = jobs[j];
        EpisodeContext ctx(*job.track, params, job.start);
        for (SpsRule rule : plan.cases) {
          for (int setting : plan.settings) {
            EpisodeConfig cfg{job.scenario, rule, setting,
                              episode_seed(plan.seed, job.scenario, job.sample), job.sample,
                              job.start};
            const EpisodeResult r = run_episode(ctx, cfg);
            std::lock_guard<std::mutex> g(lock);
            metrics.push_back(metrics_of(r));
            if (sink) sink(r);
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> g(lock);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };
  const int n = std::max(1, std::min<int>(plan.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(metrics.begin(), metrics.end(), [](const EpisodeMetrics& a, const EpisodeMetrics& b) {
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.sample < b.sample;
  });
  return metrics;
}

}  // namespace sps_racing
