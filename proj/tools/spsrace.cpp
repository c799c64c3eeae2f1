// Command-line front end: single episodes, the full batch grid, SPS checks on
// exported files and table aggregation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sps_racing/config.hpp"
#include "sps_racing/experiment.hpp"
#include "sps_racing/trajectory_io.hpp"

namespace fs = std::filesystem;
using namespace sps_racing;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;

  RunConfig load() const {
    RunConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    return apply_overrides(cfg, overrides);
  }
};

std::string episode_file_name(const EpisodeConfig& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_%s_s%d_%03d.csv", std::string(to_string(c.scenario)).c_str(),
                std::string(to_string(c.sps_case)).c_str(), c.setting, c.sample);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_run(const Common& common, const std::string& out_path) {
  const RunConfig cfg = common.load();
  const Track track = build_track(cfg, cfg.scenario);
  EpisodeConfig ep{cfg.scenario, cfg.sps_case, cfg.setting, cfg.seed, 0, cfg.resolved_start()};
  const EpisodeResult r = run_episode(track, cfg.params, ep);
  write_trajectories(fs::path(out_path), episode_record(r, track, cfg.params));

  const fs::path manifest_path = fs::path(out_path).replace_extension(".manifest.json");
  RunManifest m{config_digest(cfg), cfg.seed, std::string(kArtifactVersion), {out_path},
                utc_timestamp()};
  write_json(manifest_path, to_json(m));

  std::cout << "scenario " << to_string(cfg.scenario) << ", case " << to_string(cfg.sps_case)
            << ", setting " << cfg.setting << '\n'
            << "history          " << r.realized.describe(cfg.params.mcts.shape) << '\n'
            << "leading distance " << r.leading_distance << " m\n"
            << "violation        " << (r.verdict.violated ? "yes" : "no") << '\n'
            << "min distance     " << r.gne.min_distance << " m\n"
            << "wall time        " << r.wall_seconds << " s\n"
            << "wrote " << out_path << '\n';
  return 0;
}

int cmd_batch(const Common& common, const std::string& out_dir, std::optional<int> samples,
              std::optional<int> workers) {
  const RunConfig cfg = common.load();
  BatchPlan plan = cfg.batch;
  if (samples) plan.samples = *samples;
  plan.workers = workers ? *workers : default_workers();
  fs::create_directories(out_dir);

  std::map<Scenario, Track> tracks;
  for (Scenario s : plan.scenarios) tracks.emplace(s, build_track(cfg, s));
  std::vector<std::string> files;
  std::size_t done = 0;
  const std::size_t total =
      plan.scenarios.size() * plan.cases.size() * plan.settings.size() * plan.samples;
  const auto metrics = run_batch(cfg.params, plan, [&](const EpisodeResult& r) {
    const std::string name = episode_file_name(r.config);
    write_trajectories(fs::path(out_dir) / name,
                       episode_record(r, tracks.at(r.config.scenario), cfg.params));
    files.push_back(name);
    if (++done % 50 == 0 || done == total) {
      std::cerr << "  " << done << "/" << total << " episodes\n";
    }
  });
  std::sort(files.begin(), files.end());

  const std::string table = format_table(aggregate_cells(metrics));
  std::ofstream(fs::path(out_dir) / "table.txt") << table;
  RunManifest m{config_digest(cfg), plan.seed, std::string(kArtifactVersion), files,
                utc_timestamp()};
  write_json(fs::path(out_dir) / "manifest.json", to_json(m));
  write_json(fs::path(out_dir) / "config.json", to_json(cfg));
  std::cout << table;
  return 0;
}

int cmd_check(const std::string& path, const std::string& case_text) {
  const TrajectoryRecord rec = read_trajectories(fs::path(path));
  SpsConfig sps;
  sps.car_width = std::stod(rec.get("car_width"));
  sps.track_width = std::stod(rec.get("track_width"));
  sps.delta_v = std::stod(rec.get("delta_v"));
  sps.active_rules = parse_sps_rule(case_text.empty() ? rec.get("sps_case") : case_text);
  const FrenetTrajectory attacker = frenet_of(rec, Player::kAttacker);
  const FrenetTrajectory defender = frenet_of(rec, Player::kDefender);
  const SpsVerdict v = evaluate_sps(defender, attacker, sps);

  std::cout << "rules     " << to_string(sps.active_rules) << '\n'
            << "violation " << (v.violated ? "yes" : "no") << '\n';
  if (v.one_motion) {
    const auto& w = *v.one_motion;
    std::cout << "one-motion witness   " << w[0] << ' ' << w[1] << ' ' << w[2] << ' ' << w[3]
              << '\n';
  }
  if (v.enough_space) {
    std::cout << "enough-space witness " << (*v.enough_space)[0] << ' ' << (*v.enough_space)[1]
              << '\n';
  }
  if (case_text.empty()) {
    const bool stored = rec.get("violated") == "1";
    std::cout << "stored flag " << (stored ? "yes" : "no")
              << (stored == v.violated ? " (consistent)" : " (MISMATCH)") << '\n';
    if (stored != v.violated) return 3;
  }
  return 0;
}

int cmd_table(const std::string& dir) {
  const auto metrics = load_batch_metrics(dir);
  if (metrics.empty()) throw std::runtime_error("no episode files in " + dir);
  const std::string table = format_table(aggregate_cells(metrics));
  std::ofstream(fs::path(dir) / "table.txt") << table;
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-car racing planner with sportsmanship rules"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", common.overrides, "Override a config field, e.g. low_level.horizon=15");

  auto* run = app.add_subcommand("run", "Run a single episode");
  std::string run_out = "episode.csv";
  run->add_option("-o,--out", run_out, "Trajectory file to write");

  auto* batch = app.add_subcommand("batch", "Run the scenario x case x setting x sample grid");
  std::string batch_out = "batch";
  std::optional<int> samples, workers;
  batch->add_option("-o,--out", batch_out, "Output directory");
  batch->add_option("-n,--samples", samples, "Samples per scenario")->check(CLI::PositiveNumber);
  batch->add_option("-j,--workers", workers, "Worker threads (default: SPSRACE_WORKERS or cores)")
      ->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("check", "Apply the SPS detectors to an episode file");
  std::string check_file, check_case;
  check->add_option("file", check_file)->required()->check(CLI::ExistingFile);
  check->add_option("--case", check_case, "Rules to apply (default: the file's case)");

  auto* table = app.add_subcommand("table", "Aggregate a batch directory");
  std::string table_dir;
  table->add_option("dir", table_dir)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(common, run_out);
    if (*batch) return cmd_batch(common, batch_out, samples, workers);
    if (*check) return cmd_check(check_file, check_case);
    if (*table) return cmd_table(table_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
