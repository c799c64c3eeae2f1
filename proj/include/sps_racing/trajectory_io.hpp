#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sps_racing/experiment.hpp"
#include "sps_racing/history.hpp"
#include "sps_racing/sps_rules.hpp"

namespace sps_racing {

class EmptyInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrajectoryParseError : public std::runtime_error {
 public:
  TrajectoryParseError(int row, const std::string& what);
  int row() const { return row_; }

 private:
  int row_;
};

struct TrajectoryRow {
  int tau = 0;
  Player player = Player::kAttacker;
  double px = 0.0;
  double py = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double d = 0.0;
  double e = 0.0;
  bool block = false;
  friend bool operator==(const TrajectoryRow&, const TrajectoryRow&) = default;
};

/// Episode file: ordered "# key: value" header lines, then a CSV table with
/// one row per (tau, player).
struct TrajectoryRecord {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<TrajectoryRow> rows;

  /// Header value for `key`; throws std::out_of_range when absent.
  const std::string& get(const std::string& key) const;
  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

inline constexpr const char* kTrajectoryColumns[] = {"tau", "player", "px", "py", "theta",
                                                     "v",   "d",      "e",  "block"};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

void write_trajectories(std::ostream& os, const TrajectoryRecord& record);
void write_trajectories(const std::filesystem::path& path, const TrajectoryRecord& record);
TrajectoryRecord read_trajectories(std::istream& is);
TrajectoryRecord read_trajectories(const std::filesystem::path& path);

/// Record of a finished episode, header included.
TrajectoryRecord episode_record(const EpisodeResult& r, const Track& track,
                                const ExperimentParams& params);

/// Frenet samples of one player, ordered by tau.
FrenetTrajectory frenet_of(const TrajectoryRecord& record, Player p);

/// Metrics stored in an episode file's header and rows.
EpisodeMetrics metrics_from_record(const TrajectoryRecord& record);

/// Metrics of every "*.csv" episode file in `dir`, in file-name order.
std::vector<EpisodeMetrics> load_batch_metrics(const std::filesystem::path& dir);

}  // namespace sps_racing
