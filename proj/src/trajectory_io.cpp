#include "sps_racing/trajectory_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace sps_racing {

TrajectoryParseError::TrajectoryParseError(int row, const std::string& what)
    : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}

const std::string& TrajectoryRecord::get(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  throw std::out_of_range("header has no key '" + key + "'");
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf.data(), ptr);
}

void write_trajectories(std::ostream& os, const TrajectoryRecord& record) {
  for (const auto& [k, v] : record.header) {
    if (k.find(':') != std::string::npos || v.find('\n') != std::string::npos) {
      throw std::invalid_argument("header entry '" + k + "' cannot be written");
    }
    os << "# " << k << ": " << v << '\n';
  }
  bool first = true;
  for (const char* c : kTrajectoryColumns) {
    os << (first ? "" : ",") << c;
    first = false;
  }
  os << '\n';
  for (const TrajectoryRow& r : record.rows) {
    os << r.tau << ',' << to_string(r.player) << ',' << format_double(r.px) << ','
       << format_double(r.py) << ',' << format_double(r.theta) << ',' << format_double(r.v)
       << ',' << format_double(r.d) << ',' << format_double(r.e) << ',' << (r.block ? 1 : 0)
       << '\n';
  }
  if (!os) throw std::runtime_error("write failed");
}

void write_trajectories(const std::filesystem::path& path, const TrajectoryRecord& record) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_trajectories(out, record);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  for (;;) {
    const auto comma = line.find(',', begin);
    out.push_back(line.substr(begin, comma == std::string_view::npos ? comma : comma - begin));
    if (comma == std::string_view::npos) return out;
    begin = comma + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, int row, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw TrajectoryParseError(row, "bad " + std::string(column) + " value '" +
                                        std::string(text) + "'");
  }
  return value;
}

}  // namespace

TrajectoryRecord read_trajectories(std::istream& is) {
  TrajectoryRecord record;
  std::string line;
  int row = 0;
  bool seen_content = false;
  std::map<std::string, std::size_t> columns;
  std::array<std::size_t, std::size(kTrajectoryColumns)> idx{};
  std::size_t width = 0;

  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    seen_content = true;
    if (line.rfind("# ", 0) == 0) {
      if (!columns.empty()) throw TrajectoryParseError(row, "header line after the table");
      const auto colon = line.find(": ", 2);
      if (colon == std::string::npos) throw TrajectoryParseError(row, "header without ': '");
      record.header.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    const auto fields = split(line);
    if (columns.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) columns[std::string(fields[i])] = i;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const auto it = columns.find(kTrajectoryColumns[c]);
        if (it == columns.end()) {
          throw TrajectoryParseError(row, std::string("missing column '") +
                                              kTrajectoryColumns[c] + "'");
        }
        idx[c] = it->second;
      }
      width = fields.size();
      continue;
    }
    if (fields.size() != width) {
      throw TrajectoryParseError(row, "expected " + std::to_string(width) + " fields, got " +
                                          std::to_string(fields.size()));
    }
    TrajectoryRow r;
    r.tau = parse_number<int>(fields[idx[0]], row, "tau");
    const std::string_view player = fields[idx[1]];
    if (player == "A") {
      r.player = Player::kAttacker;
    } else if (player == "D") {
      r.player = Player::kDefender;
    } else {
      throw TrajectoryParseError(row, "bad player '" + std::string(player) + "'");
    }
    r.px = parse_number<double>(fields[idx[2]], row, "px");
    r.py = parse_number<double>(fields[idx[3]], row, "py");
    r.theta = parse_number<double>(fields[idx[4]], row, "theta");
    r.v = parse_number<double>(fields[idx[5]], row, "v");
    r.d = parse_number<double>(fields[idx[6]], row, "d");
    r.e = parse_number<double>(fields[idx[7]], row, "e");
    const std::string_view b = fields[idx[8]];
    if (b != "0" && b != "1") throw TrajectoryParseError(row, "bad block '" + std::string(b) + "'");
    r.block = b == "1";
    record.rows.push_back(r);
  }
  if (!seen_content) throw EmptyInput("trajectory file is empty");
  if (columns.empty()) throw TrajectoryParseError(row, "missing column header");
  return record;
}

TrajectoryRecord read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_trajectories(in);
}

namespace {

template <std::size_t N>
std::string witness_text(const std::optional<std::array<std::size_t, N>>& w) {
  if (!w) return "none";
  std::string out;
  for (std::size_t i = 0; i < N; ++i) out += (i ? " " : "") + std::to_string((*w)[i]);
  return out;
}

}  // namespace

TrajectoryRecord episode_record(const EpisodeResult& r, const Track& track,
                                const ExperimentParams& params) {
  const GameShape& shape = params.mcts.shape;
  TrajectoryRecord rec;
  auto put = [&](const std::string& k, const std::string& v) { rec.header.emplace_back(k, v); };
  put("scenario", std::string(to_string(r.config.scenario)));
  put("sps_case", std::string(to_string(r.config.sps_case)));
  put("setting", std::to_string(r.config.setting));
  put("seed", std::to_string(r.config.seed));
  put("sample", std::to_string(r.config.sample));
  put("history", r.realized.describe(shape));
  put("stage1_history", r.stage1.describe(shape));
  put("u_attacker", format_double(r.utilities.first));
  put("u_defender", format_double(r.utilities.second));
  put("leading_distance", format_double(r.leading_distance));
  put("violated", r.verdict.violated ? "1" : "0");
  put("one_motion_witness", witness_text(r.verdict.one_motion));
  put("enough_space_witness", witness_text(r.verdict.enough_space));
  put("witness_frames", std::to_string(r.verdict.witness_frames));
  put("min_distance", format_double(r.gne.min_distance));
  put("ibr_converged", r.gne.converged ? "1" : "0");
  put("ibr_iterations", std::to_string(r.gne.iterations));
  put("fallback", r.gne.fallback_used ? "1" : "0");
  put("tracking_ok", r.gne.tracking_ok ? "1" : "0");
  put("track_width", format_double(track.track_width()));
  put("car_width", format_double(track.car_width()));
  put("delta_v", format_double(params.sps.delta_v));

  for (int i = 0; i < 2; ++i) {
    const PlayerSolution& sol = r.gne.players[i];
    for (std::size_t t = 0; t < sol.tracked.states.size(); ++t) {
      const VehicleState& s = sol.tracked.states[t];
      const FrenetSample& f = sol.frenet[t];
      rec.rows.push_back({static_cast<int>(t), static_cast<Player>(i), s.px, s.py, s.theta, s.v,
                          f.d, f.e, t < r.blocks.size() && r.blocks[t]});
    }
  }
  std::stable_sort(rec.rows.begin(), rec.rows.end(), [](const auto& a, const auto& b) {
    return a.tau != b.tau ? a.tau < b.tau : a.player < b.player;
  });
  return rec;
}

FrenetTrajectory frenet_of(const TrajectoryRecord& record, Player p) {
  std::vector<const TrajectoryRow*> rows;
  for (const TrajectoryRow& r : record.rows) {
    if (r.player == p) rows.push_back(&r);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto* a, const auto* b) { return a->tau < b->tau; });
  FrenetTrajectory out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->tau != static_cast<int>(i)) {
      throw std::invalid_argument("player " + std::string(to_string(p)) +
                                  " rows do not cover tau = 0.." + std::to_string(rows.size() - 1));
    }
    out.push_back({rows[i]->d, rows[i]->e, rows[i]->v});
  }
  return out;
}

EpisodeMetrics metrics_from_record(const TrajectoryRecord& record) {
  EpisodeMetrics m;
  try {
    m.cell = {parse_scenario(record.get("scenario")), parse_sps_rule(record.get("sps_case")),
              std::stoi(record.get("setting"))};
    m.sample = std::stoi(record.get("sample"));
    m.leading_distance = std::stod(record.get("leading_distance"));
    m.violated = record.get("violated") == "1";
    m.witness_frames = std::stoul(record.get("witness_frames"));
    m.min_distance = std::stod(record.get("min_distance"));
    m.fallback = record.get("fallback") == "1";
    m.tracking_ok = record.get("tracking_ok") == "1";
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("bad episode header: ") + e.what());
  }
  m.frames = frenet_of(record, Player::kAttacker).size();
  return m;
}

std::vector<EpisodeMetrics> load_batch_metrics(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<EpisodeMetrics> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    try {
      out.push_back(metrics_from_record(read_trajectories(f)));
    } catch (const std::exception& e) {
      throw std::runtime_error(f.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sps_racing
