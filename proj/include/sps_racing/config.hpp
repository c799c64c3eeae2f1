#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sps_racing/experiment.hpp"

namespace sps_racing {

/// Config problem with the offending field path and, when known, the line.
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(const std::string& field, int line, const std::string& what);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct RunConfig {
  ExperimentParams params;
  Scenario scenario = Scenario::kStraightaway;
  SpsRule sps_case = SpsRule::kOneMotion;
  int setting = 1;
  std::uint64_t seed = 0;
  /// Track geometry; the scenario default when unset.
  std::optional<ScenarioGeometry> geometry;
  /// Start states; the scenario's nominal start when unset.
  std::optional<InitialCondition> start;
  BatchPlan batch;

  ScenarioGeometry resolved_geometry() const;
  InitialCondition resolved_start() const;
};

/// Defaults for every field.
RunConfig default_config();

nlohmann::json to_json(const RunConfig& cfg);

/// Parses a JSON config on top of the defaults. Unknown fields, wrong types
/// and invalid values are reported with the field path and source line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies "section.field=value" overrides; the value is read as JSON, or as
/// a plain string when it is not valid JSON.
RunConfig apply_overrides(const RunConfig& cfg, const std::vector<std::string>& overrides);

/// SHA-256 of the canonical JSON form, hex encoded.
std::string config_digest(const RunConfig& cfg);

Track build_track(const RunConfig& cfg, Scenario scenario);

struct RunManifest {
  std::string digest;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> files;
  std::string timestamp;  // UTC, ISO 8601
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
std::string utc_timestamp();

inline constexpr std::string_view kArtifactVersion = "1.0.0";

}  // namespace sps_racing
