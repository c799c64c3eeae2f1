#include "sps_racing/config.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace sps_racing {

using nlohmann::json;

ConfigParseError::ConfigParseError(const std::string& field, int line, const std::string& what)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? std::string() : "field '" + field + "': ") + what),
      field_(field),
      line_(line) {}

ScenarioGeometry RunConfig::resolved_geometry() const {
  return geometry ? *geometry : default_geometry(scenario);
}

InitialCondition RunConfig::resolved_start() const {
  return start ? *start : nominal_start(scenario);
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.params.mcts.c = 30.0;
  cfg.params.mcts.iterations = 5000;
  cfg.params.mcts.shape = GameShape{};
  return cfg;
}

namespace {

std::string_view warm_start_name(IbrWarmStart w) {
  return w == IbrWarmStart::kDefenderSolo ? "defender_solo" : "lane_holding";
}

json start_json(const StartState& s) { return {{"d", s.d}, {"e", s.e}, {"v", s.v}}; }

// Line of the first occurrence of "key" in the source text, 0 if absent.
int line_of_key(std::string_view text, const std::string& path) {
  if (text.empty()) return 0;
  std::string key = path.substr(path.find_last_of('.') + 1);
  if (const auto bracket = key.find('['); bracket != std::string::npos) key.resize(bracket);
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string_view::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

struct Reader {
  std::string_view text;

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ConfigParseError(path, line_of_key(text, path), what);
  }

  const json& field(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing");
    return *it;
  }
  double number(const json& obj, const std::string& path, const char* key) const {
    const json& v = field(obj, path, key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    return v.get<double>();
  }
  long long integer(const json& obj, const std::string& path, const char* key) const {
    const json& v = field(obj, path, key);
    if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
    return v.get<long long>();
  }
  std::string string(const json& obj, const std::string& path, const char* key) const {
    const json& v = field(obj, path, key);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
  }
  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }

  template <typename F>
  auto parsed(const std::string& path, F&& f) const {
    try {
      return f();
    } catch (const ConfigParseError&) {
      throw;
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  }

  StartState start(const json& obj, const std::string& path) const {
    return {number(obj, path, "d"), number(obj, path, "e"), number(obj, path, "v")};
  }
};

// Copies `user` onto `base`, rejecting keys the defaults do not have. A null
// default accepts any value.
void patch(json& base, const json& user, const std::string& path, const Reader& r) {
  if (!user.is_object()) r.fail(path, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string sub = path.empty() ? it.key() : path + "." + it.key();
    const auto target = base.find(it.key());
    if (target == base.end()) r.fail(sub, "unknown field");
    if (target->is_object() && it->is_object()) {
      patch(*target, *it, sub, r);
    } else {
      *target = *it;
    }
  }
}

RunConfig from_json(const json& j, const Reader& r) {
  RunConfig cfg;
  cfg.scenario = r.parsed("scenario", [&] { return parse_scenario(r.string(j, "", "scenario")); });
  cfg.sps_case = r.parsed("sps_case", [&] { return parse_sps_rule(r.string(j, "", "sps_case")); });
  cfg.setting = static_cast<int>(r.integer(j, "", "setting"));
  if (cfg.setting < 1 || cfg.setting > 4) r.fail("setting", "must be 1, 2, 3 or 4");
  const long long seed = r.integer(j, "", "seed");
  if (seed < 0) r.fail("seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  const json& track = r.field(j, "", "track");
  cfg.params.sps.track_width = r.number(track, "track", "width");
  cfg.params.sps.car_width = r.number(track, "track", "car_width");
  const json& geom = r.field(track, "track", "geometry");
  if (!geom.is_null()) {
    ScenarioGeometry g;
    const json& start = r.field(geom, "track.geometry", "start");
    g.start = {r.number(start, "track.geometry.start", "x"),
               r.number(start, "track.geometry.start", "y"),
               r.number(start, "track.geometry.start", "heading")};
    const json& segs = r.field(geom, "track.geometry", "segments");
    if (!segs.is_array() || segs.empty()) {
      r.fail("track.geometry.segments", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const std::string p = "track.geometry.segments[" + std::to_string(i) + "]";
      const std::string type = r.string(segs[i], p, "type");
      SegmentSpec s;
      if (type == "line") {
        s.kind = SegmentKind::kLine;
      } else if (type == "arc") {
        s.kind = SegmentKind::kArc;
        s.curvature = r.number(segs[i], p, "curvature");
      } else {
        r.fail(p + ".type", "expected line or arc");
      }
      s.length = r.number(segs[i], p, "length");
      g.segments.push_back(s);
    }
    cfg.geometry = g;
  }

  const json& veh = r.field(j, "", "vehicles");
  cfg.params.kinematics.wheelbase = r.number(veh, "vehicles", "wheelbase");
  cfg.params.kinematics.steer_limit = r.number(veh, "vehicles", "steer_limit");
  const json& starts = r.field(veh, "vehicles", "start");
  if (!starts.is_null()) {
    cfg.start = InitialCondition{
        r.start(r.field(starts, "vehicles.start", "attacker"), "vehicles.start.attacker"),
        r.start(r.field(starts, "vehicles.start", "defender"), "vehicles.start.defender")};
  }

  const json& low = r.field(j, "", "low_level");
  LowGameConfig& lc = cfg.params.low;
  lc.horizon = static_cast<int>(r.integer(low, "low_level", "horizon"));
  lc.tau_s = r.number(low, "low_level", "tau_s");
  lc.w1 = r.number(low, "low_level", "w1");
  lc.gamma_max = r.number(low, "low_level", "xi_max");
  lc.d_safe = r.number(low, "low_level", "d_safe");
  lc.collision_margin = r.number(low, "low_level", "collision_margin");
  lc.d_res = r.number(low, "low_level", "d_res");
  lc.e_res = r.number(low, "low_level", "e_res");
  lc.ibr_max_iters = static_cast<int>(r.integer(low, "low_level", "ibr_max_iters"));
  lc.ibr_tolerance = r.number(low, "low_level", "ibr_tolerance");
  lc.tracking_tolerance = r.number(low, "low_level", "tracking_tolerance");
  lc.follower_delay = static_cast<int>(r.integer(low, "low_level", "follower_delay"));
  const std::string warm = r.string(low, "low_level", "warm_start");
  if (warm == "defender_solo") {
    cfg.params.warm_start = IbrWarmStart::kDefenderSolo;
  } else if (warm == "lane_holding") {
    cfg.params.warm_start = IbrWarmStart::kLaneHolding;
  } else {
    r.fail("low_level.warm_start", "expected defender_solo or lane_holding");
  }

  const json& high = r.field(j, "", "high_level");
  MctsConfig& mc = cfg.params.mcts;
  mc.c = r.number(high, "high_level", "c");
  mc.iterations = static_cast<int>(r.integer(high, "high_level", "iterations"));
  mc.shape.rounds = static_cast<int>(r.integer(high, "high_level", "rounds"));
  mc.shape.leader = r.parsed("high_level.leader",
                             [&] { return parse_player(r.string(high, "high_level", "leader")); });
  const json& actions = r.field(high, "high_level", "action_set");
  if (!actions.is_array() || actions.empty()) {
    r.fail("high_level.action_set", "expected a non-empty array of numbers");
  }
  mc.shape.action_set.clear();
  for (const json& a : actions) {
    if (!a.is_number()) r.fail("high_level.action_set", "expected numbers");
    mc.shape.action_set.push_back(a.get<double>());
  }

  const json& util = r.field(j, "", "utility");
  cfg.params.utility = {r.number(util, "utility", "beta"), r.number(util, "utility", "omega"),
                        r.number(util, "utility", "reg")};
  cfg.params.sps.delta_v = r.number(r.field(j, "", "sps"), "sps", "delta_v");

  const json& batch = r.field(j, "", "batch");
  cfg.batch.samples = static_cast<int>(r.integer(batch, "batch", "samples"));
  if (cfg.batch.samples < 1) r.fail("batch.samples", "must be positive");
  const long long bseed = r.integer(batch, "batch", "seed");
  if (bseed < 0) r.fail("batch.seed", "must be non-negative");
  cfg.batch.seed = static_cast<std::uint64_t>(bseed);
  auto list = [&](const char* key) -> const json& {
    const json& v = r.field(batch, "batch", key);
    if (!v.is_array() || v.empty()) r.fail(std::string("batch.") + key, "expected a non-empty array");
    return v;
  };
  cfg.batch.scenarios.clear();
  for (const json& s : list("scenarios")) {
    if (!s.is_string()) r.fail("batch.scenarios", "expected strings");
    cfg.batch.scenarios.push_back(
        r.parsed("batch.scenarios", [&] { return parse_scenario(s.get<std::string>()); }));
  }
  cfg.batch.cases.clear();
  for (const json& s : list("cases")) {
    if (!s.is_string()) r.fail("batch.cases", "expected strings");
    cfg.batch.cases.push_back(
        r.parsed("batch.cases", [&] { return parse_sps_rule(s.get<std::string>()); }));
  }
  cfg.batch.settings.clear();
  for (const json& s : list("settings")) {
    if (!s.is_number_integer() || s.get<int>() < 1 || s.get<int>() > 4) {
      r.fail("batch.settings", "expected integers in 1..4");
    }
    cfg.batch.settings.push_back(s.get<int>());
  }

  r.parsed("", [&] {
    cfg.params.validate();
    return 0;
  });
  if (cfg.geometry) {
    r.parsed("track.geometry", [&] {
      build_track(cfg, cfg.scenario);
      return 0;
    });
  }
  return cfg;
}

RunConfig finish(const json& user, std::string_view text) {
  const Reader r{text};
  json doc = to_json(default_config());
  patch(doc, user, "", r);
  return from_json(doc, r);
}

}  // namespace

json to_json(const RunConfig& cfg) {
  json geometry = nullptr;
  if (cfg.geometry) {
    json segs = json::array();
    for (const SegmentSpec& s : cfg.geometry->segments) {
      json seg = {{"type", s.kind == SegmentKind::kLine ? "line" : "arc"}, {"length", s.length}};
      if (s.kind == SegmentKind::kArc) seg["curvature"] = s.curvature;
      segs.push_back(seg);
    }
    geometry = {{"start",
                 {{"x", cfg.geometry->start.x},
                  {"y", cfg.geometry->start.y},
                  {"heading", cfg.geometry->start.heading}}},
                {"segments", segs}};
  }
  json start = nullptr;
  if (cfg.start) {
    start = {{"attacker", start_json(cfg.start->attacker)},
             {"defender", start_json(cfg.start->defender)}};
  }
  const LowGameConfig& lc = cfg.params.low;
  const MctsConfig& mc = cfg.params.mcts;
  json scenarios = json::array(), cases = json::array();
  for (Scenario s : cfg.batch.scenarios) scenarios.push_back(std::string(to_string(s)));
  for (SpsRule s : cfg.batch.cases) cases.push_back(std::string(to_string(s)));
  return {
      {"scenario", std::string(to_string(cfg.scenario))},
      {"sps_case", std::string(to_string(cfg.sps_case))},
      {"setting", cfg.setting},
      {"seed", cfg.seed},
      {"track",
       {{"width", cfg.params.sps.track_width},
        {"car_width", cfg.params.sps.car_width},
        {"geometry", geometry}}},
      {"vehicles",
       {{"wheelbase", cfg.params.kinematics.wheelbase},
        {"steer_limit", cfg.params.kinematics.steer_limit},
        {"start", start}}},
      {"low_level",
       {{"horizon", lc.horizon},
        {"tau_s", lc.tau_s},
        {"w1", lc.w1},
        {"xi_max", lc.gamma_max},
        {"d_safe", lc.d_safe},
        {"collision_margin", lc.collision_margin},
        {"d_res", lc.d_res},
        {"e_res", lc.e_res},
        {"ibr_max_iters", lc.ibr_max_iters},
        {"ibr_tolerance", lc.ibr_tolerance},
        {"tracking_tolerance", lc.tracking_tolerance},
        {"follower_delay", lc.follower_delay},
        {"warm_start", std::string(warm_start_name(cfg.params.warm_start))}}},
      {"high_level",
       {{"c", mc.c},
        {"rounds", mc.shape.rounds},
        {"iterations", mc.iterations},
        {"action_set", mc.shape.action_set},
        {"leader", std::string(to_string(mc.shape.leader))}}},
      {"utility",
       {{"beta", cfg.params.utility.beta},
        {"omega", cfg.params.utility.omega},
        {"reg", cfg.params.utility.reg}}},
      {"sps", {{"delta_v", cfg.params.sps.delta_v}}},
      {"batch",
       {{"samples", cfg.batch.samples},
        {"seed", cfg.batch.seed},
        {"scenarios", scenarios},
        {"cases", cases},
        {"settings", cfg.batch.settings}}},
  };
}

RunConfig parse_config(std::string_view text) {
  json user;
  try {
    user = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + (byte ? byte - 1 : 0), '\n'));
    throw ConfigParseError("", line, std::string("malformed JSON: ") + e.what());
  }
  return finish(user, text);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigParseError& e) {
    throw ConfigParseError(e.field(), e.line(), path.string() + ": " + e.what());
  }
}

RunConfig apply_overrides(const RunConfig& cfg, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return cfg;
  const Reader r{{}};
  json doc = to_json(cfg);
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigParseError(o, 0, "override must look like section.field=value");
    }
    const std::string path = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &doc;
    std::size_t begin = 0;
    for (;;) {
      const auto dot = path.find('.', begin);
      const std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
      if (!node->is_object() || !node->contains(key)) {
        throw ConfigParseError(path, 0, "unknown field in override");
      }
      node = &(*node)[key];
      if (dot == std::string::npos) break;
      begin = dot + 1;
    }
    *node = value;
  }
  return from_json(doc, r);
}

std::string config_digest(const RunConfig& cfg) {
  const std::string canonical = to_json(cfg).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

Track build_track(const RunConfig& cfg, Scenario scenario) {
  const ScenarioGeometry g =
      cfg.geometry && scenario == cfg.scenario ? *cfg.geometry : default_geometry(scenario);
  return Track(g.start, g.segments, cfg.params.sps.track_width, cfg.params.sps.car_width);
}

json to_json(const RunManifest& m) {
  return {{"digest", m.digest},
          {"seed", m.seed},
          {"version", m.version},
          {"files", m.files},
          {"timestamp", m.timestamp}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.digest = j.at("digest").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.files = j.at("files").get<std::vector<std::string>>();
  m.timestamp = j.at("timestamp").get<std::string>();
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace sps_racing
