#include "uwdock/scenario.hpp"

#include <fstream>

#include "json.hpp"
#include "uwdock/errors.hpp"

namespace uwdock {

const char* to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::NN: return "nn";
    case DetectorKind::BP: return "bp";
    case DetectorKind::None: return "none";
  }
  return "?";
}

const char* to_string(CurrentPolicy policy) {
  switch (policy) {
    case CurrentPolicy::Perpendicular: return "perpendicular";
    case CurrentPolicy::Random: return "random";
    case CurrentPolicy::Fixed: return "fixed";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  if (version != 1) throw ConfigError("scenario: unsupported version");
  if (!(spawn.dist_min >= 10.0 - 1e-9) || !(spawn.dist_max <= 15.0 + 1e-9) ||
      spawn.dist_min > spawn.dist_max) {
    throw ConfigError("scenario: spawn distance must lie within [10, 15] m");
  }
  if (stop.successes < 1 || stop.max_episodes < 1 || stop.max_retries < 0) {
    throw ConfigError("scenario: stop rule must be positive");
  }
  if (current_magnitude < 0.0) {
    throw ConfigError("scenario: current magnitude must be non-negative");
  }
  if (dock.drift_speed > dock.drift_cap + 1e-12 ||
      dock.yaw_jitter_dps > dock.yaw_cap_dps + 1e-12) {
    throw ConfigError("scenario: dock drift exceeds the configured caps");
  }
  if (bp_threshold < 0.0 || bp_threshold > 1.0) {
    throw ConfigError("scenario: bp_threshold must lie in [0, 1]");
  }
  water.validate();
  acoustic.validate();
  guidance.validate();
  camera.validate();
  hydro.validate();
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* k : keys) known |= key == k;
    if (!known) throw ConfigError("scenario: unknown key '" + key + "' in " + where);
  }
}

Vec3 read_vec3(const json& j, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != 3) {
    throw ConfigError(std::string("scenario: '") + key + "' must have 3 entries");
  }
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("scenario: parse error in " + path + ": " + e.what());
  }

  reject_unknown(j,
                 {"version", "name", "detector", "bp_threshold", "nn_weights",
                  "water", "scene", "current", "spawn", "dock", "acoustic",
                  "guidance", "camera", "optical", "envelope", "stop", "limits",
                  "hydro"},
                 "root");

  ScenarioConfig c;
  c.version = j.value("version", 1);
  c.name = j.value("name", std::string("custom"));

  if (j.contains("detector")) {
    const std::string d = j.at("detector").get<std::string>();
    if (d == "nn") c.detector = DetectorKind::NN;
    else if (d == "bp") c.detector = DetectorKind::BP;
    else if (d == "none") c.detector = DetectorKind::None;
    else throw ConfigError("scenario: detector must be nn|bp|none");
  }
  c.bp_threshold = j.value("bp_threshold", c.bp_threshold);
  c.nn_weights = j.value("nn_weights", c.nn_weights);

  if (j.contains("water")) {
    const auto& w = j.at("water");
    reject_unknown(w, {"label", "beta", "beta_inf", "k_gen"}, "water");
    if (w.contains("label")) {
      c.water = WaterModel::jerlov(w.at("label").get<std::string>());
      c.water.label = w.at("label").get<std::string>();
    }
    c.water.beta = read_vec3(w, "beta", c.water.beta);
    c.water.beta_inf = read_vec3(w, "beta_inf", c.water.beta_inf);
    c.water.k_gen = w.value("k_gen", c.water.k_gen);
  }

  if (j.contains("scene")) {
    const auto& s = j.at("scene");
    reject_unknown(s,
                   {"beacon_radius_m", "background", "silhouette_level",
                    "glare_probability", "glare_intensity"},
                   "scene");
    c.scene.beacon_radius_m = s.value("beacon_radius_m", c.scene.beacon_radius_m);
    c.scene.background = s.value("background", c.scene.background);
    c.scene.silhouette_level = s.value("silhouette_level", c.scene.silhouette_level);
    c.scene.glare_probability = s.value("glare_probability", c.scene.glare_probability);
    c.scene.glare_intensity = s.value("glare_intensity", c.scene.glare_intensity);
  }

  if (j.contains("current")) {
    const auto& cur = j.at("current");
    reject_unknown(cur, {"magnitude", "policy", "direction_deg"}, "current");
    c.current_magnitude = cur.value("magnitude", 0.0);
    const std::string policy = cur.value("policy", std::string("perpendicular"));
    if (policy == "perpendicular") c.current_policy = CurrentPolicy::Perpendicular;
    else if (policy == "random") c.current_policy = CurrentPolicy::Random;
    else if (policy == "fixed") c.current_policy = CurrentPolicy::Fixed;
    else throw ConfigError("scenario: current policy must be perpendicular|random|fixed");
    c.current_direction_deg = cur.value("direction_deg", 0.0);
  }

  if (j.contains("spawn")) {
    const auto& s = j.at("spawn");
    reject_unknown(s, {"dist_min", "dist_max", "cone_deg", "heading_jitter_deg"},
                   "spawn");
    c.spawn.dist_min = s.value("dist_min", c.spawn.dist_min);
    c.spawn.dist_max = s.value("dist_max", c.spawn.dist_max);
    c.spawn.cone_deg = s.value("cone_deg", c.spawn.cone_deg);
    c.spawn.heading_jitter_deg = s.value("heading_jitter_deg", c.spawn.heading_jitter_deg);
  }

  if (j.contains("dock")) {
    const auto& d = j.at("dock");
    reject_unknown(d, {"depth", "drift_speed", "yaw_jitter_dps"}, "dock");
    c.dock.depth = d.value("depth", c.dock.depth);
    c.dock.drift_speed = d.value("drift_speed", c.dock.drift_speed);
    c.dock.yaw_jitter_dps = d.value("yaw_jitter_dps", c.dock.yaw_jitter_dps);
  }

  if (j.contains("acoustic")) {
    const auto& a = j.at("acoustic");
    reject_unknown(a, {"rate_hz", "p_success", "sigma"}, "acoustic");
    c.acoustic.rate_hz = a.value("rate_hz", c.acoustic.rate_hz);
    c.acoustic.p_success = a.value("p_success", c.acoustic.p_success);
    if (a.contains("sigma")) {
      const Vec3 s = read_vec3(a, "sigma", {2.0, 2.0, 5.0});
      c.acoustic.sigma_x = s[0];
      c.acoustic.sigma_y = s[1];
      c.acoustic.sigma_heading = s[2];
    }
  }

  if (j.contains("guidance")) {
    const auto& g = j.at("guidance");
    reject_unknown(g,
                   {"r_as", "r_a", "r_h1", "r_h2", "turn_radius", "lookahead",
                    "kappa", "surge_setpoint"},
                   "guidance");
    c.guidance.r_as = g.value("r_as", c.guidance.r_as);
    c.guidance.r_a = g.value("r_a", c.guidance.r_a);
    c.guidance.r_h1 = g.value("r_h1", c.guidance.r_h1);
    c.guidance.r_h2 = g.value("r_h2", c.guidance.r_h2);
    c.guidance.turn_radius = g.value("turn_radius", c.guidance.turn_radius);
    c.guidance.lookahead = g.value("lookahead", c.guidance.lookahead);
    c.guidance.kappa = g.value("kappa", c.guidance.kappa);
    c.guidance.surge_setpoint = g.value("surge_setpoint", c.guidance.surge_setpoint);
  }

  if (j.contains("camera")) {
    const auto& cam = j.at("camera");
    reject_unknown(cam, {"width", "height", "hfov", "mount_translation"}, "camera");
    c.camera.width = cam.value("width", c.camera.width);
    c.camera.height = cam.value("height", c.camera.height);
    c.camera.hfov = cam.value("hfov", c.camera.hfov);
    c.camera.mount_translation =
        read_vec3(cam, "mount_translation", c.camera.mount_translation);
  }

  if (j.contains("optical")) {
    const auto& o = j.at("optical");
    reject_unknown(o, {"heading_gain", "pitch_gain", "presence_threshold"},
                   "optical");
    c.optical.heading_gain = o.value("heading_gain", c.optical.heading_gain);
    c.optical.pitch_gain = o.value("pitch_gain", c.optical.pitch_gain);
    c.optical.presence_threshold =
        o.value("presence_threshold", c.optical.presence_threshold);
  }

  if (j.contains("envelope")) {
    const auto& e = j.at("envelope");
    reject_unknown(e, {"radius", "heading_tolerance_deg"}, "envelope");
    c.envelope.radius = e.value("radius", c.envelope.radius);
    c.envelope.heading_tolerance_deg =
        e.value("heading_tolerance_deg", c.envelope.heading_tolerance_deg);
  }

  if (j.contains("stop")) {
    const auto& s = j.at("stop");
    reject_unknown(s, {"successes", "max_episodes", "max_retries"}, "stop");
    c.stop.successes = s.value("successes", c.stop.successes);
    c.stop.max_episodes = s.value("max_episodes", c.stop.max_episodes);
    c.stop.max_retries = s.value("max_retries", c.stop.max_retries);
  }

  if (j.contains("limits")) {
    const auto& l = j.at("limits");
    reject_unknown(l, {"max_time_s", "no_fix_timeout_s"}, "limits");
    c.limits.max_time_s = l.value("max_time_s", c.limits.max_time_s);
    c.limits.no_fix_timeout_s = l.value("no_fix_timeout_s", c.limits.no_fix_timeout_s);
  }

  if (j.contains("hydro")) {
    if (!j.at("hydro").is_string()) {
      throw ConfigError("scenario: hydro must be a parameter file path");
    }
    c.hydro = load_hydro_params(j.at("hydro").get<std::string>());
  }

  c.validate();
  return c;
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["version"] = c.version;
  j["name"] = c.name;
  j["detector"] = to_string(c.detector);
  j["bp_threshold"] = c.bp_threshold;
  if (!c.nn_weights.empty()) j["nn_weights"] = c.nn_weights;
  j["water"] = {{"label", c.water.label},
                {"beta", {c.water.beta[0], c.water.beta[1], c.water.beta[2]}},
                {"beta_inf",
                 {c.water.beta_inf[0], c.water.beta_inf[1], c.water.beta_inf[2]}},
                {"k_gen", c.water.k_gen}};
  j["current"] = {{"magnitude", c.current_magnitude},
                  {"policy", to_string(c.current_policy)},
                  {"direction_deg", c.current_direction_deg}};
  j["spawn"] = {{"dist_min", c.spawn.dist_min},
                {"dist_max", c.spawn.dist_max},
                {"cone_deg", c.spawn.cone_deg},
                {"heading_jitter_deg", c.spawn.heading_jitter_deg}};
  j["dock"] = {{"depth", c.dock.depth},
               {"drift_speed", c.dock.drift_speed},
               {"yaw_jitter_dps", c.dock.yaw_jitter_dps}};
  j["acoustic"] = {{"rate_hz", c.acoustic.rate_hz},
                   {"p_success", c.acoustic.p_success},
                   {"sigma",
                    {c.acoustic.sigma_x, c.acoustic.sigma_y, c.acoustic.sigma_heading}}};
  j["guidance"] = {{"r_as", c.guidance.r_as},     {"r_a", c.guidance.r_a},
                   {"r_h1", c.guidance.r_h1},     {"r_h2", c.guidance.r_h2},
                   {"turn_radius", c.guidance.turn_radius},
                   {"lookahead", c.guidance.lookahead},
                   {"kappa", c.guidance.kappa},
                   {"surge_setpoint", c.guidance.surge_setpoint}};
  j["camera"] = {{"width", c.camera.width},
                 {"height", c.camera.height},
                 {"hfov", c.camera.hfov}};
  j["optical"] = {{"heading_gain", c.optical.heading_gain},
                  {"pitch_gain", c.optical.pitch_gain},
                  {"presence_threshold", c.optical.presence_threshold}};
  j["envelope"] = {{"radius", c.envelope.radius},
                   {"heading_tolerance_deg", c.envelope.heading_tolerance_deg}};
  j["stop"] = {{"successes", c.stop.successes},
               {"max_episodes", c.stop.max_episodes},
               {"max_retries", c.stop.max_retries}};
  j["limits"] = {{"max_time_s", c.limits.max_time_s},
                 {"no_fix_timeout_s", c.limits.no_fix_timeout_s}};
  return j.dump(2);
}

std::vector<ScenarioConfig> preset_matrix(const std::string& name) {
  auto cell = [](const std::string& id, DetectorKind detector,
                 double current, const std::string& water) {
    ScenarioConfig c;
    c.name = id;
    c.detector = detector;
    c.current_magnitude = current;
    c.current_policy = CurrentPolicy::Perpendicular;
    c.water = WaterModel::jerlov(water);
    return c;
  };

  std::vector<ScenarioConfig> t1 = {
      cell("t1.1", DetectorKind::NN, 0.0, "5C"),
      cell("t1.2", DetectorKind::BP, 0.0, "5C"),
      cell("t1.3", DetectorKind::NN, 0.1, "5C"),
      cell("t1.4", DetectorKind::BP, 0.1, "5C"),
      cell("t1.5", DetectorKind::NN, 0.25, "5C"),
      cell("t1.6", DetectorKind::BP, 0.25, "5C"),
  };
  std::vector<ScenarioConfig> t2 = {
      cell("t2.1", DetectorKind::NN, 0.0, "IC"),
      cell("t2.2", DetectorKind::BP, 0.0, "IC"),
      cell("t2.3", DetectorKind::NN, 0.1, "IC"),
      cell("t2.4", DetectorKind::BP, 0.1, "IC"),
      cell("t2.5", DetectorKind::NN, 0.25, "IC"),
      cell("t2.6", DetectorKind::BP, 0.25, "IC"),
  };
  ScenarioConfig t31 = cell("t3.1", DetectorKind::NN, 0.05, "7C");
  t31.current_policy = CurrentPolicy::Random;

  if (name == "t1") return t1;
  if (name == "t2") return t2;
  if (name == "t3") return {t31};
  if (name == "all") {
    std::vector<ScenarioConfig> all = t1;
    all.insert(all.end(), t2.begin(), t2.end());
    all.push_back(t31);
    return all;
  }
  throw ConfigError("preset: unknown name '" + name + "' (use t1|t2|t3|all)");
}

}  // namespace uwdock
