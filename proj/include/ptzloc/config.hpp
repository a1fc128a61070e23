#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptzloc/dataset.hpp"
#include "ptzloc/sim.hpp"

namespace ptzloc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Whole-application configuration. Every default equals the published
/// constant the simulator is built around; a config file only needs the
/// fields it wants to change. initial pan/tilt/zoom default to auto-aim at
/// the first waypoint.
struct AppConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string scenario_name = "s-path";
  std::vector<std::array<double, 4>> waypoints;        // optional [t, x, y, z] override
  std::vector<std::array<double, 3>> attitude;         // optional [t, roll, pitch] (radians)

  struct Marker {
    double diameter_m = 0.30;
  } marker;

  struct Camera {
    int width_px = 1920;
    int height_px = 1080;
    std::vector<double> zoom_table_deg = ZoomTable::default_he40().hfov_deg;
    double latency_s = 0.13;
    double pan_tilt_step_deg = 0.02;
    std::optional<double> initial_pan_deg;
    std::optional<double> initial_tilt_deg;
    std::optional<int> initial_zoom_state;
  } camera;

  struct Control {
    double scale = 4.0;
    double threshold_deg = 1.0;
    double zoom_interval_s = 1.0;
  } control;

  struct Roi {
    int window_px = 448;
    int overlap_px = 50;
  } roi;

  struct Filter {
    std::string variant = "apf";
    int n_particles = 2000;
    double sigma_rho = 0.3;
    double sigma_rho_dot = 0.1;
    double lambda = 15.0;
    double sigma_rbf_min = 0.5;
    double init_mean = 0.0;  // <= 0: initialise from the first observation
    double init_std = 0.5;
  } filter;

  struct Smoothing {
    int hfov_order = 3;
    double hfov_f_crit_hz = 0.6;
    int angle_order = 1;
    double angle_f_crit_hz = 2.0;
  } smoothing;

  struct Noise {
    double sigma_center_px = 2.0;
    double sigma_axis_frac = 0.03;
    double sigma_phi_rad = 0.02;
    double phi_coupling = 0.28;
    double outlier_rate = 0.10;
    double outlier_phi_min = 0.2;
    double outlier_phi_max = 0.5;
    double false_negative_rate = 0.0;
  } noise;

  struct Sim {
    double dt_s = 0.125;
    double duration_s = 0.0;
    double grace_period_s = 2.0;
  } sim;

  struct Dataset {
    int total = 9000;
    int positives = 4500;
    std::string out_dir = "dataset";
    std::string backgrounds_dir;
    int canvas_px = 299;
    int stroke_px = 3;
    double blur_sigma_px = 1.0;
  } dataset;

  RunConfig to_run_config() const;
  DatasetManifest to_dataset_manifest() const;
  NoiseModel to_noise_model() const;
  FilterParams to_filter_params() const;
  RenderOptions to_render_options() const;
  void validate() const;
};

namespace detail {

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + key + ": " + e.what());
  }
}

template <typename T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& out,
                  const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + key + ": " + e.what());
  }
}

}  // namespace detail

inline AppConfig config_from_json(const nlohmann::json& j) {
  using detail::get_if_present;
  using detail::get_optional;
  AppConfig c;
  get_if_present(j, "seed", c.seed, "");
  get_if_present(j, "out_dir", c.out_dir, "");
  get_if_present(j, "scenario", c.scenario_name, "");
  get_if_present(j, "waypoints", c.waypoints, "");
  get_if_present(j, "attitude", c.attitude, "");
  if (j.contains("marker")) {
    const auto& m = j.at("marker");
    get_if_present(m, "diameter_m", c.marker.diameter_m, "marker.");
  }
  if (j.contains("camera")) {
    const auto& cam = j.at("camera");
    get_if_present(cam, "width_px", c.camera.width_px, "camera.");
    get_if_present(cam, "height_px", c.camera.height_px, "camera.");
    get_if_present(cam, "zoom_table_deg", c.camera.zoom_table_deg, "camera.");
    get_if_present(cam, "latency_s", c.camera.latency_s, "camera.");
    get_if_present(cam, "pan_tilt_step_deg", c.camera.pan_tilt_step_deg, "camera.");
    get_optional(cam, "initial_pan_deg", c.camera.initial_pan_deg, "camera.");
    get_optional(cam, "initial_tilt_deg", c.camera.initial_tilt_deg, "camera.");
    get_optional(cam, "initial_zoom_state", c.camera.initial_zoom_state, "camera.");
  }
  if (j.contains("control")) {
    const auto& ct = j.at("control");
    get_if_present(ct, "scale", c.control.scale, "control.");
    get_if_present(ct, "threshold_deg", c.control.threshold_deg, "control.");
    get_if_present(ct, "zoom_interval_s", c.control.zoom_interval_s, "control.");
  }
  if (j.contains("roi")) {
    const auto& r = j.at("roi");
    get_if_present(r, "window_px", c.roi.window_px, "roi.");
    get_if_present(r, "overlap_px", c.roi.overlap_px, "roi.");
  }
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    get_if_present(f, "variant", c.filter.variant, "filter.");
    get_if_present(f, "n_particles", c.filter.n_particles, "filter.");
    get_if_present(f, "sigma_rho", c.filter.sigma_rho, "filter.");
    get_if_present(f, "sigma_rho_dot", c.filter.sigma_rho_dot, "filter.");
    get_if_present(f, "lambda", c.filter.lambda, "filter.");
    get_if_present(f, "sigma_rbf_min", c.filter.sigma_rbf_min, "filter.");
    get_if_present(f, "init_mean", c.filter.init_mean, "filter.");
    get_if_present(f, "init_std", c.filter.init_std, "filter.");
  }
  if (j.contains("smoothing")) {
    const auto& s = j.at("smoothing");
    get_if_present(s, "hfov_order", c.smoothing.hfov_order, "smoothing.");
    get_if_present(s, "hfov_f_crit_hz", c.smoothing.hfov_f_crit_hz, "smoothing.");
    get_if_present(s, "angle_order", c.smoothing.angle_order, "smoothing.");
    get_if_present(s, "angle_f_crit_hz", c.smoothing.angle_f_crit_hz, "smoothing.");
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    get_if_present(n, "sigma_center_px", c.noise.sigma_center_px, "noise.");
    get_if_present(n, "sigma_axis_frac", c.noise.sigma_axis_frac, "noise.");
    get_if_present(n, "sigma_phi_rad", c.noise.sigma_phi_rad, "noise.");
    get_if_present(n, "phi_coupling", c.noise.phi_coupling, "noise.");
    get_if_present(n, "outlier_rate", c.noise.outlier_rate, "noise.");
    get_if_present(n, "outlier_phi_min", c.noise.outlier_phi_min, "noise.");
    get_if_present(n, "outlier_phi_max", c.noise.outlier_phi_max, "noise.");
    get_if_present(n, "false_negative_rate", c.noise.false_negative_rate, "noise.");
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    get_if_present(s, "dt_s", c.sim.dt_s, "sim.");
    get_if_present(s, "duration_s", c.sim.duration_s, "sim.");
    get_if_present(s, "grace_period_s", c.sim.grace_period_s, "sim.");
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    get_if_present(d, "total", c.dataset.total, "dataset.");
    get_if_present(d, "positives", c.dataset.positives, "dataset.");
    get_if_present(d, "out_dir", c.dataset.out_dir, "dataset.");
    get_if_present(d, "backgrounds_dir", c.dataset.backgrounds_dir, "dataset.");
    get_if_present(d, "canvas_px", c.dataset.canvas_px, "dataset.");
    get_if_present(d, "stroke_px", c.dataset.stroke_px, "dataset.");
    get_if_present(d, "blur_sigma_px", c.dataset.blur_sigma_px, "dataset.");
  }
  return c;
}

inline nlohmann::ordered_json config_to_json(const AppConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["scenario"] = c.scenario_name;
  if (!c.waypoints.empty()) j["waypoints"] = c.waypoints;
  if (!c.attitude.empty()) j["attitude"] = c.attitude;
  j["marker"] = {{"diameter_m", c.marker.diameter_m}};
  j["camera"] = {{"width_px", c.camera.width_px},
                 {"height_px", c.camera.height_px},
                 {"zoom_table_deg", c.camera.zoom_table_deg},
                 {"latency_s", c.camera.latency_s},
                 {"pan_tilt_step_deg", c.camera.pan_tilt_step_deg}};
  if (c.camera.initial_pan_deg) j["camera"]["initial_pan_deg"] = *c.camera.initial_pan_deg;
  if (c.camera.initial_tilt_deg) j["camera"]["initial_tilt_deg"] = *c.camera.initial_tilt_deg;
  if (c.camera.initial_zoom_state) j["camera"]["initial_zoom_state"] = *c.camera.initial_zoom_state;
  j["control"] = {{"scale", c.control.scale},
                  {"threshold_deg", c.control.threshold_deg},
                  {"zoom_interval_s", c.control.zoom_interval_s}};
  j["roi"] = {{"window_px", c.roi.window_px}, {"overlap_px", c.roi.overlap_px}};
  j["filter"] = {{"variant", c.filter.variant},
                 {"n_particles", c.filter.n_particles},
                 {"sigma_rho", c.filter.sigma_rho},
                 {"sigma_rho_dot", c.filter.sigma_rho_dot},
                 {"lambda", c.filter.lambda},
                 {"sigma_rbf_min", c.filter.sigma_rbf_min},
                 {"init_mean", c.filter.init_mean},
                 {"init_std", c.filter.init_std}};
  j["smoothing"] = {{"hfov_order", c.smoothing.hfov_order},
                    {"hfov_f_crit_hz", c.smoothing.hfov_f_crit_hz},
                    {"angle_order", c.smoothing.angle_order},
                    {"angle_f_crit_hz", c.smoothing.angle_f_crit_hz}};
  j["noise"] = {{"sigma_center_px", c.noise.sigma_center_px},
                {"sigma_axis_frac", c.noise.sigma_axis_frac},
                {"sigma_phi_rad", c.noise.sigma_phi_rad},
                {"phi_coupling", c.noise.phi_coupling},
                {"outlier_rate", c.noise.outlier_rate},
                {"outlier_phi_min", c.noise.outlier_phi_min},
                {"outlier_phi_max", c.noise.outlier_phi_max},
                {"false_negative_rate", c.noise.false_negative_rate}};
  j["sim"] = {{"dt_s", c.sim.dt_s},
              {"duration_s", c.sim.duration_s},
              {"grace_period_s", c.sim.grace_period_s}};
  j["dataset"] = {{"total", c.dataset.total},
                  {"positives", c.dataset.positives},
                  {"out_dir", c.dataset.out_dir},
                  {"backgrounds_dir", c.dataset.backgrounds_dir},
                  {"canvas_px", c.dataset.canvas_px},
                  {"stroke_px", c.dataset.stroke_px},
                  {"blur_sigma_px", c.dataset.blur_sigma_px}};
  return j;
}

/// Applies one dotted-path override, e.g. "noise.phi_coupling=0.8". The value
/// is parsed as JSON when possible, otherwise taken as a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like path.to.field=value: '" + assignment + "'");
  std::string pointer = "/" + assignment.substr(0, eq);
  for (auto& ch : pointer)
    if (ch == '.') ch = '/';
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  j[nlohmann::json::json_pointer(pointer)] = value;
}

inline AppConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  AppConfig c = config_from_json(j);
  c.validate();
  return c;
}

inline void AppConfig::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (marker.diameter_m <= 0.0) fail("marker.diameter_m", "must be positive");
  if (camera.width_px <= 0 || camera.height_px <= 0) fail("camera.width_px/height_px", "must be positive");
  try {
    ZoomTable{camera.zoom_table_deg}.validate();
  } catch (const std::exception& e) {
    fail("camera.zoom_table_deg", e.what());
  }
  if (camera.pan_tilt_step_deg <= 0.0) fail("camera.pan_tilt_step_deg", "must be positive");
  if (camera.latency_s < 0.0) fail("camera.latency_s", "must be non-negative");
  if (camera.initial_zoom_state &&
      (*camera.initial_zoom_state < 0 ||
       *camera.initial_zoom_state >= static_cast<int>(camera.zoom_table_deg.size())))
    fail("camera.initial_zoom_state", "outside zoom table");
  if (control.scale <= 0.0) fail("control.scale", "must be positive");
  if (roi.window_px <= roi.overlap_px || roi.overlap_px < 0)
    fail("roi.window_px/overlap_px", "need window > overlap >= 0");
  if (filter.n_particles < 1) fail("filter.n_particles", "must be >= 1");
  if (filter.sigma_rho <= 0.0 || filter.sigma_rho_dot <= 0.0)
    fail("filter.sigma_rho/sigma_rho_dot", "must be positive");
  if (filter.lambda < 0.0) fail("filter.lambda", "must be non-negative");
  if (filter.sigma_rbf_min <= 0.0) fail("filter.sigma_rbf_min", "must be positive");
  try {
    FilterVariant::parse(filter.variant);
  } catch (const std::exception& e) {
    fail("filter.variant", e.what());
  }
  if (smoothing.hfov_order < 1 || smoothing.angle_order < 1)
    fail("smoothing.hfov_order/angle_order", "must be >= 1");
  if (sim.dt_s <= 0.0) fail("sim.dt_s", "must be positive");
  if (smoothing.hfov_f_crit_hz <= 0.0 || smoothing.hfov_f_crit_hz >= 0.5 / sim.dt_s)
    fail("smoothing.hfov_f_crit_hz", "must lie in (0, f_sample/2)");
  if (smoothing.angle_f_crit_hz <= 0.0 || smoothing.angle_f_crit_hz >= 0.5 / sim.dt_s)
    fail("smoothing.angle_f_crit_hz", "must lie in (0, f_sample/2)");
  if (noise.sigma_center_px < 0.0 || noise.sigma_axis_frac < 0.0 || noise.sigma_phi_rad < 0.0)
    fail("noise.sigma_*", "must be non-negative");
  if (noise.phi_coupling < 0.0) fail("noise.phi_coupling", "must be non-negative");
  if (noise.outlier_rate < 0.0 || noise.outlier_rate > 1.0)
    fail("noise.outlier_rate", "must lie in [0, 1]");
  if (noise.outlier_phi_min < 0.0 || noise.outlier_phi_max < noise.outlier_phi_min ||
      noise.outlier_phi_max > kPi)
    fail("noise.outlier_phi_min/max", "need 0 <= min <= max <= pi");
  if (noise.false_negative_rate < 0.0 || noise.false_negative_rate > 1.0)
    fail("noise.false_negative_rate", "must lie in [0, 1]");
  if (dataset.total < 0 || dataset.positives < 0 || dataset.positives > dataset.total)
    fail("dataset.positives", "must lie in [0, total]");
  if (dataset.canvas_px < 32) fail("dataset.canvas_px", "too small");
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    if (waypoints[i][0] <= waypoints[i - 1][0])
      fail("waypoints", "timestamps must be strictly increasing");
}

inline NoiseModel AppConfig::to_noise_model() const {
  NoiseModel m;
  m.sigma_center_px = noise.sigma_center_px;
  m.sigma_axis_frac = noise.sigma_axis_frac;
  m.sigma_phi_rad = noise.sigma_phi_rad;
  m.phi_coupling = noise.phi_coupling;
  m.outlier_rate = noise.outlier_rate;
  m.outlier_phi_min = noise.outlier_phi_min;
  m.outlier_phi_max = noise.outlier_phi_max;
  m.false_negative_rate = noise.false_negative_rate;
  m.seed = seed;
  return m;
}

inline FilterParams AppConfig::to_filter_params() const {
  FilterParams p;
  p.n_particles = filter.n_particles;
  p.sigma_rho = filter.sigma_rho;
  p.sigma_rho_dot = filter.sigma_rho_dot;
  p.lambda = filter.lambda;
  p.sigma_rbf_min = filter.sigma_rbf_min;
  p.init_mean = filter.init_mean;
  p.init_std = filter.init_std;
  return p;
}

inline RenderOptions AppConfig::to_render_options() const {
  RenderOptions o;
  o.canvas_px = dataset.canvas_px;
  o.stroke_px = dataset.stroke_px;
  o.blur_sigma_px = dataset.blur_sigma_px;
  return o;
}

inline RunConfig AppConfig::to_run_config() const {
  RunConfig cfg;
  if (waypoints.empty()) {
    cfg = scenario(scenario_name);
  } else {
    cfg.name = "custom";
    for (const auto& w : waypoints) cfg.trajectory.waypoints.push_back({w[0], {w[1], w[2], w[3]}});
  }
  for (const auto& a : attitude) cfg.trajectory.attitude.push_back({a[0], a[1], a[2]});

  cfg.marker.diameter_m = marker.diameter_m;
  cfg.zoom_table = ZoomTable{camera.zoom_table_deg};
  cfg.frame_w = camera.width_px;
  cfg.frame_h = camera.height_px;
  cfg.command_latency_s = camera.latency_s;
  cfg.pan_tilt_step_deg = camera.pan_tilt_step_deg;
  cfg.roi_window_px = roi.window_px;
  cfg.roi_overlap_px = roi.overlap_px;
  cfg.control = {control.scale, control.threshold_deg, control.zoom_interval_s};
  cfg.smoothing = {smoothing.hfov_order, smoothing.hfov_f_crit_hz, smoothing.angle_order,
                   smoothing.angle_f_crit_hz};
  cfg.noise = to_noise_model();
  cfg.filter_params = to_filter_params();
  cfg.variant = FilterVariant::parse(filter.variant);
  cfg.dt = sim.dt_s;
  cfg.duration_s = sim.duration_s;
  cfg.grace_period_s = sim.grace_period_s;
  cfg.seed = seed;

  aim_at_start(cfg);  // default aim; explicit settings below win
  if (camera.initial_pan_deg) cfg.initial_pan_rad = deg2rad(*camera.initial_pan_deg);
  if (camera.initial_tilt_deg) cfg.initial_tilt_rad = deg2rad(*camera.initial_tilt_deg);
  if (camera.initial_zoom_state) cfg.initial_zoom_state = *camera.initial_zoom_state;
  return cfg;
}

inline DatasetManifest AppConfig::to_dataset_manifest() const {
  DatasetManifest m;
  m.total = dataset.total;
  m.positives = dataset.positives;
  m.image_dir = dataset.out_dir + "/images";
  m.label_file = dataset.out_dir + "/labels.jsonl";
  m.seed = seed;
  return m;
}

}  // namespace ptzloc
