#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptzloc/camera.hpp"
#include "ptzloc/coords.hpp"
#include "ptzloc/detect.hpp"
#include "ptzloc/estimation.hpp"
#include "ptzloc/geometry.hpp"
#include "ptzloc/stats.hpp"

namespace ptzloc {

struct EmptyLog : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownScenario : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

struct Waypoint {
  double t = 0.0;
  CartesianCoord p;
};

struct AttitudeSample {
  double t = 0.0;
  double roll_rad = 0.0;
  double pitch_rad = 0.0;
};

/// Marker path in the world frame (camera at origin, z along the optical axis
/// at zero pan/tilt, x down). Position interpolates linearly between
/// waypoints; the circle normal is straight up unless an attitude profile
/// tilts the platform.
struct Trajectory {
  std::vector<Waypoint> waypoints;
  std::vector<AttitudeSample> attitude;

  void validate() const {
    if (waypoints.empty()) throw std::invalid_argument("trajectory needs at least one waypoint");
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      if (waypoints[i].t <= waypoints[i - 1].t)
        throw std::invalid_argument("waypoint timestamps must be strictly increasing");
    for (std::size_t i = 1; i < attitude.size(); ++i)
      if (attitude[i].t <= attitude[i - 1].t)
        throw std::invalid_argument("attitude timestamps must be strictly increasing");
  }

  double duration() const { return waypoints.empty() ? 0.0 : waypoints.back().t; }

  CartesianCoord position(double t) const {
    if (t <= waypoints.front().t) return waypoints.front().p;
    if (t >= waypoints.back().t) return waypoints.back().p;
    std::size_t i = 1;
    while (waypoints[i].t < t) ++i;
    const Waypoint& lo = waypoints[i - 1];
    const Waypoint& hi = waypoints[i];
    const double f = (t - lo.t) / (hi.t - lo.t);
    return {lo.p.x_m + f * (hi.p.x_m - lo.p.x_m), lo.p.y_m + f * (hi.p.y_m - lo.p.y_m),
            lo.p.z_m + f * (hi.p.z_m - lo.p.z_m)};
  }

  /// Circle-plane normal at time t: up (-x in the world frame) rotated by the
  /// platform's roll (about forward) then pitch (about right).
  Vec3 normal(double t) const {
    double roll = 0.0, pitch = 0.0;
    if (!attitude.empty()) {
      if (t <= attitude.front().t) {
        roll = attitude.front().roll_rad;
        pitch = attitude.front().pitch_rad;
      } else if (t >= attitude.back().t) {
        roll = attitude.back().roll_rad;
        pitch = attitude.back().pitch_rad;
      } else {
        std::size_t i = 1;
        while (attitude[i].t < t) ++i;
        const AttitudeSample& lo = attitude[i - 1];
        const AttitudeSample& hi = attitude[i];
        const double f = (t - lo.t) / (hi.t - lo.t);
        roll = lo.roll_rad + f * (hi.roll_rad - lo.roll_rad);
        pitch = lo.pitch_rad + f * (hi.pitch_rad - lo.pitch_rad);
      }
    }
    const double cg = std::cos(roll), sg = std::sin(roll);
    const double cb = std::cos(pitch), sb = std::sin(pitch);
    return Vec3{-cg * cb, -sg, cg * sb};
  }
};

/// Builds timestamped waypoints from a polyline traversed at constant speed.
inline Trajectory path_at_speed(const std::vector<CartesianCoord>& points, double speed_mps) {
  if (speed_mps <= 0.0) throw std::invalid_argument("speed must be positive");
  Trajectory traj;
  double t = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0) t += (points[i].vec() - points[i - 1].vec()).norm() / speed_mps;
    traj.waypoints.push_back({t, points[i]});
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Which estimator produces rho_est. Everything upstream of the range
/// estimate (tracking, zoom, angle smoothing) is identical across variants.
struct FilterVariant {
  enum class Kind { none, apf, fixed_sigma, butterworth };
  Kind kind = Kind::apf;
  double fixed_sigma = 0.5;  // for Kind::fixed_sigma
  double f_crit_hz = 1.0;    // for Kind::butterworth

  static FilterVariant parse(const std::string& text) {
    FilterVariant v;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "none") {
      v.kind = Kind::none;
    } else if (head == "apf") {
      v.kind = Kind::apf;
    } else if (head == "pf-fixed") {
      v.kind = Kind::fixed_sigma;
      if (!arg.empty()) v.fixed_sigma = std::stod(arg);
    } else if (head == "bw") {
      v.kind = Kind::butterworth;
      if (!arg.empty()) v.f_crit_hz = std::stod(arg);
    } else {
      throw std::invalid_argument("unknown filter variant '" + text +
                                  "' (expected none|apf|pf-fixed[:sigma]|bw[:f_crit])");
    }
    return v;
  }

  std::string name() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::apf: return "apf";
      case Kind::fixed_sigma: {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "pf-fixed:%g", fixed_sigma);
        return buf;
      }
      case Kind::butterworth: {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "bw:%g", f_crit_hz);
        return buf;
      }
    }
    return "?";
  }
};

struct ControlParams {
  double scale = 4.0;
  double threshold_deg = 1.0;
  double zoom_interval_s = 1.0;
};

struct SmoothingParams {
  int hfov_order = 3;
  double hfov_f_crit_hz = 0.6;
  int angle_order = 1;
  double angle_f_crit_hz = 2.0;
};

struct RunConfig {
  std::string name = "custom";
  MarkerSpec marker;
  Trajectory trajectory;
  ZoomTable zoom_table = ZoomTable::default_he40();
  int frame_w = 1920;
  int frame_h = 1080;
  double initial_pan_rad = 0.0;
  double initial_tilt_rad = 0.0;
  int initial_zoom_state = 0;
  double command_latency_s = 0.13;
  double pan_tilt_step_deg = 0.02;
  int roi_window_px = 448;
  int roi_overlap_px = 50;
  ControlParams control;
  SmoothingParams smoothing;
  NoiseModel noise;
  FilterParams filter_params;
  FilterVariant variant;
  double dt = 0.125;
  double duration_s = 0.0;  // 0 = trajectory duration
  double grace_period_s = 2.0;
  std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Per-step log and metrics
// ---------------------------------------------------------------------------

struct StepRecord {
  double t = 0.0;
  CartesianCoord truth;
  CartesianCoord est;
  double rho_obs = std::numeric_limits<double>::quiet_NaN();
  double rho_est = std::numeric_limits<double>::quiet_NaN();
  double phi = std::numeric_limits<double>::quiet_NaN();
  int zoom_state = 0;
  double pan_deg = 0.0;
  double tilt_deg = 0.0;
  bool detected = false;
  // In-memory only (not part of the CSV schema): observed diameter in px.
  double d_obs_px = std::numeric_limits<double>::quiet_NaN();
};

struct RunLog {
  std::vector<StepRecord> steps;
  int tracking_lost_events = 0;
};

struct RunMetrics {
  double median_3d_m = std::numeric_limits<double>::quiet_NaN();
  double rmse_3d_m = std::numeric_limits<double>::quiet_NaN();
  double rho_median_m = std::numeric_limits<double>::quiet_NaN();
  double rho_rmse_m = std::numeric_limits<double>::quiet_NaN();
  double detection_rate = 0.0;
  double detection_rate_after_acq = std::numeric_limits<double>::quiet_NaN();
  double pearson_phi_vs_rho_error = std::numeric_limits<double>::quiet_NaN();
  double spearman_phi_vs_rho_error = std::numeric_limits<double>::quiet_NaN();
  double zoom_in_band_frac = std::numeric_limits<double>::quiet_NaN();
  double acquisition_t = std::numeric_limits<double>::quiet_NaN();
  int tracking_lost_events = 0;
  int steps_total = 0;
  int steps_evaluated = 0;
  std::vector<double> t, err_x, err_y, err_z, err_3d;
};

/// Metrics per the log alone. Acquisition is the start of the first streak of
/// eight consecutive detected steps; error statistics and correlations are
/// computed from there on. The phi/range-error correlations use only detected
/// samples with |phi| above the threshold, matching how the uncertainty proxy
/// is evaluated.
inline RunMetrics evaluate_vs_truth(const RunLog& log, double phi_threshold = 0.175,
                                    int roi_width_px = 448) {
  if (log.steps.empty()) throw EmptyLog("run log has no steps");

  RunMetrics m;
  m.steps_total = static_cast<int>(log.steps.size());
  m.tracking_lost_events = log.tracking_lost_events;

  int detected_total = 0;
  for (const auto& s : log.steps) detected_total += s.detected ? 1 : 0;
  m.detection_rate = static_cast<double>(detected_total) / m.steps_total;

  const int streak = std::min<int>(8, m.steps_total);
  int acq = -1;
  int run_len = 0;
  for (int i = 0; i < m.steps_total; ++i) {
    run_len = log.steps[i].detected ? run_len + 1 : 0;
    if (run_len >= streak) {
      acq = i - streak + 1;
      break;
    }
  }
  if (acq < 0) return m;
  m.acquisition_t = log.steps[acq].t;

  std::vector<double> rho_err_abs, phi_abs, rho_obs_err_abs, d_obs;
  int detected_after = 0;
  for (int i = acq; i < m.steps_total; ++i) {
    const StepRecord& s = log.steps[i];
    const double rho_truth = s.truth.norm();
    m.t.push_back(s.t);
    m.err_x.push_back(s.est.x_m - s.truth.x_m);
    m.err_y.push_back(s.est.y_m - s.truth.y_m);
    m.err_z.push_back(s.est.z_m - s.truth.z_m);
    m.err_3d.push_back(std::sqrt(m.err_x.back() * m.err_x.back() +
                                 m.err_y.back() * m.err_y.back() +
                                 m.err_z.back() * m.err_z.back()));
    rho_err_abs.push_back(std::abs(s.rho_est - rho_truth));
    if (s.detected) {
      ++detected_after;
      if (std::isfinite(s.d_obs_px)) d_obs.push_back(s.d_obs_px);
      if (std::isfinite(s.phi) && std::abs(s.phi) > phi_threshold && std::isfinite(s.rho_obs)) {
        phi_abs.push_back(std::abs(s.phi));
        rho_obs_err_abs.push_back(std::abs(s.rho_obs - rho_truth));
      }
    }
  }
  m.steps_evaluated = static_cast<int>(m.t.size());
  m.detection_rate_after_acq = static_cast<double>(detected_after) / m.steps_evaluated;
  m.median_3d_m = median(m.err_3d);
  m.rmse_3d_m = rmse(m.err_3d);
  m.rho_median_m = median(rho_err_abs);
  m.rho_rmse_m = rmse(rho_err_abs);
  if (phi_abs.size() >= 3) {
    m.pearson_phi_vs_rho_error = pearson(phi_abs, rho_obs_err_abs);
    m.spearman_phi_vs_rho_error = spearman(phi_abs, rho_obs_err_abs);
  }
  if (!d_obs.empty()) {
    const double lo = roi_width_px / 4.0;
    const double hi = 7.0 * roi_width_px / 12.0;
    int in_band = 0;
    for (double d : d_obs) in_band += (d >= lo && d <= hi) ? 1 : 0;
    m.zoom_in_band_frac = static_cast<double>(in_band) / d_obs.size();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Closed-loop run
// ---------------------------------------------------------------------------

namespace detail {

/// rho_est stage shared by the live run and replay. Holds whichever filter
/// the variant asks for; predict happens every step once initialised, the
/// observation update only on detected steps.
class RangeEstimator {
 public:
  RangeEstimator(const FilterVariant& variant, const FilterParams& params, double dt,
                 std::uint64_t seed)
      : variant_(variant), params_(params), dt_(dt), rng_(seed) {
    if (variant_.kind == FilterVariant::Kind::fixed_sigma) {
      params_.lambda = 0.0;  // max(0*|phi|, sigma) pins sigma_rbf
      params_.sigma_rbf_min = variant_.fixed_sigma;
    }
  }

  double step(bool detected, double rho_obs, double phi_abs, double t) {
    switch (variant_.kind) {
      case FilterVariant::Kind::none:
        if (detected) last_ = rho_obs;
        return last_;
      case FilterVariant::Kind::butterworth:
        if (detected) {
          if (!bw_) {
            bw_.emplace(ButterworthSpec{1, variant_.f_crit_hz, 1.0 / dt_});
            bw_->prime(rho_obs);
          }
          last_ = bw_->step(rho_obs);
        }
        return last_;
      case FilterVariant::Kind::apf:
      case FilterVariant::Kind::fixed_sigma:
        if (!pf_ && detected) {
          FilterParams init = params_;
          if (init.init_mean <= 0.0) init.init_mean = rho_obs;
          pf_ = pf_init(init, rng_);
        }
        if (!pf_) return last_;
        pf_predict(*pf_, dt_, params_, rng_);
        if (detected) {
          last_ = pf_update(*pf_, rho_obs, phi_abs, params_);
          pf_->last_update_time = t;
          pf_resample(*pf_, rng_);
        } else {
          last_ = pf_weighted_mean(*pf_);
        }
        return last_;
    }
    return last_;
  }

 private:
  FilterVariant variant_;
  FilterParams params_;
  double dt_;
  std::mt19937_64 rng_;
  std::optional<FilterState> pf_;
  std::optional<ButterworthFilter> bw_;
  double last_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace detail

struct RunResult {
  RunLog log;
  RunMetrics metrics;
};

/// Closed-loop scenario: ground-truth circle pose -> perspective projection
/// -> simulated detection -> pan/tilt/zoom control -> range estimate with the
/// configured filter -> Cartesian output, logged per step. Identical configs
/// (including seed) produce bit-identical logs. The observation noise stream
/// is independent of the filter stream, so runs that differ only in the
/// filter variant see the same detections.
inline RunResult run(const RunConfig& cfg) {
  cfg.trajectory.validate();
  cfg.zoom_table.validate();
  if (cfg.dt <= 0.0) throw std::invalid_argument("dt must be positive");

  std::mt19937_64 rng_noise(derive_seed(cfg.seed, 0));

  PtzCamera camera({cfg.initial_pan_rad, cfg.initial_tilt_rad, cfg.initial_zoom_state,
                    cfg.command_latency_s, deg2rad(cfg.pan_tilt_step_deg)},
                   cfg.zoom_table, cfg.frame_w, cfg.frame_h);
  const double fs = 1.0 / cfg.dt;
  ButterworthFilter bw_hfov({cfg.smoothing.hfov_order, cfg.smoothing.hfov_f_crit_hz, fs});
  bw_hfov.prime(camera.hfov_rad());
  std::optional<ButterworthFilter> bw_pan, bw_tilt;
  detail::RangeEstimator range(cfg.variant, cfg.filter_params, cfg.dt, derive_seed(cfg.seed, 1));

  const RoiWindowLayout layout{cfg.frame_w, cfg.frame_h, cfg.roi_window_px, cfg.roi_overlap_px};
  double prev_u = 0.5 * cfg.frame_w;
  double prev_v = 0.5 * cfg.frame_h;
  double zoom_last_check = -1e9;
  double lost_for = 0.0;
  bool lost_flagged = false;
  double pan_total_sm = std::numeric_limits<double>::quiet_NaN();
  double tilt_total_sm = std::numeric_limits<double>::quiet_NaN();

  const double duration = cfg.duration_s > 0.0 ? cfg.duration_s : cfg.trajectory.duration();
  const int n_steps = static_cast<int>(std::floor(duration / cfg.dt)) + 1;

  RunResult result;
  result.log.steps.reserve(n_steps);

  for (int k = 0; k < n_steps; ++k) {
    const double t = k * cfg.dt;
    camera.advance_to(t);

    const CartesianCoord truth = cfg.trajectory.position(t);
    const Vec3 normal_world = cfg.trajectory.normal(t);
    const CameraState& cam = camera.state();
    const CameraIntrinsics intr = camera.intrinsics();
    const CameraBasis basis = CameraBasis::from_pan_tilt(cam.pan_rad, cam.tilt_rad);
    const Vec3 p_cam = basis.world_to_camera(truth.vec());
    const Vec3 n_cam = basis.world_to_camera(normal_world);

    // Sense: exact projected ellipse, then the noisy detector on the window
    // nearest the previous detection.
    Detection det;
    bool visible = false;
    if (p_cam.z > 0.0) {
      try {
        const EllipseParams true_ellipse = project_circle_perspective(
            {{p_cam.x, p_cam.y, p_cam.z}, n_cam, 0.5 * cfg.marker.diameter_m}, intr);
        if (true_ellipse.u >= 0.0 && true_ellipse.u < cfg.frame_w && true_ellipse.v >= 0.0 &&
            true_ellipse.v < cfg.frame_h) {
          visible = true;
          for (const RoiOrigin& w : window_scan_order(layout, prev_u, prev_v)) {
            if (true_ellipse.u >= w.x && true_ellipse.u < w.x + layout.window &&
                true_ellipse.v >= w.y && true_ellipse.v < w.y + layout.window) {
              det = simulate_detection(true_ellipse, cfg.noise, rng_noise);
              det.roi_x = w.x;
              det.roi_y = w.y;
              break;
            }
          }
        }
      } catch (const DegenerateConic&) {
        // Edge-on circle projects to a segment; treat as not visible.
      }
    }
    if (!visible) {
      lost_for += cfg.dt;
      if (lost_for > cfg.grace_period_s && !lost_flagged) {
        ++result.log.tracking_lost_events;
        lost_flagged = true;
      }
    } else {
      lost_for = 0.0;
      lost_flagged = false;
    }

    const double hfov_sm = bw_hfov.step(camera.hfov_rad());

    StepRecord rec;
    rec.t = t;
    rec.truth = truth;
    rec.zoom_state = cam.zoom_state;
    rec.pan_deg = rad2deg(cam.pan_rad);
    rec.tilt_deg = rad2deg(cam.tilt_rad);
    rec.detected = det.present;
    rec.est = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
               std::numeric_limits<double>::quiet_NaN()};

    if (det.present) {
      prev_u = det.ellipse.u;
      prev_v = det.ellipse.v;
      const double du = std::clamp((det.ellipse.u - 0.5 * cfg.frame_w) / cfg.frame_w, -0.5, 0.5);
      const double dv = std::clamp((det.ellipse.v - 0.5 * cfg.frame_h) / cfg.frame_h, -0.5, 0.5);
      const auto [theta_p, theta_t] = pixel_offset_to_angles(du, dv, intr);

      if (auto cmd = make_pan_tilt_command(theta_p, theta_t, cfg.control.scale,
                                           cfg.control.threshold_deg))
        camera.issue(*cmd, t);

      const double d_obs = 2.0 * det.ellipse.a;
      rec.d_obs_px = d_obs;
      rec.rho_obs = estimate_range(cfg.marker, d_obs, cfg.frame_w, hfov_sm);
      rec.phi = det.ellipse.phi;

      const double pan_total = cam.pan_rad + theta_p;
      const double tilt_total = cam.tilt_rad + theta_t;
      if (!bw_pan) {
        bw_pan.emplace(ButterworthSpec{cfg.smoothing.angle_order, cfg.smoothing.angle_f_crit_hz, fs});
        bw_tilt.emplace(ButterworthSpec{cfg.smoothing.angle_order, cfg.smoothing.angle_f_crit_hz, fs});
        bw_pan->prime(pan_total);
        bw_tilt->prime(tilt_total);
      }
      pan_total_sm = bw_pan->step(pan_total);
      tilt_total_sm = bw_tilt->step(tilt_total);

      const ZoomDecision zd =
          zoom_step(d_obs, cfg.roi_window_px, cam.zoom_state, cfg.zoom_table.size(), t,
                    zoom_last_check, cfg.control.zoom_interval_s);
      zoom_last_check = zd.last_check_s;
      if (zd.state != cam.zoom_state) camera.set_zoom_state(zd.state);  // optics change next frame
    }

    rec.rho_est = range.step(det.present, rec.rho_obs, std::abs(rec.phi), t);
    if (std::isfinite(rec.rho_est) && std::isfinite(pan_total_sm))
      rec.est = spherical_to_cartesian({rec.rho_est, pan_total_sm, tilt_total_sm});

    result.log.steps.push_back(rec);
  }

  result.metrics = evaluate_vs_truth(result.log, 0.175, cfg.roi_window_px);
  return result;
}

/// Re-runs only the range-estimation stage over a recorded observation
/// stream. The logged bearing is kept: estimates are rescaled along the
/// original line of sight, so filter variants can be compared on one capture.
inline RunLog replay_estimation(const RunLog& source, const FilterVariant& variant,
                                const FilterParams& params, std::uint64_t seed = 0) {
  if (source.steps.empty()) throw EmptyLog("cannot replay an empty log");
  double dt = 0.125;
  if (source.steps.size() >= 2) dt = source.steps[1].t - source.steps[0].t;
  if (dt <= 0.0) throw SchemaMismatch("log timestamps are not increasing");

  detail::RangeEstimator range(variant, params, dt, derive_seed(seed, 1));
  RunLog out = source;
  for (auto& rec : out.steps) {
    const bool detected = rec.detected && std::isfinite(rec.rho_obs);
    const double new_est = range.step(detected, rec.rho_obs, std::abs(rec.phi), rec.t);
    if (std::isfinite(new_est) && std::isfinite(rec.rho_est) && rec.rho_est > 0.0 &&
        std::isfinite(rec.est.x_m)) {
      const double s = new_est / rec.rho_est;
      rec.est = {rec.est.x_m * s, rec.est.y_m * s, rec.est.z_m * s};
    }
    rec.rho_est = new_est;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts: per-step CSV and metrics JSON
// ---------------------------------------------------------------------------

inline constexpr const char* kLogCsvHeader =
    "t,truth_x,truth_y,truth_z,est_x,est_y,est_z,rho_obs,rho_est,phi,zoom_state,pan,tilt,detected";

inline void write_log_csv(const std::string& path, const RunLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << kLogCsvHeader << '\n';
  char buf[512];
  for (const auto& s : log.steps) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%d",
                  s.t, s.truth.x_m, s.truth.y_m, s.truth.z_m, s.est.x_m, s.est.y_m, s.est.z_m,
                  s.rho_obs, s.rho_est, s.phi, s.zoom_state, s.pan_deg, s.tilt_deg,
                  s.detected ? 1 : 0);
    out << buf << '\n';
  }
}

inline RunLog read_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw SchemaMismatch("log file is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != kLogCsvHeader)
    throw SchemaMismatch("log header mismatch; expected '" + std::string(kLogCsvHeader) + "'");

  RunLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell.empty() ? 0.0 : std::stod(cell));
    if (f.size() != 14) throw SchemaMismatch("log row has wrong column count");
    StepRecord s;
    s.t = f[0];
    s.truth = {f[1], f[2], f[3]};
    s.est = {f[4], f[5], f[6]};
    s.rho_obs = f[7];
    s.rho_est = f[8];
    s.phi = f[9];
    s.zoom_state = static_cast<int>(f[10]);
    s.pan_deg = f[11];
    s.tilt_deg = f[12];
    s.detected = f[13] != 0.0;
    log.steps.push_back(s);
  }
  return log;
}

inline nlohmann::ordered_json metrics_to_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["median_3d_m"] = m.median_3d_m;
  j["rmse_3d_m"] = m.rmse_3d_m;
  j["rho_median_m"] = m.rho_median_m;
  j["rho_rmse_m"] = m.rho_rmse_m;
  j["detection_rate"] = m.detection_rate;
  j["detection_rate_after_acq"] = m.detection_rate_after_acq;
  j["pearson_phi_vs_rho_error"] = m.pearson_phi_vs_rho_error;
  j["spearman_phi_vs_rho_error"] = m.spearman_phi_vs_rho_error;
  j["zoom_in_band_frac"] = m.zoom_in_band_frac;
  j["acquisition_t"] = m.acquisition_t;
  j["tracking_lost_events"] = m.tracking_lost_events;
  j["steps_total"] = m.steps_total;
  j["steps_evaluated"] = m.steps_evaluated;
  j["series"] = {{"t", m.t},
                 {"err_x", m.err_x},
                 {"err_y", m.err_y},
                 {"err_z", m.err_z},
                 {"err_3d", m.err_3d}};
  return j;
}

inline void write_metrics_json(const std::string& path, const RunMetrics& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << metrics_to_json(m).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Scenario library
// ---------------------------------------------------------------------------

/// Zoom state whose predicted diameter sits closest to the middle of the
/// control band at the given range; used to pre-aim presets.
inline int zoom_state_for_range(const ZoomTable& table, int frame_w, double marker_diameter_m,
                                double rho_m, int roi_width_px) {
  const double target = 0.5 * (roi_width_px / 4.0 + 7.0 * roi_width_px / 12.0);
  int best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int s = 0; s < table.size(); ++s) {
    const double fx = 0.5 * frame_w / std::tan(0.5 * table.hfov_rad(s));
    const double d = marker_diameter_m * fx / rho_m;
    const double err = std::abs(d - target);
    if (err < best_err) {
      best_err = err;
      best = s;
    }
  }
  return best;
}

/// Points the camera at the first waypoint and picks an in-band zoom state.
inline void aim_at_start(RunConfig& cfg) {
  const SphericalCoord aim = cartesian_to_spherical(cfg.trajectory.waypoints.front().p);
  cfg.initial_pan_rad = aim.pan_total_rad;
  cfg.initial_tilt_rad = aim.tilt_total_rad;
  cfg.initial_zoom_state = zoom_state_for_range(cfg.zoom_table, cfg.frame_w,
                                                cfg.marker.diameter_m, aim.rho_m,
                                                cfg.roi_window_px);
}

inline std::vector<std::string> scenario_names() {
  return {"s-path", "square-indoor", "square-outdoor"};
}

/// Preset scenarios:
///  - "s-path": vertical S sweeps over a 10 m wide face 11 m out, 1.0 m/s.
///  - "square-indoor": 4x4 m square at 1.8 m height inside a 4x4x3.5 m space,
///    0.5 m/s.
///  - "square-outdoor": 20x20 m square at 10 m height, 1.5 m/s.
inline RunConfig scenario(const std::string& name) {
  RunConfig cfg;
  cfg.name = name;
  if (name == "s-path") {
    std::vector<CartesianCoord> pts;
    const double z = 11.0;
    const double top = -6.0, bottom = -2.0;  // 2 m to 6 m above the camera
    bool up = true;
    for (int i = 0; i < 6; ++i) {
      const double y = -5.0 + 2.0 * i;
      if (up)
        pts.push_back({bottom, y, z}), pts.push_back({top, y, z});
      else
        pts.push_back({top, y, z}), pts.push_back({bottom, y, z});
      up = !up;
    }
    cfg.trajectory = path_at_speed(pts, 1.0);
  } else if (name == "square-indoor") {
    const double x = -1.8;
    cfg.trajectory = path_at_speed(
        {{x, -2.0, 2.0}, {x, 2.0, 2.0}, {x, 2.0, 6.0}, {x, -2.0, 6.0}, {x, -2.0, 2.0}}, 0.5);
  } else if (name == "square-outdoor") {
    const double x = -10.0;
    cfg.trajectory = path_at_speed(
        {{x, -10.0, 10.0}, {x, 10.0, 10.0}, {x, 10.0, 30.0}, {x, -10.0, 30.0}, {x, -10.0, 10.0}},
        1.5);
  } else {
    std::string names;
    for (const auto& n : scenario_names()) names += (names.empty() ? "" : ", ") + n;
    throw UnknownScenario("unknown scenario '" + name + "'; available: " + names);
  }
  aim_at_start(cfg);
  return cfg;
}

}  // namespace ptzloc
