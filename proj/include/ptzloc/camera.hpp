#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ptzloc/math.hpp"

namespace ptzloc {

struct OffsetOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CameraIntrinsics {
  int width_px = 1920;
  int height_px = 1080;
  double hfov_rad = deg2rad(54.0);
  double vfov_rad = deg2rad(31.98);

  double focal_x_px() const { return 0.5 * width_px / std::tan(0.5 * hfov_rad); }
  double focal_y_px() const { return 0.5 * height_px / std::tan(0.5 * vfov_rad); }
};

/// VFOV consistent with square pixels at the given HFOV and aspect ratio.
inline double vfov_from_hfov(double hfov_rad, int width_px, int height_px) {
  return 2.0 * std::atan(std::tan(0.5 * hfov_rad) * static_cast<double>(height_px) /
                         static_cast<double>(width_px));
}

/// Calibrated HFOV per discrete zoom state, strictly decreasing.
struct ZoomTable {
  std::vector<double> hfov_deg;

  static ZoomTable default_he40() {
    return {{54.0, 45.01, 37.87, 30.67, 24.21, 18.11, 12.99, 8.59}};
  }

  int size() const { return static_cast<int>(hfov_deg.size()); }
  double hfov_rad(int state) const { return deg2rad(hfov_deg.at(state)); }

  void validate() const {
    if (hfov_deg.empty()) throw std::invalid_argument("zoom table is empty");
    for (std::size_t i = 0; i < hfov_deg.size(); ++i) {
      if (hfov_deg[i] <= 0.0 || hfov_deg[i] >= 180.0)
        throw std::invalid_argument("zoom table HFOV out of (0, 180) degrees");
      if (i > 0 && hfov_deg[i] >= hfov_deg[i - 1])
        throw std::invalid_argument("zoom table must be strictly decreasing");
    }
  }
};

struct CameraState {
  double pan_rad = 0.0;
  double tilt_rad = 0.0;
  int zoom_state = 0;
  double command_latency_s = 0.13;
  double pan_tilt_step_rad = deg2rad(0.02);
};

/// Commanded pan/tilt deltas in degrees.
struct PanTiltCommand {
  double mu_pan_deg = 0.0;
  double mu_tilt_deg = 0.0;
};

/// Maps normalised pixel offsets from the frame centre to bearing angles.
/// The horizontal offset drives pan against HFOV, the vertical offset drives
/// tilt against VFOV. Offsets are fractions of the frame dimension in
/// [-0.5, 0.5]; the frame edge maps to exactly half the field of view.
inline std::pair<double, double> pixel_offset_to_angles(double delta_u_norm, double delta_v_norm,
                                                        const CameraIntrinsics& intr) {
  if (std::abs(delta_u_norm) > 0.5 || std::abs(delta_v_norm) > 0.5)
    throw OffsetOutOfRange("pixel offset outside [-0.5, 0.5] of frame");
  const double theta_p = std::atan(delta_u_norm * 2.0 * std::tan(0.5 * intr.hfov_rad));
  const double theta_t = std::atan(delta_v_norm * 2.0 * std::tan(0.5 * intr.vfov_rad));
  return {theta_p, theta_t};
}

/// Per axis, emits mu = theta / scale only when |theta| exceeds the threshold
/// (degrees); axes below threshold command zero. Returns nothing when both
/// axes are below threshold.
inline std::optional<PanTiltCommand> make_pan_tilt_command(double theta_p_rad, double theta_t_rad,
                                                           double scale = 4.0,
                                                           double threshold_deg = 1.0) {
  if (scale <= 0.0) throw std::invalid_argument("command scale must be positive");
  const double p_deg = rad2deg(theta_p_rad);
  const double t_deg = rad2deg(theta_t_rad);
  PanTiltCommand cmd;
  bool any = false;
  if (std::abs(p_deg) > threshold_deg) {
    cmd.mu_pan_deg = p_deg / scale;
    any = true;
  }
  if (std::abs(t_deg) > threshold_deg) {
    cmd.mu_tilt_deg = t_deg / scale;
    any = true;
  }
  if (!any) return std::nullopt;
  return cmd;
}

struct ZoomDecision {
  int state = 0;
  double last_check_s = 0.0;
};

/// Steps the zoom state toward keeping the observed diameter inside
/// [1/4, 7/12] of the ROI width. Checks are rate-limited to one per
/// interval; last_check advances only when a check actually happens.
inline ZoomDecision zoom_step(double d_obs_px, int roi_width_px, int state, int n_states,
                              double now_s, double last_check_s, double interval_s = 1.0) {
  if (roi_width_px <= 0) throw std::invalid_argument("roi width must be positive");
  if (now_s - last_check_s < interval_s) return {state, last_check_s};
  int next = state;
  if (d_obs_px < roi_width_px / 4.0)
    next = std::min(state + 1, n_states - 1);
  else if (d_obs_px > 7.0 * roi_width_px / 12.0)
    next = std::max(state - 1, 0);
  return {next, now_s};
}

/// Quantises a commanded delta (degrees) to the actuator step, round to nearest.
inline double quantize_delta_rad(double mu_deg, double step_rad) {
  const double steps = std::round(deg2rad(mu_deg) / step_rad);
  return steps * step_rad;
}

/// State after `dt` seconds have elapsed since the command was issued. The
/// command takes effect only once the transport latency has passed.
inline CameraState apply_command(CameraState state, const PanTiltCommand& cmd, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if (dt < state.command_latency_s) return state;
  state.pan_rad += quantize_delta_rad(cmd.mu_pan_deg, state.pan_tilt_step_rad);
  state.tilt_rad += quantize_delta_rad(cmd.mu_tilt_deg, state.pan_tilt_step_rad);
  return state;
}

/// Simulated PTZ head: pan/tilt commands queue behind a pure transport delay
/// and land quantised to the actuator step; zoom state changes are immediate.
class PtzCamera {
 public:
  PtzCamera(CameraState initial, ZoomTable table, int frame_w, int frame_h)
      : state_(initial), table_(std::move(table)), frame_w_(frame_w), frame_h_(frame_h) {
    table_.validate();
    if (state_.zoom_state < 0 || state_.zoom_state >= table_.size())
      throw std::invalid_argument("initial zoom state outside table");
  }

  void issue(const PanTiltCommand& cmd, double now_s) {
    pending_.push_back({now_s + state_.command_latency_s, cmd});
  }

  /// Applies every command whose latency has matured by time t.
  void advance_to(double t) {
    std::size_t kept = 0;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      if (pending_[i].apply_at_s <= t) {
        state_.pan_rad += quantize_delta_rad(pending_[i].cmd.mu_pan_deg, state_.pan_tilt_step_rad);
        state_.tilt_rad += quantize_delta_rad(pending_[i].cmd.mu_tilt_deg, state_.pan_tilt_step_rad);
      } else {
        pending_[kept++] = pending_[i];
      }
    }
    pending_.resize(kept);
  }

  void set_zoom_state(int state) {
    if (state < 0 || state >= table_.size()) throw std::invalid_argument("zoom state outside table");
    state_.zoom_state = state;
  }

  const CameraState& state() const { return state_; }
  const ZoomTable& zoom_table() const { return table_; }
  double hfov_rad() const { return table_.hfov_rad(state_.zoom_state); }

  CameraIntrinsics intrinsics() const {
    CameraIntrinsics intr;
    intr.width_px = frame_w_;
    intr.height_px = frame_h_;
    intr.hfov_rad = hfov_rad();
    intr.vfov_rad = vfov_from_hfov(intr.hfov_rad, frame_w_, frame_h_);
    return intr;
  }

 private:
  struct Pending {
    double apply_at_s;
    PanTiltCommand cmd;
  };

  CameraState state_;
  ZoomTable table_;
  int frame_w_;
  int frame_h_;
  std::vector<Pending> pending_;
};

}  // namespace ptzloc
