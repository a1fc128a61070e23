#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ptzloc/geometry.hpp"
#include "ptzloc/math.hpp"

namespace ptzloc {

struct FrameTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidNormalisation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Detector output contract. The ellipse is reported in full-frame pixel
/// coordinates; roi_x/roi_y record which sliding window produced it.
struct Detection {
  bool present = false;
  EllipseParams ellipse;
  int roi_x = 0;
  int roi_y = 0;
  double confidence = 1.0;
};

struct RoiWindowLayout {
  int frame_w = 1920;
  int frame_h = 1080;
  int window = 448;
  int overlap = 50;
};

struct RoiOrigin {
  int x = 0;
  int y = 0;
};

/// Sliding-window origins in row-major order. Stride is window - overlap and
/// the final window per axis is clamped so it ends exactly at the frame edge.
inline std::vector<RoiOrigin> windows(const RoiWindowLayout& layout) {
  if (layout.window <= layout.overlap || layout.overlap < 0)
    throw std::invalid_argument("window must exceed overlap >= 0");
  if (layout.frame_w < layout.window || layout.frame_h < layout.window)
    throw FrameTooSmall("frame smaller than ROI window");

  const auto axis_origins = [&](int frame) {
    std::vector<int> out;
    const int stride = layout.window - layout.overlap;
    for (int o = 0;; o += stride) {
      if (o + layout.window >= frame) {
        out.push_back(frame - layout.window);
        break;
      }
      out.push_back(o);
    }
    return out;
  };

  const std::vector<int> xs = axis_origins(layout.frame_w);
  const std::vector<int> ys = axis_origins(layout.frame_h);
  std::vector<RoiOrigin> origins;
  origins.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) origins.push_back({x, y});
  return origins;
}

/// Windows ordered for scanning: nearest window centre to the previous
/// detection first, row-major order breaking ties. The first window that
/// reports the marker present wins.
inline std::vector<RoiOrigin> window_scan_order(const RoiWindowLayout& layout, double prev_u,
                                                double prev_v) {
  std::vector<RoiOrigin> origins = windows(layout);
  std::stable_sort(origins.begin(), origins.end(), [&](const RoiOrigin& l, const RoiOrigin& r) {
    const auto d2 = [&](const RoiOrigin& o) {
      const double du = o.x + 0.5 * layout.window - prev_u;
      const double dv = o.y + 0.5 * layout.window - prev_v;
      return du * du + dv * dv;
    };
    return d2(l) < d2(r);
  });
  return origins;
}

/// Rectified angular error |atan2(sin(phi - phi_hat), cos(phi - phi_hat))|,
/// always in [0, pi]; the error between -pi and +pi is zero, not 2*pi.
inline double angular_loss(double phi_rad, double phi_hat_rad) {
  return std::abs(wrap_angle(phi_rad - phi_hat_rad));
}

struct LossWeights {
  double mu1 = 0.1;
  double mu2 = 10.0;
  double mu3 = 10.0;
  double mu4 = 5.0;
  double mu5 = 1.0;
};

/// Training-record view of a detection with every field normalised: u, v, a,
/// b to [0, 1] by the canvas size, phi to [-1, 1] by pi. m is the presence
/// label for ground truth (0 or 1) and the predicted probability for
/// predictions.
struct NormalizedLabel {
  double m = 0.0;
  double u = 0.0;
  double v = 0.0;
  double a = 0.0;
  double b = 0.0;
  double phi = 0.0;
};

namespace detail {

inline void check_normalised(const NormalizedLabel& r, const char* who) {
  const auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in01(r.m) || !in01(r.u) || !in01(r.v) || !in01(r.a) || !in01(r.b) ||
      r.phi < -1.0 || r.phi > 1.0)
    throw InvalidNormalisation(std::string(who) + ": fields outside normalised ranges");
}

/// Binary cross-entropy with the log arguments clamped at 1e-7; a perfect
/// prediction contributes exactly zero.
inline double bce(double m, double m_hat) {
  constexpr double kEps = 1e-7;
  double loss = 0.0;
  if (m > 0.0) loss -= m * std::log(std::max(m_hat, kEps));
  if (m < 1.0) loss -= (1.0 - m) * std::log(std::max(1.0 - m_hat, kEps));
  return loss;
}

}  // namespace detail

/// Detection training loss:
///   mu1*BCE(m, m_hat)
///   + eps * [mu2*||c - c_hat||/d + mu3*|a - a_hat|/d^2 + mu4*|b - b_hat|/d^2
///            + mu5*L_phi]
/// with d = 2a taken from ground truth and eps = 1 iff the marker is present.
/// phi enters the angular term rescaled back to radians so the wrap at +-pi
/// behaves as stated.
inline double total_loss(const NormalizedLabel& truth, const NormalizedLabel& pred,
                         const LossWeights& w = {}) {
  detail::check_normalised(truth, "truth");
  detail::check_normalised(pred, "prediction");

  double loss = w.mu1 * detail::bce(truth.m, pred.m);
  const bool present = truth.m >= 0.5;
  if (!present) return loss;

  const double d = 2.0 * truth.a;
  if (d <= 0.0) throw InvalidNormalisation("present marker must have a > 0");
  const double centre_err = std::hypot(truth.u - pred.u, truth.v - pred.v);
  loss += w.mu2 * centre_err / d;
  loss += w.mu3 * std::abs(truth.a - pred.a) / (d * d);
  loss += w.mu4 * std::abs(truth.b - pred.b) / (d * d);
  loss += w.mu5 * angular_loss(truth.phi * kPi, pred.phi * kPi);
  return loss;
}

/// Simulated stand-in for the CNN's prediction error. Detections are a
/// mixture of nominal and occasional bad predictions: with probability
/// outlier_rate the reported angle magnitude jumps into
/// [outlier_phi_min, outlier_phi_max] and the relative size error gains a
/// term linear in that angle (slope phi_coupling, random sign) on top of the
/// always-present Gaussian residual sigma_axis_frac. Nominal detections carry
/// only small angle noise (sigma_phi_rad) and the residual size error, so the
/// reported |phi| flags exactly the detections whose size is untrustworthy.
struct NoiseModel {
  double sigma_center_px = 2.0;
  double sigma_axis_frac = 0.03;   // relative size error, Gaussian residual
  double sigma_phi_rad = 0.02;     // angle noise on nominal detections
  double phi_coupling = 0.28;      // relative size error per radian of outlier |phi|
  double outlier_rate = 0.10;      // probability of a bad prediction
  double outlier_phi_min = 0.2;
  double outlier_phi_max = 0.5;
  double false_negative_rate = 0.0;
  std::uint64_t seed = 0;
};

inline Detection simulate_detection(const EllipseParams& truth, const NoiseModel& model,
                                    std::mt19937_64& rng) {
  Detection det;
  if (model.false_negative_rate > 0.0 &&
      uniform(rng, 0.0, 1.0) < model.false_negative_rate)
    return det;

  const double du = gauss(rng, 0.0, model.sigma_center_px);
  const double dv = gauss(rng, 0.0, model.sigma_center_px);
  double size_err = gauss(rng, 0.0, model.sigma_axis_frac);
  double phi_err = gauss(rng, 0.0, model.sigma_phi_rad);
  if (model.outlier_rate > 0.0 && uniform(rng, 0.0, 1.0) < model.outlier_rate) {
    const double phi_out = uniform(rng, model.outlier_phi_min, model.outlier_phi_max);
    phi_err += uniform_int(rng, 0, 1) == 0 ? phi_out : -phi_out;
    size_err += (uniform_int(rng, 0, 1) == 0 ? 1.0 : -1.0) * model.phi_coupling * phi_out;
  }

  det.present = true;
  det.ellipse.u = truth.u + du;
  det.ellipse.v = truth.v + dv;
  const double factor = std::max(0.05, 1.0 + size_err);
  det.ellipse.a = truth.a * factor;
  det.ellipse.b = truth.b * factor;
  det.ellipse.phi = wrap_angle(truth.phi + phi_err);
  det.confidence = 1.0;
  return det;
}

}  // namespace ptzloc
