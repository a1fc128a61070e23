#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "ptzloc/coords.hpp"
#include "ptzloc/math.hpp"

namespace ptzloc {

struct InvalidCutoff : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// |phi|-adaptive SIR particle filter over (rho, rho_dot)
// ---------------------------------------------------------------------------

struct FilterParams {
  int n_particles = 2000;
  double sigma_rho = 0.3;        // process noise on rho per step, metres
  double sigma_rho_dot = 0.1;    // process noise on rho_dot per step, m/s
  double lambda = 15.0;          // |phi| -> sigma_rbf gain
  double sigma_rbf_min = 0.5;    // metres
  double init_mean = 0.0;        // <= 0: initialise from the first observation
  double init_std = 0.5;
};

struct Particle {
  double rho = 0.0;
  double rho_dot = 0.0;
};

struct FilterState {
  std::vector<Particle> particles;
  std::vector<double> weights;
  double last_update_time = 0.0;
};

/// Observation-likelihood width: sigma_rbf = max(lambda * |phi|, sigma_rbf_min).
inline double sigma_rbf(double phi_abs, const FilterParams& params) {
  if (phi_abs < 0.0) throw std::invalid_argument("|phi| must be non-negative");
  return std::max(params.lambda * phi_abs, params.sigma_rbf_min);
}

inline FilterState pf_init(const FilterParams& params, std::mt19937_64& rng) {
  if (params.n_particles < 1) throw std::invalid_argument("need at least one particle");
  FilterState state;
  state.particles.resize(params.n_particles);
  state.weights.assign(params.n_particles, 1.0 / params.n_particles);
  for (auto& p : state.particles) {
    p.rho = gauss(rng, params.init_mean, params.init_std);
    p.rho_dot = gauss(rng, 0.0, params.sigma_rho_dot);
  }
  return state;
}

/// Linear-dynamics prediction with additive Gaussian process noise:
/// rho += rho_dot * dt + N(0, sigma_rho), then rho_dot is re-drawn from
/// N(0, sigma_rho_dot). The velocity component is memoryless: it is never
/// observed directly, and letting it random-walk makes the particle cloud's
/// mean velocity wander, which shows up as estimate jitter far larger than
/// the observation noise the filter is meant to remove.
inline void pf_predict(FilterState& state, double dt, const FilterParams& params,
                       std::mt19937_64& rng) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  for (auto& p : state.particles) {
    p.rho += p.rho_dot * dt + gauss(rng, 0.0, params.sigma_rho);
    p.rho_dot = gauss(rng, 0.0, params.sigma_rho_dot);
  }
}

inline double pf_weighted_mean(const FilterState& state) {
  double est = 0.0;
  for (std::size_t i = 0; i < state.particles.size(); ++i)
    est += state.weights[i] * state.particles[i].rho;
  return est;
}

/// RBF observation update. Weights are multiplied by
/// exp(-(rho_obs - rho_i)^2 / (2 sigma_rbf^2)) and renormalised; if every
/// weight underflows to zero the filter falls back to uniform weights so an
/// isolated absurd observation cannot wipe out the particle set. Returns the
/// weighted-mean point estimate.
inline double pf_update(FilterState& state, double rho_obs, double phi_abs,
                        const FilterParams& params) {
  if (!std::isfinite(rho_obs)) throw std::invalid_argument("rho observation must be finite");
  const double sigma = sigma_rbf(phi_abs, params);
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

  double sum = 0.0;
  for (std::size_t i = 0; i < state.particles.size(); ++i) {
    const double diff = rho_obs - state.particles[i].rho;
    state.weights[i] *= std::exp(-diff * diff * inv_two_sigma_sq);
    sum += state.weights[i];
  }
  if (sum <= 0.0) {
    std::fill(state.weights.begin(), state.weights.end(), 1.0 / state.weights.size());
  } else {
    for (auto& w : state.weights) w /= sum;
  }
  return pf_weighted_mean(state);
}

/// Systematic (low variance) resampling pointer walk: one uniform offset in
/// [0, 1/n_out) and n_out evenly spaced pointers over the weight CDF. Copy
/// counts equal n_out * w_i up to +-1 by construction.
inline std::vector<int> systematic_resample_indices(std::span<const double> weights, int n_out,
                                                    double offset_u01) {
  std::vector<int> indices;
  indices.reserve(n_out);
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t i = 0;
  for (int m = 0; m < n_out; ++m) {
    const double pointer = (m + offset_u01) / n_out;
    while (pointer >= cumulative && i + 1 < weights.size()) cumulative += weights[++i];
    indices.push_back(static_cast<int>(i));
  }
  return indices;
}

inline void pf_resample(FilterState& state, std::mt19937_64& rng) {
  const int n = static_cast<int>(state.particles.size());
  const std::vector<int> idx =
      systematic_resample_indices(state.weights, n, uniform(rng, 0.0, 1.0));
  std::vector<Particle> resampled(n);
  for (int m = 0; m < n; ++m) resampled[m] = state.particles[idx[m]];
  state.particles = std::move(resampled);
  std::fill(state.weights.begin(), state.weights.end(), 1.0 / n);
}

// ---------------------------------------------------------------------------
// Butterworth low-pass (bilinear transform with frequency pre-warping)
// ---------------------------------------------------------------------------

struct ButterworthSpec {
  int order = 1;
  double f_crit_hz = 1.0;
  double f_sample_hz = 8.0;
};

/// Causal IIR low-pass built as a cascade of first/second-order sections.
/// DC gain is exactly 1 by construction.
class ButterworthFilter {
 public:
  explicit ButterworthFilter(const ButterworthSpec& spec) {
    if (spec.order < 1) throw std::invalid_argument("filter order must be >= 1");
    if (spec.f_crit_hz <= 0.0 || spec.f_crit_hz >= 0.5 * spec.f_sample_hz)
      throw InvalidCutoff("critical frequency must lie in (0, f_sample/2)");

    const double k = std::tan(kPi * spec.f_crit_hz / spec.f_sample_hz);  // pre-warped
    if (spec.order % 2 == 1) {
      Section s;
      s.b0 = s.b1 = k / (k + 1.0);
      s.a1 = (k - 1.0) / (k + 1.0);
      sections_.push_back(s);
    }
    const int pairs = spec.order / 2;
    for (int p = 0; p < pairs; ++p) {
      const double zeta = std::sin(kPi * (2.0 * p + 1.0) / (2.0 * spec.order));
      const double q = 1.0 / (2.0 * zeta);
      const double den = k * k + k / q + 1.0;
      Section s;
      s.b0 = k * k / den;
      s.b1 = 2.0 * s.b0;
      s.b2 = s.b0;
      s.a1 = 2.0 * (k * k - 1.0) / den;
      s.a2 = (k * k - k / q + 1.0) / den;
      sections_.push_back(s);
    }
  }

  double step(double x) {
    for (auto& s : sections_) x = s.step(x);
    return x;
  }

  /// Seeds the internal state with the steady-state response to a constant
  /// input, eliminating the startup transient.
  void prime(double x) {
    for (auto& s : sections_) s.prime(x);
  }

 private:
  // Direct form II transposed.
  struct Section {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
    double z1 = 0.0, z2 = 0.0;

    double step(double x) {
      const double y = b0 * x + z1;
      z1 = b1 * x - a1 * y + z2;
      z2 = b2 * x - a2 * y;
      return y;
    }
    void prime(double x) {
      z1 = (1.0 - b0) * x;
      z2 = (b2 - a2) * x;
    }
  };

  std::vector<Section> sections_;
};

}  // namespace ptzloc
