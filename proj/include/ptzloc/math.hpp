#pragma once

#include <cmath>
#include <random>

namespace ptzloc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to [-pi, pi]. remainder() is exact for representable
/// multiples of 2*pi, so the difference between -pi and +pi is exactly zero.
inline double wrap_angle(double rad) { return std::remainder(rad, kTwoPi); }

/// Normal draw that degrades to the mean when sigma <= 0 (degenerate Normal).
inline double gauss(std::mt19937_64& rng, double mean, double sigma) {
  if (sigma <= 0.0) return mean;
  std::normal_distribution<double> dist(mean, sigma);
  return dist(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(rng);
}

/// Derives an independent child stream from a master seed. splitmix64 step.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ptzloc
