#pragma once

#include <cmath>

#include "ptzloc/math.hpp"

namespace ptzloc {

/// Direction / unit-vector arithmetic. The camera frame is right-handed with
/// x pointing down (positive tilt), y pointing right (positive pan) and z
/// along the optical axis.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }
};

/// Position in metres (camera-at-zero-pan-tilt frame unless stated otherwise).
struct CartesianCoord {
  double x_m = 0.0;
  double y_m = 0.0;
  double z_m = 0.0;

  Vec3 vec() const { return {x_m, y_m, z_m}; }
  double norm() const { return vec().norm(); }
};

/// Range plus total bearing angles: pan_total = pan + theta_p,
/// tilt_total = tilt + theta_t.
struct SphericalCoord {
  double rho_m = 0.0;
  double pan_total_rad = 0.0;
  double tilt_total_rad = 0.0;
};

inline CartesianCoord spherical_to_cartesian(const SphericalCoord& s) {
  const double ct = std::cos(s.tilt_total_rad);
  return {s.rho_m * std::sin(s.tilt_total_rad),
          s.rho_m * ct * std::sin(s.pan_total_rad),
          s.rho_m * ct * std::cos(s.pan_total_rad)};
}

inline SphericalCoord cartesian_to_spherical(const CartesianCoord& c) {
  const double rho = c.norm();
  if (rho == 0.0) return {0.0, 0.0, 0.0};
  return {rho, std::atan2(c.y_m, c.z_m), std::asin(c.x_m / rho)};
}

/// Orthonormal camera basis for a given pan/tilt, expressed in the world
/// frame. Columns are (down, right, forward); the forward axis matches
/// spherical_to_cartesian at (rho=1, pan, tilt).
struct CameraBasis {
  Vec3 down;
  Vec3 right;
  Vec3 forward;

  static CameraBasis from_pan_tilt(double pan_rad, double tilt_rad) {
    const double sp = std::sin(pan_rad), cp = std::cos(pan_rad);
    const double st = std::sin(tilt_rad), ct = std::cos(tilt_rad);
    CameraBasis b;
    b.forward = {st, ct * sp, ct * cp};
    b.right = {0.0, cp, -sp};
    b.down = b.right.cross(b.forward);
    return b;
  }

  Vec3 world_to_camera(const Vec3& w) const {
    return {down.dot(w), right.dot(w), forward.dot(w)};
  }
  Vec3 camera_to_world(const Vec3& c) const {
    return down * c.x + right * c.y + forward * c.z;
  }
};

}  // namespace ptzloc
