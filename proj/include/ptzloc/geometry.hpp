#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ptzloc/camera.hpp"
#include "ptzloc/coords.hpp"
#include "ptzloc/math.hpp"

namespace ptzloc {

struct PoseBehindCamera : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateConic : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveDiameter : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Detected or projected ellipse in pixel coordinates. (u, v) is the centroid,
/// a >= b >= 0 are the semi-axes and phi is the image-plane rotation of the
/// major axis in [-pi, pi].
struct EllipseParams {
  double u = 0.0;
  double v = 0.0;
  double a = 0.0;
  double b = 0.0;
  double phi = 0.0;
};

struct MarkerSpec {
  double diameter_m = 0.30;
};

/// Ground-truth circle pose in the camera frame (x down, y right, z forward).
struct CirclePose3D {
  CartesianCoord center;
  Vec3 normal{0.0, 0.0, 1.0};
  double radius_m = 0.15;
};

/// Pinhole projection of a camera-frame point, origin at the frame centre
/// convention: u grows to the right, v grows downward.
inline std::pair<double, double> project_point(const CartesianCoord& p,
                                               const CameraIntrinsics& intr) {
  if (p.z_m <= 0.0) throw PoseBehindCamera("point not strictly in front of camera");
  const double u = 0.5 * intr.width_px + intr.focal_x_px() * (p.y_m / p.z_m);
  const double v = 0.5 * intr.height_px + intr.focal_y_px() * (p.x_m / p.z_m);
  return {u, v};
}

namespace detail {

/// Folds an axis orientation into (-pi/2, pi/2].
inline double normalize_axis_angle(double phi) {
  phi = wrap_angle(phi);
  if (phi > 0.5 * kPi) phi -= kPi;
  if (phi <= -0.5 * kPi) phi += kPi;
  return phi;
}

}  // namespace detail

/// Scaled-orthographic model of a circle's image: the semi-major axis equals
/// the circle radius times the perspective scale at the centre range, the
/// axis ratio is the foreshortening |cos| between the plane normal and the
/// viewing axis, and the minor axis lies along the image of the normal.
inline EllipseParams project_circle_orthogonal(const CirclePose3D& pose,
                                               const CameraIntrinsics& intr) {
  if (pose.center.z_m <= 0.0) throw PoseBehindCamera("circle centre behind camera");
  const Vec3 n = pose.normal.normalized();
  const double rho = pose.center.norm();

  EllipseParams e;
  std::tie(e.u, e.v) = project_point(pose.center, intr);
  e.a = pose.radius_m * intr.focal_x_px() / rho;
  e.b = e.a * std::abs(n.z);

  // Normal projected into pixel axes: camera x -> v (down), camera y -> u.
  const double minor_u = n.y;
  const double minor_v = n.x;
  if (std::hypot(minor_u, minor_v) < 1e-12) {
    e.phi = 0.0;  // head-on circle, orientation undefined
  } else {
    e.phi = detail::normalize_axis_angle(std::atan2(minor_u, -minor_v) );
  }
  return e;
}

/// Exact perspective image of the circle: samples points on the 3D circle,
/// projects each through the pinhole model and fits a conic by least squares
/// on normalised coordinates. Throws DegenerateConic when the fitted conic is
/// not a real ellipse (e.g. an edge-on circle).
inline EllipseParams project_circle_perspective(const CirclePose3D& pose,
                                                const CameraIntrinsics& intr,
                                                int samples = 128) {
  if (pose.center.z_m <= 0.0) throw PoseBehindCamera("circle centre behind camera");
  if (samples < 64) samples = 64;

  const Vec3 n = pose.normal.normalized();
  const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  const Vec3 e1 = n.cross(helper).normalized();
  const Vec3 e2 = n.cross(e1);

  Eigen::MatrixX2d pts(samples, 2);
  for (int i = 0; i < samples; ++i) {
    const double t = kTwoPi * i / samples;
    const Vec3 q = pose.center.vec() + (e1 * std::cos(t) + e2 * std::sin(t)) * pose.radius_m;
    const auto [u, v] = project_point({q.x, q.y, q.z}, intr);
    pts(i, 0) = u;
    pts(i, 1) = v;
  }

  // Hartley-style isotropic normalisation keeps the design matrix conditioned.
  const Eigen::RowVector2d centroid = pts.colwise().mean();
  const Eigen::MatrixX2d centered = pts.rowwise() - centroid;
  const double rms = std::sqrt(centered.squaredNorm() / samples);
  if (rms < 1e-12) throw DegenerateConic("projected points collapse to a point");
  const double scale = std::sqrt(2.0) / rms;

  Eigen::MatrixXd design(samples, 6);
  for (int i = 0; i < samples; ++i) {
    const double x = centered(i, 0) * scale;
    const double y = centered(i, 1) * scale;
    design.row(i) << x * x, x * y, y * y, x, y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
  Eigen::VectorXd c = svd.matrixV().col(5);
  if (c(0) + c(2) < 0.0) c = -c;  // fix the conic's arbitrary overall sign
  const double A = c(0), B = c(1), C = c(2), D = c(3), E = c(4), F = c(5);

  const double disc = B * B - 4.0 * A * C;
  if (!(disc < 0.0)) throw DegenerateConic("fitted conic is not an ellipse");

  const double cx = (B * E - 2.0 * C * D) / disc;
  const double cy = (B * D - 2.0 * A * E) / disc;
  const double f_c = F + 0.5 * (D * cx + E * cy);

  Eigen::Matrix2d quad;
  quad << A, 0.5 * B, 0.5 * B, C;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(quad);
  const Eigen::Vector2d lam = eig.eigenvalues();  // ascending, both positive here
  if (lam(0) <= 0.0 || -f_c / lam(0) <= 0.0 || -f_c / lam(1) <= 0.0)
    throw DegenerateConic("fitted conic has no real ellipse axes");

  // The smaller eigenvalue carries the longer axis.
  const double a_n = std::sqrt(-f_c / lam(0));
  const double b_n = std::sqrt(-f_c / lam(1));
  const Eigen::Vector2d major = eig.eigenvectors().col(0);

  EllipseParams e;
  e.u = centroid(0) + cx / scale;
  e.v = centroid(1) + cy / scale;
  e.a = a_n / scale;
  e.b = b_n / scale;
  e.phi = detail::normalize_axis_angle(std::atan2(major(1), major(0)));
  return e;
}

/// Range from the observed marker diameter:
/// rho = (D * h) / (2 * d_o) * cot(HFOV / 2).
inline double estimate_range(const MarkerSpec& marker, double d_obs_px, int h_px,
                             double hfov_rad) {
  if (marker.diameter_m <= 0.0) throw std::invalid_argument("marker diameter must be positive");
  if (d_obs_px <= 0.0) throw NonPositiveDiameter("observed diameter must be positive");
  if (h_px <= 0) throw std::invalid_argument("horizontal resolution must be positive");
  if (hfov_rad <= 0.0 || hfov_rad >= kPi) throw std::invalid_argument("HFOV outside (0, pi)");
  return (marker.diameter_m * h_px) / (2.0 * d_obs_px) / std::tan(0.5 * hfov_rad);
}

}  // namespace ptzloc
