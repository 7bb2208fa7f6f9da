#pragma once
// Acquisition geometry of a full-scan multiple source-translation CT scan.
//
// Every segment n has its own local frame rotated by theta_n. In that frame the
// source translates along y' = -l (coordinate lambda), the flat detector sits at
// y' = +h (coordinate u) and the virtual detector is the line y' = 0 through the
// rotation centre (coordinate t). World and local coordinates are related by the
// row-vector rotation [x', y'] * R(theta_n) = [x, y], i.e.
//
//   x' =  x cos(theta) + y sin(theta)
//   y' = -x sin(theta) + y cos(theta)
//
// A ray is identified in world space by (alpha, s): alpha = psi + theta_n with
// psi = atan((lambda - t) / l) its tilt inside the frame, and s its signed
// distance from the origin.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fmstct/errors.hpp"

namespace fmstct {

inline constexpr double kPi = std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double k, Point2 a) { return {k * a.x, k * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Number of segments and the inter-segment angle that tiles the full circle.
struct Segmentation {
  double delta_theta_raw = 0.0;  ///< 2 atan(u_m / h)
  int T = 0;
  double delta_theta = 0.0;      ///< 2 pi / T
};

inline Segmentation segmentation(double h, double u_m) {
  if (!(h > 0.0) || !(u_m > 0.0)) throw std::invalid_argument("segmentation: h and u_m must be positive");
  Segmentation s;
  s.delta_theta_raw = 2.0 * std::atan(u_m / h);
  s.T = static_cast<int>(std::ceil(2.0 * kPi / s.delta_theta_raw - 1e-12));
  s.delta_theta = 2.0 * kPi / s.T;
  return s;
}

/// Full-scan acquisition geometry. Lengths in mm, angles in radians.
struct ScanConfig {
  double l = 0.0;            ///< source-to-origin distance
  double h = 0.0;            ///< detector-to-origin distance
  double lambda_m = 0.0;     ///< half-length of the source translation
  double u_m = 0.0;          ///< detector half-size, J * pixel_pitch / 2
  int N = 0;                 ///< source samples per segment
  int J = 0;                 ///< detector elements
  double pixel_pitch = 0.0;
  int T = 0;
  double delta_theta = 0.0;
  bool full_scan = true;

  /// Builds and validates a configuration; T and delta_theta are derived.
  static ScanConfig make(double l, double h, double lambda_m, int N, int J, double pixel_pitch) {
    ScanConfig c;
    c.l = l;
    c.h = h;
    c.lambda_m = lambda_m;
    c.N = N;
    c.J = J;
    c.pixel_pitch = pixel_pitch;
    c.u_m = 0.5 * J * pixel_pitch;
    c.validate();
    const Segmentation s = segmentation(h, c.u_m);
    c.T = s.T;
    c.delta_theta = s.delta_theta;
    return c;
  }

  void validate() const {
    if (!(l > 0.0)) throw std::invalid_argument("ScanConfig: l must be > 0");
    if (!(h > 0.0)) throw std::invalid_argument("ScanConfig: h must be > 0");
    if (!(lambda_m > 0.0)) throw std::invalid_argument("ScanConfig: lambda_m must be > 0");
    if (!(u_m > 0.0)) throw std::invalid_argument("ScanConfig: u_m must be > 0");
    if (N < 2) throw std::invalid_argument("ScanConfig: N must be >= 2");
    if (J < 2) throw std::invalid_argument("ScanConfig: J must be >= 2");
    if (!(lambda_m * h > u_m * l))
      throw std::invalid_argument("ScanConfig: lambda_m*h must exceed u_m*l (FOV radius would be <= 0)");
    if (!full_scan) throw std::invalid_argument("ScanConfig: only full-scan mode is supported");
  }

  double source_spacing() const { return 2.0 * lambda_m / (N - 1); }
  double lambda_at(int i) const { return -lambda_m + i * source_spacing(); }
  double u_at(int j) const { return (j - 0.5 * (J - 1)) * pixel_pitch; }
  /// Largest in-frame ray tilt |psi| reachable with this source and detector.
  double psi_max() const { return std::atan((lambda_m + u_m) / (l + h)); }
};

struct StctFrame {
  int index = 1;       ///< 1..T
  double theta = 0.0;  ///< delta_theta * (index - 1)
};

inline StctFrame frame(const ScanConfig& cfg, int index) {
  if (index < 1 || index > cfg.T) throw std::out_of_range("frame index out of 1..T");
  return {index, cfg.delta_theta * (index - 1)};
}

/// Segment index modulo T, 1-based; the full scan closes the circle.
inline int wrap_index(const ScanConfig& cfg, int index) {
  const int m = ((index - 1) % cfg.T + cfg.T) % cfg.T;
  return m + 1;
}

inline Point2 to_local(const StctFrame& f, Point2 p) {
  const double c = std::cos(f.theta), s = std::sin(f.theta);
  return {p.x * c + p.y * s, -p.x * s + p.y * c};
}

inline Point2 to_world(const StctFrame& f, Point2 p) {
  const double c = std::cos(f.theta), s = std::sin(f.theta);
  return {p.x * c - p.y * s, p.x * s + p.y * c};
}

inline Point2 source_position(const ScanConfig& cfg, const StctFrame& f, double lambda) {
  if (std::abs(lambda) > cfg.lambda_m * (1.0 + 1e-12))
    throw std::domain_error("source_position: |lambda| exceeds lambda_m");
  const double c = std::cos(f.theta), s = std::sin(f.theta);
  return {lambda * c + cfg.l * s, lambda * s - cfg.l * c};
}

/// World position of detector coordinate u (not restricted to the physical panel).
inline Point2 detector_position(const ScanConfig& cfg, const StctFrame& f, double u) {
  return to_world(f, {u, cfg.h});
}

inline double fov_radius(const ScanConfig& cfg) {
  return (cfg.lambda_m * cfg.h - cfg.u_m * cfg.l) / std::hypot(cfg.l + cfg.h, cfg.lambda_m + cfg.u_m);
}

/// Inscribed radius of the static fan (source at lambda = 0).
inline double standard_fov_radius(const ScanConfig& cfg) {
  return cfg.l * cfg.u_m / std::hypot(cfg.l + cfg.h, cfg.u_m);
}

struct DetectorHit {
  double u_star = 0.0;
  double L = 0.0;
};

inline DetectorHit point_to_detector(const ScanConfig& cfg, const StctFrame& f, double lambda, Point2 x) {
  const Point2 p = to_local(f, x);
  const double L = p.y + cfg.l;
  if (!(L > 0.0)) throw GeometryError("point_to_detector: point at or behind the source line (L <= 0)");
  return {lambda + (p.x - lambda) * (cfg.l + cfg.h) / L, L};
}

struct SourceHit {
  double lambda_star = 0.0;
  double H = 0.0;
};

inline SourceHit point_to_source(const ScanConfig& cfg, const StctFrame& f, double u, Point2 x) {
  const Point2 p = to_local(f, x);
  const double H = cfg.h - p.y;
  if (!(H > 0.0)) throw GeometryError("point_to_source: point at or beyond the detector line (H <= 0)");
  return {u + (p.x - u) * (cfg.l + cfg.h) / H, H};
}

inline double detector_from_virtual(const ScanConfig& cfg, double lambda, double t) {
  return (cfg.l + cfg.h) / cfg.l * t - cfg.h / cfg.l * lambda;
}

inline double virtual_from_detector(const ScanConfig& cfg, double lambda, double u) {
  return (cfg.l * u + cfg.h * lambda) / (cfg.l + cfg.h);
}

struct ParallelCoords {
  double alpha = 0.0;
  double s = 0.0;
};

inline ParallelCoords to_parallel(const ScanConfig& cfg, const StctFrame& f, double lambda, double t) {
  const double d = lambda - t;
  return {std::atan(d / cfg.l) + f.theta, cfg.l * t / std::hypot(d, cfg.l)};
}

struct VirtualCoords {
  double lambda = 0.0;
  double t = 0.0;
};

/// Re-expresses the in-frame ray (lambda, t) in a frame whose angle differs by
/// `shift` (theta_target = theta_source + shift), keeping the world line.
/// Returns false when the ray is parallel to or points away from the target
/// frame's detector.
inline bool rotate_ray(double l, double shift, double lambda, double t, VirtualCoords& out) {
  const double d = lambda - t;
  const double tn = std::tan(shift);
  const double den = l + d * tn;
  // psi' = psi - shift must stay inside (-pi/2, pi/2)
  if (!(den > 1e-12 * l) || std::abs(shift) >= kPi / 2) return false;
  const double dn = (d * l - l * l * tn) / den;
  const double tt = t * std::hypot(dn, l) / std::hypot(d, l);
  out = {tt + dn, tt};
  return true;
}

/// Coordinates in segment n-1 of the ray (lambda, t) of segment n.
inline VirtualCoords adjacent_overlap_map(const ScanConfig& cfg, double lambda, double t) {
  VirtualCoords out;
  if (!rotate_ray(cfg.l, -cfg.delta_theta, lambda, t, out))
    throw GeometryError("adjacent_overlap_map: ray is not representable in the previous segment");
  return out;
}

/// Inverse of adjacent_overlap_map: coordinates in segment n+1.
inline VirtualCoords adjacent_overlap_map_next(const ScanConfig& cfg, double lambda, double t) {
  VirtualCoords out;
  if (!rotate_ray(cfg.l, cfg.delta_theta, lambda, t, out))
    throw GeometryError("adjacent_overlap_map_next: ray is not representable in the next segment");
  return out;
}

}  // namespace fmstct
