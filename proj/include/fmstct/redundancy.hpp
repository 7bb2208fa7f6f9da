#pragma once
// Redundancy weights for the full-scan geometry.
//
// Every segment sees the same valid region Omega in the (lambda, t) plane. Rays
// with lambda - t > 0 whose copy in segment n+1 is also valid form R2; rays with
// lambda - t < 0 whose copy in segment n-1 is valid form R1. R1 of segment n and
// R2 of segment n-1 are the same physical rays. R2 weights come from W-Line
// distances to the region boundary, R1 weights are the complement of the
// partner's R2 weight.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fmstct/geometry.hpp"
#include "fmstct/projector.hpp"

namespace fmstct {

enum class RegionLabel { NonRedundant, R1, R2 };

inline const char* to_string(RegionLabel r) {
  switch (r) {
    case RegionLabel::R1: return "R1";
    case RegionLabel::R2: return "R2";
    default: return "NonRedundant";
  }
}

inline bool valid_region_contains(const ScanConfig& cfg, double lambda, double t) {
  return std::abs(lambda) <= cfg.lambda_m && std::abs(detector_from_virtual(cfg, lambda, t)) <= cfg.u_m;
}

/// Cosine roll-off from 1 (x <= 0) to 0 (x >= 1).
inline double smooth_f(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return 0.5 * (1.0 + std::sin((0.5 - x) * kPi));
}

inline bool in_r2(const ScanConfig& cfg, double lambda, double t) {
  if (!(lambda - t > 0.0) || !valid_region_contains(cfg, lambda, t)) return false;
  VirtualCoords next;
  return rotate_ray(cfg.l, cfg.delta_theta, lambda, t, next) && valid_region_contains(cfg, next.lambda, next.t);
}

inline bool in_r1(const ScanConfig& cfg, double lambda, double t) {
  if (!(lambda - t < 0.0) || !valid_region_contains(cfg, lambda, t)) return false;
  VirtualCoords prev;
  return rotate_ray(cfg.l, -cfg.delta_theta, lambda, t, prev) && valid_region_contains(cfg, prev.lambda, prev.t);
}

/// Region of (lambda, t) in segment n. Geometry is the same for every segment;
/// n only names the partner segments (n-1 and n+1, modulo T).
inline RegionLabel classify(const ScanConfig& cfg, int /*n*/, double lambda, double t) {
  if (in_r2(cfg, lambda, t)) return RegionLabel::R2;
  if (in_r1(cfg, lambda, t)) return RegionLabel::R1;
  return RegionLabel::NonRedundant;
}

struct BoundaryDistances {
  double d_inner = std::numeric_limits<double>::infinity();
  double d_outer = std::numeric_limits<double>::infinity();
};

namespace detail {

// Distance from (lambda, t) along direction (dt, dl) to the first exit from R2,
// and whether the first point outside is still inside Omega (inner boundary).
inline double r2_exit(const ScanConfig& cfg, double lambda, double t, double dt, double dl, bool& inner) {
  const double coarse = cfg.lambda_m / 1000.0;
  const double tol = 1e-6 * cfg.lambda_m;
  double lo = 0.0, hi = coarse;
  while (in_r2(cfg, lambda + hi * dl, t + hi * dt)) {
    lo = hi;
    hi += coarse;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (in_r2(cfg, lambda + mid * dl, t + mid * dt))
      lo = mid;
    else
      hi = mid;
  }
  inner = valid_region_contains(cfg, lambda + hi * dl, t + hi * dt);
  return lo;
}

}  // namespace detail

/// W-Line distances for an R2 sample. phi is the direction angle of the W-Line
/// in the (t, lambda) plane, t on the horizontal axis.
inline BoundaryDistances boundary_distances(const ScanConfig& cfg, int /*n*/, double lambda, double t, double phi) {
  BoundaryDistances d;
  const double dt = std::cos(phi), dl = std::sin(phi);
  for (const double sgn : {1.0, -1.0}) {
    bool inner = false;
    const double dist = detail::r2_exit(cfg, lambda, t, sgn * dt, sgn * dl, inner);
    double& slot = inner ? d.d_inner : d.d_outer;
    slot = std::min(slot, dist);
  }
  return d;
}

inline double r2_weight(const ScanConfig& cfg, double lambda, double t, double phi) {
  const BoundaryDistances d = boundary_distances(cfg, 0, lambda, t, phi);
  double x;
  if (std::isinf(d.d_outer))
    x = 0.0;
  else if (std::isinf(d.d_inner))
    x = 1.0;
  else if (d.d_inner + d.d_outer == 0.0)
    x = 0.5;
  else
    x = d.d_inner / (d.d_inner + d.d_outer);
  return smooth_f(x);
}

/// Continuous weight of the ray (lambda, t) of any segment; 0 outside Omega.
inline double weight_at(const ScanConfig& cfg, double lambda, double t, double phi) {
  if (!valid_region_contains(cfg, lambda, t)) return 0.0;
  if (in_r2(cfg, lambda, t)) return r2_weight(cfg, lambda, t, phi);
  if (in_r1(cfg, lambda, t)) {
    const VirtualCoords prev = adjacent_overlap_map(cfg, lambda, t);
    return 1.0 - r2_weight(cfg, prev.lambda, prev.t, phi);
  }
  return 1.0;
}

struct WeightMap {
  Sinogram weights;  ///< T x N x J, values in [0, 1]
  double phi = 0.75 * kPi;
};

inline constexpr double kDefaultWLineAngle = 0.75 * kPi;

/// Rejects geometries where a ray could be seen by three segments; the weight
/// construction only pairs neighbours.
inline void check_pairwise_overlap(const ScanConfig& cfg) {
  if (!(cfg.psi_max() < cfg.delta_theta))
    throw std::invalid_argument("redundancy: fan half-angle reaches the segment spacing; triple overlap unsupported");
}

inline WeightMap build_weight_map(const ScanConfig& cfg, double phi = kDefaultWLineAngle) {
  check_pairwise_overlap(cfg);
  WeightMap wm{Sinogram(cfg), phi};
#pragma omp parallel for schedule(dynamic)
  for (int row = 0; row < cfg.T * cfg.N; ++row) {
    const int n = row / cfg.N, i = row % cfg.N;
    const double lambda = cfg.lambda_at(i);
    double* out = wm.weights.row(n, i);
    for (int j = 0; j < cfg.J; ++j) out[j] = weight_at(cfg, lambda, virtual_from_detector(cfg, lambda, cfg.u_at(j)), phi);
  }
  return wm;
}

}  // namespace fmstct
