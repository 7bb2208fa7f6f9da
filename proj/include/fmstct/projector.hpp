#pragma once
// Truncated translating-source projections p_n(lambda_i, u_j).

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "fmstct/geometry.hpp"
#include "fmstct/phantom.hpp"

namespace fmstct {

/// T x N x J samples, segment-major, then source index, then detector index.
/// Also used for weight maps and differentiated data, which share the layout.
struct Sinogram {
  ScanConfig cfg;
  std::vector<double> data;

  Sinogram() = default;
  explicit Sinogram(const ScanConfig& c, double fill = 0.0)
      : cfg(c), data(static_cast<size_t>(c.T) * c.N * c.J, fill) {}

  size_t index(int n, int i, int j) const { return (static_cast<size_t>(n) * cfg.N + i) * cfg.J + j; }
  double& at(int n, int i, int j) { return data[index(n, i, j)]; }
  double at(int n, int i, int j) const { return data[index(n, i, j)]; }
  double* row(int n, int i) { return data.data() + index(n, i, 0); }
  const double* row(int n, int i) const { return data.data() + index(n, i, 0); }

  bool same_shape(const Sinogram& o) const {
    return cfg.T == o.cfg.T && cfg.N == o.cfg.N && cfg.J == o.cfg.J;
  }
};

/// True when every ellipse lies inside the FOV disk.
inline bool phantom_within_fov(const PhantomSpec& spec, const ScanConfig& cfg) {
  const double R = fov_radius(cfg);
  for (const auto& e : spec.ellipses)
    if (std::hypot(e.cx, e.cy) + std::max(e.a, e.b) > R * (1.0 + 1e-9)) return false;
  return true;
}

/// Analytic projection: each detector value is the line integral along the ray
/// from the source focus to the element centre.
inline Sinogram forward_project(const PhantomSpec& spec, const ScanConfig& cfg) {
  if (!phantom_within_fov(spec, cfg))
    std::clog << "warning: phantom extends beyond the FOV radius " << fov_radius(cfg) << " mm\n";
  Sinogram sino(cfg);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < cfg.T; ++n) {
    const StctFrame f = frame(cfg, n + 1);
    for (int i = 0; i < cfg.N; ++i) {
      const Point2 src = source_position(cfg, f, cfg.lambda_at(i));
      double* out = sino.row(n, i);
      for (int j = 0; j < cfg.J; ++j) out[j] = line_integral(spec, src, detector_position(cfg, f, cfg.u_at(j)));
    }
  }
  return sino;
}

namespace detail {

// Clip segment p0 + s (p1 - p0), s in [0,1], to the box |x|,|y| <= half. Returns false if empty.
inline bool clip_to_box(Point2 p0, Point2 p1, double half, double& s0, double& s1) {
  s0 = 0.0;
  s1 = 1.0;
  const double d[2] = {p1.x - p0.x, p1.y - p0.y};
  const double o[2] = {p0.x, p0.y};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (std::abs(o[k]) > half) return false;
      continue;
    }
    double a = (-half - o[k]) / d[k], b = (half - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    s0 = std::max(s0, a);
    s1 = std::min(s1, b);
  }
  return s1 > s0;
}

}  // namespace detail

/// Ray-driven projection of a pixel image: trapezoidal rule with spacing
/// `step` (mm) over the bilinearly interpolated image.
inline Sinogram forward_project_grid(const ImageGrid& img, const ScanConfig& cfg, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("forward_project_grid: step must be > 0");
  const double half = 0.5 * std::max(img.width, img.height) * img.pixel_size;
  Sinogram sino(cfg);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < cfg.T; ++n) {
    const StctFrame f = frame(cfg, n + 1);
    for (int i = 0; i < cfg.N; ++i) {
      const Point2 src = source_position(cfg, f, cfg.lambda_at(i));
      for (int j = 0; j < cfg.J; ++j) {
        const Point2 det = detector_position(cfg, f, cfg.u_at(j));
        double s0, s1;
        if (!detail::clip_to_box(src, det, half, s0, s1)) continue;
        const Point2 a = src + s0 * (det - src);
        const Point2 b = src + s1 * (det - src);
        const double len = norm(b - a);
        const int steps = std::max(1, static_cast<int>(std::ceil(len / step)));
        const double h = len / steps;
        const Point2 dir = (1.0 / steps) * (b - a);
        double acc = 0.5 * (img.sample(a) + img.sample(b));
        for (int k = 1; k < steps; ++k) acc += img.sample(a + static_cast<double>(k) * dir);
        sino.at(n, i, j) = acc * h;
      }
    }
  }
  return sino;
}

}  // namespace fmstct
