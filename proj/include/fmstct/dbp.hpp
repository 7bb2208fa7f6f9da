#pragma once
// Differentiated backprojection. Both engines return the per-segment image
//
//   Db(x) = 1/2 * integral over the segment's rays through x of d/ds (w p),
//
// which along lines parallel to the source translation is -2 pi times the
// Hilbert transform of the segment's share of the object.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmstct/errors.hpp"
#include "fmstct/geometry.hpp"
#include "fmstct/projector.hpp"
#include "fmstct/redundancy.hpp"

namespace fmstct {

/// Multiplies every sample by w * (l+h)^2 / sqrt((l+h)^2 + (lambda-u)^2).
inline Sinogram preweight(const Sinogram& sino, const WeightMap& weights) {
  if (!sino.same_shape(weights.weights)) throw std::invalid_argument("preweight: sinogram and weight map dimensions differ");
  const ScanConfig& c = sino.cfg;
  const double D = c.l + c.h;
  Sinogram out(c);
  for (int n = 0; n < c.T; ++n)
    for (int i = 0; i < c.N; ++i) {
      const double lambda = c.lambda_at(i);
      const double* p = sino.row(n, i);
      const double* w = weights.weights.row(n, i);
      double* o = out.row(n, i);
      for (int j = 0; j < c.J; ++j) {
        const double du = lambda - c.u_at(j);
        o[j] = w[j] * D * D / std::sqrt(D * D + du * du) * p[j];
      }
    }
  return out;
}

namespace detail {

// First derivative of `count` samples at `stride`: central inside, one-sided
// second order at both ends.
inline void diff_line(const double* in, double* out, int count, size_t stride, double spacing) {
  const double inv2 = 0.5 / spacing;
  for (int k = 1; k + 1 < count; ++k) out[k * stride] = (in[(k + 1) * stride] - in[(k - 1) * stride]) * inv2;
  const size_t last = static_cast<size_t>(count - 1) * stride;
  out[0] = (-3.0 * in[0] + 4.0 * in[stride] - in[2 * stride]) * inv2;
  out[last] = (3.0 * in[last] - 4.0 * in[last - stride] + in[last - 2 * stride]) * inv2;
}

}  // namespace detail

inline Sinogram diff_along_detector(const Sinogram& s) {
  if (s.cfg.J < 3) throw std::invalid_argument("diff_along_detector: need J >= 3");
  Sinogram out(s.cfg);
  for (int n = 0; n < s.cfg.T; ++n)
    for (int i = 0; i < s.cfg.N; ++i) detail::diff_line(s.row(n, i), out.row(n, i), s.cfg.J, 1, s.cfg.pixel_pitch);
  return out;
}

inline Sinogram diff_along_source(const Sinogram& s) {
  if (s.cfg.N < 3) throw std::invalid_argument("diff_along_source: need N >= 3");
  Sinogram out(s.cfg);
  const size_t stride = static_cast<size_t>(s.cfg.J);
  for (int n = 0; n < s.cfg.T; ++n)
    for (int j = 0; j < s.cfg.J; ++j)
      detail::diff_line(s.row(n, 0) + j, out.row(n, 0) + j, s.cfg.N, stride, s.cfg.source_spacing());
  return out;
}

/// Rotated square lattice: column index runs along (cos angle, sin angle), row
/// index along (-sin angle, cos angle).
struct SampleGrid {
  Point2 center{};
  double angle = 0.0;
  double spacing = 1.0;
  int nx = 0;
  int ny = 0;

  Point2 axis_x() const { return {std::cos(angle), std::sin(angle)}; }
  Point2 axis_y() const { return {-std::sin(angle), std::cos(angle)}; }
  double offset_x(int i) const { return (i - 0.5 * (nx - 1)) * spacing; }
  double offset_y(int j) const { return (j - 0.5 * (ny - 1)) * spacing; }
  Point2 position(int i, int j) const { return center + offset_x(i) * axis_x() + offset_y(j) * axis_y(); }
  size_t size() const { return static_cast<size_t>(nx) * ny; }

  /// Bilinear lookup in a row-major nx*ny array; zero outside the lattice.
  double sample(const std::vector<double>& v, Point2 p) const {
    const Point2 d = p - center;
    const double fi = dot(d, axis_x()) / spacing + 0.5 * (nx - 1);
    const double fj = dot(d, axis_y()) / spacing + 0.5 * (ny - 1);
    const double i0f = std::floor(fi), j0f = std::floor(fj);
    if (i0f < 0 || j0f < 0 || i0f > nx - 1 || j0f > ny - 1) return 0.0;
    const int i0 = static_cast<int>(i0f), j0 = static_cast<int>(j0f);
    const int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny - 1);
    const double ai = fi - i0, aj = fj - j0;
    if ((i1 == i0 && ai > 0) || (j1 == j0 && aj > 0)) return 0.0;
    auto at = [&](int i, int j) { return v[static_cast<size_t>(j) * nx + i]; };
    return (1 - aj) * ((1 - ai) * at(i0, j0) + ai * at(i1, j0)) + aj * ((1 - ai) * at(i0, j1) + ai * at(i1, j1));
  }
};

/// Lattice aligned with segment n: columns along the source translation,
/// rows spanning |y'| <= half_rows, columns spanning |x'| <= half_cols.
inline SampleGrid frame_grid(const StctFrame& f, double spacing, double half_cols, double half_rows) {
  SampleGrid g;
  g.angle = f.theta;
  g.spacing = spacing;
  g.nx = 2 * static_cast<int>(std::ceil(half_cols / spacing)) + 1;
  g.ny = 2 * static_cast<int>(std::ceil(half_rows / spacing)) + 1;
  return g;
}

/// Half-length along a filtering line at local depth y' outside of which no
/// measured ray passes; DBP values vanish there.
inline double dbp_support_half_length(const ScanConfig& cfg, double y_local) {
  const double k = (y_local + cfg.l) / (cfg.l + cfg.h);
  return cfg.lambda_m * std::abs(1.0 - k) + cfg.u_m * std::abs(k);
}

struct DbpImage {
  int frame = 1;
  SampleGrid grid;
  std::vector<double> values;  ///< row-major, grid.ny rows of grid.nx
  double eta = 0.0;            ///< filtering-line angle from +y: theta_n + pi/2
};

/// Detector-derivative engine. `diffed` holds d/du of the preweighted data;
/// values beyond the detector are taken as zero.
inline DbpImage d_dbp(const Sinogram& diffed, const StctFrame& f, const SampleGrid& grid) {
  const ScanConfig& c = diffed.cfg;
  DbpImage out{f.index, grid, std::vector<double>(grid.size(), 0.0), f.theta + 0.5 * kPi};
  const int n = f.index - 1;
  const double D = c.l + c.h;
  const double u0 = c.u_at(0), inv_pitch = 1.0 / c.pixel_pitch;
  const double dl = c.source_spacing();
  for (size_t k = 0; k < grid.size(); ++k) {
    const Point2 loc = to_local(f, grid.position(static_cast<int>(k % grid.nx), static_cast<int>(k / grid.nx)));
    if (!(loc.y + c.l > 0.0)) throw GeometryError("d_dbp: grid point at or behind the source line (L <= 0)");
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Point2 loc = to_local(f, grid.position(i, j));
      const double L = loc.y + c.l;
      const double scale = D / L;
      double acc = 0.0;
      for (int s = 0; s < c.N; ++s) {
        const double lambda = c.lambda_at(s);
        const double fu = (lambda + (loc.x - lambda) * scale - u0) * inv_pitch;
        if (fu < 0.0 || fu > c.J - 1) continue;
        int j0 = static_cast<int>(fu);
        if (j0 == c.J - 1) j0 = c.J - 2;
        const double a = fu - j0;
        const double* g = diffed.row(n, s);
        const double v = (1.0 - a) * g[j0] + a * g[j0 + 1];
        acc += (s == 0 || s == c.N - 1) ? 0.5 * v : v;
      }
      out.values[static_cast<size_t>(j) * grid.nx + i] = 0.5 * acc * dl / (L * L);
    }
  }
  return out;
}

/// Source-derivative engine. `diffed` holds d/dlambda of the preweighted data;
/// the translation is finite so lambda* outside [-lambda_m, lambda_m] adds nothing.
inline DbpImage s_dbp(const Sinogram& diffed, const StctFrame& f, const SampleGrid& grid) {
  const ScanConfig& c = diffed.cfg;
  DbpImage out{f.index, grid, std::vector<double>(grid.size(), 0.0), f.theta + 0.5 * kPi};
  const int n = f.index - 1;
  const double D = c.l + c.h;
  const double dl = c.source_spacing();
  for (size_t k = 0; k < grid.size(); ++k) {
    const Point2 loc = to_local(f, grid.position(static_cast<int>(k % grid.nx), static_cast<int>(k / grid.nx)));
    if (!(c.h - loc.y > 0.0)) throw GeometryError("s_dbp: grid point at or beyond the detector line (H <= 0)");
  }
  // columns over lambda are contiguous after transposing
  std::vector<double> cols(static_cast<size_t>(c.J) * c.N);
  for (int i = 0; i < c.N; ++i)
    for (int j = 0; j < c.J; ++j) cols[static_cast<size_t>(j) * c.N + i] = diffed.at(n, i, j);
#pragma omp parallel for schedule(static)
  for (int jr = 0; jr < grid.ny; ++jr) {
    for (int i = 0; i < grid.nx; ++i) {
      const Point2 loc = to_local(f, grid.position(i, jr));
      const double H = c.h - loc.y;
      const double scale = D / H;
      double acc = 0.0;
      for (int j = 0; j < c.J; ++j) {
        const double u = c.u_at(j);
        const double fl = (u + (loc.x - u) * scale + c.lambda_m) / dl;
        if (fl < 0.0 || fl > c.N - 1) continue;
        int i0 = static_cast<int>(fl);
        if (i0 == c.N - 1) i0 = c.N - 2;
        const double a = fl - i0;
        const double* g = cols.data() + static_cast<size_t>(j) * c.N;
        const double v = (1.0 - a) * g[i0] + a * g[i0 + 1];
        acc += (j == 0 || j == c.J - 1) ? 0.5 * v : v;
      }
      out.values[static_cast<size_t>(jr) * grid.nx + i] = 0.5 * acc * c.pixel_pitch / (H * H);
    }
  }
  return out;
}

}  // namespace fmstct
