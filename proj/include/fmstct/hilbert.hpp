#pragma once
// Hilbert inversion of DBP images and summation of the partial images.
//
// Conventions: H g(x) = (1/pi) PV integral g(s) / (x - s) ds. The DBP of
// segment n equals -2 pi H f_n along lines parallel to the source translation,
// so f_n = -(1/(2 pi)) H^-1 Db_n with H^-1 = -H on the full line.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmstct/dbp.hpp"
#include "fmstct/geometry.hpp"
#include "fmstct/phantom.hpp"
#include "fmstct/projector.hpp"
#include "fmstct/redundancy.hpp"

namespace fmstct {

/// Scale from the inverse Hilbert transform of a DBP line to the partial image.
inline constexpr double kDbpCalibration = -1.0 / (2.0 * kPi);

/// Samples at origin + k * spacing along a line; the object is known to vanish
/// outside [-support, support].
struct LineSamples {
  double origin = 0.0;
  double spacing = 1.0;
  std::vector<double> values;
  double support = 1.0;

  double position(size_t k) const { return origin + static_cast<double>(k) * spacing; }
  size_t size() const { return values.size(); }
};

namespace detail {

inline void check_line(const LineSamples& b, const char* who) {
  if (b.size() < 32) throw std::invalid_argument(std::string(who) + ": need at least 32 samples");
  if (!(b.spacing > 0.0) || !(b.support > 0.0)) throw std::invalid_argument(std::string(who) + ": spacing and support must be > 0");
  const double eps = 1e-9 * b.spacing;
  if (b.origin > -b.support + eps || b.position(b.size() - 1) < b.support - eps)
    throw std::invalid_argument(std::string(who) + ": support exceeds the sampled interval");
}

// (1/pi) sum_k g_k / (x - s_k) * spacing with x between samples.
inline double pv_sum(const LineSamples& b, const std::vector<double>& g, double x) {
  double acc = 0.0;
  for (size_t k = 0; k < g.size(); ++k) acc += g[k] / (x - b.position(k));
  return acc * b.spacing / kPi;
}

// Output line at the midpoints of the input samples.
inline LineSamples interleaved(const LineSamples& b) {
  LineSamples out;
  out.origin = b.origin + 0.5 * b.spacing;
  out.spacing = b.spacing;
  out.support = b.support;
  out.values.assign(b.size() - 1, 0.0);
  return out;
}

}  // namespace detail

/// Finite Hilbert transform restricted to the support, evaluated at the
/// midpoints of the input samples.
inline LineSamples forward_finite_hilbert(const LineSamples& f) {
  detail::check_line(f, "forward_finite_hilbert");
  std::vector<double> g(f.size());
  for (size_t k = 0; k < f.size(); ++k) g[k] = std::abs(f.position(k)) < f.support ? f.values[k] : 0.0;
  LineSamples out = detail::interleaved(f);
  for (size_t k = 0; k < out.size(); ++k) out.values[k] = detail::pv_sum(f, g, out.position(k));
  return out;
}

/// Finite-interval inverse with support L:
///   f(x) = -(1/(pi sqrt(L^2-x^2))) PV int sqrt(L^2-s^2) b(s)/(x-s) ds + C/(pi sqrt(L^2-x^2)),
/// where C is the integral of f over the support. Evaluated at the midpoints of
/// the input samples, zero outside the support.
inline LineSamples finite_hilbert_inverse(const LineSamples& b, double line_integral = 0.0) {
  detail::check_line(b, "finite_hilbert_inverse");
  const double L = b.support, L2 = L * L;
  // product weights of sqrt(L^2 - s^2) against the linear hat functions
  auto m0 = [&](double s) { return 0.5 * (s * std::sqrt(std::max(0.0, L2 - s * s)) + L2 * std::asin(std::clamp(s / L, -1.0, 1.0))); };
  auto m1 = [&](double s) { return -std::pow(std::max(0.0, L2 - s * s), 1.5) / 3.0; };
  std::vector<double> w(b.size(), 0.0);
  for (size_t k = 0; k + 1 < b.size(); ++k) {
    const double a = b.position(k), c = b.position(k + 1);
    const double lo = std::clamp(a, -L, L), hi = std::clamp(c, -L, L);
    if (!(hi > lo)) continue;
    const double M0 = m0(hi) - m0(lo), M1 = m1(hi) - m1(lo);
    w[k] += (c * M0 - M1) / b.spacing;
    w[k + 1] += (M1 - a * M0) / b.spacing;
  }
  // subtract b(x): (1/pi) PV int sqrt(L^2 - s^2) / (x - s) ds = x
  LineSamples out = detail::interleaved(b);
  for (size_t k = 0; k < out.size(); ++k) {
    const double x = out.position(k);
    if (!(std::abs(x) < L)) continue;
    const double bx = 0.5 * (b.values[k] + b.values[k + 1]);
    double regular = 0.0;
    for (size_t i = 0; i < b.size(); ++i)
      if (w[i] != 0.0) regular += w[i] * (b.values[i] - bx) / (x - b.position(i));
    out.values[k] = (-(regular / kPi + bx * x) + line_integral / kPi) / std::sqrt(L2 - x * x);
  }
  return out;
}

/// Inverse on the whole line, -H b, for b vanishing outside the sampled interval.
inline LineSamples full_line_hilbert_inverse(const LineSamples& b) {
  detail::check_line(b, "full_line_hilbert_inverse");
  LineSamples out = detail::interleaved(b);
  for (size_t k = 0; k < out.size(); ++k) out.values[k] = -detail::pv_sum(b, b.values, out.position(k));
  return out;
}

enum class HilbertMode { FullLine, Tricomi };

struct FovSpec {
  double radius = 0.0;  ///< FOV radius R, mm
  double margin = 0.1;  ///< Tricomi support margin as a fraction of R
  HilbertMode mode = HilbertMode::FullLine;
};

namespace detail {

inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) a -= 2.0 * kPi;
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// DBP values on a lattice whose columns run along the filtering lines.
inline DbpImage line_aligned(const DbpImage& dbp) {
  const double line_angle = dbp.eta - 0.5 * kPi;
  if (std::abs(wrap_angle(dbp.grid.angle - line_angle)) < 1e-12) return dbp;
  const SampleGrid& g = dbp.grid;
  const double half_x = 0.5 * (g.nx - 1) * g.spacing, half_y = 0.5 * (g.ny - 1) * g.spacing;
  const int n = 2 * static_cast<int>(std::ceil(std::hypot(half_x, half_y) / g.spacing)) + 1;
  DbpImage out{dbp.frame, SampleGrid{g.center, line_angle, g.spacing, n, n}, {}, dbp.eta};
  out.values.assign(out.grid.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out.values[static_cast<size_t>(j) * n + i] = g.sample(dbp.values, out.grid.position(i, j));
  return out;
}

}  // namespace detail

/// Partial image of one segment on the pixel lattice of `shape`.
inline ImageGrid invert_dbp(const DbpImage& dbp, const FovSpec& fov, const ImageGrid& shape) {
  if (fov.mode == HilbertMode::Tricomi && !(fov.radius > 0.0))
    throw std::invalid_argument("invert_dbp: FOV radius must be > 0");
  const DbpImage lines = detail::line_aligned(dbp);
  const SampleGrid& g = lines.grid;
  const double reach = 0.5 * std::hypot(shape.width, shape.height) * shape.pixel_size + 2.0 * g.spacing;
  SampleGrid mid = g;
  mid.nx = g.nx - 1;
  std::vector<double> partial(mid.size(), 0.0);

#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < g.ny; ++j) {
    const Point2 row_center = g.center + g.offset_y(j) * g.axis_y();
    if (norm(row_center) > reach) continue;
    LineSamples b;
    b.origin = g.offset_x(0);
    b.spacing = g.spacing;
    b.values.assign(lines.values.begin() + static_cast<std::ptrdiff_t>(j) * g.nx,
                    lines.values.begin() + static_cast<std::ptrdiff_t>(j + 1) * g.nx);
    double* out = partial.data() + static_cast<size_t>(j) * mid.nx;
    if (fov.mode == HilbertMode::FullLine) {
      b.support = -b.origin;
      for (int k = 0; k < mid.nx; ++k) {
        const double x = mid.offset_x(k);
        if (std::abs(x) > reach) continue;
        out[k] = -kDbpCalibration * detail::pv_sum(b, b.values, x);
      }
    } else {
      const double y = g.offset_y(j);
      b.support = std::sqrt(std::max(fov.radius * fov.radius - y * y, 0.0)) + fov.margin * fov.radius;
      if (b.support > -b.origin) b.support = -b.origin;
      const LineSamples f = finite_hilbert_inverse(b);
      for (int k = 0; k < mid.nx; ++k) out[k] = kDbpCalibration * f.values[static_cast<size_t>(k)];
    }
  }

  ImageGrid img(shape.width, shape.height, shape.pixel_size);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) img.at(r, c) = mid.sample(partial, img.center_of(r, c));
  return img;
}

/// Circular mask of pixels whose centre lies within radius R.
inline std::vector<unsigned char> fov_mask(const ImageGrid& shape, double radius) {
  std::vector<unsigned char> m(static_cast<size_t>(shape.width) * shape.height, 0);
  for (int r = 0; r < shape.height; ++r)
    for (int c = 0; c < shape.width; ++c)
      m[static_cast<size_t>(r) * shape.width + c] = norm(shape.center_of(r, c)) <= radius ? 1 : 0;
  return m;
}

struct Accumulated {
  ImageGrid image;
  std::vector<unsigned char> mask;
};

/// Pixelwise sum of the partial images in the given order.
inline Accumulated accumulate(const std::vector<ImageGrid>& partials, double fov_radius) {
  if (partials.empty()) throw std::invalid_argument("accumulate: no partial images");
  Accumulated out{ImageGrid(partials[0].width, partials[0].height, partials[0].pixel_size), {}};
  for (const auto& p : partials) {
    if (!p.same_shape(out.image)) throw std::invalid_argument("accumulate: partial image grids differ");
    for (size_t k = 0; k < p.data.size(); ++k) out.image.data[k] += p.data[k];
  }
  out.mask = fov_mask(out.image, fov_radius);
  return out;
}

enum class DbpVariant { Detector, Source };

/// Segment-aligned DBP lattice covering the FOV disk plus two samples.
inline SampleGrid bpf_lattice(const ScanConfig& cfg, const StctFrame& f, double spacing, double radius) {
  const double half_rows = radius + 2.0 * spacing;
  const double half_cols = std::max(dbp_support_half_length(cfg, -half_rows), dbp_support_half_length(cfg, half_rows)) +
                           2.0 * spacing;
  return frame_grid(f, spacing, half_cols, half_rows);
}

/// Full BPF reconstruction: preweight, differentiate, backproject, invert and sum.
inline ImageGrid reconstruct_bpf(const Sinogram& sino, const WeightMap& weights, const ImageGrid& shape,
                                 DbpVariant variant, const FovSpec& fov) {
  const ScanConfig& cfg = sino.cfg;
  const Sinogram q = preweight(sino, weights);
  const Sinogram g = variant == DbpVariant::Detector ? diff_along_detector(q) : diff_along_source(q);
  std::vector<ImageGrid> partials;
  partials.reserve(static_cast<size_t>(cfg.T));
  for (int n = 1; n <= cfg.T; ++n) {
    const StctFrame f = frame(cfg, n);
    const SampleGrid lattice = bpf_lattice(cfg, f, shape.pixel_size, fov.radius);
    const DbpImage dbp = variant == DbpVariant::Detector ? d_dbp(g, f, lattice) : s_dbp(g, f, lattice);
    partials.push_back(invert_dbp(dbp, fov, shape));
  }
  return accumulate(partials, fov.radius).image;
}

}  // namespace fmstct
