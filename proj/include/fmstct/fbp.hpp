#pragma once
// Full-scan weighted FBP baseline: weight, ramp-filter along u, fan backprojection.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmstct/dbp.hpp"
#include "fmstct/geometry.hpp"
#include "fmstct/phantom.hpp"
#include "fmstct/projector.hpp"
#include "fmstct/redundancy.hpp"

namespace fmstct {

/// Band-limited ramp taps h(k), k = -(n-1)..(n-1), stored at index k + n - 1.
inline std::vector<double> ramp_kernel(int n, double spacing) {
  if (n < 1 || !(spacing > 0.0)) throw std::invalid_argument("ramp_kernel: need n >= 1 and spacing > 0");
  std::vector<double> h(static_cast<size_t>(2 * n - 1), 0.0);
  h[static_cast<size_t>(n - 1)] = 1.0 / (4.0 * spacing * spacing);
  for (int k = 1; k < n; k += 2) {
    const double v = -1.0 / (kPi * kPi * k * k * spacing * spacing);
    h[static_cast<size_t>(n - 1 + k)] = v;
    h[static_cast<size_t>(n - 1 - k)] = v;
  }
  return h;
}

/// Linear (zero-padded) convolution of the row with the ramp kernel, scaled by
/// the spacing so the result approximates the continuous convolution integral.
inline std::vector<double> ramp_filter(const std::vector<double>& row, double spacing) {
  const int n = static_cast<int>(row.size());
  if (n < 8) throw std::invalid_argument("ramp_filter: need at least 8 samples");
  const std::vector<double> h = ramp_kernel(n, spacing);
  std::vector<double> out(row.size(), 0.0);
  for (int j = 0; j < n; ++j) {
    double acc = h[static_cast<size_t>(n - 1)] * row[static_cast<size_t>(j)];
    for (int k = 1; k < n; k += 2) {
      const double hk = h[static_cast<size_t>(n - 1 + k)];
      if (j - k >= 0) acc += hk * row[static_cast<size_t>(j - k)];
      if (j + k < n) acc += hk * row[static_cast<size_t>(j + k)];
    }
    out[static_cast<size_t>(j)] = acc * spacing;
  }
  return out;
}

namespace detail {

// Ramp-filtered detector row known on an extended lattice u_k, k = -pad..J-1+pad,
// and through a moment expansion of the -1/(2 pi^2 x^2) tail further out.
struct FilteredRow {
  static constexpr int kMoments = 48;
  std::vector<double> values;
  std::array<double, kMoments> moments{};
  int pad = 0;
  double u0 = 0.0, pitch = 1.0, center = 0.0, scale = 1.0;

  double operator()(double u) const {
    const double fk = (u - u0) / pitch + pad;
    const int last = static_cast<int>(values.size()) - 1;
    if (fk >= 0.0 && fk <= last) {
      int k0 = static_cast<int>(fk);
      if (k0 == last) k0 = last - 1;
      const double a = fk - k0;
      return (1.0 - a) * values[static_cast<size_t>(k0)] + a * values[static_cast<size_t>(k0 + 1)];
    }
    const double z = u - center, r = scale / z;
    double acc = 0.0, rp = 1.0;
    for (int m = 0; m < kMoments; ++m) {
      acc += (m + 1) * moments[static_cast<size_t>(m)] * rp;
      rp *= r;
    }
    return -acc / (2.0 * kPi * kPi * z * z);
  }
};

inline FilteredRow filter_row_extended(const double* q, int J, double pitch, double u0) {
  FilteredRow f;
  f.pad = J;
  f.u0 = u0;
  f.pitch = pitch;
  f.center = u0 + 0.5 * (J - 1) * pitch;
  f.scale = 0.5 * (J - 1) * pitch;
  f.values.assign(static_cast<size_t>(J + 2 * f.pad), 0.0);
  const double c0 = 1.0 / (4.0 * pitch * pitch), codd = -1.0 / (kPi * kPi * pitch * pitch);
  for (int k = -f.pad; k < J + f.pad; ++k) {
    double acc = (k >= 0 && k < J) ? c0 * q[k] : 0.0;
    int j = ((k - 1) % 2 + 2) % 2;  // first j with k - j odd
    for (; j < J; j += 2) {
      const double lag = k - j;
      acc += codd / (lag * lag) * q[j];
    }
    f.values[static_cast<size_t>(k + f.pad)] = acc * pitch;
  }
  for (int j = 0; j < J; ++j) {
    const double x = (u0 + j * pitch - f.center) / f.scale;
    double xp = q[j] * pitch;
    for (int m = 0; m < FilteredRow::kMoments; ++m) {
      f.moments[static_cast<size_t>(m)] += xp;
      xp *= x;
    }
  }
  return f;
}

}  // namespace detail

/// FW-FBP reconstruction on the pixel lattice of `shape`, restricted to pixels
/// within `radius` of the centre (others are left 0). A reconstructed pixel at
/// or behind a source line raises GeometryError.
inline ImageGrid fw_fbp(const Sinogram& sino, const WeightMap& weights, const ImageGrid& shape, double radius) {
  const ScanConfig& c = sino.cfg;
  if (c.J < 8) throw std::invalid_argument("fw_fbp: need at least 8 detector elements");
  const Sinogram q = preweight(sino, weights);
  std::vector<detail::FilteredRow> rows(static_cast<size_t>(c.T) * c.N);
#pragma omp parallel for schedule(static)
  for (int row = 0; row < c.T * c.N; ++row)
    rows[static_cast<size_t>(row)] = detail::filter_row_extended(q.row(row / c.N, row % c.N), c.J, c.pixel_pitch, c.u_at(0));

  ImageGrid img(shape.width, shape.height, shape.pixel_size);
  const double D = c.l + c.h;
  const double dl = c.source_spacing();
  for (int n = 1; n <= c.T; ++n) {
    const StctFrame f = frame(c, n);
    for (int r = 0; r < img.height; ++r)
      for (int col = 0; col < img.width; ++col)
        if (norm(img.center_of(r, col)) <= radius && !(to_local(f, img.center_of(r, col)).y + c.l > 0.0))
          throw GeometryError("fw_fbp: grid point at or behind the source line (L <= 0)");
  }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < img.height; ++r) {
    for (int col = 0; col < img.width; ++col) {
      const Point2 x = img.center_of(r, col);
      if (norm(x) > radius) continue;
      double total = 0.0;
      for (int n = 1; n <= c.T; ++n) {
        const Point2 loc = to_local(frame(c, n), x);
        const double L = loc.y + c.l;
        const double scale = D / L;
        double acc = 0.0;
        for (int s = 0; s < c.N; ++s) {
          const double lambda = c.lambda_at(s);
          const double v = rows[static_cast<size_t>(n - 1) * c.N + s](lambda + (loc.x - lambda) * scale);
          acc += (s == 0 || s == c.N - 1) ? 0.5 * v : v;
        }
        total += acc * dl / (L * L);
      }
      img.at(r, col) = 0.5 * total;
    }
  }
  return img;
}

}  // namespace fmstct
