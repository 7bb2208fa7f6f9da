#pragma once
// Image quality statistics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fmstct/geometry.hpp"
#include "fmstct/phantom.hpp"

namespace fmstct {

namespace detail {

inline void check_pair(const ImageGrid& a, const ImageGrid& b, const char* who) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument(std::string(who) + ": image dimensions differ");
}

}  // namespace detail

/// 10 log10(peak^2 / MSE) over the mask (all pixels when empty), peak = max of
/// truth over the same pixels. Returns +infinity when MSE is 0.
inline double psnr(const ImageGrid& recon, const ImageGrid& truth, const std::vector<unsigned char>& mask = {}) {
  detail::check_pair(recon, truth, "psnr");
  if (!mask.empty() && mask.size() != truth.data.size()) throw std::invalid_argument("psnr: mask size differs from image");
  double se = 0.0, peak = -std::numeric_limits<double>::infinity();
  size_t count = 0;
  for (size_t k = 0; k < truth.data.size(); ++k) {
    if (!mask.empty() && !mask[k]) continue;
    const double e = recon.data[k] - truth.data[k];
    se += e * e;
    peak = std::max(peak, truth.data[k]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("psnr: empty mask");
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / (se / static_cast<double>(count)));
}

/// Mean SSIM over all 8x8 windows (stride 1) with uniform weights; the dynamic
/// range is that of the truth image.
inline double ssim(const ImageGrid& recon, const ImageGrid& truth) {
  detail::check_pair(recon, truth, "ssim");
  constexpr int w = 8;
  if (truth.width < w || truth.height < w) throw std::invalid_argument("ssim: image smaller than the 8x8 window");
  double lo = truth.data[0], hi = truth.data[0];
  for (double v : truth.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi > lo ? hi - lo : 1.0;
  const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
  const int nr = truth.height - w + 1, nc = truth.width - w + 1;
  std::vector<double> rows(static_cast<size_t>(nr));
#pragma omp parallel for schedule(static)
  for (int r = 0; r < nr; ++r) {
    double row_sum = 0.0;
    for (int c = 0; c < nc; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
          const double x = recon.at(r + i, c + j), y = truth.at(r + i, c + j);
          sx += x;
          sy += y;
          sxx += x * x;
          syy += y * y;
          sxy += x * y;
        }
      const double n = w * w;
      const double mx = sx / n, my = sy / n;
      const double vx = sxx / n - mx * mx, vy = syy / n - my * my, cxy = sxy / n - mx * my;
      row_sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    rows[static_cast<size_t>(r)] = row_sum;
  }
  double total = 0.0;
  for (double v : rows) total += v;
  return total / (static_cast<double>(nr) * nc);
}

/// (column, value) pairs of one image row over [col0, col1].
inline std::vector<std::pair<int, double>> profile(const ImageGrid& img, int row, int col0, int col1) {
  if (row < 0 || row >= img.height || col0 < 0 || col1 >= img.width || col0 > col1)
    throw std::out_of_range("profile: row or column range outside the image");
  std::vector<std::pair<int, double>> out;
  for (int c = col0; c <= col1; ++c) out.emplace_back(c, img.at(row, c));
  return out;
}

inline void write_profile_csv(std::ostream& os, const std::vector<std::pair<int, double>>& series) {
  os.precision(9);
  os << "col,value\n";
  for (const auto& [c, v] : series) os << c << ',' << v << '\n';
}

/// RMS error over pixels whose centre radius lies in [(1-band) R, R].
inline double edge_annulus_error(const ImageGrid& recon, const ImageGrid& truth, double radius, double band = 0.1) {
  detail::check_pair(recon, truth, "edge_annulus_error");
  if (!(band > 0.0 && band < 0.5)) throw std::invalid_argument("edge_annulus_error: band must lie in (0, 0.5)");
  double se = 0.0;
  size_t count = 0;
  for (int r = 0; r < truth.height; ++r)
    for (int c = 0; c < truth.width; ++c) {
      const double rho = norm(truth.center_of(r, c));
      if (rho < (1.0 - band) * radius || rho > radius) continue;
      const double e = recon.at(r, c) - truth.at(r, c);
      se += e * e;
      ++count;
    }
  if (count == 0) throw std::invalid_argument("edge_annulus_error: annulus contains no pixel centres");
  return std::sqrt(se / static_cast<double>(count));
}

}  // namespace fmstct
