#pragma once
// Analytic ellipse phantoms, their rasterisation and exact line integrals.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmstct/errors.hpp"
#include "fmstct/geometry.hpp"

namespace fmstct {

struct Ellipse {
  double cx = 0.0, cy = 0.0;  // mm
  double a = 1.0, b = 1.0;    // semi-axes, mm
  double tilt = 0.0;          // radians, rotation of the a-axis from +x
  double density = 1.0;       // additive attenuation, 1/mm

  bool contains(Point2 p) const {
    const double c = std::cos(tilt), s = std::sin(tilt);
    const double dx = p.x - cx, dy = p.y - cy;
    const double u = (dx * c + dy * s) / a;
    const double v = (-dx * s + dy * c) / b;
    return u * u + v * v <= 1.0;
  }

  /// Half-extent of the axis-aligned bounding box.
  Point2 half_extent() const {
    const double c = std::cos(tilt), s = std::sin(tilt);
    return {std::hypot(a * c, b * s), std::hypot(a * s, b * c)};
  }
};

/// Densities of overlapping ellipses add up.
struct PhantomSpec {
  std::vector<Ellipse> ellipses;
  double half_size = 1.0;  ///< bounding square is [-half_size, half_size]^2

  void validate() const {
    if (!(half_size > 0.0)) throw std::invalid_argument("PhantomSpec: half_size must be > 0");
    for (const auto& e : ellipses) {
      if (!(e.a > 0.0) || !(e.b > 0.0)) throw std::invalid_argument("PhantomSpec: ellipse semi-axes must be > 0");
      const Point2 ext = e.half_extent();
      const double tol = 1e-9 * half_size;
      if (std::abs(e.cx) + ext.x > half_size + tol || std::abs(e.cy) + ext.y > half_size + tol)
        throw std::invalid_argument("PhantomSpec: ellipse leaves the bounding square");
    }
  }

  /// Uniformly scales geometry (not densities) so that half_size becomes `new_half_size`.
  PhantomSpec scaled_to(double new_half_size) const {
    const double k = new_half_size / half_size;
    PhantomSpec out{ellipses, new_half_size};
    for (auto& e : out.ellipses) {
      e.cx *= k;
      e.cy *= k;
      e.a *= k;
      e.b *= k;
    }
    return out;
  }

  double density_at(Point2 p) const {
    double v = 0.0;
    for (const auto& e : ellipses)
      if (e.contains(p)) v += e.density;
    return v;
  }
};

/// Square-pixel image centred on the rotation centre. Row 0 is the top (+y) row.
struct ImageGrid {
  int width = 0;
  int height = 0;
  double pixel_size = 1.0;
  std::vector<double> data;

  ImageGrid() = default;
  ImageGrid(int w, int h, double ps) : width(w), height(h), pixel_size(ps), data(static_cast<size_t>(w) * h, 0.0) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("ImageGrid: dimensions must be positive");
    if (!(ps > 0.0)) throw std::invalid_argument("ImageGrid: pixel size must be > 0");
  }

  double& at(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
  double at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }

  Point2 center_of(int row, int col) const {
    return {(col - 0.5 * (width - 1)) * pixel_size, (0.5 * (height - 1) - row) * pixel_size};
  }

  bool same_shape(const ImageGrid& o) const {
    return width == o.width && height == o.height && std::abs(pixel_size - o.pixel_size) <= 1e-12 * pixel_size;
  }

  /// Bilinear sample at a world point; zero outside the pixel-centre lattice.
  double sample(Point2 p) const {
    const double fc = p.x / pixel_size + 0.5 * (width - 1);
    const double fr = 0.5 * (height - 1) - p.y / pixel_size;
    const int c0 = static_cast<int>(std::floor(fc));
    const int r0 = static_cast<int>(std::floor(fr));
    if (c0 < 0 || r0 < 0 || c0 + 1 >= width || r0 + 1 >= height) {
      // allow exact hits on the last row/column
      if (c0 >= 0 && r0 >= 0 && c0 < width && r0 < height && fc == c0 && fr == r0) return at(r0, c0);
      return 0.0;
    }
    const double ac = fc - c0, ar = fr - r0;
    return (1 - ar) * ((1 - ac) * at(r0, c0) + ac * at(r0, c0 + 1)) +
           ar * ((1 - ac) * at(r0 + 1, c0) + ac * at(r0 + 1, c0 + 1));
  }
};

/// Each pixel gets the summed density at its centre, or the mean over a
/// supersample x supersample sub-lattice when supersample > 1.
inline ImageGrid rasterize(const PhantomSpec& spec, int width, int height, double pixel_size, int supersample = 1) {
  if (supersample < 1) throw std::invalid_argument("rasterize: supersample must be >= 1");
  ImageGrid img(width, height, pixel_size);
  const double sub = pixel_size / supersample;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const Point2 ctr = img.center_of(r, c);
      double acc = 0.0;
      for (int sr = 0; sr < supersample; ++sr)
        for (int sc = 0; sc < supersample; ++sc) {
          const Point2 p{ctr.x + (sc - 0.5 * (supersample - 1)) * sub, ctr.y - (sr - 0.5 * (supersample - 1)) * sub};
          acc += spec.density_at(p);
        }
      img.at(r, c) = acc / (supersample * supersample);
    }
  }
  return img;
}

/// Length of the part of segment [p0, p1] inside the ellipse.
inline double chord_length(const Ellipse& e, Point2 p0, Point2 p1) {
  const double c = std::cos(e.tilt), s = std::sin(e.tilt);
  auto norm_frame = [&](Point2 p) {
    const double dx = p.x - e.cx, dy = p.y - e.cy;
    return Point2{(dx * c + dy * s) / e.a, (-dx * s + dy * c) / e.b};
  };
  const Point2 q0 = norm_frame(p0);
  const Point2 d = norm_frame(p1) - q0;
  const double A = dot(d, d);
  if (A == 0.0) return 0.0;
  const double B = 2.0 * dot(q0, d);
  const double C = dot(q0, q0) - 1.0;
  const double disc = B * B - 4.0 * A * C;
  if (disc <= 0.0) return 0.0;
  const double sq = std::sqrt(disc);
  // numerically stable roots
  const double qq = -0.5 * (B + std::copysign(sq, B));
  double t1 = qq / A, t2 = (qq != 0.0) ? C / qq : -t1;
  if (t1 > t2) std::swap(t1, t2);
  t1 = std::max(t1, 0.0);
  t2 = std::min(t2, 1.0);
  if (t2 <= t1) return 0.0;
  return (t2 - t1) * norm(p1 - p0);
}

/// Line integral of the phantom along the segment from p0 to p1 (mm * density).
inline double line_integral(const PhantomSpec& spec, Point2 p0, Point2 p1) {
  double acc = 0.0;
  for (const auto& e : spec.ellipses) acc += e.density * chord_length(e, p0, p1);
  return acc;
}

// Phantom file: '#' comments, a "half_size <mm>" header line, then one ellipse
// per line as "cx cy a b tilt_deg density".
inline PhantomSpec parse_phantom(std::istream& in) {
  PhantomSpec spec;
  bool have_half = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "half_size") {
      if (!(ls >> spec.half_size)) throw ConfigError("half_size", "unparseable value on line " + std::to_string(lineno));
      have_half = true;
      continue;
    }
    Ellipse e;
    std::istringstream es(line);
    double tilt_deg = 0.0;
    if (!(es >> e.cx >> e.cy >> e.a >> e.b >> tilt_deg >> e.density))
      throw ConfigError("phantom", "malformed ellipse on line " + std::to_string(lineno));
    e.tilt = tilt_deg * kPi / 180.0;
    spec.ellipses.push_back(e);
  }
  if (!have_half) throw ConfigError("half_size", "missing header line");
  spec.validate();
  return spec;
}

inline PhantomSpec load_phantom(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("phantom", "cannot open " + path);
  return parse_phantom(in);
}

inline void write_phantom(std::ostream& out, const PhantomSpec& spec) {
  out.precision(17);
  out << "# cx cy a b tilt_deg density\n";
  out << "half_size " << spec.half_size << "\n";
  for (const auto& e : spec.ellipses)
    out << e.cx << ' ' << e.cy << ' ' << e.a << ' ' << e.b << ' ' << e.tilt * 180.0 / kPi << ' ' << e.density << "\n";
}

}  // namespace fmstct
