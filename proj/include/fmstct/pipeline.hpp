#pragma once
// Experiment configuration and the phantom -> project -> weights -> recon -> metrics driver.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "fmstct/errors.hpp"
#include "fmstct/geometry.hpp"
#include "fmstct/io.hpp"
#include "fmstct/metrics.hpp"
#include "fmstct/phantom.hpp"
#include "fmstct/projector.hpp"
#include "fmstct/recon.hpp"
#include "fmstct/redundancy.hpp"

namespace fmstct {

struct ExperimentConfig {
  double l = 13.75;
  double h = 106.5;
  double translation_length = 40.0;  ///< 2 lambda_m
  int N = 251;
  int J = 1024;
  double pixel_pitch = 0.127;
  std::string phantom;  ///< phantom file; relative paths resolve against the config's directory
  int grid = 256;
  Algorithm algorithm = Algorithm::FsBpf;
  double phi_deg = 135.0;
  std::string output_dir = "out";
  unsigned seed = 1;
  int oversample = 2;
  int truth_supersample = 4;
  bool save_partials = false;
  double window_lo = 0.0, window_hi = 3.0;
  KeyValues echo;  ///< the parsed key/value pairs, written into every output header

  ScanConfig scan() const {
    try {
      return ScanConfig::make(l, h, 0.5 * translation_length, N, J, pixel_pitch);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("scan", e.what());
    }
  }
};

inline const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys{"l", "h", "translation_length", "N", "J", "pixel_pitch", "phantom", "grid",
                                          "algorithm", "phi_deg", "output_dir", "seed", "oversample",
                                          "truth_supersample", "save_partials", "window"};
  return keys;
}

/// Builds a config from parsed pairs. `base_dir` resolves a relative phantom path.
inline ExperimentConfig experiment_from(const KeyValues& kv, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  for (const auto& [k, v] : kv)
    if (!experiment_keys().count(k)) throw ConfigError(k, "unknown configuration key");
  auto get = [&](const char* k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("l")) c.l = parse_double("l", *v);
  if (auto v = get("h")) c.h = parse_double("h", *v);
  if (auto v = get("translation_length")) c.translation_length = parse_double("translation_length", *v);
  if (auto v = get("N")) c.N = parse_int("N", *v);
  if (auto v = get("J")) c.J = parse_int("J", *v);
  if (auto v = get("pixel_pitch")) c.pixel_pitch = parse_double("pixel_pitch", *v);
  if (auto v = get("grid")) c.grid = parse_int("grid", *v);
  if (auto v = get("algorithm")) c.algorithm = parse_algorithm(*v);
  if (auto v = get("phi_deg")) c.phi_deg = parse_double("phi_deg", *v);
  if (auto v = get("output_dir")) c.output_dir = *v;
  if (auto v = get("seed")) c.seed = static_cast<unsigned>(parse_int("seed", *v));
  if (auto v = get("oversample")) c.oversample = parse_int("oversample", *v);
  if (auto v = get("truth_supersample")) c.truth_supersample = parse_int("truth_supersample", *v);
  if (auto v = get("save_partials")) c.save_partials = parse_bool("save_partials", *v);
  if (auto v = get("window")) std::tie(c.window_lo, c.window_hi) = parse_window("window", *v);
  const std::string* ph = get("phantom");
  if (!ph || ph->empty()) throw ConfigError("phantom", "missing phantom file");
  std::filesystem::path p(*ph);
  c.phantom = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  if (c.grid < 8) throw ConfigError("grid", "grid must be at least 8");
  if (c.oversample < 1) throw ConfigError("oversample", "must be >= 1");
  if (c.truth_supersample < 1) throw ConfigError("truth_supersample", "must be >= 1");
  if (!(c.phi_deg > 90.0 && c.phi_deg < 180.0)) throw ConfigError("phi_deg", "W-Line angle must lie in (90, 180) degrees");
  c.echo = kv;
  c.scan();
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from(load_key_values(path), std::filesystem::path(path).parent_path());
}

struct Geometry {
  double fov_radius, standard_fov_radius, magnification, delta_theta_deg, delta_theta_raw_deg;
  int T;
};

inline Geometry derived_geometry(const ScanConfig& s) {
  const Segmentation seg = segmentation(s.h, s.u_m);
  const double R = fov_radius(s), r = standard_fov_radius(s);
  return {R, r, R / r, s.delta_theta * 180.0 / kPi, seg.delta_theta_raw * 180.0 / kPi, s.T};
}

inline void print_geometry(std::ostream& os, const ScanConfig& s) {
  const Geometry g = derived_geometry(s);
  os.precision(6);
  os << "fov_radius_mm = " << g.fov_radius << "\n"
     << "standard_fov_radius_mm = " << g.standard_fov_radius << "\n"
     << "fov_magnification = " << g.magnification << "\n"
     << "T = " << g.T << "\n"
     << "delta_theta_deg = " << g.delta_theta_deg << "\n"
     << "delta_theta_raw_deg = " << g.delta_theta_raw_deg << "\n";
}

/// Header entries shared by every output of one experiment.
inline KeyValues provenance(const ExperimentConfig& c) {
  KeyValues kv;
  for (const auto& [k, v] : c.echo) kv["config." + k] = v;
  return kv;
}

/// Phantom scaled so that its bounding half-size equals the FOV radius.
inline PhantomSpec experiment_phantom(const ExperimentConfig& c, const ScanConfig& s) {
  return load_phantom(c.phantom).scaled_to(fov_radius(s));
}

inline ImageGrid output_grid(const ExperimentConfig& c, const ScanConfig& s) {
  const double R = fov_radius(s);
  return ImageGrid(c.grid, c.grid, 2.0 * R / c.grid);
}

struct Report {
  double psnr = 0.0, ssim = 0.0, edge_rms = 0.0, max_in_fov = 0.0, phantom_max = 0.0;
  Geometry geometry{};
};

inline Report evaluate(const ImageGrid& recon, const ImageGrid& truth, const ScanConfig& s) {
  Report r;
  r.geometry = derived_geometry(s);
  const auto mask = fov_mask(truth, r.geometry.fov_radius);
  r.psnr = psnr(recon, truth, mask);
  r.ssim = ssim(recon, truth);
  r.edge_rms = edge_annulus_error(recon, truth, r.geometry.fov_radius);
  r.max_in_fov = -std::numeric_limits<double>::infinity();
  r.phantom_max = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) {
      r.max_in_fov = std::max(r.max_in_fov, recon.data[k]);
      r.phantom_max = std::max(r.phantom_max, truth.data[k]);
    }
  return r;
}

inline void write_report(std::ostream& os, const Report& r, Algorithm a) {
  os.precision(9);
  os << "algorithm = " << to_string(a) << "\n"
     << "fov_radius_mm = " << r.geometry.fov_radius << "\n"
     << "standard_fov_radius_mm = " << r.geometry.standard_fov_radius << "\n"
     << "fov_magnification = " << r.geometry.magnification << "\n"
     << "T = " << r.geometry.T << "\n"
     << "psnr_db = " << r.psnr << "\n"
     << "ssim = " << r.ssim << "\n"
     << "edge_annulus_rms = " << r.edge_rms << "\n"
     << "max_in_fov = " << r.max_in_fov << "\n"
     << "phantom_max = " << r.phantom_max << "\n";
}

/// Runs the full experiment and writes every artifact into c.output_dir.
inline Report run_pipeline(const ExperimentConfig& c) {
  namespace fs = std::filesystem;
  const ScanConfig s = c.scan();
  const PhantomSpec phantom = experiment_phantom(c, s);
  fs::create_directories(c.output_dir);
  const fs::path out(c.output_dir);
  const KeyValues prov = provenance(c);
  const std::string sino_order = "segment,source,detector";

  const ImageGrid shape = output_grid(c, s);
  const ImageGrid truth = rasterize(phantom, shape.width, shape.height, shape.pixel_size, c.truth_supersample);
  write_image((out / "truth.fmc").string(), "image", truth, prov);

  const Sinogram sino = forward_project(phantom, s);
  write_container((out / "sinogram.fmc").string(), "sinogram", {s.T, s.N, s.J}, sino_order, prov, sino.data);

  const WeightMap wm = build_weight_map(s, c.phi_deg * kPi / 180.0);
  write_container((out / "weights.fmc").string(), "weights", {s.T, s.N, s.J}, sino_order, prov, wm.weights.data);

  if (c.save_partials && c.algorithm != Algorithm::FwFbp) {
    const Sinogram q = preweight(sino, wm);
    const bool detector = c.algorithm == Algorithm::FdBpf;
    const Sinogram g = detector ? diff_along_detector(q) : diff_along_source(q);
    const FovSpec fov{fov_radius(s)};
    for (int n = 1; n <= s.T; ++n) {
      const StctFrame f = frame(s, n);
      const SampleGrid lattice = bpf_lattice(s, f, shape.pixel_size, fov.radius);
      const DbpImage dbp = detector ? d_dbp(g, f, lattice) : s_dbp(g, f, lattice);
      KeyValues kv = prov;
      std::ostringstream ss;
      ss.precision(17);
      ss << dbp.eta;
      kv["eta_rad"] = ss.str();
      ss.str("");
      ss << lattice.angle;
      kv["lattice_angle_rad"] = ss.str();
      ss.str("");
      ss << lattice.spacing;
      kv["lattice_spacing_mm"] = ss.str();
      write_container((out / ("dbp_" + std::to_string(n) + ".fmc")).string(), "dbp", {lattice.ny, lattice.nx},
                      "line,position", kv, dbp.values);
      write_image((out / ("partial_" + std::to_string(n) + ".fmc")).string(), "partial", invert_dbp(dbp, fov, shape), prov);
    }
  }

  const ImageGrid recon = reconstruct(sino, wm, shape, ReconOptions{c.algorithm, c.oversample});
  write_image((out / "recon.fmc").string(), "image", recon, prov);
  write_pgm16((out / "recon.pgm").string(), recon, c.window_lo, c.window_hi);
  write_pgm16((out / "truth.pgm").string(), truth, c.window_lo, c.window_hi);

  const int mid = shape.height / 2;
  const int last = std::min(100, shape.width - 1);
  {
    std::ofstream pr(out / "profile_recon.csv");
    write_profile_csv(pr, profile(recon, mid, 0, last));
    std::ofstream pt(out / "profile_truth.csv");
    write_profile_csv(pt, profile(truth, mid, 0, last));
  }

  const Report rep = evaluate(recon, truth, s);
  std::ofstream m(out / "metrics.txt");
  for (const auto& [k, v] : prov) m << "# " << k << " = " << v << "\n";
  write_report(m, rep, c.algorithm);
  return rep;
}

}  // namespace fmstct
