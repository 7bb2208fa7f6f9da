#pragma once
// Algorithm selection and area-averaged reconstruction onto an output grid.

#include <stdexcept>
#include <string>

#include "fmstct/errors.hpp"
#include "fmstct/fbp.hpp"
#include "fmstct/hilbert.hpp"
#include "fmstct/phantom.hpp"
#include "fmstct/projector.hpp"
#include "fmstct/redundancy.hpp"

namespace fmstct {

enum class Algorithm { FdBpf, FsBpf, FwFbp };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::FdBpf: return "fd-bpf";
    case Algorithm::FsBpf: return "fs-bpf";
    default: return "fw-fbp";
  }
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "fd-bpf") return Algorithm::FdBpf;
  if (s == "fs-bpf") return Algorithm::FsBpf;
  if (s == "fw-fbp") return Algorithm::FwFbp;
  throw ConfigError("algorithm", "unknown algorithm '" + s + "' (expected fd-bpf, fs-bpf or fw-fbp)");
}

/// Mean over k x k blocks.
inline ImageGrid box_downsample(const ImageGrid& fine, int k) {
  if (k < 1 || fine.width % k != 0 || fine.height % k != 0)
    throw std::invalid_argument("box_downsample: factor must divide the image dimensions");
  ImageGrid out(fine.width / k, fine.height / k, fine.pixel_size * k);
  const double inv = 1.0 / (k * k);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) acc += fine.at(r * k + i, c * k + j);
      out.at(r, c) = acc * inv;
    }
  return out;
}

struct ReconOptions {
  Algorithm algorithm = Algorithm::FsBpf;
  int oversample = 2;  ///< reconstruct on a k-times finer lattice, then average k x k blocks
  HilbertMode hilbert = HilbertMode::FullLine;
};

/// Reconstruction on the lattice of `shape`; each output pixel is the mean of
/// oversample^2 point reconstructions inside it.
inline ImageGrid reconstruct(const Sinogram& sino, const WeightMap& weights, const ImageGrid& shape,
                             const ReconOptions& opt) {
  if (opt.oversample < 1) throw std::invalid_argument("reconstruct: oversample must be >= 1");
  const double R = fov_radius(sino.cfg);
  const int k = opt.oversample;
  const ImageGrid fine(shape.width * k, shape.height * k, shape.pixel_size / k);
  ImageGrid img;
  switch (opt.algorithm) {
    case Algorithm::FdBpf:
      img = reconstruct_bpf(sino, weights, fine, DbpVariant::Detector, FovSpec{R, 0.1, opt.hilbert});
      break;
    case Algorithm::FsBpf:
      img = reconstruct_bpf(sino, weights, fine, DbpVariant::Source, FovSpec{R, 0.1, opt.hilbert});
      break;
    case Algorithm::FwFbp:
      img = fw_fbp(sino, weights, fine, R + shape.pixel_size);
      break;
  }
  return box_downsample(img, k);
}

}  // namespace fmstct
