#pragma once
// Flat key = value configs, self-describing float32 containers and 16-bit PGM quicklooks.
//
// Container layout: ASCII header lines "key = value", the first being
// "magic = FMSTCT1", terminated by an empty line, followed by the payload as
// float32 little-endian, row-major, last dimension fastest.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <stdexcept>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fmstct/errors.hpp"
#include "fmstct/phantom.hpp"

namespace fmstct {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment. Keys must be unique.
inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value' on line " + std::to_string(lineno));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "empty key on line " + std::to_string(lineno));
    if (!kv.emplace(key, value).second) throw ConfigError(key, "duplicate key on line " + std::to_string(lineno));
  }
  return kv;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  return parse_key_values(in);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (detail::trim(v.substr(used)).empty() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a finite number, got '" + v + "'");
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long i = std::stol(v, &used);
    if (detail::trim(v.substr(used)).empty() && i >= INT32_MIN && i <= INT32_MAX) return static_cast<int>(i);
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected an integer, got '" + v + "'");
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

/// "lo:hi" with lo < hi.
inline std::pair<double, double> parse_window(const std::string& key, const std::string& v) {
  const auto colon = v.find(':');
  if (colon == std::string::npos) throw ConfigError(key, "expected lo:hi, got '" + v + "'");
  const double lo = parse_double(key, v.substr(0, colon));
  const double hi = parse_double(key, v.substr(colon + 1));
  if (!(hi > lo)) throw ConfigError(key, "window upper bound must exceed the lower bound");
  return {lo, hi};
}

struct Container {
  std::string kind;
  std::vector<int> dims;
  KeyValues header;  ///< every header line, including magic, kind and dims
  std::vector<float> data;
};

inline void write_container(const std::string& path, const std::string& kind, const std::vector<int>& dims,
                            const std::string& order, const KeyValues& extra, const std::vector<double>& values) {
  size_t count = 1;
  for (int d : dims) count *= static_cast<size_t>(d);
  if (count != values.size()) throw std::invalid_argument("write_container: dims do not match the value count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "magic = FMSTCT1\n";
  out << "kind = " << kind << "\n";
  out << "dtype = float32-le\n";
  out << "dims =";
  for (int d : dims) out << ' ' << d;
  out << "\norder = " << order << "\n";
  for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
  out << "\n";
  std::vector<char> buf(values.size() * 4);
  for (size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("input", "cannot open " + path);
  Container c;
  std::string line;
  while (std::getline(in, line) && !line.empty()) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("input", "malformed container header in " + path);
    c.header[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  if (c.header["magic"] != "FMSTCT1") throw ConfigError("input", path + " is not an FMSTCT1 container");
  c.kind = c.header["kind"];
  std::istringstream ds(c.header["dims"]);
  size_t count = 1;
  for (int d; ds >> d;) {
    c.dims.push_back(d);
    count *= static_cast<size_t>(d);
  }
  std::vector<char> buf(count * 4);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ConfigError("input", "truncated payload in " + path);
  c.data.resize(count);
  for (size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i * 4 + b])) << (8 * b);
    c.data[i] = std::bit_cast<float>(bits);
  }
  return c;
}

inline void write_image(const std::string& path, const std::string& kind, const ImageGrid& img, const KeyValues& extra) {
  KeyValues kv = extra;
  std::ostringstream ps;
  ps.precision(17);
  ps << img.pixel_size;
  kv["pixel_size_mm"] = ps.str();
  write_container(path, kind, {img.height, img.width}, "row,col (row 0 at +y)", kv, img.data);
}

inline ImageGrid read_image(const std::string& path) {
  const Container c = read_container(path);
  if (c.dims.size() != 2) throw ConfigError("input", path + " does not hold a 2-D image");
  const auto it = c.header.find("pixel_size_mm");
  if (it == c.header.end()) throw ConfigError("input", path + " lacks pixel_size_mm");
  ImageGrid img(c.dims[1], c.dims[0], parse_double("pixel_size_mm", it->second));
  std::copy(c.data.begin(), c.data.end(), img.data.begin());
  return img;
}

/// Binary 16-bit PGM (big-endian samples), values mapped linearly from [lo, hi].
inline void write_pgm16(const std::string& path, const ImageGrid& img, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("write_pgm16: window upper bound must exceed the lower bound");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  std::vector<char> buf(img.data.size() * 2);
  for (size_t i = 0; i < img.data.size(); ++i) {
    const double t = std::clamp((img.data[i] - lo) / (hi - lo), 0.0, 1.0);
    const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    buf[2 * i] = static_cast<char>(v >> 8);
    buf[2 * i + 1] = static_cast<char>(v & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace fmstct
