#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sci/data_cube.hpp"
#include "sci/errors.hpp"

// SCIT tensor container, little-endian:
//   magic "SCIT" | u32 version=1 | u32 n1 | u32 n2 | u32 B | u8 dtype | payload
// dtype 0 = f32, 1 = u8.  Payload is in flattening order (column-major per
// frame, frames consecutive).  Also: binary PGM (P5, maxval 255) input and a
// key=value sidecar used for mask metadata.

namespace sci {

enum class ScitDtype : std::uint8_t { f32 = 0, u8 = 1 };

struct ScitData {
  std::uint32_t n1 = 0, n2 = 0, frames = 0;
  ScitDtype dtype = ScitDtype::f32;
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw io_error("SCIT: truncated header reading " + what);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void check_dims(std::uint64_t n1, std::uint64_t n2, std::uint64_t B) {
  if (n1 == 0 || n2 == 0 || B == 0)
    throw io_error("SCIT: zero dimension in header");
  if (n1 * n2 * B > (1ull << 28))
    throw io_error("SCIT: tensor too large");
}

inline void write_header(std::ostream& os, std::uint32_t n1, std::uint32_t n2,
                         std::uint32_t B, ScitDtype dt) {
  os.write("SCIT", 4);
  put_u32(os, 1u);
  put_u32(os, n1);
  put_u32(os, n2);
  put_u32(os, B);
  char d = static_cast<char>(dt);
  os.write(&d, 1);
}

}  // namespace detail

inline void save_scit_f32(const std::string& path, std::uint32_t n1,
                          std::uint32_t n2, std::uint32_t B,
                          const std::vector<float>& payload) {
  detail::check_dims(n1, n2, B);
  if (payload.size() != static_cast<std::size_t>(n1) * n2 * B)
    throw std::invalid_argument("save_scit_f32: payload size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for writing: " + path);
  detail::write_header(os, n1, n2, B, ScitDtype::f32);
  for (float v : payload) detail::put_u32(os, std::bit_cast<std::uint32_t>(v));
  if (!os) throw io_error("write failed: " + path);
}

inline void save_scit_u8(const std::string& path, std::uint32_t n1,
                         std::uint32_t n2, std::uint32_t B,
                         const std::vector<std::uint8_t>& payload) {
  detail::check_dims(n1, n2, B);
  if (payload.size() != static_cast<std::size_t>(n1) * n2 * B)
    throw std::invalid_argument("save_scit_u8: payload size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for writing: " + path);
  detail::write_header(os, n1, n2, B, ScitDtype::u8);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
  if (!os) throw io_error("write failed: " + path);
}

inline ScitData load_scit(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "SCIT")
    throw io_error("SCIT: bad magic in " + path);
  std::uint32_t version = detail::get_u32(is, "version");
  if (version != 1u)
    throw io_error("SCIT: unsupported version " + std::to_string(version));
  ScitData d;
  d.n1 = detail::get_u32(is, "n1");
  d.n2 = detail::get_u32(is, "n2");
  d.frames = detail::get_u32(is, "B");
  detail::check_dims(d.n1, d.n2, d.frames);
  char dt;
  if (!is.read(&dt, 1)) throw io_error("SCIT: truncated header (dtype)");
  if (dt != 0 && dt != 1)
    throw io_error("SCIT: unknown dtype " + std::to_string(int(dt)));
  d.dtype = static_cast<ScitDtype>(dt);
  std::size_t count = static_cast<std::size_t>(d.n1) * d.n2 * d.frames;
  if (d.dtype == ScitDtype::f32) {
    d.f32.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      unsigned char b[4];
      if (!is.read(reinterpret_cast<char*>(b), 4))
        throw io_error("SCIT: truncated payload in " + path);
      std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                        (static_cast<std::uint32_t>(b[1]) << 8) |
                        (static_cast<std::uint32_t>(b[2]) << 16) |
                        (static_cast<std::uint32_t>(b[3]) << 24);
      d.f32[i] = std::bit_cast<float>(u);
    }
  } else {
    d.u8.resize(count);
    if (!is.read(reinterpret_cast<char*>(d.u8.data()),
                 static_cast<std::streamsize>(count)))
      throw io_error("SCIT: truncated payload in " + path);
  }
  // trailing bytes mean the file does not match its header
  char extra;
  if (is.read(&extra, 1)) throw io_error("SCIT: trailing bytes in " + path);
  return d;
}

// Cube -> f32 file.  Values are rounded to float; when rounding pushes a
// value a fraction of an ulp past rho/2 it is nudged back so that the stored
// payload still satisfies the amplitude invariant on reload.
inline void save_cube(const std::string& path, const DataCube& cube) {
  double half = cube.rho() / 2.0;
  std::vector<float> payload(cube.size());
  for (std::size_t i = 0; i < cube.size(); ++i) {
    float f = static_cast<float>(cube.values()[i]);
    while (std::fabs(static_cast<double>(f)) > half)
      f = std::nextafterf(f, 0.0f);
    payload[i] = f;
  }
  save_scit_f32(path, cube.n1(), cube.n2(), cube.frames(), payload);
}

// rho <= 0 requests auto-ranging: rho = 2 * max |value| (1.0 for all-zero).
inline DataCube load_cube(const std::string& path, double rho = 0.0) {
  ScitData d = load_scit(path);
  if (d.dtype != ScitDtype::f32)
    throw io_error("load_cube: expected f32 payload in " + path);
  std::vector<double> vals(d.f32.begin(), d.f32.end());
  if (!(rho > 0.0)) {
    double m = 0.0;
    for (double v : vals) m = std::max(m, std::fabs(v));
    rho = m > 0.0 ? 2.0 * m : 1.0;
  }
  double half = rho / 2.0;
  for (double v : vals)
    if (!(std::fabs(v) <= half))
      throw io_error("load_cube: amplitude exceeds rho/2 in " + path);
  return DataCube(static_cast<int>(d.n1), static_cast<int>(d.n2),
                  static_cast<int>(d.frames), rho, std::move(vals));
}

inline void save_frame(const std::string& path, const FrameImage& frame) {
  std::vector<float> payload(frame.values.begin(), frame.values.end());
  save_scit_f32(path, frame.n1, frame.n2, 1u, payload);
}

inline FrameImage load_frame(const std::string& path) {
  ScitData d = load_scit(path);
  if (d.dtype != ScitDtype::f32)
    throw io_error("load_frame: expected f32 payload in " + path);
  if (d.frames != 1u)
    throw io_error("load_frame: expected B=1, got B=" +
                   std::to_string(d.frames));
  FrameImage f;
  f.n1 = static_cast<int>(d.n1);
  f.n2 = static_cast<int>(d.n2);
  f.values.assign(d.f32.begin(), d.f32.end());
  return f;
}

// --- key=value sidecar ------------------------------------------------------

inline std::string meta_path_for(const std::string& scit_path) {
  auto slash = scit_path.find_last_of("/\\");
  auto dot = scit_path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return scit_path + ".meta";
  return scit_path.substr(0, dot) + ".meta";
}

inline void save_meta(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>&
                          entries) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for writing: " + path);
  for (const auto& [k, v] : entries) os << k << "=" << v << "\n";
  if (!os) throw io_error("write failed: " + path);
}

inline std::map<std::string, std::string> load_meta(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open: " + path);
  std::map<std::string, std::string> m;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io_error("meta: malformed line '" + line + "' in " + path);
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

// --- PGM (P5, maxval 255) ---------------------------------------------------

namespace detail {

inline int pgm_token(std::istream& is, const std::string& path) {
  // skip whitespace and '#' comments, then read one integer
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (std::isspace(c)) {
      c = is.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw io_error("PGM: bad header in " + path);
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = is.get();
  }
  if (c != EOF) is.unget();
  return v;
}

}  // namespace detail

struct PgmImage {
  int rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;  // row-major as stored in the file
};

inline PgmImage load_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open: " + path);
  char m0 = static_cast<char>(is.get());
  char m1 = static_cast<char>(is.get());
  if (m0 != 'P' || m1 != '5')
    throw io_error("PGM: only binary P5 supported: " + path);
  int cols = detail::pgm_token(is, path);
  int rows = detail::pgm_token(is, path);
  int maxval = detail::pgm_token(is, path);
  if (maxval != 255)
    throw io_error("PGM: maxval must be 255 in " + path);
  is.get();  // single whitespace byte before payload
  PgmImage img;
  img.rows = rows;
  img.cols = cols;
  img.pixels.resize(static_cast<std::size_t>(rows) * cols);
  if (!is.read(reinterpret_cast<char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size())))
    throw io_error("PGM: truncated payload in " + path);
  return img;
}

// Stack PGM frames into a cube; pixel 255 maps to rho/2.
inline DataCube load_pgm_frames(const std::vector<std::string>& paths,
                                double rho) {
  if (paths.empty()) throw std::invalid_argument("load_pgm_frames: no frames");
  if (!(rho > 0.0)) throw std::invalid_argument("load_pgm_frames: rho <= 0");
  std::vector<double> vals;
  int n1 = 0, n2 = 0;
  int b = 0;
  for (const auto& p : paths) {
    PgmImage img = load_pgm(p);
    if (b == 0) {
      n1 = img.rows;
      n2 = img.cols;
      vals.resize(static_cast<std::size_t>(n1) * n2 * paths.size());
    } else if (img.rows != n1 || img.cols != n2) {
      throw io_error("PGM frames disagree on dimensions: " + p);
    }
    double scale = (rho / 2.0) / 255.0;
    for (int c = 0; c < n2; ++c)
      for (int r = 0; r < n1; ++r)
        vals[(static_cast<std::size_t>(b) * n2 + c) * n1 + r] =
            scale * img.pixels[static_cast<std::size_t>(r) * n2 + c];
    ++b;
  }
  return DataCube(n1, n2, static_cast<int>(paths.size()), rho,
                  std::move(vals));
}

}  // namespace sci
