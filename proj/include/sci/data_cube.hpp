#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sci/rng.hpp"

// Video data cubes and frame images.
//
// A cube holds B frames of n1 x n2 samples with amplitudes confined to
// [-rho/2, rho/2].  Storage equals flattening order: column-major inside a
// frame, frames stacked one after another.  Everything downstream (sensing,
// recovery, file I/O) relies on that single ordering.

namespace sci {

struct FrameImage {
  int n1 = 0;
  int n2 = 0;
  std::vector<double> values;  // column-major

  double at(int i1, int i2) const {
    return values[static_cast<std::size_t>(i2) * n1 + i1];
  }
  double& at(int i1, int i2) {
    return values[static_cast<std::size_t>(i2) * n1 + i1];
  }
};

class DataCube {
 public:
  DataCube(int n1, int n2, int frames, double rho, std::vector<double> values)
      : n1_(n1), n2_(n2), frames_(frames), rho_(rho),
        values_(std::move(values)) {
    if (n1 < 1 || n2 < 1 || frames < 1)
      throw std::invalid_argument("DataCube: dimensions must be positive");
    if (!(rho > 0.0))
      throw std::invalid_argument("DataCube: rho must be positive");
    if (values_.size() != static_cast<std::size_t>(n1) * n2 * frames)
      throw std::invalid_argument("DataCube: value count does not match dims");
    double half = rho_ / 2.0;
    for (double v : values_) {
      if (!(std::fabs(v) <= half))
        throw std::invalid_argument(
            "DataCube: amplitude exceeds rho/2 (got " + std::to_string(v) +
            " with rho " + std::to_string(rho_) + ")");
    }
  }

  static DataCube zeros(int n1, int n2, int frames, double rho) {
    return DataCube(n1, n2, frames, rho,
                    std::vector<double>(
                        static_cast<std::size_t>(n1) * n2 * frames, 0.0));
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int frames() const { return frames_; }
  // pixels per frame
  int n() const { return n1_ * n2_; }
  // total sample count n * B
  std::size_t size() const { return values_.size(); }
  double rho() const { return rho_; }

  double at(int i1, int i2, int b) const {
    return values_[index(i1, i2, b)];
  }

  std::size_t index(int i1, int i2, int b) const {
    return (static_cast<std::size_t>(b) * n2_ + i2) * n1_ + i1;
  }

  const std::vector<double>& values() const { return values_; }

  FrameImage frame(int b) const {
    FrameImage f;
    f.n1 = n1_;
    f.n2 = n2_;
    f.values.assign(values_.begin() + static_cast<std::ptrdiff_t>(b) * n(),
                    values_.begin() + static_cast<std::ptrdiff_t>(b + 1) * n());
    return f;
  }

 private:
  int n1_, n2_, frames_;
  double rho_;
  std::vector<double> values_;
};

// Flatten to a vector of length n*B.  Storage already matches the flattening
// order so this is a plain copy; it exists to make the convention explicit.
inline std::vector<double> vectorize(const DataCube& cube) {
  return cube.values();
}

inline DataCube devectorize(const std::vector<double>& v, int n1, int n2,
                            int frames, double rho) {
  if (v.size() != static_cast<std::size_t>(n1) * n2 * frames)
    throw std::invalid_argument("devectorize: length does not match dims");
  return DataCube(n1, n2, frames, rho, v);
}

// Per-pixel average over frames, (1/B) sum_b frame_b.
inline FrameImage mean_frame(const DataCube& cube) {
  FrameImage f;
  f.n1 = cube.n1();
  f.n2 = cube.n2();
  f.values.assign(static_cast<std::size_t>(cube.n()), 0.0);
  const auto& v = cube.values();
  for (int b = 0; b < cube.frames(); ++b)
    for (int j = 0; j < cube.n(); ++j)
      f.values[j] += v[static_cast<std::size_t>(b) * cube.n() + j];
  for (double& x : f.values) x /= cube.frames();
  return f;
}

struct QualityReport {
  double mse = 0.0;
  double psnr_db = 0.0;  // +inf when mse == 0
  double peak = 0.0;
};

inline QualityReport psnr(const DataCube& reference, const DataCube& estimate,
                          double peak) {
  if (reference.n1() != estimate.n1() || reference.n2() != estimate.n2() ||
      reference.frames() != estimate.frames())
    throw std::invalid_argument("psnr: dimension mismatch");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const auto& a = reference.values();
  const auto& b = estimate.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  QualityReport q;
  q.peak = peak;
  q.mse = acc / static_cast<double>(a.size());
  q.psnr_db = q.mse == 0.0 ? std::numeric_limits<double>::infinity()
                           : 10.0 * std::log10(peak * peak / q.mse);
  return q;
}

// Peak defaults to the reference cube's amplitude range rho.
inline QualityReport psnr(const DataCube& reference, const DataCube& estimate) {
  return psnr(reference, estimate, reference.rho());
}

enum class SynthKind { moving_square, moving_gaussian };

inline SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "moving_square") return SynthKind::moving_square;
  if (s == "moving_gaussian") return SynthKind::moving_gaussian;
  throw std::invalid_argument("unknown synthetic video kind: " + s);
}

// Deterministic synthetic test videos.  A bright object on a dark background
// translates by two columns per frame with wrap-around, so consecutive frames
// are exact circular shifts of each other.
inline DataCube synth_video(SynthKind kind, int n1, int n2, int frames,
                            std::uint64_t seed, double rho = 1.0) {
  if (n1 < 4 || n2 < 4 || frames < 1)
    throw std::invalid_argument("synth_video: dims too small");
  if (!(rho > 0.0)) throw std::invalid_argument("synth_video: rho <= 0");
  Pcg32 rng(substream_seed(seed, 0x5e1fu));
  int r0 = static_cast<int>(rng.next_u32() % static_cast<std::uint32_t>(n1));
  int c0 = static_cast<int>(rng.next_u32() % static_cast<std::uint32_t>(n2));
  const int shift_per_frame = 2;
  const double hi = rho / 2.0;
  std::vector<double> vals(static_cast<std::size_t>(n1) * n2 * frames, 0.0);

  auto idx = [&](int i1, int i2, int b) {
    return (static_cast<std::size_t>(b) * n2 + i2) * n1 + i1;
  };

  if (kind == SynthKind::moving_square) {
    int side = std::max(2, std::min(n1, n2) / 4);
    for (int b = 0; b < frames; ++b) {
      int cb = (c0 + shift_per_frame * b) % n2;
      for (int dr = 0; dr < side; ++dr)
        for (int dc = 0; dc < side; ++dc) {
          int r = (r0 + dr) % n1;
          int c = (cb + dc) % n2;
          vals[idx(r, c, b)] = hi;
        }
    }
  } else {
    double sigma = std::max(1.0, std::min(n1, n2) / 6.0);
    for (int b = 0; b < frames; ++b) {
      int cb = (c0 + shift_per_frame * b) % n2;
      for (int c = 0; c < n2; ++c)
        for (int r = 0; r < n1; ++r) {
          // torus distance keeps the shift property exact under wrap-around
          int dr = std::abs(r - r0);
          dr = std::min(dr, n1 - dr);
          int dc = std::abs(c - cb);
          dc = std::min(dc, n2 - dc);
          double d2 = static_cast<double>(dr) * dr +
                      static_cast<double>(dc) * dc;
          vals[idx(r, c, b)] = hi * std::exp(-d2 / (2.0 * sigma * sigma));
        }
    }
  }
  return DataCube(n1, n2, frames, rho, std::move(vals));
}

}  // namespace sci
