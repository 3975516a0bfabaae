#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

// Compression codes used as recovery priors.  A codebook is either an
// explicit list of codewords or a uniform scalar quantizer applied
// coordinate-wise (a product code whose codeword count levels^dim is usually
// far too large to materialize; it is enumerated only at toy sizes).

namespace sci {

class Codebook {
 public:
  double rate_r = 0.0;            // codebook size is 2^(B * rate_r)
  double distortion_delta = 0.0;  // worst-case per-sample squared error

  static Codebook explicit_list(std::vector<std::vector<double>> words,
                                double rate_r, double distortion_delta) {
    Codebook cb;
    cb.rate_r = rate_r;
    cb.distortion_delta = distortion_delta;
    cb.words_ = std::move(words);
    if (!cb.words_.empty()) {
      cb.dim_ = cb.words_.front().size();
      for (const auto& w : cb.words_)
        if (w.size() != cb.dim_)
          throw std::invalid_argument(
              "Codebook: codewords must share one dimension");
    }
    return cb;
  }

  // Uniform quantizer with `levels` cells on [-rho/2, rho/2], reproduction
  // points at cell midpoints.  rate_r counts bits per frame so that the
  // codeword count levels^(n*B) reads 2^(B * rate_r) with rate_r = n log2 L.
  static Codebook uniform_quantizer(int n1, int n2, int frames, int levels,
                                    double rho) {
    if (n1 < 1 || n2 < 1 || frames < 1)
      throw std::invalid_argument("Codebook: dimensions must be positive");
    if (levels < 2)
      throw std::invalid_argument("Codebook: need at least 2 levels");
    if (!(rho > 0.0)) throw std::invalid_argument("Codebook: rho <= 0");
    Codebook cb;
    cb.dim_ = static_cast<std::size_t>(n1) * n2 * frames;
    cb.levels_ = levels;
    cb.rho_ = rho;
    double n = static_cast<double>(n1) * n2;
    cb.rate_r = n * std::log2(static_cast<double>(levels));
    double half_cell = rho / (2.0 * levels);
    cb.distortion_delta = half_cell * half_cell;
    return cb;
  }

  bool is_quantizer() const { return levels_ > 0; }
  std::size_t dimension() const { return dim_; }
  int levels() const { return levels_; }
  double rho() const { return rho_; }
  const std::vector<std::vector<double>>& words() const { return words_; }

  double size_log2() const {
    if (is_quantizer())
      return static_cast<double>(dim_) * std::log2(double(levels_));
    return words_.empty() ? -std::numeric_limits<double>::infinity()
                          : std::log2(static_cast<double>(words_.size()));
  }

  bool enumerable(double max_log2 = 20.0) const {
    if (!is_quantizer()) return true;
    return size_log2() <= max_log2;
  }

  std::uint64_t count() const {
    if (!is_quantizer()) return words_.size();
    if (!enumerable(62.0))
      throw std::invalid_argument("Codebook: count would overflow");
    std::uint64_t c = 1;
    for (std::size_t i = 0; i < dim_; ++i)
      c *= static_cast<std::uint64_t>(levels_);
    return c;
  }

  double level_value(int k) const {
    // cell k covers [-rho/2 + k w, -rho/2 + (k+1) w), w = rho/levels
    double w = rho_ / levels_;
    return -rho_ / 2.0 + (k + 0.5) * w;
  }

  // Quantizer codewords are indexed as little-endian base-`levels` digit
  // strings, coordinate 0 in the lowest digit.  This fixes the tie-break
  // order for exhaustive search.
  std::vector<double> codeword(std::uint64_t index) const {
    if (!is_quantizer()) {
      if (index >= words_.size())
        throw std::invalid_argument("Codebook: codeword index out of range");
      return words_[index];
    }
    std::vector<double> w(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      w[i] = level_value(static_cast<int>(index % levels_));
      index /= levels_;
    }
    return w;
  }

  // Nearest codeword.  Product quantizer: per-coordinate rounding (which is
  // exactly the joint nearest point).  Explicit list: full scan, ties to the
  // lowest index.
  std::vector<double> project(const std::vector<double>& s) const {
    if (s.size() != dim_)
      throw std::invalid_argument("Codebook::project: dimension mismatch");
    if (is_quantizer()) {
      std::vector<double> out(dim_);
      double w = rho_ / levels_;
      for (std::size_t i = 0; i < dim_; ++i) {
        double q = (s[i] + rho_ / 2.0) / w;
        double cell = std::floor(q);
        // a point exactly on a cell boundary is equidistant to two levels;
        // take the lower one so ties go to the lowest codeword index
        if (cell == q) cell -= 1.0;
        int k = static_cast<int>(
            std::max(0.0, std::min(cell, double(levels_ - 1))));
        out[i] = level_value(k);
      }
      return out;
    }
    if (words_.empty())
      throw std::invalid_argument("Codebook::project: empty codebook");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < words_.size(); ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        double t = words_[k][i] - s[i];
        d += t * t;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return words_[best];
  }

 private:
  std::vector<std::vector<double>> words_;
  std::size_t dim_ = 0;
  int levels_ = 0;     // 0 means explicit list
  double rho_ = 0.0;
};

inline Codebook build_quantizer_codebook(int n1, int n2, int frames,
                                         int levels, double rho) {
  return Codebook::uniform_quantizer(n1, n2, frames, levels, rho);
}

}  // namespace sci
