#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sci/data_cube.hpp"
#include "sci/mask.hpp"
#include "sci/rng.hpp"

// Masked multiplexing forward model.  One snapshot collects
//   y_j = sum_b D_bj x_bj (+ noise),
// i.e. the operator is a row of diagonals, one per frame, and is applied
// matrix-free.  The frame reduction order is fixed (b = 0,1,...) so results
// are bitwise reproducible.

namespace sci {

struct Measurement {
  FrameImage frame;
  double noise_sigma = 0.0;
};

class SensingOperator {
 public:
  explicit SensingOperator(MaskCube mask) : mask_(std::move(mask)) {}

  const MaskCube& mask() const { return mask_; }
  int n1() const { return mask_.n1; }
  int n2() const { return mask_.n2; }
  int frames() const { return mask_.frames; }
  int n() const { return mask_.n(); }
  std::size_t nB() const { return mask_.size(); }

  // y = H x, x of length n*B, y of length n
  std::vector<double> apply(const std::vector<double>& x) const {
    if (x.size() != nB())
      throw std::invalid_argument("SensingOperator::apply: length mismatch");
    const int N = n();
    std::vector<double> y(static_cast<std::size_t>(N), 0.0);
    for (int b = 0; b < frames(); ++b) {
      const double* xb = x.data() + static_cast<std::size_t>(b) * N;
      const double* db = mask_.values.data() + static_cast<std::size_t>(b) * N;
      for (int j = 0; j < N; ++j) y[j] += db[j] * xb[j];
    }
    return y;
  }

  // H^T e, e of length n, result of length n*B
  std::vector<double> adjoint(const std::vector<double>& e) const {
    if (e.size() != static_cast<std::size_t>(n()))
      throw std::invalid_argument("SensingOperator::adjoint: length mismatch");
    const int N = n();
    std::vector<double> out(nB());
    for (int b = 0; b < frames(); ++b) {
      double* ob = out.data() + static_cast<std::size_t>(b) * N;
      const double* db = mask_.values.data() + static_cast<std::size_t>(b) * N;
      for (int j = 0; j < N; ++j) ob[j] = db[j] * e[j];
    }
    return out;
  }

  Measurement measure(const DataCube& cube) const {
    if (cube.n1() != n1() || cube.n2() != n2() || cube.frames() != frames())
      throw std::invalid_argument(
          "SensingOperator::measure: cube/mask dimension mismatch");
    Measurement m;
    m.frame.n1 = n1();
    m.frame.n2 = n2();
    m.frame.values = apply(cube.values());
    return m;
  }

 private:
  MaskCube mask_;
};

inline Measurement add_noise(const Measurement& clean, double sigma,
                             std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma < 0");
  Measurement out = clean;
  out.noise_sigma = std::hypot(clean.noise_sigma, sigma);
  if (sigma == 0.0) return out;
  Pcg32 rng(substream_seed(seed, detail::kStreamNoise, 0));
  for (double& v : out.frame.values) v += sigma * rng.next_gaussian();
  return out;
}

// Dense realization of the operator, for small-instance audits only.
inline Eigen::MatrixXd build_explicit_matrix(const MaskCube& mask) {
  const std::size_t total = static_cast<std::size_t>(mask.n()) * mask.size();
  if (total > (1ull << 22))
    throw std::invalid_argument(
        "build_explicit_matrix: instance too large for a dense matrix");
  const int N = mask.n();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, static_cast<int>(mask.size()));
  for (int b = 0; b < mask.frames; ++b)
    for (int j = 0; j < N; ++j)
      H(j, b * N + j) = mask.values[static_cast<std::size_t>(b) * N + j];
  return H;
}

}  // namespace sci
