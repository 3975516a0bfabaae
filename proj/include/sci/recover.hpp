#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sci/codebook.hpp"
#include "sci/data_cube.hpp"
#include "sci/sensing.hpp"

// Reconstruction by projected gradient descent: alternate a gradient step on
// the measurement misfit with a projection onto the signal prior (a codebook,
// or a TV denoiser standing in for one).

namespace sci {

// Step size matched to the mask variance, 1/(p - p^2).
inline double default_mu(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("default_mu: p must lie in (0,1)");
  return 1.0 / (p - p * p);
}

// --- TV denoiser ------------------------------------------------------------

namespace detail {

// One frame of anisotropic TV smoothing, approximately solving
//   min_u 1/2 ||u - s||^2 + weight * sum |grad u|_1
// by a fixed number of projected gradient ascent steps on the dual
// (dual variables live in the box [-weight, weight]).
inline void tv_frame(const double* s, double* u, int n1, int n2, double weight,
                     int iters) {
  const std::size_t N = static_cast<std::size_t>(n1) * n2;
  std::vector<double> qh(N, 0.0);  // horizontal edges (c, c+1)
  std::vector<double> qv(N, 0.0);  // vertical edges (r, r+1)
  auto id = [&](int r, int c) { return static_cast<std::size_t>(c) * n1 + r; };
  const double tau = 0.2;  // dual ascent step, < 2 / ||grad||^2 = 1/4

  for (int it = 0; it < iters; ++it) {
    // u = s - div(q)
    for (int c = 0; c < n2; ++c)
      for (int r = 0; r < n1; ++r) {
        double d = 0.0;
        if (c + 1 < n2) d -= qh[id(r, c)];
        if (c > 0) d += qh[id(r, c - 1)];
        if (r + 1 < n1) d -= qv[id(r, c)];
        if (r > 0) d += qv[id(r - 1, c)];
        u[id(r, c)] = s[id(r, c)] - d;
      }
    // q += tau * grad(u), clipped to the box
    for (int c = 0; c + 1 < n2; ++c)
      for (int r = 0; r < n1; ++r) {
        double g = u[id(r, c + 1)] - u[id(r, c)];
        qh[id(r, c)] =
            std::clamp(qh[id(r, c)] + tau * g, -weight, weight);
      }
    for (int c = 0; c < n2; ++c)
      for (int r = 0; r + 1 < n1; ++r) {
        double g = u[id(r + 1, c)] - u[id(r, c)];
        qv[id(r, c)] =
            std::clamp(qv[id(r, c)] + tau * g, -weight, weight);
      }
  }
  // final primal point for the last dual iterate
  for (int c = 0; c < n2; ++c)
    for (int r = 0; r < n1; ++r) {
      double d = 0.0;
      if (c + 1 < n2) d -= qh[id(r, c)];
      if (c > 0) d += qh[id(r, c - 1)];
      if (r + 1 < n1) d -= qv[id(r, c)];
      if (r > 0) d += qv[id(r - 1, c)];
      u[id(r, c)] = s[id(r, c)] - d;
    }
}

// Frame-by-frame TV smoothing of a flat vector, then amplitude clamp.
inline std::vector<double> tv_denoise_flat(const std::vector<double>& s,
                                           int n1, int n2, int frames,
                                           double weight, int iters,
                                           double rho) {
  if (s.size() != static_cast<std::size_t>(n1) * n2 * frames)
    throw std::invalid_argument("tv_denoise: length mismatch");
  if (!(weight >= 0.0)) throw std::invalid_argument("tv_denoise: weight < 0");
  if (iters < 1) throw std::invalid_argument("tv_denoise: iters < 1");
  std::vector<double> u(s.size());
  const std::size_t N = static_cast<std::size_t>(n1) * n2;
  for (int b = 0; b < frames; ++b)
    tv_frame(s.data() + b * N, u.data() + b * N, n1, n2, weight, iters);
  double half = rho / 2.0;
  for (double& v : u) v = std::clamp(v, -half, half);
  return u;
}

}  // namespace detail

inline DataCube tv_denoise(const DataCube& s, double weight,
                           int inner_iterations = 30) {
  auto u = detail::tv_denoise_flat(s.values(), s.n1(), s.n2(), s.frames(),
                                   weight, inner_iterations, s.rho());
  return DataCube(s.n1(), s.n2(), s.frames(), s.rho(), std::move(u));
}

// --- projectors -------------------------------------------------------------

// Heuristic smoothness projector.  Not a true set projection; recovery with
// it is outside the contraction analysis.
struct TvProjector {
  double weight = 0.0;
  int inner_iterations = 30;
};

struct CodebookProjector {
  Codebook codebook;
};

using Projector = std::variant<TvProjector, CodebookProjector>;

inline std::vector<double> apply_projector(const Projector& proj,
                                           const std::vector<double>& s,
                                           int n1, int n2, int frames,
                                           double rho) {
  if (const auto* tv = std::get_if<TvProjector>(&proj))
    return detail::tv_denoise_flat(s, n1, n2, frames, tv->weight,
                                   tv->inner_iterations, rho);
  return std::get<CodebookProjector>(proj).codebook.project(s);
}

// --- projected gradient descent ---------------------------------------------

struct PgdConfig {
  double mu = 0.0;
  int max_iter = 50;
  double tol = 1e-6;  // stop when the relative residual change drops below
  double rho = 1.0;   // amplitude range of the reconstruction
};

struct RecoveryResult {
  DataCube x_hat;
  std::vector<double> residual_trace;  // ||y - H x_t||_2 per iteration
  std::vector<double> error_trace;     // ||truth - x_t||_2 / sqrt(nB), if given
  int iterations_run = 0;
};

namespace detail {
inline double l2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}
}  // namespace detail

// Iterates x <- P(x + mu H^T (y - H x)) from x = 0.  Runs max_iter sweeps or
// stops early once the residual stalls (relative change below tol).
inline RecoveryResult pgd_recover(const Measurement& y,
                                  const SensingOperator& op,
                                  const Projector& proj, const PgdConfig& cfg,
                                  const DataCube* ground_truth = nullptr) {
  if (y.frame.n1 != op.n1() || y.frame.n2 != op.n2())
    throw std::invalid_argument(
        "pgd_recover: measurement/mask dimension mismatch");
  if (!(cfg.mu > 0.0)) throw std::invalid_argument("pgd_recover: mu <= 0");
  if (cfg.max_iter < 1)
    throw std::invalid_argument("pgd_recover: max_iter < 1");
  if (!(cfg.rho > 0.0)) throw std::invalid_argument("pgd_recover: rho <= 0");
  if (ground_truth &&
      (ground_truth->n1() != op.n1() || ground_truth->n2() != op.n2() ||
       ground_truth->frames() != op.frames()))
    throw std::invalid_argument("pgd_recover: ground truth dimension mismatch");

  const std::size_t nB = op.nB();
  const double root_nB = std::sqrt(static_cast<double>(nB));
  std::vector<double> x(nB, 0.0);
  RecoveryResult out{DataCube::zeros(op.n1(), op.n2(), op.frames(), cfg.rho),
                     {}, {}, 0};

  double prev_res = -1.0;
  for (int t = 0; t < cfg.max_iter; ++t) {
    std::vector<double> e = op.apply(x);
    for (std::size_t j = 0; j < e.size(); ++j) e[j] = y.frame.values[j] - e[j];
    std::vector<double> s = op.adjoint(e);
    for (std::size_t i = 0; i < nB; ++i) s[i] = x[i] + cfg.mu * s[i];
    x = apply_projector(proj, s, op.n1(), op.n2(), op.frames(), cfg.rho);

    std::vector<double> res = op.apply(x);
    for (std::size_t j = 0; j < res.size(); ++j)
      res[j] = y.frame.values[j] - res[j];
    double r = detail::l2(res);
    out.residual_trace.push_back(r);
    if (ground_truth) {
      double acc = 0.0;
      const auto& g = ground_truth->values();
      for (std::size_t i = 0; i < nB; ++i) {
        double d = g[i] - x[i];
        acc += d * d;
      }
      out.error_trace.push_back(std::sqrt(acc) / root_nB);
    }
    out.iterations_run = t + 1;
    if (r == 0.0) break;
    if (prev_res >= 0.0 &&
        std::fabs(r - prev_res) < cfg.tol * std::max(prev_res, 1e-300))
      break;
    prev_res = r;
  }
  out.x_hat = DataCube(op.n1(), op.n2(), op.frames(), cfg.rho, std::move(x));
  return out;
}

// --- exhaustive codebook search ---------------------------------------------

struct CspResult {
  std::uint64_t index = 0;
  std::vector<double> codeword;
  double residual_l2 = 0.0;
};

// Scan the whole codebook for the smallest measurement misfit.  Ties go to
// the lowest codeword index.  Guarded to 2^20 codewords.
inline CspResult csp_exhaustive(const Measurement& y,
                                const SensingOperator& op,
                                const Codebook& cb) {
  if (cb.dimension() != op.nB())
    throw std::invalid_argument("csp_exhaustive: codebook dimension mismatch");
  if (!cb.enumerable(20.0))
    throw std::invalid_argument(
        "csp_exhaustive: codebook too large to enumerate (max 2^20)");
  std::uint64_t count = cb.count();
  if (count == 0)
    throw std::invalid_argument("csp_exhaustive: empty codebook");
  CspResult best;
  best.residual_l2 = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < count; ++k) {
    std::vector<double> c = cb.codeword(k);
    std::vector<double> r = op.apply(c);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      double d = y.frame.values[j] - r[j];
      acc += d * d;
    }
    double res = std::sqrt(acc);
    if (res < best.residual_l2) {
      best.residual_l2 = res;
      best.index = k;
      best.codeword = std::move(c);
    }
  }
  return best;
}

}  // namespace sci
