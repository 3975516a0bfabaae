#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sci/data_cube.hpp"
#include "sci/mask.hpp"
#include "sci/rng.hpp"
#include "sci/sensing.hpp"

// Monte-Carlo and enumeration checks of the moment formulas the error bounds
// rest on.  The central object is the per-pixel masked energy
//   U_j = (sum_i D_ij mu_ij)^2,
// whose expectation has a closed form for every mask model and whose average
// over pixels concentrates.

namespace sci {

// E[U] for iid Bernoulli(p) entries: p^2 (sum mu)^2 + (p - p^2) sum mu^2.
inline double expected_energy_iid(const std::vector<double>& mu, double p) {
  if (mu.empty()) throw std::invalid_argument("expected_energy: empty column");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("expected_energy: p outside [0,1]");
  double s = 0.0, s2 = 0.0;
  for (double m : mu) {
    s += m;
    s2 += m * m;
  }
  return p * p * s * s + (p - p * p) * s2;
}

// E[U] for -1/+1 entries with P(+1) = p:
// (2p-1)^2 (sum mu)^2 + 4(p - p^2) sum mu^2.
inline double expected_energy_signed(const std::vector<double>& mu, double p) {
  if (mu.empty()) throw std::invalid_argument("expected_energy: empty column");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("expected_energy: p outside [0,1]");
  double s = 0.0, s2 = 0.0;
  for (double m : mu) {
    s += m;
    s2 += m * m;
  }
  double b = 2.0 * p - 1.0;
  return b * b * s * s + 4.0 * (p - p * p) * s2;
}

// E[U] for iid [0,1] entries with mean p, second moment q:
// p^2 (sum mu)^2 + (q - p^2) sum mu^2.
inline double expected_energy_bounded(const std::vector<double>& mu, double p,
                                      double q) {
  if (mu.empty()) throw std::invalid_argument("expected_energy: empty column");
  double s = 0.0, s2 = 0.0;
  for (double m : mu) {
    s += m;
    s2 += m * m;
  }
  return p * p * s * s + (q - p * p) * s2;
}

// E[U] when the column is one stationary chain sample with correlation
// alpha^|i-k|:  p^2 (sum mu)^2 + p(1-p) mu^T Lambda mu.
inline double expected_energy_out_frame(const std::vector<double>& mu, double p,
                                        double alpha) {
  if (mu.empty()) throw std::invalid_argument("expected_energy: empty column");
  if (!(std::fabs(alpha) < 1.0))
    throw std::invalid_argument("expected_energy: |alpha| must be < 1");
  const int B = static_cast<int>(mu.size());
  double s = 0.0, quad = 0.0;
  for (int i = 0; i < B; ++i) {
    s += mu[i];
    for (int k = 0; k < B; ++k)
      quad += mu[i] * mu[k] * std::pow(alpha, std::abs(i - k));
  }
  return p * p * s * s + p * (1.0 - p) * quad;
}

// Model dispatch.  In-frame dependence leaves a single column iid, so it
// shares the iid formula at the stationary marginal.
inline double expected_energy(const MaskModel& model,
                              const std::vector<double>& mu) {
  switch (model.variant) {
    case MaskVariant::iid_bernoulli:
    case MaskVariant::in_frame_markov:
      return expected_energy_iid(mu, model.marginal_p());
    case MaskVariant::signed_iid:
      return expected_energy_signed(mu, model.p);
    case MaskVariant::bounded_iid:
      return expected_energy_bounded(mu, model.p, model.q);
    case MaskVariant::out_frame_markov:
      return expected_energy_out_frame(mu, model.marginal_p(), model.alpha());
  }
  throw std::logic_error("expected_energy: unknown model");
}

// Exact expectation by enumerating the column's 2^B support (chain paths for
// the cross-frame model).  The continuous bounded variant is handled through
// its uniform support's exact moments instead, which still exercises the
// moment-matching construction.  B is capped at 16.
inline double bruteforce_energy(const MaskModel& model,
                                const std::vector<double>& mu) {
  model.validate();
  const int B = static_cast<int>(mu.size());
  if (B < 1 || B > 16)
    throw std::invalid_argument("bruteforce_energy: need 1 <= B <= 16");

  if (model.variant == MaskVariant::bounded_iid &&
      model.bounded_kind == BoundedKind::uniform_scaled) {
    auto [a, b] = detail::uniform_support(model.p, model.q);
    double m1 = (a + b) / 2.0;
    double m2 = (a * a + a * b + b * b) / 3.0;
    double s = 0.0, s2 = 0.0;
    for (double m : mu) {
      s += m;
      s2 += m * m;
    }
    // independence: cross terms take m1^2, diagonal takes m2
    return m1 * m1 * (s * s - s2) + m2 * s2;
  }

  double on_value = 1.0, off_value = 0.0;
  double p_on = model.marginal_p();
  if (model.variant == MaskVariant::signed_iid) off_value = -1.0;
  if (model.variant == MaskVariant::bounded_iid) {
    auto tp = detail::two_point_support(model.p, model.q);
    on_value = tp.b;
    p_on = tp.w;
  }

  const std::uint32_t S = 1u << B;
  double acc = 0.0;
  for (std::uint32_t d = 0; d < S; ++d) {
    double pr = 1.0;
    if (model.variant == MaskVariant::out_frame_markov) {
      bool prev = d & 1u;
      pr = prev ? p_on : 1.0 - p_on;  // stationary start
      for (int i = 1; i < B; ++i) {
        bool cur = (d >> i) & 1u;
        double stay_on = 1.0 - model.q1, turn_on = model.q0;
        pr *= prev ? (cur ? stay_on : 1.0 - stay_on)
                   : (cur ? turn_on : 1.0 - turn_on);
        prev = cur;
      }
    } else {
      for (int i = 0; i < B; ++i)
        pr *= ((d >> i) & 1u) ? p_on : 1.0 - p_on;
    }
    double sum = 0.0;
    for (int i = 0; i < B; ++i)
      sum += (((d >> i) & 1u) ? on_value : off_value) * mu[i];
    acc += pr * sum * sum;
  }
  return acc;
}

// --- tail behaviour of the pixel-averaged energy ----------------------------

struct McReport {
  std::string model;
  std::int64_t n = 0;
  int B = 0;
  long trials = 0;
  double epsilon = 0.0;
  double analytic_mean = 0.0;
  double empirical_mean = 0.0;
  double empirical_tail = 0.0;  // freq of (1/n) sum U - E >= B rho^2 eps
  double bound_tail = 0.0;      // the matching analytic tail bound
  bool vacuous = false;         // bound_tail >= 1
  bool pass = false;
  std::uint64_t seed = 0;
};

namespace detail {
constexpr std::uint64_t kStreamMuField = 11;
constexpr std::uint64_t kStreamTrial = 12;
constexpr std::uint64_t kStreamEstimator = 13;
}  // namespace detail

// Samples the pixel-averaged energy over fresh masks and compares the upward
// tail at deviation B rho^2 epsilon against the model's analytic tail bound:
// exp(-2 n eps^2 / B^2) for models with independent columns, the mixing-
// corrected exp(-(n eps^2/8)(1-theta1)^2) for in-frame chains.  The column
// weights are drawn once, uniformly from [-rho, rho].
inline McReport mc_concentration(const MaskModel& model, std::int64_t n, int B,
                                 long trials, double epsilon, double rho,
                                 std::uint64_t seed) {
  model.validate();
  if (n < 1 || B < 1 || B > 30)
    throw std::invalid_argument("mc_concentration: bad dims");
  if (trials < 1) throw std::invalid_argument("mc_concentration: no trials");
  if (!(epsilon > 0.0 && rho > 0.0))
    throw std::invalid_argument("mc_concentration: need epsilon, rho > 0");

  McReport rep;
  rep.model = model.name();
  rep.n = n;
  rep.B = B;
  rep.trials = trials;
  rep.epsilon = epsilon;
  rep.seed = seed;

  // fixed field of column weights
  std::vector<std::vector<double>> mu(static_cast<std::size_t>(n));
  {
    Pcg32 rng(substream_seed(seed, detail::kStreamMuField, 0));
    for (auto& col : mu) {
      col.resize(B);
      for (double& v : col) v = rng.next_uniform(-rho, rho);
    }
  }
  double analytic = 0.0;
  for (const auto& col : mu) analytic += expected_energy(model, col);
  analytic /= static_cast<double>(n);
  rep.analytic_mean = analytic;

  const double threshold = B * rho * rho * epsilon;
  long exceed = 0;
  double mean_acc = 0.0, var_acc = 0.0;
  for (long t = 0; t < trials; ++t) {
    MaskCube mask = sample_mask(model, static_cast<int>(n), 1, B,
                                substream_seed(seed, detail::kStreamTrial,
                                               static_cast<std::uint64_t>(t)));
    double s = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int b = 0; b < B; ++b)
        dot += mask.values[static_cast<std::size_t>(b) * n + j] * mu[j][b];
      s += dot * dot;
    }
    s /= static_cast<double>(n);
    mean_acc += s;
    var_acc += (s - analytic) * (s - analytic);
    if (s - analytic >= threshold) ++exceed;
  }
  rep.empirical_mean = mean_acc / trials;
  rep.empirical_tail = static_cast<double>(exceed) / trials;

  double ne2 = static_cast<double>(n) * epsilon * epsilon;
  if (model.variant == MaskVariant::in_frame_markov) {
    double th = theta1_closed_form(model.q0, model.q1, B);
    double om = 1.0 - th;
    rep.bound_tail = std::exp(-(ne2 / 8.0) * om * om);
  } else {
    rep.bound_tail = std::exp(-2.0 * ne2 / (B * B));
  }
  rep.vacuous = rep.bound_tail >= 1.0;

  // sample std of the per-trial averages, for the mean agreement check
  double sample_sd = std::sqrt(var_acc / trials);
  bool mean_ok = std::fabs(rep.empirical_mean - analytic) <=
                 5.0 * sample_sd / std::sqrt(double(trials)) + 1e-12;
  double slack =
      3.0 * std::sqrt(std::max(rep.bound_tail * (1.0 - rep.bound_tail), 0.0) /
                      trials) +
      1.0 / trials;
  bool tail_ok = rep.vacuous || rep.empirical_tail <= rep.bound_tail + slack;
  rep.pass = mean_ok && tail_ok;
  return rep;
}

// --- snapshot mean as an estimator of the frame average ---------------------

struct MeanEstimatorReport {
  long trials = 0;
  double rms_error = 0.0;       // RMS of (averaged estimate - true mean frame)
  double predicted_rms = 0.0;   // from the exact per-pixel variance
  double ratio = 0.0;           // rms / predicted
  bool pass = false;
};

// The snapshot scaled by 1/(B p) is unbiased for the mean frame; averaging
// `trials` snapshots shrinks the error like 1/sqrt(trials).  Binary 0/1
// masks only.
inline MeanEstimatorReport mean_estimator_check(const DataCube& x,
                                               const MaskModel& model,
                                               long trials,
                                               std::uint64_t seed) {
  model.validate();
  if (!model.is_binary() || model.variant == MaskVariant::signed_iid)
    throw std::invalid_argument(
        "mean_estimator_check: needs a binary 0/1 mask model");
  if (trials < 1)
    throw std::invalid_argument("mean_estimator_check: no trials");
  const double p = model.marginal_p();
  const int n = x.n();
  const int B = x.frames();

  FrameImage truth = mean_frame(x);
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  for (long t = 0; t < trials; ++t) {
    MaskCube mask =
        sample_mask(model, x.n1(), x.n2(), B,
                    substream_seed(seed, detail::kStreamEstimator,
                                   static_cast<std::uint64_t>(t)));
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < n; ++j)
        acc[j] += mask.values[static_cast<std::size_t>(b) * n + j] *
                  x.values()[static_cast<std::size_t>(b) * n + j];
  }
  MeanEstimatorReport rep;
  rep.trials = trials;
  double err2 = 0.0;
  for (int j = 0; j < n; ++j) {
    double est = acc[j] / (double(trials) * B * p);
    double d = est - truth.values[j];
    err2 += d * d;
  }
  rep.rms_error = std::sqrt(err2 / n);

  // exact per-pixel variance of one snapshot: Var(y_j) = E[y_j^2] - (p sum x)^2
  double var_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    std::vector<double> col(B);
    double s = 0.0;
    for (int b = 0; b < B; ++b) {
      col[b] = x.values()[static_cast<std::size_t>(b) * n + j];
      s += col[b];
    }
    double var = expected_energy(model, col) - p * p * s * s;
    var_sum += std::max(var, 0.0);
  }
  rep.predicted_rms =
      std::sqrt(var_sum / n / (double(trials) * B * B * p * p));
  rep.ratio = rep.predicted_rms > 0.0
                  ? rep.rms_error / rep.predicted_rms
                  : (rep.rms_error == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  rep.pass = rep.ratio >= 1.0 / 3.0 && rep.ratio <= 3.0;
  return rep;
}

}  // namespace sci
