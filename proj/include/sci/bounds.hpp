#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "sci/errors.hpp"

// Closed-form recovery guarantees for compression-projected reconstruction
// from one masked snapshot.
//
// Every bound splits into a distortion term (what the code itself loses) and
// a fluctuation term (what the random mask costs), and comes with a lower
// bound on the probability that it holds.  Probabilities combine terms like
// 2^(Br+1) exp(-z) whose exponents overflow long before the result stops
// being meaningful, so all failure masses live in log space; a bound whose
// failure mass reaches 1 is reported as vacuous instead of being clamped.
//
// Two deviation conventions coexist: the iid bound fixes its deviation
// internally from a probability knob eta, the dependence-aware bounds take a
// free deviation epsilon.  Reports record which one was used.

namespace sci {

struct BoundParams {
  std::int64_t n = 0;   // pixels per frame
  int B = 0;            // frames per snapshot
  double r = 0.0;       // code rate, codebook size 2^(B r)
  double delta = 0.0;   // per-sample squared distortion of the code
  double rho = 0.0;     // amplitude range of the signal class
  double eta = 0.0;     // probability knob (auto-deviation convention)
  double epsilon = 0.0; // deviation (manual convention)
  double kappa = 0.0;   // fluctuation budget as a multiple of delta
  double lambda_free = 0.0;  // free slack in the iterative analysis
};

struct BoundReport {
  double bound_value = 0.0;
  double term_distortion = 0.0;
  double term_fluctuation = 0.0;
  double success_probability_lower = 0.0;
  double log_fail_mass = -std::numeric_limits<double>::infinity();
  bool vacuous = false;
  std::string convention;  // "eta" or "epsilon"
  std::string notes;
};

namespace detail {

inline double logsumexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

constexpr double kLn2 = 0.6931471805599453094172321;

inline void check_p(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("bound: p must lie in (0,1)");
}

inline void check_core(const BoundParams& c) {
  if (c.n < 1) throw std::invalid_argument("bound: n must be >= 1");
  if (c.B < 1) throw std::invalid_argument("bound: B must be >= 1");
  if (!(c.r > 0.0)) throw std::invalid_argument("bound: r must be > 0");
  if (!(c.delta >= 0.0)) throw std::invalid_argument("bound: delta < 0");
  if (!(c.rho > 0.0)) throw std::invalid_argument("bound: rho must be > 0");
}

inline void check_epsilon(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("bound: epsilon must be > 0");
}

inline BoundReport make_report(double term_d, double term_f, double log_fail,
                               const char* convention, std::string notes) {
  BoundReport rep;
  rep.term_distortion = term_d;
  rep.term_fluctuation = term_f;
  rep.bound_value = term_d + term_f;
  rep.log_fail_mass = log_fail;
  rep.vacuous = !(log_fail < 0.0);
  // -expm1 keeps precision when the failure mass is tiny
  rep.success_probability_lower = rep.vacuous ? 0.0 : -std::expm1(log_fail);
  rep.convention = convention;
  rep.notes = std::move(notes);
  return rep;
}

}  // namespace detail

// --- iid Bernoulli(p) masks -------------------------------------------------

// (1 + Bp/(1-p)) delta + (rho^2 B)/(p - p^2) sqrt((B + eta) 2r/n), holding
// with probability at least 1 - 2 exp(-eta r).  The deviation is tied to eta
// so only the knob appears.
inline BoundReport iid_bound(double p, const BoundParams& c) {
  detail::check_p(p);
  detail::check_core(c);
  if (!(c.eta > 0.0)) throw std::invalid_argument("iid_bound: eta must be > 0");
  double term_d = (1.0 + c.B * p / (1.0 - p)) * c.delta;
  double term_f = (c.rho * c.rho * c.B / (p - p * p)) *
                  std::sqrt((c.B + c.eta) * 2.0 * c.r / c.n);
  double log_fail = detail::kLn2 - c.eta * c.r;
  return detail::make_report(term_d, term_f, log_fail, "eta", "");
}

// Exact minimizer of iid_bound over p:
//   p* = 1 / (1 + sqrt(1 + (delta/rho^2) sqrt(n / (2 r (B + eta))))).
// Equals 1/2 when delta = 0 and moves toward 0 as the code gets lossier.
inline double optimal_p(const BoundParams& c) {
  detail::check_core(c);
  if (!(c.eta > 0.0)) throw std::invalid_argument("optimal_p: eta must be > 0");
  double ratio = (c.delta / (c.rho * c.rho)) *
                 std::sqrt(static_cast<double>(c.n) /
                           (2.0 * c.r * (c.B + c.eta)));
  return 1.0 / (1.0 + std::sqrt(1.0 + ratio));
}

// Derivative of the iid bound in p (used to audit the closed-form minimizer):
// u'(p) = B delta/(1-p)^2 + a (1/(1-p)^2 - 1/p^2), a = B rho^2 sqrt(2r(B+eta)/n).
inline double iid_bound_derivative(double p, const BoundParams& c) {
  detail::check_p(p);
  double a = c.B * c.rho * c.rho *
             std::sqrt(2.0 * c.r * (c.B + c.eta) / c.n);
  double q = 1.0 - p;
  return c.B * c.delta / (q * q) + a * (1.0 / (q * q) - 1.0 / (p * p));
}

// --- frame budget under a fluctuation cap -----------------------------------

struct FrameBudget {
  std::int64_t max_frames = 0;
  double bound_at_max = 0.0;
  double success_probability_lower = 0.0;
};

// Largest B for which the mask fluctuation stays within kappa * delta:
//   B <= (kappa delta / rho^2)^(2/3) (n/r)^(1/3),
// and the resulting all-distortion bound (1 + Bp/(1-p) + 2 kappa/(p-p^2)) delta,
// holding with probability at least 1 - exp(-r).
inline FrameBudget max_frames(double p, const BoundParams& c) {
  detail::check_p(p);
  detail::check_core(c);
  if (!(c.kappa > 0.0))
    throw std::invalid_argument("max_frames: kappa must be > 0");
  FrameBudget out;
  double lim = std::pow(c.kappa * c.delta / (c.rho * c.rho), 2.0 / 3.0) *
               std::cbrt(static_cast<double>(c.n) / c.r);
  out.max_frames = static_cast<std::int64_t>(std::floor(lim));
  double B = static_cast<double>(out.max_frames);
  out.bound_at_max =
      (1.0 + B * p / (1.0 - p) + 2.0 * c.kappa / (p - p * p)) * c.delta;
  out.success_probability_lower = -std::expm1(-c.r);
  return out;
}

// --- signed (-1/+1) iid masks -----------------------------------------------

// (1 - B + B/(4(p-p^2))) delta + rho^2 B eps / (4(p-p^2)), failure mass
// 2^(Br+1) exp(-n eps^2 / 2).  At p = 1/2 collapses to delta + rho^2 B eps.
inline BoundReport signed_bound(double p, double eps, const BoundParams& c) {
  detail::check_p(p);
  detail::check_core(c);
  detail::check_epsilon(eps);
  double denom = 4.0 * (p - p * p);
  double term_d = (1.0 - c.B + c.B / denom) * c.delta;
  double term_f = c.rho * c.rho * c.B * eps / denom;
  double log_fail =
      (c.B * c.r + 1.0) * detail::kLn2 - c.n * eps * eps / 2.0;
  return detail::make_report(term_d, term_f, log_fail, "epsilon", "");
}

// --- bounded [0,1] iid masks with second moment q ---------------------------

// (1 + B p^2/(q - p^2)) delta + rho^2 B eps / (q - p^2); needs q > p^2.
// Recovers the iid shape at the binary moment point q = p.
inline BoundReport bounded_bound(double p, double q, double eps,
                                 const BoundParams& c) {
  detail::check_p(p);
  detail::check_core(c);
  detail::check_epsilon(eps);
  if (!(q <= p))
    throw std::invalid_argument("bounded_bound: q must be <= p");
  if (!(q > p * p))
    throw not_applicable("bounded_bound: needs variance q - p^2 > 0");
  double denom = q - p * p;
  double term_d = (1.0 + c.B * p * p / denom) * c.delta;
  double term_f = c.rho * c.rho * c.B * eps / denom;
  double log_fail =
      (c.B * c.r + 1.0) * detail::kLn2 - c.n * eps * eps / 2.0;
  return detail::make_report(term_d, term_f, log_fail, "epsilon", "");
}

// --- masks with dependence inside each frame --------------------------------

// (1 + Bp/(1-p)) (delta/(nB)) + rho^2 eps / (p(1-p)); the mixing rate theta1
// of the mask chain only scales the probability, not the bound.  Failure
// mass (2^(Br)+1) exp(-(n eps^2/32)(1-theta1)^2).
inline BoundReport in_frame_bound(double p, double eps, double theta1,
                                  const BoundParams& c) {
  detail::check_p(p);
  detail::check_core(c);
  detail::check_epsilon(eps);
  if (!(theta1 >= 0.0 && theta1 < 1.0))
    throw not_applicable("in_frame_bound: needs mixing theta1 in [0,1)");
  double nB = static_cast<double>(c.n) * c.B;
  double term_d = (1.0 + c.B * p / (1.0 - p)) * (c.delta / nB);
  double term_f = c.rho * c.rho * eps / (p * (1.0 - p));
  double one_minus = 1.0 - theta1;
  double log_fail =
      detail::logsumexp(c.B * c.r * detail::kLn2, 0.0) -
      (c.n * eps * eps / 32.0) * one_minus * one_minus;
  return detail::make_report(
      term_d, term_f, log_fail, "epsilon",
      "distortion term normalized by n*B, unlike the iid bound");
}

// --- masks with dependence across frames ------------------------------------

// ((lmax(1-p) + pB)/(lmin(1-p))) (delta/(nB)) + rho^2 eps/(lmin p(1-p)),
// failure mass 2^(Br+1) exp(-n eps^2/(2 B^2)).  lmin/lmax are the extreme
// eigenvalues of the chain's correlation matrix; lmin must be positive.
inline BoundReport out_frame_bound(double p, double eps, double lambda_min,
                                   double lambda_max, const BoundParams& c) {
  detail::check_p(p);
  detail::check_core(c);
  detail::check_epsilon(eps);
  if (!(lambda_min > 0.0))
    throw not_applicable("out_frame_bound: needs lambda_min > 0");
  if (!(lambda_max >= lambda_min))
    throw std::invalid_argument("out_frame_bound: lambda_max < lambda_min");
  double nB = static_cast<double>(c.n) * c.B;
  double term_d = (lambda_max * (1.0 - p) + p * c.B) /
                  (lambda_min * (1.0 - p)) * (c.delta / nB);
  double term_f = c.rho * c.rho * eps / (lambda_min * p * (1.0 - p));
  double log_fail = (c.B * c.r + 1.0) * detail::kLn2 -
                    c.n * eps * eps / (2.0 * c.B * c.B);
  return detail::make_report(
      term_d, term_f, log_fail, "epsilon",
      "distortion term normalized by n*B, unlike the iid bound");
}

// Same bound with the eigenvalue extrema replaced by their disc surrogates
// (1-3a)/(1-a) and (1+a)/(1-a); needs alpha < 1/3 so the lower surrogate is
// positive.  At alpha = 0 this is exactly the exact-eigenvalue bound with
// lmin = lmax = 1, and it always dominates the exact-eigenvalue bound.
inline BoundReport out_frame_gershgorin_bound(double p, double eps,
                                              double alpha,
                                              const BoundParams& c) {
  if (!(alpha >= 0.0))
    throw std::invalid_argument("out_frame_gershgorin_bound: alpha < 0");
  if (!(alpha < 1.0 / 3.0))
    throw not_applicable(
        "out_frame_gershgorin_bound: needs alpha < 1/3");
  double lo = (1.0 - 3.0 * alpha) / (1.0 - alpha);
  double hi = (1.0 + alpha) / (1.0 - alpha);
  BoundReport rep = out_frame_bound(p, eps, lo, hi, c);
  rep.notes = "eigenvalue extrema replaced by disc surrogates; " + rep.notes;
  return rep;
}

// --- iterative recovery -----------------------------------------------------

// Per-step error gain of the projected iteration, 2 lambda / (p - p^2).
inline double pgd_contraction(double lambda_free, double p) {
  detail::check_p(p);
  if (!(lambda_free >= 0.0))
    throw std::invalid_argument("pgd_contraction: lambda must be >= 0");
  return 2.0 * lambda_free / (p - p * p);
}

// Limit of the error recursion when the gain stays below one:
//   (1/(1-gain)) * 2 (p + (B-1) p^2 + 1)/(p - p^2) * sqrt(delta).
// Returns +inf when the recursion does not contract.
inline double pgd_limit_bound(double p, int B, double delta,
                              double contraction) {
  detail::check_p(p);
  if (B < 1) throw std::invalid_argument("pgd_limit_bound: B must be >= 1");
  if (!(delta >= 0.0))
    throw std::invalid_argument("pgd_limit_bound: delta < 0");
  if (!(contraction >= 0.0))
    throw std::invalid_argument("pgd_limit_bound: contraction < 0");
  if (contraction >= 1.0) return std::numeric_limits<double>::infinity();
  double drive =
      2.0 * (p + (B - 1) * p * p + 1.0) / (p - p * p) * std::sqrt(delta);
  return drive / (1.0 - contraction);
}

struct IterativeSuccess {
  double log_fail_mass = 0.0;
  bool vacuous = false;
  double success_probability_lower = 0.0;
};

// Success probability of the whole iterative analysis,
//   1 - 2^(4nBr) exp(-2 n lambda^2 delta^2 / (B^2 rho^4))
//     - (2^(2nBr) + 1) exp(-2 n delta^2 / (B^2 rho^4)).
// The codeword-counting factors grow like 2^(nBr), so at desk scales this is
// vacuous for any plausible parameters; evaluated in log space and flagged,
// never clamped.
inline IterativeSuccess pgd_success_probability(std::int64_t n, int B, double r,
                                                double delta, double rho,
                                                double lambda_free) {
  if (n < 1 || B < 1) throw std::invalid_argument("pgd_success: bad dims");
  if (!(r > 0.0) || !(rho > 0.0))
    throw std::invalid_argument("pgd_success: r and rho must be > 0");
  if (!(delta >= 0.0) || !(lambda_free >= 0.0))
    throw std::invalid_argument("pgd_success: delta and lambda must be >= 0");
  double nBr = static_cast<double>(n) * B * r;
  double scale = 2.0 * n * delta * delta /
                 (static_cast<double>(B) * B * rho * rho * rho * rho);
  double t1 = 4.0 * nBr * detail::kLn2 - scale * lambda_free * lambda_free;
  double t2 = detail::logsumexp(2.0 * nBr * detail::kLn2, 0.0) - scale;
  IterativeSuccess out;
  out.log_fail_mass = detail::logsumexp(t1, t2);
  out.vacuous = !(out.log_fail_mass < 0.0);
  out.success_probability_lower =
      out.vacuous ? 0.0 : -std::expm1(out.log_fail_mass);
  return out;
}

}  // namespace sci
