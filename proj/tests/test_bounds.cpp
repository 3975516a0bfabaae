#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sci/bounds.hpp"
#include "sci/errors.hpp"
#include "sci/mask.hpp"

using namespace sci;

namespace {

BoundParams base() {
  BoundParams c;
  c.n = 1024;
  c.B = 4;
  c.r = 1.0;
  c.delta = 0.01;
  c.rho = 1.0;
  c.eta = 1.0;
  c.epsilon = 0.05;
  return c;
}

}  // namespace

TEST_CASE("baseline guarantee matches its displayed expression") {
  BoundParams c = base();
  double p = 0.4;
  BoundReport rep = iid_bound(p, c);
  double term_d = (1.0 + c.B * p / (1.0 - p)) * c.delta;
  double term_f = c.rho * c.rho * c.B / (p - p * p) *
                  std::sqrt((c.B + c.eta) * 2.0 * c.r / c.n);
  CHECK(rep.term_distortion == Catch::Approx(term_d).epsilon(1e-14));
  CHECK(rep.term_fluctuation == Catch::Approx(term_f).epsilon(1e-14));
  CHECK(rep.bound_value == Catch::Approx(term_d + term_f).epsilon(1e-14));
  CHECK(rep.convention == "eta");
  // failure mass 2 exp(-eta r)
  CHECK(rep.success_probability_lower ==
        Catch::Approx(1.0 - 2.0 * std::exp(-c.eta * c.r)).epsilon(1e-12));
  CHECK_FALSE(rep.vacuous);
}

TEST_CASE("baseline guarantee rejects degenerate p") {
  BoundParams c = base();
  CHECK_THROWS_AS(iid_bound(0.0, c), std::invalid_argument);
  CHECK_THROWS_AS(iid_bound(1.0, c), std::invalid_argument);
}

TEST_CASE("tiny eta makes the failure mass vacuous") {
  BoundParams c = base();
  c.eta = 1e-9;
  c.r = 1.0;
  BoundReport rep = iid_bound(0.4, c);  // 2 exp(-eta r) ~= 2 > 1
  CHECK(rep.vacuous);
  CHECK(rep.success_probability_lower == 0.0);
}

TEST_CASE("best p solves the stationarity condition") {
  BoundParams c = base();
  double ps = optimal_p(c);
  CHECK(ps > 0.0);
  CHECK(ps < 0.5);
  CHECK(std::fabs(iid_bound_derivative(ps, c)) < 1e-8);

  // distortion-free codes push the best p to one half
  BoundParams nf = base();
  nf.delta = 0.0;
  CHECK(optimal_p(nf) == Catch::Approx(0.5).epsilon(1e-14));

  // closed form against a local grid
  double best = iid_bound(ps, c).bound_value;
  for (double dp : {-1e-3, 1e-3})
    CHECK(best <= iid_bound(ps + dp, c).bound_value + 1e-12);
}

TEST_CASE("frame budget frozen case") {
  BoundParams c;
  c.n = 8;
  c.B = 1;  // unused by the budget itself
  c.r = 1.0;
  c.delta = 1.0;
  c.rho = 1.0;
  c.kappa = 1.0;
  FrameBudget fb = max_frames(0.5, c);
  // (kappa delta / rho^2)^(2/3) (n/r)^(1/3) = 8^(1/3) = 2
  CHECK(fb.max_frames == 2);
  // (1 + B p/(1-p) + 2 kappa/(p-p^2)) delta at B=2, p=1/2
  CHECK(fb.bound_at_max == Catch::Approx(11.0).epsilon(1e-12));
  CHECK(fb.success_probability_lower ==
        Catch::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS_AS([&] { BoundParams z = c; z.kappa = 0.0; return max_frames(0.5, z); }(),
                  std::invalid_argument);
}

TEST_CASE("sign-flip variant collapses at p = 1/2") {
  BoundParams c = base();
  BoundReport rep = signed_bound(0.5, 0.05, c);
  // (1 - B + B/(4(p-p^2))) delta + rho^2 B eps / (4(p-p^2)) = delta + rho^2 B eps
  CHECK(rep.bound_value == Catch::Approx(0.01 + 0.2).epsilon(1e-12));
  CHECK(rep.convention == "epsilon");

  BoundReport off = signed_bound(0.3, 0.05, c);
  double denom = 4.0 * (0.3 - 0.09);
  double expect = (1.0 - 4.0 + 4.0 / denom) * 0.01 + 4.0 * 0.05 / denom;
  CHECK(off.bound_value == Catch::Approx(expect).epsilon(1e-13));
}

TEST_CASE("sign-flip failure mass counts the codebook") {
  BoundParams c = base();
  BoundReport rep = signed_bound(0.5, 0.05, c);
  // 2^(Br+1) exp(-n eps^2 / 2): log = (Br+1) ln2 - n eps^2/2
  double log_fail = (c.B * c.r + 1.0) * std::log(2.0) - c.n * 0.05 * 0.05 / 2.0;
  CHECK(rep.log_fail_mass == Catch::Approx(log_fail).epsilon(1e-12));
}

TEST_CASE("bounded-entry variant needs p^2 < q <= p") {
  BoundParams c = base();
  BoundReport rep = bounded_bound(0.4, 0.2, 0.05, c);
  double g = 0.2 - 0.16;
  double expect = (1.0 + c.B * 0.16 / g) * c.delta + c.rho * c.rho * c.B * 0.05 / g;
  CHECK(rep.bound_value == Catch::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(bounded_bound(0.4, 0.15, 0.05, c), not_applicable);
  CHECK_THROWS_AS(bounded_bound(0.4, 0.45, 0.05, c), std::invalid_argument);
}

TEST_CASE("within-frame chain bound and its normalization") {
  BoundParams c = base();
  BoundReport rep = in_frame_bound(0.4, 0.05, 0.5, c);
  double nB = static_cast<double>(c.n) * c.B;
  double expect = (1.0 + c.B * 0.4 / 0.6) * (c.delta / nB) + 0.05 / (0.4 * 0.6);
  CHECK(rep.bound_value == Catch::Approx(expect).epsilon(1e-12));
  CHECK(rep.notes.find("n") != std::string::npos);
  CHECK_THROWS_AS(in_frame_bound(0.4, 0.05, 1.0, c), not_applicable);

  // (2^(Br)+1) exp(-(n eps^2/32)(1-theta1)^2) stays above one here
  CHECK(rep.vacuous);
}

TEST_CASE("cross-frame chain bound uses the eigen range") {
  BoundParams c = base();
  BoundReport rep = out_frame_bound(0.4, 0.05, 0.5, 1.5, c);
  double nB = static_cast<double>(c.n) * c.B;
  double expect = ((1.5 * 0.6 + 0.4 * c.B) / (0.5 * 0.6)) * (c.delta / nB) +
                  0.05 / (0.5 * 0.4 * 0.6);
  CHECK(rep.bound_value == Catch::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(out_frame_bound(0.4, 0.05, 0.0, 1.5, c), not_applicable);
  CHECK_THROWS_AS(out_frame_bound(0.4, 0.05, -0.2, 1.5, c), not_applicable);
  CHECK_THROWS_AS(out_frame_bound(0.4, 0.05, 1.5, 0.5, c),
                  std::invalid_argument);
}

TEST_CASE("disc-surrogate variant") {
  BoundParams c = base();
  // alpha = 0 has both surrogates at 1, matching the uncorrelated eigen range
  BoundReport g0 = out_frame_gershgorin_bound(0.4, 0.05, 0.0, c);
  BoundReport ex = out_frame_bound(0.4, 0.05, 1.0, 1.0, c);
  CHECK(g0.bound_value == ex.bound_value);

  BoundReport g = out_frame_gershgorin_bound(0.4, 0.05, 0.2, c);
  BoundReport e = out_frame_bound(0.4, 0.05, 0.5, 1.5, c);
  CHECK(g.bound_value == Catch::Approx(e.bound_value).epsilon(1e-12));
  CHECK(g.notes.find("surrogate") != std::string::npos);
  CHECK_THROWS_AS(out_frame_gershgorin_bound(0.4, 0.05, 0.34, c),
                  not_applicable);
  CHECK_THROWS_AS(out_frame_gershgorin_bound(0.4, 0.05, -0.1, c),
                  std::invalid_argument);
}

TEST_CASE("surrogates never beat exact extrema") {
  BoundParams c = base();
  for (double alpha : {0.05, 0.15, 0.25})
    for (int B : {2, 4, 8}) {
      BoundParams cb = c;
      cb.B = B;
      auto [lo, hi] = eigen_extrema(lambda_matrix(alpha, B));
      double exact = out_frame_bound(0.4, 0.05, lo, hi, cb).bound_value;
      double disc = out_frame_gershgorin_bound(0.4, 0.05, alpha, cb).bound_value;
      CHECK(disc >= exact - 1e-12);
    }
}

TEST_CASE("iteration gain and fixed point") {
  CHECK(pgd_contraction(0.06, 0.4) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(pgd_limit_bound(0.4, 2, 0.25, 0.5) == Catch::Approx(13.0).epsilon(1e-12));
  CHECK(std::isinf(pgd_limit_bound(0.4, 2, 0.25, 1.0)));
  CHECK(std::isinf(pgd_limit_bound(0.4, 2, 0.25, 1.7)));
  CHECK_THROWS_AS(pgd_contraction(-0.1, 0.4), std::invalid_argument);
}

TEST_CASE("iterative success mass is vacuous at desk scale") {
  IterativeSuccess s = pgd_success_probability(4096, 4, 1.0, 0.01, 1.0, 0.05);
  CHECK(s.vacuous);
  CHECK(s.success_probability_lower == 0.0);
  CHECK(s.log_fail_mass > 0.0);
}

TEST_CASE("iterative success becomes meaningful for huge n over B r") {
  // push n up and the rate down until the codeword count loses
  IterativeSuccess s =
      pgd_success_probability(2000000, 2, 5e-7, 0.002, 1.0, 1.5);
  CHECK_FALSE(s.vacuous);
  CHECK(s.success_probability_lower > 0.5);
  CHECK(s.success_probability_lower < 1.0);
}

TEST_CASE("fluctuation term under the auto convention") {
  // rho^2 B /(p-p^2) sqrt(2 r (B+eta)/n)
  BoundParams c = base();
  BoundReport rep = iid_bound(0.4, c);
  CHECK(rep.term_fluctuation ==
        Catch::Approx(1.0 * c.B / (0.4 * 0.6) *
                      std::sqrt(2.0 * c.r * (c.B + c.eta) / c.n))
            .epsilon(1e-12));
}
