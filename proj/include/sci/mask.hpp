#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sci/data_cube.hpp"
#include "sci/errors.hpp"
#include "sci/rng.hpp"
#include "sci/scit_io.hpp"
#include "sci/text.hpp"

// Mask ensembles for coded-aperture video sensing, and the statistics of
// their dependence structure.
//
// Five models:
//   iid             entries Bernoulli(p), all independent
//   in_frame        binary Markov chain along the pixel scan inside each
//                   frame; frames independent
//   out_frame       binary Markov chain across frames at each pixel; pixels
//                   independent
//   signed_iid      iid with values -1/+1, P(+1) = p
//   bounded_iid     iid values in [0,1] with mean p and second moment q
//
// Both chains are started from their stationary law, so every entry has
// marginal P(on) = q0/(q0+q1) and the correlation decays as alpha^k with
// alpha = 1 - q0 - q1.

namespace sci {

enum class MaskVariant {
  iid_bernoulli,
  in_frame_markov,
  out_frame_markov,
  signed_iid,
  bounded_iid,
};

enum class BoundedKind { two_point, uniform_scaled };

struct MaskModel {
  MaskVariant variant = MaskVariant::iid_bernoulli;
  double p = 0.0;      // iid / signed marginal
  double q0 = 0.0;     // P(off -> on)
  double q1 = 0.0;     // P(on -> off)
  double q = 0.0;      // second moment, bounded model only
  BoundedKind bounded_kind = BoundedKind::two_point;

  static MaskModel iid(double p) {
    MaskModel m;
    m.variant = MaskVariant::iid_bernoulli;
    m.p = p;
    m.validate();
    return m;
  }
  static MaskModel in_frame(double q0, double q1) {
    MaskModel m;
    m.variant = MaskVariant::in_frame_markov;
    m.q0 = q0;
    m.q1 = q1;
    m.validate();
    return m;
  }
  static MaskModel out_frame(double q0, double q1) {
    MaskModel m;
    m.variant = MaskVariant::out_frame_markov;
    m.q0 = q0;
    m.q1 = q1;
    m.validate();
    return m;
  }
  static MaskModel make_signed(double p) {
    MaskModel m;
    m.variant = MaskVariant::signed_iid;
    m.p = p;
    m.validate();
    return m;
  }
  static MaskModel bounded(double p, double q,
                           BoundedKind kind = BoundedKind::two_point) {
    MaskModel m;
    m.variant = MaskVariant::bounded_iid;
    m.p = p;
    m.q = q;
    m.bounded_kind = kind;
    m.validate();
    return m;
  }

  bool is_markov() const {
    return variant == MaskVariant::in_frame_markov ||
           variant == MaskVariant::out_frame_markov;
  }

  // two-valued entries (0/1 or -1/+1)
  bool is_binary() const { return variant != MaskVariant::bounded_iid; }

  // P(entry is "on") regardless of model
  double marginal_p() const {
    return is_markov() ? q0 / (q0 + q1) : p;
  }

  // one-step correlation decay factor, Markov models only
  double alpha() const {
    if (!is_markov())
      throw std::invalid_argument("alpha: not a Markov mask model");
    return 1.0 - q0 - q1;
  }

  void validate() const {
    if (is_markov()) {
      if (!(q0 > 0.0 && q0 < 1.0 && q1 > 0.0 && q1 < 1.0))
        throw std::invalid_argument("mask model: q0,q1 must lie in (0,1)");
    } else if (variant == MaskVariant::bounded_iid) {
      if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("mask model: p must lie in (0,1)");
      if (!(q > p * p && q <= p))
        throw std::invalid_argument(
            "mask model: bounded second moment must satisfy p^2 < q <= p");
    } else {
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("mask model: p must lie in [0,1]");
    }
  }

  std::string name() const {
    switch (variant) {
      case MaskVariant::iid_bernoulli: return "iid";
      case MaskVariant::in_frame_markov: return "in_frame";
      case MaskVariant::out_frame_markov: return "out_frame";
      case MaskVariant::signed_iid: return "signed";
      case MaskVariant::bounded_iid: return "bounded";
    }
    return "?";
  }

  static MaskModel from_name(const std::string& name, double p, double q0,
                             double q1, double q,
                             BoundedKind kind = BoundedKind::two_point) {
    if (name == "iid") return iid(p);
    if (name == "in_frame") return in_frame(q0, q1);
    if (name == "out_frame") return out_frame(q0, q1);
    if (name == "signed") return make_signed(p);
    if (name == "bounded") return bounded(p, q, kind);
    throw std::invalid_argument("unknown mask model: " + name);
  }
};

struct MaskCube {
  int n1 = 0, n2 = 0, frames = 0;
  MaskModel model;
  std::uint64_t seed = 0;
  std::vector<double> values;  // flattening order, same as DataCube

  int n() const { return n1 * n2; }
  std::size_t size() const { return values.size(); }
  double at(int i1, int i2, int b) const {
    return values[(static_cast<std::size_t>(b) * n2 + i2) * n1 + i1];
  }
};

inline double stationary_p(double q0, double q1) {
  if (!(q0 > 0.0 && q1 > 0.0))
    throw std::invalid_argument("stationary_p: q0,q1 must be positive");
  return q0 / (q0 + q1);
}

namespace detail {
// substream namespaces, keeps per-frame and per-pixel chains disjoint
constexpr std::uint64_t kStreamFrame = 1;
constexpr std::uint64_t kStreamPixel = 2;
constexpr std::uint64_t kStreamNoise = 3;

// two-point distribution on {0, b} matching mean p and second moment q:
// b = q/p in (p,1], P(b) = p^2/q
struct TwoPoint {
  double b, w;
};
inline TwoPoint two_point_support(double p, double q) {
  return {q / p, p * p / q};
}

// uniform on [a,b] within [0,1] matching (p, q); infeasible moments throw
inline std::pair<double, double> uniform_support(double p, double q) {
  double s = std::sqrt(3.0 * (q - p * p));
  double a = p - s, b = p + s;
  if (a < -1e-12 || b > 1.0 + 1e-12)
    throw not_applicable(
        "bounded uniform_scaled: moments not realizable inside [0,1]");
  return {std::max(a, 0.0), std::min(b, 1.0)};
}
}  // namespace detail

// Draw a mask.  Chains get one RNG substream each (per frame for iid-like
// and in_frame models, per pixel for out_frame), so the sample is
// independent of visiting order and parallel schedules.
inline MaskCube sample_mask(const MaskModel& model, int n1, int n2, int frames,
                            std::uint64_t seed) {
  model.validate();
  if (n1 < 1 || n2 < 1 || frames < 1)
    throw std::invalid_argument("sample_mask: dimensions must be positive");
  MaskCube mask;
  mask.n1 = n1;
  mask.n2 = n2;
  mask.frames = frames;
  mask.model = model;
  mask.seed = seed;
  const int n = n1 * n2;
  mask.values.assign(static_cast<std::size_t>(n) * frames, 0.0);

  switch (model.variant) {
    case MaskVariant::iid_bernoulli:
    case MaskVariant::signed_iid: {
      double off = model.variant == MaskVariant::signed_iid ? -1.0 : 0.0;
      for (int b = 0; b < frames; ++b) {
        Pcg32 rng(substream_seed(seed, detail::kStreamFrame, b));
        for (int j = 0; j < n; ++j)
          mask.values[static_cast<std::size_t>(b) * n + j] =
              rng.next_bernoulli(model.p) ? 1.0 : off;
      }
      break;
    }
    case MaskVariant::bounded_iid: {
      if (model.bounded_kind == BoundedKind::two_point) {
        auto tp = detail::two_point_support(model.p, model.q);
        for (int b = 0; b < frames; ++b) {
          Pcg32 rng(substream_seed(seed, detail::kStreamFrame, b));
          for (int j = 0; j < n; ++j)
            mask.values[static_cast<std::size_t>(b) * n + j] =
                rng.next_bernoulli(tp.w) ? tp.b : 0.0;
        }
      } else {
        auto [a, bb] = detail::uniform_support(model.p, model.q);
        for (int b = 0; b < frames; ++b) {
          Pcg32 rng(substream_seed(seed, detail::kStreamFrame, b));
          for (int j = 0; j < n; ++j)
            mask.values[static_cast<std::size_t>(b) * n + j] =
                rng.next_uniform(a, bb);
        }
      }
      break;
    }
    case MaskVariant::in_frame_markov: {
      double ps = stationary_p(model.q0, model.q1);
      for (int b = 0; b < frames; ++b) {
        Pcg32 rng(substream_seed(seed, detail::kStreamFrame, b));
        bool on = rng.next_bernoulli(ps);
        mask.values[static_cast<std::size_t>(b) * n] = on ? 1.0 : 0.0;
        for (int j = 1; j < n; ++j) {
          on = on ? !rng.next_bernoulli(model.q1) : rng.next_bernoulli(model.q0);
          mask.values[static_cast<std::size_t>(b) * n + j] = on ? 1.0 : 0.0;
        }
      }
      break;
    }
    case MaskVariant::out_frame_markov: {
      double ps = stationary_p(model.q0, model.q1);
      for (int j = 0; j < n; ++j) {
        Pcg32 rng(substream_seed(seed, detail::kStreamPixel, j));
        bool on = rng.next_bernoulli(ps);
        mask.values[j] = on ? 1.0 : 0.0;
        for (int b = 1; b < frames; ++b) {
          on = on ? !rng.next_bernoulli(model.q1) : rng.next_bernoulli(model.q0);
          mask.values[static_cast<std::size_t>(b) * n + j] = on ? 1.0 : 0.0;
        }
      }
      break;
    }
  }
  return mask;
}

// --- dependence statistics --------------------------------------------------

// Exact mixing coefficient of the B-coordinate product chain: the total
// variation between one-step laws conditioned on the all-off and all-on
// states, grouped by the number of off coordinates,
//   1/2 sum_k C(B,k) | (1-q0)^k q0^(B-k) - q1^k (1-q1)^(B-k) |.
// Vanishes exactly when q0 + q1 = 1 (the chain is then iid).
inline double theta1_closed_form(double q0, double q1, int B) {
  if (!(q0 > 0.0 && q0 < 1.0 && q1 > 0.0 && q1 < 1.0))
    throw std::invalid_argument("theta1: q0,q1 must lie in (0,1)");
  if (B < 1) throw std::invalid_argument("theta1: B must be >= 1");
  // independent chain: every term cancels; return the exact limit instead of
  // pow roundoff
  if (q0 + q1 == 1.0) return 0.0;
  double sum = 0.0;
  double binom = 1.0;  // C(B,k), updated iteratively
  for (int k = 0; k <= B; ++k) {
    double t0 = std::pow(1.0 - q0, k) * std::pow(q0, B - k);
    double t1 = std::pow(q1, k) * std::pow(1.0 - q1, B - k);
    sum += binom * std::fabs(t0 - t1);
    binom = binom * (B - k) / (k + 1.0);
  }
  return 0.5 * sum;
}

namespace detail {

// P(next = t | current = s) for the B-coordinate product chain
inline double chain_row_prob(double q0, double q1, int B, std::uint32_t s,
                             std::uint32_t t) {
  double pr = 1.0;
  for (int i = 0; i < B; ++i) {
    bool on = (s >> i) & 1u;
    double p_on = on ? 1.0 - q1 : q0;
    pr *= ((t >> i) & 1u) ? p_on : 1.0 - p_on;
  }
  return pr;
}

inline double chain_row_tv(double q0, double q1, int B, std::uint32_t s1,
                           std::uint32_t s2) {
  const std::uint32_t S = 1u << B;
  double acc = 0.0;
  for (std::uint32_t t = 0; t < S; ++t)
    acc += std::fabs(chain_row_prob(q0, q1, B, s1, t) -
                     chain_row_prob(q0, q1, B, s2, t));
  return 0.5 * acc;
}

}  // namespace detail

// Enumeration check of the same quantity: the TV distance between the rows
// conditioned on all-off and all-on, summed directly over all 2^B next
// states instead of grouped by binomial coefficients.
inline double theta1_bruteforce(double q0, double q1, int B) {
  if (!(q0 > 0.0 && q0 < 1.0 && q1 > 0.0 && q1 < 1.0))
    throw std::invalid_argument("theta1: q0,q1 must lie in (0,1)");
  if (B < 1 || B > 16)
    throw std::invalid_argument("theta1_bruteforce: need 1 <= B <= 16");
  if (q0 + q1 == 1.0) return 0.0;
  return detail::chain_row_tv(q0, q1, B, 0u, (1u << B) - 1u);
}

// True contraction coefficient: the sup of the row TV over every pair of
// conditioning states.  This can exceed theta1 at strongly asymmetric
// transition rates, where the sup moves to a pair with mixed flip
// orientations (e.g. q0 = 0.1, q1 = 0.25, B = 3); theta1 keeps the
// all-off/all-on value that the downstream guarantees are stated with, and
// this scan exists so the gap is observable rather than assumed away.
inline double theta1_pair_sup(double q0, double q1, int B) {
  if (!(q0 > 0.0 && q0 < 1.0 && q1 > 0.0 && q1 < 1.0))
    throw std::invalid_argument("theta1: q0,q1 must lie in (0,1)");
  if (B < 1 || B > 8)
    throw std::invalid_argument("theta1_pair_sup: need 1 <= B <= 8");
  if (q0 + q1 == 1.0) return 0.0;
  const std::uint32_t S = 1u << B;
  double sup = 0.0;
  for (std::uint32_t s1 = 0; s1 < S; ++s1)
    for (std::uint32_t s2 = s1 + 1; s2 < S; ++s2)
      sup = std::max(sup, detail::chain_row_tv(q0, q1, B, s1, s2));
  return sup;
}

// Correlation matrix of one mask chain sampled at B points:
// Lambda_ij = alpha^|i-j|, symmetric Toeplitz.
inline Eigen::MatrixXd lambda_matrix(double alpha, int B) {
  if (B < 1 || B > 64)
    throw std::invalid_argument("lambda_matrix: need 1 <= B <= 64");
  if (!(std::fabs(alpha) < 1.0))
    throw std::invalid_argument("lambda_matrix: need |alpha| < 1");
  Eigen::MatrixXd m(B, B);
  for (int i = 0; i < B; ++i)
    for (int j = 0; j < B; ++j) m(i, j) = std::pow(alpha, std::abs(i - j));
  return m;
}

// Smallest and largest eigenvalue of a symmetric matrix (dense solve; sizes
// here are at most 64 x 64).
inline std::pair<double, double> eigen_extrema(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("eigen_extrema: matrix must be square");
  if (m.rows() > 64)
    throw std::invalid_argument("eigen_extrema: matrix larger than 64 x 64");
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("eigen_extrema: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigen_extrema: eigensolver failed");
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

struct GershgorinInterval {
  double lo = 0.0;
  double hi = 0.0;
  // lo is positive-informative only when alpha < 1/3
  bool valid = false;
};

// Disc bound for the Toeplitz correlation matrix, uniform in B:
// every eigenvalue lies in [1 - 2a/(1-a), 1 + 2a/(1-a)].
inline GershgorinInterval gershgorin_bounds(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("gershgorin_bounds: need 0 <= alpha < 1");
  GershgorinInterval g;
  g.lo = (1.0 - 3.0 * alpha) / (1.0 - alpha);
  g.hi = (1.0 + alpha) / (1.0 - alpha);
  g.valid = alpha < 1.0 / 3.0;
  return g;
}

struct MarkovStats {
  double q0 = 0.0, q1 = 0.0;
  int B = 0;
  double rho = 0.0;
  double alpha = 0.0;
  double stationary_p = 0.0;
  double theta1 = 0.0;
  Eigen::MatrixXd lambda;
  double lambda_min = 0.0, lambda_max = 0.0;
  GershgorinInterval gershgorin;
  // geometric series cap sum_k theta1^k <= 1/(1-theta1)
  double m_n_bound = 0.0;
  // Lipschitz constant of the per-pixel energy w.r.t. one chain flip
  double lipschitz_c = 0.0;
};

inline MarkovStats markov_stats(double q0, double q1, int B, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("markov_stats: rho <= 0");
  MarkovStats s;
  s.q0 = q0;
  s.q1 = q1;
  s.B = B;
  s.rho = rho;
  s.alpha = 1.0 - q0 - q1;
  s.stationary_p = stationary_p(q0, q1);
  s.theta1 = theta1_closed_form(q0, q1, B);
  s.lambda = lambda_matrix(s.alpha, B);
  auto [lo, hi] = eigen_extrema(s.lambda);
  s.lambda_min = lo;
  s.lambda_max = hi;
  s.gershgorin = gershgorin_bounds(std::fabs(s.alpha));
  s.m_n_bound = s.theta1 < 1.0 ? 1.0 / (1.0 - s.theta1)
                               : std::numeric_limits<double>::infinity();
  s.lipschitz_c = 2.0 * B * rho * rho;
  return s;
}

// --- empirical checks -------------------------------------------------------

struct EmpiricalStats {
  double one_fraction = 0.0;
  // transition counts along the model's chain axis
  long long from_off = 0, from_on = 0;
  long long off_to_on = 0, on_to_off = 0;
  double transition_freq_01 = 0.0;  // NaN when no off states observed
  double transition_freq_10 = 0.0;  // NaN when no on states observed
  char scan_axis = 'j';             // 'j' inside frames, 'i' across frames
};

// On-fraction and transition frequencies along the scan axis matching the
// model's dependence direction.  Two-valued masks only.
inline EmpiricalStats empirical_stats(const MaskCube& mask) {
  if (!mask.model.is_binary())
    throw std::invalid_argument("empirical_stats: mask is not two-valued");
  EmpiricalStats st;
  const int n = mask.n();
  const int B = mask.frames;
  auto on = [&](std::size_t idx) { return mask.values[idx] > 0.0; };

  long long ones = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (on(i)) ++ones;
  st.one_fraction = static_cast<double>(ones) / mask.size();

  if (mask.model.variant == MaskVariant::out_frame_markov) {
    st.scan_axis = 'i';
    for (int j = 0; j < n; ++j)
      for (int b = 0; b + 1 < B; ++b) {
        bool a = on(static_cast<std::size_t>(b) * n + j);
        bool c = on(static_cast<std::size_t>(b + 1) * n + j);
        if (a) {
          ++st.from_on;
          if (!c) ++st.on_to_off;
        } else {
          ++st.from_off;
          if (c) ++st.off_to_on;
        }
      }
  } else {
    st.scan_axis = 'j';
    for (int b = 0; b < B; ++b)
      for (int j = 0; j + 1 < n; ++j) {
        bool a = on(static_cast<std::size_t>(b) * n + j);
        bool c = on(static_cast<std::size_t>(b) * n + j + 1);
        if (a) {
          ++st.from_on;
          if (!c) ++st.on_to_off;
        } else {
          ++st.from_off;
          if (c) ++st.off_to_on;
        }
      }
  }
  double nan = std::numeric_limits<double>::quiet_NaN();
  st.transition_freq_01 =
      st.from_off > 0 ? static_cast<double>(st.off_to_on) / st.from_off : nan;
  st.transition_freq_10 =
      st.from_on > 0 ? static_cast<double>(st.on_to_off) / st.from_on : nan;
  return st;
}

// --- persistence ------------------------------------------------------------

// Binary and signed masks go out as u8 (signed stored as 0/1, recovered from
// the sidecar); bounded masks as f32.  The sidecar lives next to the tensor
// with extension .meta.
inline void save_mask(const std::string& path, const MaskCube& mask) {
  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("model", mask.model.name());
  meta.emplace_back("p", format_double(mask.model.marginal_p()));
  meta.emplace_back("q0", format_double(mask.model.q0));
  meta.emplace_back("q1", format_double(mask.model.q1));
  if (mask.model.variant == MaskVariant::bounded_iid) {
    meta.emplace_back("q", format_double(mask.model.q));
    meta.emplace_back("bounded_kind",
                      mask.model.bounded_kind == BoundedKind::two_point
                          ? "two_point"
                          : "uniform_scaled");
  }
  meta.emplace_back("seed", std::to_string(mask.seed));

  if (mask.model.is_binary()) {
    std::vector<std::uint8_t> payload(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
      payload[i] = mask.values[i] > 0.0 ? 1 : 0;
    save_scit_u8(path, mask.n1, mask.n2, mask.frames, payload);
  } else {
    std::vector<float> payload(mask.values.begin(), mask.values.end());
    save_scit_f32(path, mask.n1, mask.n2, mask.frames, payload);
  }
  save_meta(meta_path_for(path), meta);
}

inline MaskCube load_mask(const std::string& path) {
  ScitData d = load_scit(path);
  auto meta = load_meta(meta_path_for(path));
  auto need = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end())
      throw io_error(std::string("mask meta: missing key ") + key);
    return it->second;
  };
  const std::string model_name = need("model");
  BoundedKind kind = BoundedKind::two_point;
  double q = 0.0;
  if (model_name == "bounded") {
    q = parse_double(need("q"), "q");
    if (need("bounded_kind") == "uniform_scaled")
      kind = BoundedKind::uniform_scaled;
  }
  MaskModel model = MaskModel::from_name(
      model_name, parse_double(need("p"), "p"), parse_double(need("q0"), "q0"),
      parse_double(need("q1"), "q1"), q, kind);

  MaskCube mask;
  mask.n1 = static_cast<int>(d.n1);
  mask.n2 = static_cast<int>(d.n2);
  mask.frames = static_cast<int>(d.frames);
  mask.model = model;
  mask.seed = parse_u64(need("seed"), "seed");
  mask.values.resize(static_cast<std::size_t>(d.n1) * d.n2 * d.frames);
  if (model.is_binary()) {
    if (d.dtype != ScitDtype::u8)
      throw io_error("load_mask: binary mask must have u8 payload");
    double off = model.variant == MaskVariant::signed_iid ? -1.0 : 0.0;
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
      if (d.u8[i] > 1) throw io_error("load_mask: non-binary u8 payload");
      mask.values[i] = d.u8[i] ? 1.0 : off;
    }
  } else {
    if (d.dtype != ScitDtype::f32)
      throw io_error("load_mask: bounded mask must have f32 payload");
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
      if (d.f32[i] < 0.0f || d.f32[i] > 1.0f)
        throw io_error("load_mask: bounded mask value outside [0,1]");
      mask.values[i] = d.f32[i];
    }
  }
  return mask;
}

}  // namespace sci
