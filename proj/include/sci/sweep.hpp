#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sci/bounds.hpp"
#include "sci/codebook.hpp"
#include "sci/data_cube.hpp"
#include "sci/mask.hpp"
#include "sci/recover.hpp"
#include "sci/rng.hpp"
#include "sci/sensing.hpp"

// Parameter sweeps: one experiment axis, seeded trials per grid point,
// mean/std aggregation.  Results are plain rows so the CLI can dump them to
// CSV/SVG without further computation.

namespace sci {

enum class SweepAxis { p, q0q1_pair, frames, alpha };
enum class SweepMetric { psnr, bound_value, mse_split };

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "p") return SweepAxis::p;
  if (s == "q0q1_pair") return SweepAxis::q0q1_pair;
  if (s == "B") return SweepAxis::frames;
  if (s == "alpha") return SweepAxis::alpha;
  throw std::invalid_argument("unknown sweep axis: " + s);
}

inline SweepMetric sweep_metric_from_string(const std::string& s) {
  if (s == "psnr") return SweepMetric::psnr;
  if (s == "bound_value") return SweepMetric::bound_value;
  if (s == "mse_split") return SweepMetric::mse_split;
  throw std::invalid_argument("unknown sweep metric: " + s);
}

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::p: return "p";
    case SweepAxis::q0q1_pair: return "q0q1_pair";
    case SweepAxis::frames: return "B";
    case SweepAxis::alpha: return "alpha";
  }
  return "?";
}

inline std::string to_string(SweepMetric m) {
  switch (m) {
    case SweepMetric::psnr: return "psnr";
    case SweepMetric::bound_value: return "bound_value";
    case SweepMetric::mse_split: return "mse_split";
  }
  return "?";
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::p;
  SweepMetric metric = SweepMetric::psnr;
  std::vector<double> grid;  // axis p: probabilities; B: frame counts; alpha: correlations
  std::vector<std::pair<double, double>> pair_grid;  // axis q0q1_pair only
  MaskModel base_model = MaskModel::iid(0.4);
  long trials = 5;
  std::uint64_t base_seed = 1;

  // test scene (ignored when `input` is set)
  SynthKind kind = SynthKind::moving_square;
  int n1 = 64, n2 = 64, frames = 8;
  double rho = 1.0;
  std::uint64_t video_seed = 91;
  const DataCube* input = nullptr;

  // recovery settings for psnr / mse_split
  int levels = 0;          // > 0 selects a quantizer-codebook projector
  double tv_weight = -1;   // < 0 means 0.03 * rho
  double mu = 0.0;         // <= 0 means the per-projector default
  int max_iter = 60;
  double tol = 0.0;        // 0 disables early stopping (fixed iteration count)
  double noise_sigma = 0.0;

  // bound_value settings (n and B are taken from the grid point)
  BoundParams bound_params{};
};

struct SweepRow {
  double axis_value = 0.0;
  double mean_metric = 0.0;
  double std_metric = 0.0;
  long trials = 0;
  // second channel: final residual for psnr, success probability for
  // bound_value, the mean-frame term for mse_split
  double mean_secondary = 0.0;
  double std_secondary = 0.0;
  // resolved model at this point, echoed for provenance
  double p = 0.0, q0 = 0.0, q1 = 0.0;
  int B = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::string, std::string>> provenance;
};

namespace detail {

// grid point -> concrete mask model + frame count
struct ResolvedPoint {
  double axis_value;
  MaskModel model;
  int frames;
};

inline MaskModel with_marginal(const MaskModel& base, double p) {
  MaskModel m = base;
  switch (base.variant) {
    case MaskVariant::iid_bernoulli:
    case MaskVariant::signed_iid:
      m.p = p;
      break;
    case MaskVariant::bounded_iid:
      m.p = p;
      // keep the second-moment gap q - p^2 proportional to the binary one
      m.q = p * p + (base.q - base.p * base.p) / (base.p - base.p * base.p) *
                        (p - p * p);
      break;
    case MaskVariant::in_frame_markov:
    case MaskVariant::out_frame_markov: {
      // hold alpha fixed, move the stationary marginal
      double a = 1.0 - base.q0 - base.q1;
      m.q0 = (1.0 - a) * p;
      m.q1 = (1.0 - a) * (1.0 - p);
      break;
    }
  }
  m.validate();
  return m;
}

inline MaskModel with_alpha(const MaskModel& base, double alpha) {
  if (!base.is_markov())
    throw std::invalid_argument("alpha axis needs a chain-based mask model");
  double p = base.marginal_p();
  MaskModel m = base;
  m.q0 = (1.0 - alpha) * p;
  m.q1 = (1.0 - alpha) * (1.0 - p);
  m.validate();
  return m;
}

inline std::vector<ResolvedPoint> resolve_points(const SweepSpec& spec) {
  std::vector<ResolvedPoint> pts;
  if (spec.axis == SweepAxis::q0q1_pair) {
    if (spec.pair_grid.empty())
      throw std::invalid_argument("sweep: empty pair grid");
    if (!spec.base_model.is_markov())
      throw std::invalid_argument("q0q1_pair axis needs a chain-based model");
    for (auto [q0, q1] : spec.pair_grid) {
      MaskModel m = spec.base_model;
      m.q0 = q0;
      m.q1 = q1;
      m.validate();
      pts.push_back({q0, m, spec.frames});
    }
    return pts;
  }
  if (spec.grid.empty()) throw std::invalid_argument("sweep: empty grid");
  for (double g : spec.grid) {
    switch (spec.axis) {
      case SweepAxis::p:
        pts.push_back({g, with_marginal(spec.base_model, g), spec.frames});
        break;
      case SweepAxis::frames: {
        int B = static_cast<int>(std::llround(g));
        if (B < 1 || std::fabs(g - B) > 1e-9)
          throw std::invalid_argument("sweep: B grid values must be integers");
        pts.push_back({g, spec.base_model, B});
        break;
      }
      case SweepAxis::alpha:
        pts.push_back({g, with_alpha(spec.base_model, g), spec.frames});
        break;
      case SweepAxis::q0q1_pair:
        break;  // handled above
    }
  }
  return pts;
}

inline std::uint64_t trial_seed(std::uint64_t base, double axis_value,
                                long trial) {
  return substream_seed(base, std::bit_cast<std::uint64_t>(axis_value),
                        static_cast<std::uint64_t>(trial));
}

// step size when the caller does not pin one: the codebook path uses the
// variance-normalized 1/(p-p^2); the denoiser path needs the smaller 1/(B p)
// to keep the un-projected iteration from amplifying heavily covered pixels
inline double auto_mu(const SweepSpec& spec, double p, int B) {
  if (spec.mu > 0.0) return spec.mu;
  if (spec.levels > 0) return default_mu(p);
  return 1.0 / (B * p);
}

struct TrialOutcome {
  double primary = 0.0;
  double secondary = 0.0;
};

inline TrialOutcome run_recovery_trial(const SweepSpec& spec,
                                       const ResolvedPoint& pt,
                                       const DataCube& truth, long trial) {
  std::uint64_t seed = trial_seed(spec.base_seed, pt.axis_value, trial);
  MaskCube mask = sample_mask(pt.model, truth.n1(), truth.n2(), truth.frames(),
                              substream_seed(seed, 101));
  SensingOperator op(std::move(mask));
  Measurement y = op.measure(truth);
  if (spec.noise_sigma > 0.0)
    y = add_noise(y, spec.noise_sigma, substream_seed(seed, 102));

  Projector proj;
  if (spec.levels > 0) {
    proj = CodebookProjector{build_quantizer_codebook(
        truth.n1(), truth.n2(), truth.frames(), spec.levels, truth.rho())};
  } else {
    double w = spec.tv_weight >= 0.0 ? spec.tv_weight : 0.03 * truth.rho();
    proj = TvProjector{w};
  }

  PgdConfig cfg;
  cfg.mu = auto_mu(spec, pt.model.marginal_p(), truth.frames());
  cfg.max_iter = spec.max_iter;
  cfg.tol = spec.tol;
  cfg.rho = truth.rho();
  RecoveryResult res = pgd_recover(y, op, proj, cfg, &truth);

  TrialOutcome out;
  if (spec.metric == SweepMetric::psnr) {
    out.primary = psnr(truth, res.x_hat).psnr_db;
    out.secondary = res.residual_trace.empty() ? 0.0
                                               : res.residual_trace.back();
  } else {  // mse_split
    double p = pt.model.marginal_p();
    const auto& xv = truth.values();
    const auto& ev = res.x_hat.values();
    double cube_mse = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      double d = xv[i] - ev[i];
      cube_mse += d * d;
    }
    cube_mse /= static_cast<double>(xv.size());
    FrameImage mt = mean_frame(truth), me = mean_frame(res.x_hat);
    double mean_mse = 0.0;
    for (std::size_t i = 0; i < mt.values.size(); ++i) {
      double d = mt.values[i] - me.values[i];
      mean_mse += d * d;
    }
    mean_mse /= static_cast<double>(mt.values.size());
    out.primary = (1.0 - p) * cube_mse;  // fluctuation part
    out.secondary = p * mean_mse;        // mean-frame part
  }
  return out;
}

inline TrialOutcome run_bound_point(const SweepSpec& spec,
                                    const ResolvedPoint& pt) {
  BoundParams bp = spec.bound_params;
  if (bp.n <= 0) bp.n = static_cast<std::int64_t>(spec.n1) * spec.n2;
  bp.B = pt.frames;
  const MaskModel& m = pt.model;
  BoundReport rep;
  switch (m.variant) {
    case MaskVariant::iid_bernoulli:
      rep = iid_bound(m.p, bp);
      break;
    case MaskVariant::signed_iid:
      rep = signed_bound(m.p, bp.epsilon, bp);
      break;
    case MaskVariant::bounded_iid:
      rep = bounded_bound(m.p, m.q, bp.epsilon, bp);
      break;
    case MaskVariant::in_frame_markov:
      rep = in_frame_bound(m.marginal_p(), bp.epsilon,
                           theta1_closed_form(m.q0, m.q1, pt.frames), bp);
      break;
    case MaskVariant::out_frame_markov: {
      auto [lo, hi] = eigen_extrema(lambda_matrix(m.alpha(), pt.frames));
      rep = out_frame_bound(m.marginal_p(), bp.epsilon, lo, hi, bp);
      break;
    }
  }
  return {rep.bound_value, rep.success_probability_lower};
}

}  // namespace detail

inline SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  if (spec.input != nullptr && spec.axis == SweepAxis::frames)
    throw std::invalid_argument(
        "sweep: the B axis resizes the scene, so it needs a synthetic input");
  auto points = detail::resolve_points(spec);
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].axis_value < points[i - 1].axis_value &&
        spec.axis != SweepAxis::q0q1_pair)
      throw std::invalid_argument("sweep: grid must be sorted");

  const bool needs_recovery = spec.metric != SweepMetric::bound_value;
  DataCube scene = DataCube::zeros(1, 1, 1, 1.0);
  const DataCube* truth = spec.input;
  SweepResult result;

  for (const auto& pt : points) {
    if (needs_recovery && truth == nullptr) {
      scene = synth_video(spec.kind, spec.n1, spec.n2, pt.frames,
                          spec.video_seed, spec.rho);
    }
    const DataCube& x = truth ? *truth : scene;
    long trials = spec.metric == SweepMetric::bound_value ? 1 : spec.trials;

    double s1 = 0.0, s2 = 0.0, t1 = 0.0, t2 = 0.0;
    for (long t = 0; t < trials; ++t) {
      detail::TrialOutcome o =
          needs_recovery ? detail::run_recovery_trial(spec, pt, x, t)
                         : detail::run_bound_point(spec, pt);
      s1 += o.primary;
      s2 += o.primary * o.primary;
      t1 += o.secondary;
      t2 += o.secondary * o.secondary;
    }
    SweepRow row;
    row.axis_value = pt.axis_value;
    row.trials = trials;
    row.mean_metric = s1 / trials;
    row.mean_secondary = t1 / trials;
    double v1 = s2 / trials - row.mean_metric * row.mean_metric;
    double v2 = t2 / trials - row.mean_secondary * row.mean_secondary;
    row.std_metric = std::sqrt(std::max(v1, 0.0));
    row.std_secondary = std::sqrt(std::max(v2, 0.0));
    row.p = pt.model.marginal_p();
    if (pt.model.is_markov()) {
      row.q0 = pt.model.q0;
      row.q1 = pt.model.q1;
    }
    row.B = pt.frames;
    result.rows.push_back(row);
  }

  auto& prov = result.provenance;
  prov.emplace_back("axis", to_string(spec.axis));
  prov.emplace_back("metric", to_string(spec.metric));
  prov.emplace_back("model", spec.base_model.name());
  prov.emplace_back("trials", std::to_string(spec.trials));
  prov.emplace_back("base_seed", std::to_string(spec.base_seed));
  prov.emplace_back("video_seed", std::to_string(spec.video_seed));
  prov.emplace_back("dims", std::to_string(spec.n1) + "x" +
                                std::to_string(spec.n2) + "x" +
                                std::to_string(spec.frames));
  return result;
}

}  // namespace sci
