// sci: masked-snapshot imaging workbench.
//
// Subcommands cover the full pipeline: synthesize a test cube, draw masks,
// form measurements, reconstruct, evaluate error bounds, run statistical
// verifications, and sweep parameters into CSV/SVG.
//
// Exit codes: 0 ok, 1 usage, 2 data/format, 3 numerically inapplicable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sci/sci.hpp"

namespace {

struct Dims {
  int n1 = 0, n2 = 0, B = 0;
};

Dims parse_dims(const std::string& s) {
  Dims d;
  char x1 = 0, x2 = 0;
  std::istringstream iss(s);
  iss >> d.n1 >> x1 >> d.n2 >> x2 >> d.B;
  if (!iss || x1 != 'x' || x2 != 'x' || d.n1 < 1 || d.n2 < 1 || d.B < 1 ||
      !iss.eof())
    throw CLI::ValidationError("--dims", "expected N1xN2xB, got '" + s + "'");
  return d;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  if (s.find(',') == std::string::npos &&
      std::count(s.begin(), s.end(), ':') == 2) {
    auto c1 = s.find(':'), c2 = s.find(':', c1 + 1);
    double lo = sci::parse_double(s.substr(0, c1), "grid lo");
    double hi = sci::parse_double(s.substr(c1 + 1, c2 - c1 - 1), "grid hi");
    double step = sci::parse_double(s.substr(c2 + 1), "grid step");
    if (!(step > 0.0) || hi < lo)
      throw CLI::ValidationError("--grid", "need lo <= hi and step > 0");
    long count = std::lround((hi - lo) / step);
    if (std::fabs(lo + count * step - hi) > 1e-9 * std::max(1.0, std::fabs(hi)))
      count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(lo + i * step);
    return out;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(sci::parse_double(tok, "grid value"));
  if (out.empty()) throw CLI::ValidationError("--grid", "empty grid");
  return out;
}

std::vector<std::pair<double, double>> parse_pair_grid(const std::string& s) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    auto c = tok.find(':');
    if (c == std::string::npos)
      throw CLI::ValidationError("--grid", "pair grid entries look like q0:q1");
    out.emplace_back(sci::parse_double(tok.substr(0, c), "q0"),
                     sci::parse_double(tok.substr(c + 1), "q1"));
  }
  if (out.empty()) throw CLI::ValidationError("--grid", "empty pair grid");
  return out;
}

// shared mask-model flag block
struct ModelOpts {
  std::string model = "iid";
  double p = 0.4;
  double q0 = 0.2, q1 = 0.3;
  double q = 0.2;
  std::string bounded_kind = "two_point";

  void attach(CLI::App* sub) {
    sub->add_option("--model", model, "mask model")
        ->check(CLI::IsMember(
            {"iid", "in_frame", "out_frame", "signed", "bounded"}));
    sub->add_option("--p", p, "marginal probability of an open mask site");
    sub->add_option("--q0", q0, "chain transition 0 -> 1");
    sub->add_option("--q1", q1, "chain transition 1 -> 0");
    sub->add_option("--q", q, "second moment for the bounded model");
    sub->add_option("--bounded-kind", bounded_kind,
                    "realization of the bounded model")
        ->check(CLI::IsMember({"two_point", "uniform_scaled"}));
  }

  sci::MaskModel build() const {
    sci::BoundedKind kind = bounded_kind == "uniform_scaled"
                                ? sci::BoundedKind::uniform_scaled
                                : sci::BoundedKind::two_point;
    sci::MaskModel m = sci::MaskModel::from_name(model, p, q0, q1, q, kind);
    m.validate();
    return m;
  }
};

std::vector<std::pair<std::string, std::string>> config_pairs(CLI::App* sub) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream iss(sub->config_to_str(true, false));
  std::string line;
  while (std::getline(iss, line)) {
    if (line.empty() || line[0] == '[' || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string v) {
      auto b = v.find_first_not_of(" \t\"");
      auto e = v.find_last_not_of(" \t\"");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

void print_provenance(const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) std::cout << k << "=" << v << "\n";
}

std::string fmt(double v) { return sci::format_double(v); }

sci::DataCube load_input_cube(const std::string& path, double rho) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".pgm") {
    return sci::load_pgm_frames({path}, rho > 0.0 ? rho : 1.0);
  }
  if (path.find(".pgm,") != std::string::npos ||
      path.find(",") != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) parts.push_back(tok);
    return sci::load_pgm_frames(parts, rho > 0.0 ? rho : 1.0);
  }
  return sci::load_cube(path, rho);
}

// ---------------------------------------------------------------- synth ----

struct SynthOpts {
  std::string kind = "moving_square";
  std::string dims = "64x64x8";
  std::uint64_t seed = 1;
  double rho = 1.0;
  std::string out;
};

void run_synth(SynthOpts& o, CLI::App* sub) {
  Dims d = parse_dims(o.dims);
  sci::DataCube cube = sci::synth_video(sci::synth_kind_from_string(o.kind),
                                        d.n1, d.n2, d.B, o.seed, o.rho);
  sci::save_cube(o.out, cube);
  sci::save_meta(sci::meta_path_for(o.out), config_pairs(sub));
  print_provenance(config_pairs(sub));
  std::cout << "written=" << o.out << "\n";
}

// ----------------------------------------------------------------- mask ----

struct MaskOpts {
  ModelOpts model;
  std::string dims = "32x32x8";
  std::uint64_t seed = 1;
  std::string out;
};

void run_mask(MaskOpts& o, CLI::App* sub) {
  Dims d = parse_dims(o.dims);
  sci::MaskCube mask = sci::sample_mask(o.model.build(), d.n1, d.n2, d.B, o.seed);
  sci::save_mask(o.out, mask);
  print_provenance(config_pairs(sub));
  sci::EmpiricalStats st = sci::empirical_stats(mask);
  std::cout << "one_fraction=" << fmt(st.one_fraction) << "\n";
  std::cout << "written=" << o.out << "\n";
}

// -------------------------------------------------------------- forward ----

struct ForwardOpts {
  std::string mask_path, input_path, out;
  double rho = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

void run_forward(ForwardOpts& o, CLI::App* sub) {
  sci::MaskCube mask = sci::load_mask(o.mask_path);
  sci::DataCube x = load_input_cube(o.input_path, o.rho);
  if (x.n1() != mask.n1 || x.n2() != mask.n2 || x.frames() != mask.frames)
    throw sci::io_error("mask and input dimensions disagree");
  sci::SensingOperator op(std::move(mask));
  sci::Measurement y = op.measure(x);
  if (o.noise_sigma > 0.0) y = sci::add_noise(y, o.noise_sigma, o.seed);
  sci::save_frame(o.out, y.frame);
  auto meta = config_pairs(sub);
  meta.emplace_back("applied_noise_sigma", fmt(y.noise_sigma));
  sci::save_meta(sci::meta_path_for(o.out), meta);
  print_provenance(config_pairs(sub));
  std::cout << "written=" << o.out << "\n";
}

// -------------------------------------------------------------- recover ----

struct RecoverOpts {
  std::string mask_path, meas_path, out;
  std::string projector = "tv";
  int levels = 2;
  double tv_weight = -1.0;
  std::string mu = "auto";
  int max_iter = 50;
  double tol = 1e-6;
  double rho = 1.0;
  std::string trace_path, truth_path;
};

void run_recover(RecoverOpts& o, CLI::App* sub) {
  sci::MaskCube mask = sci::load_mask(o.mask_path);
  sci::FrameImage yf = sci::load_frame(o.meas_path);
  if (yf.n1 != mask.n1 || yf.n2 != mask.n2)
    throw sci::io_error("mask and measurement dimensions disagree");
  const double p = mask.model.marginal_p();
  const int B = mask.frames;
  sci::SensingOperator op(std::move(mask));

  sci::Projector proj;
  if (o.projector == "codebook") {
    proj = sci::CodebookProjector{sci::build_quantizer_codebook(
        op.n1(), op.n2(), op.frames(), o.levels, o.rho)};
  } else {
    double w = o.tv_weight >= 0.0 ? o.tv_weight : 0.03 * o.rho;
    proj = sci::TvProjector{w};
  }

  sci::PgdConfig cfg;
  if (o.mu == "auto")
    cfg.mu = o.projector == "codebook" ? sci::default_mu(p) : 1.0 / (B * p);
  else
    cfg.mu = sci::parse_double(o.mu, "--mu");
  cfg.max_iter = o.max_iter;
  cfg.tol = o.tol;
  cfg.rho = o.rho;

  std::unique_ptr<sci::DataCube> truth;
  if (!o.truth_path.empty()) {
    truth = std::make_unique<sci::DataCube>(load_input_cube(o.truth_path, o.rho));
    if (truth->n1() != op.n1() || truth->n2() != op.n2() ||
        truth->frames() != op.frames())
      throw sci::io_error("truth and mask dimensions disagree");
  }

  sci::Measurement y{yf, 0.0};
  sci::RecoveryResult res = sci::pgd_recover(y, op, proj, cfg, truth.get());
  sci::save_cube(o.out, res.x_hat);
  auto meta = config_pairs(sub);
  meta.emplace_back("resolved_mu", fmt(cfg.mu));
  meta.emplace_back("iterations_run", std::to_string(res.iterations_run));
  sci::save_meta(sci::meta_path_for(o.out), meta);

  if (!o.trace_path.empty()) {
    sci::CsvTable t;
    t.provenance = meta;
    t.header = {"iter", "residual_l2", "error_rms"};
    for (std::size_t i = 0; i < res.residual_trace.size(); ++i) {
      double err = i < res.error_trace.size()
                       ? res.error_trace[i]
                       : std::numeric_limits<double>::quiet_NaN();
      t.rows.push_back({std::to_string(i + 1), fmt(res.residual_trace[i]),
                        fmt(err)});
    }
    sci::write_csv(o.trace_path, t);
  }

  print_provenance(config_pairs(sub));
  std::cout << "resolved_mu=" << fmt(cfg.mu) << "\n";
  std::cout << "iterations_run=" << res.iterations_run << "\n";
  if (!res.residual_trace.empty())
    std::cout << "final_residual=" << fmt(res.residual_trace.back()) << "\n";
  if (truth) {
    sci::QualityReport q = sci::psnr(*truth, res.x_hat);
    std::cout << "psnr_db=" << fmt(q.psnr_db) << "\n";
    std::cout << "mse=" << fmt(q.mse) << "\n";
  }
  std::cout << "written=" << o.out << "\n";
}

// --------------------------------------------------------------- bounds ----

struct BoundsOpts {
  std::string theorem;
  std::int64_t n = 65536;
  int B = 8;
  double r = 1.0, delta = 0.01, rho = 1.0;
  double eta = 1.0, epsilon = 0.05;
  double p = 0.5;
  double q = 0.2;
  double q0 = -1.0, q1 = -1.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double lambda_min = std::numeric_limits<double>::quiet_NaN();
  double lambda_max = std::numeric_limits<double>::quiet_NaN();
  double kappa = 1.0;
  double lambda = 0.1;
  std::string sweep_p, out;
};

struct BoundRow {
  double p, q0, q1, alpha, theta1, max_frames;
  sci::BoundReport rep;
  bool argmin = false;
};

BoundRow eval_bound_at(const BoundsOpts& o, double p) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  BoundRow row{p, nan, nan, nan, nan, nan, {}, false};
  sci::BoundParams bp;
  bp.n = o.n;
  bp.B = o.B;
  bp.r = o.r;
  bp.delta = o.delta;
  bp.rho = o.rho;
  bp.eta = o.eta;
  bp.epsilon = o.epsilon;
  bp.kappa = o.kappa;
  bp.lambda_free = o.lambda;

  const bool have_chain = o.q0 > 0.0 && o.q1 > 0.0;
  double alpha = o.alpha;
  if (have_chain) {
    alpha = 1.0 - o.q0 - o.q1;
    row.q0 = o.q0;
    row.q1 = o.q1;
  }

  if (o.theorem == "1") {
    row.rep = sci::iid_bound(p, bp);
  } else if (o.theorem == "2") {
    if (!have_chain)
      throw CLI::ValidationError("--theorem 2", "needs --q0 and --q1");
    double marg = sci::stationary_p(o.q0, o.q1);
    row.p = marg;
    row.theta1 = sci::theta1_closed_form(o.q0, o.q1, o.B);
    row.rep = sci::in_frame_bound(marg, o.epsilon, row.theta1, bp);
    row.alpha = alpha;
  } else if (o.theorem == "3") {
    double lmin = o.lambda_min, lmax = o.lambda_max;
    if (std::isnan(lmin) || std::isnan(lmax)) {
      if (std::isnan(alpha))
        throw CLI::ValidationError(
            "--theorem 3", "needs --q0/--q1, --alpha, or both eigen extrema");
      auto [lo, hi] = sci::eigen_extrema(sci::lambda_matrix(alpha, o.B));
      lmin = lo;
      lmax = hi;
    }
    if (have_chain) row.p = sci::stationary_p(o.q0, o.q1);
    row.alpha = alpha;
    row.rep = sci::out_frame_bound(row.p, o.epsilon, lmin, lmax, bp);
  } else if (o.theorem == "c1") {
    row.rep = sci::signed_bound(p, o.epsilon, bp);
  } else if (o.theorem == "c12") {
    row.rep = sci::bounded_bound(p, o.q, o.epsilon, bp);
  } else if (o.theorem == "c4") {
    if (std::isnan(alpha))
      throw CLI::ValidationError("--theorem c4", "needs --alpha or --q0/--q1");
    if (have_chain) row.p = sci::stationary_p(o.q0, o.q1);
    row.alpha = alpha;
    row.rep = sci::out_frame_gershgorin_bound(row.p, o.epsilon, alpha, bp);
  } else if (o.theorem == "c42") {
    sci::FrameBudget fb = sci::max_frames(p, bp);
    row.max_frames = static_cast<double>(fb.max_frames);
    row.rep.bound_value = fb.bound_at_max;
    row.rep.term_distortion = nan;
    row.rep.term_fluctuation = nan;
    row.rep.success_probability_lower = fb.success_probability_lower;
    row.rep.convention = "epsilon";
    row.rep.notes = "bound evaluated at the largest admissible frame count";
  } else if (o.theorem == "pgd") {
    double c = sci::pgd_contraction(o.lambda, p);
    double limit = sci::pgd_limit_bound(p, o.B, o.delta, c);
    sci::IterativeSuccess s =
        sci::pgd_success_probability(o.n, o.B, o.r, o.delta, o.rho, o.lambda);
    row.rep.bound_value = limit;
    row.rep.term_distortion = c;  // per-step gain, not an additive term
    row.rep.term_fluctuation = nan;
    row.rep.success_probability_lower = s.success_probability_lower;
    row.rep.log_fail_mass = s.log_fail_mass;
    row.rep.vacuous = s.vacuous;
    row.rep.convention = "none";
    row.rep.notes = "fixed-point limit of the iterative error recursion";
  } else {
    throw CLI::ValidationError("--theorem", "unknown theorem id " + o.theorem);
  }
  return row;
}

void run_bounds(BoundsOpts& o, CLI::App* sub) {
  std::vector<BoundRow> rows;
  if (!o.sweep_p.empty()) {
    std::vector<double> grid = parse_grid(o.sweep_p);
    std::size_t bad = 0;
    for (double p : grid) {
      try {
        rows.push_back(eval_bound_at(o, p));
      } catch (const sci::not_applicable&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        BoundRow row{p, nan, nan, nan, nan, nan, {}, false};
        row.rep.bound_value = nan;
        row.rep.term_distortion = nan;
        row.rep.term_fluctuation = nan;
        row.rep.success_probability_lower = nan;
        row.rep.convention = "n/a";
        row.rep.notes = "not applicable at this p";
        rows.push_back(row);
        ++bad;
      }
    }
    if (bad == rows.size())
      throw sci::not_applicable("no grid point is admissible");
  } else {
    rows.push_back(eval_bound_at(o, o.p));
  }

  // flag the smallest finite bound
  std::size_t best = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (std::isfinite(rows[i].rep.bound_value) &&
        (best == rows.size() ||
         rows[i].rep.bound_value < rows[best].rep.bound_value))
      best = i;
  if (best < rows.size()) rows[best].argmin = true;

  auto prov = config_pairs(sub);
  if (o.theorem == "1") {
    sci::BoundParams bp;
    bp.n = o.n; bp.B = o.B; bp.r = o.r; bp.delta = o.delta;
    bp.rho = o.rho; bp.eta = o.eta;
    double ps = sci::optimal_p(bp);
    prov.emplace_back("p_star", fmt(ps));
    prov.emplace_back("p_star_derivative", fmt(sci::iid_bound_derivative(ps, bp)));
  }

  if (!o.out.empty()) {
    sci::CsvTable t;
    t.provenance = prov;
    t.header = {"theorem", "p", "q0", "q1", "alpha", "theta1", "bound",
                "term_distortion", "term_fluctuation", "prob_lower",
                "convention", "argmin", "max_frames"};
    for (const auto& r : rows)
      t.rows.push_back({o.theorem, fmt(r.p), fmt(r.q0), fmt(r.q1), fmt(r.alpha),
                        fmt(r.theta1), fmt(r.rep.bound_value),
                        fmt(r.rep.term_distortion), fmt(r.rep.term_fluctuation),
                        fmt(r.rep.success_probability_lower), r.rep.convention,
                        r.argmin ? "1" : "0", fmt(r.max_frames)});
    sci::write_csv(o.out, t);
  }

  print_provenance(prov);
  for (const auto& r : rows) {
    std::cout << "p=" << fmt(r.p) << " bound=" << fmt(r.rep.bound_value)
              << " term_distortion=" << fmt(r.rep.term_distortion)
              << " term_fluctuation=" << fmt(r.rep.term_fluctuation)
              << " prob_lower=" << fmt(r.rep.success_probability_lower)
              << " convention=" << r.rep.convention
              << " vacuous=" << (r.rep.vacuous ? 1 : 0);
    if (!std::isnan(r.theta1)) std::cout << " theta1=" << fmt(r.theta1);
    if (!std::isnan(r.max_frames))
      std::cout << " max_frames=" << fmt(r.max_frames);
    if (r.argmin) std::cout << " argmin=1";
    if (!r.rep.notes.empty()) std::cout << " notes=\"" << r.rep.notes << "\"";
    std::cout << "\n";
  }
  if (!o.out.empty()) std::cout << "written=" << o.out << "\n";
}

// --------------------------------------------------------------- verify ----

struct VerifyConcOpts {
  ModelOpts model;
  std::int64_t n = 4096;
  int B = 4;
  long trials = 2000;
  double epsilon = 0.05;
  double rho = 1.0;
  std::uint64_t seed = 1;
  std::string out;
};

std::string model_param_cell(const sci::MaskModel& m) {
  if (m.is_markov())
    return "q0=" + fmt(m.q0) + ";q1=" + fmt(m.q1);
  if (m.variant == sci::MaskVariant::bounded_iid)
    return "p=" + fmt(m.p) + ";q=" + fmt(m.q) + ";kind=" +
           (m.bounded_kind == sci::BoundedKind::two_point ? "two_point"
                                                          : "uniform_scaled");
  return "p=" + fmt(m.p);
}

void run_verify_concentration(VerifyConcOpts& o, CLI::App* sub) {
  sci::MaskModel m = o.model.build();
  sci::McReport rep =
      sci::mc_concentration(m, o.n, o.B, o.trials, o.epsilon, o.rho, o.seed);
  print_provenance(config_pairs(sub));
  std::cout << "analytic_mean=" << fmt(rep.analytic_mean) << "\n"
            << "empirical_mean=" << fmt(rep.empirical_mean) << "\n"
            << "empirical_tail=" << fmt(rep.empirical_tail) << "\n"
            << "bound_tail=" << fmt(rep.bound_tail) << "\n"
            << "vacuous=" << (rep.vacuous ? 1 : 0) << "\n"
            << "pass=" << (rep.pass ? "true" : "false") << "\n";
  if (!o.out.empty()) {
    sci::CsvTable t;
    t.provenance = config_pairs(sub);
    t.header = {"model", "params", "n", "B", "epsilon", "empirical_tail",
                "bound_tail", "vacuous_flag", "pass"};
    t.rows.push_back({rep.model, model_param_cell(m), std::to_string(rep.n),
                      std::to_string(rep.B), fmt(rep.epsilon),
                      fmt(rep.empirical_tail), fmt(rep.bound_tail),
                      rep.vacuous ? "1" : "0", rep.pass ? "1" : "0"});
    sci::write_csv(o.out, t);
    std::cout << "written=" << o.out << "\n";
  }
}

struct VerifyEujOpts {
  ModelOpts model;
  int B = 4;
  int count = 20;
  double rho = 1.0;
  std::uint64_t seed = 7;
};

void run_verify_euj(VerifyEujOpts& o, CLI::App* sub) {
  sci::MaskModel m = o.model.build();
  sci::Pcg32 rng(sci::substream_seed(o.seed, 0x0e07));
  double worst = 0.0;
  for (int k = 0; k < o.count; ++k) {
    std::vector<double> mu(o.B);
    for (double& v : mu) v = rng.next_uniform(-o.rho, o.rho);
    double a = sci::expected_energy(m, mu);
    double b = sci::bruteforce_energy(m, mu);
    double rel = std::fabs(a - b) / std::max(1.0, std::fabs(b));
    worst = std::max(worst, rel);
  }
  print_provenance(config_pairs(sub));
  std::cout << "columns_checked=" << o.count << "\n"
            << "max_rel_diff=" << fmt(worst) << "\n"
            << "pass=" << (worst < 1e-10 ? "true" : "false") << "\n";
}

struct VerifyMeanOpts {
  ModelOpts model;
  std::string input;
  std::string kind = "moving_square";
  std::string dims = "16x16x4";
  std::uint64_t video_seed = 91;
  double rho = 1.0;
  long trials = 100;
  long trials2 = 400;
  std::uint64_t seed = 1;
};

void run_verify_mean(VerifyMeanOpts& o, CLI::App* sub) {
  sci::DataCube x = [&] {
    if (!o.input.empty()) return load_input_cube(o.input, o.rho);
    Dims d = parse_dims(o.dims);
    return sci::synth_video(sci::synth_kind_from_string(o.kind), d.n1, d.n2,
                            d.B, o.video_seed, o.rho);
  }();
  sci::MaskModel m = o.model.build();
  print_provenance(config_pairs(sub));
  sci::MeanEstimatorReport r1 =
      sci::mean_estimator_check(x, m, o.trials, o.seed);
  std::cout << "trials=" << r1.trials << " rms_error=" << fmt(r1.rms_error)
            << " predicted_rms=" << fmt(r1.predicted_rms)
            << " ratio=" << fmt(r1.ratio)
            << " pass=" << (r1.pass ? "true" : "false") << "\n";
  if (o.trials2 > 0) {
    sci::MeanEstimatorReport r2 =
        sci::mean_estimator_check(x, m, o.trials2, o.seed + 1);
    std::cout << "trials=" << r2.trials << " rms_error=" << fmt(r2.rms_error)
              << " predicted_rms=" << fmt(r2.predicted_rms)
              << " ratio=" << fmt(r2.ratio)
              << " pass=" << (r2.pass ? "true" : "false") << "\n";
    double observed = r2.rms_error > 0.0 ? r1.rms_error / r2.rms_error : 0.0;
    std::cout << "observed_ratio=" << fmt(observed) << "\n"
              << "expected_ratio="
              << fmt(std::sqrt(double(o.trials2) / double(o.trials))) << "\n";
  }
}

// ---------------------------------------------------------------- sweep ----

struct SweepOpts {
  std::string axis = "p";
  std::string grid = "0.1:0.9:0.1";
  std::string metric = "psnr";
  long trials = 5;
  std::uint64_t seed = 1;
  ModelOpts model;
  std::string dims = "64x64x8";
  std::string kind = "moving_square";
  std::uint64_t video_seed = 91;
  std::string input;
  double rho = 1.0;
  int levels = 0;
  double tv_weight = -1.0;
  std::string mu = "auto";
  int max_iter = 60;
  double tol = 0.0;
  double noise_sigma = 0.0;
  double r = 1.0, delta = 0.01, eta = 1.0, epsilon = 0.05;
  std::string out, plot;
};

void run_sweep_cmd(SweepOpts& o, CLI::App* sub) {
  sci::SweepSpec spec;
  spec.axis = sci::sweep_axis_from_string(o.axis);
  spec.metric = sci::sweep_metric_from_string(o.metric);
  if (spec.axis == sci::SweepAxis::q0q1_pair)
    spec.pair_grid = parse_pair_grid(o.grid);
  else
    spec.grid = parse_grid(o.grid);
  spec.base_model = o.model.build();
  spec.trials = o.trials;
  spec.base_seed = o.seed;
  Dims d = parse_dims(o.dims);
  spec.n1 = d.n1;
  spec.n2 = d.n2;
  spec.frames = d.B;
  spec.kind = sci::synth_kind_from_string(o.kind);
  spec.video_seed = o.video_seed;
  spec.rho = o.rho;
  spec.levels = o.levels;
  spec.tv_weight = o.tv_weight;
  spec.mu = o.mu == "auto" ? 0.0 : sci::parse_double(o.mu, "--mu");
  spec.max_iter = o.max_iter;
  spec.tol = o.tol;
  spec.noise_sigma = o.noise_sigma;
  spec.bound_params.r = o.r;
  spec.bound_params.delta = o.delta;
  spec.bound_params.rho = o.rho;
  spec.bound_params.eta = o.eta;
  spec.bound_params.epsilon = o.epsilon;

  std::unique_ptr<sci::DataCube> input;
  if (!o.input.empty()) {
    input = std::make_unique<sci::DataCube>(load_input_cube(o.input, o.rho));
    spec.input = input.get();
    spec.n1 = input->n1();
    spec.n2 = input->n2();
    spec.frames = input->frames();
  }

  sci::SweepResult res = sci::run_sweep(spec);

  auto prov = config_pairs(sub);
  for (const auto& kv : res.provenance) prov.push_back(kv);

  if (!o.out.empty()) {
    sci::CsvTable t;
    t.provenance = prov;
    t.header = {"axis_value", "mean_metric", "std_metric", "trials",
                "mean_secondary", "std_secondary", "p", "q0", "q1", "B"};
    for (const auto& r : res.rows)
      t.rows.push_back({fmt(r.axis_value), fmt(r.mean_metric),
                        fmt(r.std_metric), std::to_string(r.trials),
                        fmt(r.mean_secondary), fmt(r.std_secondary), fmt(r.p),
                        fmt(r.q0), fmt(r.q1), std::to_string(r.B)});
    sci::write_csv(o.out, t);
  }

  if (!o.plot.empty()) {
    std::vector<sci::SvgSeries> series;
    sci::SvgSeries s1;
    s1.label = o.metric;
    for (const auto& r : res.rows)
      s1.points.emplace_back(r.axis_value, r.mean_metric);
    series.push_back(std::move(s1));
    if (spec.metric == sci::SweepMetric::mse_split) {
      sci::SvgSeries s2;
      s2.label = "mean-frame part";
      series[0].label = "fluctuation part";
      for (const auto& r : res.rows)
        s2.points.emplace_back(r.axis_value, r.mean_secondary);
      series.push_back(std::move(s2));
    }
    sci::emit_svg_linechart(series, o.axis, o.metric, o.plot);
  }

  print_provenance(prov);
  for (const auto& r : res.rows)
    std::cout << "axis_value=" << fmt(r.axis_value)
              << " mean=" << fmt(r.mean_metric) << " std=" << fmt(r.std_metric)
              << " secondary=" << fmt(r.mean_secondary)
              << " trials=" << r.trials << "\n";
  if (!o.out.empty()) std::cout << "written=" << o.out << "\n";
  if (!o.plot.empty()) std::cout << "plot=" << o.plot << "\n";
}

}  // namespace

std::string trim_copy(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  std::string out = s.substr(a, b - a + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

// Reads `--config FILE` for the named subcommand before the real parse and
// appends `--key value` for every file entry whose option was not given on
// the command line, so explicit flags always win.  The file format is flat
// `key = value` lines; `#` starts a comment.
void expand_config_defaults(CLI::App& app, std::vector<std::string>& args) {
  CLI::App* leaf = &app;
  for (const std::string& tok : args) {
    CLI::App* next = nullptr;
    for (CLI::App* s :
         leaf->get_subcommands([](CLI::App*) { return true; }))
      if (s->get_name() == tok) next = s;
    if (next) leaf = next;
  }
  if (leaf == &app) return;

  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return;

  std::ifstream in(path);
  if (!in) throw sci::io_error("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim_copy(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key = value");
    std::string key = trim_copy(t.substr(0, eq));
    std::string value = trim_copy(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " has an empty key");
    if (key == "config") continue;

    CLI::Option* opt = leaf->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw std::invalid_argument("config: unknown option '" + key + "' for " +
                                  leaf->get_name());
    bool given = false;
    for (const std::string& ln : opt->get_lnames())
      for (const std::string& tok : args)
        if (tok == "--" + ln || tok.rfind("--" + ln + "=", 0) == 0)
          given = true;
    for (const std::string& sn : opt->get_snames())
      for (const std::string& tok : args)
        if (tok == "-" + sn || tok.rfind("-" + sn + "=", 0) == 0) given = true;
    if (given) continue;
    args.push_back("--" + key);
    args.push_back(value);
  }
}

int main(int argc, char** argv) {
  CLI::App app{"masked-snapshot imaging workbench"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default(true);

  // synth
  auto synth_opts = std::make_shared<SynthOpts>();
  CLI::App* synth = app.add_subcommand("synth", "generate a test video cube");
  synth->add_option("--kind", synth_opts->kind, "scene type")
      ->check(CLI::IsMember({"moving_square", "moving_gaussian"}));
  synth->add_option("--dims", synth_opts->dims, "cube size N1xN2xB");
  synth->add_option("--seed", synth_opts->seed, "scene seed");
  synth->add_option("--rho", synth_opts->rho, "amplitude range");
  synth->add_option("-o,--output", synth_opts->out, "output .scit path")
      ->required();
  synth->callback([synth_opts, synth] { run_synth(*synth_opts, synth); });

  // mask
  auto mask_opts = std::make_shared<MaskOpts>();
  CLI::App* mask = app.add_subcommand("mask", "draw a mask cube");
  mask_opts->model.attach(mask);
  mask->add_option("--dims", mask_opts->dims, "mask size N1xN2xB");
  mask->add_option("--seed", mask_opts->seed, "mask seed");
  mask->add_option("-o,--output", mask_opts->out, "output .scit path")
      ->required();
  mask->callback([mask_opts, mask] { run_mask(*mask_opts, mask); });

  // forward
  auto fwd_opts = std::make_shared<ForwardOpts>();
  CLI::App* fwd = app.add_subcommand("forward", "form a snapshot measurement");
  fwd->add_option("--mask", fwd_opts->mask_path, "mask .scit (with .meta)")
      ->required();
  fwd->add_option("--input", fwd_opts->input_path,
                  "input cube (.scit, or comma-joined .pgm frames)")
      ->required();
  fwd->add_option("--rho", fwd_opts->rho, "amplitude range of the input");
  fwd->add_option("--noise-sigma", fwd_opts->noise_sigma,
                  "white measurement noise level");
  fwd->add_option("--seed", fwd_opts->seed, "noise seed");
  fwd->add_option("-o,--output", fwd_opts->out, "output measurement path")
      ->required();
  fwd->callback([fwd_opts, fwd] { run_forward(*fwd_opts, fwd); });

  // recover
  auto rec_opts = std::make_shared<RecoverOpts>();
  CLI::App* rec = app.add_subcommand("recover", "reconstruct a cube");
  rec->add_option("--mask", rec_opts->mask_path, "mask .scit (with .meta)")
      ->required();
  rec->add_option("--measurement", rec_opts->meas_path, "measurement .scit")
      ->required();
  rec->add_option("--projector", rec_opts->projector, "projection step")
      ->check(CLI::IsMember({"tv", "codebook"}));
  rec->add_option("--levels", rec_opts->levels, "quantizer levels (codebook)");
  rec->add_option("--tv-weight", rec_opts->tv_weight,
                  "smoothing weight; negative means 0.03*rho");
  rec->add_option("--mu", rec_opts->mu, "step size, or 'auto'");
  rec->add_option("--max-iter", rec_opts->max_iter, "iteration cap");
  rec->add_option("--tol", rec_opts->tol, "residual stall tolerance");
  rec->add_option("--rho", rec_opts->rho, "amplitude range");
  rec->add_option("--trace", rec_opts->trace_path, "per-iteration CSV");
  rec->add_option("--truth", rec_opts->truth_path, "ground-truth cube");
  rec->add_option("-o,--output", rec_opts->out, "output cube path")->required();
  rec->callback([rec_opts, rec] { run_recover(*rec_opts, rec); });

  // bounds
  auto bnd_opts = std::make_shared<BoundsOpts>();
  CLI::App* bnd = app.add_subcommand("bounds", "evaluate recovery guarantees");
  bnd->add_option("--theorem", bnd_opts->theorem, "which guarantee")
      ->required()
      ->check(CLI::IsMember({"1", "2", "3", "c1", "c12", "c4", "c42", "pgd"}));
  bnd->add_option("--n", bnd_opts->n, "pixels per frame");
  bnd->add_option("--B", bnd_opts->B, "frames per snapshot");
  bnd->add_option("--r", bnd_opts->r, "code rate");
  bnd->add_option("--delta", bnd_opts->delta, "code distortion");
  bnd->add_option("--rho", bnd_opts->rho, "amplitude range");
  bnd->add_option("--eta", bnd_opts->eta, "probability knob (theorem 1)");
  bnd->add_option("--epsilon", bnd_opts->epsilon, "deviation parameter");
  bnd->add_option("--p", bnd_opts->p, "mask open probability");
  bnd->add_option("--q", bnd_opts->q, "second moment (bounded model)");
  bnd->add_option("--q0", bnd_opts->q0, "chain transition 0 -> 1");
  bnd->add_option("--q1", bnd_opts->q1, "chain transition 1 -> 0");
  bnd->add_option("--alpha", bnd_opts->alpha, "chain correlation 1-q0-q1");
  bnd->add_option("--lambda-min", bnd_opts->lambda_min,
                  "smallest correlation eigenvalue");
  bnd->add_option("--lambda-max", bnd_opts->lambda_max,
                  "largest correlation eigenvalue");
  bnd->add_option("--kappa", bnd_opts->kappa, "fluctuation budget multiplier");
  bnd->add_option("--lambda", bnd_opts->lambda, "iterative slack parameter");
  bnd->add_option("--sweep-p", bnd_opts->sweep_p, "p grid lo:hi:step");
  bnd->add_option("-o,--output", bnd_opts->out, "CSV path");
  bnd->callback([bnd_opts, bnd] { run_bounds(*bnd_opts, bnd); });

  // verify
  CLI::App* ver = app.add_subcommand("verify", "statistical self-checks");
  ver->require_subcommand(1);

  auto conc_opts = std::make_shared<VerifyConcOpts>();
  CLI::App* conc =
      ver->add_subcommand("concentration", "tail of the masked energy");
  conc_opts->model.attach(conc);
  conc->add_option("--n", conc_opts->n, "pixels per frame");
  conc->add_option("--B", conc_opts->B, "frames per snapshot");
  conc->add_option("--trials", conc_opts->trials, "Monte-Carlo trials");
  conc->add_option("--epsilon", conc_opts->epsilon, "deviation parameter");
  conc->add_option("--rho", conc_opts->rho, "amplitude range");
  conc->add_option("--seed", conc_opts->seed, "base seed");
  conc->add_option("-o,--output", conc_opts->out, "CSV path");
  conc->callback([conc_opts, conc] { run_verify_concentration(*conc_opts, conc); });

  auto euj_opts = std::make_shared<VerifyEujOpts>();
  CLI::App* euj =
      ver->add_subcommand("euj", "masked-energy expectation vs enumeration");
  euj_opts->model.attach(euj);
  euj->add_option("--B", euj_opts->B, "frames per snapshot (<= 16)");
  euj->add_option("--count", euj_opts->count, "random columns to check");
  euj->add_option("--rho", euj_opts->rho, "amplitude range");
  euj->add_option("--seed", euj_opts->seed, "column seed");
  euj->callback([euj_opts, euj] { run_verify_euj(*euj_opts, euj); });

  auto mean_opts = std::make_shared<VerifyMeanOpts>();
  CLI::App* mean =
      ver->add_subcommand("mean-estimator", "snapshot as a mean-frame estimate");
  mean_opts->model.attach(mean);
  mean->add_option("--input", mean_opts->input, "cube path (else synthetic)");
  mean->add_option("--kind", mean_opts->kind, "scene type")
      ->check(CLI::IsMember({"moving_square", "moving_gaussian"}));
  mean->add_option("--dims", mean_opts->dims, "cube size N1xN2xB");
  mean->add_option("--video-seed", mean_opts->video_seed, "scene seed");
  mean->add_option("--rho", mean_opts->rho, "amplitude range");
  mean->add_option("--trials", mean_opts->trials, "first trial count");
  mean->add_option("--trials2", mean_opts->trials2,
                   "second trial count (0 to skip)");
  mean->add_option("--seed", mean_opts->seed, "base seed");
  mean->callback([mean_opts, mean] { run_verify_mean(*mean_opts, mean); });

  // sweep
  auto sw_opts = std::make_shared<SweepOpts>();
  CLI::App* sw = app.add_subcommand("sweep", "sweep one axis into CSV/SVG");
  sw->add_option("--axis", sw_opts->axis, "experiment axis")
      ->check(CLI::IsMember({"p", "q0q1_pair", "B", "alpha"}));
  sw->add_option("--grid", sw_opts->grid,
                 "lo:hi:step, comma list, or q0:q1 pairs");
  sw->add_option("--metric", sw_opts->metric, "what to measure")
      ->check(CLI::IsMember({"psnr", "bound_value", "mse_split"}));
  sw->add_option("--trials", sw_opts->trials, "trials per grid point");
  sw->add_option("--seed", sw_opts->seed, "base seed");
  sw_opts->model.attach(sw);
  sw->add_option("--dims", sw_opts->dims, "scene size N1xN2xB");
  sw->add_option("--kind", sw_opts->kind, "scene type")
      ->check(CLI::IsMember({"moving_square", "moving_gaussian"}));
  sw->add_option("--video-seed", sw_opts->video_seed, "scene seed");
  sw->add_option("--input", sw_opts->input, "external cube instead of synth");
  sw->add_option("--rho", sw_opts->rho, "amplitude range");
  sw->add_option("--levels", sw_opts->levels,
                 "quantizer levels; 0 selects the smoothing projector");
  sw->add_option("--tv-weight", sw_opts->tv_weight,
                 "smoothing weight; negative means 0.03*rho");
  sw->add_option("--mu", sw_opts->mu, "step size, or 'auto'");
  sw->add_option("--max-iter", sw_opts->max_iter, "iteration cap");
  sw->add_option("--tol", sw_opts->tol, "residual stall tolerance (0 = off)");
  sw->add_option("--noise-sigma", sw_opts->noise_sigma, "measurement noise");
  sw->add_option("--r", sw_opts->r, "code rate (bound_value)");
  sw->add_option("--delta", sw_opts->delta, "code distortion (bound_value)");
  sw->add_option("--eta", sw_opts->eta, "probability knob (bound_value)");
  sw->add_option("--epsilon", sw_opts->epsilon, "deviation (bound_value)");
  sw->add_option("-o,--output", sw_opts->out, "CSV path");
  sw->add_option("--plot", sw_opts->plot, "SVG path");
  sw->callback([sw_opts, sw] { run_sweep_cmd(*sw_opts, sw); });

  // every leaf command reads the same flat key = value format; flags given on
  // the command line always win over file values
  for (CLI::App* s : {synth, mask, fwd, rec, bnd, conc, euj, mean, sw})
    s->add_option("--config", "read defaults from a key = value file")
        ->configurable(false);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    expand_config_defaults(app, args);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const sci::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sci::not_applicable& e) {
    std::cerr << "not applicable: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
