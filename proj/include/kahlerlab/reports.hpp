#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kahlerlab/core.hpp"
#include "kahlerlab/examples.hpp"
#include "kahlerlab/gradient.hpp"
#include "kahlerlab/io.hpp"
#include "kahlerlab/metric_lab.hpp"
#include "kahlerlab/models.hpp"
#include "kahlerlab/parallel.hpp"
#include "kahlerlab/riccati.hpp"

// Tables behind each command-line subcommand. Column layouts are documented
// in docs/formats.md and must not change without updating it.

namespace kahlerlab::reports {

/// A data table plus the checks that decide the exit status.
struct Report {
  io::Table table;
  std::vector<Verdict> verdicts;

  [[nodiscard]] bool all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass(); });
  }
};

inline std::string fixed17(double x) { return io::format_double(x); }

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

/// Real form (curvature c, dimension 2m) next to the complex form with bisectional curvature c.
inline Report model_report(int m, double c, const std::vector<double>& grid) {
  const models::RealSpaceForm real(c, 2 * m);
  const models::ComplexSpaceForm cplx(c, m);
  Report rep;
  rep.table = {"model",
               {"r", "sn", "real_laplacian", "real_area", "real_volume", "s_11", "s_offdiag", "r11", "r22",
                "complex_laplacian", "complex_area", "complex_volume"},
               {}};
  for (double r : grid) {
    const auto S = models::model_hessian_S(c, m, r);
    const auto H = models::model_complex_hessian(cplx, r);
    rep.table.add({r, models::sn(c, r), models::model_laplacian_real(real, r), models::model_area(real, r),
                   models::model_volume(real, r), S.s11, S.offdiag, H.r11, H.r22,
                   models::model_laplacian_real(cplx, r), models::model_area(cplx, r),
                   models::model_volume(cplx, r)});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// bochner-check
// ---------------------------------------------------------------------------

struct BochnerStudyConfig {
  int m = 2;
  std::uint64_t seed = 42;
  std::size_t points = 10;  // valid points per (metric, field)
  double inner = 0.5;       // points drawn from the central part of the chart box, as a fraction of it
  double exclude_below = 1e-2;
  std::vector<double> steps{0.02, 0.01, 1e-3};  // coarse, fine, reported
  std::size_t threads = 0;
};

inline const std::vector<std::string>& study_metrics() {
  static const std::vector<std::string> names{"flat", "fubini_study", "complex_hyperbolic"};
  return names;
}

inline const std::vector<std::string>& study_fields() {
  static const std::vector<std::string> names{"exp_mix", "log_radial", "radial_potential"};
  return names;
}

inline metric_lab::ChartMetric study_metric(const std::string& name, int m) {
  metric_lab::MetricParams prm;
  prm.m = m;
  prm.scale = name == "complex_hyperbolic" ? -1 : 1;
  return metric_lab::builtin_metric(name, prm);
}

struct StudyPoint {
  std::string metric;
  std::string field;
  std::size_t index = 0;
  double grad_norm = 0.0;
  std::array<double, 3> bochner{};                          // one per step
  std::array<metric_lab::DecompositionResiduals, 3> dec{};  // one per step
  double product_rule_gap_order4 = 0.0;                     // at the reported step
};

struct StudyResult {
  std::vector<StudyPoint> points;
  std::size_t excluded = 0;
  std::size_t drawn = 0;
};

/// Residuals of the Bochner-type identity and of the decomposition at the
/// three steps, on `points` non-critical points per (metric, field).
inline StudyResult bochner_study(const BochnerStudyConfig& cfg) {
  using metric_lab::Real;
  if (cfg.steps.size() != 3) throw ConfigError("bochner study: need three steps");
  if (cfg.points == 0) throw ConfigError("bochner study: need at least one point");
  if (!(cfg.inner > 0.0 && cfg.inner <= 1.0)) throw ConfigError("bochner study: inner fraction must be in (0, 1]");
  StudyResult out;
  struct Job {
    std::string metric, field;
    metric_lab::RVec p;
    std::size_t index;
    double grad_norm;
  };
  std::vector<Job> jobs;
  std::mt19937_64 rng(cfg.seed);
  for (const auto& mname : study_metrics()) {
    const auto metric = study_metric(mname, cfg.m);
    Real half = std::numeric_limits<Real>::infinity();
    for (const auto& iv : metric.domain) half = std::min(half, (iv.hi - iv.lo) / 2);
    const Real margin = half * static_cast<Real>(1.0 - cfg.inner);
    for (const auto& fname : study_fields()) {
      const auto field = metric_lab::builtin_field(fname, cfg.m);
      std::size_t accepted = 0;
      std::size_t attempts = 0;
      while (accepted < cfg.points) {
        if (++attempts > 100 * cfg.points) throw NonConvergenceError("bochner study: too many near-critical points");
        auto p = metric_lab::sample_points(metric, 1, margin, rng).front();
        const auto G = metric.at(p);
        const auto V = metric_lab::detail::gradient_vector(
            G, metric_lab::holomorphic_part(fd::gradient(field.f, p, fd::Stencil{})));
        const double gn = static_cast<double>(metric_lab::detail::real_gradient_norm(G, V));
        ++out.drawn;
        if (!(gn > cfg.exclude_below)) {
          ++out.excluded;
          continue;
        }
        jobs.push_back({mname, fname, std::move(p), accepted++, gn});
      }
    }
  }
  out.points.resize(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    const auto metric = study_metric(j.metric, cfg.m);
    const auto field = metric_lab::builtin_field(j.field, cfg.m);
    StudyPoint sp{j.metric, j.field, j.index, j.grad_norm, {}, {}, 0.0};
    for (std::size_t k = 0; k < 3; ++k) {
      const fd::Stencil s{static_cast<Real>(cfg.steps[k]), 2};
      sp.bochner[k] = static_cast<double>(metric_lab::bochner_residual(field, metric, j.p, s));
      sp.dec[k] = metric_lab::decomposition_residuals(field, metric, j.p, s);
    }
    sp.product_rule_gap_order4 = static_cast<double>(
        metric_lab::decomposition_residuals(field, metric, j.p, {static_cast<Real>(cfg.steps[2]), 4})
            .product_rule_gap);
    out.points[i] = std::move(sp);
  });
  return out;
}

inline double halving_ratio(double coarse, double fine) { return std::abs(fine) / std::abs(coarse); }

/// Verdicts on a study: residual bounds at the reported step, halving ratios
/// in [0.15, 0.35] and exact recombination of the decomposition.
inline std::vector<Verdict> study_verdicts(const StudyResult& st, double bochner_bound = 1e-5,
                                           double decomposition_bound = 1e-4) {
  std::ostringstream ex;
  ex << "excluded " << st.excluded << " of " << st.drawn << " drawn points as near-critical";

  Verdict res{"bochner_identity_residual", "Bochner-type identity at h = 1e-3", 0};
  Verdict ord{"bochner_identity_order", "residual ratio under halving in [0.15, 0.35]", 0};
  Verdict dres{"decomposition_residuals", "divergence identities and full Bochner formula at h = 1e-3", 0};
  Verdict dord{"decomposition_order", "residual ratio under halving in [0.15, 0.35]", 0};
  Verdict rec{"decomposition_recombination", "two divergence identities sum to the full formula", 0};
  double worst_prg = 0.0;
  for (std::size_t i = 0; i < st.points.size(); ++i) {
    const auto& p = st.points[i];
    const double at = static_cast<double>(i);
    res.observe(bochner_bound - std::abs(p.bochner[2]), at);
    const double q = halving_ratio(p.bochner[0], p.bochner[1]);
    ord.observe(std::min(q - 0.15, 0.35 - q), at);
    const auto& d = p.dec[2];
    dres.observe(decomposition_bound - static_cast<double>(std::max({d.res22, d.res23, d.res21})), at);
    const std::array<double, 3> qs{halving_ratio(static_cast<double>(p.dec[0].res22), static_cast<double>(p.dec[1].res22)),
                                   halving_ratio(static_cast<double>(p.dec[0].res23), static_cast<double>(p.dec[1].res23)),
                                   halving_ratio(static_cast<double>(p.dec[0].res21), static_cast<double>(p.dec[1].res21))};
    for (double qq : qs) dord.observe(std::min(qq - 0.15, 0.35 - qq), at);
    rec.observe(1e-9 - static_cast<double>(d.recombination), at);
    worst_prg = std::max(worst_prg, p.product_rule_gap_order4);
  }
  res.note = ord.note = dres.note = dord.note = ex.str();
  rec.note = "order-4 product-rule gap at h = 1e-3 up to " + fixed17(worst_prg);
  return {res, ord, dres, dord, rec};
}

inline Report bochner_report(const BochnerStudyConfig& cfg, double bochner_bound = 1e-5,
                             double decomposition_bound = 1e-4) {
  const auto st = bochner_study(cfg);
  Report rep;
  rep.table = {"bochner-check",
               {"metric", "field", "point", "grad_norm", "residual_coarse", "residual_fine", "residual", "ratio",
                "res22", "res23", "res21", "recombination"},
               {}};
  for (const auto& p : st.points) {
    const auto& d = p.dec[2];
    rep.table.add({p.metric, p.field, static_cast<long long>(p.index), p.grad_norm, p.bochner[0], p.bochner[1],
                   p.bochner[2], halving_ratio(p.bochner[0], p.bochner[1]), static_cast<double>(d.res22),
                   static_cast<double>(d.res23), static_cast<double>(d.res21), static_cast<double>(d.recombination)});
  }
  rep.verdicts = study_verdicts(st, bochner_bound, decomposition_bound);
  return rep;
}

// ---------------------------------------------------------------------------
// riccati and average
// ---------------------------------------------------------------------------

inline Report riccati_report(int m, int k, const riccati::RicciProfile& profile, const riccati::IntegrationConfig& cfg,
                             double tolerance = 1e-6) {
  const auto cmp = riccati::compare_to_model(m, k, profile, cfg, tolerance);
  Report rep;
  rep.table = {"riccati", {"r", "u", "v", "u_model", "v_model", "margin_a", "margin_b"}, {}};
  for (const auto& row : cmp.rows) {
    rep.table.add({row.r, row.u, row.v, row.u_model, row.v_model, row.margin_a, row.margin_b});
  }
  rep.verdicts.push_back(cmp.verdict);
  return rep;
}

inline Report average_report(int m, const riccati::RicciProfile& profile, const riccati::IntegrationConfig& cfg,
                             double tolerance = 1e-6) {
  const auto env = riccati::averaged_envelope(m, profile, cfg, tolerance);
  Report rep;
  rep.table = {"average", {"r", "u", "w", "u_model", "w_model", "margin"}, {}};
  const std::size_t n = std::min(env.envelope.states.size(), env.model.states.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = env.envelope.states[i];
    const auto& b = env.model.states[i];
    rep.table.add({a.r, a.u, a.v, b.u, b.v, b.u - a.u});
  }
  rep.verdicts.push_back(env.verdict);
  Verdict pos{"averaged_envelope_positive", "off-radial envelope stays positive before blow-down", 0};
  for (const auto& s : env.envelope.states) pos.observe(s.v, s.r);
  pos.tolerance = 0.0;
  if (!(pos.worst_margin > 0.0)) pos.precondition_ok = false;
  rep.verdicts.push_back(pos);
  return rep;
}

// ---------------------------------------------------------------------------
// examples
// ---------------------------------------------------------------------------

inline Verdict closed_form_verdict(const std::vector<examples::ReportRow>& rows, double tol = 1e-12) {
  Verdict v{"closed_form_numbers", "diameters, holomorphic sectional curvature and entropies as arithmetic", 0};
  for (std::size_t i = 0; i < rows.size(); ++i) v.observe(tol - rows[i].abs_error(), static_cast<double>(i));
  return v;
}

inline Report examples_report(std::size_t mc_samples = 1'000'000, std::uint64_t seed = 42) {
  const auto rows = examples::closed_form_report();
  Report rep;
  rep.table = {"examples", {"quantity", "reference_value", "computed", "abs_error"}, {}};
  for (const auto& r : rows) rep.table.add({r.quantity, r.reference_value, r.computed, r.abs_error()});
  rep.verdicts = examples::inequality_report(mc_samples, seed);
  rep.verdicts.push_back(closed_form_verdict(rows));
  return rep;
}

// ---------------------------------------------------------------------------
// gradient
// ---------------------------------------------------------------------------

struct GradientCase {
  std::string sample;
  int n;
};

inline const std::vector<GradientCase>& gradient_cases() {
  static const std::vector<GradientCase> cases{{"flat_constant", 4},    {"flat_linear", 4},        {"flat_newton", 3},
                                               {"hyperbolic_power", 3}, {"hyperbolic_power", 4},   {"hyperbolic_poisson", 3},
                                               {"hyperbolic_poisson", 4}, {"hyperbolic_sum", 4}};
  return cases;
}

struct GradientRecord {
  std::string sample;
  int n = 0;
  std::size_t index = 0;
  gradient::YauQuantities q;
  gradient::ChainResiduals c;
  double log_identity = 0.0;
};

inline std::vector<GradientRecord> gradient_study(const fd::Stencil& s = {1e-3L, 4}) {
  std::vector<GradientRecord> out;
  for (const auto& gc : gradient_cases()) {
    const auto sample = gradient::builtin_sample(gc.sample, gc.n);
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
      const auto& p = sample.points[i];
      GradientRecord r{gc.sample, gc.n, i, gradient::yau_quantities(sample, p, s),
                       gradient::bochner_chain_residual(sample, p, s), 0.0};
      r.log_identity = static_cast<double>(gradient::log_identity_residual(sample, p, s));
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::vector<Verdict> gradient_verdicts(const std::vector<GradientRecord>& recs) {
  Verdict eq{"gradient_equality_case", "hyperbolic y^(n-1): g = (n-1)^2, w = 0, u = 0", 0};
  eq.tolerance = 0.0;
  Verdict chain{"gradient_chain_inequalities", "lower bound for Lap |grad h|^2 and u <= 2(n-1)w", 0};
  Verdict ident{"gradient_norm_identity", "<grad h, grad |grad h|^2> = 2 |grad h|^2 h_11", 0};
  Verdict logid{"gradient_log_identity", "Lap h = -|grad h|^2", 0};
  Verdict range{"gradient_w_range", "0 <= w <= (n-1)^2 and u >= 0", 0};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const double at = static_cast<double>(i);
    if (r.sample == "hyperbolic_power") {
      const double nn = (r.n - 1.0) * (r.n - 1.0);
      const double err = std::max({std::abs(static_cast<double>(r.q.g_val) - nn), std::abs(static_cast<double>(r.q.w_val)),
                                   std::abs(static_cast<double>(r.q.u_val))});
      eq.observe(1e-7 - err, at);
    }
    chain.observe(1e-6 - static_cast<double>(std::max(r.c.res63, r.c.res610)), at);
    ident.observe(1e-8 - static_cast<double>(r.c.identity64), at);
    logid.observe(1e-8 - r.log_identity, at);
    const double nn = (r.n - 1.0) * (r.n - 1.0);
    const double w = static_cast<double>(r.q.w_val);
    range.observe(std::min({w, nn - w, static_cast<double>(r.q.u_val)}), at);
  }
  range.tolerance = 1e-7;

  Verdict gap{"kahler_substitution_gap", "-(2m-1)^2 (m-1)/2 in exact rational arithmetic", 0};
  std::string values;
  for (int m = 2; m <= 6; ++m) {
    const auto g = gradient::kahler_substitution_gap(m);
    gap.observe(g.consistent() ? 0.0 : -1.0, m);
    values += (values.empty() ? "" : " ") + std::to_string(g.gap.numerator()) + "/" + std::to_string(g.gap.denominator());
  }
  gap.note = "gaps for m = 2..6: " + values;
  return {eq, chain, ident, logid, range, gap};
}

inline Report gradient_report(const fd::Stencil& s = {1e-3L, 4}) {
  const auto recs = gradient_study(s);
  Report rep;
  rep.table = {"gradient",
               {"sample", "n", "point", "g", "w", "u", "frame_ambiguous", "log_identity", "res_lap_g", "res_w",
                "slack_lap_g", "slack_w", "norm_identity", "min_ricci"},
               {}};
  for (const auto& r : recs) {
    rep.table.add({r.sample, static_cast<long long>(r.n), static_cast<long long>(r.index),
                   static_cast<double>(r.q.g_val), static_cast<double>(r.q.w_val), static_cast<double>(r.q.u_val),
                   r.q.frame_ambiguous, r.log_identity, static_cast<double>(r.c.res63),
                   static_cast<double>(r.c.res610), static_cast<double>(r.c.slack63),
                   static_cast<double>(r.c.slack610), static_cast<double>(r.c.identity64),
                   static_cast<double>(r.c.min_ricci)});
  }
  rep.verdicts = gradient_verdicts(recs);
  return rep;
}

}  // namespace kahlerlab::reports
