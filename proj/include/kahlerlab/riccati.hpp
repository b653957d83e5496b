#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kahlerlab/core.hpp"
#include "kahlerlab/models.hpp"
#include "kahlerlab/numerics/fornberg.hpp"
#include "kahlerlab/numerics/ode.hpp"

namespace kahlerlab::riccati {

/// (u, v) = (complex Laplacian of r, common off-radial entry r_{22̄}) at radius r.
struct RadialKahlerState {
  double r = 0.0;
  double u = 0.0;
  double v = 0.0;
};

// ---------------------------------------------------------------------------
// Ricci profiles
// ---------------------------------------------------------------------------

struct Bump {
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

/// Radial Ricci component R11(r) with an optional reference lower bound.
struct RicciProfile {
  std::string description;
  std::function<double(double)> R11;
  double lower_bound = -std::numeric_limits<double>::infinity();

  double operator()(double r) const { return R11(r); }
};

inline RicciProfile constant_profile(double value) {
  std::ostringstream os;
  os.precision(17);
  os << "constant:" << value;
  return {os.str(), [value](double) { return value; }, value};
}

/// R11 = (m+1) c, the radial Ricci component of the complex space form.
inline RicciProfile model_profile(double c, int m) {
  auto p = constant_profile((m + 1) * c);
  std::ostringstream os;
  os.precision(17);
  os << "model:" << c;
  p.description = os.str();
  return p;
}

/// base + sum a_j sin^2(w_j r + phi_j). The lower bound is base when all
/// amplitudes are nonnegative.
inline RicciProfile bumps_profile(double base, std::vector<Bump> bumps) {
  double lower = base;
  std::ostringstream os;
  os.precision(17);
  os << "bumps:" << base;
  for (const auto& b : bumps) {
    if (b.amplitude < 0) lower += b.amplitude;
    os << ',' << b.amplitude << ',' << b.frequency << ',' << b.phase;
  }
  return {os.str(),
          [base, bumps = std::move(bumps)](double r) {
            double out = base;
            for (const auto& b : bumps) {
              const double s = std::sin(b.frequency * r + b.phase);
              out += b.amplitude * s * s;
            }
            return out;
          },
          lower};
}

/// Piecewise-linear interpolation of a table; constant beyond the ends.
inline RicciProfile table_profile(std::vector<double> r, std::vector<double> values) {
  const RadialProfile checked(r, values);  // validates ordering and lengths
  if (checked.empty()) throw ConfigError("table profile needs at least one sample");
  const double lower = *std::min_element(values.begin(), values.end());
  return {"table",
          [r = std::move(r), values = std::move(values)](double x) {
            if (x <= r.front()) return values.front();
            if (x >= r.back()) return values.back();
            const auto it = std::upper_bound(r.begin(), r.end(), x);
            const auto i = static_cast<std::size_t>(it - r.begin());
            const double t = (x - r[i - 1]) / (r[i] - r[i - 1]);
            return values[i - 1] + t * (values[i] - values[i - 1]);
          },
          lower};
}

/// Seeded admissible profile: (m+1)k plus three squared-sine bumps.
inline RicciProfile random_admissible_profile(int m, double k, std::mt19937_64& rng, std::size_t bumps = 3,
                                              double max_amplitude = 2.0) {
  std::uniform_real_distribution<double> amp(0.0, max_amplitude);
  std::uniform_real_distribution<double> freq(0.5, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<Bump> bs;
  for (std::size_t j = 0; j < bumps; ++j) {
    Bump b;
    b.amplitude = amp(rng);
    b.frequency = freq(rng);
    b.phase = phase(rng);
    bs.push_back(b);
  }
  return bumps_profile((m + 1) * k, std::move(bs));
}

namespace detail {

inline std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("profile: '" + item + "' is not a number");
    }
    if (used != item.size() || !std::isfinite(v)) throw ConfigError("profile: '" + item + "' is not a number");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Parses "constant:V", "model:c" or "bumps:base,a1,w1,p1,...".
inline RicciProfile parse_profile(const std::string& spec, int m) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("profile must look like kind:params");
  const std::string kind = spec.substr(0, colon);
  const auto nums = detail::parse_numbers(spec.substr(colon + 1));
  if (kind == "constant") {
    if (nums.size() != 1) throw ConfigError("constant profile takes one value");
    return constant_profile(nums[0]);
  }
  if (kind == "model") {
    if (nums.size() != 1) throw ConfigError("model profile takes one curvature value");
    return model_profile(nums[0], m);
  }
  if (kind == "bumps") {
    if (nums.empty() || (nums.size() - 1) % 3 != 0) {
      throw ConfigError("bumps profile takes base followed by (amplitude, frequency, phase) triples");
    }
    std::vector<Bump> bs;
    for (std::size_t i = 1; i < nums.size(); i += 3) bs.push_back({nums[i], nums[i + 1], nums[i + 2]});
    return bumps_profile(nums[0], std::move(bs));
  }
  throw ConfigError("unknown profile kind '" + kind + "'");
}

/// {"kind": "constant", "value": V} | {"kind": "bumps", "base": B, "bumps":
/// [{"amplitude", "frequency", "phase"}]} | {"kind": "table", "r": [...],
/// "values": [...]}; an optional "lower_bound" overrides the inferred one.
inline RicciProfile profile_from_json(const nlohmann::json& doc) {
  try {
    const auto kind = doc.at("kind").get<std::string>();
    RicciProfile out;
    if (kind == "constant") {
      out = constant_profile(doc.at("value").get<double>());
    } else if (kind == "bumps") {
      std::vector<Bump> bs;
      for (const auto& b : doc.value("bumps", nlohmann::json::array())) {
        bs.push_back({b.at("amplitude").get<double>(), b.at("frequency").get<double>(), b.value("phase", 0.0)});
      }
      out = bumps_profile(doc.at("base").get<double>(), std::move(bs));
    } else if (kind == "table") {
      out = table_profile(doc.at("r").get<std::vector<double>>(), doc.at("values").get<std::vector<double>>());
    } else {
      throw ConfigError("unknown profile kind '" + kind + "'");
    }
    if (doc.contains("lower_bound")) out.lower_bound = doc.at("lower_bound").get<double>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("profile JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

enum class Method { rk4, rk45 };

struct IntegrationConfig {
  double r0 = 1e-3;
  double r_max = 5.0;
  Method method = Method::rk45;
  double rk4_step = 1e-4;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double blowup_guard = 1e6;
  std::size_t output_points = 200;  // geometric output grid on [r0, r_max]
  std::vector<double> grid;         // explicit output grid; overrides output_points

  void validate() const {
    if (!(r0 > 0.0) || !(r_max > r0)) throw ConfigError("integration: need 0 < r0 < r_max");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(rk4_step > 0.0) || !(blowup_guard > 0.0)) {
      throw ConfigError("integration: tolerances, step and guard must be positive");
    }
    if (grid.empty() && output_points < 2) throw ConfigError("integration: need at least two output points");
  }

  [[nodiscard]] std::vector<double> output_grid() const {
    if (!grid.empty()) {
      const RadialProfile check(grid, std::vector<double>(grid.size(), 0.0));
      if (grid.front() < r0) throw ConfigError("integration: output grid starts below r0");
      return grid;
    }
    return geometric_grid(r0, r_max, output_points);
  }
};

struct RadialSolution {
  std::vector<RadialKahlerState> states;  // one per reached output grid point
  bool blew_down = false;
  double blowdown_radius = std::numeric_limits<double>::quiet_NaN();
};

/// Small-r seed consistent with a space form of Ricci R11(r0) = (m+1) c.
inline RadialKahlerState seed_state(int m, double r0, double c) {
  if (m < 2) throw ConfigError("seed_state: m must be >= 2");
  if (!(r0 > 0.0)) throw ConfigError("seed_state: r0 must be positive");
  const double r3 = r0 * r0 * r0;
  // ct(k, r) = 1/r - k r/3 - k^2 r^3/45 + O(r^5)
  const double a = 1.0 / r0 - 2.0 * c * r0 / 3.0 - 4.0 * c * c * r3 / 45.0;  // ct(2c)
  const double b = 1.0 / r0 - c * r0 / 6.0 - c * c * r3 / 180.0;            // ct(c/2)
  return {r0, 0.5 * a + (m - 1) * b, b};
}

inline numerics::State<2> radial_rhs(int m, double R11, const numerics::State<2>& y) {
  const double u = y[0];
  const double v = y[1];
  const double r11 = u - (m - 1) * v;
  return {-0.5 * R11 - (m - 1) * v * v - 2.0 * r11 * r11, 2.0 * v * (u - m * v)};
}

namespace detail {

template <class Rhs>
RadialSolution integrate_system(const Rhs& rhs, RadialKahlerState start, const IntegrationConfig& cfg) {
  cfg.validate();
  const auto grid = cfg.output_grid();
  RadialSolution sol;
  numerics::State<2> y{start.u, start.v};
  double t = start.r;
  double h = 0.0;
  const double guard_level = cfg.blowup_guard;
  auto guard = [guard_level](double, const numerics::State<2>& s) {
    return s[0] < -guard_level || std::abs(s[0]) > guard_level * 1e3 || std::abs(s[1]) > guard_level * 1e3;
  };
  numerics::StepControl ctl;
  ctl.rel_tol = cfg.rel_tol;
  ctl.abs_tol = cfg.abs_tol;
  for (double target : grid) {
    if (target < t) continue;
    if (target > t) {
      numerics::AdvanceResult<2> res;
      if (cfg.method == Method::rk45) {
        res = numerics::advance_dopri<2>(rhs, t, y, target, ctl, guard, h);
      } else {
        const auto steps = static_cast<std::size_t>(std::ceil((target - t) / cfg.rk4_step - 1e-9));
        res = numerics::advance_rk4<2>(rhs, t, y, target, std::max<std::size_t>(steps, 1), guard);
      }
      if (res.reason != numerics::StopReason::reached) {
        sol.blew_down = true;
        sol.blowdown_radius = res.t;
        return sol;
      }
      t = res.t;
      y = res.y;
    }
    sol.states.push_back({target, y[0], y[1]});
  }
  return sol;
}

}  // namespace detail

/// Integrates the unitary-invariant radial system from `start`.
inline RadialSolution integrate_from(int m, const RicciProfile& profile, RadialKahlerState start,
                                     const IntegrationConfig& cfg) {
  if (m < 2) throw ConfigError("integrate: m must be >= 2");
  auto rhs = [&](double r, const numerics::State<2>& y) { return radial_rhs(m, profile(r), y); };
  return detail::integrate_system(rhs, start, cfg);
}

/// Seeds at cfg.r0 from the local Ricci value and integrates to cfg.r_max.
inline RadialSolution integrate_radial(int m, const RicciProfile& profile, const IntegrationConfig& cfg) {
  cfg.validate();
  const double c = profile(cfg.r0) / (m + 1);
  return integrate_from(m, profile, seed_state(m, cfg.r0, c), cfg);
}

// ---------------------------------------------------------------------------
// Comparison against the model
// ---------------------------------------------------------------------------

struct ComparisonRow {
  double r = 0.0;
  double u = 0.0;
  double v = 0.0;
  double u_model = 0.0;
  double v_model = 0.0;
  double margin_a = 0.0;
  double margin_b = 0.0;
};

struct ComparisonResult {
  Verdict verdict;
  std::vector<ComparisonRow> rows;
  RadialSolution profile_solution;
  RadialSolution model_solution;
};

/// Scans the profile on the output grid and midpoints for values below the bound.
inline std::pair<bool, double> check_lower_bound(const RicciProfile& profile, double bound,
                                                 const std::vector<double>& grid, double tol = 1e-12) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (profile(grid[i]) < bound - tol) return {false, grid[i]};
    if (i + 1 < grid.size()) {
      const double mid = 0.5 * (grid[i] + grid[i + 1]);
      if (profile(mid) < bound - tol) return {false, mid};
    }
  }
  return {true, 0.0};
}

/// Laplacian comparison under R11 >= (m+1) k for k = -1 or +1.
///
/// k = -1: margins (u_model - u, v_model - v). k = +1: margins
/// (v_model - v, (u_model - u) - (m-1)(v_model - v)). Both systems use the
/// same integrator and grid; rows stop where either solution blows down.
inline ComparisonResult compare_to_model(int m, int k, const RicciProfile& profile, const IntegrationConfig& cfg,
                                         double tolerance = 1e-6) {
  if (k != -1 && k != 1) throw ConfigError("compare: k must be -1 or +1");
  ComparisonResult out;
  out.verdict.name = k < 0 ? "laplacian_comparison_negative" : "laplacian_comparison_positive";
  out.verdict.anchor = "unitary-invariant Laplacian comparison, Ric >= (m+1)k";
  out.verdict.tolerance = tolerance;
  const double bound = (m + 1) * k;
  const auto grid = cfg.output_grid();
  const auto [ok, where] = check_lower_bound(profile, bound, grid);
  if (!ok) {
    out.verdict.precondition_ok = false;
    std::ostringstream os;
    os.precision(17);
    os << "Ricci profile drops below (m+1)k at r=" << where;
    out.verdict.note = os.str();
  }
  out.profile_solution = integrate_radial(m, profile, cfg);
  out.model_solution = integrate_radial(m, model_profile(k, m), cfg);
  const auto& a = out.profile_solution.states;
  const auto& b = out.model_solution.states;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    ComparisonRow row{a[i].r, a[i].u, a[i].v, b[i].u, b[i].v, 0.0, 0.0};
    if (k < 0) {
      row.margin_a = row.u_model - row.u;
      row.margin_b = row.v_model - row.v;
    } else {
      row.margin_a = row.v_model - row.v;
      row.margin_b = (row.u_model - row.u) - (m - 1) * (row.v_model - row.v);
    }
    out.verdict.observe(std::min(row.margin_a, row.margin_b), row.r);
    out.rows.push_back(row);
  }
  if (out.verdict.note.empty() && out.profile_solution.blew_down) {
    std::ostringstream os;
    os.precision(17);
    os << "profile solution blows down at r=" << out.profile_solution.blowdown_radius;
    out.verdict.note = os.str();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sphere-averaged envelope
// ---------------------------------------------------------------------------

struct EnvelopeResult {
  RadialSolution envelope;  // states carry (u, V) with V = (m-1) r_{22̄}
  RadialSolution model;     // same system driven by the constant bound
  Verdict verdict;          // envelope u <= model u
};

inline numerics::State<2> envelope_rhs(int m, double P, const numerics::State<2>& y) {
  const double u = y[0];
  const double V = y[1];
  const double q = 1.0 / (m - 1.0);
  return {-0.5 * P - 2.0 * u * u + 4.0 * u * V - (2.0 * m - 1.0) * q * V * V, 2.0 * u * V - 2.0 * m * q * V * V};
}

/// Integrates the averaged system as equalities. The comparison envelope uses
/// the profile's lower bound when it is finite, otherwise the value at r0.
inline EnvelopeResult averaged_envelope(int m, const RicciProfile& profile, const IntegrationConfig& cfg,
                                        double tolerance = 1e-6) {
  if (m < 2) throw ConfigError("averaged_envelope: m must be >= 2");
  cfg.validate();
  auto seed = [&](double ric) {
    auto s = seed_state(m, cfg.r0, ric / (m + 1));
    s.v *= (m - 1);
    return s;
  };
  auto run = [&](const RicciProfile& p) {
    auto rhs = [&](double r, const numerics::State<2>& y) { return envelope_rhs(m, p(r), y); };
    return detail::integrate_system(rhs, seed(p(cfg.r0)), cfg);
  };
  EnvelopeResult out;
  out.envelope = run(profile);
  const double bound = std::isfinite(profile.lower_bound) ? profile.lower_bound : profile(cfg.r0);
  out.model = run(constant_profile(bound));
  out.verdict.name = "averaged_envelope_below_model";
  out.verdict.anchor = "averaged Laplacian comparison";
  out.verdict.tolerance = tolerance;
  const std::size_t n = std::min(out.envelope.states.size(), out.model.states.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.verdict.observe(out.model.states[i].u - out.envelope.states[i].u, out.envelope.states[i].r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consistency checks on solutions
// ---------------------------------------------------------------------------

/// Relative residual |v' - 2v(u - m v)| / max(|v'|, |2v(u - m v)|, 1) with v'
/// from 7-point nonuniform differences of the sampled states.
inline RadialProfile sphere_identity_residual(int m, const std::vector<RadialKahlerState>& states) {
  if (states.empty()) throw ConfigError("sphere_identity_residual: empty state sequence");
  std::vector<double> r, v;
  for (const auto& s : states) {
    r.push_back(s.r);
    v.push_back(s.v);
  }
  const auto dv = numerics::nonuniform_derivative(r, v, 7);
  std::vector<double> res(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double F = 2.0 * states[i].v * (states[i].u - m * states[i].v);
    res[i] = std::abs(dv[i] - F) / std::max({std::abs(dv[i]), std::abs(F), 1.0});
  }
  return RadialProfile(std::move(r), std::move(res));
}

/// Substituting the hyperbolic model Hessian of r into the Bochner-type identity.
struct GapExpression {
  double substituted = 0.0;  // left side minus (f11 Lap f - |f_{ab̄}|^2), term by term
  double as_printed = 0.0;   // (m-1)/2 (2 coth^2 r - 1)
  double stated = 0.0;       // (m-1)/2
  [[nodiscard]] double discrepancy() const { return as_printed - substituted; }
};

inline GapExpression gap_expression(int m, double r) {
  if (m < 2) throw ConfigError("gap_expression: m must be >= 2");
  if (!(r > 0.0)) throw DomainError("gap_expression: r must be positive");
  const auto S = models::model_hessian_S(-1.0, m, r);
  const double coth = S.offdiag;
  const double csch2 = 1.0 / (std::sinh(r) * std::sinh(r));
  // (1/2)<grad r, grad((m-1) coth r)> with |grad r| = 1
  const double lhs = 0.5 * (m - 1) * -csch2;
  const double lap = S.s11 + (m - 1) * S.offdiag;
  const double hess_sq = S.s11 * S.s11 + (m - 1) * S.offdiag * S.offdiag;
  GapExpression g;
  g.substituted = lhs - (S.s11 * lap - hess_sq);
  g.as_printed = 0.5 * (m - 1) * (2.0 * coth * coth - 1.0);
  g.stated = 0.5 * (m - 1);
  return g;
}

/// Real Laplacian 2u stays in [1-n, (n-1) coth 1] on r in [r_lo, r_hi] (r_lo > 1)
/// for each solution. The looser 100(n-1) bound is recorded in the note.
inline Verdict laplacian_bound_sanity(int n, double r_lo, double r_hi,
                                      const std::vector<std::vector<RadialKahlerState>>& runs,
                                      double tolerance = 1e-9) {
  if (n < 4 || n % 2 != 0) throw ConfigError("laplacian_bound_sanity: n must be even and >= 4");
  if (!(r_lo > 1.0) || !(r_hi > r_lo)) throw ConfigError("laplacian_bound_sanity: need 1 < r_lo < r_hi");
  Verdict v;
  v.name = "laplacian_bound_sanity";
  v.anchor = "1-n <= Lap r <= (n-1) coth 1 for r > 1";
  v.tolerance = tolerance;
  const double lo = 1.0 - n;
  const double hi = (n - 1) / std::tanh(1.0);
  for (const auto& run : runs) {
    for (const auto& s : run) {
      if (s.r < r_lo || s.r > r_hi) continue;
      const double lap = 2.0 * s.u;
      v.observe(std::min(lap - lo, hi - lap), s.r);
    }
  }
  std::ostringstream os;
  os.precision(17);
  os << "upper bound (n-1)coth(1)=" << hi << " vs slack bound 100(n-1)=" << 100.0 * (n - 1);
  v.note = os.str();
  return v;
}

/// Admissible samples for the sanity check: -(n-1) <= R11 <= 0.
inline std::vector<RicciProfile> sanity_profiles(int n, std::mt19937_64& rng, std::size_t random_count = 5) {
  std::vector<RicciProfile> out;
  out.push_back(constant_profile(-(n - 1.0)));
  out.push_back(constant_profile(0.0));
  std::uniform_real_distribution<double> freq(0.5, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> share(0.0, 1.0);
  for (std::size_t i = 0; i < random_count; ++i) {
    // -(n-1) + a sin^2(...) with 0 <= a <= n-1
    out.push_back(bumps_profile(-(n - 1.0), {{(n - 1.0) * share(rng), freq(rng), phase(rng)}}));
  }
  return out;
}

}  // namespace kahlerlab::riccati
