#include "tsbsde/linear.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tsbsde/condexp.hpp"
#include "tsbsde/errors.hpp"
#include "tsbsde/parallel.hpp"

namespace tsbsde {

std::string to_string(GammaVariant v) { return v == GammaVariant::exp_integral ? "exp" : "nabla"; }

GammaVariant parse_gamma_variant(std::string_view text) {
  if (text == "exp") return GammaVariant::exp_integral;
  if (text == "nabla") return GammaVariant::nabla_exponential;
  throw ValidationError("unknown gamma variant '" + std::string(text) + "' (expected exp|nabla)");
}

std::vector<double> gamma_path(const GridScale& grid, const StepFunction& a, GammaVariant variant) {
  std::vector<double> g(grid.size(), 1.0);
  double integral = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double an = a(grid.time(i)) * grid.nu(i);
    if (variant == GammaVariant::exp_integral) {
      integral += an;
      g[i] = std::exp(integral);
    } else {
      g[i] = g[i - 1] * (grid.dense_refinement(i) ? std::exp(an) : 1.0 + an);
    }
  }
  return g;
}

namespace {

MartingalePath density(const StepFunction& b, const PathEnsemble& ensemble) {
  const MartingalePath m = stochastic_integral(
      ensemble, [&](std::size_t step, const PathHistory& h) { return b(h.grid().time(step)); });
  return doleans_exponential(m);
}

std::size_t count_flagged(const MartingalePath& e) {
  return static_cast<std::size_t>(std::count(e.nonpositive_factor.begin(), e.nonpositive_factor.end(), 1));
}

}  // namespace

LinearClosedForm linear_solve_closed_form(const LinearData& data, const PathEnsemble& ensemble,
                                          std::size_t basis_degree) {
  const GridScale& grid = ensemble.grid();
  const std::size_t n = grid.steps();
  const std::size_t paths = ensemble.paths();
  LinearClosedForm out;
  out.gamma = gamma_path(grid, data.a, data.gamma);
  const GammaVariant other =
      data.gamma == GammaVariant::exp_integral ? GammaVariant::nabla_exponential : GammaVariant::exp_integral;
  const std::vector<double> alt = gamma_path(grid, data.a, other);
  for (std::size_t i = 0; i <= n; ++i) {
    out.gamma_divergence = std::max(out.gamma_divergence, std::abs(out.gamma[i] - alt[i]) / std::abs(out.gamma[i]));
  }

  const MartingalePath e = density(data.b, ensemble);
  out.warnings = e.warnings;
  out.flagged_paths = count_flagged(e);
  if (out.flagged_paths > 0) {
    out.warnings.push_back(std::to_string(out.flagged_paths) + " path(s) with a non-positive Doleans factor");
  }

  // target_i = (xi Gamma_T + sum_{j>i} Gamma_j c_j nu_j) / Gamma_i, accumulated backward.
  std::vector<double> tail(paths), target(paths);
  for (std::size_t p = 0; p < paths; ++p) tail[p] = data.xi(ensemble.w(p, n)) * out.gamma[n] * e(p, n);
  const RegressionBasis basis(ensemble.dims(), basis_degree);
  out.y.resize(n + 1);
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t p = 0; p < paths; ++p) target[p] = tail[p] / (out.gamma[i] * e(p, i));
    if (i == n || i == 0) {
      out.y[i] = sample_estimate(target);
    } else {
      out.y[i] = sample_estimate(lsmc_condexp(ensemble, i, target, basis));
    }
    if (i > 0) {
      const double cn = data.c(grid.time(i)) * grid.nu(i) * out.gamma[i];
      for (std::size_t p = 0; p < paths; ++p) tail[p] += cn * e(p, i);
    }
  }
  return out;
}

GirsanovResult girsanov_shift(const StepFunction& b, const PathEnsemble& ensemble) {
  const GridScale& grid = ensemble.grid();
  const std::size_t paths = ensemble.paths();
  const std::size_t points = grid.size();
  GirsanovResult r{MartingalePath(grid, paths), {}, {}, {}, {}, 0};
  const MartingalePath e = density(b, ensemble);
  r.flagged_paths = count_flagged(e);
  r.weights = e.slice(points - 1);
  std::vector<double> drift(points, 0.0);
  for (std::size_t i = 1; i < points; ++i) drift[i] = drift[i - 1] + b(grid.time(i)) * grid.nu(i);
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t i = 0; i < points; ++i) r.shifted(p, i) = ensemble.w(p, i) - drift[i];
  }
  std::vector<double> col(paths);
  for (std::size_t i = 0; i < points; ++i) {
    for (std::size_t p = 0; p < paths; ++p) col[p] = r.shifted(p, i);
    r.plain_mean.push_back(sample_estimate(col));
    for (std::size_t p = 0; p < paths; ++p) col[p] *= r.weights[p];
    r.weighted_mean.push_back(sample_estimate(col));
  }
  r.weight_mean = sample_estimate(r.weights);
  return r;
}

ComparisonReport comparison_check(const ConditionalExpectation& engine, const BsdeData& first, const BsdeData& second,
                                  double tolerance, std::size_t samples, std::uint64_t seed) {
  const GridScale& grid = engine.grid();
  const std::size_t n = grid.steps();
  const std::size_t states = engine.states();
  const std::size_t d = engine.dims();
  ComparisonReport r;
  r.tolerance = tolerance;
  auto refuse = [&](std::string why) {
    r.refused = true;
    r.reason = std::move(why);
    return r;
  };

  const Field xi1 = terminal_field(engine, first.terminal);
  const Field xi2 = terminal_field(engine, second.terminal);
  for (std::size_t s = 0; s < states; ++s) {
    if (xi1[s] < xi2[s]) return refuse("terminal hypothesis fails: xi1 < xi2 at state " + std::to_string(s));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, grid.horizon());
  std::uniform_real_distribution<double> arg(-10.0, 10.0);
  std::vector<double> z(d);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = time(rng), y = arg(rng);
    for (auto& v : z) v = arg(rng);
    if (first.driver(t, y, z) < second.driver(t, y, z)) {
      return refuse("driver hypothesis fails: g1 < g2 at sampled t=" + std::to_string(t));
    }
  }

  const BsdeSolution s2 = solve_backward(engine, second.driver, second.terminal);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = grid.time(i);
    for (std::size_t s = 0; s < states; ++s) {
      for (std::size_t j = 0; j < d; ++j) z[j] = s2.z[j][i][s];
      const double y = s2.y[i - 1][s];
      if (first.driver(t, y, z) < second.driver(t, y, z)) {
        return refuse("driver hypothesis fails along the second solution at t=" + std::to_string(t));
      }
    }
  }

  const BsdeSolution s1 = solve_backward(engine, first.driver, first.terminal);
  r.min_diff.assign(n + 1, 0.0);
  r.overall_min = INFINITY;
  for (std::size_t i = 0; i <= n; ++i) {
    double m = INFINITY;
    for (std::size_t s = 0; s < states; ++s) m = std::min(m, s1.y[i][s] - s2.y[i][s]);
    r.min_diff[i] = m;
    r.overall_min = std::min(r.overall_min, m);
  }
  r.pass = r.overall_min >= -tolerance;
  return r;
}

double gaussian_linear_reference(double a, double b, double c, double horizon, const TerminalCondition& xi,
                                 std::size_t gh_nodes) {
  if (!(horizon > 0.0)) throw ValidationError("gaussian_linear_reference: horizon must be positive");
  const GaussHermite rule(gh_nodes);
  const double sd = std::sqrt(horizon);
  double mean = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) mean += rule.weight()[k] * xi(b * horizon + sd * rule.abscissa()[k]);
  const double growth = std::exp(a * horizon);
  const double source = a == 0.0 ? c * horizon : c * std::expm1(a * horizon) / a;
  return growth * mean + source;
}

}  // namespace tsbsde
