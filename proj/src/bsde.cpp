#include "tsbsde/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tsbsde/errors.hpp"
#include "tsbsde/parallel.hpp"

namespace tsbsde {

namespace {

constexpr double kInnerTol = 1e-12;
constexpr std::size_t kInnerMaxIters = 500;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool is_constant_field(std::span<const double> f) {
  return std::all_of(f.begin(), f.end(), [&](double v) { return v == f[0]; });
}

// E[(next - mean - z . dW)^2 | F_{i-1}] on every state.
Field increment_variance(const ConditionalExpectation& engine, std::size_t i, std::span<const double> next,
                         std::span<const double> mean, const std::vector<FieldSeries>& z) {
  const std::size_t d = z.size();
  return engine.step_expectation(i, next, [&](std::size_t s, double v, std::span<const double> dw) {
    double r = v - mean[s];
    for (std::size_t j = 0; j < d; ++j) r -= z[j][i][s] * dw[j];
    return r * r;
  });
}

// Z_i, the conditional mean of Y_i and the variance of dN_i, written into sol; returns the mean.
Field fill_step(const ConditionalExpectation& engine, BsdeSolution& sol, std::size_t i) {
  const std::span<const double> next = sol.y[i];
  const std::size_t states = next.size();
  if (is_constant_field(next)) return Field(states, next[0]);
  const double nu = engine.grid().nu(i);
  StepMoments mom = engine.step_moments(i, next);
  for (std::size_t j = 0; j < sol.dims; ++j) {
    auto z = sol.z[j][i];
    for (std::size_t s = 0; s < states; ++s) z[s] = mom.cross[j][s] / nu;
  }
  const Field var = increment_variance(engine, i, next, mom.mean, sol.z);
  std::copy(var.begin(), var.end(), sol.n_var[i].begin());
  return std::move(mom.mean);
}

BsdeSolution empty_solution(const ConditionalExpectation& engine) {
  const std::size_t points = engine.grid().size();
  BsdeSolution sol;
  sol.dims = engine.dims();
  sol.y = FieldSeries(points, engine.states());
  sol.z.assign(sol.dims, FieldSeries(points, engine.states()));
  sol.n_var = FieldSeries(points, engine.states());
  return sol;
}

double unconditional(const ConditionalExpectation& engine, std::size_t i, std::span<const double> f) {
  return engine.expectation(i, f).mean;
}

}  // namespace

std::string to_string(DriverKind kind) {
  switch (kind) {
    case DriverKind::zero: return "zero";
    case DriverKind::constant: return "constant";
    case DriverKind::linear: return "linear";
    case DriverKind::sin_cos: return "sin_cos";
    case DriverKind::tanh_mix: return "tanh_mix";
  }
  return "zero";
}

DriverKind parse_driver_kind(std::string_view text) {
  for (DriverKind k : {DriverKind::zero, DriverKind::constant, DriverKind::linear, DriverKind::sin_cos,
                       DriverKind::tanh_mix}) {
    if (text == to_string(k)) return k;
  }
  throw ValidationError("unknown driver kind '" + std::string(text) +
                        "' (expected zero|constant|linear|sin_cos|tanh_mix)");
}

Driver Driver::constant(StepFunction c) {
  Driver d;
  d.kind = DriverKind::constant;
  d.c = std::move(c);
  return d;
}

Driver Driver::linear(StepFunction a, StepFunction b, StepFunction c) {
  Driver d;
  d.kind = DriverKind::linear;
  d.a = std::move(a);
  d.b = std::move(b);
  d.c = std::move(c);
  return d;
}

Driver Driver::builtin(DriverKind kind, double s, StepFunction c) {
  if (kind != DriverKind::sin_cos && kind != DriverKind::tanh_mix) {
    throw ValidationError("Driver::builtin: not a built-in nonlinear driver");
  }
  Driver d;
  d.kind = kind;
  d.s = s;
  d.c = std::move(c);
  return d;
}

double Driver::operator()(double t, double y, std::span<const double> z) const {
  const double z0 = z.empty() ? 0.0 : z[0];
  switch (kind) {
    case DriverKind::zero: return 0.0;
    case DriverKind::constant: return c(t);
    case DriverKind::linear: return a(t) * y + b(t) * z0 + c(t);
    case DriverKind::sin_cos: return s * (std::sin(y) + std::cos(z0)) + c(t);
    case DriverKind::tanh_mix: return 0.5 * s * (std::tanh(y) - std::tanh(z0)) + c(t);
  }
  return 0.0;
}

double Driver::lipschitz() const {
  if (declared_lipschitz) return *declared_lipschitz;
  switch (kind) {
    case DriverKind::zero:
    case DriverKind::constant: return 0.0;
    case DriverKind::linear: return std::max(a.sup_abs(), b.sup_abs());
    case DriverKind::sin_cos: return std::abs(s);
    case DriverKind::tanh_mix: return 0.5 * std::abs(s);
  }
  return 0.0;
}

bool Driver::depends_on_yz() const {
  switch (kind) {
    case DriverKind::zero:
    case DriverKind::constant: return false;
    case DriverKind::linear: return !a.is_zero() || !b.is_zero();
    default: return s != 0.0;
  }
}

double lipschitz_spot_check(const Driver& driver, double horizon, std::size_t dims, std::size_t samples,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, horizon);
  std::uniform_real_distribution<double> arg(-10.0, 10.0);
  std::vector<double> z1(dims), z2(dims);
  double worst = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = time(rng);
    const double y1 = arg(rng), y2 = arg(rng);
    double dz = 0.0;
    for (std::size_t j = 0; j < dims; ++j) {
      z1[j] = arg(rng);
      z2[j] = arg(rng);
      dz += (z1[j] - z2[j]) * (z1[j] - z2[j]);
    }
    const double denom = std::abs(y1 - y2) + std::sqrt(dz);
    if (denom == 0.0) continue;
    worst = std::max(worst, std::abs(driver(t, y1, z1) - driver(t, y2, z2)) / denom);
  }
  const double L = driver.lipschitz();
  if (worst > L * (1.0 + 1e-9) + 1e-12) {
    throw ValidationError("driver violates its Lipschitz constant " + fmt(L) + ": observed ratio " + fmt(worst));
  }
  return worst;
}

std::string to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::identity: return "identity";
    case TerminalKind::square: return "square";
    case TerminalKind::call: return "call";
    case TerminalKind::constant: return "constant";
  }
  return "identity";
}

TerminalKind parse_terminal_kind(std::string_view text) {
  for (TerminalKind k : {TerminalKind::identity, TerminalKind::square, TerminalKind::call, TerminalKind::constant}) {
    if (text == to_string(k)) return k;
  }
  throw ValidationError("unknown terminal kind '" + std::string(text) + "' (expected identity|square|call|constant)");
}

double TerminalCondition::operator()(double w) const {
  switch (kind) {
    case TerminalKind::identity: return w + offset;
    case TerminalKind::square: return w * w + offset;
    case TerminalKind::call: return std::max(w - strike, 0.0) + offset;
    case TerminalKind::constant: return value + offset;
  }
  return 0.0;
}

Field terminal_field(const ConditionalExpectation& engine, const TerminalCondition& terminal) {
  return engine.evaluate(engine.grid().steps(), [&](std::span<const double> w) { return terminal(w[0]); });
}

BsdeSolution solve_backward(const ConditionalExpectation& engine, const Driver& driver,
                            const TerminalCondition& terminal) {
  const GridScale& grid = engine.grid();
  const std::size_t n = grid.steps();
  const std::size_t states = engine.states();
  const double L = driver.lipschitz();
  const bool closed = driver.linear_in_y();

  for (std::size_t i = 1; i <= n; ++i) {
    const double nu = grid.nu(i), t = grid.time(i);
    if (closed) {
      if (!(1.0 - driver.a(t) * nu > 0.0)) {
        throw StepSizeError("implicit step at t=" + fmt(t) + " has 1 - a nu = " + fmt(1.0 - driver.a(t) * nu) +
                            " <= 0; refine delta");
      }
    } else if (!(L * nu < 1.0)) {
      throw StepSizeError("implicit step at t=" + fmt(t) + " has L nu = " + fmt(L * nu) +
                          " >= 1; refine delta (the scale's own gaps must also satisfy L nu < 1)");
    }
  }

  BsdeSolution sol = empty_solution(engine);
  sol.diagnostics.solver = "backward";
  sol.diagnostics.lipschitz = L;
  const Field xi = terminal_field(engine, terminal);
  std::copy(xi.begin(), xi.end(), sol.y[n].begin());

  std::vector<std::size_t> iters(states, 0);
  for (std::size_t i = n; i >= 1; --i) {
    const double nu = grid.nu(i), t = grid.time(i);
    const Field mean = fill_step(engine, sol, i);
    auto prev = sol.y[i - 1];
    const std::size_t d = sol.dims;
    auto solve_state = [&](std::size_t s, std::vector<double>& z) -> std::size_t {
      for (std::size_t j = 0; j < d; ++j) z[j] = sol.z[j][i][s];
      if (closed) {
        const double a = driver.kind == DriverKind::linear ? driver.a(t) : 0.0;
        prev[s] = (mean[s] + (driver(t, 0.0, z)) * nu) / (1.0 - a * nu);
        return 1;
      }
      double y = mean[s];
      for (std::size_t k = 1; k <= kInnerMaxIters; ++k) {
        const double next = mean[s] + driver(t, y, z) * nu;
        const bool done = std::abs(next - y) <= kInnerTol * (1.0 + std::abs(next));
        y = next;
        if (done) {
          prev[s] = y;
          return k;
        }
      }
      throw StepSizeError("implicit step at t=" + fmt(t) + " did not converge");
    };
    if (is_constant_field(sol.y[i]) && states > 0) {
      // Every state sees the same inputs; solve once and broadcast.
      std::vector<double> z(d);
      iters[0] = solve_state(0, z);
      std::fill(prev.begin(), prev.end(), prev[0]);
      sol.diagnostics.inner_iterations_total += iters[0];
      sol.diagnostics.inner_iterations_max = std::max(sol.diagnostics.inner_iterations_max, iters[0]);
      continue;
    }
    parallel_for(states, [&](std::size_t begin, std::size_t end) {
      std::vector<double> z(d);
      for (std::size_t s = begin; s < end; ++s) iters[s] = solve_state(s, z);
    });
    for (std::size_t s = 0; s < states; ++s) {
      sol.diagnostics.inner_iterations_total += iters[s];
      sol.diagnostics.inner_iterations_max = std::max(sol.diagnostics.inner_iterations_max, iters[s]);
    }
  }
  return sol;
}

BsdeSolution solve_by_decomposition(const ConditionalExpectation& engine, const FieldSeries& g0,
                                    std::span<const double> terminal) {
  const GridScale& grid = engine.grid();
  const std::size_t n = grid.steps();
  const std::size_t states = engine.states();
  if (terminal.size() != states) throw ValidationError("solve_by_decomposition: terminal field has the wrong size");
  if (g0.points() != n + 1 || g0.states() != states) {
    throw ValidationError("solve_by_decomposition: driver series has the wrong shape");
  }
  BsdeSolution sol = empty_solution(engine);
  sol.diagnostics.solver = "decomposition";

  // E[xi + sum_{j>i} g0_j nu_j | F_i] by the tower property, one step at a time;
  // g0_j is known at t_{j-1}, so it is added after conditioning.
  std::copy(terminal.begin(), terminal.end(), sol.y[n].begin());
  for (std::size_t i = n; i >= 1; --i) {
    const Field mean = fill_step(engine, sol, i);
    const double nu = grid.nu(i);
    for (std::size_t s = 0; s < states; ++s) sol.y[i - 1][s] = mean[s] + g0[i][s] * nu;
  }
  return sol;
}

FieldSeries frozen_driver(const ConditionalExpectation& engine, const Driver& driver) {
  const GridScale& grid = engine.grid();
  FieldSeries g0(grid.size(), engine.states());
  const std::vector<double> z(engine.dims(), 0.0);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double v = driver(grid.time(j), 0.0, z);
    for (auto& x : g0[j]) x = v;
  }
  return g0;
}

BsdeSolution picard_solve(const ConditionalExpectation& engine, const Driver& driver,
                          const TerminalCondition& terminal, const PicardOptions& options) {
  const GridScale& grid = engine.grid();
  const std::size_t n = grid.steps();
  const std::size_t states = engine.states();
  const std::size_t d = engine.dims();
  const double L = driver.lipschitz();
  const double beta = options.beta.value_or(8.0 * (1.0 + L * L));
  if (!(beta > 0.0)) throw ValidationError("picard_solve: beta must be positive");
  if (options.max_iters == 0) throw ValidationError("picard_solve: max_iters must be positive");

  const Field xi = terminal_field(engine, terminal);
  if (!driver.depends_on_yz()) {
    BsdeSolution sol = solve_by_decomposition(engine, frozen_driver(engine, driver), xi);
    sol.diagnostics.solver = "picard";
    sol.diagnostics.beta = beta;
    sol.diagnostics.lipschitz = L;
    sol.diagnostics.picard_iterations = 1;
    const BetaNorms norms = squared_beta_norms(engine, sol, beta);
    sol.diagnostics.residual_history.push_back(norms.y + norms.z + norms.n);
    return sol;
  }

  BsdeSolution current = empty_solution(engine);
  BsdeDiagnostics diag;
  diag.solver = "picard";
  diag.beta = beta;
  diag.lipschitz = L;
  FieldSeries g0(n + 1, states);
  double prev_input = 0.0;  // ||dy||^2 + ||dz||^2 of the previous difference
  bool have_prev = false;

  for (std::size_t k = 1; k <= options.max_iters; ++k) {
    parallel_for(states, [&](std::size_t begin, std::size_t end) {
      std::vector<double> z(d);
      for (std::size_t s = begin; s < end; ++s) {
        for (std::size_t j = 1; j <= n; ++j) {
          for (std::size_t c = 0; c < d; ++c) z[c] = current.z[c][j][s];
          g0[j][s] = driver(grid.time(j), current.y[j - 1][s], z);
        }
      }
    });
    BsdeSolution next = solve_by_decomposition(engine, g0, xi);

    BsdeSolution diff = empty_solution(engine);
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t s = 0; s < states; ++s) diff.y[i][s] = next.y[i][s] - current.y[i][s];
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t s = 0; s < states; ++s) diff.z[j][i][s] = next.z[j][i][s] - current.z[j][i][s];
      }
    }
    for (std::size_t i = 1; i <= n; ++i) {
      const Field mean = engine.step_expectation(i, diff.y[i], [](std::size_t, double v, std::span<const double>) {
        return v;
      });
      const Field var = increment_variance(engine, i, diff.y[i], mean, diff.z);
      std::copy(var.begin(), var.end(), diff.n_var[i].begin());
    }
    const BetaNorms norms = squared_beta_norms(engine, diff, beta);
    const double residual = norms.y + norms.z + norms.n;
    diag.residual_history.push_back(residual);
    if (have_prev) {
      const BetaNorms scale = squared_beta_norms(engine, next, beta);
      if (prev_input > 1e-22 * std::max(1.0, scale.y + scale.z + scale.n)) {
        diag.contraction_ratios.push_back(residual / prev_input);
      }
    }
    prev_input = norms.y + norms.z;
    have_prev = true;
    current = std::move(next);
    diag.picard_iterations = k;
    if (residual < options.tol) {
      current.diagnostics = std::move(diag);
      return current;
    }
  }
  throw ConvergenceError("picard_solve: no convergence in " + std::to_string(options.max_iters) +
                         " iterations (last residual " + fmt(diag.residual_history.back()) + ")");
}

std::vector<double> beta_weights(const GridScale& grid, double beta, WeightConvention convention) {
  std::vector<double> w(grid.size(), 0.0);
  const TimeScale& scale = grid.scale();
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t = convention == WeightConvention::step_end ? grid.time(i) : grid.time(i - 1);
    w[i] = scale.exp_beta(beta, t, 0.0);
  }
  return w;
}

double beta_norm(const GridScale& grid, double beta, std::span<const double> second_moments,
                 WeightConvention convention) {
  if (second_moments.size() != grid.size()) throw ValidationError("beta_norm: one moment per grid point required");
  const std::vector<double> w = beta_weights(grid, beta, convention);
  double total = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) total += second_moments[i] * w[i] * grid.nu(i);
  return std::sqrt(total);
}

double beta_norm_bracket(const GridScale& grid, double beta, std::span<const double> increment_moments,
                         WeightConvention convention) {
  if (increment_moments.size() != grid.size()) {
    throw ValidationError("beta_norm_bracket: one moment per grid point required");
  }
  const std::vector<double> w = beta_weights(grid, beta, convention);
  double total = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) total += increment_moments[i] * w[i];
  return std::sqrt(total);
}

BetaNorms squared_beta_norms(const ConditionalExpectation& engine, const BsdeSolution& sol, double beta,
                             WeightConvention convention) {
  const GridScale& grid = engine.grid();
  const std::size_t points = grid.size();
  const std::size_t states = engine.states();
  std::vector<double> my(points, 0.0), mz(points, 0.0), mn(points, 0.0);
  Field sq(states);
  for (std::size_t i = 1; i < points; ++i) {
    for (std::size_t s = 0; s < states; ++s) sq[s] = sol.y[i - 1][s] * sol.y[i - 1][s];
    my[i] = unconditional(engine, i - 1, sq);
    std::fill(sq.begin(), sq.end(), 0.0);
    for (std::size_t j = 0; j < sol.dims; ++j) {
      for (std::size_t s = 0; s < states; ++s) sq[s] += sol.z[j][i][s] * sol.z[j][i][s];
    }
    mz[i] = unconditional(engine, i - 1, sq);
    mn[i] = unconditional(engine, i - 1, sol.n_var[i]);
  }
  const double y = beta_norm(grid, beta, my, convention);
  const double z = beta_norm(grid, beta, mz, convention);
  const double nn = beta_norm_bracket(grid, beta, mn, convention);
  return {y * y, z * z, nn * nn};
}

AprioriReport apriori_check(const ConditionalExpectation& engine, const BsdeSolution& sol, const FieldSeries& g0,
                            std::span<const double> terminal, double beta, WeightConvention convention) {
  if (!(beta > 0.0)) throw ValidationError("apriori_check: beta must be positive");
  const GridScale& grid = engine.grid();
  const std::size_t n = grid.steps();
  const std::size_t states = engine.states();
  const std::vector<double> w = beta_weights(grid, beta, convention);
  const std::vector<double> w_end = beta_weights(grid, beta, WeightConvention::step_end);
  const std::vector<double> w_start = beta_weights(grid, beta, WeightConvention::step_start);
  const double e_T = grid.scale().exp_beta(beta, grid.horizon(), 0.0);

  auto z_squared = [&](std::size_t i, std::size_t s) {
    double z2 = 0.0;
    for (std::size_t j = 0; j < sol.dims; ++j) z2 += sol.z[j][i][s] * sol.z[j][i][s];
    return z2;
  };
  auto lhs_term = [&](std::size_t i, std::size_t s) {
    const double y = sol.y[i - 1][s];
    return w[i] * grid.nu(i) * (0.5 * beta * y * y + z_squared(i, s)) + w[i] * sol.n_var[i][s];
  };
  auto rhs_term = [&](std::size_t i, std::size_t s) { return (2.0 / beta) * w[i] * grid.nu(i) * g0[i][s] * g0[i][s]; };
  auto discrete_lhs_term = [&](std::size_t i, std::size_t s) {
    const double y = sol.y[i - 1][s], nu = grid.nu(i);
    return 0.5 * beta * w_start[i] * nu * y * y + w_end[i] * (nu * z_squared(i, s) + sol.n_var[i][s]);
  };
  auto discrete_rhs_term = [&](std::size_t i, std::size_t s) {
    const double nu = grid.nu(i);
    return (2.0 / beta + nu) * w_end[i] * nu * g0[i][s] * g0[i][s];
  };

  AprioriReport r;
  if (engine.deterministic()) {
    const double y0 = unconditional(engine, 0, sol.y[0]);
    r.lhs = y0 * y0;
    r.discrete_lhs = y0 * y0;
    Field f(states);
    auto add = [&](double& target, std::size_t i, auto&& term) {
      for (std::size_t s = 0; s < states; ++s) f[s] = term(i, s);
      target += unconditional(engine, i - 1, f);
    };
    for (std::size_t i = 1; i <= n; ++i) {
      add(r.lhs, i, lhs_term);
      add(r.rhs, i, rhs_term);
      add(r.discrete_lhs, i, discrete_lhs_term);
      add(r.discrete_rhs, i, discrete_rhs_term);
    }
    for (std::size_t s = 0; s < states; ++s) f[s] = terminal[s] * terminal[s];
    const double xi2 = e_T * unconditional(engine, n, f);
    r.rhs += xi2;
    r.discrete_rhs += xi2;
  } else {
    std::vector<double> lhs(states), rhs(states), dlhs(states), drhs(states);
    for (std::size_t s = 0; s < states; ++s) {
      lhs[s] = dlhs[s] = sol.y[0][s] * sol.y[0][s];
      rhs[s] = drhs[s] = e_T * terminal[s] * terminal[s];
      for (std::size_t i = 1; i <= n; ++i) {
        lhs[s] += lhs_term(i, s);
        rhs[s] += rhs_term(i, s);
        dlhs[s] += discrete_lhs_term(i, s);
        drhs[s] += discrete_rhs_term(i, s);
      }
    }
    const Estimate el = sample_estimate(lhs), er = sample_estimate(rhs);
    r.lhs = el.mean;
    r.rhs = er.mean;
    r.lhs_se = el.se;
    r.rhs_se = er.se;
    r.discrete_lhs = sample_estimate(dlhs).mean;
    r.discrete_rhs = sample_estimate(drhs).mean;
  }
  r.slack = r.rhs - r.lhs;
  r.discrete_slack = r.discrete_rhs - r.discrete_lhs;
  return r;
}

std::vector<SolutionRow> summarize(const ConditionalExpectation& engine, const BsdeSolution& sol) {
  const GridScale& grid = engine.grid();
  std::vector<SolutionRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SolutionRow& r = rows[i];
    r.t = grid.time(i);
    r.nu = grid.nu(i);
    r.y = engine.expectation(i, sol.y[i]);
    if (i > 0) {
      r.z = engine.expectation(i - 1, sol.z[0][i]);
      r.n_var = unconditional(engine, i - 1, sol.n_var[i]);
    }
  }
  return rows;
}

}  // namespace tsbsde
