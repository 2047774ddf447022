#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsbsde/engine.hpp"
#include "tsbsde/stepfunction.hpp"

namespace tsbsde {

enum class DriverKind { zero, constant, linear, sin_cos, tanh_mix };

std::string to_string(DriverKind kind);
DriverKind parse_driver_kind(std::string_view text);

/// Generator g(t, y, z) for scalar y and z in R^d.
///
///   zero       0
///   constant   c(t)
///   linear     a(t) y + b(t) z^0 + c(t)
///   sin_cos    s (sin y + cos z^0) + c(t)
///   tanh_mix   s (tanh y - tanh z^0) / 2 + c(t)
///
/// The Lipschitz constant is the declared one when given, else the sharp bound
/// implied by the coefficients.
struct Driver {
  DriverKind kind = DriverKind::zero;
  StepFunction a;
  StepFunction b;
  StepFunction c;
  double s = 1.0;
  std::optional<double> declared_lipschitz;

  static Driver zero() { return {}; }
  static Driver constant(StepFunction c);
  static Driver linear(StepFunction a, StepFunction b, StepFunction c);
  static Driver builtin(DriverKind kind, double s, StepFunction c = {});

  double operator()(double t, double y, std::span<const double> z) const;
  double lipschitz() const;
  bool depends_on_yz() const;
  /// Linear in y with z-free curvature: the implicit step has a closed form.
  bool linear_in_y() const { return kind != DriverKind::sin_cos && kind != DriverKind::tanh_mix; }

  bool operator==(const Driver&) const = default;
};

/// Largest |g(t,y,z) - g(t,y',z')| / (|y-y'| + |z-z'|) seen over random
/// arguments; throws ValidationError when it exceeds the driver's constant.
double lipschitz_spot_check(const Driver& driver, double horizon, std::size_t dims, std::size_t samples,
                            std::uint64_t seed);

enum class TerminalKind { identity, square, call, constant };

std::string to_string(TerminalKind kind);
TerminalKind parse_terminal_kind(std::string_view text);

/// xi = Phi(W_T^0) + offset with Phi one of w, w^2, (w - strike)^+, value.
struct TerminalCondition {
  TerminalKind kind = TerminalKind::identity;
  double strike = 0.0;
  double value = 0.0;
  double offset = 0.0;

  double operator()(double w) const;
  bool operator==(const TerminalCondition&) const = default;
};

/// Row-major (points x states) storage for one field per grid index.
class FieldSeries {
 public:
  FieldSeries() = default;
  FieldSeries(std::size_t points, std::size_t states, double fill = 0.0)
      : points_(points), states_(states), data_(points * states, fill) {}

  std::size_t points() const { return points_; }
  std::size_t states() const { return states_; }
  std::span<double> operator[](std::size_t i) { return {data_.data() + i * states_, states_}; }
  std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * states_, states_}; }

 private:
  std::size_t points_ = 0;
  std::size_t states_ = 0;
  std::vector<double> data_;
};

struct BsdeDiagnostics {
  std::string solver;
  double beta = 0.0;
  double lipschitz = 0.0;
  std::size_t inner_iterations_max = 0;
  std::size_t inner_iterations_total = 0;
  std::size_t picard_iterations = 0;
  std::vector<double> residual_history;    // squared beta-norm of successive differences
  std::vector<double> contraction_ratios;  // per Picard iteration once measurable
  std::vector<std::string> warnings;
};

/// Y, Z and N on the engine's states. y[i] uses the states at grid index i;
/// z[j][i] and n_var[i] (steps i >= 1) the states at i - 1. Row 0 of z and
/// n_var is zero.
struct BsdeSolution {
  std::size_t dims = 1;
  FieldSeries y;
  std::vector<FieldSeries> z;
  FieldSeries n_var;  // E[dN_i^2 | F_{i-1}]
  BsdeDiagnostics diagnostics;
};

Field terminal_field(const ConditionalExpectation& engine, const TerminalCondition& terminal);

/// Backward recursion of the implicit step
///   Y_{i-1} = E[Y_i | F_{i-1}] + g(t_i, Y_{i-1}, Z_i) nu_i,  Z_i = E[Y_i dW_i | F_{i-1}] / nu_i.
/// Nonlinear drivers use fixed-point iteration and need L nu_i < 1; drivers
/// linear in y are solved exactly and need 1 - a(t_i) nu_i > 0.
BsdeSolution solve_backward(const ConditionalExpectation& engine, const Driver& driver, const TerminalCondition& terminal);

/// Solution for a (y,z)-free driver: Y_i = E[xi + sum_{j>i} g0_j nu_j | F_i],
/// evaluated one step at a time, with Z and N from the decomposition of that
/// martingale. Row j >= 1 of g0 holds g0 on the states at index j - 1.
BsdeSolution solve_by_decomposition(const ConditionalExpectation& engine, const FieldSeries& g0,
                                    std::span<const double> terminal);

/// g0_j = g(t_j, 0, 0) broadcast over the states.
FieldSeries frozen_driver(const ConditionalExpectation& engine, const Driver& driver);

struct PicardOptions {
  std::optional<double> beta;  // default 8 (1 + L^2)
  double tol = 1e-10;
  std::size_t max_iters = 50;
};

/// Picard iteration of the map (y, z) -> solve_by_decomposition with g frozen
/// at (y_{s-}, z_s), started from zero. Stops when the squared beta-norm of
/// the successive difference of (Y, Z, N) falls below tol.
BsdeSolution picard_solve(const ConditionalExpectation& engine, const Driver& driver, const TerminalCondition& terminal,
                          const PicardOptions& options = {});

enum class WeightConvention {
  step_end,    // e_beta(t_i, 0) on step i
  step_start,  // e_beta(t_{i-1}, 0), the left-limit weighting
};

/// Per-step weights e_beta(., 0) from the parent time scale; entry 0 is zero.
std::vector<double> beta_weights(const GridScale& grid, double beta, WeightConvention convention);

/// sqrt(sum_i m_i e_beta nu_i) where m_i = E|phi_i|^2 for step i (entry 0 ignored).
double beta_norm(const GridScale& grid, double beta, std::span<const double> second_moments,
                 WeightConvention convention = WeightConvention::step_end);
/// sqrt(sum_i m_i e_beta) for a martingale with m_i = E[(dN_i)^2].
double beta_norm_bracket(const GridScale& grid, double beta, std::span<const double> increment_moments,
                         WeightConvention convention = WeightConvention::step_end);

/// Squared beta-norms of a solution's parts, with Y taken at step starts (Y_{s-}).
struct BetaNorms {
  double y = 0.0;
  double z = 0.0;
  double n = 0.0;
};
BetaNorms squared_beta_norms(const ConditionalExpectation& engine, const BsdeSolution& sol, double beta,
                             WeightConvention convention = WeightConvention::step_end);

struct AprioriReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  // The bound that holds step by step on any grid: Y weighted by e_beta(t_{i-1}, 0),
  // Z and [N] by e_beta(t_i, 0), and (2 / beta + nu) in place of 2 / beta.
  double discrete_lhs = 0.0;
  double discrete_rhs = 0.0;
  double discrete_slack = 0.0;
};

/// Both sides at t = 0 of
///   |Y_0|^2 + E sum (beta/2 |Y_{s-}|^2 + |Z_s|^2) e nu + E sum e [dN]
///     <= E|xi|^2 e_beta(T, 0) + (2 / beta) E sum |g0|^2 e nu,
/// plus the discrete form of the same estimate. The two agree as nu -> 0; on
/// steps with large beta nu only the discrete form is guaranteed.
AprioriReport apriori_check(const ConditionalExpectation& engine, const BsdeSolution& sol, const FieldSeries& g0,
                            std::span<const double> terminal, double beta,
                            WeightConvention convention = WeightConvention::step_end);

struct SolutionRow {
  double t = 0.0;
  double nu = 0.0;
  Estimate y;
  Estimate z;  // dimension 0
  double n_var = 0.0;
};

/// Per grid index: law of Y_{t_i}, of Z_i and the unconditional variance of dN_i.
std::vector<SolutionRow> summarize(const ConditionalExpectation& engine, const BsdeSolution& sol);

}  // namespace tsbsde
