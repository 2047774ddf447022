#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "tsbsde/condexp.hpp"
#include "tsbsde/stats.hpp"
#include "tsbsde/stochastic.hpp"

namespace tsbsde {

/// Values of a Markov functional over the engine's states at one grid index:
/// mesh nodes for the quadrature engine, paths for the regression engine.
using Field = std::vector<double>;

/// h(prev_state, next_value, dW) integrated over one step.
using StepIntegrand = std::function<double(std::size_t prev, double next, std::span<const double> dw)>;

/// A field sampled at grid index `index`, to be projected onto an earlier index.
struct ProjectionTerm {
  std::size_t index;
  std::span<const double> values;
};

struct StepMoments {
  Field mean;                // E[next | X_{i-1}]
  std::vector<Field> cross;  // E[next * dW^j | X_{i-1}], one per dimension
};

enum class EngineKind { quadrature, lsmc };

struct EngineConfig {
  EngineKind kind = EngineKind::quadrature;
  std::size_t gh_nodes = 64;
  double mesh_half_width = 6.0;
  std::size_t mesh_nodes = 801;
  std::size_t basis_degree = 3;

  bool operator==(const EngineConfig&) const = default;
};

std::string to_string(EngineKind kind);
EngineKind parse_engine_kind(std::string_view text);

/// Conditional-expectation engine over a grid. Every E[. | F_t] used by the
/// solvers goes through this interface.
class ConditionalExpectation {
 public:
  virtual ~ConditionalExpectation() = default;

  virtual std::string name() const = 0;
  virtual const GridScale& grid() const = 0;
  virtual std::size_t dims() const = 0;
  /// Number of states; identical at every grid index.
  virtual std::size_t states() const = 0;
  /// Driver value W^dim of state s at grid index i.
  virtual double state(std::size_t i, std::size_t s, std::size_t dim) const = 0;
  /// No sampling noise: estimates carry zero standard error.
  virtual bool deterministic() const = 0;

  /// E[h(s, next(X_step), dW_step) | X_{step-1} = s] for every state s.
  virtual Field step_expectation(std::size_t step, std::span<const double> next, const StepIntegrand& h) const = 0;
  virtual StepMoments step_moments(std::size_t step, std::span<const double> next) const;
  /// E[sum of terms | X_i]; each term's index must be >= i.
  virtual Field project(std::size_t i, std::span<const ProjectionTerm> terms) const = 0;
  /// Mean and spread of f(W_{t_i}) under the law of the driver.
  virtual Estimate expectation(std::size_t i, std::span<const double> f) const = 0;
  /// f evaluated along every path of an ensemble at grid index i.
  virtual Field on_paths(std::size_t i, std::span<const double> f, const PathEnsemble& ensemble) const = 0;

  /// Field of fn(W) over the states at grid index i.
  Field evaluate(std::size_t i, const std::function<double(std::span<const double>)>& fn) const;
};

/// Gauss-Hermite convolution on a fixed spatial mesh; one-dimensional Markov problems only.
class QuadratureEngine final : public ConditionalExpectation {
 public:
  QuadratureEngine(GridScale grid, const EngineConfig& config);

  std::string name() const override { return "quadrature"; }
  const GridScale& grid() const override { return grid_; }
  std::size_t dims() const override { return 1; }
  std::size_t states() const override { return mesh_.nodes.size(); }
  double state(std::size_t, std::size_t s, std::size_t) const override { return mesh_.nodes[s]; }
  bool deterministic() const override { return true; }

  Field step_expectation(std::size_t step, std::span<const double> next, const StepIntegrand& h) const override;
  StepMoments step_moments(std::size_t step, std::span<const double> next) const override;
  Field project(std::size_t i, std::span<const ProjectionTerm> terms) const override;
  Estimate expectation(std::size_t i, std::span<const double> f) const override;
  Field on_paths(std::size_t i, std::span<const double> f, const PathEnsemble& ensemble) const override;

  const SpatialMesh& mesh() const { return mesh_; }
  MonotoneCubic interpolant(std::span<const double> f) const;
  /// E[f(w + dW)] at every node, dW ~ normal(0, variance).
  Field convolve(std::span<const double> f, double variance) const;

 private:
  GridScale grid_;
  GaussHermite rule_;
  SpatialMesh mesh_;
};

/// Least-squares Monte Carlo on a path ensemble; states are paths.
class RegressionEngine final : public ConditionalExpectation {
 public:
  RegressionEngine(std::shared_ptr<const PathEnsemble> ensemble, const EngineConfig& config);

  std::string name() const override { return "lsmc"; }
  const GridScale& grid() const override { return ensemble_->grid(); }
  std::size_t dims() const override { return ensemble_->dims(); }
  std::size_t states() const override { return ensemble_->paths(); }
  double state(std::size_t i, std::size_t s, std::size_t dim) const override { return ensemble_->w(s, i, dim); }
  bool deterministic() const override { return false; }

  Field step_expectation(std::size_t step, std::span<const double> next, const StepIntegrand& h) const override;
  StepMoments step_moments(std::size_t step, std::span<const double> next) const override;
  Field project(std::size_t i, std::span<const ProjectionTerm> terms) const override;
  Estimate expectation(std::size_t i, std::span<const double> f) const override;
  Field on_paths(std::size_t i, std::span<const double> f, const PathEnsemble& ensemble) const override;

  const PathEnsemble& ensemble() const { return *ensemble_; }
  const RegressionBasis& basis() const { return basis_; }

 private:
  const Projection& projection(std::size_t index) const;

  std::shared_ptr<const PathEnsemble> ensemble_;
  RegressionBasis basis_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::unique_ptr<Projection>> cache_;
};

/// Builds the configured engine. The regression engine needs an ensemble; the
/// quadrature engine ignores it and requires a one-dimensional problem.
std::unique_ptr<ConditionalExpectation> make_engine(const EngineConfig& config, const GridScale& grid,
                                                    std::shared_ptr<const PathEnsemble> ensemble, std::size_t dims);

}  // namespace tsbsde
