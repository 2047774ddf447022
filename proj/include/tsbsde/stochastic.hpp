#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tsbsde/stats.hpp"
#include "tsbsde/timescale.hpp"

namespace tsbsde {

/// d-dimensional Brownian motion on a time scale sampled at the grid points of
/// many independent paths. Increments over step i are normal(0, nu_i) per
/// dimension, so variance across a gap equals the gap's real length.
class PathEnsemble {
 public:
  PathEnsemble(GridScale grid, std::size_t dims, std::size_t paths, std::uint64_t seed, std::vector<double> values);

  const GridScale& grid() const { return grid_; }
  std::size_t dims() const { return dims_; }
  std::size_t paths() const { return paths_; }
  std::size_t points() const { return grid_.size(); }
  std::uint64_t seed() const { return seed_; }

  double w(std::size_t path, std::size_t point, std::size_t dim = 0) const {
    return values_[(path * points() + point) * dims_ + dim];
  }
  /// W_{t_i} - W_{t_{i-1}} for step i >= 1.
  double increment(std::size_t path, std::size_t step, std::size_t dim = 0) const {
    return w(path, step, dim) - w(path, step - 1, dim);
  }
  /// All dims at one point of one path.
  std::span<const double> state(std::size_t path, std::size_t point) const {
    return {values_.data() + (path * points() + point) * dims_, dims_};
  }
  std::span<const double> raw() const { return values_; }

 private:
  GridScale grid_;
  std::size_t dims_;
  std::size_t paths_;
  std::uint64_t seed_;
  std::vector<double> values_;
};

/// Bit-identical for identical (grid, dims, paths, seed), independent of the thread count.
PathEnsemble sample_bm(const GridScale& grid, std::size_t dims, std::size_t paths, std::uint64_t seed);

/// Read-only view of one path truncated at grid point `last`. Integrands,
/// stopping rules and events only ever receive this view, which keeps them
/// predictable / adapted by construction.
class PathHistory {
 public:
  PathHistory(const PathEnsemble& ensemble, std::size_t path, std::size_t last)
      : ensemble_(&ensemble), path_(path), last_(last) {}

  std::size_t path() const { return path_; }
  std::size_t last() const { return last_; }
  double time(std::size_t point) const { return ensemble_->grid().time(point); }
  double w(std::size_t point, std::size_t dim = 0) const {
    assert(point <= last_ && "path history read beyond its horizon");
    return ensemble_->w(path_, point, dim);
  }
  double latest(std::size_t dim = 0) const { return ensemble_->w(path_, last_, dim); }
  const GridScale& grid() const { return ensemble_->grid(); }

 private:
  const PathEnsemble* ensemble_;
  std::size_t path_;
  std::size_t last_;
};

/// Scalar process per path sampled at every grid point.
class MartingalePath {
 public:
  MartingalePath(GridScale grid, std::size_t paths);
  MartingalePath(GridScale grid, std::size_t paths, std::vector<double> values);

  const GridScale& grid() const { return grid_; }
  std::size_t paths() const { return paths_; }
  std::size_t points() const { return grid_.size(); }

  double operator()(std::size_t path, std::size_t point) const { return values_[path * points() + point]; }
  double& operator()(std::size_t path, std::size_t point) { return values_[path * points() + point]; }
  std::span<const double> path_values(std::size_t path) const { return {values_.data() + path * points(), points()}; }
  /// Values of every path at one grid point.
  std::vector<double> slice(std::size_t point) const;

  /// Set by doleans_exponential: paths where some scattered-step factor was not positive.
  std::vector<unsigned char> nonpositive_factor;
  std::vector<std::string> warnings;

 private:
  GridScale grid_;
  std::size_t paths_;
  std::vector<double> values_;
};

/// Driving process W^dim as a MartingalePath.
MartingalePath component(const PathEnsemble& ensemble, std::size_t dim = 0);

/// [W^dim]_t = lambda([0,t] cap T) + sum over gaps (a,b) in [0,t] of (W_b - W_a)^2, for one path.
double quadratic_variation(const PathEnsemble& ensemble, std::size_t path, std::size_t dim, double t);
/// The same for every path.
std::vector<double> quadratic_variation(const PathEnsemble& ensemble, std::size_t dim, double t);

/// Writes the k x d integrand value (row-major) for `step` given history up to t_{step-1}.
using MatrixIntegrand = std::function<void(std::size_t step, const PathHistory& history, std::span<double> out)>;
/// Scalar integrand against W^0.
using ScalarIntegrand = std::function<double(std::size_t step, const PathHistory& history)>;

/// I_t(X) = sum_{i <= m} X_{t_{i-1}} (W_{t_i} - W_{t_{i-1}}), one MartingalePath per output row k.
std::vector<MartingalePath> stochastic_integral(const PathEnsemble& ensemble, std::size_t rows,
                                                const MatrixIntegrand& integrand);
MartingalePath stochastic_integral(const PathEnsemble& ensemble, const ScalarIntegrand& integrand);

/// Doleans exponential of M: multiplicative factor (1 + dM) on steps that cross
/// a gap, exp(dM - dM^2 / 2) on dense-refinement steps, value 1 at time 0.
MartingalePath doleans_exponential(const MartingalePath& m);

/// First-hitting style stopping rules on the grid.
class StoppingRule {
 public:
  using Condition = std::function<bool(const PathHistory&)>;

  static StoppingRule at_index(std::size_t index);
  /// First grid point where the condition holds on the history so far; T if never.
  static StoppingRule first_hit(Condition condition, std::string name);
  static StoppingRule later_of(StoppingRule a, StoppingRule b);

  std::size_t operator()(const PathEnsemble& ensemble, std::size_t path) const { return rule_(ensemble, path); }
  const std::string& name() const { return name_; }

 private:
  using Rule = std::function<std::size_t(const PathEnsemble&, std::size_t)>;
  StoppingRule(Rule rule, std::string name) : rule_(std::move(rule)), name_(std::move(name)) {}
  Rule rule_;
  std::string name_;
};

/// Event observed on the history up to the earlier stopping time.
struct StoppedEvent {
  std::string name;
  std::function<bool(const PathHistory&)> indicator;
};

struct SamplingResult {
  std::string event;
  double mean_early = 0.0;  // mean of M_{S1} 1_A
  double mean_late = 0.0;   // mean of M_{S2} 1_A
  double difference = 0.0;  // mean_late - mean_early
  double se = 0.0;          // standard error of the paired difference
};

/// Compares E[M_{S2} 1_A] with E[M_{S1} 1_A] per event. Throws ValidationError if S1 > S2 on some path.
std::vector<SamplingResult> optional_sampling_check(const MartingalePath& m, const PathEnsemble& ensemble,
                                                    const StoppingRule& early, const StoppingRule& late,
                                                    std::span<const StoppedEvent> events);

}  // namespace tsbsde
