#include "tsbsde/engine.hpp"

#include <cmath>

#include "tsbsde/errors.hpp"
#include "tsbsde/parallel.hpp"

namespace tsbsde {

std::string to_string(EngineKind kind) { return kind == EngineKind::quadrature ? "quadrature" : "lsmc"; }

EngineKind parse_engine_kind(std::string_view text) {
  if (text == "quadrature") return EngineKind::quadrature;
  if (text == "lsmc") return EngineKind::lsmc;
  throw ValidationError("unknown engine '" + std::string(text) + "' (expected quadrature|lsmc)");
}

Field ConditionalExpectation::evaluate(std::size_t i, const std::function<double(std::span<const double>)>& fn) const {
  const std::size_t d = dims();
  Field out(states());
  parallel_for(states(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> w(d);
    for (std::size_t s = begin; s < end; ++s) {
      for (std::size_t j = 0; j < d; ++j) w[j] = state(i, s, j);
      out[s] = fn(w);
    }
  });
  return out;
}

StepMoments ConditionalExpectation::step_moments(std::size_t step, std::span<const double> next) const {
  StepMoments m;
  m.mean = step_expectation(step, next, [](std::size_t, double v, std::span<const double>) { return v; });
  for (std::size_t j = 0; j < dims(); ++j) {
    m.cross.push_back(
        step_expectation(step, next, [j](std::size_t, double v, std::span<const double> dw) { return v * dw[j]; }));
  }
  return m;
}

QuadratureEngine::QuadratureEngine(GridScale grid, const EngineConfig& config)
    : grid_(std::move(grid)),
      rule_(config.gh_nodes),
      mesh_(SpatialMesh::uniform(config.mesh_half_width, grid_.horizon(), config.mesh_nodes)) {}

MonotoneCubic QuadratureEngine::interpolant(std::span<const double> f) const {
  if (f.size() != mesh_.nodes.size()) throw ValidationError("quadrature engine: field size does not match the mesh");
  return MonotoneCubic(mesh_.nodes.front(), mesh_.spacing(), f);
}

Field QuadratureEngine::convolve(std::span<const double> f, double variance) const {
  SpatialMesh m = mesh_;
  m.values.assign(f.begin(), f.end());
  return quadrature_condexp(m, variance, rule_).values;
}

Field QuadratureEngine::step_expectation(std::size_t step, std::span<const double> next,
                                         const StepIntegrand& h) const {
  if (step == 0 || step > grid_.steps()) throw ValidationError("quadrature engine: step out of range");
  const MonotoneCubic f = interpolant(next);
  const double sd = std::sqrt(grid_.nu(step));
  const auto a = rule_.abscissa();
  const auto wt = rule_.weight();
  Field out(states());
  parallel_for(states(), [&](std::size_t begin, std::size_t end) {
    double dw[1];
    for (std::size_t s = begin; s < end; ++s) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        dw[0] = sd * a[k];
        acc += wt[k] * h(s, f(mesh_.nodes[s] + dw[0]), std::span<const double>(dw, 1));
      }
      out[s] = acc;
    }
  });
  return out;
}

StepMoments QuadratureEngine::step_moments(std::size_t step, std::span<const double> next) const {
  if (step == 0 || step > grid_.steps()) throw ValidationError("quadrature engine: step out of range");
  const MonotoneCubic f = interpolant(next);
  const double sd = std::sqrt(grid_.nu(step));
  const auto a = rule_.abscissa();
  const auto wt = rule_.weight();
  StepMoments m;
  m.mean.assign(states(), 0.0);
  m.cross.assign(1, Field(states(), 0.0));
  parallel_for(states(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      double mean = 0.0, cross = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double dw = sd * a[k];
        const double v = wt[k] * f(mesh_.nodes[s] + dw);
        mean += v;
        cross += v * dw;
      }
      m.mean[s] = mean;
      m.cross[0][s] = cross;
    }
  });
  return m;
}

Field QuadratureEngine::project(std::size_t i, std::span<const ProjectionTerm> terms) const {
  Field out(states(), 0.0);
  for (const ProjectionTerm& term : terms) {
    if (term.index < i || term.index >= grid_.size()) throw ValidationError("project: term index out of range");
    const double variance = grid_.time(term.index) - grid_.time(i);
    if (variance == 0.0) {
      for (std::size_t s = 0; s < out.size(); ++s) out[s] += term.values[s];
    } else {
      const Field c = convolve(term.values, variance);
      for (std::size_t s = 0; s < out.size(); ++s) out[s] += c[s];
    }
  }
  return out;
}

Estimate QuadratureEngine::expectation(std::size_t i, std::span<const double> f) const {
  const MonotoneCubic g = interpolant(f);
  const double t = grid_.time(i);
  Estimate e;
  if (t == 0.0) {
    e.mean = g(0.0);
    return e;
  }
  const double sd = std::sqrt(t);
  const auto a = rule_.abscissa();
  const auto wt = rule_.weight();
  double mean = 0.0, second = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double v = g(sd * a[k]);
    mean += wt[k] * v;
    second += wt[k] * v * v;
  }
  e.mean = mean;
  e.std = std::sqrt(std::max(0.0, second - mean * mean));
  return e;
}

Field QuadratureEngine::on_paths(std::size_t i, std::span<const double> f, const PathEnsemble& ensemble) const {
  if (ensemble.dims() != 1) throw ValidationError("quadrature engine: ensemble must be one-dimensional");
  if (ensemble.points() != grid_.size()) throw ValidationError("quadrature engine: ensemble grid differs");
  const MonotoneCubic g = interpolant(f);
  Field out(ensemble.paths());
  parallel_for(ensemble.paths(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) out[p] = g(ensemble.w(p, i, 0));
  });
  return out;
}

RegressionEngine::RegressionEngine(std::shared_ptr<const PathEnsemble> ensemble, const EngineConfig& config)
    : ensemble_(std::move(ensemble)),
      basis_(ensemble_ ? ensemble_->dims() : 1, config.basis_degree),
      cache_(ensemble_ ? ensemble_->points() : 0) {
  if (!ensemble_) throw ValidationError("lsmc engine: a path ensemble is required");
  if (ensemble_->paths() < basis_.size()) {
    throw ValidationError("lsmc engine: " + std::to_string(ensemble_->paths()) + " paths cannot fit " +
                          std::to_string(basis_.size()) + " basis functions");
  }
}

const Projection& RegressionEngine::projection(std::size_t index) const {
  std::lock_guard lock(cache_mutex_);
  if (!cache_[index]) cache_[index] = std::make_unique<Projection>(*ensemble_, index, basis_);
  return *cache_[index];
}

Field RegressionEngine::step_expectation(std::size_t step, std::span<const double> next,
                                         const StepIntegrand& h) const {
  if (step == 0 || step >= ensemble_->points()) throw ValidationError("lsmc engine: step out of range");
  if (next.size() != states()) throw ValidationError("lsmc engine: field size does not match the path count");
  const std::size_t d = dims();
  Field target(states());
  parallel_for(states(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> dw(d);
    for (std::size_t p = begin; p < end; ++p) {
      for (std::size_t j = 0; j < d; ++j) dw[j] = ensemble_->increment(p, step, j);
      target[p] = h(p, next[p], dw);
    }
  });
  return projection(step - 1).fit(target);
}

StepMoments RegressionEngine::step_moments(std::size_t step, std::span<const double> next) const {
  if (step == 0 || step >= ensemble_->points()) throw ValidationError("lsmc engine: step out of range");
  if (next.size() != states()) throw ValidationError("lsmc engine: field size does not match the path count");
  const Projection& proj = projection(step - 1);
  StepMoments m;
  m.mean = proj.fit(next);
  Field target(states());
  for (std::size_t j = 0; j < dims(); ++j) {
    for (std::size_t p = 0; p < states(); ++p) target[p] = next[p] * ensemble_->increment(p, step, j);
    m.cross.push_back(proj.fit(target));
  }
  return m;
}

Field RegressionEngine::project(std::size_t i, std::span<const ProjectionTerm> terms) const {
  Field known(states(), 0.0);
  Field future(states(), 0.0);
  bool has_future = false;
  for (const ProjectionTerm& term : terms) {
    if (term.index < i || term.index >= ensemble_->points()) throw ValidationError("project: term index out of range");
    if (term.values.size() != states()) throw ValidationError("project: field size does not match the path count");
    Field& dst = term.index == i ? known : future;
    has_future = has_future || term.index > i;
    for (std::size_t p = 0; p < states(); ++p) dst[p] += term.values[p];
  }
  if (has_future) {
    const Field fitted = projection(i).fit(future);
    for (std::size_t p = 0; p < states(); ++p) known[p] += fitted[p];
  }
  return known;
}

Estimate RegressionEngine::expectation(std::size_t, std::span<const double> f) const { return sample_estimate(f); }

Field RegressionEngine::on_paths(std::size_t, std::span<const double> f, const PathEnsemble& ensemble) const {
  if (&ensemble != ensemble_.get() && (ensemble.paths() != ensemble_->paths() || ensemble.seed() != ensemble_->seed())) {
    throw ValidationError("lsmc engine: fields live on the engine's own ensemble");
  }
  return Field(f.begin(), f.end());
}

std::unique_ptr<ConditionalExpectation> make_engine(const EngineConfig& config, const GridScale& grid,
                                                    std::shared_ptr<const PathEnsemble> ensemble, std::size_t dims) {
  if (config.kind == EngineKind::quadrature) {
    if (dims != 1) throw ValidationError("quadrature engine supports one driver dimension only; use lsmc");
    return std::make_unique<QuadratureEngine>(grid, config);
  }
  return std::make_unique<RegressionEngine>(std::move(ensemble), config);
}

}  // namespace tsbsde
