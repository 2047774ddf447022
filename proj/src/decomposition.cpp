#include "tsbsde/decomposition.hpp"

#include <cmath>

#include "tsbsde/errors.hpp"
#include "tsbsde/parallel.hpp"

namespace tsbsde {

Decomposition decompose(const ConditionalExpectation& engine, std::span<const double> terminal) {
  const GridScale& grid = engine.grid();
  const std::size_t n = grid.steps();
  const std::size_t d = engine.dims();
  if (terminal.size() != engine.states()) throw ValidationError("decompose: terminal field has the wrong size");

  Decomposition dec;
  dec.dims = d;
  dec.m.resize(n + 1);
  dec.z.resize(n + 1);
  dec.n_var.resize(n + 1);
  dec.residuals.resize(n + 1);
  dec.m[n].assign(terminal.begin(), terminal.end());
  const ProjectionTerm term{n, terminal};
  for (std::size_t i = n; i-- > 0;) dec.m[i] = engine.project(i, std::span(&term, 1));

  for (std::size_t i = 1; i <= n; ++i) {
    const double nu = grid.nu(i);
    const StepMoments mom = engine.step_moments(i, dec.m[i]);
    std::vector<Field>& z = dec.z[i];
    z.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      z[j].resize(engine.states());
      for (std::size_t s = 0; s < engine.states(); ++s) z[j][s] = mom.cross[j][s] / nu;
    }
    const Field& prev = dec.m[i - 1];
    auto dn = [&](std::size_t s, double next, std::span<const double> dw) {
      double v = next - prev[s];
      for (std::size_t j = 0; j < d; ++j) v -= z[j][s] * dw[j];
      return v;
    };
    dec.n_var[i] = engine.step_expectation(i, dec.m[i], [&](std::size_t s, double next, std::span<const double> dw) {
      const double v = dn(s, next, dw);
      return v * v;
    });
    StepResidual& r = dec.residuals[i];
    const Field mean = engine.step_expectation(i, dec.m[i], dn);
    for (double v : mean) r.mean = std::max(r.mean, std::abs(v));
    for (std::size_t j = 0; j < d; ++j) {
      const Field cross = engine.step_expectation(
          i, dec.m[i], [&](std::size_t s, double next, std::span<const double> dw) { return dn(s, next, dw) * dw[j]; });
      for (double v : cross) r.cross = std::max(r.cross, std::abs(v));
    }
  }
  return dec;
}

PathDecomposition evaluate_on_paths(const Decomposition& dec, const ConditionalExpectation& engine,
                                    const PathEnsemble& ensemble) {
  const GridScale& grid = ensemble.grid();
  if (grid.size() != dec.m.size()) throw ValidationError("evaluate_on_paths: ensemble grid differs from the decomposition");
  if (ensemble.dims() != dec.dims) throw ValidationError("evaluate_on_paths: dimension mismatch");
  const std::size_t points = grid.size();
  const std::size_t paths = ensemble.paths();
  PathDecomposition out{MartingalePath(grid, paths), MartingalePath(grid, paths), MartingalePath(grid, paths)};

  for (std::size_t i = 0; i < points; ++i) {
    const Field m = engine.on_paths(i, dec.m[i], ensemble);
    for (std::size_t p = 0; p < paths; ++p) out.m(p, i) = m[p];
  }
  for (std::size_t i = 1; i < points; ++i) {
    for (std::size_t j = 0; j < dec.dims; ++j) {
      const Field z = engine.on_paths(i - 1, dec.z[i][j], ensemble);
      for (std::size_t p = 0; p < paths; ++p) out.i(p, i) += z[p] * ensemble.increment(p, i, j);
    }
    for (std::size_t p = 0; p < paths; ++p) out.i(p, i) += out.i(p, i - 1);
  }
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t i = 0; i < points; ++i) out.n(p, i) = out.m(p, i) - out.m(p, 0) - out.i(p, i);
  }
  return out;
}

std::vector<OrthogonalityResult> orthogonality_check(const PathDecomposition& paths, const PathEnsemble& ensemble,
                                                     std::span<const TestIntegrand> tests, std::size_t point) {
  if (point >= ensemble.points()) throw ValidationError("orthogonality_check: point beyond the grid");
  std::vector<OrthogonalityResult> out;
  std::vector<double> prod(ensemble.paths());
  for (const TestIntegrand& t : tests) {
    const MartingalePath ix = stochastic_integral(ensemble, t.x);
    for (std::size_t p = 0; p < ensemble.paths(); ++p) prod[p] = paths.n(p, point) * ix(p, point);
    const Estimate e = sample_estimate(prod);
    out.push_back({t.name, e.mean, e.se});
  }
  return out;
}

std::vector<OrthogonalityResult> orthogonality_check(const PathDecomposition& paths, const PathEnsemble& ensemble,
                                                     std::span<const TestIntegrand> tests) {
  return orthogonality_check(paths, ensemble, tests, ensemble.points() - 1);
}

std::vector<TestIntegrand> default_test_integrands() {
  return {
      {"1", [](std::size_t, const PathHistory&) { return 1.0; }},
      {"w", [](std::size_t, const PathHistory& h) { return h.latest(); }},
      {"w2", [](std::size_t, const PathHistory& h) { return h.latest() * h.latest(); }},
  };
}

}  // namespace tsbsde
