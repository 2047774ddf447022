#include "tsbsde/stochastic.hpp"

#include <cmath>

#include "tsbsde/errors.hpp"
#include "tsbsde/parallel.hpp"

namespace tsbsde {

PathEnsemble::PathEnsemble(GridScale grid, std::size_t dims, std::size_t paths, std::uint64_t seed,
                           std::vector<double> values)
    : grid_(std::move(grid)), dims_(dims), paths_(paths), seed_(seed), values_(std::move(values)) {
  if (dims_ == 0 || paths_ == 0) throw ValidationError("PathEnsemble: dims and paths must be positive");
  if (values_.size() != dims_ * paths_ * grid_.size()) throw ValidationError("PathEnsemble: value count mismatch");
}

PathEnsemble sample_bm(const GridScale& grid, std::size_t dims, std::size_t paths, std::uint64_t seed) {
  if (dims == 0 || paths == 0) throw ValidationError("sample_bm: dims and paths must be at least 1");
  const std::size_t points = grid.size();
  std::vector<double> values(dims * paths * points);
  const CounterNormal normal(seed);
  parallel_for(paths, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double* row = values.data() + p * points * dims;
      for (std::size_t j = 0; j < dims; ++j) row[j] = 0.0;
      for (std::size_t i = 1; i < points; ++i) {
        const double sd = std::sqrt(grid.nu(i));
        for (std::size_t j = 0; j < dims; ++j) {
          row[i * dims + j] = row[(i - 1) * dims + j] + sd * normal(p, i, j);
        }
      }
    }
  });
  return PathEnsemble(grid, dims, paths, seed, std::move(values));
}

MartingalePath::MartingalePath(GridScale grid, std::size_t paths)
    : grid_(std::move(grid)), paths_(paths), values_(paths * grid_.size(), 0.0) {}

MartingalePath::MartingalePath(GridScale grid, std::size_t paths, std::vector<double> values)
    : grid_(std::move(grid)), paths_(paths), values_(std::move(values)) {
  if (values_.size() != paths_ * grid_.size()) throw ValidationError("MartingalePath: value count mismatch");
}

std::vector<double> MartingalePath::slice(std::size_t point) const {
  std::vector<double> out(paths_);
  for (std::size_t p = 0; p < paths_; ++p) out[p] = (*this)(p, point);
  return out;
}

MartingalePath component(const PathEnsemble& ensemble, std::size_t dim) {
  MartingalePath out(ensemble.grid(), ensemble.paths());
  for (std::size_t p = 0; p < ensemble.paths(); ++p) {
    for (std::size_t i = 0; i < ensemble.points(); ++i) out(p, i) = ensemble.w(p, i, dim);
  }
  return out;
}

namespace {

// Grid indices (a, b) of every gap (hi_{k-1}, lo_k) of the scale with lo_k <= t.
std::vector<std::pair<std::size_t, std::size_t>> gaps_up_to(const GridScale& grid, double t) {
  std::vector<std::pair<std::size_t, std::size_t>> gaps;
  const auto& segs = grid.scale().segments();
  for (std::size_t k = 1; k < segs.size(); ++k) {
    if (segs[k].lo > t + TimeScale::kTolerance) break;
    gaps.emplace_back(grid.index_of(segs[k - 1].hi), grid.index_of(segs[k].lo));
  }
  return gaps;
}

}  // namespace

double quadratic_variation(const PathEnsemble& ensemble, std::size_t path, std::size_t dim, double t) {
  const GridScale& grid = ensemble.grid();
  grid.index_of(t);
  double total = grid.scale().dense_measure(0.0, t);
  for (auto [a, b] : gaps_up_to(grid, t)) {
    const double d = ensemble.w(path, b, dim) - ensemble.w(path, a, dim);
    total += d * d;
  }
  return total;
}

std::vector<double> quadratic_variation(const PathEnsemble& ensemble, std::size_t dim, double t) {
  const GridScale& grid = ensemble.grid();
  grid.index_of(t);
  const double dense = grid.scale().dense_measure(0.0, t);
  const auto gaps = gaps_up_to(grid, t);
  std::vector<double> out(ensemble.paths(), dense);
  for (std::size_t p = 0; p < ensemble.paths(); ++p) {
    for (auto [a, b] : gaps) {
      const double d = ensemble.w(p, b, dim) - ensemble.w(p, a, dim);
      out[p] += d * d;
    }
  }
  return out;
}

std::vector<MartingalePath> stochastic_integral(const PathEnsemble& ensemble, std::size_t rows,
                                                const MatrixIntegrand& integrand) {
  if (rows == 0) throw ValidationError("stochastic_integral: at least one output row required");
  const std::size_t d = ensemble.dims();
  const std::size_t points = ensemble.points();
  std::vector<MartingalePath> out(rows, MartingalePath(ensemble.grid(), ensemble.paths()));
  parallel_for(ensemble.paths(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(rows * d);
    for (std::size_t p = begin; p < end; ++p) {
      for (std::size_t i = 1; i < points; ++i) {
        integrand(i, PathHistory(ensemble, p, i - 1), x);
        for (std::size_t r = 0; r < rows; ++r) {
          double inc = 0.0;
          for (std::size_t j = 0; j < d; ++j) inc += x[r * d + j] * ensemble.increment(p, i, j);
          out[r](p, i) = out[r](p, i - 1) + inc;
        }
      }
    }
  });
  return out;
}

MartingalePath stochastic_integral(const PathEnsemble& ensemble, const ScalarIntegrand& integrand) {
  const std::size_t d = ensemble.dims();
  auto rows = stochastic_integral(ensemble, 1, [&](std::size_t step, const PathHistory& h, std::span<double> out) {
    for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;
    out[0] = integrand(step, h);
  });
  return std::move(rows.front());
}

MartingalePath doleans_exponential(const MartingalePath& m) {
  const GridScale& grid = m.grid();
  MartingalePath out(grid, m.paths());
  out.nonpositive_factor.assign(m.paths(), 0);
  std::size_t degenerate = 0;
  for (std::size_t p = 0; p < m.paths(); ++p) {
    out(p, 0) = 1.0;
    for (std::size_t i = 1; i < m.points(); ++i) {
      const double dm = m(p, i) - m(p, i - 1);
      double factor;
      if (grid.dense_refinement(i)) {
        factor = std::exp(dm - 0.5 * dm * dm);
      } else {
        factor = 1.0 + dm;
        if (!(factor > 0.0)) out.nonpositive_factor[p] = 1;
        if (factor == 0.0) ++degenerate;
      }
      out(p, i) = out(p, i - 1) * factor;
    }
  }
  if (degenerate > 0) {
    out.warnings.push_back("degenerate density: factor 1 + dM = 0 on " + std::to_string(degenerate) +
                           " scattered step(s)");
  }
  return out;
}

StoppingRule StoppingRule::at_index(std::size_t index) {
  return StoppingRule(
      [index](const PathEnsemble& e, std::size_t) {
        if (index >= e.points()) throw ValidationError("StoppingRule: index beyond the grid");
        return index;
      },
      "t_" + std::to_string(index));
}

StoppingRule StoppingRule::first_hit(Condition condition, std::string name) {
  return StoppingRule(
      [condition = std::move(condition)](const PathEnsemble& e, std::size_t path) {
        for (std::size_t i = 0; i < e.points(); ++i) {
          if (condition(PathHistory(e, path, i))) return i;
        }
        return e.points() - 1;
      },
      std::move(name));
}

StoppingRule StoppingRule::later_of(StoppingRule a, StoppingRule b) {
  std::string name = "max(" + a.name() + ", " + b.name() + ")";
  return StoppingRule(
      [a = std::move(a), b = std::move(b)](const PathEnsemble& e, std::size_t path) {
        return std::max(a(e, path), b(e, path));
      },
      std::move(name));
}

std::vector<SamplingResult> optional_sampling_check(const MartingalePath& m, const PathEnsemble& ensemble,
                                                    const StoppingRule& early, const StoppingRule& late,
                                                    std::span<const StoppedEvent> events) {
  if (m.paths() != ensemble.paths() || m.points() != ensemble.points()) {
    throw ValidationError("optional_sampling_check: process and ensemble shapes differ");
  }
  const std::size_t n = m.paths();
  std::vector<std::size_t> s1(n), s2(n);
  for (std::size_t p = 0; p < n; ++p) {
    s1[p] = early(ensemble, p);
    s2[p] = late(ensemble, p);
    if (s1[p] > s2[p]) {
      throw ValidationError("optional_sampling_check: S1 > S2 on path " + std::to_string(p));
    }
  }
  std::vector<SamplingResult> results;
  std::vector<double> a(n), b(n), diff(n);
  for (const StoppedEvent& ev : events) {
    for (std::size_t p = 0; p < n; ++p) {
      const double in = ev.indicator(PathHistory(ensemble, p, s1[p])) ? 1.0 : 0.0;
      a[p] = m(p, s1[p]) * in;
      b[p] = m(p, s2[p]) * in;
      diff[p] = b[p] - a[p];
    }
    SamplingResult r;
    r.event = ev.name;
    r.mean_early = sample_estimate(a).mean;
    r.mean_late = sample_estimate(b).mean;
    const Estimate d = sample_estimate(diff);
    r.difference = d.mean;
    r.se = d.se;
    results.push_back(r);
  }
  return results;
}

}  // namespace tsbsde
