#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "tsbsde/condexp.hpp"
#include "tsbsde/engine.hpp"
#include "tsbsde/errors.hpp"

using namespace tsbsde;

namespace {

double normal_moment(int k) {
  if (k % 2) return 0.0;
  double m = 1.0;
  for (int j = k - 1; j > 0; j -= 2) m *= j;
  return m;
}

}  // namespace

TEST_SUITE("condexp") {
  TEST_CASE("Gauss-Hermite moments and symmetry") {
    for (std::size_t n : {5u, 16u, 64u}) {
      const GaussHermite rule(n);
      for (int k = 0; k < static_cast<int>(2 * n) && k <= 16; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += rule.weight()[j] * std::pow(rule.abscissa()[j], k);
        CHECK(std::abs(s - normal_moment(k)) <= 1e-10 * std::max(1.0, normal_moment(k)));
      }
      for (std::size_t j = 0; j < n; ++j) CHECK(rule.abscissa()[j] == -rule.abscissa()[n - 1 - j]);
    }
  }

  TEST_CASE("monotone cubic reproduces cubics and preserves monotonicity") {
    std::vector<double> nodes, cubic, step;
    for (int k = -10; k <= 10; ++k) {
      const double x = 0.25 * k;
      nodes.push_back(x);
      cubic.push_back(x * x * x + x - 1);
      step.push_back(x < 0.3 ? 0.0 : 1.0);
    }
    const MonotoneCubic c(nodes.front(), 0.25, cubic);
    for (double x = -2.4; x <= 2.4; x += 0.037) CHECK(c(x) == doctest::Approx(x * x * x + x - 1).epsilon(1e-12));

    const MonotoneCubic s(nodes.front(), 0.25, step);
    double prev = s(-2.5);
    for (double x = -2.5; x <= 2.5; x += 0.01) {
      const double v = s(x);
      CHECK(v >= prev - 1e-15);
      CHECK(v >= -1e-15);
      CHECK(v <= 1.0 + 1e-15);
      prev = v;
    }
  }

  TEST_CASE("quadrature conditional expectation of polynomials") {
    const SpatialMesh mesh = SpatialMesh::uniform(6.0, 1.0, 241, 1.0);
    SpatialMesh next = mesh;
    for (std::size_t k = 0; k < mesh.nodes.size(); ++k) next.values[k] = mesh.nodes[k] * mesh.nodes[k];
    const GaussHermite rule(32);
    const SpatialMesh out = quadrature_condexp(next, 0.3, rule);
    CHECK(out.time == doctest::Approx(0.7));
    const std::size_t mid = mesh.nodes.size() / 2;
    for (std::size_t k = mid - 60; k <= mid + 60; ++k) {
      const double w = mesh.nodes[k];
      CHECK(out.values[k] == doctest::Approx(w * w + 0.3).epsilon(1e-10));
    }
    const SpatialMesh same = quadrature_condexp(next, 0.0, rule);
    CHECK(same.values == next.values);

    SpatialMesh bad = mesh;
    bad.nodes[3] += 1e-3;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(SpatialMesh::uniform(6.0, 1.0, 10), ValidationError);
  }

  TEST_CASE("regression recovers a conditional expectation") {
    const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.5);
    const PathEnsemble e = sample_bm(g, 1, 20000, 5);
    const std::size_t i = g.index_of(3.0), last = g.size() - 1;
    std::vector<double> target(e.paths());
    for (std::size_t p = 0; p < e.paths(); ++p) target[p] = e.w(p, last) * e.w(p, last);
    const RegressionBasis basis(1, 3);
    const std::vector<double> fit = lsmc_condexp(e, i, target, basis);
    double worst = 0.0;
    for (std::size_t p = 0; p < e.paths(); ++p) {
      const double w = e.w(p, i);
      worst = std::max(worst, std::abs(fit[p] - (w * w + 2.0)) / (1.0 + w * w));
    }
    CHECK(worst < 0.1);

    const Projection at0(e, 0, basis);
    CHECK(at0.rank() == 1);
    const std::vector<double> f0 = at0.fit(target);
    CHECK(f0[0] == doctest::Approx(sample_estimate(target).mean).epsilon(1e-10));

    const PathEnsemble tiny = sample_bm(g, 1, 3, 5);
    std::vector<double> t3(3, 1.0);
    CHECK_THROWS_AS(lsmc_condexp(tiny, 1, t3, basis), ValidationError);
  }

  TEST_CASE("basis sizes") {
    CHECK(RegressionBasis(1, 3).size() == 4);
    CHECK(RegressionBasis(2, 2).size() == 6);
    CHECK(RegressionBasis(3, 1).size() == 4);
  }

  TEST_CASE("engines agree on one step moments") {
    const GridScale g(TimeScale::parse("0..1, 3"), 0.5);
    EngineConfig qc;
    qc.mesh_nodes = 401;
    const QuadratureEngine q(g, qc);
    const std::size_t last = g.size() - 1;

    // E[W_3^2 | W_1] = w^2 + 2 and E[W_3^2 dW | W_1] = 2 w * 2.
    const Field sq = q.evaluate(last, [](std::span<const double> w) { return w[0] * w[0]; });
    const StepMoments m = q.step_moments(last, sq);
    const std::size_t mid = q.states() / 2;
    for (std::size_t s = mid - 50; s <= mid + 50; ++s) {
      const double w = q.state(last - 1, s, 0);
      CHECK(m.mean[s] == doctest::Approx(w * w + 2.0).epsilon(1e-9));
      CHECK(m.cross[0][s] == doctest::Approx(4.0 * w).scale(1.0).epsilon(1e-9));
    }
    const Estimate ex = q.expectation(last, sq);
    CHECK(ex.mean == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(ex.se == 0.0);

    auto ens = std::make_shared<const PathEnsemble>(sample_bm(g, 1, 40000, 8));
    EngineConfig rc;
    rc.kind = EngineKind::lsmc;
    const RegressionEngine r(ens, rc);
    const Field rsq = r.evaluate(last, [](std::span<const double> w) { return w[0] * w[0]; });
    const StepMoments rm = r.step_moments(last, rsq);
    double sq_err = 0.0;
    std::size_t inner = 0;
    for (std::size_t p = 0; p < ens->paths(); ++p) {
      const double w = ens->w(p, last - 1);
      if (std::abs(w) > 1.5) continue;
      const double e = rm.cross[0][p] - 4.0 * w;
      sq_err += e * e;
      ++inner;
    }
    CHECK(std::sqrt(sq_err / static_cast<double>(inner)) < 0.2);
    const Estimate rx = r.expectation(last, rsq);
    CHECK(std::abs(rx.mean - 3.0) <= 4 * rx.se);

    CHECK(parse_engine_kind("lsmc") == EngineKind::lsmc);
    CHECK(to_string(EngineKind::quadrature) == "quadrature");
    CHECK_THROWS_AS(parse_engine_kind("mc"), ValidationError);
    CHECK_THROWS_AS(make_engine(qc, g, nullptr, 2), ValidationError);
  }

  TEST_CASE("projection of a martingale is itself") {
    const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.25);
    EngineConfig qc;
    qc.mesh_nodes = 401;
    const QuadratureEngine q(g, qc);
    const std::size_t last = g.size() - 1;
    const Field f = q.evaluate(last, [](std::span<const double> w) { return w[0] * w[0] - 5.0; });
    for (std::size_t i : {std::size_t{0}, std::size_t{2}, g.index_of(3.0)}) {
      const ProjectionTerm term{last, f};
      const Field pr = q.project(i, std::span<const ProjectionTerm>(&term, 1));
      const double t = g.time(i);
      const std::size_t mid = q.states() / 2;
      for (std::size_t s = mid - 40; s <= mid + 40; ++s) {
        const double w = q.state(i, s, 0);
        CHECK(pr[s] == doctest::Approx(w * w - t).scale(1.0).epsilon(1e-9));
      }
    }
  }
}
