#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "tsbsde/decomposition.hpp"
#include "tsbsde/engine.hpp"

using namespace tsbsde;

namespace {

EngineConfig quadrature_config(std::size_t nodes = 401) {
  EngineConfig c;
  c.mesh_nodes = nodes;
  return c;
}

}  // namespace

TEST_SUITE("decomposition") {
  TEST_CASE("three point toy has a nonzero orthogonal part") {
    // One scattered step with W_1 in {-1, 0, 1}: M_1 = W_1^2 is not a
    // stochastic integral, N_1 = W_1^2 - 2/3.
    const std::vector<double> pts{0, 1};
    const GridScale g(TimeScale::isolated(pts), 0.5);
    auto ens = std::make_shared<const PathEnsemble>(g, 1, 3, 0, std::vector<double>{0, -1, 0, 0, 0, 1});
    EngineConfig rc;
    rc.kind = EngineKind::lsmc;
    rc.basis_degree = 1;
    const RegressionEngine engine(ens, rc);
    const Field terminal{1.0, 0.0, 1.0};
    const Decomposition dec = decompose(engine, terminal);
    for (double v : dec.m[0]) CHECK(v == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    for (double v : dec.z[1][0]) CHECK(std::abs(v) <= 1e-14);

    const PathDecomposition paths = evaluate_on_paths(dec, engine, *ens);
    const double expected[] = {1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0};
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(paths.n(p, 1) == doctest::Approx(expected[p]).epsilon(1e-13));
      CHECK(paths.n(p, 0) == 0.0);
    }
  }

  TEST_CASE("quadrature decomposition of W^2 - t") {
    const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.25);
    const QuadratureEngine engine(g, quadrature_config());
    const std::size_t last = g.size() - 1;
    const Field terminal = engine.evaluate(last, [](std::span<const double> w) { return w[0] * w[0] - 5.0; });
    const Decomposition dec = decompose(engine, terminal);
    const std::size_t mid = engine.states() / 2;
    for (std::size_t i = 1; i <= last; ++i) {
      const double nu = g.nu(i);
      for (std::size_t s = mid - 40; s <= mid + 40; ++s) {
        const double w = engine.state(i - 1, s, 0);
        CHECK(dec.z[i][0][s] == doctest::Approx(2.0 * w).scale(1.0).epsilon(1e-9));
        CHECK(dec.n_var[i][s] == doctest::Approx(2.0 * nu * nu).scale(1.0).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("W_T alone is a pure stochastic integral") {
    const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.5);
    const QuadratureEngine engine(g, quadrature_config());
    const Field terminal = engine.evaluate(g.size() - 1, [](std::span<const double> w) { return w[0]; });
    const Decomposition dec = decompose(engine, terminal);
    for (std::size_t i = 1; i < g.size(); ++i) {
      for (std::size_t s = 0; s < engine.states(); ++s) {
        CHECK(dec.z[i][0][s] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(dec.n_var[i][s]) <= 1e-10);
      }
      CHECK(dec.residuals[i].mean <= 1e-10);
    }
  }

  TEST_CASE("orthogonality along sampled paths") {
    const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.5);
    const QuadratureEngine engine(g, quadrature_config());
    const Field terminal =
        engine.evaluate(g.size() - 1, [](std::span<const double> w) { return w[0] * w[0] * w[0]; });
    const Decomposition dec = decompose(engine, terminal);
    const PathEnsemble ens = sample_bm(g, 1, 100000, 17);
    const PathDecomposition paths = evaluate_on_paths(dec, engine, ens);
    const auto tests = default_test_integrands();
    CHECK(tests.size() == 3);
    for (const auto& r : orthogonality_check(paths, ens, tests)) {
      CHECK(std::abs(r.estimate) <= 3.5 * r.se);
      CHECK(r.se > 0.0);
    }
    // The decomposition adds up pathwise.
    for (std::size_t p = 0; p < 50; ++p) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(paths.m(p, i) == doctest::Approx(paths.m(p, 0) + paths.i(p, i) + paths.n(p, i)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("a perturbed Z breaks orthogonality") {
    const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.5);
    const QuadratureEngine engine(g, quadrature_config());
    const Field terminal = engine.evaluate(g.size() - 1, [](std::span<const double> w) { return w[0]; });
    Decomposition dec = decompose(engine, terminal);
    for (std::size_t i = 1; i < g.size(); ++i) {
      for (double& v : dec.z[i][0]) v += 0.5;
    }
    const PathEnsemble ens = sample_bm(g, 1, 20000, 3);
    const PathDecomposition paths = evaluate_on_paths(dec, engine, ens);
    const auto tests = default_test_integrands();
    const auto res = orthogonality_check(paths, ens, std::span<const TestIntegrand>(tests.data(), 1));
    // E[N_T I_T(1)] = -0.5 T.
    CHECK(std::abs(res[0].estimate + 2.5) <= 4 * res[0].se);
  }
}
