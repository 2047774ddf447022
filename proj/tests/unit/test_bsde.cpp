#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "tsbsde/bsde.hpp"
#include "tsbsde/errors.hpp"

using namespace tsbsde;

namespace {

EngineConfig quadrature_config(std::size_t nodes = 201) {
  EngineConfig c;
  c.mesh_nodes = nodes;
  return c;
}

std::size_t center(const ConditionalExpectation& e) { return e.states() / 2; }

}  // namespace

TEST_SUITE("bsde") {
  TEST_CASE("driver and terminal evaluation") {
    const double z[] = {0.3};
    CHECK(Driver::zero()(0.5, 2.0, z) == 0.0);
    const Driver lin = Driver::linear(StepFunction(-1.0), StepFunction(2.0), StepFunction::parse("1:3, 4"));
    CHECK(lin(0.5, 2.0, z) == doctest::Approx(-2.0 + 0.6 + 3.0));
    CHECK(lin(1.5, 2.0, z) == doctest::Approx(-2.0 + 0.6 + 4.0));
    CHECK(lin.lipschitz() == 2.0);
    CHECK(lin.linear_in_y());
    const Driver sc = Driver::builtin(DriverKind::sin_cos, 0.5);
    CHECK(sc(0.0, 1.0, z) == doctest::Approx(0.5 * (std::sin(1.0) + std::cos(0.3))));
    CHECK(sc.lipschitz() == 0.5);
    CHECK_FALSE(sc.linear_in_y());
    const Driver tm = Driver::builtin(DriverKind::tanh_mix, 2.0);
    CHECK(tm.lipschitz() == 1.0);
    CHECK(Driver::constant(StepFunction(3.0)).lipschitz() == 0.0);
    CHECK_FALSE(Driver::constant(StepFunction(3.0)).depends_on_yz());
    CHECK(sc.depends_on_yz());
    CHECK(parse_driver_kind(to_string(DriverKind::tanh_mix)) == DriverKind::tanh_mix);
    CHECK_THROWS_AS(parse_driver_kind("cubic"), ValidationError);

    TerminalCondition call{TerminalKind::call, 1.0, 0.0, 0.5};
    CHECK(call(0.5) == 0.5);
    CHECK(call(2.0) == 1.5);
    TerminalCondition sq{TerminalKind::square, 0.0, 0.0, -5.0};
    CHECK(sq(2.0) == -1.0);
    CHECK(parse_terminal_kind("constant") == TerminalKind::constant);
    CHECK_THROWS_AS(parse_terminal_kind("put"), ValidationError);
  }

  TEST_CASE("Lipschitz spot check") {
    for (DriverKind k : {DriverKind::sin_cos, DriverKind::tanh_mix}) {
      const Driver d = Driver::builtin(k, 1.5);
      const double seen = lipschitz_spot_check(d, 1.0, 2, 2000, 5);
      CHECK(seen <= d.lipschitz());
      CHECK(seen > 0.25 * d.lipschitz());
    }
    Driver liar = Driver::builtin(DriverKind::sin_cos, 1.0);
    liar.declared_lipschitz = 0.1;
    CHECK(liar.lipschitz() == 0.1);
    CHECK_THROWS_AS(lipschitz_spot_check(liar, 1.0, 1, 2000, 5), ValidationError);
  }

  TEST_CASE("linear driver on an isolated scale matches the hand recursion") {
    const std::vector<double> pts{0, 0.5, 1.5, 2, 3};
    const GridScale g(TimeScale::isolated(pts), 0.25);
    const QuadratureEngine engine(g, quadrature_config());
    const double a = 0.3, b = -0.4, c = 0.7;
    const Driver d = Driver::linear(StepFunction(a), StepFunction(b), StepFunction(c));
    const BsdeSolution sol = solve_backward(engine, d, TerminalCondition{});

    // Y_i = A_i w + B_i.
    std::vector<double> A(pts.size()), B(pts.size());
    A.back() = 1.0;
    B.back() = 0.0;
    for (std::size_t i = pts.size() - 1; i > 0; --i) {
      const double nu = g.nu(i);
      A[i - 1] = A[i] / (1.0 - a * nu);
      B[i - 1] = (B[i] + (b * A[i] + c) * nu) / (1.0 - a * nu);
    }
    const std::size_t mid = center(engine);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t s = mid - 30; s <= mid + 30; ++s) {
        const double w = engine.state(i, s, 0);
        CHECK(std::abs(sol.y[i][s] - (A[i] * w + B[i])) <= 1e-10);
        if (i > 0) CHECK(std::abs(sol.z[0][i][s] - A[i]) <= 1e-10);
      }
    }
  }

  TEST_CASE("nonlinear deterministic recursion") {
    const std::vector<double> pts{0, 1, 2, 3};
    const GridScale g(TimeScale::isolated(pts), 0.25);
    const QuadratureEngine engine(g, quadrature_config(51));
    const Driver d = Driver::builtin(DriverKind::sin_cos, 0.5, StepFunction(0.1));
    const TerminalCondition xi{TerminalKind::constant, 0.0, 0.4, 0.0};
    const BsdeSolution sol = solve_backward(engine, d, xi);

    // y_{i-1} = y_i + (0.5 (sin y_{i-1} + 1) + 0.1) nu_i, solved by bisection.
    double y = 0.4;
    for (std::size_t i = pts.size() - 1; i > 0; --i) {
      const double nu = g.nu(i);
      auto f = [&](double x) { return x - y - (0.5 * (std::sin(x) + 1.0) + 0.1) * nu; };
      double lo = y - 10, hi = y + 10;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (lo + hi);
        (f(m) > 0 ? hi : lo) = m;
      }
      y = 0.5 * (lo + hi);
      for (std::size_t s = 0; s < engine.states(); ++s) CHECK(std::abs(sol.y[i - 1][s] - y) <= 1e-10);
    }
  }

  TEST_CASE("step size refusals") {
    const std::vector<double> pts{0, 2};
    const GridScale g(TimeScale::isolated(pts), 0.25);
    const QuadratureEngine engine(g, quadrature_config(51));
    CHECK_THROWS_AS(solve_backward(engine, Driver::builtin(DriverKind::sin_cos, 1.0), TerminalCondition{}),
                    StepSizeError);
    CHECK_THROWS_AS(
        solve_backward(engine, Driver::linear(StepFunction(0.5), StepFunction(), StepFunction()), TerminalCondition{}),
        StepSizeError);
    // 1 - a nu > 0 with a < 0 is fine even when |a| nu >= 1.
    const TerminalCondition one{TerminalKind::constant, 0.0, 1.0, 0.0};
    const BsdeSolution sol =
        solve_backward(engine, Driver::linear(StepFunction(-1.0), StepFunction(), StepFunction()), one);
    CHECK(sol.y[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }

  TEST_CASE("decomposition solve of a frozen driver") {
    const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.25);
    const QuadratureEngine engine(g, quadrature_config(401));
    const Driver d = Driver::constant(StepFunction::parse("3:1, -0.5"));
    const TerminalCondition xi{TerminalKind::square, 0.0, 0.0, 0.0};
    const Field terminal = terminal_field(engine, xi);
    const FieldSeries g0 = frozen_driver(engine, d);
    const BsdeSolution sol = solve_by_decomposition(engine, g0, terminal);
    const double y0 = 5.0 + 1.0 * 1.0 + 1.0 * 2.0 - 0.5 * 2.0;
    CHECK(sol.y[0][center(engine)] == doctest::Approx(y0).epsilon(1e-10));

    const BsdeSolution back = solve_backward(engine, d, xi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t s = center(engine) - 50; s <= center(engine) + 50; ++s) {
        CHECK(std::abs(back.y[i][s] - sol.y[i][s]) <= 1e-9);
      }
    }
  }

  TEST_CASE("Picard iteration agrees with the backward scheme") {
    const GridScale g(TimeScale::parse("0..1, 2, 2.5"), 0.125);
    const QuadratureEngine engine(g, quadrature_config(801));
    const Driver d = Driver::builtin(DriverKind::tanh_mix, 0.8, StepFunction(0.2));
    const TerminalCondition xi{};
    PicardOptions opt;
    opt.tol = 1e-22;
    opt.max_iters = 200;
    const BsdeSolution pic = picard_solve(engine, d, xi, opt);
    const BsdeSolution back = solve_backward(engine, d, xi);
    const std::size_t mid = center(engine);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t s = mid - 40; s <= mid + 40; ++s) CHECK(std::abs(pic.y[i][s] - back.y[i][s]) <= 1e-9);
    }
    CHECK(pic.diagnostics.picard_iterations > 1);
    CHECK_FALSE(pic.diagnostics.contraction_ratios.empty());
    for (double r : pic.diagnostics.contraction_ratios) CHECK(r < 1.0);

    PicardOptions tight;
    tight.tol = 1e-40;
    tight.max_iters = 2;
    CHECK_THROWS_AS(picard_solve(engine, d, xi, tight), ConvergenceError);

    const BsdeSolution free = picard_solve(engine, Driver::constant(StepFunction(1.0)), xi, opt);
    CHECK(free.diagnostics.picard_iterations == 1);
  }

  TEST_CASE("beta weights and norms") {
    const std::vector<double> pts{0, 1, 2};
    const GridScale g(TimeScale::isolated(pts), 0.5);
    const double beta = 0.5;
    const auto end = beta_weights(g, beta, WeightConvention::step_end);
    const auto start = beta_weights(g, beta, WeightConvention::step_start);
    CHECK(end[0] == 0.0);
    CHECK(end[1] == doctest::Approx(1.5));
    CHECK(end[2] == doctest::Approx(2.25));
    CHECK(start[1] == doctest::Approx(1.0));
    CHECK(start[2] == doctest::Approx(1.5));
    const std::vector<double> ones(3, 1.0);
    CHECK(beta_norm(g, beta, ones) == doctest::Approx(std::sqrt(3.75)));
    CHECK(beta_norm(g, beta, ones, WeightConvention::step_start) == doctest::Approx(std::sqrt(2.5)));

    const GridScale dense(TimeScale::interval(1), 1e-3);
    const std::vector<double> dones(dense.size(), 1.0);
    const double exact = (std::exp(beta) - 1.0) / beta;
    CHECK(beta_norm(dense, beta, dones) * beta_norm(dense, beta, dones) == doctest::Approx(exact).epsilon(1e-3));
    CHECK(beta_norm_bracket(g, beta, ones) == doctest::Approx(std::sqrt(3.75)));
  }

  TEST_CASE("a priori estimate") {
    const Driver d = Driver::constant(StepFunction::parse("1:0.5, -1"));
    const TerminalCondition xi{TerminalKind::call, 0.5, 0.0, 0.0};
    {
      // Dense scale: the continuous-time form holds with either weighting.
      const GridScale g(TimeScale::interval(2.0), 1.0 / 64);
      const QuadratureEngine engine(g, quadrature_config(401));
      const Field terminal = terminal_field(engine, xi);
      const FieldSeries g0 = frozen_driver(engine, d);
      const BsdeSolution sol = solve_by_decomposition(engine, g0, terminal);
      for (double beta : {0.5, 2.0, 8.0}) {
        for (WeightConvention c : {WeightConvention::step_end, WeightConvention::step_start}) {
          const AprioriReport r = apriori_check(engine, sol, g0, terminal, beta, c);
          CHECK(r.slack >= 0.0);
          CHECK(r.discrete_slack >= 0.0);
          CHECK(r.lhs > 0.0);
          CHECK(r.lhs_se == 0.0);
        }
      }
    }
    {
      // Scattered steps: only the discrete form is guaranteed.
      const GridScale g(TimeScale::parse("0..1, 3, 4, 5"), 0.25);
      const QuadratureEngine engine(g, quadrature_config(401));
      const Field terminal = terminal_field(engine, xi);
      const FieldSeries g0 = frozen_driver(engine, d);
      const BsdeSolution sol = solve_by_decomposition(engine, g0, terminal);
      for (double beta : {0.5, 2.0, 8.0}) {
        CHECK(apriori_check(engine, sol, g0, terminal, beta).discrete_slack >= 0.0);
      }
    }
    {
      // xi = 1, g0 = 0 on {0, 2}, beta = 8: Y = 1, so the step-end form reads
      // 1 + 4 * 17 * 2 <= 17 and fails, while the discrete form 1 + 4 * 2 <= 17 holds.
      const std::vector<double> pts{0, 2};
      const GridScale g(TimeScale::isolated(pts), 1.0);
      const QuadratureEngine engine(g, quadrature_config(51));
      const Field terminal(engine.states(), 1.0);
      const FieldSeries g0(g.size(), engine.states());
      const BsdeSolution sol = solve_by_decomposition(engine, g0, terminal);
      const AprioriReport r = apriori_check(engine, sol, g0, terminal, 8.0);
      CHECK(r.lhs == doctest::Approx(137.0));
      CHECK(r.rhs == doctest::Approx(17.0));
      CHECK(r.discrete_lhs == doctest::Approx(9.0));
      CHECK(r.discrete_slack == doctest::Approx(8.0));
    }
  }

  TEST_CASE("summary rows") {
    const GridScale g(TimeScale::parse("0..1, 3"), 0.5);
    const QuadratureEngine engine(g, quadrature_config(201));
    const BsdeSolution sol = solve_backward(engine, Driver::zero(), TerminalCondition{});
    const auto rows = summarize(engine, sol);
    REQUIRE(rows.size() == g.size());
    CHECK(rows.back().t == 3.0);
    CHECK(rows.back().nu == 2.0);
    CHECK(rows.back().y.std == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
    CHECK(rows.back().z.mean == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(rows.back().n_var) <= 1e-10);
  }
}
