#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tsbsde/errors.hpp"
#include "tsbsde/timescale.hpp"

using namespace tsbsde;

namespace {

TimeScale example() { return TimeScale::parse("0..1, 3, 4, 5"); }

std::vector<double> times_of(const GridScale& g) { return {g.times().begin(), g.times().end()}; }

}  // namespace

TEST_SUITE("timescale") {
  TEST_CASE("jump operators on the example scale") {
    const TimeScale ts = example();
    CHECK(ts.sigma(0.5) == 0.5);
    CHECK(ts.sigma(1.0) == 3.0);
    CHECK(ts.sigma(5.0) == 5.0);
    CHECK(ts.rho(3.0) == 1.0);
    CHECK(ts.rho(0.0) == 0.0);
    CHECK(ts.rho(0.5) == 0.5);
    CHECK(ts.nu(3.0) == 2.0);
    CHECK(ts.nu(4.0) == 1.0);
    CHECK(ts.nu(0.7) == 0.0);
    CHECK(ts.mu(1.0) == 2.0);
    CHECK(ts.left_scattered(3.0));
    CHECK_FALSE(ts.left_scattered(1.0));
    CHECK(ts.right_scattered(1.0));
  }

  TEST_CASE("points outside the scale are domain errors") {
    const TimeScale ts = example();
    CHECK_THROWS_AS(ts.sigma(2.0), DomainError);
    CHECK_THROWS_AS(ts.rho(1.5), DomainError);
    CHECK_THROWS_AS(ts.nu(6.0), DomainError);
    CHECK_THROWS_AS(ts.nabla_measure(0.0, 2.0), DomainError);
  }

  TEST_CASE("rho(sigma(t)) = t at right-scattered points") {
    const TimeScale ts = example();
    for (double t : {1.0, 3.0, 4.0}) CHECK(ts.rho(ts.sigma(t)) == t);
  }

  TEST_CASE("literal parsing and round trip") {
    const TimeScale ts = example();
    CHECK(ts.segments().size() == 4);
    CHECK(ts.horizon() == 5.0);
    CHECK(TimeScale::parse(ts.to_string()) == ts);
    const TimeScale odd = TimeScale::parse("0..0.1, 0.30000000000000004, 1..2.5");
    CHECK(TimeScale::parse(odd.to_string()) == odd);
    CHECK_THROWS_AS(TimeScale::parse("3, 0..1"), ValidationError);
    CHECK_THROWS_AS(TimeScale::parse("1..2"), ValidationError);
    CHECK_THROWS_AS(TimeScale::parse("0..1, 1"), ValidationError);
    CHECK_THROWS_AS(TimeScale::parse("0..1,, 3"), ValidationError);
    CHECK_THROWS_AS(TimeScale::parse("0..x"), ValidationError);
    CHECK_THROWS_AS(TimeScale::parse("0..2..3"), ValidationError);
  }

  TEST_CASE("partition follows the inductive rule") {
    const GridScale g = partition(example(), 0.5);
    CHECK(times_of(g) == std::vector<double>{0, 0.5, 1, 3, 4, 5});
    CHECK(g.resolves_scale());
    CHECK(g.kind(1) == StepKind::dense_refinement);
    CHECK(g.kind(3) == StepKind::scattered_jump);
    CHECK(g.nu(3) == 2.0);

    const GridScale coarse = partition(example(), 10.0);
    CHECK(times_of(coarse) == std::vector<double>{0, 5});
    CHECK_FALSE(coarse.resolves_scale());

    const std::vector<double> pts{0, 1, 2, 3, 4};
    const GridScale iso = partition(TimeScale::isolated(pts), 0.3);
    CHECK(times_of(iso) == pts);
    CHECK_THROWS_AS(partition(example(), 0.0), ValidationError);
  }

  TEST_CASE("partition invariants on random scales") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    int resolved = 0;
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<Segment> segs;
      double t = 0.0;
      const int count = 2 + static_cast<int>(rng() % 4);
      for (int k = 0; k < count; ++k) {
        const double len = (rng() % 2) ? 0.0 : u(rng);
        segs.push_back({t, t + len});
        t += len + u(rng);
      }
      const TimeScale ts(segs);
      const double delta = 0.5 * u(rng);
      const GridScale g(ts, delta);
      double total = 0.0;
      for (std::size_t i = 1; i < g.size(); ++i) {
        total += g.nu(i);
        CHECK(ts.rho(g.time(i)) - g.time(i - 1) <= delta + 1e-12);
      }
      CHECK(total == doctest::Approx(ts.horizon()).epsilon(1e-12));
      if (g.resolves_scale()) {
        ++resolved;
        for (const Segment& s : ts.segments()) {
          CHECK_NOTHROW(g.index_of(s.lo));
          CHECK_NOTHROW(g.index_of(s.hi));
        }
      }
      // Re-partitioning the grid viewed as an isolated scale is the identity.
      const GridScale again(g.as_isolated(), delta);
      CHECK(times_of(again) == times_of(g));
    }
    CHECK(resolved > 5);
  }

  TEST_CASE("nabla measure") {
    const TimeScale ts = example();
    CHECK(ts.nabla_measure(0, 5) == 5.0);
    CHECK(ts.nabla_measure(1, 3) == 2.0);
    CHECK(TimeScale::interval(1).nabla_measure(0, 1) == 1.0);
    for (double t : {0.0, 0.25, 1.0, 3.0, 4.0, 5.0}) CHECK(std::abs(ts.nabla_measure(0, t) - t) <= 1e-12);
  }

  TEST_CASE("nabla integral") {
    const GridScale g = partition(example(), 0.25);
    std::vector<double> ones(g.size(), 1.0);
    CHECK(nabla_integral(g, ones) == doctest::Approx(5.0).epsilon(1e-14));

    const std::vector<double> pts{0, 1, 2};
    const GridScale iso = partition(TimeScale::isolated(pts), 0.5);
    CHECK(nabla_integral(iso, pts) == 3.0);

    for (double delta : {1e-2, 1e-3}) {
      const GridScale dense = partition(TimeScale::interval(1), delta);
      std::vector<double> f(dense.times().begin(), dense.times().end());
      CHECK(std::abs(nabla_integral(dense, f) - 0.5) <= delta);
    }
  }

  TEST_CASE("nabla exponential") {
    const TimeScale ts = example();
    CHECK(ts.exp_beta(0.7, 3.0, 3.0) == 1.0);
    CHECK(TimeScale::interval(1).exp_beta(1.0, 1.0, 0.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    for (double beta : {0.1, 1.0, 2.0}) {
      const double oracle = std::exp(beta) * (1 + 2 * beta) * (1 + beta) * (1 + beta);
      CHECK(std::abs(ts.exp_beta(beta, 5, 0) - oracle) <= 1e-12 * oracle);
    }
    // Semigroup and recursion.
    const double beta = 0.8;
    for (double t0 : {0.0, 0.5, 1.0}) {
      for (double t1 : {1.0, 3.0, 4.0}) {
        if (t1 < t0) continue;
        const double lhs = ts.exp_beta(beta, 5, t1) * ts.exp_beta(beta, t1, t0);
        CHECK(std::abs(lhs - ts.exp_beta(beta, 5, t0)) <= 1e-12 * lhs);
      }
    }
    const GridScale g = partition(ts, 0.5);
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (g.kind(i) != StepKind::scattered_jump) continue;
      const double y1 = ts.exp_beta(beta, g.time(i), 0), y0 = ts.exp_beta(beta, g.time(i - 1), 0);
      CHECK(std::abs((y1 - y0) - beta * y0 * g.nu(i)) <= 1e-12 * y1);
    }
    CHECK_THROWS_AS(ts.exp_beta(-0.5, 5, 0), AdmissibilityError);
    CHECK_THROWS_AS(ts.exp_beta(1.0, 1, 3), DomainError);
  }
}
