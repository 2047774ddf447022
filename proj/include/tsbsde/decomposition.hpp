#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tsbsde/engine.hpp"
#include "tsbsde/stochastic.hpp"

namespace tsbsde {

/// Per-step conditional moments of the orthogonal increment, maximised over states.
struct StepResidual {
  double mean = 0.0;   // max |E[dN | F_{i-1}]|
  double cross = 0.0;  // max_j |E[dN dW^j | F_{i-1}]|
};

/// M_t = E[M_T | F_t] split on the grid as M = M_0 + I(Z) + N.
///
/// Fields live on the engine's states. m[i] is indexed by the states at grid
/// index i; z[i][j] and n_var[i] (steps i >= 1) by the states at i - 1.
struct Decomposition {
  std::size_t dims = 1;
  std::vector<Field> m;
  std::vector<std::vector<Field>> z;
  std::vector<Field> n_var;  // E[dN_i^2 | F_{i-1}]
  std::vector<StepResidual> residuals;
};

/// Backward construction from the terminal field (values at the last grid index).
Decomposition decompose(const ConditionalExpectation& engine, std::span<const double> terminal);

/// The three processes along sampled paths. N is recomputed from Z, so editing
/// a Decomposition's Z changes N accordingly.
struct PathDecomposition {
  MartingalePath m;
  MartingalePath i;
  MartingalePath n;  // n = m - m(., 0) - i, zero at t = 0
};

PathDecomposition evaluate_on_paths(const Decomposition& dec, const ConditionalExpectation& engine,
                                    const PathEnsemble& ensemble);

struct TestIntegrand {
  std::string name;
  ScalarIntegrand x;
};

struct OrthogonalityResult {
  std::string name;
  double estimate = 0.0;  // sample mean of N_t I_t(X)
  double se = 0.0;
};

/// Sample estimate of E[N_t I_t(X)] at grid index `point` (default: the terminal index).
std::vector<OrthogonalityResult> orthogonality_check(const PathDecomposition& paths, const PathEnsemble& ensemble,
                                                     std::span<const TestIntegrand> tests);
std::vector<OrthogonalityResult> orthogonality_check(const PathDecomposition& paths, const PathEnsemble& ensemble,
                                                     std::span<const TestIntegrand> tests, std::size_t point);

/// X = 1, X = W_{t-}, X = W_{t-}^2.
std::vector<TestIntegrand> default_test_integrands();

}  // namespace tsbsde
