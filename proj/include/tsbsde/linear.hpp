#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tsbsde/bsde.hpp"
#include "tsbsde/stochastic.hpp"

namespace tsbsde {

/// gamma_t as exp(int_0^t a nabla s), or as the time-scale exponential e_a(t, 0).
/// They coincide on dense steps and differ at left-scattered points.
enum class GammaVariant { exp_integral, nabla_exponential };

std::string to_string(GammaVariant v);
GammaVariant parse_gamma_variant(std::string_view text);

/// -nabla Y = (a Y_{t-} + b Z + c) nabla t - Z nabla W - nabla N, Y_T = xi.
struct LinearData {
  StepFunction a;
  StepFunction b;
  StepFunction c;
  TerminalCondition xi;
  GammaVariant gamma = GammaVariant::exp_integral;

  Driver driver() const { return Driver::linear(a, b, c); }
};

/// gamma at every grid point (deterministic).
std::vector<double> gamma_path(const GridScale& grid, const StepFunction& a, GammaVariant variant);

struct LinearClosedForm {
  std::vector<Estimate> y;       // per grid point: spread of the fitted Y_{t_i} over paths
  std::vector<double> gamma;
  double gamma_divergence = 0.0;  // max relative gap between the two gamma variants
  std::size_t flagged_paths = 0;  // paths with a non-positive Doleans factor
  std::vector<std::string> warnings;
};

/// Y_t = E[xi Gamma_T / Gamma_t + sum_{s in (t,T]} (Gamma_s / Gamma_t) c_s nu_s | F_t] with
/// Gamma = gamma * doleans_exponential(int b nabla W), fitted by regression per grid point.
LinearClosedForm linear_solve_closed_form(const LinearData& data, const PathEnsemble& ensemble,
                                          std::size_t basis_degree = 3);

struct GirsanovResult {
  MartingalePath shifted;               // W - sum b nu
  std::vector<double> weights;          // density E_T per path
  std::vector<Estimate> plain_mean;     // mean of the shifted driver per grid point
  std::vector<Estimate> weighted_mean;  // mean of E_T times the shifted driver
  Estimate weight_mean;
  std::size_t flagged_paths = 0;
};

GirsanovResult girsanov_shift(const StepFunction& b, const PathEnsemble& ensemble);

struct BsdeData {
  Driver driver;
  TerminalCondition terminal;

  bool operator==(const BsdeData&) const = default;
};

struct ComparisonReport {
  bool refused = false;
  std::string reason;
  std::vector<double> min_diff;  // per grid point, min over states of Y1 - Y2
  double overall_min = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Solves both equations after validating xi1 >= xi2 on the terminal states and
/// g1 >= g2 both on random arguments and along the second solution. A failed
/// hypothesis yields a refused report rather than an exception.
ComparisonReport comparison_check(const ConditionalExpectation& engine, const BsdeData& first, const BsdeData& second,
                                  double tolerance = 1e-8, std::size_t samples = 2000, std::uint64_t seed = 7);

/// Y_0 for constant a, b, c on the dense interval [0, T]:
/// e^{aT} E[Phi(bT + sqrt(T) G)] + c (e^{aT} - 1) / a, G standard normal, by Gauss-Hermite.
double gaussian_linear_reference(double a, double b, double c, double horizon, const TerminalCondition& xi,
                                 std::size_t gh_nodes = 96);

}  // namespace tsbsde
