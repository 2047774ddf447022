#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tsbsde/engine.hpp"
#include "tsbsde/errors.hpp"
#include "tsbsde/scenario.hpp"
#include "tsbsde/stochastic.hpp"

namespace tsbsde {

/// A named output file and its full contents.
struct Artifact {
  std::string name;
  std::string content;
};
using Artifacts = std::vector<Artifact>;

/// A run that stopped because the scenario does not meet a theorem's
/// hypotheses; carries the report written so far.
class RefusalError : public ValidationError {
 public:
  RefusalError(const std::string& what, Artifacts artifacts)
      : ValidationError(what), artifacts_(std::move(artifacts)) {}
  const Artifacts& artifacts() const { return artifacts_; }

 private:
  Artifacts artifacts_;
};

/// Grid, optional path ensemble and engine assembled from a scenario.
struct Problem {
  std::unique_ptr<GridScale> grid;
  std::shared_ptr<const PathEnsemble> ensemble;
  std::unique_ptr<ConditionalExpectation> engine;
};

/// Throws ValidationError when the delta-grid does not resolve the scale's gaps.
/// Paths are sampled when the engine needs them or `with_paths` is set.
Problem make_problem(const Scenario& scenario, double delta, bool with_paths);

Artifacts run_solve(const Scenario& scenario);      // solution.csv, diagnostics.json
Artifacts run_decompose(const Scenario& scenario);  // decompose.csv, decompose.json
Artifacts run_linear(const Scenario& scenario);     // linear.csv, linear.json
Artifacts run_compare(const Scenario& scenario);    // compare.csv, compare.json; RefusalError on bad hypotheses
Artifacts run_sweep(const Scenario& scenario);      // sweep.csv, sweep.json
Artifacts run_sample(const Scenario& scenario);     // sample.csv

/// Dispatch by subcommand name.
Artifacts run_command(std::string_view command, const Scenario& scenario);

void write_artifacts(const std::filesystem::path& dir, const Artifacts& artifacts);

/// "%.17g", with "nan" / "inf" spelled out.
std::string csv_number(double v);

}  // namespace tsbsde
