#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsbsde/bsde.hpp"
#include "tsbsde/engine.hpp"
#include "tsbsde/linear.hpp"
#include "tsbsde/timescale.hpp"

namespace tsbsde {

enum class SolverKind { backward, picard };

std::string to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view text);

struct RunConfig {
  double delta = 0.0;
  std::optional<double> beta;  // default 8 (1 + L^2)
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  std::size_t dims = 1;
  std::string out = "out";
  SolverKind solver = SolverKind::backward;
  double picard_tol = 1e-10;
  std::size_t max_iters = 50;

  bool operator==(const RunConfig&) const = default;
};

enum class SweepReference { automatic, closed_form, finest };

std::string to_string(SweepReference r);
SweepReference parse_sweep_reference(std::string_view text);

struct SweepConfig {
  std::vector<double> deltas;  // at least three, strictly decreasing
  SweepReference reference = SweepReference::automatic;

  bool operator==(const SweepConfig&) const = default;
};

/// One batch run. Text form: `[section]` headers and `key = value` lines,
/// `#` comments. Sections: timescale, driver, terminal, engine, run, linear,
/// driver2 + terminal2 (second equation for compare), sweep. Unknown sections
/// or keys, duplicates and keys unused by the chosen kind are errors.
struct Scenario {
  TimeScale scale = TimeScale::interval(1.0);
  Driver driver;
  TerminalCondition terminal;
  EngineConfig engine;
  RunConfig run;
  GammaVariant gamma = GammaVariant::exp_integral;
  std::optional<BsdeData> second;
  SweepConfig sweep;

  static Scenario parse(std::string_view text);
  static Scenario load(const std::filesystem::path& file);
  /// Canonical text; parse(emit()) == *this for every parsed scenario.
  std::string emit() const;

  /// Beta for norms and Picard: the override or 8 (1 + L^2).
  double beta() const;

  bool operator==(const Scenario&) const = default;
};

/// Decimal or 0x-prefixed hexadecimal.
std::uint64_t parse_seed(std::string_view text);

}  // namespace tsbsde
