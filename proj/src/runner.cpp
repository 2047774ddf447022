#include "tsbsde/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tsbsde/bsde.hpp"
#include "tsbsde/decomposition.hpp"
#include "tsbsde/linear.hpp"

namespace tsbsde {

using json = nlohmann::json;

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

class Csv {
 public:
  explicit Csv(std::string header) { os_ << header << "\n"; }

  template <typename... Ts>
  void row(Ts... values) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(values), first = false), ...);
    os_ << "\n";
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return csv_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  std::ostringstream os_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json run_header(const Scenario& sc, const Problem& pb, const char* command) {
  json j;
  j["command"] = command;
  j["timescale"] = sc.scale.to_string();
  j["engine"] = pb.engine->name();
  j["delta"] = pb.grid->delta();
  j["steps"] = pb.grid->steps();
  j["states"] = pb.engine->states();
  if (pb.ensemble) {
    j["paths"] = pb.ensemble->paths();
    j["seed"] = pb.ensemble->seed();
  }
  return j;
}

BsdeSolution solve(const Scenario& sc, const Problem& pb) {
  lipschitz_spot_check(sc.driver, pb.grid->horizon(), pb.engine->dims(), 1000, sc.run.seed);
  if (sc.run.solver == SolverKind::picard) {
    PicardOptions opt;
    opt.beta = sc.beta();
    opt.tol = sc.run.picard_tol;
    opt.max_iters = sc.run.max_iters;
    return picard_solve(*pb.engine, sc.driver, sc.terminal, opt);
  }
  BsdeSolution sol = solve_backward(*pb.engine, sc.driver, sc.terminal);
  sol.diagnostics.beta = sc.beta();
  return sol;
}

bool closed_form_available(const Scenario& sc) {
  const auto& segs = sc.scale.segments();
  if (segs.size() != 1 || segs[0].isolated()) return false;
  if (sc.run.dims != 1) return false;
  const Driver& d = sc.driver;
  switch (d.kind) {
    case DriverKind::zero: return true;
    case DriverKind::constant: return d.c.is_constant();
    case DriverKind::linear: return d.a.is_constant() && d.b.is_constant() && d.c.is_constant();
    default: return false;
  }
}

}  // namespace

Problem make_problem(const Scenario& sc, double delta, bool with_paths) {
  Problem pb;
  pb.grid = std::make_unique<GridScale>(sc.scale, delta);
  if (!pb.grid->resolves_scale()) {
    throw ValidationError("delta " + csv_number(delta) +
                          " is too coarse: some grid step swallows a gap of the time scale; use delta below the "
                          "smallest interval length and gap");
  }
  if (sc.engine.kind == EngineKind::lsmc || with_paths) {
    pb.ensemble = std::make_shared<const PathEnsemble>(sample_bm(*pb.grid, sc.run.dims, sc.run.paths, sc.run.seed));
  }
  pb.engine = make_engine(sc.engine, *pb.grid, pb.ensemble, sc.run.dims);
  return pb;
}

Artifacts run_solve(const Scenario& sc) {
  const Problem pb = make_problem(sc, sc.run.delta, false);
  const BsdeSolution sol = solve(sc, pb);
  const std::vector<SolutionRow> rows = summarize(*pb.engine, sol);

  Csv csv("t,nu,Y_mean,Y_std,Z_mean,Z_std,N_var");
  for (const SolutionRow& r : rows) csv.row(r.t, r.nu, r.y.mean, r.y.std, r.z.mean, r.z.std, r.n_var);

  const BsdeDiagnostics& d = sol.diagnostics;
  json j = run_header(sc, pb, "solve");
  j["solver"] = d.solver;
  j["beta"] = d.beta;
  j["lipschitz"] = d.lipschitz;
  j["inner_iterations"] = {{"max", d.inner_iterations_max}, {"total", d.inner_iterations_total}};
  j["picard_iterations"] = d.picard_iterations;
  j["residual_history"] = d.residual_history;
  j["contraction_ratios"] = d.contraction_ratios;
  j["Y0"] = {{"mean", rows[0].y.mean}, {"std", rows[0].y.std}};
  if (!sc.driver.depends_on_yz()) {
    const ConditionalExpectation& engine = *pb.engine;
    const FieldSeries g0 = frozen_driver(engine, sc.driver);
    const Field xi = terminal_field(engine, sc.terminal);
    json apriori = json::object();
    for (WeightConvention c : {WeightConvention::step_end, WeightConvention::step_start}) {
      const AprioriReport r = apriori_check(engine, sol, g0, xi, sc.beta(), c);
      apriori[c == WeightConvention::step_end ? "step_end" : "step_start"] = {
          {"lhs", r.lhs}, {"rhs", r.rhs}, {"slack", r.slack}, {"lhs_se", r.lhs_se}, {"rhs_se", r.rhs_se}};
      apriori["discrete"] = {{"lhs", r.discrete_lhs}, {"rhs", r.discrete_rhs}, {"slack", r.discrete_slack}};
    }
    j["apriori"] = apriori;
  }
  j["warnings"] = d.warnings;
  return {{"solution.csv", csv.str()}, {"diagnostics.json", dump(j)}};
}

Artifacts run_decompose(const Scenario& sc) {
  const Problem pb = make_problem(sc, sc.run.delta, true);
  const ConditionalExpectation& engine = *pb.engine;
  const Decomposition dec = decompose(engine, terminal_field(engine, sc.terminal));
  const PathEnsemble& ensemble = *pb.ensemble;
  const PathDecomposition paths = evaluate_on_paths(dec, engine, ensemble);
  const std::vector<TestIntegrand> tests = default_test_integrands();
  std::vector<MartingalePath> integrals;
  for (const TestIntegrand& t : tests) integrals.push_back(stochastic_integral(ensemble, t.x));

  Csv csv("t,Z_mean,Z_std,N_increment_var,orth_1,orth_1_se,orth_w,orth_w_se,orth_w2,orth_w2_se");
  std::vector<double> prod(ensemble.paths());
  double max_mean = 0.0, max_cross = 0.0;
  for (std::size_t i = 0; i < pb.grid->size(); ++i) {
    Estimate z;
    double nvar = 0.0;
    if (i > 0) {
      z = engine.expectation(i - 1, dec.z[i][0]);
      nvar = engine.expectation(i - 1, dec.n_var[i]).mean;
      max_mean = std::max(max_mean, dec.residuals[i].mean);
      max_cross = std::max(max_cross, dec.residuals[i].cross);
    }
    Estimate orth[3];
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t p = 0; p < ensemble.paths(); ++p) prod[p] = paths.n(p, i) * integrals[k](p, i);
      orth[k] = sample_estimate(prod);
    }
    csv.row(pb.grid->time(i), z.mean, z.std, nvar, orth[0].mean, orth[0].se, orth[1].mean, orth[1].se, orth[2].mean,
            orth[2].se);
  }
  json j = run_header(sc, pb, "decompose");
  j["M0"] = engine.expectation(0, dec.m[0]).mean;
  j["max_conditional_mean_residual"] = max_mean;
  j["max_conditional_cross_residual"] = max_cross;
  return {{"decompose.csv", csv.str()}, {"decompose.json", dump(j)}};
}

Artifacts run_linear(const Scenario& sc) {
  const Driver& d = sc.driver;
  if (d.kind == DriverKind::sin_cos || d.kind == DriverKind::tanh_mix) {
    throw ValidationError("linear: the driver must be zero, constant or linear");
  }
  LinearData data;
  if (d.kind == DriverKind::linear) {
    data.a = d.a;
    data.b = d.b;
  }
  data.c = d.c;
  data.xi = sc.terminal;
  data.gamma = sc.gamma;

  const Problem pb = make_problem(sc, sc.run.delta, true);
  const LinearClosedForm closed = linear_solve_closed_form(data, *pb.ensemble, sc.engine.basis_degree);
  const BsdeSolution sol = solve_backward(*pb.engine, data.driver(), data.xi);

  Csv csv("t,Y_closed_form,Y_backward,abs_diff");
  for (std::size_t i = 0; i < pb.grid->size(); ++i) {
    const double yb = pb.engine->expectation(i, sol.y[i]).mean;
    csv.row(pb.grid->time(i), closed.y[i].mean, yb, std::abs(closed.y[i].mean - yb));
  }
  json j = run_header(sc, pb, "linear");
  j["gamma"] = to_string(data.gamma);
  j["gamma_divergence"] = closed.gamma_divergence;
  j["flagged_paths"] = closed.flagged_paths;
  j["Y0_closed_form"] = {{"mean", closed.y[0].mean}, {"se", closed.y[0].se}};
  j["warnings"] = closed.warnings;
  return {{"linear.csv", csv.str()}, {"linear.json", dump(j)}};
}

Artifacts run_compare(const Scenario& sc) {
  if (!sc.second) throw ValidationError("compare: the scenario needs [driver2] and/or [terminal2]");
  const Problem pb = make_problem(sc, sc.run.delta, false);
  const double tol = pb.engine->deterministic() ? 1e-8 : 0.0;
  const ComparisonReport r =
      comparison_check(*pb.engine, BsdeData{sc.driver, sc.terminal}, *sc.second, tol, 2000, sc.run.seed);

  Csv csv("t,min_diff,pass");
  for (std::size_t i = 0; i < r.min_diff.size(); ++i) {
    csv.row(pb.grid->time(i), r.min_diff[i], static_cast<int>(r.min_diff[i] >= -r.tolerance));
  }
  json j = run_header(sc, pb, "compare");
  j["refused"] = r.refused;
  j["reason"] = r.reason;
  j["tolerance"] = r.tolerance;
  j["min_diff"] = r.refused ? json() : json(r.overall_min);
  j["pass"] = r.pass;
  Artifacts out{{"compare.csv", csv.str()}, {"compare.json", dump(j)}};
  if (r.refused) throw RefusalError("compare refused: " + r.reason, std::move(out));
  return out;
}

Artifacts run_sweep(const Scenario& sc) {
  if (sc.sweep.deltas.size() < 3) throw ValidationError("sweep: the scenario needs [sweep] with at least three deltas");
  SweepReference ref = sc.sweep.reference;
  if (ref == SweepReference::automatic) {
    ref = closed_form_available(sc) ? SweepReference::closed_form : SweepReference::finest;
  }
  if (ref == SweepReference::closed_form && !closed_form_available(sc)) {
    throw ValidationError("sweep: a closed-form reference needs a dense [0,T] scale and constant linear coefficients");
  }

  std::vector<double> y0;
  for (double delta : sc.sweep.deltas) {
    const Problem pb = make_problem(sc, delta, false);
    const BsdeSolution sol = solve(sc, pb);
    y0.push_back(pb.engine->expectation(0, sol.y[0]).mean);
  }
  double reference = y0.back();
  if (ref == SweepReference::closed_form) {
    const Driver& d = sc.driver;
    const bool lin = d.kind == DriverKind::linear;
    reference = gaussian_linear_reference(lin ? d.a(0.0) : 0.0, lin ? d.b(0.0) : 0.0, d.c(0.0), sc.scale.horizon(),
                                          sc.terminal);
  }

  Csv csv("delta,Y0,abs_error,error_ratio");
  double prev_err = NAN;
  for (std::size_t k = 0; k < y0.size(); ++k) {
    const double err = std::abs(y0[k] - reference);
    const double ratio = (k > 0 && err > 0.0) ? prev_err / err : NAN;
    csv.row(sc.sweep.deltas[k], y0[k], err, ratio);
    prev_err = err;
  }
  json j;
  j["command"] = "sweep";
  j["timescale"] = sc.scale.to_string();
  j["reference_kind"] = to_string(ref);
  j["reference"] = reference;
  j["deltas"] = sc.sweep.deltas;
  return {{"sweep.csv", csv.str()}, {"sweep.json", dump(j)}};
}

Artifacts run_sample(const Scenario& sc) {
  const GridScale grid(sc.scale, sc.run.delta);
  const PathEnsemble e = sample_bm(grid, sc.run.dims, sc.run.paths, sc.run.seed);
  Csv csv("path,t,dim,W");
  for (std::size_t p = 0; p < e.paths(); ++p) {
    for (std::size_t i = 0; i < e.points(); ++i) {
      for (std::size_t j = 0; j < e.dims(); ++j) csv.row(p, grid.time(i), j, e.w(p, i, j));
    }
  }
  return {{"sample.csv", csv.str()}};
}

Artifacts run_command(std::string_view command, const Scenario& sc) {
  if (command == "solve") return run_solve(sc);
  if (command == "decompose") return run_decompose(sc);
  if (command == "linear") return run_linear(sc);
  if (command == "compare") return run_compare(sc);
  if (command == "sweep") return run_sweep(sc);
  if (command == "sample") return run_sample(sc);
  throw ValidationError("unknown command '" + std::string(command) + "'");
}

void write_artifacts(const std::filesystem::path& dir, const Artifacts& artifacts) {
  std::filesystem::create_directories(dir);
  for (const Artifact& a : artifacts) {
    std::ofstream out(dir / a.name, std::ios::binary);
    out << a.content;
    if (!out) throw std::runtime_error("cannot write " + (dir / a.name).string());
  }
}

}  // namespace tsbsde
