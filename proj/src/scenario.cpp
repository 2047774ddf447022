#include "tsbsde/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "tsbsde/errors.hpp"

namespace tsbsde {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

const std::vector<std::string> kSections = {"timescale", "driver", "terminal", "engine", "run",
                                            "linear",    "driver2", "terminal2", "sweep"};

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

class Document {
 public:
  explicit Document(std::string_view text) {
    std::size_t line_no = 0;
    std::string current;
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t nl = text.find('\n', start);
      const std::string_view raw = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
      start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      const std::string_view line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "malformed section header");
        current = std::string(trim(line.substr(1, line.size() - 2)));
        if (std::find(kSections.begin(), kSections.end(), current) == kSections.end()) {
          fail(line_no, "unknown section [" + current + "]");
        }
        if (sections_.count(current)) fail(line_no, "duplicate section [" + current + "]");
        sections_[current];
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
      if (current.empty()) fail(line_no, "key outside of any section");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) fail(line_no, "empty key");
      auto& section = sections_[current];
      if (section.count(key)) fail(line_no, "duplicate key '" + key + "' in [" + current + "]");
      section[key] = Entry{value, line_no, false};
    }
  }

  bool has(const std::string& section) const { return sections_.count(section) > 0; }

  const Entry* take(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  const Entry& require(const std::string& section, const std::string& key) {
    const Entry* e = take(section, key);
    if (!e) throw ValidationError("scenario: missing required key '" + key + "' in [" + section + "]");
    return *e;
  }

  void check_all_used() const {
    for (const auto& [name, section] : sections_) {
      for (const auto& [key, entry] : section) {
        if (!entry.used) fail(entry.line, "unknown key '" + key + "' in [" + name + "] (or not used by its kind)");
      }
    }
  }

  [[noreturn]] static void fail(std::size_t line, const std::string& message) {
    throw ValidationError("scenario line " + std::to_string(line) + ": " + message);
  }

 private:
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

template <typename F>
auto at_line(const Entry& e, F&& f) {
  try {
    return f(e.value);
  } catch (const ValidationError& err) {
    Document::fail(e.line, err.what());
  } catch (const DomainError& err) {
    Document::fail(e.line, err.what());
  }
}

double number(const Entry& e, const char* what) {
  return at_line(e, [&](const std::string& v) { return parse_double(v, what); });
}

double positive(const Entry& e, const char* what) {
  const double v = number(e, what);
  if (!(v > 0.0)) Document::fail(e.line, std::string(what) + " must be positive");
  return v;
}

std::uint64_t unsigned_integer(std::string_view text, std::string_view what, int base = 10) {
  text = trim(text);
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value, base);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ValidationError("cannot parse non-negative integer '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

std::size_t count(const Entry& e, const char* what, std::size_t min) {
  const std::size_t v = at_line(e, [&](const std::string& s) { return unsigned_integer(s, what); });
  if (v < min) Document::fail(e.line, std::string(what) + " must be at least " + std::to_string(min));
  return v;
}

StepFunction step(const Entry& e) {
  return at_line(e, [](const std::string& v) { return StepFunction::parse(v); });
}

Driver read_driver(Document& doc, const std::string& section) {
  Driver d;
  if (!doc.has(section)) return d;
  const Entry& kind = doc.require(section, "kind");
  d.kind = at_line(kind, [](const std::string& v) { return parse_driver_kind(v); });
  auto opt_step = [&](const char* key) -> StepFunction {
    const Entry* e = doc.take(section, key);
    return e ? step(*e) : StepFunction();
  };
  switch (d.kind) {
    case DriverKind::zero: break;
    case DriverKind::constant: d.c = opt_step("c"); break;
    case DriverKind::linear:
      d.a = opt_step("a");
      d.b = opt_step("b");
      d.c = opt_step("c");
      break;
    case DriverKind::sin_cos:
    case DriverKind::tanh_mix:
      if (const Entry* e = doc.take(section, "s")) d.s = number(*e, "s");
      d.c = opt_step("c");
      break;
  }
  if (const Entry* e = doc.take(section, "lipschitz")) {
    const double L = number(*e, "lipschitz");
    if (L < 0.0) Document::fail(e->line, "lipschitz must be non-negative");
    d.declared_lipschitz = L;
  }
  return d;
}

TerminalCondition read_terminal(Document& doc, const std::string& section) {
  TerminalCondition t;
  if (!doc.has(section)) return t;
  const Entry& kind = doc.require(section, "kind");
  t.kind = at_line(kind, [](const std::string& v) { return parse_terminal_kind(v); });
  if (t.kind == TerminalKind::call) t.strike = number(doc.require(section, "strike"), "strike");
  if (t.kind == TerminalKind::constant) t.value = number(doc.require(section, "value"), "value");
  if (const Entry* e = doc.take(section, "offset")) t.offset = number(*e, "offset");
  return t;
}

void emit_driver(std::ostream& os, const std::string& section, const Driver& d) {
  os << "[" << section << "]\nkind = " << to_string(d.kind) << "\n";
  switch (d.kind) {
    case DriverKind::zero: break;
    case DriverKind::constant: os << "c = " << d.c.to_string() << "\n"; break;
    case DriverKind::linear:
      os << "a = " << d.a.to_string() << "\nb = " << d.b.to_string() << "\nc = " << d.c.to_string() << "\n";
      break;
    case DriverKind::sin_cos:
    case DriverKind::tanh_mix: os << "s = " << format_double(d.s) << "\nc = " << d.c.to_string() << "\n"; break;
  }
  if (d.declared_lipschitz) os << "lipschitz = " << format_double(*d.declared_lipschitz) << "\n";
  os << "\n";
}

void emit_terminal(std::ostream& os, const std::string& section, const TerminalCondition& t) {
  os << "[" << section << "]\nkind = " << to_string(t.kind) << "\n";
  if (t.kind == TerminalKind::call) os << "strike = " << format_double(t.strike) << "\n";
  if (t.kind == TerminalKind::constant) os << "value = " << format_double(t.value) << "\n";
  os << "offset = " << format_double(t.offset) << "\n\n";
}

}  // namespace

std::string to_string(SolverKind kind) { return kind == SolverKind::backward ? "backward" : "picard"; }

SolverKind parse_solver_kind(std::string_view text) {
  if (text == "backward") return SolverKind::backward;
  if (text == "picard") return SolverKind::picard;
  throw ValidationError("unknown solver '" + std::string(text) + "' (expected backward|picard)");
}

std::string to_string(SweepReference r) {
  switch (r) {
    case SweepReference::automatic: return "auto";
    case SweepReference::closed_form: return "closed_form";
    case SweepReference::finest: return "finest";
  }
  return "auto";
}

SweepReference parse_sweep_reference(std::string_view text) {
  for (SweepReference r : {SweepReference::automatic, SweepReference::closed_form, SweepReference::finest}) {
    if (text == to_string(r)) return r;
  }
  throw ValidationError("unknown sweep reference '" + std::string(text) + "' (expected auto|closed_form|finest)");
}

std::uint64_t parse_seed(std::string_view text) {
  text = trim(text);
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    return unsigned_integer(text.substr(2), "seed", 16);
  }
  return unsigned_integer(text, "seed");
}

Scenario Scenario::parse(std::string_view text) {
  Document doc(text);
  Scenario sc;

  const Entry& scale = doc.require("timescale", "scale");
  sc.scale = at_line(scale, [](const std::string& v) { return TimeScale::parse(v); });

  sc.driver = read_driver(doc, "driver");
  sc.terminal = read_terminal(doc, "terminal");

  if (const Entry* e = doc.take("engine", "engine")) {
    sc.engine.kind = at_line(*e, [](const std::string& v) { return parse_engine_kind(v); });
  }
  if (const Entry* e = doc.take("engine", "gh_nodes")) sc.engine.gh_nodes = count(*e, "gh_nodes", 2);
  if (const Entry* e = doc.take("engine", "mesh_half_width")) {
    sc.engine.mesh_half_width = positive(*e, "mesh_half_width");
  }
  if (const Entry* e = doc.take("engine", "mesh_nodes")) {
    sc.engine.mesh_nodes = count(*e, "mesh_nodes", 5);
    if (sc.engine.mesh_nodes % 2 == 0) Document::fail(e->line, "mesh_nodes must be odd");
  }
  if (const Entry* e = doc.take("engine", "basis_degree")) sc.engine.basis_degree = count(*e, "basis_degree", 0);

  sc.run.delta = positive(doc.require("run", "delta"), "delta");
  if (const Entry* e = doc.take("run", "beta")) sc.run.beta = positive(*e, "beta");
  if (const Entry* e = doc.take("run", "paths")) sc.run.paths = count(*e, "paths", 1);
  if (const Entry* e = doc.take("run", "seed")) {
    sc.run.seed = at_line(*e, [](const std::string& v) { return parse_seed(v); });
  }
  if (const Entry* e = doc.take("run", "dims")) sc.run.dims = count(*e, "dims", 1);
  if (const Entry* e = doc.take("run", "out")) {
    if (e->value.empty()) Document::fail(e->line, "out must not be empty");
    sc.run.out = e->value;
  }
  if (const Entry* e = doc.take("run", "solver")) {
    sc.run.solver = at_line(*e, [](const std::string& v) { return parse_solver_kind(v); });
  }
  if (const Entry* e = doc.take("run", "picard_tol")) sc.run.picard_tol = positive(*e, "picard_tol");
  if (const Entry* e = doc.take("run", "max_iters")) sc.run.max_iters = count(*e, "max_iters", 1);

  if (const Entry* e = doc.take("linear", "gamma")) {
    sc.gamma = at_line(*e, [](const std::string& v) { return parse_gamma_variant(v); });
  }

  if (doc.has("driver2") || doc.has("terminal2")) {
    sc.second = BsdeData{read_driver(doc, "driver2"), read_terminal(doc, "terminal2")};
  }

  if (doc.has("sweep")) {
    const Entry& deltas = doc.require("sweep", "deltas");
    std::size_t start = 0;
    while (start <= deltas.value.size()) {
      const std::size_t comma = deltas.value.find(',', start);
      const std::string item =
          deltas.value.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      Entry tmp{item, deltas.line, true};
      sc.sweep.deltas.push_back(positive(tmp, "sweep delta"));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (sc.sweep.deltas.size() < 3) Document::fail(deltas.line, "a sweep needs at least three deltas");
    for (std::size_t k = 1; k < sc.sweep.deltas.size(); ++k) {
      if (!(sc.sweep.deltas[k] < sc.sweep.deltas[k - 1])) {
        Document::fail(deltas.line, "sweep deltas must be strictly decreasing");
      }
    }
    if (const Entry* e = doc.take("sweep", "reference")) {
      sc.sweep.reference = at_line(*e, [](const std::string& v) { return parse_sweep_reference(v); });
    }
  }

  doc.check_all_used();
  return sc;
}

Scenario Scenario::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open scenario file '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Scenario::emit() const {
  std::ostringstream os;
  os << "[timescale]\nscale = " << scale.to_string() << "\n\n";
  emit_driver(os, "driver", driver);
  emit_terminal(os, "terminal", terminal);
  os << "[engine]\nengine = " << to_string(engine.kind) << "\ngh_nodes = " << engine.gh_nodes
     << "\nmesh_half_width = " << format_double(engine.mesh_half_width) << "\nmesh_nodes = " << engine.mesh_nodes
     << "\nbasis_degree = " << engine.basis_degree << "\n\n";
  os << "[run]\ndelta = " << format_double(run.delta) << "\n";
  if (run.beta) os << "beta = " << format_double(*run.beta) << "\n";
  os << "paths = " << run.paths << "\nseed = " << run.seed << "\ndims = " << run.dims << "\nout = " << run.out
     << "\nsolver = " << to_string(run.solver) << "\npicard_tol = " << format_double(run.picard_tol)
     << "\nmax_iters = " << run.max_iters << "\n\n";
  os << "[linear]\ngamma = " << to_string(gamma) << "\n";
  if (second) {
    os << "\n";
    emit_driver(os, "driver2", second->driver);
    emit_terminal(os, "terminal2", second->terminal);
  }
  if (!sweep.deltas.empty()) {
    if (!second) os << "\n";
    os << "[sweep]\ndeltas = ";
    for (std::size_t k = 0; k < sweep.deltas.size(); ++k) os << (k ? ", " : "") << format_double(sweep.deltas[k]);
    os << "\nreference = " << to_string(sweep.reference) << "\n";
  }
  return os.str();
}

double Scenario::beta() const {
  if (run.beta) return *run.beta;
  const double L = driver.lipschitz();
  return 8.0 * (1.0 + L * L);
}

}  // namespace tsbsde
