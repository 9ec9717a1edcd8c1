#include "substruct/pipeline.hpp"

#include <cstdio>
#include <numbers>
#include <set>
#include <variant>

#include "substruct/coupling.hpp"
#include "substruct/error.hpp"
#include "substruct/io.hpp"
#include "substruct/primal.hpp"
#include "substruct/reduction.hpp"

namespace substruct::pipeline {

namespace {

using nlohmann::json;

using Artifact = std::variant<LumpedSystem, StateSpaceModel, FrfMatrix, CouplingResult>;

const std::vector<std::string> kSingleInputs = {"in", "reference", "test", "assembly"};
const std::vector<std::string> kListInputs = {"components", "ces", "models", "remove"};

std::string status_name(StepStatus s) {
  switch (s) {
    case StepStatus::pass: return "pass";
    case StepStatus::fail: return "fail";
    case StepStatus::error: return "error";
  }
  return "error";
}

std::vector<std::string> step_inputs(const json& step) {
  std::vector<std::string> out;
  for (const auto& k : kSingleInputs) {
    if (step.contains(k)) out.push_back(step[k].get<std::string>());
  }
  for (const auto& k : kListInputs) {
    if (step.contains(k)) {
      for (const auto& v : step[k]) out.push_back(v.get<std::string>());
    }
  }
  return out;
}

class Runner {
 public:
  explicit Runner(const PipelineConfig& cfg)
      : cfg_(cfg), grid_(linear_grid_hz(cfg.grid.f_min_hz, cfg.grid.f_max_hz, cfg.grid.lines)) {}

  void run(const json& p, StepReport& rep);

 private:
  const PipelineConfig& cfg_;
  std::vector<double> grid_;
  std::map<std::string, Artifact> store_;

  const Artifact& get(const std::string& name) const {
    auto it = store_.find(name);
    if (it == store_.end()) throw InvalidArgument("unknown artifact '" + name + "'");
    return it->second;
  }
  StateSpaceModel model(const std::string& name) const {
    const auto& a = get(name);
    if (auto* s = std::get_if<StateSpaceModel>(&a)) return *s;
    if (auto* r = std::get_if<CouplingResult>(&a)) return r->model;
    throw InvalidArgument("artifact '" + name + "' is not a state-space model");
  }
  const CouplingResult& coupling(const std::string& name) const {
    if (auto* r = std::get_if<CouplingResult>(&get(name))) return *r;
    throw InvalidArgument("artifact '" + name + "' is not a coupling result");
  }
  const LumpedSystem& lumped(const std::string& name) const {
    if (auto* r = std::get_if<LumpedSystem>(&get(name))) return *r;
    throw InvalidArgument("artifact '" + name + "' is not a lumped system");
  }
  const FrfMatrix& frf(const std::string& name) const {
    if (auto* r = std::get_if<FrfMatrix>(&get(name))) return *r;
    throw InvalidArgument("artifact '" + name + "' is not an FRF");
  }
  std::vector<StateSpaceModel> models(const json& names) const {
    std::vector<StateSpaceModel> out;
    for (const auto& n : names) out.push_back(model(n.get<std::string>()));
    return out;
  }
  std::vector<FrfMatrix> frfs(const json& names) const {
    std::vector<FrfMatrix> out;
    for (const auto& n : names) out.push_back(frf(n.get<std::string>()));
    return out;
  }
  void put(const json& p, Artifact a, StepReport& rep) {
    const auto name = p.at("out").get<std::string>();
    store_[name] = std::move(a);
    rep.outputs.push_back(name);
  }
  std::filesystem::path in_path(const std::string& p) const { return cfg_.base_dir / p; }
  std::filesystem::path out_path(const std::string& p) const {
    const auto path = cfg_.output_dir / p;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    return path;
  }
  double tolerance(const json& p) const {
    const auto& t = p.at("tolerance");
    if (t.is_number()) return t.get<double>();
    const auto key = t.get<std::string>();
    auto it = cfg_.tolerances.find(key);
    if (it == cfg_.tolerances.end()) throw InvalidArgument("unknown tolerance '" + key + "'");
    return it->second;
  }
  int phi(const json& p) const { return p.value("phi", cfg_.phi); }
  ResidueSpec residue(const json& p) const {
    ResidueSpec r = cfg_.residue;
    if (p.contains("epsilon")) r.epsilon = p["epsilon"].get<double>();
    return r;
  }
  static std::vector<DofPair> pairs(const json& p, const DofLabels& labels) {
    std::vector<DofPair> out;
    for (const auto& pr : p.at("pairs")) {
      out.push_back({resolve_label(labels, pr.at(0).get<std::string>()),
                     resolve_label(labels, pr.at(1).get<std::string>())});
    }
    return out;
  }
  static DofLabels labels(const json& specs, const DofLabels& from) {
    DofLabels out;
    for (const auto& s : specs) out.push_back(resolve_label(from, s.get<std::string>()));
    return out;
  }
  static DofLabels all_outputs(std::span<const StateSpaceModel> ms) {
    DofLabels out;
    for (const auto& m : ms) out.insert(out.end(), m.outputs.begin(), m.outputs.end());
    return out;
  }
  static DofLabels all_outputs(std::span<const FrfMatrix> hs) {
    DofLabels out;
    for (const auto& h : hs) out.insert(out.end(), h.outputs.begin(), h.outputs.end());
    return out;
  }
};

void Runner::run(const json& p, StepReport& rep) {
  const std::string op = p.at("op").get<std::string>();

  if (op == "testcase") {
    BenchmarkParameters bp;
    if (p.contains("fixture_mass")) bp.fixture_mass = p["fixture_mass"].get<double>();
    put(p, testcase_system(p.at("system").get<std::string>(), bp), rep);
  } else if (op == "load") {
    auto m = io::load_model(in_path(p.at("path").get<std::string>()));
    std::visit([&](auto&& v) { put(p, v, rep); }, m);
  } else if (op == "build_model") {
    const auto& sys = lumped(p.at("in").get<std::string>());
    const auto kind = signal_kind_from_string(p.value("kind", "displacement"));
    put(p, p.value("residue", false) ? add_residue_mass(sys, residue(p), kind)
                                     : build_model(sys, kind),
        rep);
  } else if (op == "to_coupling_form") {
    const auto s = model(p.at("in").get<std::string>());
    std::optional<DofLabels> j;
    if (p.contains("interface")) j = labels(p["interface"], s.outputs);
    put(p, to_coupling_form(s, j), rep);
  } else if (op == "differentiate") {
    auto s = model(p.at("in").get<std::string>());
    for (int i = 0, n = p.value("times", 1); i < n; ++i) s = differentiate(s);
    put(p, s, rep);
  } else if (op == "invert") {
    put(p, invert(model(p.at("in").get<std::string>())), rep);
  } else if (op == "negate") {
    put(p, negate(model(p.at("in").get<std::string>())), rep);
  } else if (op == "residue") {
    put(p, add_residue_mass(model(p.at("in").get<std::string>()), residue(p)), rep);
  } else if (op == "invsub") {
    const auto s = model(p.at("in").get<std::string>());
    IsSelection sel{labels(p.at("side1"), s.outputs), labels(p.at("side2"), s.outputs)};
    IsOptions opt;
    opt.coupling_form = p.value("coupling_form", true);
    opt.transposed = p.value("transposed", false);
    opt.residue = p.value("residue", true) ? std::optional<ResidueSpec>(residue(p)) : std::nullopt;
    auto r = inverse_substructure(s, sel, opt);
    if (p.contains("out_diagonal")) {
      store_[p["out_diagonal"].get<std::string>()] = r.diagonal;
      rep.outputs.push_back(p["out_diagonal"].get<std::string>());
    }
    put(p, r.inverted_diagonal, rep);
  } else if (op == "couple") {
    const auto comps = models(p.at("components"));
    const auto bc = build_bc(all_outputs(comps), pairs(p, all_outputs(comps)), phi(p));
    const auto method = p.value("method", "relaxed");
    CouplingResult r;
    if (method == "relaxed") {
      r = couple_relaxed(comps, models(p.at("ces")), bc);
    } else if (method == "rigid") {
      r = couple_rigid(comps, bc);
    } else {
      throw InvalidArgument("couple: unknown method '" + method + "'");
    }
    rep.metrics["states"] = static_cast<double>(r.model.states());
    rep.metrics["interface_rcond"] = r.interface_rcond;
    put(p, r, rep);
  } else if (op == "reduce") {
    const auto& r = coupling(p.at("in").get<std::string>());
    const auto mode = p.value("mode", "lt");
    std::optional<int> phi_override;
    if (p.contains("phi")) phi_override = p["phi"].get<int>();
    StateSpaceModel red;
    if (mode == "lt" || mode == "lt_least_squares") {
      red = reduce_with_lt(r.model, build_bt(r, phi_override),
                           mode == "lt" ? LeftInverse::selection : LeftInverse::least_squares);
    } else if (mode == "manual") {
      red = reduce_manual_relaxed(r.model, r.layout, r.bc, phi_override);
    } else {
      throw InvalidArgument("reduce: unknown mode '" + mode + "'");
    }
    rep.metrics["states_before"] = static_cast<double>(r.model.states());
    rep.metrics["states_after"] = static_cast<double>(red.states());
    put(p, red, rep);
  } else if (op == "primal_assemble") {
    const auto ms = models(p.at("models"));
    const auto in = stacked_inputs(ms);
    const auto lo = localization_from_bc(build_bc(in, pairs(p, in), phi(p)));
    put(p, primal_assemble(ms, lo), rep);
  } else if (op == "primal_disassemble") {
    const auto asm_model = model(p.at("assembly").get<std::string>());
    const auto removed = models(p.at("remove"));
    std::vector<StateSpaceModel> all{asm_model};
    all.insert(all.end(), removed.begin(), removed.end());
    const auto in = stacked_inputs(all);
    const auto lo = localization_from_bc(build_bc(in, pairs(p, in), phi(p)));
    put(p, primal_disassemble(asm_model, removed, lo), rep);
  } else if (op == "decouple_lm") {
    const auto asm_model = model(p.at("assembly").get<std::string>());
    const auto removed = models(p.at("remove"));
    std::vector<StateSpaceModel> all{asm_model};
    all.insert(all.end(), removed.begin(), removed.end());
    put(p, decouple_dual(asm_model, removed, pairs(p, all_outputs(all))), rep);
  } else if (op == "frf") {
    put(p, evaluate_frf(model(p.at("in").get<std::string>()), grid_), rep);
  } else if (op == "oracle_accelerance" || op == "oracle_receptance" ||
             op == "oracle_apparent_mass") {
    const auto& sys = lumped(p.at("in").get<std::string>());
    const auto mkv = assemble_mkv(sys);
    const auto dofs = sys.dof_labels();
    if (op == "oracle_accelerance") {
      put(p, oracle::accelerance(mkv.m, mkv.k, mkv.v, grid_, dofs), rep);
    } else if (op == "oracle_receptance") {
      put(p, oracle::receptance(mkv.m, mkv.k, mkv.v, grid_, dofs), rep);
    } else {
      put(p, oracle::apparent_mass(mkv.m, mkv.k, mkv.v, grid_, dofs), rep);
    }
  } else if (op == "oracle_invert") {
    put(p, oracle::invert_frf(frf(p.at("in").get<std::string>())), rep);
  } else if (op == "oracle_negate") {
    put(p, oracle::negate_frf(frf(p.at("in").get<std::string>())), rep);
  } else if (op == "oracle_residue") {
    const auto& h = frf(p.at("in").get<std::string>());
    const double eps = residue(p).epsilon;
    if (h.quantity == FrfQuantity::apparent_mass) {
      put(p, oracle::add_diagonal(h, eps), rep);
    } else if (h.quantity == FrfQuantity::accelerance) {
      put(p, oracle::add_diagonal(h, 1.0 / eps), rep);
    } else {
      throw InvalidArgument("oracle_residue: needs apparent mass or accelerance");
    }
  } else if (op == "oracle_is") {
    const auto& h = frf(p.at("in").get<std::string>());
    IsSelection sel{labels(p.at("side1"), h.outputs), labels(p.at("side2"), h.outputs)};
    put(p, oracle::is_on_frf(h, sel, p.value("transposed", false)), rep);
  } else if (op == "oracle_couple") {
    const auto hs = frfs(p.at("components"));
    const auto bc = build_bc(all_outputs(hs), pairs(p, all_outputs(hs)), phi(p));
    const auto h = oracle::block_diagonal_frf(hs);
    const auto method = p.value("method", "relaxed");
    oracle::OracleCoupling c;
    if (method == "relaxed") {
      c = oracle::fbs_couple_relaxed(h, oracle::block_diagonal_frf(frfs(p.at("ces"))), bc);
    } else if (method == "rigid") {
      c = oracle::fbs_couple_rigid(h, bc);
    } else {
      throw InvalidArgument("oracle_couple: unknown method '" + method + "'");
    }
    rep.metrics["singular_lines"] = static_cast<double>(c.singular_lines.size());
    put(p, c.frf, rep);
  } else if (op == "oracle_primal") {
    const auto hs = frfs(p.at("models"));
    DofLabels in;
    for (const auto& h : hs) in.insert(in.end(), h.inputs.begin(), h.inputs.end());
    const auto lo = localization_from_bc(build_bc(in, pairs(p, in), phi(p)));
    put(p, oracle::primal_fbs(oracle::block_diagonal_frf(hs), lo), rep);
  } else if (op == "noise") {
    oracle::NoiseSpec ns = cfg_.noise;
    if (p.contains("sigma")) ns.sigma = p["sigma"].get<double>();
    if (p.contains("seed")) ns.seed = p["seed"].get<std::uint64_t>();
    put(p, oracle::add_noise(frf(p.at("in").get<std::string>()), ns), rep);
  } else if (op == "select") {
    const auto name = p.at("in").get<std::string>();
    if (auto* h = std::get_if<FrfMatrix>(&get(name))) {
      put(p, oracle::select_frf(*h, labels(p.at("outputs"), h->outputs),
                                labels(p.at("inputs"), h->inputs)),
          rep);
    } else {
      const auto s = model(name);
      put(p, select_io(s, labels(p.at("outputs"), s.outputs), labels(p.at("inputs"), s.inputs)),
          rep);
    }
  } else if (op == "compare") {
    const auto& h1 = frf(p.at("reference").get<std::string>());
    const auto& h2 = frf(p.at("test").get<std::string>());
    oracle::CompareOptions opt;
    opt.match_by_name = p.value("match_by_name", false);
    const auto c = oracle::compare_frf(h1, h2, opt);
    const double tol = tolerance(p);
    rep.metrics["max_rel_error"] = c.max_rel_error;
    rep.metrics["tolerance"] = tol;
    rep.metrics["worst_frequency_hz"] = c.worst_frequency / (2.0 * std::numbers::pi);
    rep.details["worst_output"] = c.worst_output.qualified();
    rep.details["worst_input"] = c.worst_input.qualified();
    rep.details["worst_line"] = std::to_string(c.worst_line);
    if (!(c.max_rel_error <= tol)) {
      rep.status = StepStatus::fail;
      char buf[200];
      std::snprintf(buf, sizeof buf, "max relative error %.3e > %.3e at line %zu (%.6g Hz)",
                    c.max_rel_error, tol, c.worst_line, c.worst_frequency / (2.0 * std::numbers::pi));
      rep.message = buf;
    }
  } else if (op == "write_frf") {
    const auto path = out_path(p.at("path").get<std::string>());
    io::write_frf(path, frf(p.at("in").get<std::string>()));
    rep.details["path"] = path.string();
  } else if (op == "save_model") {
    const auto path = out_path(p.at("path").get<std::string>());
    const auto name = p.at("in").get<std::string>();
    if (auto* sys = std::get_if<LumpedSystem>(&get(name))) {
      io::save_model(path, *sys);
    } else {
      io::save_model(path, model(name));
    }
    rep.details["path"] = path.string();
  } else if (op == "state_count") {
    const auto n = model(p.at("in").get<std::string>()).states();
    rep.metrics["states"] = static_cast<double>(n);
    if (p.contains("expect")) {
      const auto expect = p["expect"].get<Index>();
      rep.metrics["expected"] = static_cast<double>(expect);
      if (n != expect) {
        rep.status = StepStatus::fail;
        rep.message = "state count " + std::to_string(n) + " != " + std::to_string(expect);
      }
    }
  } else {
    throw InvalidArgument("unknown op '" + op + "'");
  }
}

const std::set<std::string> kOps = {
    "testcase", "load", "build_model", "to_coupling_form", "differentiate", "invert",
    "negate", "residue", "invsub", "couple", "reduce", "primal_assemble",
    "primal_disassemble", "decouple_lm", "frf", "oracle_accelerance", "oracle_receptance",
    "oracle_apparent_mass", "oracle_invert", "oracle_negate", "oracle_residue", "oracle_is",
    "oracle_couple", "oracle_primal", "noise", "select", "compare", "write_frf",
    "save_model", "state_count"};

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ParseError(e.what(), line);
  }
  PipelineConfig cfg;
  cfg.base_dir = base_dir;
  cfg.output_dir = base_dir;
  try {
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      cfg.grid.f_min_hz = g.value("f_min_hz", cfg.grid.f_min_hz);
      cfg.grid.f_max_hz = g.value("f_max_hz", cfg.grid.f_max_hz);
      cfg.grid.lines = g.value("lines", cfg.grid.lines);
    }
    cfg.phi = j.value("phi", 1);
    cfg.residue.epsilon = j.value("epsilon", cfg.residue.epsilon);
    if (j.contains("noise")) {
      cfg.noise.sigma = j["noise"].value("sigma", 0.0);
      cfg.noise.seed = j["noise"].value("seed", std::uint64_t{0});
    }
    if (j.contains("tolerances")) {
      cfg.tolerances = j["tolerances"].get<std::map<std::string, double>>();
    }
    if (j.contains("output_dir")) cfg.output_dir = base_dir / j["output_dir"].get<std::string>();

    std::set<std::string> produced;
    const json steps = j.value("steps", json::array());
    if (!steps.is_array()) throw ParseError("pipeline config: 'steps' must be an array", 0);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      const std::string where = "steps[" + std::to_string(i) + "]";
      if (!s.is_object() || !s.contains("op")) throw ParseError(where + ": missing 'op'", 0);
      const auto op = s["op"].get<std::string>();
      if (!kOps.count(op)) throw ParseError(where + ": unknown op '" + op + "'", 0);
      for (const auto& in : step_inputs(s)) {
        if (!produced.count(in)) {
          throw ParseError(where + ": artifact '" + in + "' is not produced by an earlier step", 0);
        }
      }
      if (s.contains("out")) produced.insert(s["out"].get<std::string>());
      if (s.contains("out_diagonal")) produced.insert(s["out_diagonal"].get<std::string>());
      cfg.steps.push_back({op, s});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("pipeline config: ") + e.what(), 0);
  }
  if (cfg.phi != 1 && cfg.phi != -1) throw ParseError("pipeline config: phi must be +1 or -1", 0);
  try {
    validate_grid(linear_grid_hz(cfg.grid.f_min_hz, cfg.grid.f_max_hz, cfg.grid.lines));
    cfg.residue.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("pipeline config: ") + e.what(), 0);
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(io::read_text(path), path.parent_path().empty() ? "." : path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

nlohmann::json PipelineReport::to_json() const {
  json out = {{"success", success}, {"steps", json::array()}};
  for (const auto& s : steps) {
    out["steps"].push_back({{"index", s.index},
                            {"op", s.op},
                            {"inputs", s.inputs},
                            {"outputs", s.outputs},
                            {"metrics", s.metrics},
                            {"details", s.details},
                            {"status", status_name(s.status)},
                            {"message", s.message}});
  }
  return out;
}

PipelineReport run_pipeline(const PipelineConfig& cfg) {
  PipelineReport report;
  Runner runner(cfg);
  for (std::size_t i = 0; i < cfg.steps.size(); ++i) {
    StepReport rep;
    rep.index = i;
    rep.op = cfg.steps[i].op;
    rep.inputs = step_inputs(cfg.steps[i].params);
    try {
      runner.run(cfg.steps[i].params, rep);
    } catch (const nlohmann::json::exception& e) {
      rep.status = StepStatus::error;
      rep.message = e.what();
    } catch (const std::exception& e) {
      rep.status = StepStatus::error;
      rep.message = e.what();
    }
    report.steps.push_back(rep);
    if (rep.status != StepStatus::pass) {
      report.success = false;
      break;
    }
  }
  return report;
}

}  // namespace substruct::pipeline
