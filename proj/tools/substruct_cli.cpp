// Command-line front end. Every subcommand is a thin wrapper over one library
// operation. Exit codes: 0 success, 1 tolerance failure, 2 error.
#include <cstdio>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "substruct/coupling.hpp"
#include "substruct/error.hpp"
#include "substruct/frf_oracle.hpp"
#include "substruct/inverse_substructuring.hpp"
#include "substruct/io.hpp"
#include "substruct/pipeline.hpp"
#include "substruct/primal.hpp"
#include "substruct/reduction.hpp"

using namespace substruct;

namespace {

constexpr int kExitTolerance = 1;
constexpr int kExitError = 2;

std::vector<StateSpaceModel> load_all(const std::vector<std::string>& paths) {
  std::vector<StateSpaceModel> out;
  for (const auto& p : paths) out.push_back(io::load_state_space(p));
  return out;
}

DofLabels outputs_of(const std::vector<StateSpaceModel>& ms) {
  DofLabels out;
  for (const auto& m : ms) out.insert(out.end(), m.outputs.begin(), m.outputs.end());
  return out;
}

// "alpha=beta" label specs resolved against `labels`.
std::vector<DofPair> parse_pairs(const std::vector<std::string>& specs, const DofLabels& labels) {
  std::vector<DofPair> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidArgument("pair '" + s + "' must be alpha=beta");
    out.push_back({resolve_label(labels, s.substr(0, eq)), resolve_label(labels, s.substr(eq + 1))});
  }
  return out;
}

DofLabels parse_labels(const std::vector<std::string>& specs, const DofLabels& labels) {
  DofLabels out;
  for (const auto& s : specs) out.push_back(resolve_label(labels, s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State-space dynamic substructuring"};
  app.require_subcommand(1);
  std::string out;
  std::function<int()> action;

  // build-model
  auto* build = app.add_subcommand("build-model", "Build a state-space model from a lumped system");
  std::string build_in, build_testcase, build_kind = "displacement";
  std::optional<double> build_residue;
  bool build_lumped = false;
  build->add_option("input", build_in, "Lumped-system JSON file");
  build->add_option("--testcase", build_testcase, "Built-in benchmark system instead of a file");
  build->add_option("--kind", build_kind, "displacement | velocity | acceleration");
  build->add_option("--residue", build_residue, "Give massless nodes this mass (kg)");
  build->add_flag("--lumped", build_lumped, "Write the lumped system instead of the model");
  build->add_option("-o,--output", out, "Output JSON")->required();
  build->callback([&] {
    action = [&] {
      if (build_in.empty() == build_testcase.empty()) {
        throw InvalidArgument("give exactly one of an input file or --testcase");
      }
      const auto sys = build_in.empty() ? testcase_system(build_testcase) : io::load_lumped(build_in);
      if (build_lumped) {
        io::save_model(out, sys);
        return 0;
      }
      const auto kind = signal_kind_from_string(build_kind);
      io::save_model(out, build_residue ? add_residue_mass(sys, ResidueSpec{*build_residue}, kind)
                                        : build_model(sys, kind));
      return 0;
    };
  });

  // frf
  auto* frf = app.add_subcommand("frf", "Evaluate a model's FRF on a linear grid");
  std::string frf_in;
  double fmin = 0.5, fmax = 50.0;
  std::size_t lines = 1024;
  frf->add_option("model", frf_in)->required();
  frf->add_option("--fmin", fmin, "Lowest frequency (Hz)");
  frf->add_option("--fmax", fmax, "Highest frequency (Hz)");
  frf->add_option("--lines", lines, "Number of lines");
  frf->add_option("-o,--output", out, "Output CSV")->required();
  frf->callback([&] {
    action = [&] {
      io::write_frf(out, evaluate_frf(io::load_state_space(frf_in), linear_grid_hz(fmin, fmax, lines)));
      return 0;
    };
  });

  // invert / negate / differentiate
  std::string unary_in;
  int times = 1;
  auto unary = [&](const char* name, const char* help, auto fn) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("model", unary_in)->required();
    sc->add_option("-o,--output", out, "Output JSON")->required();
    sc->callback([&, fn] {
      action = [&, fn] {
        io::save_model(out, fn(io::load_state_space(unary_in)));
        return 0;
      };
    });
    return sc;
  };
  unary("invert", "Swap inputs and outputs", [](const StateSpaceModel& s) { return invert(s); });
  unary("negate", "Negative form (C, D negated)", [](const StateSpaceModel& s) { return negate(s); });
  unary("differentiate", "Differentiate the outputs in time", [&](const StateSpaceModel& s) {
    auto r = s;
    for (int i = 0; i < times; ++i) r = differentiate(r);
    return r;
  })->add_option("--times", times, "Number of differentiations");

  // coupling-form
  auto* ocf = app.add_subcommand("coupling-form", "Transform a displacement model to coupling form");
  std::string ocf_in;
  std::vector<std::string> ocf_interface;
  ocf->add_option("model", ocf_in)->required();
  ocf->add_option("--interface", ocf_interface, "Interface DOFs (default: those tagged interface)");
  ocf->add_option("-o,--output", out, "Output JSON")->required();
  ocf->callback([&] {
    action = [&] {
      const auto s = io::load_state_space(ocf_in);
      std::optional<DofLabels> j;
      if (!ocf_interface.empty()) j = parse_labels(ocf_interface, s.outputs);
      io::save_model(out, to_coupling_form(s, j));
      return 0;
    };
  });

  // couple
  auto* couple =app.add_subcommand("couple", "Couple component models");
  std::vector<std::string> components, ces, pair_specs;
  std::string method = "relaxed", reduce = "none";
  int phi = 1;
  couple->add_option("--components", components, "Component models (acceleration, or inverted for primal)")
      ->required();
  couple->add_option("--ces", ces, "Inverted diagonal apparent-mass models, one per pair");
  couple->add_option("--pair", pair_specs, "Interface pair alpha=beta (repeat)");
  couple->add_option("--method", method, "rigid | relaxed | primal")
      ->check(CLI::IsMember({"rigid", "relaxed", "primal"}));
  couple->add_option("--phi", phi, "Sign coefficient of the mapping")->check(CLI::IsMember({1, -1}));
  couple->add_option("--reduce", reduce, "lt | manual | none")
      ->check(CLI::IsMember({"lt", "manual", "none"}));
  couple->add_option("-o,--output", out, "Output JSON")->required();
  couple->callback([&] {
    action = [&] {
      const auto comps = load_all(components);
      if (method == "primal") {
        if (reduce != "none") throw InvalidArgument("--reduce applies to dual coupling only");
        const auto in = stacked_inputs(comps);
        const auto lo = localization_from_bc(build_bc(in, parse_pairs(pair_specs, in), phi));
        io::save_model(out, primal_assemble(comps, lo));
        return 0;
      }
      const auto labels = outputs_of(comps);
      const auto bc = build_bc(labels, parse_pairs(pair_specs, labels), phi);
      const auto r = method == "relaxed" ? couple_relaxed(comps, load_all(ces), bc)
                                         : couple_rigid(comps, bc);
      if (reduce == "lt") {
        io::save_model(out, reduce_coupled(r));
      } else if (reduce == "manual") {
        if (method != "relaxed") throw InvalidArgument("--reduce manual needs --method relaxed");
        io::save_model(out, reduce_manual_relaxed(r.model, r.layout, r.bc));
      } else {
        io::save_model(out, r.model);
      }
      return 0;
    };
  });

  // decouple
  auto* decouple = app.add_subcommand("decouple", "Remove substructures from an assembly");
  std::string assembly;
  std::vector<std::string> removed;
  std::string decouple_method = "primal";
  decouple->add_option("--assembly", assembly, "Assembly model")->required();
  decouple->add_option("--remove", removed, "Models to remove")->required();
  decouple->add_option("--pair", pair_specs, "Interface pair alpha=beta (repeat)");
  decouple->add_option("--method", decouple_method, "primal | lm")
      ->check(CLI::IsMember({"primal", "lm"}));
  decouple->add_option("-o,--output", out, "Output JSON")->required();
  decouple->callback([&] {
    action = [&] {
      const auto asm_model = io::load_state_space(assembly);
      const auto rem = load_all(removed);
      std::vector<StateSpaceModel> all{asm_model};
      all.insert(all.end(), rem.begin(), rem.end());
      if (decouple_method == "primal") {
        const auto in = stacked_inputs(all);
        const auto lo = localization_from_bc(build_bc(in, parse_pairs(pair_specs, in), 1));
        io::save_model(out, primal_disassemble(asm_model, rem, lo));
      } else {
        io::save_model(out, decouple_dual(asm_model, rem, parse_pairs(pair_specs, outputs_of(all))).model);
      }
      return 0;
    };
  });

  // invsub
  auto* invsub = app.add_subcommand("invsub", "Inverse substructuring of a connecting element");
  std::string invsub_in;
  std::vector<std::string> side1, side2;
  std::optional<double> epsilon;
  bool no_residue = false, no_coupling_form = false, diagonal_only = false;
  invsub->add_option("model", invsub_in, "Displacement model of the test assembly")->required();
  invsub->add_option("--side1", side1, "DOFs on side 1")->required();
  invsub->add_option("--side2", side2, "DOFs on side 2")->required();
  invsub->add_option("--epsilon", epsilon, "Residue mass (kg)");
  invsub->add_flag("--no-residue", no_residue, "Skip the residue before inversion");
  invsub->add_flag("--no-coupling-form", no_coupling_form, "Keep the original state basis");
  invsub->add_flag("--diagonal", diagonal_only, "Write the diagonal apparent mass instead");
  invsub->add_option("-o,--output", out, "Output JSON")->required();
  invsub->callback([&] {
    action = [&] {
      const auto s = io::load_state_space(invsub_in);
      IsOptions opt;
      opt.coupling_form = !no_coupling_form;
      if (no_residue) {
        opt.residue.reset();
      } else if (epsilon) {
        opt.residue = ResidueSpec{*epsilon};
      }
      const auto r = inverse_substructure(
          s, {parse_labels(side1, s.outputs), parse_labels(side2, s.outputs)}, opt);
      io::save_model(out, diagonal_only ? r.diagonal : r.inverted_diagonal);
      return 0;
    };
  });

  // noise
  auto* noise = app.add_subcommand("noise", "Add complex Gaussian noise to an FRF");
  std::string noise_in;
  oracle::NoiseSpec ns;
  noise->add_option("frf", noise_in, "FRF CSV")->required();
  noise->add_option("--sigma", ns.sigma, "Standard deviation")->required();
  noise->add_option("--seed", ns.seed, "Seed");
  noise->add_option("-o,--output", out, "Output CSV")->required();
  noise->callback([&] {
    action = [&] {
      io::write_frf(out, oracle::add_noise(io::read_frf(noise_in), ns));
      return 0;
    };
  });

  // compare
  auto* compare = app.add_subcommand("compare", "Max relative deviation of two FRFs");
  std::string ref, test;
  double tol = 1e-8;
  bool by_name = false;
  compare->add_option("reference", ref)->required();
  compare->add_option("test", test)->required();
  compare->add_option("--tol", tol, "Relative tolerance");
  compare->add_flag("--match-by-name", by_name, "Match DOFs by name, ignoring structure");
  compare->callback([&] {
    action = [&] {
      oracle::CompareOptions opt;
      opt.match_by_name = by_name;
      const auto c = oracle::compare_frf(io::read_frf(ref), io::read_frf(test), opt);
      const bool ok = c.max_rel_error <= tol;
      std::printf("%s max_rel_error=%.6e tol=%.3e worst_line=%zu freq_hz=%.6g output=%s input=%s\n",
                  ok ? "PASS" : "FAIL", c.max_rel_error, tol, c.worst_line,
                  c.worst_frequency / (2.0 * std::numbers::pi), c.worst_output.qualified().c_str(),
                  c.worst_input.qualified().c_str());
      return ok ? 0 : kExitTolerance;
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run a JSON pipeline configuration");
  std::string config, report_path;
  pipe->add_option("config", config)->required();
  pipe->add_option("--report", report_path, "Write the JSON report here as well");
  pipe->callback([&] {
    action = [&] {
      const auto rep = pipeline::run_pipeline(pipeline::load_config(config));
      const auto text = rep.to_json().dump(2) + "\n";
      std::cout << text;
      if (!report_path.empty()) io::write_text(report_path, text);
      if (rep.success) return 0;
      return rep.steps.back().status == pipeline::StepStatus::fail ? kExitTolerance : kExitError;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }
  try {
    return action();
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
