#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "substruct/lumped.hpp"
#include "substruct/state_space.hpp"

namespace substruct::io {

// JSON model files. State-space models:
//   {"type": "state_space", "name", "output_kind", "input_kind",
//    "outputs": [{"name", "kind", "structure"}], "inputs": [...],
//    "coupling_form", "coupling_dofs",
//    "A": {"shape": [r, c], "data": [row-major]}, "B", "C", "D"}
// Lumped systems:
//   {"type": "lumped", "name", "nodes": [{"name", "mass", "ground": {"k", "c"}}],
//    "edges": [{"a", "b", "k", "c"}], "interface_nodes": [...]}
// Numbers are written as shortest round-trip decimals.
using ModelFile = std::variant<StateSpaceModel, LumpedSystem>;

std::string to_json(const StateSpaceModel& s);
std::string to_json(const LumpedSystem& sys);

// Throws ParseError (with line number for syntax errors, field path for
// schema errors) or InvalidArgument (type invariants, e.g. dimension
// mismatch naming both matrices).
ModelFile parse_model(const std::string& text);
ModelFile load_model(const std::filesystem::path& path);
StateSpaceModel load_state_space(const std::filesystem::path& path);
LumpedSystem load_lumped(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const StateSpaceModel& s);
void save_model(const std::filesystem::path& path, const LumpedSystem& sys);

// CSV `freq_hz,output,input,real,imag`, frequency-major then output then
// input, labels written as structure:name, values with 17 significant digits.
void write_frf(const std::filesystem::path& path, const FrfMatrix& h);
std::string frf_to_csv(const FrfMatrix& h);
FrfMatrix read_frf(const std::filesystem::path& path);
FrfMatrix frf_from_csv(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace substruct::io
