#include "substruct/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "substruct/error.hpp"

namespace substruct::io {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

ojson matrix_json(const MatrixXd& m) {
  ojson data = ojson::array();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

ojson labels_json(const DofLabels& labels) {
  ojson out = ojson::array();
  for (const auto& l : labels) {
    out.push_back({{"name", l.name},
                   {"kind", std::string(to_string(l.kind))},
                   {"structure", l.structure}});
  }
  return out;
}

// Field access with a path for diagnostics.
const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError("missing field '" + path + key + "'", 0);
  }
  return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ParseError("field '" + path + "' has the wrong type", 0);
  }
}

MatrixXd matrix_from(const json& j, const std::string& path) {
  const auto shape = get_as<std::vector<long>>(field(j, "shape", path + "."), path + ".shape");
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) {
    throw ParseError("field '" + path + ".shape' must be [rows, cols]", 0);
  }
  const auto data = get_as<std::vector<double>>(field(j, "data", path + "."), path + ".data");
  if (static_cast<long>(data.size()) != shape[0] * shape[1]) {
    std::ostringstream os;
    os << "field '" << path << ".data' has " << data.size() << " entries, shape says "
       << shape[0] * shape[1];
    throw ParseError(os.str(), 0);
  }
  MatrixXd m(shape[0], shape[1]);
  for (long i = 0; i < shape[0]; ++i) {
    for (long k = 0; k < shape[1]; ++k) m(i, k) = data[i * shape[1] + k];
  }
  return m;
}

template <class F>
auto enum_field(const json& j, const std::string& path, F from_string) {
  const auto text = get_as<std::string>(j, path);
  try {
    return from_string(text);
  } catch (const InvalidArgument& e) {
    throw ParseError("field '" + path + "': " + e.what(), 0);
  }
}

DofLabels labels_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError("field '" + path + "' must be an array", 0);
  DofLabels out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const auto& e = j[i];
    DofLabel l;
    if (e.is_string()) {
      l.name = e.get<std::string>();
    } else {
      l.name = get_as<std::string>(field(e, "name", p + "."), p + ".name");
      if (e.contains("kind")) {
        l.kind = enum_field(e["kind"], p + ".kind", dof_kind_from_string);
      }
      if (e.contains("structure")) {
        l.structure = get_as<std::string>(e["structure"], p + ".structure");
      }
    }
    out.push_back(l);
  }
  return out;
}

std::string dims(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

StateSpaceModel state_space_from(const json& j) {
  StateSpaceModel s;
  s.name = j.value("name", "");
  s.output_kind = enum_field(field(j, "output_kind", ""), "output_kind", signal_kind_from_string);
  s.input_kind = j.contains("input_kind")
                     ? enum_field(j["input_kind"], "input_kind", signal_kind_from_string)
                     : SignalKind::force;
  s.a = matrix_from(field(j, "A", ""), "A");
  s.b = matrix_from(field(j, "B", ""), "B");
  s.c = matrix_from(field(j, "C", ""), "C");
  s.d = matrix_from(field(j, "D", ""), "D");
  s.outputs = labels_from(field(j, "outputs", ""), "outputs");
  s.inputs = labels_from(field(j, "inputs", ""), "inputs");
  s.coupling_form = j.value("coupling_form", false);
  if (j.contains("coupling_dofs")) s.coupling_dofs = labels_from(j["coupling_dofs"], "coupling_dofs");

  // Dimension checks named after the matrices involved.
  auto mismatch = [](const std::string& what, const std::string& m1, const MatrixXd& a,
                     const std::string& m2, const MatrixXd& b) {
    throw InvalidArgument(what + ": " + m1 + " is " + dims(a) + ", " + m2 + " is " + dims(b));
  };
  if (s.a.rows() != s.a.cols()) throw InvalidArgument("A is " + dims(s.a) + ", not square");
  if (s.b.rows() != s.a.rows()) mismatch("row count", "B", s.b, "A", s.a);
  if (s.c.cols() != s.a.cols()) mismatch("column count", "C", s.c, "A", s.a);
  if (s.d.rows() != s.c.rows()) mismatch("row count", "D", s.d, "C", s.c);
  if (s.d.cols() != s.b.cols()) mismatch("column count", "D", s.d, "B", s.b);
  s.validate();
  return s;
}

LumpedSystem lumped_from(const json& j) {
  LumpedSystem sys;
  sys.name = j.value("name", "");
  const auto& nodes = field(j, "nodes", "");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = "nodes[" + std::to_string(i) + "]";
    LumpedNode n;
    n.name = get_as<std::string>(field(nodes[i], "name", p + "."), p + ".name");
    n.mass = get_as<double>(field(nodes[i], "mass", p + "."), p + ".mass");
    if (nodes[i].contains("ground") && !nodes[i]["ground"].is_null()) {
      const auto& g = nodes[i]["ground"];
      n.ground = GroundSpring{get_as<double>(field(g, "k", p + ".ground."), p + ".ground.k"),
                              get_as<double>(field(g, "c", p + ".ground."), p + ".ground.c")};
    }
    sys.nodes.push_back(n);
  }
  if (j.contains("edges")) {
    const auto& edges = j["edges"];
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string p = "edges[" + std::to_string(i) + "].";
      sys.edges.push_back({get_as<std::string>(field(edges[i], "a", p), p + "a"),
                           get_as<std::string>(field(edges[i], "b", p), p + "b"),
                           get_as<double>(field(edges[i], "k", p), p + "k"),
                           get_as<double>(field(edges[i], "c", p), p + "c")});
    }
  }
  if (j.contains("interface_nodes")) {
    sys.interface_nodes =
        get_as<std::vector<std::string>>(j["interface_nodes"], "interface_nodes");
  }
  sys.validate();
  return sys;
}

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

DofLabel parse_label(const std::string& text) {
  const auto pos = text.rfind(':');
  if (pos == std::string::npos) return {text, DofKind::internal, ""};
  return {text.substr(pos + 1), DofKind::internal, text.substr(0, pos)};
}

double parse_double(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + text + "'", line);
  }
}

}  // namespace

std::string to_json(const StateSpaceModel& s) {
  ojson j = {{"type", "state_space"},
            {"name", s.name},
            {"output_kind", std::string(to_string(s.output_kind))},
            {"input_kind", std::string(to_string(s.input_kind))},
            {"outputs", labels_json(s.outputs)},
            {"inputs", labels_json(s.inputs)},
            {"coupling_form", s.coupling_form},
            {"coupling_dofs", labels_json(s.coupling_dofs)},
            {"A", matrix_json(s.a)},
            {"B", matrix_json(s.b)},
            {"C", matrix_json(s.c)},
            {"D", matrix_json(s.d)}};
  return j.dump(1) + "\n";
}

std::string to_json(const LumpedSystem& sys) {
  ojson nodes = ojson::array();
  for (const auto& n : sys.nodes) {
    ojson e = {{"name", n.name}, {"mass", n.mass}};
    if (n.ground) e["ground"] = {{"k", n.ground->k}, {"c", n.ground->c}};
    nodes.push_back(e);
  }
  ojson edges = ojson::array();
  for (const auto& e : sys.edges) {
    edges.push_back({{"a", e.node_a}, {"b", e.node_b}, {"k", e.k}, {"c", e.c}});
  }
  ojson j = {{"type", "lumped"},
            {"name", sys.name},
            {"nodes", nodes},
            {"edges", edges},
            {"interface_nodes", sys.interface_nodes}};
  return j.dump(1) + "\n";
}

ModelFile parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number.
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ParseError(e.what(), line);
  }
  const std::string type = get_as<std::string>(field(j, "type", ""), "type");
  if (type == "state_space") return state_space_from(j);
  if (type == "lumped") return lumped_from(j);
  throw ParseError("unknown model type '" + type + "'", 0);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

StateSpaceModel load_state_space(const std::filesystem::path& path) {
  auto m = load_model(path);
  if (auto* s = std::get_if<StateSpaceModel>(&m)) return *s;
  throw InvalidArgument("'" + path.string() + "' holds a lumped system, not a state-space model");
}

LumpedSystem load_lumped(const std::filesystem::path& path) {
  auto m = load_model(path);
  if (auto* s = std::get_if<LumpedSystem>(&m)) return *s;
  throw InvalidArgument("'" + path.string() + "' holds a state-space model, not a lumped system");
}

void save_model(const std::filesystem::path& path, const StateSpaceModel& s) {
  write_text(path, to_json(s));
}

void save_model(const std::filesystem::path& path, const LumpedSystem& sys) {
  write_text(path, to_json(sys));
}

std::string frf_to_csv(const FrfMatrix& h) {
  h.validate();
  std::string out = "freq_hz,output,input,real,imag\n";
  for (std::size_t k = 0; k < h.lines(); ++k) {
    const std::string f = format17(h.frequencies[k] / (2.0 * std::numbers::pi));
    for (Index i = 0; i < h.n_outputs(); ++i) {
      for (Index j = 0; j < h.n_inputs(); ++j) {
        const auto v = h.data[k](i, j);
        out += f + "," + h.outputs[i].qualified() + "," + h.inputs[j].qualified() + "," +
               format17(v.real()) + "," + format17(v.imag()) + "\n";
      }
    }
  }
  return out;
}

void write_frf(const std::filesystem::path& path, const FrfMatrix& h) {
  write_text(path, frf_to_csv(h));
}

FrfMatrix frf_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty FRF file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "freq_hz,output,input,real,imag") throw ParseError("unexpected FRF header", 1);

  struct Row {
    double f;
    std::string out, in;
    std::complex<double> v;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw ParseError("expected 5 columns", lineno);
    rows.push_back({parse_double(cells[0], lineno), cells[1], cells[2],
                    {parse_double(cells[3], lineno), parse_double(cells[4], lineno)}});
  }
  if (rows.empty()) throw ParseError("FRF file has no data", lineno);

  FrfMatrix h;
  std::map<std::string, Index> out_idx, in_idx;
  std::vector<double> freqs_hz;
  for (const auto& r : rows) {
    if (freqs_hz.empty() || r.f != freqs_hz.back()) freqs_hz.push_back(r.f);
    if (!out_idx.count(r.out)) {
      out_idx[r.out] = static_cast<Index>(h.outputs.size());
      h.outputs.push_back(parse_label(r.out));
    }
    if (!in_idx.count(r.in)) {
      in_idx[r.in] = static_cast<Index>(h.inputs.size());
      h.inputs.push_back(parse_label(r.in));
    }
  }
  const Index no = static_cast<Index>(h.outputs.size());
  const Index ni = static_cast<Index>(h.inputs.size());
  if (rows.size() != freqs_hz.size() * static_cast<std::size_t>(no * ni)) {
    throw ParseError("FRF rows do not form a complete grid", lineno);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  h.data.assign(freqs_hz.size(), MatrixXcd::Constant(no, ni, {nan, nan}));
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r > 0 && rows[r].f != rows[r - 1].f) ++k;
    h.data[k](out_idx[rows[r].out], in_idx[rows[r].in]) = rows[r].v;
  }
  for (double f : freqs_hz) h.frequencies.push_back(2.0 * std::numbers::pi * f);
  h.validate();
  return h;
}

FrfMatrix read_frf(const std::filesystem::path& path) {
  try {
    return frf_from_csv(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace substruct::io
