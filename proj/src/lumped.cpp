#include "substruct/lumped.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "substruct/error.hpp"

namespace substruct {

namespace {

bool nonneg_finite(double x) { return std::isfinite(x) && x >= 0.0; }

std::map<std::string, Index> node_index(const LumpedSystem& sys) {
  std::map<std::string, Index> idx;
  for (std::size_t i = 0; i < sys.nodes.size(); ++i) {
    idx[sys.nodes[i].name] = static_cast<Index>(i);
  }
  return idx;
}

}  // namespace

void LumpedSystem::validate() const {
  if (nodes.empty()) throw InvalidArgument("lumped system '" + name + "' has no nodes");
  std::map<std::string, int> seen;
  for (const auto& n : nodes) {
    if (n.name.empty()) throw InvalidArgument("node with empty name");
    if (++seen[n.name] > 1) throw InvalidArgument("duplicate node '" + n.name + "'");
    if (!nonneg_finite(n.mass)) {
      throw InvalidArgument("node '" + n.name + "' has invalid mass");
    }
    if (n.ground && (!nonneg_finite(n.ground->k) || !nonneg_finite(n.ground->c))) {
      throw InvalidArgument("node '" + n.name + "' has invalid ground spring");
    }
  }
  for (const auto& e : edges) {
    if (!seen.count(e.node_a) || !seen.count(e.node_b)) {
      throw InvalidArgument("edge " + e.node_a + "-" + e.node_b +
                            " references an unknown node");
    }
    if (e.node_a == e.node_b) throw InvalidArgument("self-loop on '" + e.node_a + "'");
    if (!nonneg_finite(e.k) || !nonneg_finite(e.c)) {
      throw InvalidArgument("edge " + e.node_a + "-" + e.node_b +
                            " has invalid k or c");
    }
  }
  for (const auto& i : interface_nodes) {
    if (!seen.count(i)) throw InvalidArgument("unknown interface node '" + i + "'");
  }
}

DofLabels LumpedSystem::dof_labels() const {
  DofLabels out;
  for (const auto& n : nodes) {
    const bool iface = std::find(interface_nodes.begin(), interface_nodes.end(),
                                 n.name) != interface_nodes.end();
    out.push_back({n.name, iface ? DofKind::interface : DofKind::internal, name});
  }
  return out;
}

MkvMatrices assemble_mkv(const LumpedSystem& sys) {
  sys.validate();
  const Index n = static_cast<Index>(sys.nodes.size());
  MkvMatrices out{MatrixXd::Zero(n, n), MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
  for (Index i = 0; i < n; ++i) {
    const auto& node = sys.nodes[i];
    out.m(i, i) = node.mass;
    if (node.ground) {
      out.k(i, i) += node.ground->k;
      out.v(i, i) += node.ground->c;
    }
  }
  const auto idx = node_index(sys);
  for (const auto& e : sys.edges) {
    const Index a = idx.at(e.node_a);
    const Index b = idx.at(e.node_b);
    out.k(a, a) += e.k;
    out.k(b, b) += e.k;
    out.k(a, b) -= e.k;
    out.k(b, a) -= e.k;
    out.v(a, a) += e.c;
    out.v(b, b) += e.c;
    out.v(a, b) -= e.c;
    out.v(b, a) -= e.c;
  }
  return out;
}

StateSpaceModel build_model(const LumpedSystem& sys, SignalKind kind) {
  const auto mkv = assemble_mkv(sys);
  auto s = build_from_mkv(mkv.m, mkv.k, mkv.v, kind, sys.dof_labels());
  s.name = sys.name;
  return s;
}

void ResidueSpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("residue mass epsilon must be positive");
  }
}

StateSpaceModel add_residue_mass(const LumpedSystem& sys, const ResidueSpec& r,
                                 SignalKind kind) {
  r.validate();
  LumpedSystem reg = sys;
  for (auto& n : reg.nodes) {
    if (n.mass == 0.0) n.mass = r.epsilon;
  }
  return build_model(reg, kind);
}

StateSpaceModel add_residue_mass(const StateSpaceModel& s, const ResidueSpec& r) {
  r.validate();
  if (s.d.rows() != s.d.cols()) {
    throw InvalidArgument("residue mass needs a square feed-through matrix");
  }
  StateSpaceModel out = s;
  const Index n = s.d.rows();
  if (s.output_kind == SignalKind::acceleration && s.input_kind == SignalKind::force) {
    out.d += MatrixXd::Identity(n, n) / r.epsilon;
  } else if (s.output_kind == SignalKind::force &&
             s.input_kind == SignalKind::acceleration) {
    out.d += MatrixXd::Identity(n, n) * r.epsilon;
  } else {
    throw InvalidArgument("residue mass applies to accelerance or apparent-mass models");
  }
  return out;
}

LumpedSystem free_mass(const std::string& structure, const std::string& node,
                       double mass) {
  LumpedSystem s;
  s.name = structure;
  s.nodes = {{node, mass, std::nullopt}};
  s.interface_nodes = {node};
  return s;
}

BenchmarkSystems testcase_components(const BenchmarkParameters& p) {
  BenchmarkSystems out;

  auto& a = out.component_a;
  a.name = "component_A";
  a.nodes = {{"a1", p.a1.m, GroundSpring{p.a1.k, p.a1.c}},
             {"a2", p.a2.m, std::nullopt},
             {"a3", p.a3.m, std::nullopt}};
  a.edges = {{"a1", "a2", p.a2.k, p.a2.c}, {"a1", "a3", p.a3.k, p.a3.c}};
  a.interface_nodes = {"a2", "a3"};

  auto& b = out.component_b;
  b.name = "component_B";
  b.nodes = {{"p1", p.p1.m, std::nullopt},
             {"p2", p.p2.m, std::nullopt},
             {"p3", p.p3.m, std::nullopt},
             {"p4", p.p4_mass, std::nullopt}};
  b.edges = {{"p1", "p3", p.p1.k, p.p1.c},
             {"p2", "p3", p.p2.k, p.p2.c},
             {"p3", "p4", p.p3.k, p.p3.c}};
  b.interface_nodes = {"p1", "p2"};

  auto fixture_assembly = [&](const std::string& name, const std::string& n1,
                              const std::string& n2, const BenchmarkParameters::Row& mount) {
    LumpedSystem s;
    s.name = name;
    s.nodes = {{n1, p.fixture_mass, std::nullopt}, {n2, p.fixture_mass, std::nullopt}};
    s.edges = {{n1, n2, mount.k, mount.c}};
    s.interface_nodes = {n1, n2};
    return s;
  };
  out.mount_m1_with_fixtures = fixture_assembly("mount_m1_with_fixtures", "T1", "T2", p.mount1);
  out.mount_m2_with_fixtures = fixture_assembly("mount_m2_with_fixtures", "T3", "T4", p.mount2);

  auto massless_mount = [](const std::string& name, const std::string& n1,
                           const std::string& n2, const BenchmarkParameters::Row& mount) {
    LumpedSystem s;
    s.name = name;
    s.nodes = {{n1, 0.0, std::nullopt}, {n2, 0.0, std::nullopt}};
    s.edges = {{n1, n2, mount.k, mount.c}};
    s.interface_nodes = {n1, n2};
    return s;
  };
  out.mount_m1 = massless_mount("mount_m1", "m1a", "m1b", p.mount1);
  out.mount_m2 = massless_mount("mount_m2", "m2a", "m2b", p.mount2);

  auto& mono = out.assembled_monolith;
  mono.name = "assembled_monolith";
  mono.nodes = a.nodes;
  mono.nodes.insert(mono.nodes.end(), b.nodes.begin(), b.nodes.end());
  mono.edges = a.edges;
  mono.edges.insert(mono.edges.end(), b.edges.begin(), b.edges.end());
  mono.edges.push_back({"a2", "p1", p.mount1.k, p.mount1.c});
  mono.edges.push_back({"a3", "p2", p.mount2.k, p.mount2.c});
  return out;
}

LumpedSystem testcase_system(const std::string& name, const BenchmarkParameters& p) {
  const auto all = testcase_components(p);
  if (name == "component_A") return all.component_a;
  if (name == "component_B") return all.component_b;
  if (name == "mount_m1_with_fixtures") return all.mount_m1_with_fixtures;
  if (name == "mount_m2_with_fixtures") return all.mount_m2_with_fixtures;
  if (name == "mount_m1") return all.mount_m1;
  if (name == "mount_m2") return all.mount_m2;
  if (name == "assembled_monolith") return all.assembled_monolith;
  throw InvalidArgument("unknown test-case system '" + name + "'");
}

}  // namespace substruct
