#pragma once

#include <optional>
#include <string>
#include <vector>

#include "substruct/state_space.hpp"

namespace substruct {

// Spring-damper to ground.
struct GroundSpring {
  double k = 0.0;  // N/m
  double c = 0.0;  // N s/m
};

struct LumpedNode {
  std::string name;
  double mass = 0.0;  // kg
  std::optional<GroundSpring> ground;
};

struct LumpedEdge {
  std::string node_a;
  std::string node_b;
  double k = 0.0;  // N/m
  double c = 0.0;  // N s/m
};

// One-dimensional spring-mass-damper graph.
struct LumpedSystem {
  std::string name;
  std::vector<LumpedNode> nodes;
  std::vector<LumpedEdge> edges;
  std::vector<std::string> interface_nodes;

  void validate() const;

  // Node labels in node order; structure = name, kind from interface_nodes.
  DofLabels dof_labels() const;
};

struct MkvMatrices {
  MatrixXd m;
  MatrixXd k;
  MatrixXd v;
};

// M = diag(masses); K and V assembled edge by edge (+k on both diagonals,
// -k off-diagonal, grounded springs on the diagonal only).
MkvMatrices assemble_mkv(const LumpedSystem& sys);

// assemble_mkv followed by build_from_mkv, with the system's DOF labels.
StateSpaceModel build_model(const LumpedSystem& sys, SignalKind kind);

// Small virtual mass used to regularize massless connecting elements.
struct ResidueSpec {
  double epsilon = 1e-7;  // kg
  void validate() const;
};

// Builds `sys` with every massless node given mass epsilon. For such a node
// the acceleration feed-through becomes 1/epsilon.
StateSpaceModel add_residue_mass(const LumpedSystem& sys, const ResidueSpec& r,
                                 SignalKind kind = SignalKind::acceleration);

// Feed-through residue on an existing model.
//  - acceleration outputs (force inputs):  D' = D + (1/epsilon) I
//  - force outputs (acceleration inputs, apparent mass):  D' = D + epsilon I
// Other kinds are rejected; D must be square.
StateSpaceModel add_residue_mass(const StateSpaceModel& s, const ResidueSpec& r);

// Parameters of the two-component, two-mount benchmark.
struct BenchmarkParameters {
  struct Row {
    double m = 0.0, c = 0.0, k = 0.0;
  };
  Row a1{10.0, 30.0, 1.5e5};
  Row a2{3.0, 50.0, 5e5};
  Row a3{3.0, 50.0, 4.5e5};
  Row p1{5.0, 50.0, 1e5};
  Row p2{7.0, 50.0, 1.5e5};
  Row p3{10.0, 10.0, 5e3};
  double p4_mass = 1.0;
  Row mount1{0.0, 20.0, 1e5};
  Row mount2{0.0, 20.0, 2e5};
  double fixture_mass = 2.0;
};

// Benchmark systems. Topology:
//   component A: ground -(a1)- a1 -(a2)- a2,  a1 -(a3)- a3;  interfaces a2, a3
//   component B: p1 -(p1)- p3,  p2 -(p2)- p3,  p3 -(p3)- p4;  free-free,
//                interfaces p1, p2
//   mount m1 joins a2 and p1, mount m2 joins a3 and p2 (massless).
// Fixture assemblies hold the mount between two fixture masses T1-T2 (m1)
// and T3-T4 (m2).
struct BenchmarkSystems {
  LumpedSystem component_a;
  LumpedSystem component_b;
  LumpedSystem mount_m1_with_fixtures;
  LumpedSystem mount_m2_with_fixtures;
  LumpedSystem mount_m1;  // massless, nodes m1a / m1b
  LumpedSystem mount_m2;  // massless, nodes m2a / m2b
  LumpedSystem assembled_monolith;
};

BenchmarkSystems testcase_components(const BenchmarkParameters& p = {});

// Named lookup into testcase_components(): component_A, component_B,
// mount_m1_with_fixtures, mount_m2_with_fixtures, mount_m1, mount_m2,
// assembled_monolith.
LumpedSystem testcase_system(const std::string& name,
                             const BenchmarkParameters& p = {});

// A single free mass (fixture), one interface node.
LumpedSystem free_mass(const std::string& structure, const std::string& node,
                       double mass);

}  // namespace substruct
