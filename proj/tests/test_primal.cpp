#include <gtest/gtest.h>

#include "substruct/error.hpp"
#include "support.hpp"

using namespace substruct;
using namespace testsupport;

namespace {

DofLabel lbl(const std::string& s, const std::string& n) { return {n, DofKind::interface, s}; }

StateSpaceModel inverted_accel(const LumpedSystem& sys) {
  return invert(build_model(sys, SignalKind::acceleration));
}

StateSpaceModel inverted_fixture(const std::string& structure, const std::string& node, double m) {
  return inverted_accel(free_mass(structure, node, m));
}

// Fixture T1 - mount - fixture T2, primally assembled from three parts.
struct FixtureChain {
  std::vector<StateSpaceModel> parts;
  LocalizationMatrix lo;
};

FixtureChain fixture_chain(double epsilon, double fixture_mass = 2.0) {
  FixtureChain fc;
  fc.parts = {inverted_fixture("fx", "T1", fixture_mass),
              invert(add_residue_mass(testcase_system("mount_m1"), ResidueSpec{epsilon})),
              inverted_fixture("fx", "T2", fixture_mass)};
  const auto rows = stacked_inputs(fc.parts);
  const auto bc = build_bc(rows, std::vector<DofPair>{{rows[0], rows[1]}, {rows[3], rows[2]}});
  fc.lo = localization_from_bc(bc);
  return fc;
}

// Apparent mass M + (K + j w V) / (-w^2) of the two-mass chain, by hand.
Eigen::MatrixXcd chain_apparent_mass(double m, double k, double c, double w) {
  const cd s = cd(k, w * c) / (-w * w);
  Eigen::MatrixXcd z(2, 2);
  z << m + s, -s, -s, m + s;
  return z;
}

}  // namespace

TEST(Localization, SingleRow) {
  const DofLabels cols{lbl("A", "a1"), lbl("A", "a2"), lbl("B", "p1"), lbl("B", "p4")};
  const auto bc = build_bc(cols, std::vector<DofPair>{{cols[1], cols[2]}});
  const auto lo = localization_from_bc(bc);
  ASSERT_EQ(lo.matrix.rows(), 4);
  ASSERT_EQ(lo.matrix.cols(), 3);
  EXPECT_EQ(lo.matrix.row(1), lo.matrix.row(2));
  EXPECT_EQ(lo.retained_dofs, (DofLabels{cols[0], cols[1], cols[3]}));
  EXPECT_EQ(bc.matrix * lo.matrix, MatrixXi::Zero(1, 3));
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(lo.matrix.row(i).sum(), 1);
}

TEST(Localization, EmptyMappingIsIdentity) {
  const DofLabels cols{lbl("A", "a1"), lbl("A", "a2"), lbl("B", "p1")};
  const auto lo = localization_from_bc(build_bc(cols, {}));
  EXPECT_EQ(lo.matrix, MatrixXi::Identity(3, 3));
  EXPECT_EQ(lo.retained_dofs, cols);
}

TEST(Localization, BenchmarkNullspaceExact) {
  const auto bm = make_benchmark({.lines = 4});
  DofLabels cols = bm.a.outputs;
  cols.insert(cols.end(), bm.b.outputs.begin(), bm.b.outputs.end());
  for (int phi : {1, -1}) {
    const auto bc = build_bc(cols, bm.pairs, phi);
    const auto lo = localization_from_bc(bc);
    EXPECT_EQ(lo.matrix.cols(), 5);
    EXPECT_EQ(bc.matrix * lo.matrix, MatrixXi::Zero(2, 5));
    EXPECT_EQ(lo.retained_dofs[1].name, "a2");
    EXPECT_EQ(lo.retained_dofs[2].name, "a3");
  }
}

TEST(PrimalAssemble, SingleModelIdentity) {
  const auto z = inverted_accel(testcase_system("component_A"));
  const std::vector<StateSpaceModel> parts{z};
  const auto lo = localization_from_bc(build_bc(z.inputs, {}));
  const auto p = primal_assemble(parts, lo);
  EXPECT_EQ(p.a, z.a);
  EXPECT_EQ(p.b, z.b);
  EXPECT_EQ(p.c, z.c);
  EXPECT_EQ(p.d, z.d);
  EXPECT_EQ(p.outputs, z.outputs);
}

TEST(PrimalAssemble, FixtureMountFixtureClosedForm) {
  const auto fc = fixture_chain(1e-7);
  const auto p = primal_assemble(fc.parts, fc.lo);
  EXPECT_EQ(p.states(), 2 + 4 + 2);
  EXPECT_EQ(p.outputs, (DofLabels{lbl("fx", "T1"), lbl("fx", "T2")}));
  const auto grid = linear_grid_hz(0.5, 50.0, 256);
  const auto h = evaluate_frf(p, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    ASSERT_LE(rel_err(h.data[k], chain_apparent_mass(2.0, 1e5, 20.0, grid[k])), 1e-4) << k;
  }
}

TEST(PrimalAssemble, RejectsWrongKindOrOrdering) {
  const auto fc = fixture_chain(1e-7);
  auto parts = fc.parts;
  std::swap(parts[0], parts[2]);
  EXPECT_THROW(primal_assemble(parts, fc.lo), InvalidArgument);
  parts = fc.parts;
  parts[1] = invert(parts[1]);
  EXPECT_THROW(primal_assemble(parts, fc.lo), InvalidArgument);
  EXPECT_THROW(primal_assemble(std::vector<StateSpaceModel>{}, fc.lo), InvalidArgument);
}

TEST(PrimalAssemble, EquivalentToRigidDualCoupling) {
  const auto s = testcase_components();
  const auto a = build_model(s.component_a, SignalKind::acceleration);
  const auto b = build_model(s.component_b, SignalKind::acceleration);
  const std::vector<DofPair> pairs{{a.outputs[1], b.outputs[0]}, {a.outputs[2], b.outputs[1]}};
  const std::vector<StateSpaceModel> comps{a, b};
  const auto dual = couple_rigid(comps, pairs);

  const std::vector<StateSpaceModel> inv{invert(a), invert(b)};
  const auto lo = localization_from_bc(build_bc(stacked_inputs(inv), pairs));
  const auto primal = primal_assemble(inv, lo);
  EXPECT_EQ(primal.states(), a.states() + b.states());

  const auto grid = linear_grid_hz(0.5, 50.0, 1024);
  const auto hp = evaluate_frf(invert(primal), grid);
  const auto hd = evaluate_frf(dual.model, grid);
  // The dual result keeps both copies of each interface DOF.
  const auto hd_sel = oracle::select_frf(hd, hp.outputs, hp.inputs);
  EXPECT_LE(oracle::compare_frf(hd_sel, hp).max_rel_error, 1e-8);
}

TEST(PrimalAssemble, InterfaceOnlyEquivalence) {
  // Two free masses joined rigidly: the interface-only case.
  const auto a = build_model(free_mass("A", "x", 2.0), SignalKind::acceleration);
  const auto b = build_model(free_mass("B", "y", 3.0), SignalKind::acceleration);
  const std::vector<DofPair> pairs{{a.outputs[0], b.outputs[0]}};
  const std::vector<StateSpaceModel> comps{a, b};
  const std::vector<StateSpaceModel> inv{invert(a), invert(b)};
  const auto primal = primal_assemble(inv, localization_from_bc(build_bc(stacked_inputs(inv), pairs)));
  EXPECT_EQ(primal.d, MatrixXd::Constant(1, 1, 5.0));
  const auto grid = linear_grid_hz(1.0, 10.0, 5);
  const auto hp = evaluate_frf(invert(primal), grid);
  const auto hd = oracle::select_frf(evaluate_frf(couple_rigid(comps, pairs).model, grid), hp.outputs, hp.inputs);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR(std::abs(hp.data[k](0, 0) - 0.2), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(hd.data[k](0, 0) - 0.2), 0.0, 1e-14);
  }
}

TEST(PrimalDisassemble, NothingRemovedIsIdentity) {
  const auto z = inverted_accel(testcase_system("mount_m1_with_fixtures"));
  const auto lo = localization_from_bc(build_bc(z.inputs, {}));
  const auto p = primal_disassemble(z, std::vector<StateSpaceModel>{}, lo);
  EXPECT_EQ(p.a, z.a);
  EXPECT_EQ(p.d, z.d);
  EXPECT_EQ(p.c, z.c);
}

TEST(PrimalDisassemble, RemovingFixturesLeavesMount) {
  const auto z = inverted_accel(testcase_system("mount_m1_with_fixtures"));
  const std::vector<StateSpaceModel> fixtures{inverted_fixture("fx1", "T1", 2.0),
                                              inverted_fixture("fx2", "T2", 2.0)};
  std::vector<StateSpaceModel> all{z};
  all.insert(all.end(), fixtures.begin(), fixtures.end());
  const auto rows = stacked_inputs(all);
  const auto lo = localization_from_bc(
      build_bc(rows, std::vector<DofPair>{{rows[0], rows[2]}, {rows[1], rows[3]}}));
  const auto mount = primal_disassemble(z, fixtures, lo);
  EXPECT_EQ(mount.states(), 4 + 2 + 2);
  EXPECT_EQ(mount.outputs, z.outputs);

  const double w10 = kTwoPi * 10.0;
  const auto h = evaluate_frf(mount, std::vector<double>{w10}).data[0];
  const cd expected = mount_offdiag_apparent_mass(1e5, 20.0, w10);
  EXPECT_NEAR(expected.real(), 25.33, 5e-3);
  EXPECT_NEAR(expected.imag(), 0.318, 5e-4);
  EXPECT_LE(std::abs(h(0, 1) - expected) / std::abs(expected), 1e-9);
  EXPECT_LE(std::abs(h(0, 0) + expected) / std::abs(expected), 1e-9);

  // Dynamic stiffness k + j w c on every line.
  const auto grid = linear_grid_hz(0.5, 50.0, 1024);
  const auto hs = evaluate_frf(mount, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const cd kd = -grid[k] * grid[k] * hs.data[k](1, 1);
    const cd ref(1e5, grid[k] * 20.0);
    ASSERT_LE(std::abs(kd - ref) / std::abs(ref), 1e-9) << k;
  }
}

TEST(PrimalDisassemble, TinyResidueNeedsNoInversion) {
  for (double eps : {1e-7, 1e-12, 1e-15}) {
    const auto fc = fixture_chain(eps);
    const auto assembled = primal_assemble(fc.parts, fc.lo);
    // Remove the mount again: only the two fixtures remain.
    std::vector<StateSpaceModel> all{assembled, fc.parts[1]};
    const auto rows = stacked_inputs(all);
    const auto lo = localization_from_bc(
        build_bc(rows, std::vector<DofPair>{{rows[0], rows[2]}, {rows[1], rows[3]}}));
    const std::vector<StateSpaceModel> remove{fc.parts[1]};
    StateSpaceModel rest;
    ASSERT_NO_THROW(rest = primal_disassemble(assembled, remove, lo)) << eps;
    const auto h = evaluate_frf(rest, std::vector<double>{kTwoPi * 10.0}).data[0];
    EXPECT_LE((h - Eigen::MatrixXcd::Identity(2, 2) * 2.0).norm() / 2.0, 1e-9) << eps;
  }
}

TEST(PrimalDisassemble, RoundTrip) {
  const auto s = testcase_components();
  const std::vector<StateSpaceModel> inv{inverted_accel(s.component_a), inverted_accel(s.component_b)};
  const auto rows = stacked_inputs(inv);
  const std::vector<DofPair> pairs{{rows[1], rows[3]}, {rows[2], rows[4]}};
  const auto assembled = primal_assemble(inv, localization_from_bc(build_bc(rows, pairs)));
  // Remove component B again; the removed copy gets its own structure name.
  auto removed = inv[1];
  for (auto* ls : {&removed.inputs, &removed.outputs}) {
    for (auto& l : *ls) l.structure = "B_removed";
  }
  std::vector<StateSpaceModel> all{assembled, removed};
  const auto rows2 = stacked_inputs(all);
  const auto lo2 = localization_from_bc(build_bc(
      rows2, std::vector<DofPair>{{rows2[1], rows2[5]}, {rows2[2], rows2[6]}, {rows2[3], rows2[7]},
                                  {rows2[4], rows2[8]}}));
  const auto rest = primal_disassemble(assembled, std::vector<StateSpaceModel>{removed}, lo2);
  EXPECT_EQ(rest.states(), 6 + 8 + 8);
  const auto grid = linear_grid_hz(0.5, 50.0, 256);
  const auto h = evaluate_frf(rest, grid);
  const auto ref = evaluate_frf(inv[0], grid);
  const auto h_a = oracle::select_frf(h, DofLabels(h.outputs.begin(), h.outputs.begin() + 3),
                                      DofLabels(h.inputs.begin(), h.inputs.begin() + 3));
  EXPECT_LE(oracle::compare_frf(ref, h_a).max_rel_error, 1e-8);
  // B's own DOFs cancel to zero.
  for (const auto& m : h.data) {
    EXPECT_LE(m.bottomRightCorner(2, 2).norm(), 1e-8 * m.topLeftCorner(3, 3).norm());
  }
}

TEST(PrimalFbs, MatchesStateSpaceAssembly) {
  const auto fc = fixture_chain(1e-7);
  const auto grid = linear_grid_hz(0.5, 50.0, 128);
  std::vector<FrfMatrix> parts;
  for (const auto& p : fc.parts) parts.push_back(evaluate_frf(p, grid));
  const auto zf = oracle::primal_fbs(oracle::block_diagonal_frf(parts), fc.lo);
  const auto zs = evaluate_frf(primal_assemble(fc.parts, fc.lo), grid);
  EXPECT_LE(oracle::compare_frf(zf, zs).max_rel_error, 1e-8);
}
