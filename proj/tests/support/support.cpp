#include "support.hpp"

#include <algorithm>
#include <limits>

namespace testsupport {

using Eigen::MatrixXcd;

MatrixXcd direct_receptance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v, double w) {
  const MatrixXcd z = (-w * w) * m.cast<cd>() + cd(0.0, w) * v.cast<cd>() + k.cast<cd>();
  return z.fullPivLu().inverse();
}

MatrixXcd direct_accelerance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v, double w) {
  return (-w * w) * direct_receptance(m, k, v, w);
}

MatrixXcd direct_accelerance(const LumpedSystem& sys, double w) {
  const auto mkv = assemble_mkv(sys);
  return direct_accelerance(mkv.m, mkv.k, mkv.v, w);
}

MatrixXcd direct_frf(const StateSpaceModel& s, double w) {
  const Index n = s.states();
  const MatrixXcd z = cd(0.0, w) * MatrixXcd::Identity(n, n) - s.a.cast<cd>();
  return s.c.cast<cd>() * z.fullPivLu().solve(s.b.cast<cd>()) + s.d.cast<cd>();
}

double rel_err(const MatrixXcd& a, const MatrixXcd& ref) { return (a - ref).norm() / ref.norm(); }

double max_rel(const FrfMatrix& test, const FrfMatrix& ref) {
  double worst = 0.0;
  for (std::size_t k = 0; k < ref.lines(); ++k) {
    worst = std::max(worst, rel_err(test.data[k], ref.data[k]));
  }
  return worst;
}

LumpedSystem random_lumped(std::mt19937_64& rng, int n_nodes, const std::string& name) {
  std::uniform_real_distribution<double> mass(0.5, 10.0), stiff(1e3, 1e6), damp(1.0, 100.0);
  std::uniform_int_distribution<int> pick(0, n_nodes - 1);
  LumpedSystem s;
  s.name = name;
  for (int i = 0; i < n_nodes; ++i) {
    LumpedNode n{"n" + std::to_string(i), mass(rng), std::nullopt};
    s.nodes.push_back(n);
  }
  s.nodes[pick(rng)].ground = GroundSpring{stiff(rng), damp(rng)};
  for (int i = 1; i < n_nodes; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    s.edges.push_back({s.nodes[parent(rng)].name, s.nodes[i].name, stiff(rng), damp(rng)});
  }
  s.interface_nodes = {s.nodes.front().name, s.nodes.back().name};
  if (n_nodes == 1) s.interface_nodes.pop_back();
  return s;
}

std::vector<double> random_grid(std::mt19937_64& rng, std::size_t n, double f_lo, double f_hi) {
  std::uniform_real_distribution<double> f(f_lo, f_hi);
  std::vector<double> g(n);
  for (auto& x : g) x = kTwoPi * f(rng);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

CouplingResult Benchmark::couple(int phi) const {
  const auto comps = components();
  const auto ce = ces();
  return couple_relaxed(comps, ce, pairs, phi);
}

FrfMatrix Benchmark::oracle_relaxed(int phi) const {
  std::vector<FrfMatrix> hs;
  for (const auto* sys : {&this->sys.component_a, &this->sys.component_b}) {
    const auto mkv = assemble_mkv(*sys);
    hs.push_back(oracle::accelerance(mkv.m, mkv.k, mkv.v, grid, sys->dof_labels()));
  }
  std::vector<FrfMatrix> rs;
  for (const auto* f : {&this->sys.mount_m1_with_fixtures, &this->sys.mount_m2_with_fixtures}) {
    const auto mkv = assemble_mkv(*f);
    const auto labels = f->dof_labels();
    const auto z = oracle::apparent_mass(mkv.m, mkv.k, mkv.v, grid, labels);
    const auto d = oracle::is_on_frf(z, {{labels[0]}, {labels[1]}});
    rs.push_back(oracle::invert_frf(oracle::add_diagonal(d, epsilon)));
  }
  const auto h = oracle::block_diagonal_frf(hs);
  const auto bc = build_bc(h.outputs, pairs, phi);
  return oracle::fbs_couple_relaxed(h, oracle::block_diagonal_frf(rs), bc).frf;
}

SpectrumDistance spectrum_distance(const MatrixXd& a, const MatrixXd& b) {
  const Eigen::VectorXcd ea = a.eigenvalues(), eb = b.eigenvalues();
  const double radius = ea.cwiseAbs().maxCoeff();
  const double cut = 1e-4 * radius;
  SpectrumDistance out;
  cd sum_a = 0.0, sum_b = 0.0;
  for (Index i = 0; i < eb.size(); ++i) {
    if (std::abs(eb(i)) < cut) {
      ++out.cluster_b;
      sum_b += eb(i);
    }
  }
  for (Index i = 0; i < ea.size(); ++i) {
    if (std::abs(ea(i)) < cut) {
      ++out.cluster_a;
      sum_a += ea(i);
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < eb.size(); ++j) best = std::min(best, std::abs(ea(i) - eb(j)));
    out.worst_relative = std::max(out.worst_relative, best / std::abs(ea(i)));
  }
  if (out.cluster_a > 0 && out.cluster_b > 0) {
    out.cluster_mean = std::abs(sum_a / double(out.cluster_a) - sum_b / double(out.cluster_b)) / radius;
  }
  return out;
}

Benchmark make_benchmark(const BenchmarkOptions& opt) {
  Benchmark bm;
  bm.sys = testcase_components(opt.params);
  bm.grid = linear_grid_hz(0.5, 50.0, opt.lines);
  bm.epsilon = opt.epsilon;
  auto accel = [&](const LumpedSystem& s) {
    auto d = build_model(s, SignalKind::displacement);
    if (opt.coupling_form) d = to_coupling_form(d);
    return differentiate(differentiate(d));
  };
  bm.a = accel(bm.sys.component_a);
  bm.b = accel(bm.sys.component_b);
  bm.f1 = build_model(bm.sys.mount_m1_with_fixtures, SignalKind::displacement);
  bm.f2 = build_model(bm.sys.mount_m2_with_fixtures, SignalKind::displacement);
  IsOptions is_opt;
  is_opt.coupling_form = opt.coupling_form;
  is_opt.residue = ResidueSpec{opt.epsilon};
  bm.is1 = inverse_substructure(bm.f1, {{bm.f1.outputs[0]}, {bm.f1.outputs[1]}}, is_opt);
  bm.is2 = inverse_substructure(bm.f2, {{bm.f2.outputs[0]}, {bm.f2.outputs[1]}}, is_opt);
  bm.pairs = {{bm.a.outputs[1], bm.b.outputs[0]}, {bm.a.outputs[2], bm.b.outputs[1]}};
  return bm;
}

}  // namespace testsupport
