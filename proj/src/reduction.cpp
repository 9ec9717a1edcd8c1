#include "substruct/reduction.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "substruct/error.hpp"

namespace substruct {

StateSpaceModel to_coupling_form(const StateSpaceModel& s,
                                 const std::optional<DofLabels>& interface) {
  s.validate();
  if (s.output_kind != SignalKind::displacement) {
    throw InvalidArgument("to_coupling_form needs a displacement model; '" +
                          s.name + "' has " + std::string(to_string(s.output_kind)) +
                          " outputs");
  }
  DofLabels j;
  if (interface) {
    j = *interface;
  } else {
    for (const auto& l : s.outputs) {
      if (l.kind == DofKind::interface) j.push_back(l);
    }
  }
  if (j.empty()) throw InvalidArgument("no interface DOFs for '" + s.name + "'");
  std::vector<Index> rows;
  for (const auto& l : j) {
    const auto idx = find_label(s.outputs, l);
    if (!idx) throw InvalidArgument("unknown interface DOF '" + l.qualified() + "'");
    rows.push_back(*idx);
  }
  const Index n = s.states();
  const Index nj = static_cast<Index>(j.size());
  const MatrixXd cj = s.c(rows, Eigen::all);
  MatrixXd top(2 * nj, n);
  top << cj * s.a, cj;

  Eigen::ColPivHouseholderQR<MatrixXd> qr(top);
  qr.setThreshold(kCouplingFormRankTol);
  if (qr.rank() != 2 * nj) {
    std::ostringstream os;
    os << "interface rows [C^J A; C^J] have rank " << qr.rank() << ", need "
       << 2 * nj;
    throw InvalidArgument(os.str());
  }
  std::vector<bool> pivot(n, false);
  for (Index i = 0; i < 2 * nj; ++i) pivot[qr.colsPermutation().indices()(i)] = true;

  MatrixXd t = MatrixXd::Zero(n, n);
  t.topRows(2 * nj) = top;
  Index r = 2 * nj;
  for (Index i = 0; i < n; ++i) {
    if (!pivot[i]) t(r++, i) = 1.0;
  }
  const Eigen::PartialPivLU<MatrixXd> lu(t);
  const MatrixXd t_inv = lu.inverse();

  StateSpaceModel out = s;
  out.a = t * s.a * t_inv;
  out.b = t * s.b;
  out.c = s.c * t_inv;
  out.coupling_form = true;
  out.coupling_dofs = j;
  return out;
}

namespace {

struct InterfaceStates {
  Index vel = -1;
  Index disp = -1;
};

InterfaceStates component_states(const StateLayout& layout, const DofLabel& label) {
  for (const auto& seg : layout.segments) {
    if (seg.is_ce) continue;
    const auto k = find_label(seg.coupling_dofs, label);
    if (!k) continue;
    if (!seg.coupling_form) break;
    const Index nj = static_cast<Index>(seg.coupling_dofs.size());
    return {seg.offset + *k, seg.offset + nj + *k};
  }
  throw InvalidArgument("interface DOF '" + label.qualified() +
                        "' is not a coupling-form state of any component");
}

InterfaceStates ce_states(const StateLayout& layout, Index bc_row) {
  for (const auto& seg : layout.segments) {
    if (!seg.is_ce) continue;
    const auto it = std::find(seg.bc_rows.begin(), seg.bc_rows.end(), bc_row);
    if (it == seg.bc_rows.end()) continue;
    const Index nj = static_cast<Index>(seg.bc_rows.size());
    if (!seg.coupling_form || static_cast<Index>(seg.coupling_dofs.size()) != nj) {
      throw InvalidArgument("connecting element '" + seg.name +
                            "' is not in coupling form");
    }
    const Index k = it - seg.bc_rows.begin();
    return {seg.offset + k, seg.offset + nj + k};
  }
  throw InvalidArgument("no connecting element serves B_C row " + std::to_string(bc_row));
}

// Builds L_T from B_T given, for every row, the removed state and the
// coefficients expressing it through kept states.
struct Elimination {
  Index removed;
  std::vector<std::pair<Index, int>> expressed_as;  // (kept state, coefficient)
};

ReductionMap assemble_map(Index n, MatrixXi bt, const std::vector<Elimination>& elims) {
  ReductionMap rm;
  rm.bt = std::move(bt);
  for (const auto& e : elims) rm.removed_state_indices.push_back(e.removed);
  std::sort(rm.removed_state_indices.begin(), rm.removed_state_indices.end());
  if (std::adjacent_find(rm.removed_state_indices.begin(),
                         rm.removed_state_indices.end()) != rm.removed_state_indices.end()) {
    throw InvalidArgument("a state is constrained twice");
  }
  const Index m = n - static_cast<Index>(elims.size());
  std::vector<Index> column(n, -1);
  Index col = 0;
  for (Index i = 0; i < n; ++i) {
    if (!std::binary_search(rm.removed_state_indices.begin(),
                            rm.removed_state_indices.end(), i)) {
      column[i] = col++;
    }
  }
  rm.lt = MatrixXi::Zero(n, m);
  for (Index i = 0; i < n; ++i) {
    if (column[i] >= 0) rm.lt(i, column[i]) = 1;
  }
  for (const auto& e : elims) {
    for (const auto& [state, coeff] : e.expressed_as) {
      if (column[state] < 0) throw InvalidArgument("chained state elimination");
      rm.lt(e.removed, column[state]) += coeff;
    }
  }
  return rm;
}

int checked_phi(const SignedMapping& bc, std::optional<int> phi) {
  const int p = phi.value_or(bc.phi);
  if (p != 1 && p != -1) throw InvalidArgument("phi must be +1 or -1");
  return p;
}

void check_layout(const StateLayout& layout, const SignedMapping& bc) {
  if (static_cast<Index>(layout.pairs.size()) != bc.rows()) {
    throw InvalidArgument("layout pairs do not match B_C rows");
  }
}

}  // namespace

ReductionMap build_bt_relaxed(const StateLayout& layout, const SignedMapping& bc,
                              std::optional<int> phi_override) {
  check_layout(layout, bc);
  const Index n = layout.total();
  const Index nj = bc.rows();
  const int phi = checked_phi(bc, phi_override);
  MatrixXi bt = MatrixXi::Zero(2 * nj, n);
  std::vector<Elimination> elims;
  for (Index r = 0; r < nj; ++r) {
    const auto a = component_states(layout, bc.pairs[r].alpha);
    const auto b = component_states(layout, bc.pairs[r].beta);
    const auto d = ce_states(layout, r);
    // d = phi (y_alpha - y_beta), velocities then displacements
    bt(r, a.vel) = -phi;
    bt(r, b.vel) = phi;
    bt(r, d.vel) = 1;
    bt(nj + r, a.disp) = -phi;
    bt(nj + r, b.disp) = phi;
    bt(nj + r, d.disp) = 1;
    elims.push_back({d.vel, {{a.vel, phi}, {b.vel, -phi}}});
    elims.push_back({d.disp, {{a.disp, phi}, {b.disp, -phi}}});
  }
  return assemble_map(n, std::move(bt), elims);
}

ReductionMap build_bt_rigid(const StateLayout& layout, const SignedMapping& bc,
                            std::optional<int> phi_override) {
  check_layout(layout, bc);
  const Index n = layout.total();
  const Index nj = bc.rows();
  const int phi = checked_phi(bc, phi_override);
  MatrixXi bt = MatrixXi::Zero(2 * nj, n);
  std::vector<Elimination> elims;
  for (Index r = 0; r < nj; ++r) {
    const auto a = component_states(layout, bc.pairs[r].alpha);
    const auto b = component_states(layout, bc.pairs[r].beta);
    bt(r, a.vel) = phi;
    bt(r, b.vel) = -phi;
    bt(nj + r, a.disp) = phi;
    bt(nj + r, b.disp) = -phi;
    elims.push_back({b.vel, {{a.vel, 1}}});
    elims.push_back({b.disp, {{a.disp, 1}}});
  }
  return assemble_map(n, std::move(bt), elims);
}

ReductionMap build_bt(const CouplingResult& r, std::optional<int> phi) {
  const bool has_ce = std::any_of(r.layout.segments.begin(), r.layout.segments.end(),
                                  [](const StateSegment& s) { return s.is_ce; });
  return has_ce ? build_bt_relaxed(r.layout, r.bc, phi)
                : build_bt_rigid(r.layout, r.bc, phi);
}

StateSpaceModel reduce_with_lt(const StateSpaceModel& s, const ReductionMap& rm,
                               LeftInverse mode) {
  s.validate();
  if (rm.lt.rows() != s.states()) {
    std::ostringstream os;
    os << "L_T has " << rm.lt.rows() << " rows, model has " << s.states() << " states";
    throw InvalidArgument(os.str());
  }
  const MatrixXd l = rm.lt.cast<double>();
  StateSpaceModel out = s;
  out.coupling_form = false;
  out.coupling_dofs.clear();
  out.name = s.name + "_reduced";
  if (mode == LeftInverse::selection) {
    std::vector<Index> kept;
    for (Index i = 0; i < s.states(); ++i) {
      if (!std::binary_search(rm.removed_state_indices.begin(),
                              rm.removed_state_indices.end(), i)) {
        kept.push_back(i);
      }
    }
    out.a = s.a(kept, Eigen::all) * l;
    out.b = s.b(kept, Eigen::all);
  } else {
    const MatrixXd ltl = l.transpose() * l;
    const Eigen::LDLT<MatrixXd> ldlt(ltl);
    out.a = ldlt.solve(l.transpose() * s.a * l);
    out.b = ldlt.solve(l.transpose() * s.b);
  }
  out.c = s.c * l;
  return out;
}

StateSpaceModel reduce_manual_relaxed(const StateSpaceModel& s,
                                      const StateLayout& layout,
                                      const SignedMapping& bc,
                                      std::optional<int> phi_override) {
  s.validate();
  check_layout(layout, bc);
  if (layout.total() != s.states()) {
    throw InvalidArgument("layout does not match the model's state count");
  }
  MatrixXd a = s.a;
  MatrixXd c = s.c;
  std::vector<Index> drop;
  const double phi = checked_phi(bc, phi_override);
  for (Index r = 0; r < bc.rows(); ++r) {
    const auto alpha = component_states(layout, bc.pairs[r].alpha);
    const auto beta = component_states(layout, bc.pairs[r].beta);
    const auto d = ce_states(layout, r);
    for (const auto& [dv, av, bv] : {std::tuple{d.disp, alpha.disp, beta.disp},
                                     std::tuple{d.vel, alpha.vel, beta.vel}}) {
      a.col(av) += phi * a.col(dv);
      a.col(bv) += -phi * a.col(dv);
      c.col(av) += phi * c.col(dv);
      c.col(bv) += -phi * c.col(dv);
      drop.push_back(dv);
    }
  }
  std::sort(drop.begin(), drop.end());
  std::vector<Index> kept;
  for (Index i = 0; i < s.states(); ++i) {
    if (!std::binary_search(drop.begin(), drop.end(), i)) kept.push_back(i);
  }
  StateSpaceModel out = s;
  out.a = a(kept, kept);
  out.b = s.b(kept, Eigen::all);
  out.c = c(Eigen::all, kept);
  out.coupling_form = false;
  out.coupling_dofs.clear();
  out.name = s.name + "_reduced";
  return out;
}

StateSpaceModel reduce_coupled(const CouplingResult& r, LeftInverse mode) {
  return reduce_with_lt(r.model, build_bt(r), mode);
}

}  // namespace substruct
