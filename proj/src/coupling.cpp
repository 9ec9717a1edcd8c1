#include "substruct/coupling.hpp"

#include <algorithm>
#include <sstream>

#include "substruct/error.hpp"

namespace substruct {

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

void check_component(const StateSpaceModel& s) {
  s.validate();
  if (s.output_kind != SignalKind::acceleration || s.input_kind != SignalKind::force) {
    throw InvalidArgument("component '" + s.name +
                          "' must map forces to accelerations");
  }
  if (s.outputs != s.inputs) {
    throw InvalidArgument("component '" + s.name +
                          "' must have collocated inputs and outputs");
  }
}

void check_ce(const StateSpaceModel& s) {
  s.validate();
  if (s.output_kind != SignalKind::acceleration || s.input_kind != SignalKind::force) {
    throw InvalidArgument("connecting-element model '" + s.name +
                          "' must be an inverted apparent mass (force in, "
                          "acceleration out)");
  }
  if (s.n_outputs() != s.n_inputs()) {
    throw InvalidArgument("connecting-element model '" + s.name +
                          "' must be square");
  }
}

double rcond_of(const MatrixXd& m) {
  if (m.size() == 0) return 1.0;
  const Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  return sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
}

// Shared assembly. ce_models may be empty (rigid coupling).
CouplingResult couple_impl(std::span<const StateSpaceModel> components,
                           std::span<const StateSpaceModel> ce_models,
                           const SignedMapping& bc, bool relaxed) {
  if (components.empty()) throw InvalidArgument("no components to couple");
  for (const auto& s : components) check_component(s);
  for (const auto& s : ce_models) check_ce(s);

  const StateSpaceModel diag_s = block_diagonal(components);
  if (bc.matrix.cols() != diag_s.n_outputs() || bc.columns != diag_s.outputs) {
    throw InvalidArgument(
        "B_C columns do not match the concatenated component outputs");
  }
  const Index nj = bc.rows();

  Index ce_rows = 0;
  for (const auto& s : ce_models) ce_rows += s.n_outputs();
  if (relaxed && ce_rows != nj) {
    std::ostringstream os;
    os << "connecting elements provide " << ce_rows << " rows, B_C has " << nj;
    throw InvalidArgument(os.str());
  }

  CouplingResult r;
  r.bc = bc;
  r.layout.pairs = bc.pairs;
  r.n_relaxed = relaxed ? nj : 0;
  r.a_s = diag_s.a;
  r.b_s = diag_s.b;
  r.c_s = diag_s.c;
  r.d_s = diag_s.d;

  Index off = 0;
  for (const auto& s : components) {
    r.layout.segments.push_back(
        {s.name, off, s.states(), false, s.coupling_form, s.coupling_dofs, {}});
    off += s.states();
  }

  if (!ce_models.empty()) {
    const StateSpaceModel diag_m = [&] {
      // CE labels may collide (every CE has one side "T2", say); block the
      // matrices directly.
      Index n = 0, no = 0;
      for (const auto& s : ce_models) {
        n += s.states();
        no += s.n_outputs();
      }
      StateSpaceModel m;
      m.a = MatrixXd::Zero(n, n);
      m.b = MatrixXd::Zero(n, no);
      m.c = MatrixXd::Zero(no, n);
      m.d = MatrixXd::Zero(no, no);
      Index x = 0, o = 0;
      for (const auto& s : ce_models) {
        m.a.block(x, x, s.states(), s.states()) = s.a;
        m.b.block(x, o, s.states(), s.n_inputs()) = s.b;
        m.c.block(o, x, s.n_outputs(), s.states()) = s.c;
        m.d.block(o, o, s.n_outputs(), s.n_inputs()) = s.d;
        x += s.states();
        o += s.n_outputs();
      }
      return m;
    }();
    r.a_m = diag_m.a;
    r.b_m = diag_m.b;
    r.c_m = diag_m.c;
    r.d_m = diag_m.d;
    Index row = 0;
    for (const auto& s : ce_models) {
      StateSegment seg{s.name, off, s.states(), true, s.coupling_form,
                       s.coupling_dofs, {}};
      for (Index i = 0; i < s.n_outputs(); ++i) seg.bc_rows.push_back(row++);
      r.layout.segments.push_back(seg);
      off += s.states();
    }
  } else {
    r.a_m = MatrixXd::Zero(0, 0);
    r.b_m = MatrixXd::Zero(0, nj);
    r.c_m = MatrixXd::Zero(nj, 0);
    r.d_m = MatrixXd::Zero(nj, nj);
  }

  const Index ns = r.a_s.rows();
  const Index nm = r.a_m.rows();
  const Index ny = diag_s.n_outputs();
  const Index nu = diag_s.n_inputs();

  StateSpaceModel out;
  out.output_kind = SignalKind::acceleration;
  out.input_kind = SignalKind::force;
  out.outputs = diag_s.outputs;
  out.inputs = diag_s.inputs;
  out.name = relaxed ? "coupled_relaxed" : "coupled_rigid";

  if (nj == 0) {
    r.w = MatrixXd::Zero(0, 0);
    r.interface_rcond = 1.0;
    out.a = MatrixXd::Zero(ns + nm, ns + nm);
    out.a.topLeftCorner(ns, ns) = r.a_s;
    out.a.bottomRightCorner(nm, nm) = r.a_m;
    out.b = MatrixXd::Zero(ns + nm, nu);
    out.b.topRows(ns) = r.b_s;
    out.c = MatrixXd::Zero(ny, ns + nm);
    out.c.leftCols(ns) = r.c_s;
    out.d = r.d_s;
    r.model = out;
    return r;
  }

  // The connecting-element blocks scale like 1/epsilon while the coupled
  // difference dynamics are O(1); A_M - B_M W C_M and friends cancel many
  // digits. The blocks are therefore formed in extended precision and rounded
  // once.
  const LMatrix bcd = bc.as_double().cast<long double>();
  const LMatrix as = r.a_s.cast<long double>(), bs = r.b_s.cast<long double>();
  const LMatrix cs = r.c_s.cast<long double>(), ds = r.d_s.cast<long double>();
  const LMatrix am = r.a_m.cast<long double>(), bm = r.b_m.cast<long double>();
  const LMatrix cm = r.c_m.cast<long double>(), dm = r.d_m.cast<long double>();

  const LMatrix iface = bcd * ds * bcd.transpose() + dm;
  r.interface_rcond = rcond_of(iface.cast<double>());
  if (!(r.interface_rcond >= kFeedThroughRcondLimit)) {
    std::ostringstream os;
    os << "singular interface matrix B_C D_S B_C^T + D_M: 1/cond = "
       << r.interface_rcond << " (" << nj << " interface rows)";
    throw SingularMatrixError(os.str(), r.interface_rcond);
  }
  const LMatrix w = iface.partialPivLu().inverse();
  r.w = w.cast<double>();

  // lambda = W (B_C C_S x_S + B_C D_S u - C_M x_M)
  const LMatrix bs_bct_w = bs * bcd.transpose() * w;
  const LMatrix ds_bct_w = ds * bcd.transpose() * w;

  out.a = MatrixXd::Zero(ns + nm, ns + nm);
  out.a.topLeftCorner(ns, ns) = (as - bs_bct_w * bcd * cs).cast<double>();
  out.b = MatrixXd::Zero(ns + nm, nu);
  out.b.topRows(ns) = (bs - bs_bct_w * bcd * ds).cast<double>();
  out.c = MatrixXd::Zero(ny, ns + nm);
  out.c.leftCols(ns) = (cs - ds_bct_w * bcd * cs).cast<double>();
  out.d = (ds - ds_bct_w * bcd * ds).cast<double>();
  if (nm > 0) {
    out.a.topRightCorner(ns, nm) = (bs_bct_w * cm).cast<double>();
    out.a.bottomLeftCorner(nm, ns) = (bm * w * bcd * cs).cast<double>();
    out.a.bottomRightCorner(nm, nm) = (am - bm * w * cm).cast<double>();
    out.b.bottomRows(nm) = (bm * w * bcd * ds).cast<double>();
    out.c.rightCols(nm) = (ds_bct_w * cm).cast<double>();
  }
  r.model = out;
  return r;
}

}  // namespace

Index StateLayout::total() const {
  Index n = 0;
  for (const auto& s : segments) n += s.size;
  return n;
}

SignedMapping build_bc(const DofLabels& global_outputs,
                       const std::vector<DofPair>& pairs, int phi) {
  if (phi != 1 && phi != -1) throw InvalidArgument("phi must be +1 or -1");
  SignedMapping m;
  m.phi = phi;
  m.pairs = pairs;
  m.columns = global_outputs;
  m.matrix = MatrixXi::Zero(static_cast<Index>(pairs.size()),
                            static_cast<Index>(global_outputs.size()));
  std::vector<Index> used;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto ia = find_label(global_outputs, pairs[r].alpha);
    const auto ib = find_label(global_outputs, pairs[r].beta);
    if (!ia) throw InvalidArgument("unknown interface DOF '" + pairs[r].alpha.qualified() + "'");
    if (!ib) throw InvalidArgument("unknown interface DOF '" + pairs[r].beta.qualified() + "'");
    if (*ia == *ib) {
      throw InvalidArgument("pair joins DOF '" + pairs[r].alpha.qualified() +
                            "' to itself");
    }
    for (Index idx : {*ia, *ib}) {
      if (std::find(used.begin(), used.end(), idx) != used.end()) {
        throw InvalidArgument("DOF '" + global_outputs[idx].qualified() +
                              "' is used by more than one pair");
      }
      used.push_back(idx);
    }
    m.matrix(static_cast<Index>(r), *ia) = phi;
    m.matrix(static_cast<Index>(r), *ib) = -phi;
  }
  return m;
}

CouplingResult couple_relaxed(std::span<const StateSpaceModel> components,
                              std::span<const StateSpaceModel> ce_models,
                              const SignedMapping& bc) {
  if (ce_models.empty() && bc.rows() > 0) {
    throw InvalidArgument("relaxed coupling needs one connecting element per pair");
  }
  return couple_impl(components, ce_models, bc, true);
}

CouplingResult couple_rigid(std::span<const StateSpaceModel> components,
                            const SignedMapping& bc) {
  return couple_impl(components, {}, bc, false);
}

namespace {
DofLabels concat_outputs(std::span<const StateSpaceModel> components) {
  DofLabels out;
  for (const auto& s : components) out.insert(out.end(), s.outputs.begin(), s.outputs.end());
  return out;
}
}  // namespace

CouplingResult couple_relaxed(std::span<const StateSpaceModel> components,
                              std::span<const StateSpaceModel> ce_models,
                              const std::vector<DofPair>& pairs, int phi) {
  return couple_relaxed(components, ce_models,
                        build_bc(concat_outputs(components), pairs, phi));
}

CouplingResult couple_rigid(std::span<const StateSpaceModel> components,
                            const std::vector<DofPair>& pairs, int phi) {
  return couple_rigid(components, build_bc(concat_outputs(components), pairs, phi));
}

CouplingResult decouple_dual(const StateSpaceModel& assembly,
                             std::span<const StateSpaceModel> removed,
                             const std::vector<DofPair>& pairs) {
  std::vector<StateSpaceModel> parts{assembly};
  for (const auto& s : removed) parts.push_back(negate(s));
  return couple_rigid(parts, pairs);
}

MatrixXd displacement_output_matrix(const StateSpaceModel& accel) {
  accel.validate();
  if (accel.output_kind != SignalKind::acceleration) {
    throw InvalidArgument("displacement_output_matrix needs acceleration outputs");
  }
  const Index n = accel.states();
  const Index ni = accel.n_inputs();
  // C_d [A^2, A B, B] = [C, D, 0]
  MatrixXd lhs(n, n + 2 * ni);
  lhs << accel.a * accel.a, accel.a * accel.b, accel.b;
  MatrixXd rhs(accel.n_outputs(), n + 2 * ni);
  rhs << accel.c, accel.d, MatrixXd::Zero(accel.n_outputs(), ni);
  // The equations span many orders of magnitude (A of a regularized element
  // holds k/eps), so equations and unknowns are equilibrated first.
  VectorXd col_scale(lhs.cols());
  for (Index j = 0; j < lhs.cols(); ++j) {
    const double nrm = lhs.col(j).norm();
    col_scale(j) = nrm > 0.0 ? 1.0 / nrm : 1.0;
  }
  const MatrixXd l1 = lhs * col_scale.asDiagonal();
  VectorXd row_scale(n);
  for (Index i = 0; i < n; ++i) {
    const double nrm = l1.row(i).norm();
    row_scale(i) = nrm > 0.0 ? 1.0 / nrm : 1.0;
  }
  const MatrixXd l2 = row_scale.asDiagonal() * l1;
  const MatrixXd r1 = rhs * col_scale.asDiagonal();
  const MatrixXd x2 =
      l2.transpose().completeOrthogonalDecomposition().solve(r1.transpose()).transpose();
  const MatrixXd cd = x2 * row_scale.asDiagonal();

  // Backward error per equation and output row.
  const MatrixXd res = cd * lhs - rhs;
  double resid = 0.0;
  for (Index i = 0; i < rhs.rows(); ++i) {
    const double xn = cd.row(i).norm();
    for (Index j = 0; j < lhs.cols(); ++j) {
      const double ref = xn * lhs.col(j).norm() + std::abs(rhs(i, j));
      if (ref > 0.0) resid = std::max(resid, std::abs(res(i, j)) / ref);
    }
  }
  if (!(resid <= 1e-8)) {
    std::ostringstream os;
    os << "model '" << accel.name
       << "' has no consistent displacement output matrix (residual " << resid
       << ")";
    throw InvalidArgument(os.str());
  }
  return cd;
}

StateSpaceModel coupled_output_variant(const CouplingResult& r,
                                       std::span<const MatrixXd> component_c_disp,
                                       std::span<const MatrixXd> ce_c_disp,
                                       SignalKind variant) {
  if (variant != SignalKind::displacement && variant != SignalKind::velocity) {
    throw InvalidArgument("output variant must be displacement or velocity");
  }
  std::size_t n_comp = 0, n_ce = 0;
  for (const auto& seg : r.layout.segments) (seg.is_ce ? n_ce : n_comp)++;
  if (component_c_disp.size() != n_comp || ce_c_disp.size() != n_ce) {
    throw InvalidArgument("displacement output matrices missing for some models");
  }

  const Index ns = r.a_s.rows();
  const Index nm = r.a_m.rows();
  MatrixXd cs = MatrixXd::Zero(r.c_s.rows(), ns);
  MatrixXd cm = MatrixXd::Zero(r.c_m.rows(), nm);
  Index row_s = 0, row_m = 0, ci = 0, mi = 0;
  for (const auto& seg : r.layout.segments) {
    const MatrixXd& c = seg.is_ce ? ce_c_disp[mi++] : component_c_disp[ci++];
    const Index local = seg.is_ce ? seg.offset - ns : seg.offset;
    MatrixXd& target = seg.is_ce ? cm : cs;
    Index& row = seg.is_ce ? row_m : row_s;
    if (c.cols() != seg.size || row + c.rows() > target.rows()) {
      throw InvalidArgument("displacement output matrix of '" + seg.name +
                            "' has the wrong shape");
    }
    target.block(row, local, c.rows(), c.cols()) = c;
    row += c.rows();
  }
  if (row_s != cs.rows() || (nm > 0 && row_m != cm.rows())) {
    throw InvalidArgument("displacement output matrices do not cover all outputs");
  }

  const LMatrix bcd = r.bc.as_double().cast<long double>();
  const Index nj = bcd.rows();
  const LMatrix as = r.a_s.cast<long double>(), bs = r.b_s.cast<long double>();
  const LMatrix am = r.a_m.cast<long double>(), bm = r.b_m.cast<long double>();
  const LMatrix csd = cs.cast<long double>(), cmd = cm.cast<long double>();
  // Feed-throughs rebuilt from displacement matrices.
  const LMatrix ds = csd * as * bs;
  const LMatrix dm = nm > 0 ? LMatrix(cmd * am * bm) : LMatrix::Zero(nj, nj);
  LMatrix g = LMatrix::Zero(ds.rows(), nj);
  if (nj > 0) {
    const LMatrix w = (bcd * ds * bcd.transpose() + dm).partialPivLu().inverse();
    g = ds * bcd.transpose() * w;
  }

  StateSpaceModel out = r.model;
  out.output_kind = variant;
  out.c = MatrixXd::Zero(r.model.n_outputs(), ns + nm);
  if (variant == SignalKind::displacement) {
    out.c.leftCols(ns) = (csd - g * bcd * csd).cast<double>();
    if (nm > 0) out.c.rightCols(nm) = (g * cmd).cast<double>();
    out.d = MatrixXd::Zero(r.model.n_outputs(), r.model.n_inputs());
  } else {
    out.c.leftCols(ns) = (csd * as - g * bcd * csd * as).cast<double>();
    if (nm > 0) out.c.rightCols(nm) = (g * cmd * am).cast<double>();
    // C_d B vanishes for models obeying Newton's second law; rounding-level
    // residue is treated as the exact zero it represents.
    LMatrix cb = csd * bs;
    const long double cb_scale = csd.norm() * bs.norm();
    if (cb.cwiseAbs().maxCoeff() <= 1e-12L * cb_scale) cb.setZero();
    out.d = (cb - g * bcd * cb).cast<double>();
  }
  return out;
}

}  // namespace substruct
