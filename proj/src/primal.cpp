#include "substruct/primal.hpp"

#include <vector>

#include "substruct/error.hpp"

namespace substruct {

LocalizationMatrix localization_from_bc(const SignedMapping& bc) {
  const Index n = static_cast<Index>(bc.columns.size());
  // Each beta-side DOF is folded onto its alpha partner.
  std::vector<Index> target(n, -1);
  for (Index r = 0; r < bc.rows(); ++r) {
    Index ia = -1, ib = -1;
    for (Index c = 0; c < n; ++c) {
      if (bc.matrix(r, c) == bc.phi) ia = c;
      if (bc.matrix(r, c) == -bc.phi) ib = c;
    }
    if (ia < 0 || ib < 0) throw InvalidArgument("malformed B_C row");
    target[ib] = ia;
  }
  LocalizationMatrix lo;
  lo.rows = bc.columns;
  std::vector<Index> column_of(n, -1);
  for (Index i = 0; i < n; ++i) {
    if (target[i] < 0) {
      column_of[i] = static_cast<Index>(lo.retained_dofs.size());
      lo.retained_dofs.push_back(bc.columns[i]);
    }
  }
  lo.matrix = MatrixXi::Zero(n, static_cast<Index>(lo.retained_dofs.size()));
  for (Index i = 0; i < n; ++i) {
    const Index src = target[i] < 0 ? i : target[i];
    lo.matrix(i, column_of[src]) = 1;
  }
  return lo;
}

DofLabels stacked_inputs(std::span<const StateSpaceModel> models) {
  DofLabels out;
  for (const auto& m : models) out.insert(out.end(), m.inputs.begin(), m.inputs.end());
  return out;
}

StateSpaceModel primal_assemble(std::span<const StateSpaceModel> inverted,
                                const LocalizationMatrix& lo) {
  if (inverted.empty()) throw InvalidArgument("nothing to assemble");
  for (const auto& m : inverted) {
    m.validate();
    if (m.input_kind != SignalKind::acceleration || m.output_kind != SignalKind::force) {
      throw InvalidArgument("primal assembly needs inverted models (acceleration "
                            "in, force out); '" + m.name + "' is not");
    }
    if (m.inputs != m.outputs) {
      throw InvalidArgument("model '" + m.name + "' is not collocated");
    }
  }
  // Labels may repeat across models (negated copies); stack matrices directly.
  Index n = 0, ny = 0;
  for (const auto& m : inverted) {
    n += m.states();
    ny += m.n_inputs();
  }
  const DofLabels rows = stacked_inputs(inverted);
  if (lo.matrix.rows() != ny || rows != lo.rows) {
    throw InvalidArgument("localization rows do not match the stacked model DOFs");
  }
  MatrixXd a = MatrixXd::Zero(n, n), b = MatrixXd::Zero(n, ny);
  MatrixXd c = MatrixXd::Zero(ny, n), d = MatrixXd::Zero(ny, ny);
  Index x = 0, o = 0;
  for (const auto& m : inverted) {
    a.block(x, x, m.states(), m.states()) = m.a;
    b.block(x, o, m.states(), m.n_inputs()) = m.b;
    c.block(o, x, m.n_outputs(), m.states()) = m.c;
    d.block(o, o, m.n_outputs(), m.n_inputs()) = m.d;
    x += m.states();
    o += m.n_inputs();
  }
  const MatrixXd l = lo.matrix.cast<double>();
  StateSpaceModel out;
  out.a = a;
  out.b = b * l;
  out.c = l.transpose() * c;
  out.d = l.transpose() * d * l;
  out.output_kind = SignalKind::force;
  out.input_kind = SignalKind::acceleration;
  out.outputs = lo.retained_dofs;
  out.inputs = lo.retained_dofs;
  out.name = "primal_assembly";
  return out;
}

StateSpaceModel primal_disassemble(const StateSpaceModel& assembly_inverted,
                                   std::span<const StateSpaceModel> remove_inverted,
                                   const LocalizationMatrix& lo) {
  std::vector<StateSpaceModel> parts{assembly_inverted};
  for (const auto& m : remove_inverted) parts.push_back(negate(m));
  auto out = primal_assemble(parts, lo);
  out.name = "primal_disassembly";
  return out;
}

}  // namespace substruct
