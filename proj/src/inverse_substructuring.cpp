#include "substruct/inverse_substructuring.hpp"

#include "substruct/error.hpp"
#include "substruct/reduction.hpp"

namespace substruct {

void IsSelection::validate() const {
  if (side1.empty() || side2.empty()) {
    throw InvalidArgument("inverse substructuring needs DOFs on both sides");
  }
  if (side1.size() != side2.size()) {
    throw InvalidArgument("both sides of the connecting element need the same "
                          "number of DOFs");
  }
  for (const auto& a : side1) {
    if (find_label(side2, a)) {
      throw InvalidArgument("DOF '" + a.qualified() + "' is on both sides");
    }
  }
}

StateSpaceModel is_extract_offdiagonal(const StateSpaceModel& assembly_inverted,
                                       const IsSelection& sel, bool transposed) {
  sel.validate();
  if (assembly_inverted.output_kind != SignalKind::force ||
      assembly_inverted.input_kind != SignalKind::acceleration) {
    throw InvalidArgument("off-diagonal extraction needs an apparent-mass model "
                          "(acceleration in, force out)");
  }
  auto out = transposed ? select_io(assembly_inverted, sel.side2, sel.side1)
                        : select_io(assembly_inverted, sel.side1, sel.side2);
  out.name = assembly_inverted.name + "_offdiag";
  return out;
}

StateSpaceModel is_diagonal_apparent_mass(const StateSpaceModel& offdiag) {
  auto out = negate(offdiag);
  out.name = offdiag.name + "_diag";
  return out;
}

StateSpaceModel is_inverted_diagonal(const StateSpaceModel& diag) {
  auto out = invert(diag);
  out.name = diag.name + "_inv";
  return out;
}

IsResult inverse_substructure(const StateSpaceModel& assembly_displacement,
                              const IsSelection& sel, const IsOptions& opt) {
  sel.validate();
  if (assembly_displacement.output_kind != SignalKind::displacement) {
    throw InvalidArgument("inverse substructuring starts from a displacement model");
  }
  StateSpaceModel s = assembly_displacement;
  if (opt.coupling_form) {
    s = to_coupling_form(s, opt.transposed ? sel.side1 : sel.side2);
  }
  IsResult r;
  r.assembly_inverted = invert(differentiate(differentiate(s)));
  r.offdiagonal = is_extract_offdiagonal(r.assembly_inverted, sel, opt.transposed);
  r.diagonal = is_diagonal_apparent_mass(r.offdiagonal);
  const StateSpaceModel regularized =
      opt.residue ? add_residue_mass(r.diagonal, *opt.residue) : r.diagonal;
  r.inverted_diagonal = is_inverted_diagonal(regularized);
  return r;
}

}  // namespace substruct
