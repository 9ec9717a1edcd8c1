#pragma once

#include <span>

#include "substruct/coupling.hpp"
#include "substruct/state_space.hpp"

namespace substruct {

// Boolean basis of null(B_C): rows follow bc.columns, columns follow
// retained_dofs. Paired DOFs share the alpha-side column.
struct LocalizationMatrix {
  MatrixXi matrix;
  DofLabels rows;
  DofLabels retained_dofs;
};

LocalizationMatrix localization_from_bc(const SignedMapping& bc);

// Primal assembly of inverted models (acceleration in, force out):
//   A = A_D, B = B_D L, C = L^T C_D, D = L^T D_D L.
// The models' stacked input labels must equal lo.rows.
StateSpaceModel primal_assemble(std::span<const StateSpaceModel> inverted,
                                const LocalizationMatrix& lo);

// Negates every model in `remove_inverted` and assembles it with the
// assembly. No matrix is inverted.
StateSpaceModel primal_disassemble(const StateSpaceModel& assembly_inverted,
                                   std::span<const StateSpaceModel> remove_inverted,
                                   const LocalizationMatrix& lo);

// Stacked input labels of a list of models (the row labels L must match).
DofLabels stacked_inputs(std::span<const StateSpaceModel> models);

}  // namespace substruct
