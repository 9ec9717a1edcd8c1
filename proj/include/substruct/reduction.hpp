#pragma once

#include <optional>
#include <vector>

#include "substruct/coupling.hpp"
#include "substruct/state_space.hpp"

namespace substruct {

// Coupling form: similarity z = T x with T = [C^J A; C^J; R], so that the
// first 2 n_J states are the interface velocities and displacements. `s` must
// have displacement outputs. J defaults to the outputs tagged as interface.
// Throws InvalidArgument (with the rank found) when [C^J A; C^J] is rank
// deficient.
StateSpaceModel to_coupling_form(const StateSpaceModel& s,
                                 const std::optional<DofLabels>& interface = {});

// Relative tolerance of the rank decision in to_coupling_form.
inline constexpr double kCouplingFormRankTol = 1e-10;

// State constraint B_T z = 0 of a coupled model and its nullspace basis L_T.
// lt has entries in {0, +1, -1}; removed_state_indices are the states that
// are expressed through the others (one per row of bt), ascending.
struct ReductionMap {
  MatrixXi bt;
  MatrixXi lt;
  std::vector<Index> removed_state_indices;

  Index rows() const { return bt.rows(); }
};

// Relaxed coupling of coupling-form models: for each B_C row r served by a
// connecting element whose first states are d_v = B_C(r) ydot and
// d_y = B_C(r) y, the rows are  -B_C(r,:) ydot^J + d_v = 0  and the same for
// displacements. The difference states are removed.
ReductionMap build_bt_relaxed(const StateLayout& layout, const SignedMapping& bc,
                              std::optional<int> phi = {});

// Rigid coupling of coupling-form models: B_C(r,:) ydot^J = 0 and
// B_C(r,:) y^J = 0; the beta-side states are removed.
ReductionMap build_bt_rigid(const StateLayout& layout, const SignedMapping& bc,
                            std::optional<int> phi = {});

// Dispatches on whether the layout contains connecting elements.
ReductionMap build_bt(const CouplingResult& r, std::optional<int> phi = {});

enum class LeftInverse {
  selection,     // keep the rows of the retained states
  least_squares  // (L^T L)^-1 L^T
};

// A' = P A L, B' = P B, C' = C L with P the chosen left inverse of L_T.
StateSpaceModel reduce_with_lt(const StateSpaceModel& s, const ReductionMap& rm,
                               LeftInverse mode = LeftInverse::selection);

// Column operations on a relaxed coupled model: for every difference state,
// add its A and C columns (times phi) to the alpha interface state and (times
// -phi) to the beta interface state, then drop its row and column.
StateSpaceModel reduce_manual_relaxed(const StateSpaceModel& s,
                                      const StateLayout& layout,
                                      const SignedMapping& bc,
                                      std::optional<int> phi = {});

// Coupled model and its reduction in one call.
StateSpaceModel reduce_coupled(const CouplingResult& r,
                               LeftInverse mode = LeftInverse::selection);

}  // namespace substruct
