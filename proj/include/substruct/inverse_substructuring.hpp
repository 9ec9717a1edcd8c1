#pragma once

#include <optional>

#include "substruct/lumped.hpp"
#include "substruct/state_space.hpp"

namespace substruct {

// DOFs on either side of a connecting element, matched by position.
struct IsSelection {
  DofLabels side1;
  DofLabels side2;

  // Non-empty, disjoint, equal length.
  void validate() const;
};

// Off-diagonal apparent-mass block Z_12 (outputs side1, inputs side2) of an
// inverted assembly model; all states are kept. `transposed` extracts Z_21.
StateSpaceModel is_extract_offdiagonal(const StateSpaceModel& assembly_inverted,
                                       const IsSelection& sel,
                                       bool transposed = false);

// Diagonal apparent mass of the connecting element: Z_22 = -Z_12.
StateSpaceModel is_diagonal_apparent_mass(const StateSpaceModel& offdiag);

// Inverted diagonal apparent mass (force in, acceleration out).
StateSpaceModel is_inverted_diagonal(const StateSpaceModel& diag);

struct IsOptions {
  // Transform the displacement model to coupling form on side2 before
  // differentiating, so that the resulting CE model starts with the states
  // [B_C ydot, B_C y].
  bool coupling_form = true;
  // Added to the diagonal apparent mass before inversion; needed whenever the
  // off-diagonal feed-through vanishes (massless connecting element).
  std::optional<ResidueSpec> residue = ResidueSpec{};
  bool transposed = false;
};

struct IsResult {
  StateSpaceModel assembly_inverted;
  StateSpaceModel offdiagonal;
  StateSpaceModel diagonal;           // before the residue
  StateSpaceModel inverted_diagonal;  // ready for couple_relaxed
};

// Full chain from a displacement model of the test assembly (for instance
// fixture-mount-fixture): [coupling form] -> differentiate twice -> invert ->
// extract -> negate -> [residue] -> invert.
IsResult inverse_substructure(const StateSpaceModel& assembly_displacement,
                              const IsSelection& sel, const IsOptions& opt = {});

}  // namespace substruct
