#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "substruct/state_space.hpp"

namespace substruct {

using MatrixXi = Eigen::MatrixXi;

// An interface pair: DOF on side alpha, DOF on side beta.
struct DofPair {
  DofLabel alpha;
  DofLabel beta;
};

// Signed Boolean mapping B_C: row r has +phi at pairs[r].alpha and -phi at
// pairs[r].beta; columns follow `columns` (the global output ordering).
struct SignedMapping {
  MatrixXi matrix;
  int phi = 1;
  std::vector<DofPair> pairs;
  DofLabels columns;

  Index rows() const { return matrix.rows(); }
  MatrixXd as_double() const { return matrix.cast<double>(); }
};

// Throws InvalidArgument when phi is not +-1, a label is unknown, the two
// sides of a pair coincide, or a DOF appears in more than one pair.
SignedMapping build_bc(const DofLabels& global_outputs,
                       const std::vector<DofPair>& pairs, int phi = 1);

struct StateSegment {
  std::string name;
  Index offset = 0;
  Index size = 0;
  bool is_ce = false;
  bool coupling_form = false;
  DofLabels coupling_dofs;      // component segments in coupling form
  std::vector<Index> bc_rows;   // CE segments: B_C rows served
};

struct StateLayout {
  std::vector<StateSegment> segments;
  std::vector<DofPair> pairs;
  Index total() const;
};

// Coupled model  x = [x_S; x_M]  and the block-diagonal pieces it was built
// from, kept for the displacement / velocity variants.
struct CouplingResult {
  StateSpaceModel model;
  StateLayout layout;
  Index n_relaxed = 0;
  SignedMapping bc;

  MatrixXd a_s, b_s, c_s, d_s;  // components, block-diagonal
  MatrixXd a_m, b_m, c_m, d_m;  // connecting elements, block-diagonal
  MatrixXd w;                   // (B_C D_S B_C^T + D_M)^-1
  double interface_rcond = 0.0;
};

// Dual coupling with compatibility relaxation. `components` are collocated
// acceleration models (force in); `ce_models[i]` is the inverted diagonal
// apparent mass of the connecting element serving the next n_o(i) rows of B_C
// (acceleration out, force in). Throws SingularMatrixError when the interface
// matrix is singular.
CouplingResult couple_relaxed(std::span<const StateSpaceModel> components,
                              std::span<const StateSpaceModel> ce_models,
                              const SignedMapping& bc);

// Rigid specialization: no connecting elements, D_M = 0.
CouplingResult couple_rigid(std::span<const StateSpaceModel> components,
                            const SignedMapping& bc);

// Convenience: builds B_C over the concatenated component outputs.
CouplingResult couple_relaxed(std::span<const StateSpaceModel> components,
                              std::span<const StateSpaceModel> ce_models,
                              const std::vector<DofPair>& pairs, int phi = 1);
CouplingResult couple_rigid(std::span<const StateSpaceModel> components,
                            const std::vector<DofPair>& pairs, int phi = 1);

// Dual decoupling: couples `assembly` rigidly with the negative form of each
// model in `removed`, pairing the listed DOFs.
CouplingResult decouple_dual(const StateSpaceModel& assembly,
                             std::span<const StateSpaceModel> removed,
                             const std::vector<DofPair>& pairs);

// Displacement output matrix consistent with an acceleration model:
// C_d A^2 = C, C_d A B = D, C_d B = 0. Throws InvalidArgument when no such
// matrix exists (entrywise backward error above 1e-8 after equilibration).
MatrixXd displacement_output_matrix(const StateSpaceModel& accel);

// Displacement or velocity outputs of a relaxed (or rigid) coupled model from
// the displacement output matrices of the components and CE models. State and
// input matrices are unchanged.
StateSpaceModel coupled_output_variant(const CouplingResult& r,
                                       std::span<const MatrixXd> component_c_disp,
                                       std::span<const MatrixXd> ce_c_disp,
                                       SignalKind variant);

}  // namespace substruct
