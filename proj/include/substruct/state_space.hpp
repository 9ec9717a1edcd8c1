#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace substruct {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Physical quantity carried by a model's output (or input) channel.
enum class SignalKind { displacement, velocity, acceleration, force };

enum class DofKind { internal, interface };

std::string_view to_string(SignalKind kind);
std::string_view to_string(DofKind kind);
SignalKind signal_kind_from_string(std::string_view text);
DofKind dof_kind_from_string(std::string_view text);

struct DofLabel {
  std::string name;
  DofKind kind = DofKind::internal;
  std::string structure;

  // Identity is (name, structure); kind is metadata.
  friend bool operator==(const DofLabel& a, const DofLabel& b) {
    return a.name == b.name && a.structure == b.structure;
  }

  // "structure:name", or just "name" when structure is empty.
  std::string qualified() const;
};

using DofLabels = std::vector<DofLabel>;

// Finds a label by "name" or "structure:name". Throws InvalidArgument when
// missing or when a bare name is ambiguous.
const DofLabel& resolve_label(const DofLabels& labels, std::string_view spec);
DofLabels resolve_labels(const DofLabels& labels,
                         std::span<const std::string> specs);

// Index of `label` in `labels`, or nullopt.
std::optional<Index> find_label(const DofLabels& labels, const DofLabel& label);

// Continuous-time LTI model  x' = A x + B u,  y = C x + D u.
//
// `output_kind` / `input_kind` describe the physical quantities on the output
// and input channels: an ordinary acceleration model maps forces to
// accelerations, its inverse maps accelerations to forces.
//
// When `coupling_form` is set the state vector is ordered
// [ydot^J, y^J, x^I] with J = `coupling_dofs`, i.e. the first 2*n_J states are
// the velocities and displacements of the interface DOFs.
struct StateSpaceModel {
  MatrixXd a;
  MatrixXd b;
  MatrixXd c;
  MatrixXd d;
  SignalKind output_kind = SignalKind::displacement;
  SignalKind input_kind = SignalKind::force;
  DofLabels outputs;
  DofLabels inputs;
  bool coupling_form = false;
  DofLabels coupling_dofs;
  std::string name;

  Index states() const { return a.rows(); }
  Index n_outputs() const { return c.rows(); }
  Index n_inputs() const { return b.cols(); }

  // Throws InvalidArgument on inconsistent dimensions, non-finite entries,
  // label count mismatch or duplicate labels.
  void validate() const;
};

enum class FrfQuantity {
  receptance,         // displacement / force
  mobility,           // velocity / force
  accelerance,        // acceleration / force
  dynamic_stiffness,  // force / displacement
  impedance,          // force / velocity
  apparent_mass,      // force / acceleration
  other
};

std::string_view to_string(FrfQuantity q);
FrfQuantity quantity_of(SignalKind output, SignalKind input);

// Sampled frequency response, one n_o x n_i complex matrix per line.
struct FrfMatrix {
  std::vector<double> frequencies;  // rad/s, strictly increasing, > 0
  std::vector<MatrixXcd> data;
  FrfQuantity quantity = FrfQuantity::other;
  DofLabels outputs;
  DofLabels inputs;

  std::size_t lines() const { return frequencies.size(); }
  Index n_outputs() const { return static_cast<Index>(outputs.size()); }
  Index n_inputs() const { return static_cast<Index>(inputs.size()); }

  void validate() const;
};

// Validates a frequency grid: non-empty, positive, strictly increasing.
void validate_grid(std::span<const double> grid);

// `lines` points linearly spaced in Hz over [f_min, f_max], returned in rad/s.
std::vector<double> linear_grid_hz(double f_min_hz, double f_max_hz,
                                   std::size_t lines);

struct SimulationTrace {
  std::vector<double> time;  // s, uniform step
  MatrixXd u;                // n_t x n_i
  MatrixXd y;                // n_t x n_o
  MatrixXd x;                // n_t x n
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Primitive transformations. All are pure functions.

// First-order realization of M q'' + V q' + K q = f with state [q'; q].
// Output matrices follow `kind` (displacement, velocity or acceleration).
StateSpaceModel build_from_mkv(const MatrixXd& m, const MatrixXd& k,
                               const MatrixXd& v, SignalKind kind,
                               const DofLabels& dofs = {});

// One time differentiation of the outputs: C' = C A, D' = C B.
// Requires output_kind displacement or velocity.
StateSpaceModel differentiate(const StateSpaceModel& s);

// Reciprocal of 1/cond(D) below which invert() refuses.
inline constexpr double kFeedThroughRcondLimit = 1e-12;

// Swaps inputs and outputs:
//   A' = A - B D^-1 C, B' = B D^-1, C' = -D^-1 C, D' = D^-1.
// Throws SingularMatrixError when D is singular or 1/cond(D) < 1e-12.
StateSpaceModel invert(const StateSpaceModel& s);

// Negative form: C' = -C, D' = -D.
StateSpaceModel negate(const StateSpaceModel& s);

// Block-diagonal concatenation in list order. All models must share output
// and input kinds and labels must be globally unique.
StateSpaceModel block_diagonal(std::span<const StateSpaceModel> models);

// Keeps the listed output rows of C, D and input columns of B, D. All states
// are kept.
StateSpaceModel select_io(const StateSpaceModel& s, const DofLabels& keep_outputs,
                          const DofLabels& keep_inputs);

// Result of a frequency sweep; singular lines hold NaN and are listed.
struct FrfEvaluation {
  FrfMatrix frf;
  std::vector<std::size_t> singular_lines;
};

// H(w) = C (jwI - A)^-1 B + D on each grid line, solved by partial-pivot LU
// after diagonal balancing of A.
// Lines are evaluated in parallel (bounded by SUBSTRUCT_THREADS).
FrfEvaluation evaluate_frf_checked(const StateSpaceModel& s,
                                   std::span<const double> grid);

// As above but throws SingularFrequencyError if any line is singular.
FrfMatrix evaluate_frf(const StateSpaceModel& s, std::span<const double> grid);

// Exact zero-order-hold simulation from x0 = 0; u is n_t x n_i sampled at dt.
SimulationTrace simulate_time_response(const StateSpaceModel& s,
                                       const MatrixXd& u, double dt);

// Largest |eigenvalue| of A, in rad/s.
double max_natural_frequency(const StateSpaceModel& s);

}  // namespace substruct
