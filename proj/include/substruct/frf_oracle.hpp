#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "substruct/coupling.hpp"
#include "substruct/inverse_substructuring.hpp"
#include "substruct/primal.hpp"
#include "substruct/state_space.hpp"

// Frequency-domain reference implementations. Everything here works on
// per-line dense complex matrices and never touches a state-space
// realization, so that it can serve as an independent check.
namespace substruct::oracle {

using Eigen::MatrixXcd;

// Dynamic stiffness Z = K + j w V - w^2 M solved directly on every line.
FrfMatrix receptance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                     std::span<const double> grid, const DofLabels& dofs);
FrfMatrix accelerance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                      std::span<const double> grid, const DofLabels& dofs);
// Z / (-w^2); valid for singular M (massless elements).
FrfMatrix apparent_mass(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                        std::span<const double> grid, const DofLabels& dofs);

// Line-by-line matrix inverse; swaps labels and the quantity.
FrfMatrix invert_frf(const FrfMatrix& h);
FrfMatrix negate_frf(const FrfMatrix& h);
FrfMatrix scale_frf(const FrfMatrix& h, std::complex<double> factor);
// Adds `value` to every diagonal entry of every line.
FrfMatrix add_diagonal(const FrfMatrix& h, std::complex<double> value);
// H * (j w)^power on every line, changing the quantity accordingly is left to
// the caller.
FrfMatrix times_jw_power(const FrfMatrix& h, int power);
FrfMatrix block_diagonal_frf(std::span<const FrfMatrix> parts);
FrfMatrix select_frf(const FrfMatrix& h, const DofLabels& outputs,
                     const DofLabels& inputs);

struct OracleCoupling {
  FrfMatrix frf;
  std::vector<std::size_t> singular_lines;
};

// H - H B^T (B H B^T)^-1 B H
OracleCoupling fbs_couple_rigid(const FrfMatrix& h, const SignedMapping& bc);

// H - H B^T (B H B^T + R)^-1 B H, R the inverted diagonal apparent mass of
// the connecting elements, block-diagonal over the B_C rows.
OracleCoupling fbs_couple_relaxed(const FrfMatrix& h, const FrfMatrix& r,
                                  const SignedMapping& bc);

// L^T Z L per line.
FrfMatrix primal_fbs(const FrfMatrix& z, const LocalizationMatrix& lo);
// Negates the removed blocks, stacks them after z and assembles.
FrfMatrix primal_fbs_disassemble(const FrfMatrix& z,
                                 std::span<const FrfMatrix> removed,
                                 const LocalizationMatrix& lo);

// Diagonal apparent mass of the connecting element from the off-diagonal
// block of an apparent-mass FRF: -Z_12 (or -Z_21 when transposed).
FrfMatrix is_on_frf(const FrfMatrix& z, const IsSelection& sel,
                    bool transposed = false);

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// H + gamma + j theta with gamma, theta ~ N(0, sigma), drawn from a
// mt19937_64 stream in the order outputs, inputs, frequencies (gamma first).
FrfMatrix add_noise(const FrfMatrix& h, const NoiseSpec& ns);

struct FrfComparison {
  double max_rel_error = 0.0;
  std::vector<double> per_frequency;
  std::size_t worst_line = 0;
  double worst_frequency = 0.0;  // rad/s
  DofLabel worst_output;
  DofLabel worst_input;
};

struct CompareOptions {
  // Match labels by name only (structure ignored).
  bool match_by_name = false;
  // Relative floor on the reference norm, times max_k ||H1(k)||.
  double floor = 1e-12;
};

// Per-line ||H1 - H2||_F / max(||H1||_F, floor * max ||H1||_F). h2 is
// reordered to h1's labels first.
FrfComparison compare_frf(const FrfMatrix& h1, const FrfMatrix& h2,
                          const CompareOptions& opt = {});

}  // namespace substruct::oracle
