#pragma once

// Test-only helpers: closed forms and direct dense solves that share no code
// with the library, plus a builder for the two-component benchmark chain.

#include <complex>
#include <random>
#include <vector>

#include "substruct/coupling.hpp"
#include "substruct/frf_oracle.hpp"
#include "substruct/inverse_substructuring.hpp"
#include "substruct/lumped.hpp"
#include "substruct/reduction.hpp"

namespace testsupport {

using namespace substruct;
using cd = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// (-w^2 M + j w V + K)^-1 by full-pivot LU.
Eigen::MatrixXcd direct_receptance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                                   double w);
Eigen::MatrixXcd direct_accelerance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                                    double w);
Eigen::MatrixXcd direct_accelerance(const LumpedSystem& sys, double w);

// C (jw I - A)^-1 B + D by full-pivot LU, without balancing.
Eigen::MatrixXcd direct_frf(const StateSpaceModel& s, double w);

// Off-diagonal apparent mass of a massless spring-damper: (k + j w c) / w^2.
inline cd mount_offdiag_apparent_mass(double k, double c, double w) {
  return cd(k, w * c) / (w * w);
}

// ||a - b||_F / ||b||_F
double rel_err(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& ref);

// Max over lines of rel_err, matching entries by position.
double max_rel(const FrfMatrix& test, const FrfMatrix& ref);

// Random connected spring-mass-damper chain with at least one grounded node.
LumpedSystem random_lumped(std::mt19937_64& rng, int n_nodes, const std::string& name);

// Random grid inside [f_lo, f_hi] Hz, ascending, rad/s.
std::vector<double> random_grid(std::mt19937_64& rng, std::size_t n, double f_lo, double f_hi);

// Spectra of two similar matrices. Eigenvalues below 1e-4 of the spectral
// radius form the rigid-body cluster: free-free models carry a defective pair
// at zero whose members move by ~sqrt(eps ||A||) under any rounding, while the
// cluster mean is well conditioned. The rest are matched one by one.
struct SpectrumDistance {
  Index cluster_a = 0, cluster_b = 0;
  double cluster_mean = 0.0;    // |mean_a - mean_b| / radius
  double worst_relative = 0.0;  // |d lambda| / |lambda| outside the cluster
};

SpectrumDistance spectrum_distance(const MatrixXd& a, const MatrixXd& b);

// The benchmark chain: components A and B as coupling-form acceleration
// models, connecting elements identified from fixture assemblies.
struct Benchmark {
  BenchmarkSystems sys;
  std::vector<double> grid;
  double epsilon = 0.0;
  StateSpaceModel a;  // acceleration, coupling form
  StateSpaceModel b;
  StateSpaceModel f1;  // fixture assemblies, displacement
  StateSpaceModel f2;
  IsResult is1;
  IsResult is2;
  std::vector<DofPair> pairs;  // (a2, p1), (a3, p2)

  std::vector<StateSpaceModel> components() const { return {a, b}; }
  std::vector<StateSpaceModel> ces() const { return {is1.inverted_diagonal, is2.inverted_diagonal}; }
  CouplingResult couple(int phi = 1) const;

  // Frequency-domain counterpart on identical data.
  FrfMatrix oracle_relaxed(int phi = 1) const;
};

struct BenchmarkOptions {
  double epsilon = ResidueSpec{}.epsilon;
  BenchmarkParameters params{};
  bool coupling_form = true;
  std::size_t lines = 1024;
};

Benchmark make_benchmark(const BenchmarkOptions& opt = {});

}  // namespace testsupport
