#include "substruct/frf_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "substruct/error.hpp"

namespace substruct::oracle {

namespace {

using cd = std::complex<double>;
constexpr double kSingularRcond = 1e-15;

FrfMatrix like(const FrfMatrix& h) {
  FrfMatrix out;
  out.frequencies = h.frequencies;
  out.quantity = h.quantity;
  out.outputs = h.outputs;
  out.inputs = h.inputs;
  out.data.reserve(h.lines());
  return out;
}

MatrixXcd dynamic_stiffness(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                            double w) {
  return k.cast<cd>() + cd(0.0, w) * v.cast<cd>() - (w * w) * m.cast<cd>();
}

void check_mkv(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
               const DofLabels& dofs) {
  const Index n = m.rows();
  if (m.cols() != n || k.rows() != n || k.cols() != n || v.rows() != n ||
      v.cols() != n || static_cast<Index>(dofs.size()) != n) {
    throw InvalidArgument("inconsistent M, K, V or label dimensions");
  }
}

FrfMatrix solve_receptance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                           std::span<const double> grid, const DofLabels& dofs) {
  check_mkv(m, k, v, dofs);
  validate_grid(grid);
  FrfMatrix out;
  out.frequencies.assign(grid.begin(), grid.end());
  out.outputs = dofs;
  out.inputs = dofs;
  out.quantity = FrfQuantity::receptance;
  const Index n = m.rows();
  for (double w : grid) {
    const Eigen::PartialPivLU<MatrixXcd> lu(dynamic_stiffness(m, k, v, w));
    if (!(lu.rcond() > kSingularRcond)) {
      std::ostringstream os;
      os << "singular dynamic stiffness at " << w << " rad/s";
      throw SingularFrequencyError(os.str(), {out.data.size()});
    }
    out.data.push_back(lu.solve(MatrixXcd::Identity(n, n)));
  }
  return out;
}

void check_same_grid(const FrfMatrix& a, const FrfMatrix& b) {
  if (a.frequencies != b.frequencies) throw InvalidArgument("FRF grids differ");
}

std::vector<Index> column_map(const DofLabels& from, const DofLabels& to,
                              bool by_name) {
  std::vector<Index> idx;
  for (const auto& l : to) {
    Index found = -1;
    for (std::size_t i = 0; i < from.size(); ++i) {
      const bool eq = by_name ? from[i].name == l.name : from[i] == l;
      if (eq) {
        if (found >= 0) throw InvalidArgument("ambiguous label '" + l.name + "'");
        found = static_cast<Index>(i);
      }
    }
    if (found < 0) throw InvalidArgument("label '" + l.qualified() + "' not found");
    idx.push_back(found);
  }
  return idx;
}

}  // namespace

FrfMatrix receptance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                     std::span<const double> grid, const DofLabels& dofs) {
  return solve_receptance(m, k, v, grid, dofs);
}

FrfMatrix accelerance(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                      std::span<const double> grid, const DofLabels& dofs) {
  auto h = solve_receptance(m, k, v, grid, dofs);
  for (std::size_t i = 0; i < h.lines(); ++i) {
    h.data[i] *= -(grid[i] * grid[i]);
  }
  h.quantity = FrfQuantity::accelerance;
  return h;
}

FrfMatrix apparent_mass(const MatrixXd& m, const MatrixXd& k, const MatrixXd& v,
                        std::span<const double> grid, const DofLabels& dofs) {
  check_mkv(m, k, v, dofs);
  validate_grid(grid);
  FrfMatrix out;
  out.frequencies.assign(grid.begin(), grid.end());
  out.outputs = dofs;
  out.inputs = dofs;
  out.quantity = FrfQuantity::apparent_mass;
  for (double w : grid) out.data.push_back(dynamic_stiffness(m, k, v, w) / (-(w * w)));
  return out;
}

FrfMatrix invert_frf(const FrfMatrix& h) {
  FrfMatrix out = like(h);
  out.outputs = h.inputs;
  out.inputs = h.outputs;
  switch (h.quantity) {
    case FrfQuantity::receptance: out.quantity = FrfQuantity::dynamic_stiffness; break;
    case FrfQuantity::mobility: out.quantity = FrfQuantity::impedance; break;
    case FrfQuantity::accelerance: out.quantity = FrfQuantity::apparent_mass; break;
    case FrfQuantity::dynamic_stiffness: out.quantity = FrfQuantity::receptance; break;
    case FrfQuantity::impedance: out.quantity = FrfQuantity::mobility; break;
    case FrfQuantity::apparent_mass: out.quantity = FrfQuantity::accelerance; break;
    case FrfQuantity::other: out.quantity = FrfQuantity::other; break;
  }
  for (std::size_t i = 0; i < h.lines(); ++i) {
    if (h.data[i].rows() != h.data[i].cols()) {
      throw InvalidArgument("cannot invert a non-square FRF");
    }
    const Eigen::PartialPivLU<MatrixXcd> lu(h.data[i]);
    if (!(lu.rcond() > kSingularRcond)) {
      std::ostringstream os;
      os << "singular FRF matrix at " << h.frequencies[i] << " rad/s";
      throw SingularFrequencyError(os.str(), {i});
    }
    out.data.push_back(lu.inverse());
  }
  return out;
}

FrfMatrix negate_frf(const FrfMatrix& h) { return scale_frf(h, -1.0); }

FrfMatrix scale_frf(const FrfMatrix& h, std::complex<double> factor) {
  FrfMatrix out = like(h);
  for (const auto& m : h.data) out.data.push_back(m * factor);
  return out;
}

FrfMatrix add_diagonal(const FrfMatrix& h, std::complex<double> value) {
  FrfMatrix out = like(h);
  for (const auto& m : h.data) {
    MatrixXcd x = m;
    x.diagonal().array() += value;
    out.data.push_back(x);
  }
  return out;
}

FrfMatrix times_jw_power(const FrfMatrix& h, int power) {
  FrfMatrix out = like(h);
  for (std::size_t i = 0; i < h.lines(); ++i) {
    out.data.push_back(h.data[i] * std::pow(cd(0.0, h.frequencies[i]), power));
  }
  return out;
}

FrfMatrix block_diagonal_frf(std::span<const FrfMatrix> parts) {
  if (parts.empty()) throw InvalidArgument("no FRFs to stack");
  FrfMatrix out;
  out.frequencies = parts.front().frequencies;
  out.quantity = parts.front().quantity;
  Index no = 0, ni = 0;
  for (const auto& p : parts) {
    check_same_grid(parts.front(), p);
    out.outputs.insert(out.outputs.end(), p.outputs.begin(), p.outputs.end());
    out.inputs.insert(out.inputs.end(), p.inputs.begin(), p.inputs.end());
    no += p.n_outputs();
    ni += p.n_inputs();
  }
  for (std::size_t k = 0; k < out.frequencies.size(); ++k) {
    MatrixXcd m = MatrixXcd::Zero(no, ni);
    Index r = 0, c = 0;
    for (const auto& p : parts) {
      m.block(r, c, p.n_outputs(), p.n_inputs()) = p.data[k];
      r += p.n_outputs();
      c += p.n_inputs();
    }
    out.data.push_back(std::move(m));
  }
  return out;
}

FrfMatrix select_frf(const FrfMatrix& h, const DofLabels& outputs,
                     const DofLabels& inputs) {
  const auto rows = column_map(h.outputs, outputs, false);
  const auto cols = column_map(h.inputs, inputs, false);
  FrfMatrix out = like(h);
  out.outputs = outputs;
  out.inputs = inputs;
  for (const auto& m : h.data) out.data.push_back(m(rows, cols));
  return out;
}

namespace {

OracleCoupling dual_fbs(const FrfMatrix& h, const FrfMatrix* r, const SignedMapping& bc) {
  if (h.outputs != bc.columns || h.inputs != bc.columns) {
    throw InvalidArgument("FRF labels must equal the B_C columns (collocated)");
  }
  const Index nj = bc.rows();
  if (r) {
    check_same_grid(h, *r);
    if (r->n_outputs() != nj || r->n_inputs() != nj) {
      throw InvalidArgument("relaxation FRF must be n_J x n_J");
    }
  }
  OracleCoupling out{like(h), {}};
  const MatrixXcd b = bc.matrix.cast<double>().cast<cd>();
  const Index n = h.n_outputs();
  for (std::size_t k = 0; k < h.lines(); ++k) {
    const MatrixXcd& hk = h.data[k];
    if (nj == 0) {
      out.frf.data.push_back(hk);
      continue;
    }
    MatrixXcd iface = b * hk * b.transpose();
    if (r) iface += r->data[k];
    const Eigen::PartialPivLU<MatrixXcd> lu(iface);
    if (!(lu.rcond() > kSingularRcond)) {
      out.singular_lines.push_back(k);
      out.frf.data.push_back(MatrixXcd::Constant(
          n, n, cd(std::numeric_limits<double>::quiet_NaN(), 0.0)));
      continue;
    }
    out.frf.data.push_back(hk - hk * b.transpose() * lu.solve(b * hk));
  }
  return out;
}

}  // namespace

OracleCoupling fbs_couple_rigid(const FrfMatrix& h, const SignedMapping& bc) {
  return dual_fbs(h, nullptr, bc);
}

OracleCoupling fbs_couple_relaxed(const FrfMatrix& h, const FrfMatrix& r,
                                  const SignedMapping& bc) {
  return dual_fbs(h, &r, bc);
}

FrfMatrix primal_fbs(const FrfMatrix& z, const LocalizationMatrix& lo) {
  if (z.outputs != lo.rows || z.inputs != lo.rows) {
    throw InvalidArgument("FRF labels must equal the localization rows");
  }
  const MatrixXcd l = lo.matrix.cast<double>().cast<cd>();
  FrfMatrix out = like(z);
  out.outputs = lo.retained_dofs;
  out.inputs = lo.retained_dofs;
  for (const auto& m : z.data) out.data.push_back(l.transpose() * m * l);
  return out;
}

FrfMatrix primal_fbs_disassemble(const FrfMatrix& z, std::span<const FrfMatrix> removed,
                                 const LocalizationMatrix& lo) {
  std::vector<FrfMatrix> parts{z};
  for (const auto& r : removed) parts.push_back(negate_frf(r));
  // Labels may repeat between the assembly and the removed parts; the
  // localization rows carry the intended ordering.
  FrfMatrix stacked = block_diagonal_frf(parts);
  return primal_fbs(stacked, lo);
}

FrfMatrix is_on_frf(const FrfMatrix& z, const IsSelection& sel, bool transposed) {
  sel.validate();
  auto off = transposed ? select_frf(z, sel.side2, sel.side1)
                        : select_frf(z, sel.side1, sel.side2);
  return negate_frf(off);
}

FrfMatrix add_noise(const FrfMatrix& h, const NoiseSpec& ns) {
  if (!(ns.sigma >= 0.0) || !std::isfinite(ns.sigma)) {
    throw InvalidArgument("noise sigma must be non-negative");
  }
  FrfMatrix out = h;
  if (ns.sigma == 0.0) return out;
  std::mt19937_64 rng(ns.seed);
  std::normal_distribution<double> dist(0.0, ns.sigma);
  for (Index i = 0; i < h.n_outputs(); ++i) {
    for (Index j = 0; j < h.n_inputs(); ++j) {
      for (std::size_t k = 0; k < h.lines(); ++k) {
        const double gamma = dist(rng);
        const double theta = dist(rng);
        out.data[k](i, j) += cd(gamma, theta);
      }
    }
  }
  return out;
}

FrfComparison compare_frf(const FrfMatrix& h1, const FrfMatrix& h2,
                          const CompareOptions& opt) {
  check_same_grid(h1, h2);
  if (h1.n_outputs() != h2.n_outputs() || h1.n_inputs() != h2.n_inputs()) {
    throw InvalidArgument("FRF label sets differ in size");
  }
  const auto rows = column_map(h2.outputs, h1.outputs, opt.match_by_name);
  const auto cols = column_map(h2.inputs, h1.inputs, opt.match_by_name);

  double ref_max = 0.0;
  for (const auto& m : h1.data) ref_max = std::max(ref_max, m.norm());
  const double floor = opt.floor * ref_max;

  FrfComparison out;
  double worst_entry = -1.0;
  for (std::size_t k = 0; k < h1.lines(); ++k) {
    const MatrixXcd diff = h1.data[k] - h2.data[k](rows, cols);
    const double denom = std::max(h1.data[k].norm(), floor);
    double e = denom > 0.0 ? diff.norm() / denom : diff.norm();
    if (std::isnan(e)) e = std::numeric_limits<double>::infinity();
    out.per_frequency.push_back(e);
    if (e > out.max_rel_error || k == 0) {
      out.max_rel_error = std::max(out.max_rel_error, e);
      out.worst_line = k;
      out.worst_frequency = h1.frequencies[k];
      worst_entry = -1.0;
      for (Index i = 0; i < diff.rows(); ++i) {
        for (Index j = 0; j < diff.cols(); ++j) {
          const double a = std::abs(diff(i, j));
          if (!(a <= worst_entry)) {
            worst_entry = a;
            out.worst_output = h1.outputs[i];
            out.worst_input = h1.inputs[j];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace substruct::oracle
