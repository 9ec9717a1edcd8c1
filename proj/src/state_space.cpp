#include "substruct/state_space.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "substruct/error.hpp"
#include "substruct/parallel.hpp"

namespace substruct {

namespace {

std::string dims(const MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

bool is_symmetric(const MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

void check_unique(const DofLabels& labels, const char* what) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) {
        throw InvalidArgument(std::string("duplicate ") + what + " label '" +
                              labels[i].qualified() + "'");
      }
    }
  }
}

// Diagonal similarity T = diag(powers of two) such that T^-1 A T has
// comparable row and column norms (Parlett-Reinsch balancing). Exact in
// floating point, so the transfer function is unchanged.
VectorXd balancing_scale(MatrixXd a) {
  const Index n = a.rows();
  VectorXd t = VectorXd::Ones(n);
  constexpr double radix = 2.0;
  bool converged = false;
  for (int sweep = 0; !converged && sweep < 100; ++sweep) {
    converged = true;
    for (Index i = 0; i < n; ++i) {
      double c = a.col(i).cwiseAbs().sum() - std::abs(a(i, i));
      double r = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / radix;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c >= g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        t(i) *= f;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
  return t;
}

DofLabels default_labels(Index n) {
  DofLabels out;
  for (Index i = 0; i < n; ++i) {
    out.push_back({"dof" + std::to_string(i + 1), DofKind::internal, ""});
  }
  return out;
}

}  // namespace

std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::displacement: return "displacement";
    case SignalKind::velocity: return "velocity";
    case SignalKind::acceleration: return "acceleration";
    case SignalKind::force: return "force";
  }
  return "?";
}

std::string_view to_string(DofKind kind) {
  return kind == DofKind::interface ? "interface" : "internal";
}

SignalKind signal_kind_from_string(std::string_view text) {
  if (text == "displacement") return SignalKind::displacement;
  if (text == "velocity") return SignalKind::velocity;
  if (text == "acceleration") return SignalKind::acceleration;
  if (text == "force") return SignalKind::force;
  throw InvalidArgument("unknown signal kind '" + std::string(text) + "'");
}

DofKind dof_kind_from_string(std::string_view text) {
  if (text == "interface") return DofKind::interface;
  if (text == "internal") return DofKind::internal;
  throw InvalidArgument("unknown DOF kind '" + std::string(text) + "'");
}

std::string DofLabel::qualified() const {
  return structure.empty() ? name : structure + ":" + name;
}

std::optional<Index> find_label(const DofLabels& labels, const DofLabel& label) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return static_cast<Index>(i);
  }
  return std::nullopt;
}

const DofLabel& resolve_label(const DofLabels& labels, std::string_view spec) {
  const auto colon = spec.rfind(':');
  const DofLabel* hit = nullptr;
  for (const auto& l : labels) {
    const bool match = colon == std::string_view::npos
                           ? l.name == spec
                           : l.qualified() == spec;
    if (!match) continue;
    if (hit != nullptr) {
      throw InvalidArgument("label '" + std::string(spec) +
                            "' is ambiguous; qualify it as structure:name");
    }
    hit = &l;
  }
  if (hit == nullptr) {
    throw InvalidArgument("unknown label '" + std::string(spec) + "'");
  }
  return *hit;
}

DofLabels resolve_labels(const DofLabels& labels,
                         std::span<const std::string> specs) {
  DofLabels out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(resolve_label(labels, s));
  return out;
}

void StateSpaceModel::validate() const {
  if (a.rows() != a.cols()) {
    throw InvalidArgument("A must be square, got " + dims(a));
  }
  if (b.rows() != a.rows()) {
    throw InvalidArgument("rows(B) != rows(A): B is " + dims(b) + ", A is " +
                          dims(a));
  }
  if (c.cols() != a.cols()) {
    throw InvalidArgument("cols(C) != cols(A): C is " + dims(c) + ", A is " +
                          dims(a));
  }
  if (d.rows() != c.rows() || d.cols() != b.cols()) {
    throw InvalidArgument("D must be n_o x n_i = " + std::to_string(c.rows()) +
                          "x" + std::to_string(b.cols()) + ", got " + dims(d));
  }
  for (const MatrixXd* m : {&a, &b, &c, &d}) {
    if (!m->allFinite()) throw InvalidArgument("non-finite matrix entry");
  }
  if (static_cast<Index>(outputs.size()) != c.rows()) {
    throw InvalidArgument("expected " + std::to_string(c.rows()) +
                          " output labels, got " +
                          std::to_string(outputs.size()));
  }
  if (static_cast<Index>(inputs.size()) != b.cols()) {
    throw InvalidArgument("expected " + std::to_string(b.cols()) +
                          " input labels, got " + std::to_string(inputs.size()));
  }
  check_unique(outputs, "output");
  check_unique(inputs, "input");
  if (coupling_form) {
    if (static_cast<Index>(2 * coupling_dofs.size()) > a.rows()) {
      throw InvalidArgument("coupling form needs at least 2*n_J states");
    }
    check_unique(coupling_dofs, "coupling");
  }
}

std::string_view to_string(FrfQuantity q) {
  switch (q) {
    case FrfQuantity::receptance: return "receptance";
    case FrfQuantity::mobility: return "mobility";
    case FrfQuantity::accelerance: return "accelerance";
    case FrfQuantity::dynamic_stiffness: return "dynamic_stiffness";
    case FrfQuantity::impedance: return "impedance";
    case FrfQuantity::apparent_mass: return "apparent_mass";
    case FrfQuantity::other: return "other";
  }
  return "other";
}

FrfQuantity quantity_of(SignalKind output, SignalKind input) {
  if (input == SignalKind::force) {
    switch (output) {
      case SignalKind::displacement: return FrfQuantity::receptance;
      case SignalKind::velocity: return FrfQuantity::mobility;
      case SignalKind::acceleration: return FrfQuantity::accelerance;
      case SignalKind::force: return FrfQuantity::other;
    }
  }
  if (output == SignalKind::force) {
    switch (input) {
      case SignalKind::displacement: return FrfQuantity::dynamic_stiffness;
      case SignalKind::velocity: return FrfQuantity::impedance;
      case SignalKind::acceleration: return FrfQuantity::apparent_mass;
      case SignalKind::force: return FrfQuantity::other;
    }
  }
  return FrfQuantity::other;
}

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw InvalidArgument("empty frequency grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
      throw InvalidArgument("frequency grid must be positive and finite");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InvalidArgument("frequency grid must be strictly increasing");
    }
  }
}

void FrfMatrix::validate() const {
  validate_grid(frequencies);
  if (data.size() != frequencies.size()) {
    throw InvalidArgument("FRF has " + std::to_string(data.size()) +
                          " data lines for " +
                          std::to_string(frequencies.size()) + " frequencies");
  }
  for (const auto& h : data) {
    if (h.rows() != n_outputs() || h.cols() != n_inputs()) {
      throw InvalidArgument("FRF line shape does not match label counts");
    }
    if (!h.allFinite()) throw InvalidArgument("non-finite FRF entry");
  }
}

std::vector<double> linear_grid_hz(double f_min_hz, double f_max_hz,
                                   std::size_t lines) {
  if (lines == 0 || !(f_min_hz > 0.0) || f_max_hz < f_min_hz) {
    throw InvalidArgument("invalid grid specification");
  }
  std::vector<double> grid(lines);
  const double two_pi = 2.0 * std::numbers::pi;
  if (lines == 1) {
    grid[0] = two_pi * f_min_hz;
    return grid;
  }
  const double step = (f_max_hz - f_min_hz) / static_cast<double>(lines - 1);
  for (std::size_t i = 0; i < lines; ++i) {
    grid[i] = two_pi * (f_min_hz + step * static_cast<double>(i));
  }
  return grid;
}

StateSpaceModel build_from_mkv(const MatrixXd& m, const MatrixXd& k,
                               const MatrixXd& v, SignalKind kind,
                               const DofLabels& dofs) {
  const Index n = m.rows();
  if (m.cols() != n || n == 0) {
    throw InvalidArgument("mass matrix must be square and non-empty, got " +
                          dims(m));
  }
  if (k.rows() != n || k.cols() != n || v.rows() != n || v.cols() != n) {
    throw InvalidArgument("dimension mismatch: M is " + dims(m) + ", K is " +
                          dims(k) + ", V is " + dims(v));
  }
  if (!is_symmetric(m) || !is_symmetric(k) || !is_symmetric(v)) {
    throw InvalidArgument("M, K and V must be symmetric");
  }
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument(
        "mass matrix is singular or not positive definite; massless DOFs "
        "need a residue mass");
  }
  if (kind == SignalKind::force) {
    throw InvalidArgument("build_from_mkv outputs motion, not force");
  }
  if (!dofs.empty() && static_cast<Index>(dofs.size()) != n) {
    throw InvalidArgument("expected " + std::to_string(n) + " DOF labels");
  }

  // Lumped (diagonal) mass matrices are inverted entrywise, which is exact.
  const bool diagonal = m.isDiagonal(0.0);
  const VectorXd m_diag_inv = m.diagonal().cwiseInverse();
  const MatrixXd m_inv = diagonal ? MatrixXd(m_diag_inv.asDiagonal())
                                  : MatrixXd(llt.solve(MatrixXd::Identity(n, n)));
  const MatrixXd minv_v = diagonal ? MatrixXd(m_diag_inv.asDiagonal() * v) : MatrixXd(llt.solve(v));
  const MatrixXd minv_k = diagonal ? MatrixXd(m_diag_inv.asDiagonal() * k) : MatrixXd(llt.solve(k));

  StateSpaceModel s;
  s.a = MatrixXd::Zero(2 * n, 2 * n);
  s.a.topLeftCorner(n, n) = -minv_v;
  s.a.topRightCorner(n, n) = -minv_k;
  s.a.bottomLeftCorner(n, n).setIdentity();
  s.b = MatrixXd::Zero(2 * n, n);
  s.b.topRows(n) = m_inv;
  s.c = MatrixXd::Zero(n, 2 * n);
  s.d = MatrixXd::Zero(n, n);
  switch (kind) {
    case SignalKind::displacement:
      s.c.rightCols(n).setIdentity();
      break;
    case SignalKind::velocity:
      s.c.leftCols(n).setIdentity();
      break;
    case SignalKind::acceleration:
      s.c.leftCols(n) = -minv_v;
      s.c.rightCols(n) = -minv_k;
      s.d = m_inv;
      break;
    case SignalKind::force:
      break;
  }
  s.output_kind = kind;
  s.input_kind = SignalKind::force;
  s.outputs = dofs.empty() ? default_labels(n) : dofs;
  s.inputs = s.outputs;
  s.validate();
  return s;
}

StateSpaceModel differentiate(const StateSpaceModel& s) {
  SignalKind next;
  switch (s.output_kind) {
    case SignalKind::displacement: next = SignalKind::velocity; break;
    case SignalKind::velocity: next = SignalKind::acceleration; break;
    default:
      throw InvalidArgument("cannot differentiate a model with " +
                            std::string(to_string(s.output_kind)) + " outputs");
  }
  StateSpaceModel out = s;
  out.c = s.c * s.a;
  out.d = s.c * s.b;
  out.output_kind = next;
  return out;
}

StateSpaceModel invert(const StateSpaceModel& s) {
  s.validate();
  if (s.d.rows() != s.d.cols()) {
    throw InvalidArgument("cannot invert: feed-through D is " + dims(s.d) +
                          ", not square");
  }
  if (s.d.rows() == 0) throw InvalidArgument("cannot invert: empty model");
  const Eigen::JacobiSVD<MatrixXd> svd(s.d);
  const auto& sv = svd.singularValues();
  const double rcond = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
  if (!(rcond >= kFeedThroughRcondLimit)) {
    std::ostringstream os;
    os << "singular feed-through: 1/cond(D) = " << rcond
       << "; for a massless connecting element add a residue mass "
          "(D + eps*I) before inverting";
    throw SingularMatrixError(os.str(), rcond);
  }
  const MatrixXd d_inv = s.d.partialPivLu().inverse();
  StateSpaceModel out = s;
  out.a = s.a - s.b * d_inv * s.c;
  out.b = s.b * d_inv;
  out.c = -d_inv * s.c;
  out.d = d_inv;
  out.outputs = s.inputs;
  out.inputs = s.outputs;
  out.output_kind = s.input_kind;
  out.input_kind = s.output_kind;
  return out;
}

StateSpaceModel negate(const StateSpaceModel& s) {
  StateSpaceModel out = s;
  out.c = -s.c;
  out.d = -s.d;
  return out;
}

StateSpaceModel block_diagonal(std::span<const StateSpaceModel> models) {
  if (models.empty()) throw InvalidArgument("block_diagonal of no models");
  if (models.size() == 1) return models.front();
  Index n = 0, no = 0, ni = 0;
  StateSpaceModel out;
  out.output_kind = models.front().output_kind;
  out.input_kind = models.front().input_kind;
  for (const auto& m : models) {
    m.validate();
    if (m.output_kind != out.output_kind || m.input_kind != out.input_kind) {
      throw InvalidArgument("block_diagonal: mixed output/input kinds");
    }
    n += m.states();
    no += m.n_outputs();
    ni += m.n_inputs();
    out.outputs.insert(out.outputs.end(), m.outputs.begin(), m.outputs.end());
    out.inputs.insert(out.inputs.end(), m.inputs.begin(), m.inputs.end());
    out.name += (out.name.empty() ? "" : "+") + m.name;
  }
  check_unique(out.outputs, "output");
  check_unique(out.inputs, "input");
  out.a = MatrixXd::Zero(n, n);
  out.b = MatrixXd::Zero(n, ni);
  out.c = MatrixXd::Zero(no, n);
  out.d = MatrixXd::Zero(no, ni);
  Index r = 0, o = 0, i = 0;
  for (const auto& m : models) {
    out.a.block(r, r, m.states(), m.states()) = m.a;
    out.b.block(r, i, m.states(), m.n_inputs()) = m.b;
    out.c.block(o, r, m.n_outputs(), m.states()) = m.c;
    out.d.block(o, i, m.n_outputs(), m.n_inputs()) = m.d;
    r += m.states();
    o += m.n_outputs();
    i += m.n_inputs();
  }
  return out;
}

StateSpaceModel select_io(const StateSpaceModel& s, const DofLabels& keep_outputs,
                          const DofLabels& keep_inputs) {
  if (keep_outputs.empty() || keep_inputs.empty()) {
    throw InvalidArgument("select_io: at least one output and one input must be kept");
  }
  check_unique(keep_outputs, "selected output");
  check_unique(keep_inputs, "selected input");
  std::vector<Index> rows, cols;
  for (const auto& l : keep_outputs) {
    const auto idx = find_label(s.outputs, l);
    if (!idx) throw InvalidArgument("select_io: unknown output '" + l.qualified() + "'");
    rows.push_back(*idx);
  }
  for (const auto& l : keep_inputs) {
    const auto idx = find_label(s.inputs, l);
    if (!idx) throw InvalidArgument("select_io: unknown input '" + l.qualified() + "'");
    cols.push_back(*idx);
  }
  StateSpaceModel out = s;
  out.b = s.b(Eigen::all, cols);
  out.c = s.c(rows, Eigen::all);
  out.d = s.d(rows, cols);
  out.outputs.clear();
  out.inputs.clear();
  for (Index r : rows) out.outputs.push_back(s.outputs[r]);
  for (Index c : cols) out.inputs.push_back(s.inputs[c]);
  return out;
}

FrfEvaluation evaluate_frf_checked(const StateSpaceModel& s,
                                   std::span<const double> grid) {
  s.validate();
  validate_grid(grid);
  FrfEvaluation result;
  FrfMatrix& h = result.frf;
  h.frequencies.assign(grid.begin(), grid.end());
  h.data.resize(grid.size());
  h.quantity = quantity_of(s.output_kind, s.input_kind);
  h.outputs = s.outputs;
  h.inputs = s.inputs;

  const Index n = s.states();
  const VectorXd t = balancing_scale(s.a);
  const MatrixXcd a =
      (t.cwiseInverse().asDiagonal() * s.a * t.asDiagonal()).cast<std::complex<double>>();
  const MatrixXcd b = (t.cwiseInverse().asDiagonal() * s.b).cast<std::complex<double>>();
  const MatrixXcd c = (s.c * t.asDiagonal()).cast<std::complex<double>>();
  const MatrixXcd d = s.d.cast<std::complex<double>>();
  std::vector<char> singular(grid.size(), 0);
  constexpr double kRcondFloor = std::numeric_limits<double>::epsilon();

  parallel_for(grid.size(), [&](std::size_t k) {
    if (n == 0) {
      h.data[k] = d;
      return;
    }
    MatrixXcd pencil = -a;
    pencil.diagonal().array() += std::complex<double>(0.0, grid[k]);
    // Row equilibration keeps the singularity test meaningful for badly
    // scaled models (e.g. residue-mass regularized connecting elements).
    const VectorXd row_scale = pencil.rowwise().norm().cwiseInverse();
    pencil = row_scale.asDiagonal() * pencil;
    const Eigen::PartialPivLU<MatrixXcd> lu(pencil);
    const double rc = lu.rcond();
    if (!(rc > kRcondFloor)) {
      singular[k] = 1;
      h.data[k] = MatrixXcd::Constant(
          c.rows(), b.cols(),
          std::complex<double>(std::numeric_limits<double>::quiet_NaN(), 0.0));
      return;
    }
    h.data[k] = c * lu.solve(row_scale.asDiagonal() * b) + d;
  });

  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (singular[k]) result.singular_lines.push_back(k);
  }
  return result;
}

FrfMatrix evaluate_frf(const StateSpaceModel& s, std::span<const double> grid) {
  auto eval = evaluate_frf_checked(s, grid);
  if (!eval.singular_lines.empty()) {
    std::ostringstream os;
    os << "(jwI - A) is singular at " << eval.singular_lines.size()
       << " grid line(s), first at w = " << grid[eval.singular_lines.front()]
       << " rad/s";
    throw SingularFrequencyError(os.str(), std::move(eval.singular_lines));
  }
  return std::move(eval.frf);
}

double max_natural_frequency(const StateSpaceModel& s) {
  if (s.states() == 0) return 0.0;
  const Eigen::EigenSolver<MatrixXd> es(s.a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SimulationTrace simulate_time_response(const StateSpaceModel& s,
                                       const MatrixXd& u, double dt) {
  s.validate();
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (u.cols() != s.n_inputs()) {
    throw InvalidArgument("input history has " + std::to_string(u.cols()) +
                          " columns, model has " +
                          std::to_string(s.n_inputs()) + " inputs");
  }
  const Index n = s.states();
  const Index ni = s.n_inputs();
  const Index steps = u.rows();

  SimulationTrace trace;
  trace.u = u;
  trace.time.resize(static_cast<std::size_t>(steps));
  for (Index k = 0; k < steps; ++k) trace.time[k] = dt * static_cast<double>(k);
  trace.x = MatrixXd::Zero(steps, n);
  trace.y = MatrixXd::Zero(steps, s.n_outputs());

  const double w_max = max_natural_frequency(s);
  if (w_max > 0.0) {
    const double f_max = w_max / (2.0 * std::numbers::pi);
    if (dt > 1.0 / (10.0 * f_max)) {
      std::ostringstream os;
      os << "time step " << dt << " s exceeds 1/(10 f_max) = "
         << 1.0 / (10.0 * f_max) << " s";
      trace.warnings.push_back(os.str());
    }
  }

  // exp([[A, B], [0, 0]] dt) = [[Ad, Bd], [0, I]]
  MatrixXd aug = MatrixXd::Zero(n + ni, n + ni);
  aug.topLeftCorner(n, n) = s.a * dt;
  aug.topRightCorner(n, ni) = s.b * dt;
  const MatrixXd phi = aug.exp();
  const MatrixXd ad = phi.topLeftCorner(n, n);
  const MatrixXd bd = phi.topRightCorner(n, ni);

  VectorXd x = VectorXd::Zero(n);
  for (Index k = 0; k < steps; ++k) {
    const VectorXd uk = u.row(k).transpose();
    trace.x.row(k) = x.transpose();
    trace.y.row(k) = (s.c * x + s.d * uk).transpose();
    x = ad * x + bd * uk;
  }
  return trace;
}

}  // namespace substruct
