#include "ncpd/linops.hpp"

#include "ncpd/errors.hpp"
#include "ncpd/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ncpd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_length(const Vector& v, Index expected, const char* what) {
  if (v.size() != expected) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(expected) +
                     ", got " + std::to_string(v.size()));
  }
}

Vector random_unit(Index n, std::uint64_t seed) {
  CounterRng rng(seed, 0x5eed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  v /= v.norm();
  return v;
}

// Eigenvalues of the smaller Gram matrix, ascending.
Vector gram_eigenvalues(const Matrix& a, bool outer) {
  const Matrix g = outer ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(g, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double clamp_small(double value, double scale) {
  return value <= 1e-12 * std::max(1.0, scale) ? 0.0 : value;
}

}  // namespace

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::DenseMatrix:
      return "dense-matrix";
    case OperatorKind::Gradient2d:
      return "gradient-2d";
    case OperatorKind::StackedOverIdentity:
      return "stacked-over-identity";
    case OperatorKind::Identity:
      return "identity";
    case OperatorKind::ScaledIdentity:
      return "scaled-identity";
  }
  return "unknown";
}

std::string to_string(Boundary boundary) {
  return boundary == Boundary::Periodic ? "periodic" : "zero-pad";
}

LinearOperator::LinearOperator(OperatorKind kind, Index in_dim, Index out_dim, Payload payload)
    : kind_(kind), in_dim_(in_dim), out_dim_(out_dim), payload_(std::move(payload)) {}

LinearOperator LinearOperator::identity(Index n) {
  if (n < 1) throw ShapeError("identity: dimension must be positive");
  return {OperatorKind::Identity, n, n, Scaled{1.0}};
}

LinearOperator LinearOperator::scaled_identity(Index n, double scale) {
  if (n < 1) throw ShapeError("scaled_identity: dimension must be positive");
  if (!std::isfinite(scale)) throw ParameterError("scaled_identity: scale must be finite");
  return {OperatorKind::ScaledIdentity, n, n, Scaled{scale}};
}

LinearOperator LinearOperator::dense(Matrix entries) {
  if (entries.rows() < 1 || entries.cols() < 1) throw ShapeError("dense: empty matrix");
  const Index rows = entries.rows();
  const Index cols = entries.cols();
  return {OperatorKind::DenseMatrix, cols, rows, Dense{std::move(entries)}};
}

LinearOperator LinearOperator::gradient2d(Index height, Index width, Boundary boundary) {
  if (height < 2 || width < 2) {
    throw ShapeError("gradient2d: height and width must be at least 2");
  }
  const Index n = height * width;
  return {OperatorKind::Gradient2d, n, 2 * n, Gradient{height, width, boundary}};
}

LinearOperator LinearOperator::stacked(Matrix V) {
  if (V.rows() != V.cols()) throw ShapeError("stacked: V must be square");
  if (V.rows() < 1) throw ShapeError("stacked: empty V");
  const Index n = V.rows();
  return {OperatorKind::StackedOverIdentity, n, 2 * n, Stacked{std::move(V)}};
}

double LinearOperator::identity_scale() const {
  if (!is_scaled_identity()) throw StateError("identity_scale: operator is not a scaled identity");
  return std::get<Scaled>(payload_).scale;
}

Vector LinearOperator::apply(const Vector& x) const {
  Vector out;
  apply(x, out);
  return out;
}

Vector LinearOperator::apply_adjoint(const Vector& y) const {
  Vector out;
  apply_adjoint(y, out);
  return out;
}

void LinearOperator::apply(const Vector& x, Vector& out) const {
  require_length(x, in_dim_, "apply");
  out.resize(out_dim_);
  std::visit(Overloaded{
                 [&](const Dense& d) { out.noalias() = d.entries * x; },
                 [&](const Scaled& s) { out = s.scale * x; },
                 [&](const Stacked& s) {
                   const Index n = in_dim_;
                   out.head(n).noalias() = s.top * x;
                   out.tail(n) = x;
                 },
                 [&](const Gradient& g) {
                   const Index h = g.height;
                   const Index w = g.width;
                   const bool periodic = g.boundary == Boundary::Periodic;
                   double* dh = out.data();
                   double* dv = out.data() + h * w;
                   for (Index i = 0; i < h; ++i) {
                     for (Index j = 0; j < w; ++j) {
                       const Index p = i * w + j;
                       if (j + 1 < w) {
                         dh[p] = x[p + 1] - x[p];
                       } else {
                         dh[p] = periodic ? x[i * w] - x[p] : 0.0;
                       }
                       if (i + 1 < h) {
                         dv[p] = x[p + w] - x[p];
                       } else {
                         dv[p] = periodic ? x[j] - x[p] : 0.0;
                       }
                     }
                   }
                 },
             },
             payload_);
}

void LinearOperator::apply_adjoint(const Vector& y, Vector& out) const {
  require_length(y, out_dim_, "apply_adjoint");
  out.resize(in_dim_);
  std::visit(Overloaded{
                 [&](const Dense& d) { out.noalias() = d.entries.transpose() * y; },
                 [&](const Scaled& s) { out = s.scale * y; },
                 [&](const Stacked& s) {
                   const Index n = in_dim_;
                   out.noalias() = s.top.transpose() * y.head(n);
                   out += y.tail(n);
                 },
                 [&](const Gradient& g) {
                   // Negative divergence: gather form of the scatter transpose.
                   const Index h = g.height;
                   const Index w = g.width;
                   const bool periodic = g.boundary == Boundary::Periodic;
                   const double* ph = y.data();
                   const double* pv = y.data() + h * w;
                   for (Index i = 0; i < h; ++i) {
                     for (Index j = 0; j < w; ++j) {
                       const Index p = i * w + j;
                       double acc = 0.0;
                       if (j + 1 < w || periodic) acc -= ph[p];
                       if (j > 0) {
                         acc += ph[p - 1];
                       } else if (periodic) {
                         acc += ph[i * w + w - 1];
                       }
                       if (i + 1 < h || periodic) acc -= pv[p];
                       if (i > 0) {
                         acc += pv[p - w];
                       } else if (periodic) {
                         acc += pv[(h - 1) * w + j];
                       }
                       out[p] = acc;
                     }
                   }
                 },
             },
             payload_);
}

std::optional<double> LinearOperator::closed_form_norm() const {
  if (const auto* g = std::get_if<Gradient>(&payload_)) {
    auto top = [&](Index n) {
      const double t = g->boundary == Boundary::Periodic
                           ? std::numbers::pi * static_cast<double>(n / 2) / static_cast<double>(n)
                           : std::numbers::pi * static_cast<double>(n - 1) / (2.0 * static_cast<double>(n));
      const double s = std::sin(t);
      return 4.0 * s * s;
    };
    return std::sqrt(top(g->height) + top(g->width));
  }
  if (const auto* sc = std::get_if<Scaled>(&payload_)) return std::abs(sc->scale);
  return std::nullopt;
}

Matrix LinearOperator::materialize() const {
  Matrix m(out_dim_, in_dim_);
  Vector e = Vector::Zero(in_dim_);
  Vector col;
  for (Index j = 0; j < in_dim_; ++j) {
    e[j] = 1.0;
    apply(e, col);
    m.col(j) = col;
    e[j] = 0.0;
  }
  return m;
}

double estimate_op_norm(const LinearOperator& op, int iterations, std::uint64_t seed) {
  if (iterations < 1) throw ParameterError("estimate_op_norm: iterations must be >= 1");
  Vector v = random_unit(op.in_dim(), seed);
  Vector av;
  Vector w;
  double best = 0.0;
  for (int it = 0; it < iterations; ++it) {
    op.apply(v, av);
    best = std::max(best, av.norm());
    op.apply_adjoint(av, w);
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
  }
  return best;
}

double estimate_min_eig_gram(const LinearOperator& op, int iterations, std::uint64_t seed,
                             Index cap) {
  if (op.out_dim() > op.in_dim()) return 0.0;
  if (op.out_dim() <= cap) {
    const Vector eig = gram_eigenvalues(op.materialize(), true);
    return clamp_small(std::max(0.0, eig[0]), eig[eig.size() - 1]);
  }
  if (iterations < 1) throw ParameterError("estimate_min_eig_gram: iterations must be >= 1");
  // Power iteration on shift*I - A A^T, whose top eigenvalue is shift - lambda_min.
  const double top = estimate_op_norm(op, iterations, seed);
  const double shift = 1.01 * top * top;
  if (shift == 0.0) return 0.0;
  CounterRng rng(seed, 0x3e16);
  Vector v(op.out_dim());
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v /= v.norm();
  Vector atv;
  Vector aatv;
  double best = 0.0;
  for (int it = 0; it < iterations; ++it) {
    op.apply_adjoint(v, atv);
    op.apply(atv, aatv);
    Vector w = shift * v - aatv;
    best = std::max(best, v.dot(w));
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
  }
  return clamp_small(std::max(0.0, shift - best), shift);
}

SpectralBounds spectral_bounds(const LinearOperator& op, std::uint64_t seed, int iterations,
                               Index cap) {
  SpectralBounds sb;
  if (const auto norm = op.closed_form_norm()) {
    sb.op_norm = *norm;
    sb.hat_lambda = op.out_dim() > op.in_dim() ? 0.0 : *norm;
    sb.min_eig_gram = sb.hat_lambda * sb.hat_lambda;
    sb.exact = true;
    return sb;
  }
  const Index small = std::min(op.in_dim(), op.out_dim());
  if (small <= cap && op.out_dim() <= cap) {
    const Matrix a = op.materialize();
    const bool outer = op.out_dim() <= op.in_dim();
    const Vector eig = gram_eigenvalues(a, outer);
    const double top = std::max(0.0, eig[eig.size() - 1]);
    sb.op_norm = std::sqrt(top);
    sb.min_eig_gram = outer ? clamp_small(std::max(0.0, eig[0]), top) : 0.0;
    sb.exact = true;
  } else {
    sb.op_norm = estimate_op_norm(op, iterations, seed);
    sb.min_eig_gram = estimate_min_eig_gram(op, iterations, seed, cap);
  }
  sb.hat_lambda = std::sqrt(sb.min_eig_gram);
  // hat_lambda^2 reproduces min_eig_gram bit-for-bit.
  sb.min_eig_gram = sb.hat_lambda * sb.hat_lambda;
  return sb;
}

Matrix load_dense_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'",
                         line_no);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": ragged row", line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty matrix", line_no);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace ncpd
