#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace ncpd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class OperatorKind { DenseMatrix, Gradient2d, StackedOverIdentity, Identity, ScaledIdentity };

/// Boundary handling of the forward-difference gradient.
/// Periodic wraps the last row/column around; ZeroPad sets the last
/// difference in each row/column to zero (Neumann convention).
enum class Boundary { Periodic, ZeroPad };

std::string to_string(OperatorKind kind);
std::string to_string(Boundary boundary);

/// Immutable linear map A : R^in_dim -> R^out_dim with an exact adjoint.
///
/// Images are flattened row-major. The 2-D gradient stacks the horizontal
/// differences x[i][j+1] - x[i][j] (all pixels, row-major) before the
/// vertical differences x[i+1][j] - x[i][j].
class LinearOperator {
 public:
  static LinearOperator identity(Index n);
  static LinearOperator scaled_identity(Index n, double scale);
  static LinearOperator dense(Matrix entries);
  static LinearOperator gradient2d(Index height, Index width, Boundary boundary = Boundary::Periodic);
  /// A = [V; I] for a square V.
  static LinearOperator stacked(Matrix V);

  Index in_dim() const noexcept { return in_dim_; }
  Index out_dim() const noexcept { return out_dim_; }
  OperatorKind kind() const noexcept { return kind_; }

  /// Scale s for identity (1) and scaled-identity kinds; throws otherwise.
  double identity_scale() const;
  bool is_scaled_identity() const noexcept {
    return kind_ == OperatorKind::Identity || kind_ == OperatorKind::ScaledIdentity;
  }

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& y) const;
  void apply(const Vector& x, Vector& out) const;
  void apply_adjoint(const Vector& y, Vector& out) const;

  /// Dense out_dim x in_dim matrix of the operator.
  Matrix materialize() const;

  /// ||A|| in closed form for identity, scaled-identity and gradient kinds.
  /// The gradient's Gram matrix is a Kronecker sum of 1-D difference Gram
  /// matrices with eigenvalues 4 sin^2(pi k / n) (periodic) or
  /// 4 sin^2(pi k / (2n)) (zero-pad).
  std::optional<double> closed_form_norm() const;

 private:
  struct Dense {
    Matrix entries;
  };
  struct Gradient {
    Index height;
    Index width;
    Boundary boundary;
  };
  struct Stacked {
    Matrix top;
  };
  struct Scaled {
    double scale;
  };
  using Payload = std::variant<Dense, Gradient, Stacked, Scaled>;

  LinearOperator(OperatorKind kind, Index in_dim, Index out_dim, Payload payload);

  OperatorKind kind_;
  Index in_dim_;
  Index out_dim_;
  Payload payload_;
};

struct SpectralBounds {
  double op_norm = 0.0;       ///< estimate of ||A||
  double min_eig_gram = 0.0;  ///< estimate of lambda_min(A A^T)
  double hat_lambda = 0.0;    ///< sqrt(min_eig_gram)
  bool exact = false;         ///< computed by a dense eigensolve
  bool surjective() const noexcept { return min_eig_gram > 0.0; }
};

inline constexpr Index kMaterializationCap = 4096;
inline constexpr int kSpectralIterations = 200;

/// Power iteration on A^T A from a seeded random start. The returned value is
/// the largest Rayleigh-quotient norm seen, a lower bound on ||A||.
double estimate_op_norm(const LinearOperator& op, int iterations, std::uint64_t seed);

/// Smallest eigenvalue of A A^T. Exact eigensolve when out_dim <= cap;
/// otherwise a shifted power iteration. Zero whenever out_dim > in_dim.
double estimate_min_eig_gram(const LinearOperator& op, int iterations, std::uint64_t seed,
                             Index cap = kMaterializationCap);

SpectralBounds spectral_bounds(const LinearOperator& op, std::uint64_t seed = 0,
                               int iterations = kSpectralIterations,
                               Index cap = kMaterializationCap);

/// Comma-separated decimals, one matrix row per line.
Matrix load_dense_csv(const std::string& path);

}  // namespace ncpd
