#pragma once

#include "ncpd/conjprox.hpp"
#include "ncpd/linops.hpp"

#include <cstdint>
#include <functional>
#include <memory>

namespace ncpd {

/// min_x f(x) + h(Ax) with L-smooth f.
struct CompositeProblem {
  std::function<double(const Vector&)> f_value;
  std::function<Vector(const Vector&)> grad_f;
  double lipschitz_L;
  LinearOperator op;
  Regularizer reg;

  Index dim() const { return op.in_dim(); }
  /// f(x) + h(Ax); +inf when Ax leaves the domain of h.
  double objective(const Vector& x) const { return f_value(x) + reg.value_h(op.apply(x)); }
};

/// min_x (1/N) sum_i f_i(x) + h(Ax), every f_i L-smooth.
struct FiniteSumProblem {
  Index N;
  std::function<double(Index, const Vector&)> component_value;
  std::function<Vector(Index, const Vector&)> component_grad;
  double lipschitz_L;
  LinearOperator op;
  Regularizer reg;

  Index dim() const { return op.in_dim(); }
  /// Mean of the component values, summed in index order.
  double full_value(const Vector& x) const;
  /// Mean of the component gradients, summed in index order.
  Vector full_grad(const Vector& x) const;
  /// Same problem viewed as f = mean f_i; shares the component closures.
  CompositeProblem as_composite() const;
  /// Single-component wrapper (N = 1, f_1 = f).
  static FiniteSumProblem from_composite(const CompositeProblem& problem);
};

/// Denoising with f(x) = ||x - b||^2 / 2, A = 2-D gradient and
/// h = lambda ||.||_0 + indicator(c1 <= . <= c2). L = 1.
CompositeProblem build_denoise(const Vector& noisy, Index height, Index width, double lambda,
                               double c1, double c2, Boundary boundary = Boundary::Periodic);

/// Largest |d^2/du^2 tanh(u)| = 4 / (3 sqrt 3), rounded up.
inline constexpr double kSigmoidCurvature = 0.7699;

/// Sigmoid-loss graph-guided fused lasso:
/// f_i(x) = 1 - tanh(b_i <a_i, x>), A = [V; I], h = lp_ball(lambda, p, r).
/// `rows` is N x n with one sample a_i per row; labels must be +-1.
FiniteSumProblem build_fused_lasso(Matrix rows, const Vector& labels, Matrix V, double lambda,
                                   double p, double r, bool normalize_rows = false);

/// Correlation-threshold stand-in for a sparse precision pattern:
/// V_jk = 1 when |corr(feature j, feature k)| > threshold, j != k.
Matrix build_precision_graph(const Matrix& rows, double threshold = 0.5);

/// Checks a file-loaded graph matrix (square, symmetric) and returns it.
Matrix validate_graph(Matrix V, Index n);

/// 10 log10(h w (max x)^2 / ||x - x_org||^2); +inf when x == x_org.
double psnr(const Vector& x, const Vector& x_org, Index height, Index width);

/// Piecewise-constant test image with intensities in [0.2, 0.8].
Vector synthetic_piecewise_image(Index height, Index width);

struct SyntheticClassification {
  Matrix rows;    // N x n
  Vector labels;  // +-1
};

/// Gaussian features with block-correlated groups of four and labels from a
/// seeded linear rule with 10% label noise.
SyntheticClassification synthetic_classification(Index N, Index n, std::uint64_t seed);

}  // namespace ncpd
