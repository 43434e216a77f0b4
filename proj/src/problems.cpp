#include "ncpd/problems.hpp"

#include "ncpd/errors.hpp"
#include "ncpd/rng.hpp"

#include <cmath>
#include <limits>

namespace ncpd {

double FiniteSumProblem::full_value(const Vector& x) const {
  double sum = component_value(0, x);
  for (Index i = 1; i < N; ++i) sum += component_value(i, x);
  return sum / static_cast<double>(N);
}

Vector FiniteSumProblem::full_grad(const Vector& x) const {
  Vector sum = component_grad(0, x);
  for (Index i = 1; i < N; ++i) sum += component_grad(i, x);
  sum /= static_cast<double>(N);
  return sum;
}

CompositeProblem FiniteSumProblem::as_composite() const {
  auto self = std::make_shared<FiniteSumProblem>(*this);
  return CompositeProblem{
      [self](const Vector& x) { return self->full_value(x); },
      [self](const Vector& x) { return self->full_grad(x); },
      lipschitz_L,
      op,
      reg,
  };
}

FiniteSumProblem FiniteSumProblem::from_composite(const CompositeProblem& problem) {
  return FiniteSumProblem{
      1,
      [f = problem.f_value](Index, const Vector& x) { return f(x); },
      [g = problem.grad_f](Index, const Vector& x) { return g(x); },
      problem.lipschitz_L,
      problem.op,
      problem.reg,
  };
}

CompositeProblem build_denoise(const Vector& noisy, Index height, Index width, double lambda,
                               double c1, double c2, Boundary boundary) {
  if (noisy.size() == 0) throw ShapeError("build_denoise: empty image");
  if (noisy.size() != height * width) {
    throw ShapeError("build_denoise: image size does not match height*width");
  }
  auto b = std::make_shared<const Vector>(noisy);
  return CompositeProblem{
      [b](const Vector& x) { return 0.5 * (x - *b).squaredNorm(); },
      [b](const Vector& x) -> Vector { return x - *b; },
      1.0,
      LinearOperator::gradient2d(height, width, boundary),
      Regularizer::l0_box(lambda, c1, c2),
  };
}

namespace {

struct SigmoidData {
  Matrix rows;
  Vector labels;
};

}  // namespace

FiniteSumProblem build_fused_lasso(Matrix rows, const Vector& labels, Matrix V, double lambda,
                                   double p, double r, bool normalize_rows) {
  if (rows.rows() < 1 || rows.cols() < 1) throw ShapeError("build_fused_lasso: empty data");
  if (labels.size() != rows.rows()) throw ShapeError("build_fused_lasso: label count mismatch");
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1.0 && labels[i] != -1.0) {
      throw ParseError("build_fused_lasso: label at row " + std::to_string(i + 1) +
                           " is not in {-1, +1}",
                       static_cast<std::size_t>(i + 1));
    }
  }
  if (V.rows() != rows.cols()) throw ShapeError("build_fused_lasso: V must be n x n");
  auto reg = Regularizer::lp_ball(lambda, p, r);
  if (normalize_rows) {
    for (Index i = 0; i < rows.rows(); ++i) {
      const double nrm = rows.row(i).norm();
      if (nrm > 0.0) rows.row(i) /= nrm;
    }
  }
  const double max_sq = rows.rowwise().squaredNorm().maxCoeff();
  const Index N = rows.rows();
  auto data = std::make_shared<const SigmoidData>(SigmoidData{std::move(rows), labels});
  return FiniteSumProblem{
      N,
      [data](Index i, const Vector& x) {
        return 1.0 - std::tanh(data->labels[i] * data->rows.row(i).dot(x));
      },
      [data](Index i, const Vector& x) -> Vector {
        const double bi = data->labels[i];
        const double t = std::tanh(bi * data->rows.row(i).dot(x));
        return (-bi * (1.0 - t * t)) * data->rows.row(i).transpose();
      },
      max_sq > 0.0 ? kSigmoidCurvature * max_sq : kSigmoidCurvature,
      LinearOperator::stacked(std::move(V)),
      reg,
  };
}

Matrix build_precision_graph(const Matrix& rows, double threshold) {
  if (rows.rows() < 2) throw ShapeError("build_precision_graph: need at least two rows");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ParameterError("build_precision_graph: threshold must lie in (0, 1)");
  }
  const Index n = rows.cols();
  const Matrix centred = rows.rowwise() - rows.colwise().mean();
  const Vector scale = centred.colwise().norm().transpose();
  Matrix V = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = j + 1; k < n; ++k) {
      // Zero-variance features are treated as uncorrelated.
      if (scale[j] == 0.0 || scale[k] == 0.0) continue;
      const double corr = centred.col(j).dot(centred.col(k)) / (scale[j] * scale[k]);
      if (std::abs(corr) > threshold) {
        V(j, k) = 1.0;
        V(k, j) = 1.0;
      }
    }
  }
  return V;
}

Matrix validate_graph(Matrix V, Index n) {
  if (V.rows() != n || V.cols() != n) {
    throw ShapeError("graph matrix must be " + std::to_string(n) + " x " + std::to_string(n));
  }
  if ((V - V.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ParameterError("graph matrix must be symmetric");
  }
  return V;
}

double psnr(const Vector& x, const Vector& x_org, Index height, Index width) {
  if (x.size() != x_org.size() || x.size() != height * width) {
    throw ShapeError("psnr: image sizes differ");
  }
  const double err = (x - x_org).squaredNorm();
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = x.maxCoeff();
  return 10.0 * std::log10(static_cast<double>(height * width) * peak * peak / err);
}

Vector synthetic_piecewise_image(Index height, Index width) {
  Vector img(height * width);
  const double hy = static_cast<double>(height);
  const double wx = static_cast<double>(width);
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      const double u = (static_cast<double>(j) + 0.5) / wx;
      const double v = (static_cast<double>(i) + 0.5) / hy;
      double value = u < 0.5 ? 0.2 : 0.4;
      if (u > 0.15 && u < 0.45 && v > 0.2 && v < 0.6) value = 0.8;
      const double du = u - 0.7;
      const double dv = v - 0.65;
      if (du * du + dv * dv < 0.04) value = 0.6;
      if (v > 0.8 && u < 0.6) value = 0.5;
      img[i * width + j] = value;
    }
  }
  return img;
}

SyntheticClassification synthetic_classification(Index N, Index n, std::uint64_t seed) {
  if (N < 1 || n < 1) throw ShapeError("synthetic_classification: empty shape");
  CounterRng rng(seed, 0xda7a);
  Vector w(n);
  for (Index j = 0; j < n; ++j) w[j] = rng.normal();
  const Index groups = (n + 3) / 4;
  SyntheticClassification out{Matrix(N, n), Vector(N)};
  Vector factor(groups);
  for (Index i = 0; i < N; ++i) {
    for (Index g = 0; g < groups; ++g) factor[g] = rng.normal();
    for (Index j = 0; j < n; ++j) out.rows(i, j) = factor[j / 4] + 0.5 * rng.normal();
    const double margin = out.rows.row(i).dot(w);
    double label = margin >= 0.0 ? 1.0 : -1.0;
    if (rng.uniform_open() < 0.1) label = -label;
    out.labels[i] = label;
  }
  return out;
}

}  // namespace ncpd
