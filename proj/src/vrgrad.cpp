#include "ncpd/vrgrad.hpp"

#include "ncpd/errors.hpp"
#include "ncpd/rng.hpp"

#include <algorithm>
#include <unordered_set>

namespace ncpd {

namespace {

// Same reduction order as FiniteSumProblem::full_grad.
Vector column_mean(const Matrix& table) {
  Vector sum = table.col(0);
  for (Index i = 1; i < table.cols(); ++i) sum += table.col(i);
  sum /= static_cast<double>(table.cols());
  return sum;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Saga:
      return "saga";
    case EstimatorKind::Svrg:
      return "svrg";
    case EstimatorKind::Sarah:
      return "sarah";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "saga") return EstimatorKind::Saga;
  if (name == "svrg") return EstimatorKind::Svrg;
  if (name == "sarah") return EstimatorKind::Sarah;
  throw ParameterError("unknown estimator '" + name + "' (expected saga, svrg or sarah)");
}

GradientEstimator::GradientEstimator(EstimatorKind kind, FiniteSumProblem problem, Index batch,
                                     std::uint64_t seed, long period)
    : kind_(kind), problem_(std::move(problem)), batch_(batch), seed_(seed) {
  if (problem_.N < 1) throw ParameterError("estimator: N must be >= 1");
  if (batch_ < 1 || batch_ > problem_.N) {
    throw ParameterError("estimator: batch size must lie in [1, N]");
  }
  period_ = period > 0 ? period : static_cast<long>((problem_.N + batch_ - 1) / batch_);
}

std::vector<Index> GradientEstimator::sample_batch(long k) const {
  const Index N = problem_.N;
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(batch_));
  if (batch_ == N) {
    for (Index i = 0; i < N; ++i) out.push_back(i);
    return out;
  }
  // Floyd's algorithm: b draws for b distinct indices.
  CounterRng rng(seed_, static_cast<std::uint64_t>(k));
  std::unordered_set<Index> chosen;
  for (Index j = N - batch_; j < N; ++j) {
    const auto t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j + 1)));
    const Index pick = chosen.count(t) ? j : t;
    chosen.insert(pick);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void GradientEstimator::reset(const Vector& x0) {
  if (x0.size() != problem_.dim()) throw ShapeError("estimator reset: x0 has the wrong length");
  const Index N = problem_.N;
  evals_ = N;
  last_k_ = -1;
  if (kind_ == EstimatorKind::Saga) {
    table_.resize(x0.size(), N);
    for (Index i = 0; i < N; ++i) table_.col(i) = problem_.component_grad(i, x0);
    table_mean_ = column_mean(table_);
    initial_grad_ = table_mean_;
  } else {
    initial_grad_ = problem_.full_grad(x0);
    point_ = x0;
    gradient_ = initial_grad_;
  }
  initialized_ = true;
}

void GradientEstimator::require_initialized() const {
  if (!initialized_) throw StateError("estimator used before reset()");
}

Vector GradientEstimator::batch_mean_diff(const Vector& x, const Vector& base,
                                          const std::vector<Index>& batch) const {
  Vector sum = problem_.component_grad(batch[0], x) - problem_.component_grad(batch[0], base);
  for (std::size_t j = 1; j < batch.size(); ++j) {
    sum += problem_.component_grad(batch[j], x);
    sum -= problem_.component_grad(batch[j], base);
  }
  sum /= static_cast<double>(batch.size());
  return sum;
}

Vector GradientEstimator::saga_correction(const Vector& x, const std::vector<Index>& batch) const {
  Vector sum = problem_.component_grad(batch[0], x) - table_.col(batch[0]);
  for (std::size_t j = 1; j < batch.size(); ++j) {
    sum += problem_.component_grad(batch[j], x);
    sum -= table_.col(batch[j]);
  }
  sum /= static_cast<double>(batch.size());
  return sum;
}

Vector GradientEstimator::peek(long k, const Vector& x, const Vector& x_prev,
                               const std::vector<Index>& batch) const {
  require_initialized();
  if (batch.empty()) throw ParameterError("estimator peek: empty batch");
  switch (kind_) {
    case EstimatorKind::Saga:
      return saga_correction(x, batch) + table_mean_;
    case EstimatorKind::Svrg:
      if (is_refresh(k)) return problem_.full_grad(x);
      return batch_mean_diff(x, point_, batch) + gradient_;
    case EstimatorKind::Sarah:
      if (is_refresh(k)) return problem_.full_grad(x);
      return batch_mean_diff(x, x_prev, batch) + gradient_;
  }
  return {};
}

Vector GradientEstimator::estimate(long k, const Vector& x) {
  require_initialized();
  if (k != last_k_ + 1) throw StateError("estimator: iterations must be consecutive from 0");
  last_k_ = k;
  const Index N = problem_.N;

  if (kind_ == EstimatorKind::Saga) {
    if (batch_ == N) {
      for (Index i = 0; i < N; ++i) table_.col(i) = problem_.component_grad(i, x);
      evals_ += N;
      table_mean_ = column_mean(table_);
      return table_mean_;
    }
    const std::vector<Index> batch = sample_batch(k);
    Matrix fresh(x.size(), batch_);
    for (Index j = 0; j < batch_; ++j) fresh.col(j) = problem_.component_grad(batch[j], x);
    evals_ += batch_;
    Vector sum = fresh.col(0) - table_.col(batch[0]);
    for (Index j = 1; j < batch_; ++j) {
      sum += fresh.col(j);
      sum -= table_.col(batch[j]);
    }
    Vector g = sum / static_cast<double>(batch_) + table_mean_;
    for (Index j = 0; j < batch_; ++j) {
      table_mean_ += (fresh.col(j) - table_.col(batch[j])) / static_cast<double>(N);
      table_.col(batch[j]) = fresh.col(j);
    }
    if (k > 0 && is_refresh(k)) table_mean_ = column_mean(table_);
    return g;
  }

  Vector g;
  if (is_refresh(k) || batch_ == N) {
    if (k == 0) {
      g = initial_grad_;
    } else {
      g = problem_.full_grad(x);
      evals_ += N;
    }
    if (kind_ == EstimatorKind::Svrg) {
      point_ = x;
      gradient_ = g;
    }
  } else {
    const std::vector<Index> batch = sample_batch(k);
    g = batch_mean_diff(x, point_, batch) + gradient_;
    evals_ += 2 * batch_;
  }
  if (kind_ == EstimatorKind::Sarah) {
    point_ = x;
    gradient_ = g;
  }
  return g;
}

}  // namespace ncpd
