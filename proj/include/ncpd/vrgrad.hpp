#pragma once

#include "ncpd/problems.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ncpd {

enum class EstimatorKind { Saga, Svrg, Sarah };

std::string to_string(EstimatorKind kind);
/// Accepts "saga", "svrg", "sarah".
EstimatorKind parse_estimator_kind(const std::string& name);

/// Mini-batch variance-reduced gradient estimator over a finite sum.
///
///   saga:  g = mean_B(grad_i(x) - table_i) + mean(table), then table_i <- grad_i(x)
///   svrg:  g = mean_B(grad_i(x) - grad_i(snap)) + grad(snap), snapshot every m steps
///   sarah: g = mean_B(grad_i(x) - grad_i(x_prev)) + g_prev, restart every m steps
///
/// At a snapshot or restart step the full gradient is returned as is. With
/// b = N every kind returns the full gradient, so the stochastic loop
/// reproduces the deterministic one.
class GradientEstimator {
 public:
  /// period <= 0 selects ceil(N / b).
  GradientEstimator(EstimatorKind kind, FiniteSumProblem problem, Index batch, std::uint64_t seed,
                    long period = 0);

  EstimatorKind kind() const noexcept { return kind_; }
  Index batch_size() const noexcept { return batch_; }
  long period() const noexcept { return period_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Sorted, without replacement; a pure function of (seed, k).
  std::vector<Index> sample_batch(long k) const;

  /// Seeds the memory at x0 and zeroes the evaluation counter.
  void reset(const Vector& x0);
  bool initialized() const noexcept { return initialized_; }

  /// Estimate at iteration k for the point x = x^k; updates the memory.
  /// Calls must come in order k = 0, 1, 2, ... after reset(x^0).
  Vector estimate(long k, const Vector& x);

  /// Estimate at iteration k with an explicit batch, without touching the
  /// memory. x_prev is x^{k-1} (used by sarah only).
  Vector peek(long k, const Vector& x, const Vector& x_prev, const std::vector<Index>& batch) const;

  /// Cumulative component-gradient evaluations; a full gradient counts N.
  long component_evals() const noexcept { return evals_; }

  const Matrix& saga_table() const noexcept { return table_; }  ///< one gradient per column
  const Vector& saga_mean() const noexcept { return table_mean_; }

 private:
  bool is_refresh(long k) const noexcept { return k % period_ == 0; }
  Vector batch_mean_diff(const Vector& x, const Vector& base, const std::vector<Index>& batch) const;
  Vector saga_correction(const Vector& x, const std::vector<Index>& batch) const;
  void require_initialized() const;

  EstimatorKind kind_;
  FiniteSumProblem problem_;
  Index batch_;
  std::uint64_t seed_;
  long period_;
  bool initialized_ = false;
  long evals_ = 0;

  Vector point_;     // svrg snapshot, or sarah previous point
  Vector gradient_;  // svrg snapshot gradient, or sarah previous estimate
  Matrix table_;
  Vector table_mean_;
  Vector initial_grad_;
  long last_k_ = -1;
};

}  // namespace ncpd
