#pragma once

#include "ncpd/solver.hpp"
#include "ncpd/vrgrad.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ncpd {

struct SppdgConfig {
  std::optional<double> alpha;  ///< default from kappa_hat, see resolve_sppdg_alpha
  double kappa_hat = 0.0;       ///< user proxy for the variance constant kappa
  long max_epochs = 50;         ///< one epoch = N component-gradient evaluations
  long max_iters = 0;           ///< 0: no iteration cap
  double tol_step = 1e-8;
  std::vector<std::uint64_t> seeds{1};
  Preconditioner preconditioner = Preconditioner::ScalarBeta;
  Index batch = 0;  ///< 0: max(1, floor(0.01 N))
  long period = 0;  ///< 0: ceil(N / b)
  std::optional<double> op_norm;
  double norm_cap = 1e12;
  bool record_time = true;
  bool parallel = true;
};

/// Constants of the stochastic Lyapunov function with delta1 = 1, delta2 = 1/6:
///   e0 = 1/(3a) - (d1+L)/6 - k/(3 d1) - 4 d2 L/3 - 4 d2/(3a) - 2 d2 a L^2/3
///        - a L^2/(2 d2) - 2 a k/d2 - 8 d2 a k/3          (a = alpha, k = kappa)
///   a = e0 + 2 d2/alpha + 2 d2 alpha k
///   b = e0 + 9 alpha k/(2 d2) + 2 d2 alpha k + k/(2 d1) + 3 alpha L^2/(2 d2)
///   c = 3 alpha k/(2 d2)
struct SppdgLyapunovConstants {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double e0 = 0.0;

  static constexpr double kDelta1 = 1.0;
  static constexpr double kDelta2 = 1.0 / 6.0;
  static SppdgLyapunovConstants from(double alpha, double kappa, double L);
};

/// alpha < 1/(2(3 + 7L + 6 kappa)) for kappa > 0; otherwise 0.9/(3L).
double sppdg_alpha_limit(double L, double kappa_hat);
double resolve_sppdg_alpha(const SppdgConfig& config, double L);

/// (1/N) sum f_i(x) + <y, Ax> - h*(y).
double lagrangian_s(const FiniteSumProblem& problem, const Vector& x, const Vector& y);

struct SppdgRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SolveReport report;
  std::vector<TraceRecord> trace;
};

struct AggregateRecord {
  long iter = 0;
  long comp_evals = 0;
  double mean_objective = 0.0;
  double mean_lagrangian_s = 0.0;
  double mean_lyapunov_s = 0.0;
  double mean_dx = 0.0;
  double mean_dy = 0.0;
  int seeds_ok = 0;
};

struct SppdgResult {
  std::vector<SppdgRun> runs;  ///< in config.seeds order
  std::vector<AggregateRecord> aggregate;
  StepParams step{};
  SppdgLyapunovConstants constants{};
  Index batch = 0;
  long period = 0;
  std::vector<std::string> warnings;

  int seeds_ok() const;
};

/// Runs the stochastic loop once per seed:
///   x+ = x - alpha (g + A^T y),  y+ = prox_{beta h*}(y + beta A (2 x+ - x))
/// with g from a variance-reduced estimator. Trace columns follow the
/// deterministic solver; lyapunov holds L_s - a|x-u|^2 + b|x-v|^2 + c|v-w|^2
/// with (u, v, w) = (x^{k+1}, x^{k-1}, x^{k-2}). A seed that diverges is
/// reported as failed and left out of the aggregate.
SppdgResult solve_stochastic(const FiniteSumProblem& problem, EstimatorKind kind,
                             const SppdgConfig& config, const Vector& x0,
                             std::optional<Vector> y0 = std::nullopt);

struct DescentReport {
  long checks = 0;
  long violations = 0;
  double fraction() const { return checks ? static_cast<double>(violations) / checks : 0.0; }
};

/// Seed-averaged L_s sequence against the descent inequality
///   mean L_s(k+1) + max(e0, 0) mean |dx_k|^2 <= mean L_s(k) + slack (1 + |mean L_s(k)|)
/// over the common prefix of the traces. Needs at least two traces.
DescentReport expectation_descent_report(const std::vector<std::vector<TraceRecord>>& traces,
                                         const SppdgLyapunovConstants& constants,
                                         double slack = 1e-9);

}  // namespace ncpd
