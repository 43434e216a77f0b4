#pragma once

#include "ncpd/problems.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ncpd {

/// Dual-step metric. ExactM uses M = alpha A A^T and is only offered for
/// (scaled) identity operators, where the M-prox is separable. ScalarBeta
/// replaces M by I / beta with beta = 1 / (alpha ||A||^2).
enum class Preconditioner { ExactM, ScalarBeta };

std::string to_string(Preconditioner preconditioner);

struct PpdgConfig {
  std::optional<double> alpha;  ///< default 0.9 / (3 L)
  double delta = 0.2;
  long max_iters = 10000;
  double tol_step = 1e-8;
  Preconditioner preconditioner = Preconditioner::ScalarBeta;
  bool lyapunov_checks = true;
  std::optional<double> op_norm;  ///< default: spectral estimate of ||A||
  double norm_cap = 1e12;
  double descent_rel_tol = 1e-9;
  double bound_slack = 1e-9;
  bool record_time = true;
};

/// a = delta / alpha,
/// b = 1/(2 alpha) - L/4 - delta/alpha - alpha delta L^2/2 - delta L + alpha L^2/(4 delta),
/// c = b - alpha L^2 / (2 delta).
struct LyapunovConstants {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  static LyapunovConstants from(double alpha, double delta, double L);
  bool positive() const noexcept { return a > 0.0 && b > 0.0 && c > 0.0; }
};

/// Step sizes shared by the deterministic and stochastic loops.
struct StepParams {
  double alpha;
  double beta;
  double op_norm;
};

StepParams resolve_step_params(const CompositeProblem& problem, std::optional<double> alpha,
                               Preconditioner preconditioner, std::optional<double> op_norm);

/// Iterate window around iteration k: x^{k-1}, x^k, x^{k+1}, y^{k-1}, y^k.
/// At k = 0 the previous iterates equal the current ones.
struct SolverState {
  long k = 0;
  Vector x_prev;
  Vector x_cur;
  Vector x_next;
  Vector y_prev;
  Vector y_cur;
};

struct TraceRecord {
  long iter = 0;
  double elapsed_s = 0.0;
  double objective = 0.0;
  double lagrangian = 0.0;
  double lyapunov = 0.0;
  double dx_norm = 0.0;
  double dy_norm = 0.0;
  double kkt_x = 0.0;
  double kkt_y = 0.0;
  long comp_evals = 0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

enum class Termination { Converged, IterationLimit, EpochLimit };

std::string to_string(Termination reason);

struct DiagnosticCounts {
  long descent_checks = 0;
  long descent_violations = 0;
  double worst_descent_excess = 0.0;
  long subgradient_checks = 0;
  long subgradient_violations = 0;
  long dual_bound_checks = 0;
  long dual_bound_violations = 0;
  double sum_dx_sq = 0.0;
  double sum_dy_sq = 0.0;
};

struct SolveReport {
  Vector x;
  Vector y;
  long iters = 0;
  double kkt_x = 0.0;
  double kkt_y = 0.0;
  double objective = 0.0;
  Termination reason = Termination::IterationLimit;
  StepParams step{};
  LyapunovConstants constants{};
  DiagnosticCounts diagnostics{};
};

/// f(x) + <y, Ax> - h*(y); -inf when h*(y) = +inf.
double lagrangian(const CompositeProblem& problem, const Vector& x, const Vector& y);

/// L(x, y) - a ||x - u||^2 + b ||x - v||^2.
double lyapunov_value(const CompositeProblem& problem, const Vector& x, const Vector& y,
                      const Vector& u, const Vector& v, const LyapunovConstants& constants);

/// One primal-dual update from (x, y) with a given gradient g at x:
///   x+ = x - alpha (g + A^T y)
///   y+ = prox_{beta h*}(y + beta A (2 x+ - x)).
void primal_dual_update(const CompositeProblem& problem, const Vector& grad, const Vector& x,
                        const Vector& y, const StepParams& step, Vector& x_next, Vector& y_next);

/// Advances the window by one deterministic step; state.x_next is ignored on
/// input and the returned state has k + 1 with its own x_next filled in.
SolverState step(const CompositeProblem& problem, const SolverState& state,
                 const StepParams& params);

/// Window at k = 0 with x^1 computed.
SolverState initial_state(const CompositeProblem& problem, const Vector& x0, const Vector& y0,
                          const StepParams& params);

/// g^k = (y^{k-1} - y^k) / beta + A (2 x^k - x^{k-1}), an element of the
/// subdifferential of h* at y^k (M = I / beta).
Vector dual_subgradient(const CompositeProblem& problem, const SolverState& state, double beta);

struct SubgradientBlocks {
  Vector grad_x;
  Vector dual;
  Vector grad_u;
  Vector grad_v;
  double norm() const;
};

/// d^k = (grad_x Lyap, A x^k - g^k, grad_u Lyap, grad_v Lyap) at
/// z^k = (x^k, y^k, x^{k+1}, x^{k-1}). Requires k >= 1.
SubgradientBlocks subgradient_d(const CompositeProblem& problem, const SolverState& state,
                                const LyapunovConstants& constants, double beta);

struct SubgradientGammas {
  double gamma1;
  double gamma2;
};

/// gamma1 = 2L + 4b + 2/alpha + (2 + alpha L) ||A||, gamma2 = 4a + 1/alpha + ||A||.
SubgradientGammas subgradient_gammas(double alpha, double L, double op_norm,
                                     const LyapunovConstants& constants);

struct KktResiduals {
  double r_x;
  double r_y;
};

/// r_x = ||grad f(x^k) + A^T y^k||, r_y = ||A x^k - g^k||. Requires k >= 1.
KktResiduals kkt_residuals(const CompositeProblem& problem, const SolverState& state, double beta);

/// Deterministic primal-dual loop from (x0, y0); y0 defaults to zero.
///
/// With lyapunov_checks on, alpha must make a, b, c positive. In ExactM mode
/// a descent violation of the Lyapunov function throws DiagnosticError; in
/// ScalarBeta mode it is only counted. Non-finite iterates or a norm above
/// norm_cap throw DivergenceError.
///
/// The trace record for iteration k is emitted once x^{k+1} is known, so a
/// run of K steps emits K records.
SolveReport solve(const CompositeProblem& problem, const PpdgConfig& config, const Vector& x0,
                  std::optional<Vector> y0 = std::nullopt, const TraceSink& sink = {});

/// Collects records into a vector.
struct TraceCollector {
  std::vector<TraceRecord> records;
  TraceSink sink() {
    return [this](const TraceRecord& r) { records.push_back(r); };
  }
};

/// Wall-clock seconds since construction; always zero when disabled.
class Stopwatch {
 public:
  explicit Stopwatch(bool enabled = true)
      : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

/// Throws DivergenceError unless every entry is finite and ||v|| <= cap.
void check_iterate(const Vector& v, double cap, long iteration, const char* what);

}  // namespace ncpd
