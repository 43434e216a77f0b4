#include "ncpd/solver.hpp"

#include "ncpd/errors.hpp"

#include <cmath>
#include <limits>

namespace ncpd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string to_string(Preconditioner preconditioner) {
  return preconditioner == Preconditioner::ExactM ? "exact_M" : "scalar_beta";
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::Converged:
      return "converged";
    case Termination::IterationLimit:
      return "iteration-limit";
    case Termination::EpochLimit:
      return "epoch-limit";
  }
  return "unknown";
}

LyapunovConstants LyapunovConstants::from(double alpha, double delta, double L) {
  LyapunovConstants k;
  k.a = delta / alpha;
  k.b = 1.0 / (2.0 * alpha) - L / 4.0 - delta / alpha - alpha * delta * L * L / 2.0 - delta * L +
        alpha * L * L / (4.0 * delta);
  k.c = k.b - alpha * L * L / (2.0 * delta);
  return k;
}

StepParams resolve_step_params(const CompositeProblem& problem, std::optional<double> alpha,
                               Preconditioner preconditioner, std::optional<double> op_norm) {
  if (!(problem.lipschitz_L > 0.0) || !std::isfinite(problem.lipschitz_L)) {
    throw ParameterError("problem must provide a positive Lipschitz constant L");
  }
  StepParams params{};
  params.alpha = alpha.value_or(0.9 / (3.0 * problem.lipschitz_L));
  if (!(params.alpha > 0.0) || !std::isfinite(params.alpha)) {
    throw ParameterError("step size alpha must be positive");
  }
  if (preconditioner == Preconditioner::ExactM) {
    if (!problem.op.is_scaled_identity()) {
      throw ParameterError(
          "exact_M preconditioner needs an identity or scaled-identity operator; use scalar_beta");
    }
    const double s = std::abs(problem.op.identity_scale());
    if (s == 0.0) throw ParameterError("exact_M: operator scale must be nonzero");
    params.op_norm = s;
  } else {
    params.op_norm = op_norm ? *op_norm : spectral_bounds(problem.op).op_norm;
    if (!(params.op_norm > 0.0)) throw ParameterError("scalar_beta: operator norm must be positive");
  }
  params.beta = 1.0 / (params.alpha * params.op_norm * params.op_norm);
  return params;
}

double lagrangian(const CompositeProblem& problem, const Vector& x, const Vector& y) {
  const double conj = problem.reg.conj_value(y);
  if (std::isinf(conj)) return -std::numeric_limits<double>::infinity();
  return problem.f_value(x) + y.dot(problem.op.apply(x)) - conj;
}

double lyapunov_value(const CompositeProblem& problem, const Vector& x, const Vector& y,
                      const Vector& u, const Vector& v, const LyapunovConstants& constants) {
  return lagrangian(problem, x, y) - constants.a * (x - u).squaredNorm() +
         constants.b * (x - v).squaredNorm();
}

void primal_dual_update(const CompositeProblem& problem, const Vector& grad, const Vector& x,
                        const Vector& y, const StepParams& step, Vector& x_next, Vector& y_next) {
  Vector direction = problem.op.apply_adjoint(y);
  direction += grad;
  x_next = x - step.alpha * direction;
  const Vector extrapolated = 2.0 * x_next - x;
  Vector shifted = problem.op.apply(extrapolated);
  shifted = y + step.beta * shifted;
  problem.reg.prox_conj(shifted, step.beta, y_next);
}

SolverState initial_state(const CompositeProblem& problem, const Vector& x0, const Vector& y0,
                          const StepParams& params) {
  SolverState s;
  s.k = 0;
  s.x_prev = x0;
  s.x_cur = x0;
  s.y_prev = y0;
  s.y_cur = y0;
  Vector y_next;
  primal_dual_update(problem, problem.grad_f(x0), x0, y0, params, s.x_next, y_next);
  return s;
}

SolverState step(const CompositeProblem& problem, const SolverState& state,
                 const StepParams& params) {
  // Recompute x^{k+1} together with y^{k+1}; then look one step ahead.
  SolverState next;
  next.k = state.k + 1;
  next.x_prev = state.x_cur;
  next.y_prev = state.y_cur;
  primal_dual_update(problem, problem.grad_f(state.x_cur), state.x_cur, state.y_cur, params,
                     next.x_cur, next.y_cur);
  check_iterate(next.x_cur, std::numeric_limits<double>::infinity(), next.k, "primal iterate");
  check_iterate(next.y_cur, std::numeric_limits<double>::infinity(), next.k, "dual iterate");
  Vector y_ahead;
  primal_dual_update(problem, problem.grad_f(next.x_cur), next.x_cur, next.y_cur, params,
                     next.x_next, y_ahead);
  return next;
}

Vector dual_subgradient(const CompositeProblem& problem, const SolverState& state, double beta) {
  Vector g = problem.op.apply(2.0 * state.x_cur - state.x_prev);
  g += (state.y_prev - state.y_cur) / beta;
  return g;
}

double SubgradientBlocks::norm() const {
  return std::sqrt(grad_x.squaredNorm() + dual.squaredNorm() + grad_u.squaredNorm() +
                   grad_v.squaredNorm());
}

SubgradientBlocks subgradient_d(const CompositeProblem& problem, const SolverState& state,
                                const LyapunovConstants& constants, double beta) {
  if (state.k < 1) throw StateError("subgradient_d: needs k >= 1");
  const Vector& x = state.x_cur;
  SubgradientBlocks d;
  d.grad_x = problem.grad_f(x) + problem.op.apply_adjoint(state.y_cur) -
             2.0 * constants.a * (x - state.x_next) + 2.0 * constants.b * (x - state.x_prev);
  d.dual = problem.op.apply(x) - dual_subgradient(problem, state, beta);
  d.grad_u = 2.0 * constants.a * (x - state.x_next);
  d.grad_v = 2.0 * constants.b * (state.x_prev - x);
  return d;
}

SubgradientGammas subgradient_gammas(double alpha, double L, double op_norm,
                                     const LyapunovConstants& constants) {
  return {2.0 * L + 4.0 * constants.b + 2.0 / alpha + (2.0 + alpha * L) * op_norm,
          4.0 * constants.a + 1.0 / alpha + op_norm};
}

KktResiduals kkt_residuals(const CompositeProblem& problem, const SolverState& state, double beta) {
  if (state.k < 1) throw StateError("kkt_residuals: needs k >= 1");
  const Vector& x = state.x_cur;
  const double r_x = (problem.grad_f(x) + problem.op.apply_adjoint(state.y_cur)).norm();
  const double r_y = (problem.op.apply(x) - dual_subgradient(problem, state, beta)).norm();
  return {r_x, r_y};
}

void check_iterate(const Vector& v, double cap, long iteration, const char* what) {
  if (!v.allFinite()) throw DivergenceError(std::string(what) + " is not finite", iteration);
  if (v.norm() > cap) throw DivergenceError(std::string(what) + " exceeded the norm cap", iteration);
}

SolveReport solve(const CompositeProblem& problem, const PpdgConfig& config, const Vector& x0,
                  std::optional<Vector> y0, const TraceSink& sink) {
  if (x0.size() != problem.dim()) throw ShapeError("solve: x0 has the wrong length");
  const Vector y_init = y0 ? *y0 : Vector::Zero(problem.op.out_dim());
  if (y_init.size() != problem.op.out_dim()) throw ShapeError("solve: y0 has the wrong length");
  if (config.max_iters < 0) throw ParameterError("solve: max_iters must be >= 0");
  if (!(config.delta > 0.0)) throw ParameterError("solve: delta must be positive");

  const double L = problem.lipschitz_L;
  SolveReport report;
  report.step = resolve_step_params(problem, config.alpha, config.preconditioner, config.op_norm);
  report.constants = LyapunovConstants::from(report.step.alpha, config.delta, L);
  if (config.lyapunov_checks && !report.constants.positive()) {
    throw ParameterError("alpha too large for the Lyapunov constants (need alpha < 1/(3L) at delta = 0.2)");
  }
  const StepParams& sp = report.step;
  const LyapunovConstants& lc = report.constants;
  const SubgradientGammas gammas = subgradient_gammas(sp.alpha, L, sp.op_norm, lc);
  const bool exact = config.preconditioner == Preconditioner::ExactM;
  DiagnosticCounts& diag = report.diagnostics;

  Stopwatch clock(config.record_time);
  SolverState st;
  st.x_prev = x0;
  st.x_cur = x0;
  st.y_prev = y_init;
  st.y_cur = y_init;
  Vector y_next;
  double lyap_prev = kNaN;
  double dx_prev = 0.0;   // ||x^k - x^{k-1}||
  double dx_prev2 = 0.0;  // ||x^{k-1} - x^{k-2}||
  report.reason = Termination::IterationLimit;

  for (long k = 0; k < config.max_iters; ++k) {
    st.k = k;
    const Vector grad = problem.grad_f(st.x_cur);
    primal_dual_update(problem, grad, st.x_cur, st.y_cur, sp, st.x_next, y_next);
    check_iterate(st.x_next, config.norm_cap, k + 1, "primal iterate");
    check_iterate(y_next, config.norm_cap, k + 1, "dual iterate");

    TraceRecord rec;
    rec.iter = k;
    rec.objective = problem.objective(st.x_cur);
    rec.lagrangian = lagrangian(problem, st.x_cur, st.y_cur);
    rec.lyapunov = rec.lagrangian - lc.a * (st.x_cur - st.x_next).squaredNorm() +
                   lc.b * (st.x_cur - st.x_prev).squaredNorm();
    rec.dx_norm = (st.x_next - st.x_cur).norm();
    rec.dy_norm = (y_next - st.y_cur).norm();
    rec.kkt_x = (grad + problem.op.apply_adjoint(st.y_cur)).norm();
    rec.kkt_y = k >= 1
                    ? (problem.op.apply(st.x_cur) - dual_subgradient(problem, st, sp.beta)).norm()
                    : kNaN;

    if (config.lyapunov_checks && k >= 1) {
      const double d_norm = subgradient_d(problem, st, lc, sp.beta).norm();
      ++diag.subgradient_checks;
      if (d_norm > gammas.gamma1 * dx_prev + gammas.gamma2 * rec.dx_norm + config.bound_slack) {
        ++diag.subgradient_violations;
      }
      const double dual_change = problem.op.apply_adjoint(st.y_cur - st.y_prev).norm();
      ++diag.dual_bound_checks;
      if (dual_change > (1.0 / sp.alpha + L) * dx_prev + rec.dx_norm / sp.alpha + config.bound_slack) {
        ++diag.dual_bound_violations;
      }
      if (k >= 2) {
        const double lhs = rec.lyapunov + lc.c * (dx_prev * dx_prev + dx_prev2 * dx_prev2);
        const double excess = lhs - lyap_prev;
        ++diag.descent_checks;
        if (excess > config.descent_rel_tol * (1.0 + std::abs(lyap_prev))) {
          ++diag.descent_violations;
          diag.worst_descent_excess = std::max(diag.worst_descent_excess, excess);
          if (exact) throw DiagnosticError("Lyapunov descent inequality violated", k - 1);
        }
      }
    }
    diag.sum_dx_sq += rec.dx_norm * rec.dx_norm;
    diag.sum_dy_sq += rec.dy_norm * rec.dy_norm;
    rec.elapsed_s = clock.seconds();
    if (sink) sink(rec);

    lyap_prev = rec.lyapunov;
    dx_prev2 = dx_prev;
    dx_prev = rec.dx_norm;
    st.x_prev = std::move(st.x_cur);
    st.x_cur = st.x_next;
    st.y_prev = std::move(st.y_cur);
    st.y_cur = y_next;
    report.iters = k + 1;
    if (std::max(rec.dx_norm, rec.dy_norm) <= config.tol_step) {
      report.reason = Termination::Converged;
      break;
    }
  }

  report.x = st.x_cur;
  report.y = st.y_cur;
  report.objective = problem.objective(st.x_cur);
  report.kkt_x = (problem.grad_f(st.x_cur) + problem.op.apply_adjoint(st.y_cur)).norm();
  st.k = report.iters;
  report.kkt_y = report.iters >= 1
                     ? (problem.op.apply(st.x_cur) - dual_subgradient(problem, st, sp.beta)).norm()
                     : kNaN;
  return report;
}

}  // namespace ncpd
