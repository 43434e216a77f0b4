#include "ncpd/sppdg.hpp"

#include "ncpd/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace ncpd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunSetup {
  CompositeProblem composite;
  StepParams step;
  SppdgLyapunovConstants constants;
  Index batch;
  long period;
};

void run_seed(const FiniteSumProblem& problem, const RunSetup& setup, EstimatorKind kind,
              const SppdgConfig& config, const Vector& x0, const Vector& y_init, SppdgRun& run) {
  const CompositeProblem& cp = setup.composite;
  const StepParams& sp = setup.step;
  const SppdgLyapunovConstants& lc = setup.constants;
  GradientEstimator estimator(kind, problem, setup.batch, run.seed, setup.period);
  estimator.reset(x0);
  const long eval_budget = config.max_epochs > 0 ? config.max_epochs * problem.N : 0;

  Stopwatch clock(config.record_time);
  SolverState st;
  st.x_prev = x0;
  st.x_cur = x0;
  st.y_prev = y_init;
  st.y_cur = y_init;
  Vector x_prev2 = x0;
  Vector y_next;
  SolveReport& report = run.report;
  report.step = sp;
  report.reason = Termination::IterationLimit;

  for (long k = 0; config.max_iters <= 0 || k < config.max_iters; ++k) {
    st.k = k;
    const Vector g = estimator.estimate(k, st.x_cur);
    primal_dual_update(cp, g, st.x_cur, st.y_cur, sp, st.x_next, y_next);
    check_iterate(st.x_next, config.norm_cap, k + 1, "primal iterate");
    check_iterate(y_next, config.norm_cap, k + 1, "dual iterate");

    TraceRecord rec;
    rec.iter = k;
    rec.comp_evals = estimator.component_evals();
    rec.objective = cp.objective(st.x_cur);
    rec.lagrangian = lagrangian(cp, st.x_cur, st.y_cur);
    rec.lyapunov = rec.lagrangian - lc.a * (st.x_cur - st.x_next).squaredNorm() +
                   lc.b * (st.x_cur - st.x_prev).squaredNorm() +
                   lc.c * (st.x_prev - x_prev2).squaredNorm();
    rec.dx_norm = (st.x_next - st.x_cur).norm();
    rec.dy_norm = (y_next - st.y_cur).norm();
    rec.kkt_x = (cp.grad_f(st.x_cur) + cp.op.apply_adjoint(st.y_cur)).norm();
    rec.kkt_y = k >= 1 ? (cp.op.apply(st.x_cur) - dual_subgradient(cp, st, sp.beta)).norm() : kNaN;
    report.diagnostics.sum_dx_sq += rec.dx_norm * rec.dx_norm;
    report.diagnostics.sum_dy_sq += rec.dy_norm * rec.dy_norm;
    rec.elapsed_s = clock.seconds();
    run.trace.push_back(rec);

    x_prev2 = std::move(st.x_prev);
    st.x_prev = std::move(st.x_cur);
    st.x_cur = st.x_next;
    st.y_prev = std::move(st.y_cur);
    st.y_cur = y_next;
    report.iters = k + 1;
    if (std::max(rec.dx_norm, rec.dy_norm) <= config.tol_step) {
      report.reason = Termination::Converged;
      break;
    }
    if (eval_budget > 0 && estimator.component_evals() >= eval_budget) {
      report.reason = Termination::EpochLimit;
      break;
    }
  }

  report.x = st.x_cur;
  report.y = st.y_cur;
  report.objective = cp.objective(st.x_cur);
  report.kkt_x = (cp.grad_f(st.x_cur) + cp.op.apply_adjoint(st.y_cur)).norm();
  st.k = report.iters;
  report.kkt_y = report.iters >= 1
                     ? (cp.op.apply(st.x_cur) - dual_subgradient(cp, st, sp.beta)).norm()
                     : kNaN;
  run.ok = true;
}

std::vector<AggregateRecord> aggregate(const std::vector<SppdgRun>& runs) {
  std::size_t longest = 0;
  for (const auto& r : runs) {
    if (r.ok) longest = std::max(longest, r.trace.size());
  }
  std::vector<AggregateRecord> out;
  out.reserve(longest);
  for (std::size_t k = 0; k < longest; ++k) {
    AggregateRecord agg;
    agg.iter = static_cast<long>(k);
    for (const auto& r : runs) {
      if (!r.ok || k >= r.trace.size()) continue;
      const TraceRecord& t = r.trace[k];
      if (agg.seeds_ok == 0) agg.comp_evals = t.comp_evals;
      ++agg.seeds_ok;
      agg.mean_objective += t.objective;
      agg.mean_lagrangian_s += t.lagrangian;
      agg.mean_lyapunov_s += t.lyapunov;
      agg.mean_dx += t.dx_norm;
      agg.mean_dy += t.dy_norm;
    }
    const double n = agg.seeds_ok;
    agg.mean_objective /= n;
    agg.mean_lagrangian_s /= n;
    agg.mean_lyapunov_s /= n;
    agg.mean_dx /= n;
    agg.mean_dy /= n;
    out.push_back(agg);
  }
  return out;
}

}  // namespace

SppdgLyapunovConstants SppdgLyapunovConstants::from(double alpha, double kappa, double L) {
  const double d1 = kDelta1;
  const double d2 = kDelta2;
  SppdgLyapunovConstants k;
  k.e0 = 1.0 / (3.0 * alpha) - (d1 + L) / 6.0 - kappa / (3.0 * d1) - 4.0 * d2 * L / 3.0 -
         4.0 * d2 / (3.0 * alpha) - 2.0 * d2 * alpha * L * L / 3.0 - alpha * L * L / (2.0 * d2) -
         2.0 * alpha * kappa / d2 - 8.0 * d2 * alpha * kappa / 3.0;
  k.a = k.e0 + 2.0 * d2 / alpha + 2.0 * d2 * alpha * kappa;
  k.b = k.e0 + 9.0 * alpha * kappa / (2.0 * d2) + 2.0 * d2 * alpha * kappa + kappa / (2.0 * d1) +
        3.0 * alpha * L * L / (2.0 * d2);
  k.c = 3.0 * alpha * kappa / (2.0 * d2);
  return k;
}

double sppdg_alpha_limit(double L, double kappa_hat) {
  return 1.0 / (2.0 * (3.0 + 7.0 * L + 6.0 * kappa_hat));
}

double resolve_sppdg_alpha(const SppdgConfig& config, double L) {
  if (!(config.kappa_hat >= 0.0) || !std::isfinite(config.kappa_hat)) {
    throw ParameterError("kappa_hat must be a nonnegative number");
  }
  if (config.kappa_hat > 0.0) {
    const double limit = sppdg_alpha_limit(L, config.kappa_hat);
    if (!config.alpha) return 0.9 * limit;
    if (!(*config.alpha < limit)) {
      throw ParameterError("alpha must be below 1/(2(3 + 7L + 6 kappa_hat)) = " +
                           std::to_string(limit));
    }
    return *config.alpha;
  }
  return config.alpha.value_or(0.9 / (3.0 * L));
}

double lagrangian_s(const FiniteSumProblem& problem, const Vector& x, const Vector& y) {
  const double conj = problem.reg.conj_value(y);
  if (std::isinf(conj)) return -std::numeric_limits<double>::infinity();
  return problem.full_value(x) + y.dot(problem.op.apply(x)) - conj;
}

int SppdgResult::seeds_ok() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const SppdgRun& r) { return r.ok; }));
}

SppdgResult solve_stochastic(const FiniteSumProblem& problem, EstimatorKind kind,
                             const SppdgConfig& config, const Vector& x0, std::optional<Vector> y0) {
  if (x0.size() != problem.dim()) throw ShapeError("solve_stochastic: x0 has the wrong length");
  const Vector y_init = y0 ? *y0 : Vector::Zero(problem.op.out_dim());
  if (y_init.size() != problem.op.out_dim()) {
    throw ShapeError("solve_stochastic: y0 has the wrong length");
  }
  if (config.seeds.empty()) throw ParameterError("solve_stochastic: no seeds given");
  if (config.max_epochs <= 0 && config.max_iters <= 0) {
    throw ParameterError("solve_stochastic: set max_epochs or max_iters");
  }
  if (config.batch < 0 || config.batch > problem.N) {
    throw ParameterError("solve_stochastic: batch size must lie in [1, N]");
  }

  SppdgResult result;
  const double L = problem.lipschitz_L;
  const double alpha = resolve_sppdg_alpha(config, L);
  const CompositeProblem composite = problem.as_composite();
  result.step = resolve_step_params(composite, alpha, config.preconditioner, config.op_norm);
  result.constants = SppdgLyapunovConstants::from(result.step.alpha, config.kappa_hat, L);
  result.batch = config.batch > 0 ? config.batch : std::max<Index>(1, problem.N / 100);
  // Validates batch and derives the default period.
  result.period = GradientEstimator(kind, problem, result.batch, 0, config.period).period();

  const RunSetup setup{composite, result.step, result.constants, result.batch, result.period};
  result.runs.resize(config.seeds.size());
  for (std::size_t i = 0; i < config.seeds.size(); ++i) result.runs[i].seed = config.seeds[i];

  auto work = [&](std::size_t i) {
    SppdgRun& run = result.runs[i];
    try {
      run_seed(problem, setup, kind, config, x0, y_init, run);
    } catch (const DivergenceError& e) {
      run.ok = false;
      run.error = e.what();
    }
  };
  const std::size_t workers =
      config.parallel ? std::min<std::size_t>(config.seeds.size(),
                                              std::max(1u, std::thread::hardware_concurrency()))
                      : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < config.seeds.size(); i = next++) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& r : result.runs) {
    if (!r.ok) result.warnings.push_back("seed " + std::to_string(r.seed) + " failed: " + r.error);
  }
  result.aggregate = aggregate(result.runs);
  return result;
}

DescentReport expectation_descent_report(const std::vector<std::vector<TraceRecord>>& traces,
                                         const SppdgLyapunovConstants& constants, double slack) {
  if (traces.size() < 2) throw StateError("expectation_descent_report: needs at least two seeds");
  std::size_t common = traces.front().size();
  for (const auto& t : traces) common = std::min(common, t.size());
  const double e0 = std::max(constants.e0, 0.0);
  const double n = static_cast<double>(traces.size());
  auto mean_lyap = [&](std::size_t k) {
    double s = 0.0;
    for (const auto& t : traces) s += t[k].lyapunov;
    return s / n;
  };
  DescentReport report;
  for (std::size_t k = 0; k + 1 < common; ++k) {
    double step_sq = 0.0;
    for (const auto& t : traces) step_sq += t[k].dx_norm * t[k].dx_norm;
    step_sq /= n;
    const double now = mean_lyap(k);
    const double next = mean_lyap(k + 1);
    ++report.checks;
    if (next + e0 * step_sq > now + slack * (1.0 + std::abs(now))) ++report.violations;
  }
  return report;
}

}  // namespace ncpd
