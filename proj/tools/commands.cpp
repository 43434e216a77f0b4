#include "commands.hpp"

#include "ncpd/conjprox.hpp"
#include "ncpd/dataio.hpp"
#include "ncpd/errors.hpp"
#include "ncpd/linops.hpp"
#include "ncpd/problems.hpp"
#include "ncpd/solver.hpp"
#include "ncpd/sppdg.hpp"
#include "ncpd/vrgrad.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>

namespace ncpd::cli {

namespace {

// Resolved flag values, echoed as the `#` line of every CSV.
class FlagEcho {
 public:
  explicit FlagEcho(std::string command) : text_(std::move(command)) {}
  FlagEcho& add(const std::string& key, const std::string& value) {
    text_ += " " + key + "=" + value;
    return *this;
  }
  FlagEcho& add(const std::string& key, double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return add(key, std::string(buf, res.ptr));
  }
  FlagEcho& add(const std::string& key, long value) { return add(key, std::to_string(value)); }
  const std::string& str() const noexcept { return text_; }

 private:
  std::string text_;
};

class Summary {
 public:
  void set(const std::string& key, const std::string& value) { lines_ += key + "=" + value + "\n"; }
  void set(const std::string& key, double value) { set(key, format_real(value)); }
  void set(const std::string& key, long value) { set(key, std::to_string(value)); }
  const std::string& str() const noexcept { return lines_; }

 private:
  std::string lines_;
};

std::pair<Index, Index> parse_pair(const std::string& text, char sep, const char* flag) {
  const auto at = text.find(sep);
  try {
    if (at == std::string::npos) throw std::invalid_argument("");
    std::size_t used_a = 0;
    std::size_t used_b = 0;
    const std::string a = text.substr(0, at);
    const std::string b = text.substr(at + 1);
    const long first = std::stol(a, &used_a);
    const long second = std::stol(b, &used_b);
    if (used_a != a.size() || used_b != b.size() || first < 1 || second < 1) {
      throw std::invalid_argument("");
    }
    return {first, second};
  } catch (const std::exception&) {
    throw ParameterError(std::string(flag) + ": expected two positive integers separated by '" +
                         sep + "', got '" + text + "'");
  }
}

Boundary parse_boundary(const std::string& name) {
  return name == "periodic" ? Boundary::Periodic : Boundary::ZeroPad;
}

bool timing_enabled(const std::string& value) { return value == "on"; }

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return std::filesystem::path(dir);
}

// ---------------------------------------------------------------- denoise

struct DenoiseOptions {
  std::string input;
  std::string synthetic;
  double sigma = 0.05;
  long seed = 1;
  double lambda = 0.1;
  double c1 = -1.0;
  double c2 = 1.0;
  std::string boundary = "periodic";
  double alpha = 0.0;
  double delta = 0.2;
  long max_iters = 10000;
  double tol = 1e-8;
  std::string out = ".";
  std::string timing = "on";
  CLI::Option* alpha_opt = nullptr;
};

void add_denoise(CLI::App& app, DenoiseOptions& o) {
  auto* src = app.add_option("--input", o.input, "Clean grayscale PGM (P2/P5); noise is added to it");
  auto* syn = app.add_option("--synthetic", o.synthetic,
                             "Use the built-in piecewise-constant image of size HxW, e.g. 64x64");
  src->excludes(syn);
  app.add_option("--sigma", o.sigma, "Gaussian noise level on [0,1] intensities")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", o.seed, "Noise seed")->capture_default_str();
  app.add_option("--lambda", o.lambda, "l0 weight (published denoising setting: 0.1)")
      ->capture_default_str();
  app.add_option("--c1", o.c1, "Lower bound on image gradients (published setting: -1)")
      ->capture_default_str();
  app.add_option("--c2", o.c2, "Upper bound on image gradients (published setting: 1)")
      ->capture_default_str();
  app.add_option("--boundary", o.boundary, "Gradient boundary handling")
      ->capture_default_str()
      ->check(CLI::IsMember({"periodic", "zero-pad"}));
  o.alpha_opt = app.add_option("--alpha", o.alpha,
                               "Primal step (default 0.9/(3L); must stay below 1/(3L))");
  app.add_option("--delta", o.delta, "Lyapunov weight delta")->capture_default_str();
  app.add_option("--max-iters", o.max_iters, "Iteration limit")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--tol", o.tol, "Stop when both step norms fall below this")
      ->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--timing", o.timing, "Record wall-clock times (off writes zeros)")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
}

int cmd_denoise(const DenoiseOptions& o, std::ostream& out) {
  if (o.input.empty() && o.synthetic.empty()) {
    throw ParameterError("denoise: give --input PATH or --synthetic HxW");
  }
  ImageBuffer clean;
  if (!o.synthetic.empty()) {
    const auto [h, w] = parse_pair(o.synthetic, 'x', "--synthetic");
    clean = ImageBuffer{h, w, synthetic_piecewise_image(h, w)};
  }
  const Boundary boundary = parse_boundary(o.boundary);
  PpdgConfig cfg;
  if (o.alpha_opt->count() > 0) cfg.alpha = o.alpha;
  cfg.delta = o.delta;
  cfg.max_iters = o.max_iters;
  cfg.tol_step = o.tol;
  cfg.preconditioner = Preconditioner::ScalarBeta;
  cfg.record_time = timing_enabled(o.timing);
  // Checks the regularizer parameters before any file is read.
  Regularizer::l0_box(o.lambda, o.c1, o.c2);

  if (!o.input.empty()) clean = read_pgm(o.input);
  const ImageBuffer noisy = add_gaussian_noise(clean, o.sigma, static_cast<std::uint64_t>(o.seed));
  const CompositeProblem problem =
      build_denoise(noisy.pixels, noisy.height, noisy.width, o.lambda, o.c1, o.c2, boundary);
  const auto dir = prepare_out_dir(o.out);

  FlagEcho echo("denoise");
  echo.add("input", o.input.empty() ? std::string("-") : o.input)
      .add("synthetic", o.synthetic.empty() ? std::string("-") : o.synthetic)
      .add("sigma", o.sigma)
      .add("seed", o.seed)
      .add("lambda", o.lambda)
      .add("c1", o.c1)
      .add("c2", o.c2)
      .add("boundary", o.boundary)
      .add("alpha", o.alpha_opt->count() ? format_real(o.alpha) : std::string("default"))
      .add("delta", o.delta)
      .add("max_iters", o.max_iters)
      .add("tol", o.tol)
      .add("preconditioner", to_string(cfg.preconditioner));

  Stopwatch clock(cfg.record_time);
  TraceCollector trace;
  const SolveReport report = solve(problem, cfg, noisy.pixels, std::nullopt, trace.sink());
  const double seconds = clock.seconds();

  ImageBuffer denoised{noisy.height, noisy.width, report.x};
  write_trace_csv((dir / "trace.csv").string(), trace.records, echo.str());
  write_pgm((dir / "denoised.pgm").string(), denoised);
  write_pgm((dir / "noisy.pgm").string(), noisy);

  const double psnr_in = psnr(noisy.pixels, clean.pixels, noisy.height, noisy.width);
  const double psnr_out = psnr(report.x, clean.pixels, noisy.height, noisy.width);
  const DiagnosticCounts& d = report.diagnostics;
  Summary s;
  s.set("psnr_in", psnr_in);
  s.set("psnr_out", psnr_out);
  s.set("iters", report.iters);
  s.set("seconds", seconds);
  s.set("reason", to_string(report.reason));
  s.set("objective", report.objective);
  s.set("kkt_x", report.kkt_x);
  s.set("kkt_y", report.kkt_y);
  s.set("alpha", report.step.alpha);
  s.set("beta", report.step.beta);
  s.set("op_norm", report.step.op_norm);
  s.set("descent_violations", d.descent_violations);
  s.set("descent_checks", d.descent_checks);
  s.set("sum_dx_sq", d.sum_dx_sq);
  s.set("sum_dy_sq", d.sum_dy_sq);
  write_file((dir / "summary.txt").string(), s.str());

  out << "psnr_in,psnr_out,iters,seconds\n"
      << format_real(psnr_in) << ',' << format_real(psnr_out) << ',' << report.iters << ','
      << format_real(seconds) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- lasso

struct LassoOptions {
  std::string input;
  std::string synthetic;
  long n_hint = 0;
  long data_seed = 1;
  std::string graph;
  double graph_threshold = 0.5;
  bool normalize_rows = false;
  double lambda = 1e-4;
  double p = 0.5;
  double r = 1.0;
  std::string estimator = "svrg";
  long batch = 0;
  long period = 0;
  long seeds = 1;
  double alpha = 0.0;
  double kappa_hat = 0.0;
  long max_epochs = 50;
  long max_iters = 0;
  double tol = 1e-8;
  std::string out = ".";
  std::string timing = "on";
  CLI::Option* alpha_opt = nullptr;
};

void add_lasso(CLI::App& app, LassoOptions& o) {
  auto* src = app.add_option("--input", o.input, "LIBSVM file with two-class labels");
  auto* syn = app.add_option("--synthetic", o.synthetic,
                             "Generate N samples with n features instead, e.g. 200,20");
  src->excludes(syn);
  app.add_option("--n-hint", o.n_hint, "Feature count for --input (default: largest index)");
  app.add_option("--data-seed", o.data_seed, "Seed for --synthetic data")->capture_default_str();
  app.add_option("--graph", o.graph, "Square symmetric V as CSV (default: correlation graph)");
  app.add_option("--graph-threshold", o.graph_threshold,
                 "Correlation threshold of the substitute graph builder")
      ->capture_default_str();
  app.add_flag("--normalize-rows", o.normalize_rows, "Scale every sample to unit norm (L = 0.7699)");
  app.add_option("--lambda", o.lambda, "lp weight (published setting: 1e-4)")->capture_default_str();
  app.add_option("--p", o.p, "lp exponent in (0,1) (published setting: 0.5)")->capture_default_str();
  app.add_option("--r", o.r, "Radius of the box on Ax (published setting: 1)")->capture_default_str();
  app.add_option("--estimator", o.estimator, "Gradient estimator; full = exact gradient")
      ->capture_default_str()
      ->check(CLI::IsMember({"svrg", "saga", "sarah", "full"}));
  app.add_option("--batch", o.batch, "Mini-batch size (default floor(0.01 N), at least 1)");
  app.add_option("--period", o.period, "Snapshot/restart period (default ceil(N/b))");
  app.add_option("--seeds", o.seeds, "Number of replicated runs, seeds 1..K")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  o.alpha_opt = app.add_option("--alpha", o.alpha, "Primal step (default from --kappa-hat)");
  app.add_option("--kappa-hat", o.kappa_hat,
                 "Variance proxy; > 0 enforces alpha < 1/(2(3 + 7L + 6 kappa_hat))")
      ->capture_default_str();
  app.add_option("--max-epochs", o.max_epochs, "Budget in units of N component gradients")
      ->capture_default_str();
  app.add_option("--max-iters", o.max_iters, "Iteration cap (0: none)")->capture_default_str();
  app.add_option("--tol", o.tol, "Stop when both step norms fall below this")
      ->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--timing", o.timing, "Record wall-clock times (off writes zeros)")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
}

int cmd_lasso(const LassoOptions& o, std::ostream& out, std::ostream& err) {
  if (o.input.empty() && o.synthetic.empty()) {
    throw ParameterError("lasso: give --input PATH or --synthetic N,n");
  }
  Regularizer::lp_ball(o.lambda, o.p, o.r);
  if (o.batch < 0 || o.period < 0 || o.max_epochs < 0 || o.max_iters < 0) {
    throw ParameterError("lasso: --batch, --period, --max-epochs and --max-iters must be >= 0");
  }
  if (o.n_hint < 0) throw ParameterError("lasso: --n-hint must be positive");
  std::pair<Index, Index> shape{0, 0};
  if (!o.synthetic.empty()) shape = parse_pair(o.synthetic, ',', "--synthetic");

  Matrix rows;
  Vector labels;
  if (!o.synthetic.empty()) {
    auto data = synthetic_classification(shape.first, shape.second,
                                         static_cast<std::uint64_t>(o.data_seed));
    rows = std::move(data.rows);
    labels = std::move(data.labels);
  } else {
    const SparseDataset data =
        parse_libsvm(o.input, o.n_hint > 0 ? std::optional<Index>(o.n_hint) : std::nullopt);
    rows = data.to_dense();
    labels = data.label_vector();
  }
  Matrix V = o.graph.empty() ? build_precision_graph(rows, o.graph_threshold)
                             : validate_graph(load_dense_csv(o.graph), rows.cols());
  const FiniteSumProblem problem =
      build_fused_lasso(rows, labels, std::move(V), o.lambda, o.p, o.r, o.normalize_rows);

  const bool full = o.estimator == "full";
  const EstimatorKind kind = full ? EstimatorKind::Svrg : parse_estimator_kind(o.estimator);
  SppdgConfig cfg;
  if (o.alpha_opt->count() > 0) cfg.alpha = o.alpha;
  cfg.kappa_hat = o.kappa_hat;
  cfg.max_epochs = o.max_epochs;
  cfg.max_iters = o.max_iters;
  cfg.tol_step = o.tol;
  cfg.batch = full ? problem.N : o.batch;
  cfg.period = o.period;
  cfg.record_time = timing_enabled(o.timing);
  cfg.seeds.clear();
  for (long s = 1; s <= o.seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  const auto dir = prepare_out_dir(o.out);

  Stopwatch clock(cfg.record_time);
  const SppdgResult result = solve_stochastic(problem, kind, cfg, Vector::Zero(problem.dim()));
  const double seconds = clock.seconds();

  FlagEcho echo("lasso");
  echo.add("input", o.input.empty() ? std::string("-") : o.input)
      .add("synthetic", o.synthetic.empty() ? std::string("-") : o.synthetic)
      .add("data_seed", o.data_seed)
      .add("graph", o.graph.empty() ? std::string("correlation") : o.graph)
      .add("graph_threshold", o.graph_threshold)
      .add("normalize_rows", std::string(o.normalize_rows ? "on" : "off"))
      .add("lambda", o.lambda)
      .add("p", o.p)
      .add("r", o.r)
      .add("estimator", o.estimator)
      .add("batch", static_cast<long>(result.batch))
      .add("period", result.period)
      .add("seeds", o.seeds)
      .add("alpha", result.step.alpha)
      .add("kappa_hat", o.kappa_hat)
      .add("max_epochs", o.max_epochs)
      .add("max_iters", o.max_iters)
      .add("tol", o.tol)
      .add("preconditioner", to_string(cfg.preconditioner));

  Summary s;
  s.set("estimator", o.estimator);
  s.set("N", static_cast<long>(problem.N));
  s.set("n", static_cast<long>(problem.dim()));
  s.set("batch", static_cast<long>(result.batch));
  s.set("period", result.period);
  s.set("alpha", result.step.alpha);
  s.set("beta", result.step.beta);
  s.set("op_norm", result.step.op_norm);
  s.set("L", problem.lipschitz_L);
  s.set("e0", result.constants.e0);
  s.set("seeds", o.seeds);
  s.set("seeds_ok", static_cast<long>(result.seeds_ok()));

  double sum_obj = 0.0;
  double sum_proj = 0.0;
  long ok = 0;
  std::vector<std::vector<TraceRecord>> traces;
  for (const SppdgRun& run : result.runs) {
    const std::string key = "seed." + std::to_string(run.seed) + ".";
    if (!run.ok) {
      s.set(key + "status", "failed");
      err << "warning: seed " << run.seed << " failed: " << run.error << '\n';
      continue;
    }
    const Vector ax = problem.op.apply(run.report.x);
    const double projected = problem.full_value(run.report.x) +
                             problem.reg.value_h(problem.reg.project_domain(ax));
    s.set(key + "status", "ok");
    s.set(key + "iters", run.report.iters);
    s.set(key + "reason", to_string(run.report.reason));
    s.set(key + "objective", run.report.objective);
    s.set(key + "objective_projected", projected);
    s.set(key + "domain_violation", (ax - problem.reg.project_domain(ax)).cwiseAbs().maxCoeff());
    s.set(key + "kkt_x", run.report.kkt_x);
    s.set(key + "kkt_y", run.report.kkt_y);
    s.set(key + "sum_dx_sq", run.report.diagnostics.sum_dx_sq);
    s.set(key + "sum_dy_sq", run.report.diagnostics.sum_dy_sq);
    sum_obj += run.report.objective;
    sum_proj += projected;
    ++ok;
    traces.push_back(run.trace);
    write_trace_csv((dir / ("trace_seed" + std::to_string(run.seed) + ".csv")).string(), run.trace,
                    echo.str() + " run_seed=" + std::to_string(run.seed));
  }
  write_aggregate_csv((dir / "aggregate.csv").string(), result.aggregate, echo.str());
  if (ok == 0) {
    write_file((dir / "summary.txt").string(), s.str());
    err << "error: every seed failed\n";
    return kExitRuntime;
  }
  const double mean_obj = sum_obj / static_cast<double>(ok);
  const double mean_proj = sum_proj / static_cast<double>(ok);
  s.set("mean_objective", mean_obj);
  s.set("mean_objective_projected", mean_proj);
  if (traces.size() >= 2) {
    const DescentReport dr = expectation_descent_report(traces, result.constants);
    s.set("descent_checks", dr.checks);
    s.set("descent_violations", dr.violations);
  }
  s.set("seconds", seconds);
  write_file((dir / "summary.txt").string(), s.str());

  out << "estimator=" << o.estimator << " seeds_ok=" << ok << "/" << o.seeds
      << " mean_objective=" << format_real(mean_obj)
      << " mean_objective_projected=" << format_real(mean_proj)
      << " seconds=" << format_real(seconds) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- prox-check

struct ProxOptions {
  std::string reg;
  double lambda = 0.1;
  double c1 = -1.0;
  double c2 = 1.0;
  double p = 0.5;
  double r = 1.0;
  double gamma = 3.7;
  long points = 1000;
  long seed = 1;
  double tol = 5e-4;
};

void add_prox(CLI::App& app, ProxOptions& o) {
  app.add_option("--reg", o.reg, "Regularizer: l1, l0 (l0 with box), lp (lp with ball), scad")
      ->required()
      ->check(CLI::IsMember({"l1", "l0", "lp", "scad"}));
  app.add_option("--lambda", o.lambda, "Weight lambda > 0")->capture_default_str();
  app.add_option("--c1", o.c1, "l0: lower box bound < 0")->capture_default_str();
  app.add_option("--c2", o.c2, "l0: upper box bound > 0")->capture_default_str();
  app.add_option("--p", o.p, "lp: exponent in (0,1)")->capture_default_str();
  app.add_option("--r", o.r, "lp, scad: ball radius > 0")->capture_default_str();
  app.add_option("--gamma", o.gamma, "scad: shape gamma > 2")->capture_default_str();
  app.add_option("--points", o.points, "Seeded inputs per beta (betas 0.1, 1, 10)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Input seed")->capture_default_str();
  app.add_option("--tol", o.tol, "Largest accepted |closed form - grid oracle|")
      ->capture_default_str();
}

Regularizer make_regularizer(const ProxOptions& o) {
  if (o.reg == "l1") return Regularizer::l1(o.lambda);
  if (o.reg == "l0") return Regularizer::l0_box(o.lambda, o.c1, o.c2);
  if (o.reg == "lp") return Regularizer::lp_ball(o.lambda, o.p, o.r);
  return Regularizer::scad_box(o.lambda, o.gamma, o.r);
}

int cmd_prox_check(const ProxOptions& o, std::ostream& out) {
  const Regularizer reg = make_regularizer(o);
  const ProxSweep sweep =
      prox_conformance_sweep(reg, o.points, {0.1, 1.0, 10.0}, static_cast<std::uint64_t>(o.seed));
  const bool pass = sweep.max_deviation <= o.tol;
  out << "regularizer=" << reg.describe() << '\n'
      << "points=" << sweep.points << '\n'
      << "max_deviation=" << format_real(sweep.max_deviation) << '\n'
      << "worst_v=" << format_real(sweep.worst_v) << '\n'
      << "worst_beta=" << format_real(sweep.worst_beta) << '\n'
      << "result=" << (pass ? "pass" : "fail") << '\n';
  return pass ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------- spectra

struct SpectraOptions {
  std::string op = "identity";
  long n = 4;
  double scale = 1.0;
  std::string shape = "8x8";
  std::string boundary = "periodic";
  std::string matrix;
  long seed = 0;
  int iterations = kSpectralIterations;
};

void add_spectra(CLI::App& app, SpectraOptions& o) {
  app.add_option("--op", o.op, "Operator kind")
      ->capture_default_str()
      ->check(CLI::IsMember({"identity", "scaled", "gradient", "stacked", "dense"}));
  app.add_option("--n", o.n, "Dimension for identity, scaled and stacked (V = I) kinds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--scale", o.scale, "Scale of the scaled identity")->capture_default_str();
  app.add_option("--shape", o.shape, "Image size HxW of the gradient operator")
      ->capture_default_str();
  app.add_option("--boundary", o.boundary, "Gradient boundary handling")
      ->capture_default_str()
      ->check(CLI::IsMember({"periodic", "zero-pad"}));
  app.add_option("--matrix", o.matrix, "CSV matrix: the dense A, or V of the stacked [V; I]");
  app.add_option("--seed", o.seed, "Seed of the power iterations")->capture_default_str();
  app.add_option("--iterations", o.iterations, "Power iterations for large operators")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

int cmd_spectra(const SpectraOptions& o, std::ostream& out) {
  LinearOperator op = LinearOperator::identity(1);
  if (o.op == "identity") {
    op = LinearOperator::identity(o.n);
  } else if (o.op == "scaled") {
    op = LinearOperator::scaled_identity(o.n, o.scale);
  } else if (o.op == "gradient") {
    const auto [h, w] = parse_pair(o.shape, 'x', "--shape");
    op = LinearOperator::gradient2d(h, w, parse_boundary(o.boundary));
  } else if (o.op == "stacked") {
    op = LinearOperator::stacked(o.matrix.empty() ? Matrix(Matrix::Identity(o.n, o.n))
                                                  : load_dense_csv(o.matrix));
  } else {
    if (o.matrix.empty()) throw ParameterError("spectra: --op dense needs --matrix");
    op = LinearOperator::dense(load_dense_csv(o.matrix));
  }
  const SpectralBounds sb = spectral_bounds(op, static_cast<std::uint64_t>(o.seed), o.iterations);
  out << "operator=" << to_string(op.kind()) << '\n'
      << "in_dim=" << op.in_dim() << '\n'
      << "out_dim=" << op.out_dim() << '\n'
      << "op_norm=" << format_real(sb.op_norm) << '\n'
      << "min_eig_gram=" << format_real(sb.min_eig_gram) << '\n'
      << "hat_lambda=" << format_real(sb.hat_lambda) << '\n'
      << "method=" << (sb.exact ? "exact" : "power-iteration") << '\n'
      << "surjective=" << (sb.surjective() ? "yes" : "no") << '\n';
  if (!sb.surjective()) {
    out << "note: A A^T is singular, so the convergence guarantees that assume a surjective A "
           "do not apply; the exact_M preconditioner is unavailable and scalar_beta is used\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Primal-dual solvers for nonconvex composite problems"};
  app.name(args.empty() ? "ncpd" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);

  DenoiseOptions denoise;
  LassoOptions lasso;
  ProxOptions prox;
  SpectraOptions spectra;
  auto* sub_denoise = app.add_subcommand("denoise", "l0 gradient denoising with the deterministic solver");
  auto* sub_lasso = app.add_subcommand("lasso", "Sigmoid-loss graph-guided fused lasso, stochastic solver");
  auto* sub_prox = app.add_subcommand("prox-check", "Closed-form conjugate prox against a grid oracle");
  auto* sub_spectra = app.add_subcommand("spectra", "Operator norm and surjectivity diagnostics");
  add_denoise(*sub_denoise, denoise);
  add_lasso(*sub_lasso, lasso);
  add_prox(*sub_prox, prox);
  add_spectra(*sub_spectra, spectra);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sub_denoise->parsed()) return cmd_denoise(denoise, out);
    if (sub_lasso->parsed()) return cmd_lasso(lasso, out, err);
    if (sub_prox->parsed()) return cmd_prox_check(prox, out);
    return cmd_spectra(spectra, out);
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace ncpd::cli
