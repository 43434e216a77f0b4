#include "ncpd/conjprox.hpp"

#include "ncpd/errors.hpp"
#include "ncpd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ncpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

bool finite(double v) { return std::isfinite(v); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Kink of the symmetric ramp h*(y) = max(r|y| - r*t, 0).
double lp_threshold(const LpBallParams& p) { return p.lambda * std::pow(p.r, p.p - 1.0); }
double scad_threshold(const ScadBoxParams& p) {
  return scad_penalty(p.r, p.lambda, p.gamma) / p.r;
}

// Prox of the symmetric ramp with slope r and kink t.
double ramp_prox(double v, double t, double r, double beta) {
  const double a = std::abs(v);
  if (a <= t) return v;
  if (a <= t + r * beta) return sign(v) * t;
  return v - sign(v) * r * beta;
}

}  // namespace

std::string to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::L1:
      return "l1";
    case RegularizerKind::L0Box:
      return "l0_box";
    case RegularizerKind::LpBall:
      return "lp_ball";
    case RegularizerKind::ScadBox:
      return "scad_box";
  }
  return "unknown";
}

double scad_penalty(double abs_w, double lambda, double gamma) {
  if (abs_w <= lambda) return lambda * abs_w;
  if (abs_w <= gamma * lambda) {
    return (2.0 * gamma * lambda * abs_w - (abs_w * abs_w + lambda * lambda)) / (2.0 * (gamma - 1.0));
  }
  return lambda * lambda * (gamma + 1.0) / 2.0;
}

Regularizer Regularizer::l1(double lambda) {
  require(finite(lambda) && lambda > 0.0, "l1: lambda must be positive");
  return Regularizer(L1Params{lambda});
}

Regularizer Regularizer::l0_box(double lambda, double c1, double c2) {
  require(finite(lambda) && lambda > 0.0, "l0_box: lambda must be positive");
  require(finite(c1) && finite(c2) && c1 < 0.0 && c2 > 0.0, "l0_box: requires c1 < 0 < c2");
  return Regularizer(L0BoxParams{lambda, c1, c2});
}

Regularizer Regularizer::lp_ball(double lambda, double p, double r) {
  require(finite(lambda) && lambda > 0.0, "lp_ball: lambda must be positive");
  require(finite(p) && p > 0.0 && p < 1.0, "lp_ball: p must lie in (0, 1)");
  require(finite(r) && r > 0.0, "lp_ball: r must be positive");
  return Regularizer(LpBallParams{lambda, p, r});
}

Regularizer Regularizer::scad_box(double lambda, double gamma, double r) {
  require(finite(lambda) && lambda > 0.0, "scad_box: lambda must be positive");
  require(finite(gamma) && gamma > 2.0, "scad_box: gamma must exceed 2");
  require(finite(r) && r > 0.0, "scad_box: r must be positive");
  return Regularizer(ScadBoxParams{lambda, gamma, r});
}

RegularizerKind Regularizer::kind() const noexcept {
  return static_cast<RegularizerKind>(params_.index());
}

std::string Regularizer::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const L1Params& p) { os << "l1(lambda=" << p.lambda << ")"; },
                 [&](const L0BoxParams& p) {
                   os << "l0_box(lambda=" << p.lambda << ",c1=" << p.c1 << ",c2=" << p.c2 << ")";
                 },
                 [&](const LpBallParams& p) {
                   os << "lp_ball(lambda=" << p.lambda << ",p=" << p.p << ",r=" << p.r << ")";
                 },
                 [&](const ScadBoxParams& p) {
                   os << "scad_box(lambda=" << p.lambda << ",gamma=" << p.gamma << ",r=" << p.r
                      << ")";
                 },
             },
             params_);
  return os.str();
}

double Regularizer::slope_bound() const noexcept {
  return std::visit(Overloaded{
                        [](const L1Params& p) { return p.lambda; },
                        [](const L0BoxParams& p) { return std::max(-p.c1, p.c2); },
                        [](const LpBallParams& p) { return p.r; },
                        [](const ScadBoxParams& p) { return p.r; },
                    },
                    params_);
}

double Regularizer::value_scalar(double w) const {
  return std::visit(Overloaded{
                        [&](const L1Params& p) { return p.lambda * std::abs(w); },
                        [&](const L0BoxParams& p) {
                          if (w < p.c1 || w > p.c2) return kInf;
                          return w != 0.0 ? p.lambda : 0.0;
                        },
                        [&](const LpBallParams& p) {
                          const double a = std::abs(w);
                          if (a > p.r) return kInf;
                          return a == 0.0 ? 0.0 : p.lambda * std::pow(a, p.p);
                        },
                        [&](const ScadBoxParams& p) {
                          const double a = std::abs(w);
                          if (a > p.r) return kInf;
                          return scad_penalty(a, p.lambda, p.gamma);
                        },
                    },
                    params_);
}

double Regularizer::conj_scalar(double y) const {
  return std::visit(Overloaded{
                        [&](const L1Params& p) { return std::abs(y) <= p.lambda ? 0.0 : kInf; },
                        [&](const L0BoxParams& p) {
                          if (y > p.lambda / p.c2) return p.c2 * y - p.lambda;
                          if (y > p.lambda / p.c1) return 0.0;
                          return p.c1 * y - p.lambda;
                        },
                        [&](const LpBallParams& p) {
                          return std::max(p.r * std::abs(y) - p.lambda * std::pow(p.r, p.p), 0.0);
                        },
                        [&](const ScadBoxParams& p) {
                          return std::max(
                              p.r * std::abs(y) - scad_penalty(p.r, p.lambda, p.gamma), 0.0);
                        },
                    },
                    params_);
}

double Regularizer::prox_conj_scalar(double v, double beta) const {
  return std::visit(Overloaded{
                        [&](const L1Params& p) { return std::clamp(v, -p.lambda, p.lambda); },
                        [&](const L0BoxParams& p) {
                          const double hi = p.lambda / p.c2;
                          const double lo = p.lambda / p.c1;
                          if (v > p.c2 * beta + hi) return v - p.c2 * beta;
                          if (v > hi) return hi;
                          if (v > lo) return v;
                          if (v > p.c1 * beta + lo) return lo;
                          return v - p.c1 * beta;
                        },
                        [&](const LpBallParams& p) {
                          const double t = lp_threshold(p);
                          const double a = std::abs(v);
                          if (a < t) return v;
                          if (a <= t + p.r * beta) return sign(v) * t;
                          return v - sign(v) * p.r * beta;
                        },
                        [&](const ScadBoxParams& p) {
                          return ramp_prox(v, scad_threshold(p), p.r, beta);
                        },
                    },
                    params_);
}

double Regularizer::value_h(const Vector& x) const {
  double sum = 0.0;
  for (Index i = 0; i < x.size(); ++i) sum += value_scalar(x[i]);
  return sum;
}

Vector Regularizer::project_domain(const Vector& x) const {
  return std::visit(Overloaded{
                        [&](const L1Params&) -> Vector { return x; },
                        [&](const L0BoxParams& p) -> Vector { return x.cwiseMax(p.c1).cwiseMin(p.c2); },
                        [&](const LpBallParams& p) -> Vector { return x.cwiseMax(-p.r).cwiseMin(p.r); },
                        [&](const ScadBoxParams& p) -> Vector { return x.cwiseMax(-p.r).cwiseMin(p.r); },
                    },
                    params_);
}

double Regularizer::conj_value(const Vector& y) const {
  double sum = 0.0;
  for (Index i = 0; i < y.size(); ++i) sum += conj_scalar(y[i]);
  return sum;
}

Vector Regularizer::prox_conj(const Vector& v, double beta) const {
  Vector out;
  prox_conj(v, beta, out);
  return out;
}

void Regularizer::prox_conj(const Vector& v, double beta, Vector& out) const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ParameterError("prox_conj: beta must be positive and finite");
  }
  out.resize(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = prox_conj_scalar(v[i], beta);
}

ProxOracle ProxOracle::around(const Regularizer& reg, double v, double beta, double step) {
  const double half = std::max(10.0, 3.0 * (std::abs(v) + reg.slope_bound() * beta));
  return ProxOracle{-half, half, step};
}

double prox_conj_oracle(const Regularizer& reg, double v, double beta, const ProxOracle& oracle) {
  if (!(oracle.grid_step > 0.0) || !(oracle.grid_hi >= oracle.grid_lo)) {
    throw ParameterError("prox_conj_oracle: empty grid");
  }
  if (!(beta > 0.0)) throw ParameterError("prox_conj_oracle: beta must be positive");
  auto objective = [&](double u) {
    const double d = u - v;
    return reg.conj_scalar(u) + d * d / (2.0 * beta);
  };
  auto scan = [&](double lo, double hi, double step) {
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    double best_u = std::numeric_limits<double>::quiet_NaN();
    double best = kInf;
    for (long k = 0; k <= count; ++k) {
      const double u = lo + static_cast<double>(k) * step;
      const double val = objective(u);
      if (val < best) {
        best = val;
        best_u = u;
      }
    }
    return best_u;
  };
  const double coarse = 100.0 * oracle.grid_step;
  double centre = scan(oracle.grid_lo, oracle.grid_hi, coarse);
  if (std::isnan(centre)) {
    // The finite part of the domain fell between coarse points.
    const double u = scan(oracle.grid_lo, oracle.grid_hi, oracle.grid_step);
    if (std::isnan(u)) throw ParameterError("prox_conj_oracle: objective infinite on grid");
    return u;
  }
  // Fine points stay aligned with the full grid lo + k*step.
  const double lo = std::max(oracle.grid_lo, centre - 2.0 * coarse);
  const double hi = std::min(oracle.grid_hi, centre + 2.0 * coarse);
  const double k0 = std::ceil((lo - oracle.grid_lo) / oracle.grid_step - 1e-9);
  const double fine_lo = oracle.grid_lo + k0 * oracle.grid_step;
  return scan(fine_lo, hi, oracle.grid_step);
}

namespace {

struct SupResult {
  double value;
  double arg;
};

SupResult grid_sup(const Regularizer& reg, double y, double lo, double hi, double step) {
  const auto count = static_cast<long>(std::ceil((hi - lo) / step));
  SupResult best{y * 0.0 - reg.value_scalar(0.0), 0.0};
  for (long k = 0; k <= count; ++k) {
    // Linear spacing that lands exactly on both endpoints.
    const double w = k == count ? hi : lo + (hi - lo) * (static_cast<double>(k) / count);
    const double val = y * w - reg.value_scalar(w);
    if (val > best.value) best = {val, w};
  }
  return best;
}

SupResult conj_oracle(const Regularizer& reg, double y, double step, double width) {
  switch (reg.kind()) {
    case RegularizerKind::L1: {
      const double eff = std::max(step, width / 1e5);
      const SupResult a = grid_sup(reg, y, -width, width, eff);
      const SupResult b = grid_sup(reg, y, -2.0 * width, 2.0 * width, eff);
      if (b.value > a.value + 1e-9 * (1.0 + std::abs(a.value))) return {kInf, b.arg};
      return a;
    }
    case RegularizerKind::L0Box: {
      const auto& p = std::get<L0BoxParams>(reg.params());
      return grid_sup(reg, y, p.c1, p.c2, step);
    }
    case RegularizerKind::LpBall: {
      const auto& p = std::get<LpBallParams>(reg.params());
      return grid_sup(reg, y, -p.r, p.r, step);
    }
    case RegularizerKind::ScadBox: {
      const auto& p = std::get<ScadBoxParams>(reg.params());
      return grid_sup(reg, y, -p.r, p.r, step);
    }
  }
  return {kInf, 0.0};
}

}  // namespace

double conj_value_oracle(const Regularizer& reg, double y, double step, double width) {
  return conj_oracle(reg, y, step, width).value;
}

double conj_argmax_oracle(const Regularizer& reg, double y, double step, double width) {
  return conj_oracle(reg, y, step, width).arg;
}

ProxSweep prox_conformance_sweep(const Regularizer& reg, long points,
                                 const std::vector<double>& betas, std::uint64_t seed) {
  if (points < 1) throw ParameterError("prox sweep: points must be >= 1");
  ProxSweep sweep;
  for (std::size_t j = 0; j < betas.size(); ++j) {
    const double beta = betas[j];
    const double half = 2.0 * reg.slope_bound() * std::max(1.0, beta) + 2.0;
    CounterRng rng(seed, j);
    for (long i = 0; i < points; ++i) {
      const double v = half * (2.0 * rng.uniform_open() - 1.0);
      const double dev = std::abs(reg.prox_conj_scalar(v, beta) -
                                  prox_conj_oracle(reg, v, beta, ProxOracle::around(reg, v, beta)));
      ++sweep.points;
      if (dev > sweep.max_deviation || std::isnan(dev)) {
        sweep.max_deviation = std::isnan(dev) ? kInf : dev;
        sweep.worst_v = v;
        sweep.worst_beta = beta;
      }
    }
  }
  return sweep;
}

}  // namespace ncpd
