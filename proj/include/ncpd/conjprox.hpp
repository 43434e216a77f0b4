#pragma once

#include "ncpd/linops.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ncpd {

enum class RegularizerKind { L1, L0Box, LpBall, ScadBox };

std::string to_string(RegularizerKind kind);

/// h(w) = lambda * |w|
struct L1Params {
  double lambda;
};
/// h(w) = lambda * [w != 0] + indicator(c1 <= w <= c2)
struct L0BoxParams {
  double lambda;
  double c1;
  double c2;
};
/// h(w) = lambda * |w|^p + indicator(|w| <= r)
struct LpBallParams {
  double lambda;
  double p;
  double r;
};
/// h(w) = scad_{lambda,gamma}(|w|) + indicator(|w| <= r)
struct ScadBoxParams {
  double lambda;
  double gamma;
  double r;
};

/// A separable regularizer h together with closed forms for its convex
/// conjugate h* and for prox_{beta h*}. Every operation acts coordinate-wise.
///
/// For the SCAD kind the conjugate is the symmetric ramp
///   h*(y) = max(r|y| - scad(r), 0)
/// in all three parameter regimes (r < lambda, lambda <= r < gamma*lambda,
/// r >= gamma*lambda); the prox follows from that piecewise-linear form.
class Regularizer {
 public:
  using Params = std::variant<L1Params, L0BoxParams, LpBallParams, ScadBoxParams>;

  static Regularizer l1(double lambda);
  static Regularizer l0_box(double lambda, double c1, double c2);
  static Regularizer lp_ball(double lambda, double p, double r);
  static Regularizer scad_box(double lambda, double gamma, double r);

  RegularizerKind kind() const noexcept;
  const Params& params() const noexcept { return params_; }
  std::string describe() const;

  /// Largest |g| over g in the domain of h (the slope bound of h*).
  double slope_bound() const noexcept;

  double value_scalar(double w) const;
  double conj_scalar(double y) const;
  double prox_conj_scalar(double v, double beta) const;

  /// Primal regularizer sum_i h(x_i); +inf outside the box/ball.
  double value_h(const Vector& x) const;
  /// Coordinate-wise projection onto the closed domain of h (identity for l1).
  Vector project_domain(const Vector& x) const;
  /// sum_i h*(y_i); +inf only for l1 with some |y_i| > lambda.
  double conj_value(const Vector& y) const;
  /// argmin_u h*(u) + ||u - v||^2 / (2 beta), coordinate-wise.
  Vector prox_conj(const Vector& v, double beta) const;
  void prox_conj(const Vector& v, double beta, Vector& out) const;

 private:
  explicit Regularizer(Params params) : params_(params) {}
  Params params_;
};

/// SCAD penalty value at |w|.
double scad_penalty(double abs_w, double lambda, double gamma);

/// Exhaustive grid search used to verify the closed forms.
struct ProxOracle {
  double grid_lo = -10.0;
  double grid_hi = 10.0;
  double grid_step = 1e-4;

  /// [-max(10, 3(|v| + s*beta)), +same] where s is the slope bound of h*.
  static ProxOracle around(const Regularizer& reg, double v, double beta, double step = 1e-4);
};

/// Grid argmin of h*(u) + (u - v)^2 / (2 beta). The grid is scanned at
/// 100x the step first and then exhaustively at the step within two coarse
/// cells of the coarse winner; for the strictly convex objective this is the
/// same point a single fine scan would return.
double prox_conj_oracle(const Regularizer& reg, double v, double beta, const ProxOracle& oracle);

/// Grid sup of y*w - h(w). Box/ball kinds scan their domain; l1 scans
/// [-width, width] and [-2 width, 2 width] and reports +inf when the sup grows.
double conj_value_oracle(const Regularizer& reg, double y, double step = 1e-4,
                         double width = 100.0);

/// Grid maximizer w of y*w - h(w) (same grids as conj_value_oracle).
double conj_argmax_oracle(const Regularizer& reg, double y, double step = 1e-4,
                          double width = 100.0);

struct ProxSweep {
  long points = 0;
  double max_deviation = 0.0;
  double worst_v = 0.0;
  double worst_beta = 0.0;
};

/// Compares prox_conj_scalar with prox_conj_oracle at `points` seeded inputs
/// per beta. Inputs are uniform on +-(2 s max(1, beta) + 2), s the slope bound.
ProxSweep prox_conformance_sweep(const Regularizer& reg, long points,
                                 const std::vector<double>& betas, std::uint64_t seed);

}  // namespace ncpd
