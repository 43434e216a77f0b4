#include "ncpd/errors.hpp"
#include "ncpd/vrgrad.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace ncpd;
using ncpd::test::random_vector;

namespace {

// f_i(x) = d_i ||x - c_i||^2 / 2 with distinct curvatures d_i.
FiniteSumProblem weighted_quadratics(Index N, Index n, std::uint64_t seed) {
  auto centres = std::make_shared<Matrix>(n, N);
  auto weights = std::make_shared<Vector>(N);
  for (Index i = 0; i < N; ++i) {
    centres->col(i) = random_vector(n, seed, static_cast<std::uint64_t>(i));
    (*weights)[i] = 0.5 + static_cast<double>(i % 5) / 4.0;
  }
  return FiniteSumProblem{
      N,
      [centres, weights](Index i, const Vector& x) {
        return 0.5 * (*weights)[i] * (x - centres->col(i)).squaredNorm();
      },
      [centres, weights](Index i, const Vector& x) -> Vector {
        return (*weights)[i] * (x - centres->col(i));
      },
      1.5,
      LinearOperator::identity(n),
      Regularizer::l1(1.0),
  };
}

void enumerate_batches(Index N, Index b, std::vector<std::vector<Index>>& out) {
  std::vector<Index> cur;
  auto rec = [&](auto&& self, Index start) -> void {
    if (static_cast<Index>(cur.size()) == b) {
      out.push_back(cur);
      return;
    }
    for (Index i = start; i < N; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

const EstimatorKind kAll[] = {EstimatorKind::Saga, EstimatorKind::Svrg, EstimatorKind::Sarah};

}  // namespace

TEST_CASE("kind names") {
  for (auto k : kAll) CHECK(parse_estimator_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_estimator_kind("spider"), ParameterError);
}

TEST_CASE("batch sampling") {
  const auto p = weighted_quadratics(8, 3, 1);
  GradientEstimator full(EstimatorKind::Svrg, p, 8, 1);
  CHECK(full.sample_batch(5) == std::vector<Index>{0, 1, 2, 3, 4, 5, 6, 7});

  GradientEstimator one(EstimatorKind::Svrg, weighted_quadratics(1, 3, 1), 1, 1);
  CHECK(one.sample_batch(3) == std::vector<Index>{0});

  GradientEstimator e(EstimatorKind::Saga, p, 2, 42);
  const auto b0 = e.sample_batch(0);
  CHECK(b0 == e.sample_batch(0));
  CHECK(b0 == GradientEstimator(EstimatorKind::Sarah, p, 2, 42).sample_batch(0));
  CHECK(e.period() == 4);

  std::set<Index> seen;
  for (long k = 0; k < 200; ++k) {
    const auto b = GradientEstimator(EstimatorKind::Saga, p, 3, 7).sample_batch(k);
    REQUIRE(b.size() == 3);
    CHECK(std::is_sorted(b.begin(), b.end()));
    CHECK(std::adjacent_find(b.begin(), b.end()) == b.end());
    for (Index i : b) {
      CHECK(i >= 0);
      CHECK(i < 8);
      seen.insert(i);
    }
  }
  CHECK(seen.size() == 8);

  CHECK_THROWS_AS(GradientEstimator(EstimatorKind::Saga, p, 9, 1), ParameterError);
  CHECK_THROWS_AS(GradientEstimator(EstimatorKind::Saga, p, 0, 1), ParameterError);
}

TEST_CASE("batch frequencies are uniform") {
  const auto p = weighted_quadratics(8, 1, 1);
  GradientEstimator e(EstimatorKind::Svrg, p, 2, 3);
  std::vector<int> counts(8, 0);
  const int draws = 40000;
  for (long k = 0; k < draws; ++k)
    for (Index i : e.sample_batch(k)) ++counts[static_cast<std::size_t>(i)];
  // Each index appears with probability 1/4; 6 sigma band.
  const double mean = draws / 4.0;
  const double sd = std::sqrt(draws * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - mean) <= 6.0 * sd);
}

TEST_CASE("uninitialized estimator") {
  GradientEstimator e(EstimatorKind::Svrg, weighted_quadratics(4, 2, 1), 1, 1);
  CHECK_FALSE(e.initialized());
  CHECK_THROWS_AS(e.estimate(0, Vector::Zero(2)), StateError);
  CHECK_THROWS_AS(e.peek(1, Vector::Zero(2), Vector::Zero(2), {0}), StateError);
  e.reset(Vector::Zero(2));
  CHECK_THROWS_AS(e.estimate(1, Vector::Zero(2)), StateError);
  CHECK_NOTHROW(e.estimate(0, Vector::Zero(2)));
  CHECK_THROWS_AS(e.estimate(0, Vector::Zero(2)), StateError);
}

TEST_CASE("first estimate after reset is the full gradient") {
  const auto p = weighted_quadratics(10, 3, 2);
  const Vector x0 = random_vector(3, 9);
  for (auto kind : kAll) {
    GradientEstimator e(kind, p, 2, 5);
    e.reset(x0);
    CHECK(e.component_evals() == 10);
    const Vector g = e.estimate(0, x0);
    CHECK((g - p.full_grad(x0)).norm() <= 1e-14);
  }
}

TEST_CASE("snapshot and restart steps are exact") {
  const auto p = weighted_quadratics(12, 3, 3);
  for (auto kind : {EstimatorKind::Svrg, EstimatorKind::Sarah}) {
    GradientEstimator e(kind, p, 3, 1);
    CHECK(e.period() == 4);
    Vector x = random_vector(3, 1);
    e.reset(x);
    for (long k = 0; k <= 12; ++k) {
      const Vector g = e.estimate(k, x);
      if (k % 4 == 0) CHECK(g == p.full_grad(x));
      x = 0.9 * x + 0.1 * random_vector(3, 2, static_cast<std::uint64_t>(k));
    }
  }
  // svrg exactly at its snapshot point
  GradientEstimator e(EstimatorKind::Svrg, p, 3, 1);
  const Vector x0 = random_vector(3, 4);
  e.reset(x0);
  e.estimate(0, x0);
  CHECK((e.peek(1, x0, x0, {2, 7, 9}) - p.full_grad(x0)).norm() <= 1e-14);
}

TEST_CASE("saga table agrees with the current point") {
  const auto p = weighted_quadratics(6, 2, 4);
  const Vector x = random_vector(2, 5);
  GradientEstimator e(EstimatorKind::Saga, p, 2, 3);
  e.reset(x);
  // Table entries are the gradients at x, so every batch reproduces grad f(x).
  for (const auto& b : {std::vector<Index>{0, 1}, std::vector<Index>{3, 5}})
    CHECK((e.peek(1, x, x, b) - p.full_grad(x)).norm() <= 1e-14);
}

TEST_CASE("saga running mean tracks the table") {
  const auto p = weighted_quadratics(9, 3, 5);
  GradientEstimator e(EstimatorKind::Saga, p, 2, 11);
  Vector x = random_vector(3, 6);
  e.reset(x);
  for (long k = 0; k < 60; ++k) {
    x = x - 0.2 * random_vector(3, 7, static_cast<std::uint64_t>(k));
    e.estimate(k, x);
    const Vector mean = e.saga_table().rowwise().mean();
    CHECK((e.saga_mean() - mean).norm() <= 1e-12);
  }
}

TEST_CASE("saga and svrg are unbiased over every batch") {
  const auto p = weighted_quadratics(8, 3, 6);
  for (Index b : {1, 2}) {
    std::vector<std::vector<Index>> batches;
    enumerate_batches(8, b, batches);
    CHECK(batches.size() == (b == 1 ? 8u : 28u));
    for (auto kind : {EstimatorKind::Saga, EstimatorKind::Svrg}) {
      GradientEstimator e(kind, p, b, 9, 1000);
      Vector x = random_vector(3, 8);
      e.reset(x);
      for (long k = 0; k < 5; ++k) {
        e.estimate(k, x);
        x = 0.7 * x + random_vector(3, 12, static_cast<std::uint64_t>(k));
      }
      Vector avg = Vector::Zero(3);
      for (const auto& batch : batches) avg += e.peek(5, x, x, batch);
      avg /= static_cast<double>(batches.size());
      CHECK((avg - p.full_grad(x)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("svrg with two components and singleton batches") {
  const auto p = weighted_quadratics(2, 2, 7);
  GradientEstimator e(EstimatorKind::Svrg, p, 1, 1, 100);
  const Vector x0 = random_vector(2, 1);
  e.reset(x0);
  e.estimate(0, x0);
  const Vector x = random_vector(2, 2);
  const Vector avg = 0.5 * (e.peek(1, x, x0, {0}) + e.peek(1, x, x0, {1}));
  CHECK((avg - p.full_grad(x)).norm() <= 1e-12);
}

TEST_CASE("full batch returns the full gradient bit for bit") {
  const auto p = weighted_quadratics(7, 3, 8);
  for (auto kind : kAll) {
    GradientEstimator e(kind, p, 7, 2);
    Vector x = random_vector(3, 3);
    e.reset(x);
    for (long k = 0; k < 10; ++k) {
      CHECK(e.estimate(k, x) == p.full_grad(x));
      x = 0.5 * x + random_vector(3, 4, static_cast<std::uint64_t>(k));
    }
  }
}

TEST_CASE("reset restores the stream") {
  const auto p = weighted_quadratics(10, 3, 9);
  for (auto kind : kAll) {
    GradientEstimator e(kind, p, 3, 21);
    std::vector<Vector> first, second;
    for (auto* out : {&first, &second}) {
      Vector x = random_vector(3, 5);
      e.reset(x);
      for (long k = 0; k < 25; ++k) {
        out->push_back(e.estimate(k, x));
        x = 0.8 * x + 0.1 * out->back();
      }
    }
    CHECK(first == second);
    CHECK(e.component_evals() > 10);
  }
}

TEST_CASE("evaluation counts") {
  const auto p = weighted_quadratics(10, 2, 10);
  const Vector x = random_vector(2, 1);
  GradientEstimator saga(EstimatorKind::Saga, p, 2, 1);
  saga.reset(x);
  saga.estimate(0, x);
  saga.estimate(1, x);
  CHECK(saga.component_evals() == 10 + 2 + 2);
  GradientEstimator svrg(EstimatorKind::Svrg, p, 2, 1);
  svrg.reset(x);
  svrg.estimate(0, x);
  svrg.estimate(1, x);
  CHECK(svrg.component_evals() == 10 + 4);
}

TEST_CASE("estimator variance shrinks along a converging run") {
  const Index N = 20, n = 3;
  const auto p = weighted_quadratics(N, n, 11);
  // Gradient descent on the mean gives a fixed iterate sequence x^k -> x*.
  std::vector<Vector> xs{random_vector(n, 12)};
  for (int k = 0; k < 1000; ++k) xs.push_back(xs.back() - 0.3 * p.full_grad(xs.back()));
  const long checkpoints[] = {10, 100, 1000};
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    double err[3] = {0.0, 0.0, 0.0};
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
      GradientEstimator e(kind, p, 2, seed, 7);
      e.reset(xs[0]);
      int c = 0;
      for (long k = 0; k <= 1000; ++k) {
        const Vector g = e.estimate(k, xs[static_cast<std::size_t>(k)]);
        if (k == checkpoints[c]) {
          err[c] += (g - p.full_grad(xs[static_cast<std::size_t>(k)])).squaredNorm() / 1000.0;
          ++c;
          if (c == 3) break;
        }
      }
    }
    CHECK(err[1] <= err[0]);
    CHECK(err[2] <= err[1]);
  }
}
