#include "ncpd/errors.hpp"
#include "ncpd/linops.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cstdio>
#include <fstream>
#include <vector>

using namespace ncpd;
using ncpd::test::random_vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix diag21() {
  Matrix m(2, 2);
  m << 2, 0, 0, 1;
  return m;
}

std::vector<LinearOperator> all_kinds() {
  Matrix dense = Matrix::Zero(3, 5);
  CounterRng rng(5, 5);
  for (Index i = 0; i < dense.size(); ++i) dense.data()[i] = rng.normal();
  Matrix v = Matrix::Zero(4, 4);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
  return {LinearOperator::identity(4),
          LinearOperator::scaled_identity(4, -2.5),
          LinearOperator::dense(dense),
          LinearOperator::gradient2d(3, 5, Boundary::Periodic),
          LinearOperator::gradient2d(4, 3, Boundary::ZeroPad),
          LinearOperator::stacked(v)};
}

double largest_singular_value(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()[0];
}

}  // namespace

TEST_CASE("apply examples") {
  CHECK(LinearOperator::identity(3).apply(vec({1, -2, 3})) == vec({1, -2, 3}));
  CHECK(LinearOperator::dense(diag21()).apply(vec({1, 1})) == vec({2, 1}));
  const Vector flat = Vector::Constant(16, 0.7);
  CHECK(LinearOperator::gradient2d(4, 4).apply(flat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(LinearOperator::gradient2d(4, 4, Boundary::ZeroPad).apply(flat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_adjoint examples") {
  CHECK(LinearOperator::identity(2).apply_adjoint(vec({4, 5})) == vec({4, 5}));
  CHECK(LinearOperator::dense(diag21()).apply_adjoint(vec({1, 1})) == vec({2, 1}));
}

TEST_CASE("shape errors") {
  const auto op = LinearOperator::dense(diag21());
  CHECK_THROWS_AS(op.apply(vec({1, 2, 3})), ShapeError);
  CHECK_THROWS_AS(op.apply_adjoint(vec({1})), ShapeError);
  CHECK_THROWS_AS(LinearOperator::gradient2d(1, 4), ShapeError);
  CHECK_THROWS_AS(LinearOperator::stacked(Matrix::Zero(2, 3)), ShapeError);
}

TEST_CASE("gradient2d 2x2 periodic hand example") {
  // Image [[1,2],[3,4]] row-major; horizontal block then vertical block.
  const Vector g = LinearOperator::gradient2d(2, 2).apply(vec({1, 2, 3, 4}));
  CHECK(g == vec({1, -1, 1, -1, 2, 2, -2, -2}));
}

TEST_CASE("gradient2d zero-pad drops the wrap-around differences") {
  const Vector g = LinearOperator::gradient2d(2, 2, Boundary::ZeroPad).apply(vec({1, 2, 3, 4}));
  CHECK(g == vec({1, 0, 1, 0, 2, 2, 0, 0}));
}

TEST_CASE("stacked examples") {
  const Vector x = vec({1, -2, 3});
  const Vector zero_block = LinearOperator::stacked(Matrix::Zero(3, 3)).apply(x);
  CHECK(zero_block == vec({0, 0, 0, 1, -2, 3}));
  const Vector dup = LinearOperator::stacked(Matrix::Identity(3, 3)).apply(x);
  CHECK(dup == vec({1, -2, 3, 1, -2, 3}));
}

TEST_CASE("adjoint consistency on every kind") {
  for (const auto& op : all_kinds()) {
    CAPTURE(to_string(op.kind()));
    for (std::uint64_t s = 0; s < 100; ++s) {
      const Vector x = random_vector(op.in_dim(), s, 1);
      const Vector y = random_vector(op.out_dim(), s, 2);
      const double lhs = op.apply(x).dot(y);
      const double rhs = x.dot(op.apply_adjoint(y));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + x.norm() * y.norm()));
    }
  }
}

TEST_CASE("gradient adjoint on random 3x3 inputs") {
  const auto op = LinearOperator::gradient2d(3, 3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Vector x = random_vector(9, s, 3);
    const Vector y = random_vector(18, s, 4);
    CHECK(std::abs(op.apply(x).dot(y) - x.dot(op.apply_adjoint(y))) <= 1e-12 * (1.0 + x.norm() * y.norm()));
  }
}

TEST_CASE("linearity") {
  for (const auto& op : all_kinds()) {
    const Vector x = random_vector(op.in_dim(), 9, 1);
    const Vector z = random_vector(op.in_dim(), 9, 2);
    const Vector lhs = op.apply(1.7 * x + z);
    const Vector rhs = 1.7 * op.apply(x) + op.apply(z);
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("materialize agrees with apply") {
  for (const auto& op : all_kinds()) {
    const Matrix m = op.materialize();
    const Vector x = random_vector(op.in_dim(), 3, 3);
    CHECK((m * x - op.apply(x)).norm() <= 1e-12 * (1.0 + x.norm()));
  }
}

TEST_CASE("estimate_op_norm examples") {
  CHECK(estimate_op_norm(LinearOperator::identity(3), 50, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(estimate_op_norm(LinearOperator::dense(diag21()), 200, 1) - 2.0) <= 1e-10);
  CHECK(estimate_op_norm(LinearOperator::dense(Matrix::Zero(2, 3)), 10, 1) == 0.0);
  CHECK_THROWS_AS(estimate_op_norm(LinearOperator::identity(3), 0, 1), ParameterError);
}

TEST_CASE("gradient 8x8 periodic norm matches a brute-force SVD") {
  const auto op = LinearOperator::gradient2d(8, 8, Boundary::Periodic);
  const double svd = largest_singular_value(op.materialize());
  CHECK(std::abs(svd * svd - 8.0) <= 1e-8);
  const SpectralBounds sb = spectral_bounds(op);
  CHECK(std::abs(sb.op_norm * sb.op_norm - 8.0) <= 1e-8);
  CHECK(std::abs(estimate_op_norm(op, 2000, 3) * estimate_op_norm(op, 2000, 3) - 8.0) <= 1e-6);
}

TEST_CASE("closed-form gradient norms match SVD for odd sizes and both boundaries") {
  for (auto b : {Boundary::Periodic, Boundary::ZeroPad}) {
    for (auto [h, w] : std::vector<std::pair<Index, Index>>{{2, 3}, {5, 4}, {7, 7}, {3, 9}}) {
      const auto op = LinearOperator::gradient2d(h, w, b);
      CAPTURE(h);
      CAPTURE(w);
      CHECK(std::abs(*op.closed_form_norm() - largest_singular_value(op.materialize())) <= 1e-10);
    }
  }
}

TEST_CASE("estimate_min_eig_gram examples") {
  CHECK(estimate_min_eig_gram(LinearOperator::identity(3), 50, 1) == doctest::Approx(1.0));
  Matrix fat(2, 3);
  fat << 1, 0, 0, 0, 1, 0;
  CHECK(estimate_min_eig_gram(LinearOperator::dense(fat), 50, 1) == doctest::Approx(1.0));
  CHECK(estimate_min_eig_gram(LinearOperator::gradient2d(4, 4), 50, 1) == 0.0);
}

TEST_CASE("gradient 4x4 gram is singular by exact eigensolve") {
  const Matrix a = LinearOperator::gradient2d(4, 4).materialize();
  Eigen::SelfAdjointEigenSolver<Matrix> es(a * a.transpose());
  CHECK(std::abs(es.eigenvalues()[0]) <= 1e-10);
  CHECK(spectral_bounds(LinearOperator::gradient2d(4, 4)).min_eig_gram == 0.0);
}

TEST_CASE("stacked [0; I] gram is singular") {
  const auto op = LinearOperator::stacked(Matrix::Zero(2, 2));
  const Matrix a = op.materialize();
  Eigen::SelfAdjointEigenSolver<Matrix> es(a * a.transpose());
  CHECK(std::abs(es.eigenvalues()[0]) <= 1e-12);
  const SpectralBounds sb = spectral_bounds(op);
  CHECK(sb.min_eig_gram == 0.0);
  CHECK_FALSE(sb.surjective());
}

TEST_CASE("shifted power iteration on a large fat operator") {
  // Wide dense A (out_dim above a small cap) with known singular values.
  const Index m = 6;
  Matrix a = Matrix::Zero(m, 8);
  for (Index i = 0; i < m; ++i) a(i, i) = 1.0 + 0.5 * static_cast<double>(i);
  const double est = estimate_min_eig_gram(LinearOperator::dense(a), 400, 2, 4);
  CHECK(est == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("spectral invariants") {
  for (const auto& op : all_kinds()) {
    const SpectralBounds sb = spectral_bounds(op);
    CHECK(sb.hat_lambda * sb.hat_lambda == sb.min_eig_gram);
    const double tol = 1e-6 * sb.op_norm;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const Vector y = random_vector(op.out_dim(), s, 7);
      const double aty = op.apply_adjoint(y).norm();
      CHECK(sb.hat_lambda * y.norm() <= aty * (1.0 + 1e-12));
      CHECK(aty <= (sb.op_norm + tol) * y.norm());
    }
  }
}

TEST_CASE("power iteration is deterministic") {
  Matrix big = Matrix::Zero(50, 40);
  CounterRng rng(1, 1);
  for (Index i = 0; i < big.size(); ++i) big.data()[i] = rng.normal();
  const auto op = LinearOperator::dense(big);
  CHECK(estimate_op_norm(op, 30, 11) == estimate_op_norm(op, 30, 11));
}

TEST_CASE("load_dense_csv") {
  const std::string path = "linops_test_matrix.csv";
  {
    std::ofstream f(path);
    f << "1,2\n3.5,-4\n";
  }
  const Matrix m = load_dense_csv(path);
  CHECK(m.rows() == 2);
  CHECK(m(1, 0) == 3.5);
  CHECK(m(1, 1) == -4.0);
  {
    std::ofstream f(path);
    f << "1,2\n3,x\n";
  }
  try {
    load_dense_csv(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.location() == 2);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_dense_csv("no/such/file.csv"), IoError);
}
