#include <cmath>
#include <random>

#include "doctest.h"
#include "occa/errors.hpp"
#include "occa/linalg.hpp"
#include "oracles.hpp"

using namespace occa;

namespace {

Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix m = oracle::random_normal(n, n, rng);
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("StiefelPoint validates orthonormality") {
  CHECK_NOTHROW(StiefelPoint(Matrix::Identity(4, 2)));
  Matrix bad = Matrix::Identity(4, 2);
  bad(0, 0) = 1.001;
  CHECK_THROWS_AS(StiefelPoint{bad}, ContractViolation);
  Matrix wide = Matrix::Identity(2, 3);
  CHECK_THROWS_AS(StiefelPoint{wide}, ContractViolation);
}

TEST_CASE("orthonormalize rejects numerically rank deficient input") {
  Matrix x(4, 2);
  x << 1, 1, 2, 2, 3, 3, 4, 4;
  CHECK_THROWS_AS(StiefelPoint::orthonormalize(x), RankDeficiency);
  std::mt19937_64 rng(1);
  const Matrix y = oracle::random_normal(6, 3, rng);
  const StiefelPoint q = StiefelPoint::orthonormalize(y);
  CHECK(orthonormality_error(q.matrix()) <= 1e-12);
  CHECK(dist_tr(q, StiefelPoint(oracle::gram_schmidt(y))) <= 1e-10);
}

TEST_CASE("k_smallest_eigenbasis on a diagonal matrix") {
  const Matrix e = Vector::LinSpaced(3, 1.0, 3.0).asDiagonal();
  const EigenResult r = k_smallest_eigenbasis(e, 2);
  CHECK(r.values(0) == doctest::Approx(1.0));
  CHECK(r.values(1) == doctest::Approx(2.0));
  CHECK(r.gap == doctest::Approx(1.0));
  CHECK(std::abs(r.basis.matrix()(2, 0)) <= 1e-14);
  CHECK(std::abs(r.basis.matrix()(2, 1)) <= 1e-14);
}

TEST_CASE("k_smallest_eigenbasis surfaces a zero gap") {
  const EigenResult r = k_smallest_eigenbasis(Matrix::Identity(3, 3), 1);
  CHECK(r.gap == doctest::Approx(0.0));
  CHECK(r.basis.matrix().norm() == doctest::Approx(1.0));
}

TEST_CASE("k_smallest_eigenbasis matches the Jacobi oracle") {
  std::mt19937_64 rng(6);
  const Matrix e = random_symmetric(6, rng);
  const oracle::SymEig ref = oracle::jacobi_eig(e);
  const EigenResult r = k_smallest_eigenbasis(e, 3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(r.values(i) - ref.values(i)) <= 1e-10);
  CHECK(std::abs(r.gap - (ref.values(3) - ref.values(2))) <= 1e-10);
}

TEST_CASE("k_smallest_eigenbasis preconditions") {
  Matrix e = Matrix::Identity(3, 3);
  e(0, 1) = 1e-6;
  CHECK_THROWS_AS(k_smallest_eigenbasis(e, 1), ContractViolation);
  CHECK_THROWS_AS(k_smallest_eigenbasis(Matrix::Identity(3, 3), 3), ContractViolation);
  CHECK_THROWS_AS(k_smallest_eigenbasis(Matrix::Identity(3, 3), 0), ContractViolation);
}

TEST_CASE("eigenbasis residual bound on random symmetric matrices") {
  std::mt19937_64 rng(100);
  const Eigen::Index sizes[] = {2, 5, 17, 60, 200, 500};
  for (int s = 0; s < 100; ++s) {
    const Eigen::Index n = sizes[s % 6];
    const Eigen::Index k = 1 + s % std::min<Eigen::Index>(n - 1, 5);
    const Matrix e = random_symmetric(n, rng);
    const EigenResult r = k_smallest_eigenbasis(e, k);
    const Matrix res = e * r.basis.matrix() - r.basis.matrix() * r.values.asDiagonal();
    CHECK(max_abs(res) <= 1e-8 * max_abs(e));
    CHECK(r.gap >= 0.0);
    for (Eigen::Index i = 1; i < k; ++i) CHECK(r.values(i) >= r.values(i - 1));
  }
}

TEST_CASE("iterative eigensolver agrees with the dense path") {
  std::mt19937_64 rng(7);
  const Eigen::Index n = 700;
  const Matrix q = oracle::gram_schmidt(oracle::random_normal(n, n, rng));
  Vector w = Vector::LinSpaced(n, 1.0, 50.0);
  const Matrix e = q * w.asDiagonal() * q.transpose();
  const Matrix es = 0.5 * (e + e.transpose());
  EigenOptions it;
  it.method = EigenMethod::kIterative;
  const EigenResult a = k_smallest_eigenbasis(es, 4, it);
  EigenOptions dense;
  dense.method = EigenMethod::kDense;
  const EigenResult b = k_smallest_eigenbasis(es, 4, dense);
  CHECK(a.converged);
  CHECK(max_abs(a.values - b.values) <= 1e-8 * 50.0);
  CHECK(dist_tr(a.basis, b.basis) <= 1e-6);
  // n > 500 picks the iterative path automatically.
  const EigenResult c = k_smallest_eigenbasis(es, 4);
  CHECK(max_abs(c.values - b.values) <= 1e-8 * 50.0);
}

TEST_CASE("align") {
  SUBCASE("G^T D = I leaves G unchanged") {
    const StiefelPoint g(Matrix::Identity(4, 2));
    const Matrix d = Matrix::Identity(4, 2);
    CHECK(max_abs(align(g, d).matrix() - g.matrix()) <= 1e-14);
  }
  SUBCASE("k = 1 flips the sign") {
    Matrix gm = Matrix::Zero(3, 1);
    gm(0, 0) = 1.0;
    Matrix d = Matrix::Zero(3, 1);
    d(0, 0) = -3.0;
    const StiefelPoint a = align(StiefelPoint(gm), d);
    CHECK(a.matrix()(0, 0) == doctest::Approx(-1.0));
    CHECK((a.matrix().transpose() * d)(0, 0) == doctest::Approx(3.0));
  }
  SUBCASE("G^T D = 0 returns G") {
    const StiefelPoint g(Matrix::Identity(4, 1));
    Matrix d = Matrix::Zero(4, 1);
    d(3, 0) = 1.0;
    CHECK(max_abs(align(g, d).matrix() - g.matrix()) == 0.0);
  }
  SUBCASE("trace equals the nuclear norm and G^T D is PSD") {
    std::mt19937_64 rng(5);
    for (int s = 0; s < 20; ++s) {
      const StiefelPoint g(oracle::random_stiefel(5, 2, rng));
      const Matrix d = oracle::random_normal(5, 2, rng);
      const double nuclear = oracle::singular_values(g.matrix().transpose() * d).sum();
      const StiefelPoint a = align(g, d);
      const Matrix w = a.matrix().transpose() * d;
      CHECK(std::abs(w.trace() - nuclear) <= 1e-10 * nuclear);
      CHECK(max_abs(w - w.transpose()) <= 1e-10);
      CHECK(oracle::jacobi_eig(0.5 * (w + w.transpose())).values(0) >= -1e-10);
      // Idempotent when sigma_k(G^T D) > 0.
      CHECK(max_abs(align(a, d).matrix() - a.matrix()) <= 1e-10);
    }
  }
}

TEST_CASE("pair_align") {
  SUBCASE("X^T C Y = -I") {
    const StiefelPoint x(Matrix::Identity(3, 2));
    const StiefelPoint y(Matrix::Identity(4, 2));
    Matrix c = Matrix::Zero(3, 4);
    c(0, 0) = -1.0;
    c(1, 1) = -1.0;
    const auto [xa, ya] = pair_align(x, y, c);
    const Matrix w = xa.matrix().transpose() * c * ya.matrix();
    CHECK(max_abs(w - Matrix::Identity(2, 2)) <= 1e-14);
  }
  SUBCASE("already diagonal and nonnegative") {
    const StiefelPoint x(Matrix::Identity(3, 2));
    const StiefelPoint y(Matrix::Identity(3, 2));
    Matrix c = Matrix::Zero(3, 3);
    c(0, 0) = 2.0;
    c(1, 1) = 1.0;
    const auto [xa, ya] = pair_align(x, y, c);
    CHECK(max_abs(xa.matrix().cwiseAbs() - x.matrix()) <= 1e-14);
    CHECK(max_abs(ya.matrix().cwiseAbs() - y.matrix()) <= 1e-14);
    CHECK((xa.matrix().transpose() * c * ya.matrix()).trace() == doctest::Approx(3.0));
  }
  SUBCASE("random: trace equals the nuclear norm") {
    std::mt19937_64 rng(9);
    const StiefelPoint x(oracle::random_stiefel(6, 3, rng));
    const StiefelPoint y(oracle::random_stiefel(5, 3, rng));
    const Matrix c = oracle::random_normal(6, 5, rng);
    const double nuclear = oracle::singular_values(x.matrix().transpose() * c * y.matrix()).sum();
    const auto [xa, ya] = pair_align(x, y, c);
    const Matrix w = xa.matrix().transpose() * c * ya.matrix();
    CHECK(std::abs(w.trace() - nuclear) <= 1e-10 * nuclear);
    CHECK(max_abs(w - w.transpose()) <= 1e-10);
  }
}

TEST_CASE("dist_tr") {
  const StiefelPoint a(Matrix::Identity(4, 2));
  Matrix bm = Matrix::Zero(4, 2);
  bm(2, 0) = 1.0;
  bm(3, 1) = 1.0;
  CHECK(dist_tr(a, a) == doctest::Approx(0.0));
  CHECK(dist_tr(a, StiefelPoint(bm)) == doctest::Approx(2.0));
  CHECK_THROWS_AS(dist_tr(a, StiefelPoint(Matrix::Identity(4, 1))), ContractViolation);

  std::mt19937_64 rng(11);
  for (int s = 0; s < 10; ++s) {
    const StiefelPoint g1(oracle::random_stiefel(7, 3, rng));
    const StiefelPoint g2(oracle::random_stiefel(7, 3, rng));
    const double d = dist_tr(g1, g2);
    CHECK(std::abs(d - oracle::subspace_distance(g1.matrix(), g2.matrix())) <= 1e-8);
    CHECK(std::abs(d - dist_tr(g2, g1)) <= 1e-12);
    CHECK(d >= 0.0);
    CHECK(d <= 3.0);
    const Matrix q = oracle::random_stiefel(3, 3, rng);
    CHECK(dist_tr(g1, StiefelPoint::repair(g1.matrix() * q)) <= 1e-10);
  }
}

TEST_CASE("tangent vectors") {
  std::mt19937_64 rng(13);
  const StiefelPoint g(oracle::random_stiefel(6, 3, rng));
  CHECK(max_abs(tangent_vector(g, Matrix::Zero(3, 3), Matrix::Zero(6, 3))) == 0.0);
  const Matrix h = sample_tangent(g, 42);
  CHECK(max_abs(h.transpose() * g.matrix() + g.matrix().transpose() * h) <= 1e-12);
  CHECK(max_abs(h - sample_tangent(g, 42)) == 0.0);

  const StiefelPoint v(oracle::random_stiefel(5, 1, rng));
  const Matrix hv = sample_tangent(v, 3);
  CHECK(std::abs((hv.transpose() * v.matrix())(0, 0)) <= 1e-14);
}

TEST_CASE("sign convention makes the first nonzero entry nonnegative") {
  Matrix u(3, 2);
  u << 0, -1, -2, 3, 1, 0;
  Matrix v = Matrix::Identity(2, 2);
  apply_sign_convention(u, &v);
  CHECK(u(1, 0) == 2.0);
  CHECK(u(0, 1) == 1.0);
  CHECK(v(0, 0) == -1.0);
  CHECK(v(1, 1) == -1.0);
}
