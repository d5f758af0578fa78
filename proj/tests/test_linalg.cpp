#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "sparse_saddle/linalg.hpp"

using namespace sparse_saddle;

namespace {

Matrix random_spd(int n, std::mt19937_64& rng) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = static_cast<double>(rng() % 2000) / 1000.0 - 1.0;
  Matrix s = matmul(a.transposed(), a);
  for (int i = 0; i < n; ++i) s(i, i) += n;  // well away from singular
  return s;
}

Vector random_vector(int n, std::mt19937_64& rng) {
  Vector v(static_cast<std::size_t>(n));
  for (double& x : v) x = static_cast<double>(rng() % 2000) / 1000.0 - 1.0;
  return v;
}

}  // namespace

TEST_CASE("lu solves") {
  SECTION("identity") {
    const auto lu = lu_factor(Matrix::identity(3));
    for (int i = 0; i < 3; ++i) {
      Vector e(3, 0.0);
      e[static_cast<std::size_t>(i)] = 1.0;
      CHECK(lu.solve(e) == e);
    }
  }
  SECTION("pure permutation") {
    Matrix p(2, 2);
    p(0, 1) = 1.0;
    p(1, 0) = 1.0;
    const auto lu = lu_factor(p);
    const Vector x = lu.solve({1.0, 2.0});
    CHECK(x[0] == Approx(2.0));
    CHECK(x[1] == Approx(1.0));
  }
  SECTION("random well-conditioned system has tiny residual") {
    std::mt19937_64 rng(42);
    const Matrix k = random_spd(20, rng);
    const Vector b = random_vector(20, rng);
    const auto lu = lu_factor(k);
    const Vector x = lu.solve(b);
    Vector r = matvec(k, x);
    axpy(r, -1.0, b);
    CHECK(norm2(r) / norm2(b) <= 1e-10);
    CHECK(lu.cond_estimate() < 1e8);
  }
  SECTION("singular matrix is rejected") {
    Matrix s(2, 2);
    s(0, 0) = 1.0;
    s(0, 1) = 2.0;
    s(1, 0) = 2.0;
    s(1, 1) = 4.0;
    CHECK_THROWS_AS(lu_factor(s), std::runtime_error);
  }
  SECTION("call counter advances once per factorization") {
    const auto before = lu_factor_call_count();
    lu_factor(Matrix::identity(4));
    CHECK(lu_factor_call_count() == before + 1);
  }
}

TEST_CASE("generalized symmetric eigenvalues") {
  SECTION("identity pencil") {
    const auto e = sym_eig_extremes(Matrix::identity(2), Matrix::identity(2));
    CHECK(e.min == Approx(1.0));
    CHECK(e.max == Approx(1.0));
  }
  SECTION("diagonal pencil") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 4.0;
    const auto e = sym_eig_extremes(a, Matrix::identity(2));
    CHECK(e.min == Approx(1.0));
    CHECK(e.max == Approx(4.0));
  }
  SECTION("diagonal generalized pencil") {
    Matrix a(2, 2), m(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 6.0;
    m(0, 0) = 2.0;
    m(1, 1) = 2.0;
    const auto e = sym_eig_extremes(a, m);
    CHECK(e.min == Approx(1.0));
    CHECK(e.max == Approx(3.0));
  }
  SECTION("eigenvalues sandwich the Rayleigh quotient") {
    std::mt19937_64 rng(3);
    const Matrix m = random_spd(8, rng);
    Matrix a = random_spd(8, rng);
    a *= 0.3;
    const auto e = sym_eig_extremes(a, m);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector v = random_vector(8, rng);
      const double q = dot(v, matvec(a, v)) / dot(v, matvec(m, v));
      CHECK(q >= e.min - 1e-8);
      CHECK(q <= e.max + 1e-8);
    }
  }
  SECTION("non-SPD mass is rejected") {
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    CHECK_THROWS_AS(sym_eig_extremes(Matrix::identity(2), m), std::runtime_error);
  }
  SECTION("asymmetric input is rejected") {
    Matrix a(2, 2);
    a(0, 1) = 1.0;
    CHECK_THROWS_AS(sym_eig_extremes(a, Matrix::identity(2)), std::invalid_argument);
  }
}

TEST_CASE("gram norms") {
  CHECK(gram_norm({0.0, 0.0}, Matrix::identity(2)) == 0.0);
  CHECK(gram_norm({3.0, 4.0}, Matrix::identity(2)) == Approx(5.0));
  Matrix m(2, 2);
  m(0, 0) = 4.0;
  m(1, 1) = 1.0;
  CHECK(gram_norm({1.0, 1.0}, m) == Approx(std::sqrt(5.0)));

  SECTION("triangle inequality on random triples") {
    std::mt19937_64 rng(11);
    const Matrix g = random_spd(6, rng);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector a = random_vector(6, rng);
      const Vector b = random_vector(6, rng);
      Vector ab = a;
      axpy(ab, 1.0, b);
      CHECK(gram_norm(ab, g) <= gram_norm(a, g) + gram_norm(b, g) + 1e-12);
    }
  }
}
