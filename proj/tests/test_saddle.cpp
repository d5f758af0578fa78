#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "sparse_saddle/saddle.hpp"
#include "test_helpers.hpp"

using namespace sparse_saddle;
using test_helpers::diffusion_global;
using test_helpers::random_parameter;

namespace {

/// Minimal hand-built system: A(y) = I + y_1 * 0.1 I on two flux dofs, one
/// constraint row. Exercises the abstract operations without a PDE behind.
AffineSaddleSystem toy_system() {
  AffineSaddleSystem sys;
  sys.A_base = Matrix(2, 2);
  sys.A_kappa0 = Matrix::identity(2);
  Matrix t = Matrix::identity(2);
  t *= 0.1;
  sys.A_terms = {t};
  sys.B = Matrix(1, 2);
  sys.B(0, 0) = 1.0;
  sys.f = {1.0, 0.0};
  sys.g = {0.0};
  sys.M_V = Matrix::identity(2);
  sys.M_Q = Matrix::identity(1);
  sys.V_mass = Matrix::identity(2);
  return sys;
}

}  // namespace

TEST_CASE("affine assembly") {
  const AffineSaddleSystem sys = diffusion_global(16, 2, 2.0, 0.3);

  SECTION("origin uses A_kappa0 only") {
    const Matrix a0 = assemble_upper(sys, {0.0, 0.0});
    Matrix expect = sys.A_base;
    expect += sys.A_kappa0;
    for (int i = 0; i < a0.rows(); ++i)
      for (int j = 0; j < a0.cols(); ++j) CHECK(a0(i, j) == expect(i, j));
  }
  SECTION("single-term evaluation") {
    const Matrix a = assemble_upper(sys, {1.0, 0.0});
    Matrix expect = sys.A_base;
    expect += sys.A_kappa0;
    expect += sys.A_terms[0];
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j) CHECK(a(i, j) == Approx(expect(i, j)).margin(1e-15));
  }
  SECTION("affine symmetry K(y) + K(-y) = 2 K(0)") {
    std::mt19937_64 rng(1);
    const auto y = random_parameter(2, rng);
    auto minus_y = y;
    for (double& v : minus_y) v = -v;
    const Matrix kp = assemble_at(sys, y);
    const Matrix km = assemble_at(sys, minus_y);
    const Matrix k0 = assemble_at(sys, {0.0, 0.0});
    for (int i = 0; i < kp.rows(); ++i)
      for (int j = 0; j < kp.cols(); ++j) CHECK(kp(i, j) + km(i, j) == Approx(2.0 * k0(i, j)).margin(1e-13));
  }
  SECTION("affine consistency entrywise") {
    std::mt19937_64 rng(2);
    const auto y = random_parameter(2, rng);
    const Matrix diff_lhs = assemble_upper(sys, y);
    const Matrix base = assemble_upper(sys, {0.0, 0.0});
    Matrix expect(base.rows(), base.cols());
    for (int j = 0; j < 2; ++j) expect.add_scaled(sys.A_terms[static_cast<std::size_t>(j)], y[j]);
    for (int i = 0; i < base.rows(); ++i)
      for (int j = 0; j < base.cols(); ++j)
        CHECK(std::abs(diff_lhs(i, j) - base(i, j) - expect(i, j)) <= 1e-14);
  }
  SECTION("wrong parameter length") {
    CHECK_THROWS_AS(assemble_at(sys, {0.0}), std::invalid_argument);
  }
  SECTION("block matrix is symmetric") {
    std::mt19937_64 rng(3);
    const Matrix k = assemble_at(sys, random_parameter(2, rng));
    CHECK(k.max_asymmetry() == 0.0);
  }
}

TEST_CASE("solve_at") {
  SECTION("constant field reproduces the analytic mixed solution") {
    const AffineSaddleSystem sys = test_helpers::diffusion_global_unit_source(64, 0, 2.0, 0.3);
    const SaddleSolution sol = solve_at(sys, {});
    const int n = 64;
    const double h = 1.0 / n;
    for (int i = 0; i <= n; ++i) CHECK(sol.u[i] == Approx(0.5 - i * h).margin(1e-3));
    for (int k = 0; k < n; ++k) {
      const double x = (k + 0.5) * h;
      CHECK(sol.p[k] == Approx(0.5 * x * (1.0 - x)).margin(1e-3));
    }
  }
  SECTION("zero data gives the zero solution") {
    auto meta = build_global_parametrization(2, 2.0, 0.3, 1.0, 1);
    const auto sys = build_mixed_diffusion_1d(16, meta, [](double, double) { return 0.0; });
    const SaddleSolution sol = solve_at(sys, {0.25, -0.5});
    CHECK(norm2(sol.u) == 0.0);
    CHECK(norm2(sol.p) == 0.0);
  }
  SECTION("determinism: identical y gives bitwise-identical output") {
    const AffineSaddleSystem sys = diffusion_global(32, 3, 2.0, 0.3);
    std::mt19937_64 rng(4);
    const auto y = random_parameter(3, rng);
    const SaddleSolution a = solve_at(sys, y);
    const SaddleSolution b = solve_at(sys, y);
    CHECK(a.u == b.u);
    CHECK(a.p == b.p);
  }
  SECTION("residual stays tiny for random parameters") {
    const AffineSaddleSystem sys = diffusion_global(32, 4, 2.0, 0.3);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto y = random_parameter(4, rng);
      const SaddleSolution sol = solve_at(sys, y);
      Vector x = sol.u;
      x.insert(x.end(), sol.p.begin(), sol.p.end());
      Vector r = matvec(assemble_at(sys, y), x);
      axpy(r, -1.0, stacked_rhs(sys));
      CHECK(norm2(r) / std::max(norm2(stacked_rhs(sys)), 1e-300) <= 1e-9);
    }
  }
}

TEST_CASE("inf-sup estimation") {
  SECTION("one-dimensional toy") {
    AffineSaddleSystem sys = toy_system();
    sys.B = Matrix::identity(1);
    sys.M_V = Matrix::identity(1);
    sys.M_Q = Matrix::identity(1);
    sys.A_kappa0 = Matrix::identity(1);
    sys.A_base = Matrix(1, 1);
    sys.A_terms.clear();
    CHECK(estimate_infsup(sys) == Approx(1.0));
  }
  SECTION("mesh robustness across resolutions") {
    double beta[3];
    int k = 0;
    for (int n : {16, 32, 64}) beta[k++] = estimate_infsup(diffusion_global(n, 0, 2.0, 0.3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(beta[i] - beta[j]) <= 0.25 * std::abs(beta[j]));
  }
  SECTION("zero B is rejected") {
    AffineSaddleSystem sys = toy_system();
    sys.B = Matrix(1, 2);
    CHECK_THROWS_AS(estimate_infsup(sys), std::invalid_argument);
  }
}

TEST_CASE("kernel coercivity") {
  SECTION("A equal to the Gram gives one") {
    AffineSaddleSystem sys = toy_system();
    sys.A_kappa0 = Matrix::identity(2);
    sys.A_terms.clear();
    CHECK(estimate_kernel_coercivity(sys, {}) == Approx(1.0));
  }
  SECTION("diffusion coercivity lies between the field bounds") {
    const AffineSaddleSystem sys = diffusion_global(32, 3, 2.0, 0.3);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      const double a = estimate_kernel_coercivity(sys, random_parameter(3, rng));
      CHECK(a >= sys.kappa_meta.kappa_min - 1e-8);
      CHECK(a <= sys.kappa_meta.kappa_max + 1e-8);
    }
  }
  SECTION("coercivity is linear in the field scale") {
    const AffineSaddleSystem one = diffusion_global(24, 0, 2.0, 0.3, 1.0);
    const AffineSaddleSystem two = diffusion_global(24, 0, 2.0, 0.3, 2.0);
    const double a1 = estimate_kernel_coercivity(one, {});
    const double a2 = estimate_kernel_coercivity(two, {});
    CHECK(a2 == Approx(2.0 * a1).epsilon(1e-8));
  }
  SECTION("trivial kernel is rejected") {
    AffineSaddleSystem sys = toy_system();
    sys.B = Matrix::identity(2);  // rank 2 leaves no kernel
    CHECK_THROWS_AS(estimate_kernel_coercivity(sys, {0.0}), std::runtime_error);
  }
}

TEST_CASE("continuity estimation") {
  SECTION("single corner toy") {
    AffineSaddleSystem sys = toy_system();
    sys.A_kappa0 = Matrix::identity(2);
    sys.A_terms.clear();
    const auto c = estimate_continuity(sys);
    CHECK(c.gamma_h == Approx(1.0));
  }
  SECTION("diffusion delta does not exceed one") {
    const AffineSaddleSystem sys = diffusion_global(32, 2, 2.0, 0.3);
    const auto c = estimate_continuity(sys);
    CHECK(c.delta_h <= 1.0 + 1e-8);
    CHECK(c.delta_h > 0.5);
  }
  SECTION("gamma grows with the field amplitude") {
    const auto lo = estimate_continuity(diffusion_global(24, 2, 2.0, 0.2));
    const auto hi = estimate_continuity(diffusion_global(24, 2, 2.0, 0.3));
    CHECK(hi.gamma_h > lo.gamma_h);
  }
}

TEST_CASE("a-priori constants") {
  SECTION("printed formula substitutions") {
    const auto a = apriori_bounds(1.0, 1.0, 1.0, 2.0, 0.0);
    CHECK(a.C_u == Approx(2.0));
    CHECK(a.C_p == Approx(4.0));
    const auto b = apriori_bounds(2.0, 0.5, 4.0, 0.0, 0.0);
    CHECK(b.C_u == 0.0);
    CHECK(b.C_p == 0.0);
  }
  SECTION("independent re-derivation agrees") {
    const double alpha = 2.0, beta = 0.5, gamma = 4.0, f = 1.0, g = 1.0;
    const auto got = apriori_bounds(alpha, beta, gamma, f, g);
    // second transcription straight from the statement of the estimates
    const double cu = (1.0 / alpha) * f + ((alpha + gamma) / (alpha * beta)) * g;
    const double cp = ((alpha + gamma) / (alpha * beta)) * f + (gamma * (alpha + gamma) / (alpha * beta * beta)) * g;
    CHECK(got.C_u == Approx(cu));
    CHECK(got.C_p == Approx(cp));
    CHECK(got.C_u == Approx(6.5));
  }
  SECTION("nonpositive alpha or beta is rejected") {
    CHECK_THROWS_AS(apriori_bounds(0.0, 1.0, 1.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(apriori_bounds(1.0, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("the affine part stays positive definite on the kernel at corners") {
  const AffineSaddleSystem sys = diffusion_global(24, 2, 2.0, 0.3);
  for (int mask = 0; mask < 4; ++mask) {
    const std::vector<double> corner{mask & 1 ? 1.0 : -1.0, mask & 2 ? 1.0 : -1.0};
    CHECK(estimate_kernel_coercivity(sys, corner) > 0.0);
  }
}

TEST_CASE("discrete a-priori estimate holds with slack") {
  const AffineSaddleSystem sys = diffusion_global(32, 4, 2.0, 0.3);
  const WellPosednessReport rep = uniform_report(sys);
  CHECK(rep.alpha_h > 0.0);
  CHECK(rep.beta_h > 0.0);
  CHECK(rep.gamma_h >= rep.alpha_h);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const SaddleSolution sol = solve_at(sys, random_parameter(4, rng));
    CHECK(gram_norm(sol.u, sys.M_V) <= rep.C_u * 1.05);
  }
}

TEST_CASE("perturbation check") {
  const AffineSaddleSystem sys = diffusion_global(32, 2, 2.0, 0.3);
  SECTION("identical parameters give zero difference") {
    const auto r = perturbation_check(sys, {0.1, -0.2}, {0.1, -0.2});
    CHECK(r.lhs_u == 0.0);
    CHECK(r.lhs_p == 0.0);
  }
  SECTION("measured difference is within the bound") {
    const auto r = perturbation_check(sys, {0.0, 0.0}, {0.1, 0.0});
    CHECK(r.lhs_u <= r.rhs_bound_u * 1.05);
    CHECK(r.lhs_p <= r.rhs_bound_p * 1.05);
    CHECK(r.within_bounds);
    CHECK(r.lhs_u > 0.0);
  }
  SECTION("bound scales linearly in the field distance") {
    const auto full = perturbation_check(sys, {0.0, 0.0}, {0.2, 0.0});
    const auto half = perturbation_check(sys, {0.0, 0.0}, {0.1, 0.0});
    CHECK(full.rhs_bound_u == Approx(2.0 * half.rhs_bound_u).epsilon(1e-9));
  }
}

TEST_CASE("kernel basis columns annihilate B") {
  SECTION("diffusion") {
    const AffineSaddleSystem sys = diffusion_global(32, 2, 2.0, 0.3);
    const Matrix z = kernel_basis(sys);
    REQUIRE(z.cols() == 1);  // continuous piecewise linears: constants only
    for (int k = 0; k < z.cols(); ++k) {
      Vector col(static_cast<std::size_t>(sys.n_u()));
      for (int i = 0; i < sys.n_u(); ++i) col[i] = z(i, k);
      CHECK(norm2(matvec(sys.B, col)) <= 1e-10);
      CHECK(gram_norm(col, sys.M_V) == Approx(1.0).epsilon(1e-10));
    }
  }
  SECTION("stokes") {
    const auto meta = build_global_parametrization(0, 2.0, 0.1, 1.0, 2);
    const auto sys = build_stokes_mac_2d(6, 6, meta, [](double, double) { return 0.0; },
                                         [](double, double) { return 0.0; });
    const Matrix z = kernel_basis(sys);
    CHECK(z.cols() == sys.n_u() - sys.n_q());  // B has full row rank
    for (int k = 0; k < z.cols(); ++k) {
      Vector col(static_cast<std::size_t>(sys.n_u()));
      for (int i = 0; i < sys.n_u(); ++i) col[i] = z(i, k);
      CHECK(norm2(matvec(sys.B, col)) <= 1e-10);
    }
  }
}

TEST_CASE("well-posedness reports for the Stokes problem") {
  const auto meta = build_local_parametrization(2, {0.4, 0.3}, 1.0, 2);
  const double pi = 3.14159265358979323846;
  const auto sys = build_stokes_mac_2d(6, 6, meta, [pi](double, double y) { return std::sin(pi * y); },
                                       [](double, double) { return 0.0; });
  const WellPosednessReport rep = uniform_report(sys);
  CHECK(rep.alpha_h > 0.0);
  CHECK(rep.beta_h > 0.0);
  CHECK(rep.gamma_h >= rep.alpha_h);
  CHECK(rep.delta_h > 0.0);
  CHECK(rep.delta_h <= std::sqrt(2.0) + 1e-9);  // (div v)^2 <= 2 |grad v|^2 in 2D
  CHECK(rep.C_u > 0.0);

  const auto chk = perturbation_check(sys, {0.0, 0.0}, {0.2, -0.1});
  CHECK(chk.lhs_u > 0.0);
  CHECK(chk.within_bounds);
}
