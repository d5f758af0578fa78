#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparse_saddle/linalg.hpp"
#include "sparse_saddle/parametrization.hpp"

namespace sparse_saddle {

/// Discretized affine parametric saddle point system
///   [ A(y)  B^T ] [u]   [f]
///   [ B     0   ] [p] = [g],   A(y) = A_base + A_kappa0 + sum_j y_j A_terms[j].
///
/// A_base is the parameter-independent part a_0; A_kappa0 and A_terms carry
/// the affine part a_1 at kappa_0 and at each kappa_j. M_V and M_Q are the
/// Gram matrices of the discrete V- and Q-norms.
struct AffineSaddleSystem {
  Matrix A_base;
  Matrix A_kappa0;
  std::vector<Matrix> A_terms;
  Matrix B;
  Vector f;
  Vector g;
  Matrix M_V;
  Matrix M_Q;
  Matrix V_mass;  // plain L2 Gram on V_h, used by the Poincare estimate

  /// a_1 assembled with an arbitrary weight function on D.
  std::function<Matrix(const FieldFn&)> a1_weighted;

  ParametrizationMeta kappa_meta;

  int n_u() const { return A_kappa0.rows(); }
  int n_q() const { return B.rows(); }
  int term_count() const { return static_cast<int>(A_terms.size()); }

  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const double* p, std::size_t count) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(p);
      for (std::size_t k = 0; k < count * sizeof(double); ++k) {
        h ^= bytes[k];
        h *= 1099511628211ull;
      }
    };
    auto mix_int = [&h](std::uint64_t v) {
      for (int k = 0; k < 8; ++k) {
        h ^= (v >> (8 * k)) & 0xffu;
        h *= 1099511628211ull;
      }
    };
    mix_int(static_cast<std::uint64_t>(n_u()));
    mix_int(static_cast<std::uint64_t>(n_q()));
    mix_int(static_cast<std::uint64_t>(term_count()));
    mix(A_kappa0.data().data(), A_kappa0.data().size());
    for (const auto& t : A_terms) mix(t.data().data(), t.data().size());
    mix(B.data().data(), B.data().size());
    mix(f.data(), f.size());
    mix(g.data(), g.size());
    return h;
  }
};

struct SaddleSolution {
  Vector u;
  Vector p;
};

struct WellPosednessReport {
  double alpha_h = 0.0;
  double beta_h = 0.0;
  double gamma_h = 0.0;
  double delta_h = 0.0;
  double f_dual = 0.0;
  double g_dual = 0.0;
  double C_u = 0.0;
  double C_p = 0.0;
};

/// A(y) = A_base + A_kappa0 + sum_j y_j A_terms[j].
inline Matrix assemble_upper(const AffineSaddleSystem& sys, const std::vector<double>& y) {
  if (static_cast<int>(y.size()) != sys.term_count())
    throw std::invalid_argument("assemble_upper: expected " + std::to_string(sys.term_count()) +
                                " parameter entries, got " + std::to_string(y.size()));
  Matrix a = sys.A_base.rows() > 0 ? sys.A_base : Matrix(sys.n_u(), sys.n_u());
  a += sys.A_kappa0;
  for (int j = 0; j < sys.term_count(); ++j) a.add_scaled(sys.A_terms[j], y[j]);
  return a;
}

/// Full block matrix K(y) of size (n_u + n_q)^2.
inline Matrix assemble_at(const AffineSaddleSystem& sys, const std::vector<double>& y) {
  const Matrix a = assemble_upper(sys, y);
  const int nu = sys.n_u(), nq = sys.n_q();
  Matrix k(nu + nq, nu + nq);
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nu; ++j) k(i, j) = a(i, j);
  for (int i = 0; i < nq; ++i)
    for (int j = 0; j < nu; ++j) {
      k(nu + i, j) = sys.B(i, j);
      k(j, nu + i) = sys.B(i, j);
    }
  return k;
}

inline Vector stacked_rhs(const AffineSaddleSystem& sys) {
  Vector b(sys.f);
  b.insert(b.end(), sys.g.begin(), sys.g.end());
  return b;
}

inline SaddleSolution split_solution(const AffineSaddleSystem& sys, const Vector& x) {
  SaddleSolution s;
  s.u.assign(x.begin(), x.begin() + sys.n_u());
  s.p.assign(x.begin() + sys.n_u(), x.end());
  return s;
}

inline SaddleSolution solve_at(const AffineSaddleSystem& sys, const std::vector<double>& y) {
  try {
    const LuFactorization lu = lu_factor(assemble_at(sys, y));
    return split_solution(sys, lu.solve(stacked_rhs(sys)));
  } catch (const std::runtime_error&) {
    std::string point = "(";
    for (std::size_t j = 0; j < y.size(); ++j) point += (j ? "," : "") + std::to_string(y[j]);
    point += ")";
    throw std::runtime_error("solve_at: singular saddle matrix at y = " + point);
  }
}

/// Columns of M^{-1} N for SPD M.
inline Matrix spd_solve_columns(const Matrix& m, const Matrix& n) {
  const Matrix l = cholesky(m);
  Matrix x(n.rows(), n.cols());
  for (int j = 0; j < n.cols(); ++j) {
    Vector col(static_cast<std::size_t>(n.rows()));
    for (int i = 0; i < n.rows(); ++i) col[i] = n(i, j);
    detail::forward_substitute(l, col);
    detail::backward_substitute_transposed(l, col);
    for (int i = 0; i < n.rows(); ++i) x(i, j) = col[i];
  }
  return x;
}

/// Discrete inf-sup constant: beta_h = sqrt(lambda_min) of
/// (B M_V^{-1} B^T) q = lambda M_Q q.
inline double estimate_infsup(const AffineSaddleSystem& sys) {
  if (sys.B.max_abs() == 0.0) throw std::invalid_argument("estimate_infsup: B is zero");
  const Matrix s = matmul(sys.B, spd_solve_columns(sys.M_V, sys.B.transposed()));
  const auto [lmin, lmax] = sym_eig_extremes(s, sys.M_Q);
  (void)lmax;
  if (lmin <= 1e-12) throw std::runtime_error("estimate_infsup: degenerate inf-sup, lambda_min = " + std::to_string(lmin));
  return std::sqrt(lmin);
}

/// M_V-orthonormal basis of ker B, via elimination with column pivoting on B
/// followed by Gram-Schmidt in the M_V inner product.
inline Matrix kernel_basis(const AffineSaddleSystem& sys) {
  const int nu = sys.n_u(), nq = sys.n_q();
  Matrix r = sys.B;
  std::vector<int> col_of(static_cast<std::size_t>(nu));
  for (int j = 0; j < nu; ++j) col_of[j] = j;

  int rank = 0;
  for (int row = 0; row < nq && rank < nu; ++row) {
    // pivot: largest entry in the remaining columns of any remaining row
    int prow = -1, pcol = -1;
    double best = 0.0;
    for (int i = rank; i < nq; ++i)
      for (int j = rank; j < nu; ++j)
        if (std::abs(r(i, j)) > best) {
          best = std::abs(r(i, j));
          prow = i;
          pcol = j;
        }
    if (best <= 1e-13 * std::max(1.0, sys.B.max_abs())) break;
    for (int j = 0; j < nu; ++j) std::swap(r(prow, j), r(rank, j));
    for (int i = 0; i < nq; ++i) std::swap(r(i, pcol), r(i, rank));
    std::swap(col_of[pcol], col_of[rank]);
    const double inv = 1.0 / r(rank, rank);
    for (int i = 0; i < nq; ++i) {
      if (i == rank) continue;
      const double m = r(i, rank) * inv;
      if (m == 0.0) continue;
      for (int j = rank; j < nu; ++j) r(i, j) -= m * r(rank, j);
    }
    ++rank;
  }
  const int kdim = nu - rank;
  if (kdim == 0) throw std::runtime_error("kernel_basis: B has a trivial kernel (n_u must exceed rank B)");

  // free columns parametrize the kernel; back-substitute the pivot block
  Matrix z(nu, kdim);
  for (int k = 0; k < kdim; ++k) {
    Vector x(static_cast<std::size_t>(nu), 0.0);
    x[rank + k] = 1.0;
    for (int i = rank - 1; i >= 0; --i) {
      double s = 0.0;
      for (int j = i + 1; j < nu; ++j) s += r(i, j) * x[j];
      x[i] = -s / r(i, i);
    }
    for (int j = 0; j < nu; ++j) z(col_of[j], k) = x[j];
  }

  // two-pass modified Gram-Schmidt in the M_V inner product
  auto mdot = [&sys](const Vector& a, const Vector& b) { return dot(a, matvec(sys.M_V, b)); };
  std::vector<Vector> q;
  for (int k = 0; k < kdim; ++k) {
    Vector v(static_cast<std::size_t>(nu));
    for (int i = 0; i < nu; ++i) v[i] = z(i, k);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& w : q) axpy(v, -mdot(w, v), w);
    const double nrm = std::sqrt(std::max(mdot(v, v), 0.0));
    if (nrm <= 1e-13) continue;
    for (double& x : v) x /= nrm;
    q.push_back(std::move(v));
  }
  Matrix out(nu, static_cast<int>(q.size()));
  for (int k = 0; k < out.cols(); ++k)
    for (int i = 0; i < nu; ++i) out(i, k) = q[k][i];
  return out;
}

inline Matrix restrict_form(const Matrix& a, const Matrix& z) {
  return matmul(z.transposed(), matmul(a, z));
}

/// Coercivity of a(.,.;kappa(y)) on the kernel of b:
/// lambda_min of Z^T A(y) Z against Z^T M_V Z.
inline double estimate_kernel_coercivity(const AffineSaddleSystem& sys, const std::vector<double>& y) {
  const Matrix z = kernel_basis(sys);
  const auto [lmin, lmax] = sym_eig_extremes(restrict_form(assemble_upper(sys, y), z), restrict_form(sys.M_V, z));
  (void)lmax;
  return lmin;
}

namespace detail {
inline std::vector<std::vector<double>> corner_parameters(int j_count, std::uint64_t seed) {
  std::vector<std::vector<double>> corners;
  if (j_count == 0) {
    corners.push_back({});
  } else if (j_count <= 6) {
    for (int mask = 0; mask < (1 << j_count); ++mask) {
      std::vector<double> y(static_cast<std::size_t>(j_count));
      for (int j = 0; j < j_count; ++j) y[j] = (mask >> j) & 1 ? 1.0 : -1.0;
      corners.push_back(std::move(y));
    }
  } else {
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 64; ++k) {
      std::vector<double> y(static_cast<std::size_t>(j_count));
      for (int j = 0; j < j_count; ++j) y[j] = (rng() & 1) ? 1.0 : -1.0;
      corners.push_back(std::move(y));
    }
  }
  return corners;
}
}  // namespace detail

struct ContinuityEstimate {
  double gamma_h;
  double delta_h;
};

/// gamma_h = max over sign corners of lambda_max(A(y), M_V); the corners
/// dominate because A(y) is affine in y. delta_h = sqrt(lambda_max) of
/// (B^T M_Q^{-1} B) v = lambda M_V v.
inline ContinuityEstimate estimate_continuity(const AffineSaddleSystem& sys, std::uint64_t seed = 20240701ull) {
  double gamma = 0.0;
  for (const auto& y : detail::corner_parameters(sys.term_count(), seed)) {
    const auto [lmin, lmax] = sym_eig_extremes(assemble_upper(sys, y), sys.M_V);
    (void)lmin;
    gamma = std::max(gamma, lmax);
  }
  const Matrix s = matmul(sys.B.transposed(), spd_solve_columns(sys.M_Q, sys.B));
  const auto [lmin, lmax] = sym_eig_extremes(s, sys.M_V);
  (void)lmin;
  return {gamma, std::sqrt(std::max(lmax, 0.0))};
}

struct AprioriBounds {
  double C_u;
  double C_p;
};

/// C_u = f/alpha + (alpha+gamma)/(alpha beta) g,
/// C_p = (alpha+gamma)/(alpha beta) f + gamma (alpha+gamma)/(alpha beta^2) g.
inline AprioriBounds apriori_bounds(double alpha, double beta, double gamma, double f_norm, double g_norm) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("apriori_bounds: alpha and beta must be positive");
  const double cu = f_norm / alpha + (alpha + gamma) / (alpha * beta) * g_norm;
  const double cp = (alpha + gamma) / (alpha * beta) * f_norm +
                    gamma * (alpha + gamma) / (alpha * beta * beta) * g_norm;
  return {cu, cp};
}

/// Discrete dual norms of the data: ||f||_V' = sqrt(f^T M_V^{-1} f) and the
/// Q-side analogue.
inline std::pair<double, double> dual_norms(const AffineSaddleSystem& sys) {
  const Matrix lv = cholesky(sys.M_V);
  Vector fv = sys.f;
  detail::forward_substitute(lv, fv);
  double fn = 0.0;
  for (double x : fv) fn += x * x;
  const Matrix lq = cholesky(sys.M_Q);
  Vector gq = sys.g;
  detail::forward_substitute(lq, gq);
  double gn = 0.0;
  for (double x : gq) gn += x * x;
  return {std::sqrt(fn), std::sqrt(gn)};
}

/// Well-posedness constants valid uniformly over the scaled parameter box
/// |y_j| <= rho_j. alpha comes from the pointwise lower envelope
/// kappa_0 - sum rho_j |kappa_j| and gamma from the upper envelope, so the
/// report is usable both for U itself (rho = 1) and for the dilated polydiscs
/// of the coefficient bounds.
inline WellPosednessReport envelope_report(const AffineSaddleSystem& sys, const std::vector<double>& rho) {
  if (static_cast<int>(rho.size()) != sys.term_count())
    throw std::invalid_argument("envelope_report: rho has wrong length");
  if (!sys.a1_weighted) throw std::invalid_argument("envelope_report: system lacks the a1_weighted callback");

  const ParametrizationMeta& meta = sys.kappa_meta;
  FieldFn lower = [&meta, rho](double x, double y) {
    double v = meta.kappa0(x, y);
    for (int j = 0; j < meta.J; ++j) v -= rho[j] * std::abs(meta.terms[j](x, y));
    return v;
  };
  FieldFn upper = [&meta, rho](double x, double y) {
    double v = meta.kappa0(x, y);
    for (int j = 0; j < meta.J; ++j) v += rho[j] * std::abs(meta.terms[j](x, y));
    return v;
  };

  WellPosednessReport rep;
  const Matrix z = kernel_basis(sys);
  Matrix a_lo = sys.a1_weighted(lower);
  if (sys.A_base.rows() > 0) a_lo += sys.A_base;
  rep.alpha_h = sym_eig_extremes(restrict_form(a_lo, z), restrict_form(sys.M_V, z)).min;
  Matrix a_hi = sys.a1_weighted(upper);
  if (sys.A_base.rows() > 0) a_hi += sys.A_base;
  rep.gamma_h = sym_eig_extremes(a_hi, sys.M_V).max;
  rep.beta_h = estimate_infsup(sys);
  const Matrix s = matmul(sys.B.transposed(), spd_solve_columns(sys.M_Q, sys.B));
  rep.delta_h = std::sqrt(std::max(sym_eig_extremes(s, sys.M_V).max, 0.0));
  std::tie(rep.f_dual, rep.g_dual) = dual_norms(sys);
  const AprioriBounds ab = apriori_bounds(rep.alpha_h, rep.beta_h, rep.gamma_h, rep.f_dual, rep.g_dual);
  rep.C_u = ab.C_u;
  rep.C_p = ab.C_p;
  return rep;
}

inline WellPosednessReport uniform_report(const AffineSaddleSystem& sys) {
  return envelope_report(sys, std::vector<double>(static_cast<std::size_t>(sys.term_count()), 1.0));
}

/// Continuity of the a_1 form per unit sup-norm of kappa:
/// C_1 = lambda_max of a_1(.,.;1) against M_V.
inline double unit_continuity(const AffineSaddleSystem& sys) {
  if (!sys.a1_weighted) throw std::invalid_argument("unit_continuity: system lacks the a1_weighted callback");
  const Matrix one = sys.a1_weighted([](double, double) { return 1.0; });
  return sym_eig_extremes(one, sys.M_V).max;
}

/// Sup-norm of kappa(., y) - kappa(., y_tilde) on the sampling grid.
inline double kappa_distance(const ParametrizationMeta& meta, const std::vector<double>& y,
                             const std::vector<double>& y_tilde) {
  auto diff = [&](double x, double yy) {
    double v = 0.0;
    for (int j = 0; j < meta.J; ++j) v += (y[j] - y_tilde[j]) * meta.terms[j](x, yy);
    return std::abs(v);
  };
  return detail::grid_extrema(diff, meta.dim).second;
}

struct PerturbationCheck {
  double lhs_u;
  double lhs_p;
  double rhs_bound_u;
  double rhs_bound_p;
  bool within_bounds;  // lhs <= rhs * 1.05 on both components
};

/// Measured solution differences against the perturbation bounds
/// (1/alpha) C_1 C_u ||kappa - kappa_tilde|| for u and the a-priori p-side
/// factor (alpha+gamma)/(alpha beta) for p, all with discrete constants and
/// a 5% discretization slack.
inline PerturbationCheck perturbation_check(const AffineSaddleSystem& sys, const std::vector<double>& y,
                                            const std::vector<double>& y_tilde) {
  const SaddleSolution a = solve_at(sys, y);
  const SaddleSolution b = solve_at(sys, y_tilde);
  Vector du = a.u, dp = a.p;
  axpy(du, -1.0, b.u);
  axpy(dp, -1.0, b.p);

  const WellPosednessReport rep = uniform_report(sys);
  const double c1 = unit_continuity(sys);
  const double dist = kappa_distance(sys.kappa_meta, y, y_tilde);
  PerturbationCheck out;
  out.lhs_u = gram_norm(du, sys.M_V);
  out.lhs_p = gram_norm(dp, sys.M_Q);
  out.rhs_bound_u = c1 * rep.C_u * dist / rep.alpha_h;
  out.rhs_bound_p = (rep.alpha_h + rep.gamma_h) / (rep.alpha_h * rep.beta_h) * c1 * rep.C_u * dist;
  out.within_bounds = out.lhs_u <= out.rhs_bound_u * 1.05 && out.lhs_p <= out.rhs_bound_p * 1.05;
  return out;
}

}  // namespace sparse_saddle
