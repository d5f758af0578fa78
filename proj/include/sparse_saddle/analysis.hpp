#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparse_saddle/multiindex.hpp"
#include "sparse_saddle/parametrization.hpp"
#include "sparse_saddle/saddle.hpp"
#include "sparse_saddle/taylor.hpp"
#include "sparse_saddle/threads.hpp"

namespace sparse_saddle {

inline constexpr std::uint64_t default_seed = 20240701ull;

/// (sum_j c_j^s)^{1/s} for s > 0.
inline double ls_norm(const std::vector<double>& values, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("ls_norm: s must be positive");
  double acc = 0.0;
  for (double v : values) acc += std::pow(v, s);
  return std::pow(acc, 1.0 / s);
}

inline double ls_norm(const NormSequence& seq, double s) {
  std::vector<double> v;
  v.reserve(seq.items.size());
  for (const auto& [nu, x] : seq.items) v.push_back(x);
  return ls_norm(v, s);
}

/// Per-dimension dilation radii rho_j > 1 with
/// sum_j rho_j |kappa_j(x)| <= kappa_0(x) - epsilon everywhere.
struct RhoSequence {
  std::vector<double> values;
  double epsilon = 0.0;
  bool admissible = false;
  double worst_x = 0.0;  // argmax of the admissibility defect on the grid
  double worst_y = 0.0;
  double worst_margin = 0.0;  // max of sum rho_j|kappa_j| - (kappa_0 - epsilon); <= 0 iff admissible
};

/// Grid check of the admissibility inequality; returns the flag and the worst
/// sampling point.
inline void check_rho_admissible(RhoSequence& rho, const ParametrizationMeta& meta) {
  if (static_cast<int>(rho.values.size()) != meta.J)
    throw std::invalid_argument("check_rho_admissible: rho has wrong length");
  const int n = meta.dim == 1 ? 1024 : 256;
  double worst = -std::numeric_limits<double>::infinity();
  double wx = 0.0, wy = 0.0;
  auto probe = [&](double x, double y) {
    double lhs = 0.0;
    for (int j = 0; j < meta.J; ++j) lhs += rho.values[j] * std::abs(meta.terms[j](x, y));
    const double margin = lhs - (meta.kappa0(x, y) - rho.epsilon);
    if (margin > worst) {
      worst = margin;
      wx = x;
      wy = y;
    }
  };
  if (meta.dim == 1) {
    for (int i = 0; i < n; ++i) probe((i + 0.5) / n, 0.0);
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) probe((i + 0.5) / n, (j + 0.5) / n);
  }
  rho.worst_margin = worst;
  rho.worst_x = wx;
  rho.worst_y = wy;
  rho.admissible = worst <= 1e-12;
}

/// Admissible rho for a given margin epsilon in (theta, kappa_min).
/// Local bases: rho_j = (min kappa_0 - epsilon)/|w_j| floored at 1 + 1e-6,
/// valid because the supports are disjoint. Global bases: distribute the
/// pointwise slack S = min(kappa_0 - epsilon - sum |kappa_j|) geometrically,
/// rho_j = 1 + S 2^{-j}/||kappa_j||. Admissibility is re-verified on the grid.
inline RhoSequence construct_admissible_rho(const ParametrizationMeta& meta, double epsilon) {
  if (!(epsilon > meta.theta && epsilon < meta.kappa_min))
    throw std::invalid_argument("construct_admissible_rho: epsilon must lie in (theta, kappa_min) = (" +
                                std::to_string(meta.theta) + ", " + std::to_string(meta.kappa_min) + ")");
  RhoSequence rho;
  rho.epsilon = epsilon;
  if (meta.kind == BasisKind::local) {
    const double kappa0_min = detail::grid_extrema(meta.kappa0, meta.dim).first;
    for (int j = 0; j < meta.J; ++j)
      rho.values.push_back(std::max(1.0 + 1e-6, (kappa0_min - epsilon) / meta.sup_norms[j]));
  } else {
    const double slack = detail::grid_extrema(
                             [&meta, epsilon](double x, double y) {
                               double v = meta.kappa0(x, y) - epsilon;
                               for (const auto& t : meta.terms) v -= std::abs(t(x, y));
                               return v;
                             },
                             meta.dim)
                             .first;
    if (slack <= 0.0)
      throw std::runtime_error("construct_admissible_rho: no admissible rho, slack = " + std::to_string(slack));
    double scale = 0.5;
    for (int j = 0; j < meta.J; ++j) {
      rho.values.push_back(1.0 + slack * scale / meta.sup_norms[j]);
      scale *= 0.5;
    }
  }
  check_rho_admissible(rho, meta);
  if (!rho.admissible)
    throw std::runtime_error("construct_admissible_rho: constructed rho fails the grid check, margin = " +
                             std::to_string(rho.worst_margin));
  return rho;
}

struct LevelSums {
  std::vector<double> sums;  // S_k for k = 0..k_max
  std::vector<double> caps;  // sigma^k * S_0
  double sigma = 0.0;        // contraction factor sup (kappa_0-eps)/(kappa_0+eps-2 theta)
};

/// Level sums S_k = sum_{|nu|=k} a_1(rho^nu t_nu, rho^nu t_nu; (kappa_0+eps)/2 - theta)
/// of the weighted l2-summability argument, with the contraction caps
/// sigma^k S_0. The table must hold the full graded simplex up to its maximal
/// degree; partial levels would make the sums meaningless.
inline LevelSums weighted_l2_level_sums(const TaylorTable& table, const RhoSequence& rho,
                                        const AffineSaddleSystem& sys, double epsilon, double theta) {
  if (!sys.a1_weighted) throw std::invalid_argument("weighted_l2_level_sums: system lacks the a1_weighted callback");
  const int j_count = sys.term_count();
  if (static_cast<int>(rho.values.size()) < j_count)
    throw std::invalid_argument("weighted_l2_level_sums: rho does not cover all expansion terms");
  int k_max = 0;
  for (const auto& [nu, e] : table.entries) k_max = std::max(k_max, nu.total_degree());
  const IndexSet simplex = full_simplex(j_count, k_max);
  for (const auto& nu : simplex.members())
    if (!table.entries.count(nu))
      throw std::invalid_argument("weighted_l2_level_sums: table is not a full graded simplex, missing '" +
                                  nu.encode() + "'");

  const ParametrizationMeta& meta = sys.kappa_meta;
  FieldFn weight = [&meta, epsilon, theta](double x, double y) {
    return 0.5 * (meta.kappa0(x, y) + epsilon) - theta;
  };
  const Matrix a_w = sys.a1_weighted(weight);

  LevelSums out;
  out.sums.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (const auto& nu : simplex.members()) {
    const TaylorEntry& e = table.at(nu);
    double rho_pow = 1.0;
    for (const auto& ent : nu.entries())
      for (int k = 0; k < ent.exp; ++k) rho_pow *= rho.values[static_cast<std::size_t>(ent.dim - 1)];
    const double q = dot(e.t_u, matvec(a_w, e.t_u));
    out.sums[static_cast<std::size_t>(nu.total_degree())] += rho_pow * rho_pow * q;
  }

  out.sigma = detail::grid_extrema(
                  [&meta, epsilon, theta](double x, double y) {
                    const double k0 = meta.kappa0(x, y);
                    return (k0 - epsilon) / (k0 + epsilon - 2.0 * theta);
                  },
                  meta.dim)
                  .second;
  double cap = out.sums[0];
  for (int k = 0; k <= k_max; ++k) {
    out.caps.push_back(cap);
    cap *= out.sigma;
  }
  return out;
}

/// Tail after the N largest values, for each requested N; ties broken by
/// graded-lex order. N beyond the sequence length clamps to a zero tail.
inline std::vector<double> best_n_term_curve(const NormSequence& seq, const std::vector<std::size_t>& n_values) {
  const std::vector<double> sorted = sorted_descending(seq);
  // suffix sums accumulated from the smallest entry for stable tiny tails
  std::vector<double> suffix(sorted.size() + 1, 0.0);
  for (std::size_t k = sorted.size(); k > 0; --k) suffix[k - 1] = suffix[k] + sorted[k - 1];
  std::vector<double> tails;
  tails.reserve(n_values.size());
  for (std::size_t n : n_values) tails.push_back(n >= sorted.size() ? 0.0 : suffix[n]);
  return tails;
}

/// Least-squares slope of log(tail) against log(N) over the window, negated.
/// Zero or negative tails are excluded; fewer than 4 usable points is an
/// error.
inline double fit_rate(const std::vector<std::size_t>& n_values, const std::vector<double>& tails,
                       std::size_t n_lo, std::size_t n_hi) {
  if (n_values.size() != tails.size()) throw std::invalid_argument("fit_rate: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    if (n_values[k] < n_lo || n_values[k] > n_hi || tails[k] <= 0.0) continue;
    lx.push_back(std::log(static_cast<double>(n_values[k])));
    ly.push_back(std::log(tails[k]));
  }
  if (lx.size() < 4) throw std::runtime_error("fit_rate: insufficient data, only " + std::to_string(lx.size()) +
                                              " positive tails in the fit window");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  const double n = static_cast<double>(lx.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

/// Heuristic sparsity estimate from the decay of the expansion amplitudes:
/// fits ||kappa_j|| ~ j^{-sigma} and reports s = 1/sigma with the predicted
/// best-N-term rate r = 1/s - 1 = sigma - 1.
struct SparsityEstimate {
  double decay_sigma = 0.0;
  double s_estimate = 0.0;
  double predicted_rate = 0.0;
};

inline SparsityEstimate estimate_sparsity(const std::vector<double>& sup_norms) {
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < sup_norms.size(); ++j) {
    if (sup_norms[j] <= 0.0) continue;
    lx.push_back(std::log(static_cast<double>(j + 1)));
    ly.push_back(std::log(sup_norms[j]));
  }
  SparsityEstimate est;
  if (lx.size() < 2) return est;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  const double n = static_cast<double>(lx.size());
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) return est;
  est.decay_sigma = -(n * sxy - sx * sy) / denom;
  if (est.decay_sigma > 0.0) {
    est.s_estimate = 1.0 / est.decay_sigma;
    est.predicted_rate = est.decay_sigma - 1.0;
  }
  return est;
}

/// Best-N-term tails of a coefficient table together with the fitted and
/// predicted decay exponents. Tails are nonincreasing in N; the fit uses only
/// the window [fit_lo, fit_hi].
struct RateReport {
  std::vector<std::size_t> n_values;
  std::vector<double> tails_u;
  std::vector<double> tails_p;
  std::optional<double> fitted_rate_u;  // absent when the window lacks positive tails
  std::optional<double> fitted_rate_p;
  SparsityEstimate sparsity;
  std::size_t fit_lo = 0;
  std::size_t fit_hi = 0;
  std::vector<std::string> notes;
};

/// Tail curves over N = 1..len for both components, rate fits over the given
/// window (0 selects [len/10, 0.8 len]) and the amplitude-decay prediction.
inline RateReport build_rate_report(const NormSequence& norms_u, const NormSequence& norms_p,
                                    const std::vector<double>& sup_norms, std::size_t fit_lo, std::size_t fit_hi) {
  RateReport rep;
  for (std::size_t n = 1; n <= norms_u.items.size(); ++n) rep.n_values.push_back(n);
  rep.tails_u = best_n_term_curve(norms_u, rep.n_values);
  rep.tails_p = best_n_term_curve(norms_p, rep.n_values);
  rep.fit_lo = fit_lo == 0 ? std::max<std::size_t>(1, rep.n_values.size() / 10) : fit_lo;
  rep.fit_hi = fit_hi == 0 ? std::max<std::size_t>(rep.fit_lo + 1, rep.n_values.size() * 8 / 10) : fit_hi;
  try {
    rep.fitted_rate_u = fit_rate(rep.n_values, rep.tails_u, rep.fit_lo, rep.fit_hi);
  } catch (const std::runtime_error& e) {
    rep.notes.push_back(std::string("rate fit (u) skipped: ") + e.what());
  }
  try {
    rep.fitted_rate_p = fit_rate(rep.n_values, rep.tails_p, rep.fit_lo, rep.fit_hi);
  } catch (const std::runtime_error& e) {
    rep.notes.push_back(std::string("rate fit (p) skipped: ") + e.what());
  }
  rep.sparsity = estimate_sparsity(sup_norms);
  return rep;
}

namespace detail {
/// Deterministic uniform double in [-1, 1) from the raw generator; avoids the
/// implementation-defined std::uniform_real_distribution.
inline double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}
}  // namespace detail

struct ValidationSample {
  std::vector<double> y;
  bool corner = false;
  double err_u = 0.0;  // V-norm of u(y) - T_Lambda u(y)
  double err_p = 0.0;
};

struct ValidationReport {
  double sup_error_u = 0.0;
  double sup_error_p = 0.0;
  std::vector<ValidationSample> samples;
};

/// Sampled sup-norm surrogate error: all 2^min(J,6) sign corners (remaining
/// coordinates at +1) plus M seeded uniform samples from [-1,1]^J, solved
/// directly and compared against the truncated Taylor sum.
inline ValidationReport validate_sup_error(const AffineSaddleSystem& sys, const TaylorTable& table,
                                           int sample_count, std::uint64_t seed = default_seed) {
  if (sample_count < 1) throw std::invalid_argument("validate_sup_error: need at least one sample");
  const int j_count = sys.term_count();

  ValidationReport rep;
  const int corner_dims = std::min(j_count, 6);
  for (int mask = 0; mask < (1 << corner_dims); ++mask) {
    ValidationSample s;
    s.corner = true;
    s.y.assign(static_cast<std::size_t>(j_count), 1.0);
    for (int j = 0; j < corner_dims; ++j) s.y[j] = (mask >> j) & 1 ? 1.0 : -1.0;
    rep.samples.push_back(std::move(s));
  }
  std::mt19937_64 rng(seed);
  for (int k = 0; k < sample_count; ++k) {
    ValidationSample s;
    s.y.resize(static_cast<std::size_t>(j_count));
    for (int j = 0; j < j_count; ++j) s.y[j] = detail::uniform_pm1(rng);
    rep.samples.push_back(std::move(s));
  }

  parallel_for(rep.samples.size(), [&](std::size_t k) {
    ValidationSample& s = rep.samples[k];
    const SaddleSolution truth = solve_at(sys, s.y);
    const SaddleSolution approx = evaluate(table, sys, s.y);
    Vector du = truth.u, dp = truth.p;
    axpy(du, -1.0, approx.u);
    axpy(dp, -1.0, approx.p);
    s.err_u = gram_norm(du, sys.M_V);
    s.err_p = gram_norm(dp, sys.M_Q);
  });
  for (const auto& s : rep.samples) {
    rep.sup_error_u = std::max(rep.sup_error_u, s.err_u);
    rep.sup_error_p = std::max(rep.sup_error_p, s.err_p);
  }
  return rep;
}

}  // namespace sparse_saddle
