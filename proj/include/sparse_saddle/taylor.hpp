#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparse_saddle/linalg.hpp"
#include "sparse_saddle/multiindex.hpp"
#include "sparse_saddle/saddle.hpp"
#include "sparse_saddle/threads.hpp"

namespace sparse_saddle {

struct TaylorEntry {
  Vector t_u;
  Vector t_p;
  double norm_u = 0.0;  // V-norm of t_u
  double norm_p = 0.0;  // Q-norm of t_p
};

/// Taylor coefficients of the parametric solution at y = 0, indexed over a
/// downward-closed set. `entries` may hold more indices than `index_set`:
/// a greedy construction caches explored-but-unselected neighbors there.
struct TaylorTable {
  IndexSet index_set;
  std::map<MultiIndex, TaylorEntry, GradedLexLess> entries;
  std::uint64_t system_fingerprint = 0;

  const TaylorEntry& at(const MultiIndex& nu) const {
    auto it = entries.find(nu);
    if (it == entries.end()) throw std::invalid_argument("TaylorTable: no entry for index '" + nu.encode() + "'");
    return it->second;
  }

  std::size_t selected_count() const { return index_set.size(); }
  std::size_t explored_count() const { return entries.size() - index_set.size(); }

  NormSequence norms_u() const {
    NormSequence seq;
    seq.items.reserve(entries.size());
    for (const auto& [nu, e] : entries) seq.items.emplace_back(nu, e.norm_u);
    return seq;
  }

  NormSequence norms_p() const {
    NormSequence seq;
    seq.items.reserve(entries.size());
    for (const auto& [nu, e] : entries) seq.items.emplace_back(nu, e.norm_p);
    return seq;
  }
};

namespace detail {

/// Engine around a single factorization of K(0). Every coefficient system
/// shares the nominal left-hand operator; only the right-hand side changes:
///   a(t_nu, v; kappa_0) + b(v, t_nu^p) = -sum_{j in supp nu} a_1(t_{nu-e_j}, v; kappa_j),
///   b(t_nu, q) = 0,
/// with the root case nu = 0 driven by the original data (f, g).
class CoefficientEngine {
public:
  explicit CoefficientEngine(const AffineSaddleSystem& sys)
      : sys_(sys), lu_(assemble_at(sys, std::vector<double>(static_cast<std::size_t>(sys.term_count()), 0.0))) {}

  TaylorEntry solve_root() const {
    Vector rhs = stacked_rhs(sys_);
    return finish(lu_.solve(rhs));
  }

  TaylorEntry solve(const MultiIndex& nu, const std::map<MultiIndex, TaylorEntry, GradedLexLess>& table) const {
    Vector rhs(static_cast<std::size_t>(sys_.n_u() + sys_.n_q()), 0.0);
    for (const auto& e : nu.entries()) {
      if (e.dim > sys_.term_count())
        throw std::invalid_argument("compute_coefficients: index dimension " + std::to_string(e.dim) +
                                    " exceeds the J = " + std::to_string(sys_.term_count()) + " expansion terms");
      auto it = table.find(nu.minus(e.dim));
      if (it == table.end())
        throw std::logic_error("compute_coefficients: predecessor of '" + nu.encode() + "' missing");
      const Vector contrib = matvec(sys_.A_terms[static_cast<std::size_t>(e.dim - 1)], it->second.t_u);
      for (int i = 0; i < sys_.n_u(); ++i) rhs[i] -= contrib[i];
    }
    return finish(lu_.solve(rhs));
  }

private:
  TaylorEntry finish(Vector x) const {
    TaylorEntry entry;
    entry.t_u.assign(x.begin(), x.begin() + sys_.n_u());
    entry.t_p.assign(x.begin() + sys_.n_u(), x.end());
    entry.norm_u = gram_norm(entry.t_u, sys_.M_V);
    entry.norm_p = gram_norm(entry.t_p, sys_.M_Q);
    return entry;
  }

  const AffineSaddleSystem& sys_;
  LuFactorization lu_;
};

}  // namespace detail

/// Computes the Taylor coefficients for every index of a downward-closed set,
/// in graded order so that all predecessors exist, reusing one factorization
/// of K(0) throughout. Within a graded level the solves are independent and
/// run in parallel.
inline TaylorTable compute_coefficients(const AffineSaddleSystem& sys, const IndexSet& set) {
  if (set.empty()) throw std::invalid_argument("compute_coefficients: index set is empty");
  if (!is_downward_closed(set)) throw std::invalid_argument("compute_coefficients: index set is not downward closed");

  const detail::CoefficientEngine engine(sys);
  TaylorTable table;
  table.system_fingerprint = sys.fingerprint();
  for (const auto& nu : set.members()) table.index_set.insert(nu);

  // bucket by total degree; members() is graded-lex so buckets stay sorted
  std::map<int, std::vector<MultiIndex>> levels;
  for (const auto& nu : set.members()) levels[nu.total_degree()].push_back(nu);

  for (const auto& level : levels) {
    const std::vector<MultiIndex>& indices = level.second;
    if (level.first == 0) {
      table.entries[MultiIndex::zero()] = engine.solve_root();
      continue;
    }
    std::vector<TaylorEntry> results(indices.size());
    parallel_for(indices.size(), [&](std::size_t k) { results[k] = engine.solve(indices[k], table.entries); });
    for (std::size_t k = 0; k < indices.size(); ++k) table.entries[indices[k]] = std::move(results[k]);
  }
  return table;
}

/// Truncated Taylor sum T_Lambda(y) = sum_{nu in Lambda} t_nu y^nu, summed in
/// graded-lex order. Only selected indices contribute; cached explored
/// neighbors are ignored.
inline SaddleSolution evaluate(const TaylorTable& table, const AffineSaddleSystem& sys,
                               const std::vector<double>& y) {
  if (static_cast<int>(y.size()) < table.index_set.max_active_dim())
    throw std::invalid_argument("evaluate: parameter vector does not cover the active dimensions");
  SaddleSolution out;
  out.u.assign(static_cast<std::size_t>(sys.n_u()), 0.0);
  out.p.assign(static_cast<std::size_t>(sys.n_q()), 0.0);
  for (const auto& nu : table.index_set.members()) {
    const double factor = monomial_eval(nu, y);
    if (factor == 0.0 && !nu.is_zero()) continue;
    const TaylorEntry& e = table.at(nu);
    axpy(out.u, factor, e.t_u);
    axpy(out.p, factor, e.t_p);
  }
  return out;
}

struct AdaptiveResult {
  TaylorTable table;          // index_set carries the selection order
  std::vector<double> indicators;  // indicator of each selected index, by rank
};

/// Greedy construction of nested downward-closed sets: start from {0}, at
/// each step solve every unexplored admissible forward neighbor and select
/// the argmax of the mixed indicator
///   weight_u * ||t_nu^u|| / ||t_0^u||  +  (1 - weight_u) * ||t_nu^p|| / ||t_0^p||,
/// ties broken by graded-lex order. weight_u = 1 or 0 reproduces the
/// separate u-/p-driven sets. All explored coefficients stay in the table.
inline AdaptiveResult adaptive_construct(const AffineSaddleSystem& sys, int n_target, double weight_u = 0.5) {
  if (n_target < 1) throw std::invalid_argument("adaptive_construct: N_target must be >= 1");
  if (!(weight_u >= 0.0 && weight_u <= 1.0)) throw std::invalid_argument("adaptive_construct: weight_u must lie in [0,1]");

  const detail::CoefficientEngine engine(sys);
  AdaptiveResult res;
  res.table.system_fingerprint = sys.fingerprint();
  res.table.entries[MultiIndex::zero()] = engine.solve_root();
  res.table.index_set.insert(MultiIndex::zero());
  res.indicators.push_back(1.0);

  const double root_u = res.table.entries.at(MultiIndex::zero()).norm_u;
  const double root_p = res.table.entries.at(MultiIndex::zero()).norm_p;
  auto indicator = [&](const TaylorEntry& e) {
    double v = 0.0;
    if (root_u > 0.0) v += weight_u * e.norm_u / root_u;
    if (root_p > 0.0) v += (1.0 - weight_u) * e.norm_p / root_p;
    return v;
  };

  const int dim_cap = sys.term_count();
  while (dim_cap > 0 && static_cast<int>(res.table.index_set.size()) < n_target) {
    const std::vector<MultiIndex> neighbors = forward_neighbors(res.table.index_set, dim_cap);
    if (neighbors.empty()) break;

    std::vector<const MultiIndex*> fresh;
    for (const auto& nu : neighbors)
      if (!res.table.entries.count(nu)) fresh.push_back(&nu);
    std::vector<TaylorEntry> results(fresh.size());
    parallel_for(fresh.size(), [&](std::size_t k) { results[k] = engine.solve(*fresh[k], res.table.entries); });
    for (std::size_t k = 0; k < fresh.size(); ++k) res.table.entries[*fresh[k]] = std::move(results[k]);

    const MultiIndex* best = nullptr;
    double best_value = -1.0;
    for (const auto& nu : neighbors) {
      const double v = indicator(res.table.entries.at(nu));
      if (v > best_value || (v == best_value && best && graded_lex_compare(nu, *best) < 0)) {
        best_value = v;
        best = &nu;
      }
    }
    // all-zero indicators fall through to the graded-lex smallest neighbor,
    // which the loop above already yields (first neighbor wins at equality)
    res.table.index_set.insert(*best);
    res.indicators.push_back(best_value);
  }
  return res;
}

struct BoundViolation {
  MultiIndex nu;
  double norm_u;
  double bound;
};

/// Checks ||t_nu^u||_V <= C_u rho^{-nu} (1 + 5%) for every table entry and
/// returns the violations. rho must be a per-dimension sequence with every
/// rho_j > 1; admissibility of rho itself is the analysis module's concern.
inline std::vector<BoundViolation> coefficient_bound_check(const TaylorTable& table, const std::vector<double>& rho,
                                                           double c_u) {
  for (double r : rho)
    if (!(r > 1.0)) throw std::invalid_argument("coefficient_bound_check: every rho_j must exceed 1");
  std::vector<BoundViolation> out;
  for (const auto& [nu, e] : table.entries) {
    double rho_pow = 1.0;
    for (const auto& ent : nu.entries()) {
      if (ent.dim > static_cast<int>(rho.size()))
        throw std::invalid_argument("coefficient_bound_check: rho does not cover dimension " + std::to_string(ent.dim));
      for (int k = 0; k < ent.exp; ++k) rho_pow *= rho[static_cast<std::size_t>(ent.dim - 1)];
    }
    const double bound = c_u / rho_pow * 1.05;
    if (e.norm_u > bound) out.push_back({nu, e.norm_u, bound});
  }
  return out;
}

/// Largest kernel-condition defect ||B t_nu^u||_2 / (1 + ||t_nu^u||_2) over
/// nu != 0; the second block row forces it to solver accuracy.
inline double kernel_condition_max(const TaylorTable& table, const AffineSaddleSystem& sys) {
  double worst = 0.0;
  for (const auto& [nu, e] : table.entries) {
    if (nu.is_zero()) continue;
    worst = std::max(worst, norm2(matvec(sys.B, e.t_u)) / (1.0 + norm2(e.t_u)));
  }
  return worst;
}

}  // namespace sparse_saddle
