#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sparse_saddle {

/// Finitely supported multi-index nu = (nu_1, nu_2, ...), stored sparsely as
/// (dimension, exponent) pairs with dimensions >= 1 strictly increasing and
/// exponents strictly positive. Dimensions absent from the list have exponent 0.
class MultiIndex {
public:
  struct Entry {
    int dim;
    int exp;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  MultiIndex() = default;

  explicit MultiIndex(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      if (entries_[k].dim < 1 || entries_[k].exp < 1)
        throw std::invalid_argument("MultiIndex: dimensions must be >= 1 and exponents >= 1");
      if (k > 0 && entries_[k - 1].dim >= entries_[k].dim)
        throw std::invalid_argument("MultiIndex: dimensions must be strictly increasing");
    }
  }

  static MultiIndex zero() { return MultiIndex{}; }

  /// Kronecker index e_j.
  static MultiIndex unit(int j) { return MultiIndex({{j, 1}}); }

  const std::vector<Entry>& entries() const { return entries_; }

  bool is_zero() const { return entries_.empty(); }

  /// |nu| = sum of exponents.
  int total_degree() const {
    int d = 0;
    for (const auto& e : entries_) d += e.exp;
    return d;
  }

  /// |nu|_0 = number of nonzero exponents.
  int support_size() const { return static_cast<int>(entries_.size()); }

  int max_dim() const { return entries_.empty() ? 0 : entries_.back().dim; }

  int exponent(int dim) const {
    for (const auto& e : entries_)
      if (e.dim == dim) return e.exp;
    return 0;
  }

  MultiIndex plus(int dim) const {
    std::vector<Entry> out;
    out.reserve(entries_.size() + 1);
    bool placed = false;
    for (const auto& e : entries_) {
      if (e.dim == dim) {
        out.push_back({e.dim, e.exp + 1});
        placed = true;
      } else {
        if (!placed && e.dim > dim) {
          out.push_back({dim, 1});
          placed = true;
        }
        out.push_back(e);
      }
    }
    if (!placed) out.push_back({dim, 1});
    return MultiIndex(std::move(out));
  }

  MultiIndex minus(int dim) const {
    std::vector<Entry> out;
    out.reserve(entries_.size());
    bool found = false;
    for (const auto& e : entries_) {
      if (e.dim == dim) {
        found = true;
        if (e.exp > 1) out.push_back({e.dim, e.exp - 1});
      } else {
        out.push_back(e);
      }
    }
    if (!found) throw std::invalid_argument("MultiIndex::minus: exponent already zero in dimension " + std::to_string(dim));
    return MultiIndex(std::move(out));
  }

  /// mu <= nu componentwise (partial order).
  bool dominated_by(const MultiIndex& nu) const {
    for (const auto& e : entries_)
      if (e.exp > nu.exponent(e.dim)) return false;
    return true;
  }

  /// Textual encoding `j1:v1;j2:v2` with ascending j; empty string for nu = 0.
  std::string encode() const {
    std::string s;
    for (const auto& e : entries_) {
      if (!s.empty()) s += ';';
      s += std::to_string(e.dim);
      s += ':';
      s += std::to_string(e.exp);
    }
    return s;
  }

  static MultiIndex decode(std::string_view s) {
    std::vector<Entry> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t semi = s.find(';', pos);
      std::string_view tok = s.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos);
      std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 || colon + 1 >= tok.size())
        throw std::invalid_argument("MultiIndex::decode: malformed token '" + std::string(tok) + "'");
      int dim = 0, exp = 0;
      try {
        dim = std::stoi(std::string(tok.substr(0, colon)));
        exp = std::stoi(std::string(tok.substr(colon + 1)));
      } catch (const std::exception&) {
        throw std::invalid_argument("MultiIndex::decode: malformed token '" + std::string(tok) + "'");
      }
      out.push_back({dim, exp});
      if (semi == std::string_view::npos) break;
      pos = semi + 1;
    }
    return MultiIndex(std::move(out));  // constructor re-validates ordering
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.entries_ == b.entries_; }

private:
  std::vector<Entry> entries_;
};

/// Total order: first by |nu|, then lexicographically on the dense prefix with
/// the larger leading exponent ranked earlier within a degree level.
inline int graded_lex_compare(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.total_degree(), db = b.total_degree();
  if (da != db) return da < db ? -1 : 1;
  auto ia = a.entries().begin(), ea = a.entries().end();
  auto ib = b.entries().begin(), eb = b.entries().end();
  while (ia != ea || ib != eb) {
    const int dim_a = (ia != ea) ? ia->dim : std::numeric_limits<int>::max();
    const int dim_b = (ib != eb) ? ib->dim : std::numeric_limits<int>::max();
    if (dim_a == dim_b) {
      if (ia->exp != ib->exp) return ia->exp > ib->exp ? -1 : 1;
      ++ia;
      ++ib;
    } else if (dim_a < dim_b) {
      return -1;  // a has the larger exponent in the first differing dimension
    } else {
      return 1;
    }
  }
  return 0;
}

struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const { return graded_lex_compare(a, b) < 0; }
};

/// y^nu = prod_j y_j^{nu_j}; empty product is 1 (0^0 := 1 convention).
/// y is 0-based over dimensions 1..y.size().
inline double monomial_eval(const MultiIndex& nu, std::span<const double> y) {
  double v = 1.0;
  for (const auto& e : nu.entries()) {
    if (e.dim > static_cast<int>(y.size()))
      throw std::invalid_argument("monomial_eval: dimension " + std::to_string(e.dim) +
                                  " of the multi-index is not covered by the parameter vector");
    double p = 1.0;
    const double yj = y[static_cast<std::size_t>(e.dim - 1)];
    for (int k = 0; k < e.exp; ++k) p *= yj;
    v *= p;
  }
  return v;
}

/// Finite set of multi-indices with insertion-order bookkeeping. Prefixes of
/// the insertion order reproduce the nested sets Lambda_N of a greedy run.
class IndexSet {
public:
  IndexSet() = default;

  bool contains(const MultiIndex& nu) const { return members_.count(nu) > 0; }

  /// Returns false if nu was already present.
  bool insert(const MultiIndex& nu) {
    if (!members_.insert(nu).second) return false;
    order_.push_back(nu);
    max_active_dim_ = std::max(max_active_dim_, nu.max_dim());
    return true;
  }

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  int max_active_dim() const { return max_active_dim_; }

  /// Members in graded-lex order.
  const std::set<MultiIndex, GradedLexLess>& members() const { return members_; }

  /// Members in the order they were inserted.
  const std::vector<MultiIndex>& insertion_order() const { return order_; }

  IndexSet prefix(std::size_t n) const {
    IndexSet out;
    for (std::size_t k = 0; k < n && k < order_.size(); ++k) out.insert(order_[k]);
    return out;
  }

private:
  std::set<MultiIndex, GradedLexLess> members_;
  std::vector<MultiIndex> order_;
  int max_active_dim_ = 0;
};

/// True iff every member has all its one-step predecessors in the set.
inline bool is_downward_closed(const IndexSet& set) {
  for (const auto& nu : set.members())
    for (const auto& e : nu.entries())
      if (!set.contains(nu.minus(e.dim))) return false;
  return true;
}

/// Admissible forward neighbors N(Lambda): indices outside Lambda whose
/// predecessors all lie in Lambda. Candidate dimensions are anchored to
/// 1..min(dim_cap, max_active_dim(Lambda)+1), so one fresh dimension is
/// exposed at a time.
inline std::vector<MultiIndex> forward_neighbors(const IndexSet& set, int dim_cap) {
  if (set.empty()) throw std::invalid_argument("forward_neighbors: index set is empty");
  if (!is_downward_closed(set)) throw std::invalid_argument("forward_neighbors: index set is not downward closed");
  if (dim_cap < 1) throw std::invalid_argument("forward_neighbors: dim_cap must be >= 1");

  const int dmax = std::min(dim_cap, set.max_active_dim() + 1);
  std::set<MultiIndex, GradedLexLess> found;
  for (const auto& nu : set.members()) {
    for (int j = 1; j <= dmax; ++j) {
      MultiIndex cand = nu.plus(j);
      if (set.contains(cand) || found.count(cand)) continue;
      bool admissible = true;
      for (const auto& e : cand.entries()) {
        if (!set.contains(cand.minus(e.dim))) {
          admissible = false;
          break;
        }
      }
      if (admissible) found.insert(std::move(cand));
    }
  }
  return {found.begin(), found.end()};
}

/// Full downward-closed simplex {nu : |nu| <= max_degree, supp nu <= dims 1..J},
/// inserted in graded-lex order. J = 0 yields {0}.
inline IndexSet full_simplex(int J, int max_degree) {
  if (J < 0 || max_degree < 0) throw std::invalid_argument("full_simplex: J and max_degree must be >= 0");
  IndexSet set;
  set.insert(MultiIndex::zero());
  if (J == 0) return set;
  // The anchored neighbor rule exposes one fresh dimension at a time, so
  // sweep until no admissible index of degree <= max_degree remains.
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& nu : forward_neighbors(set, J)) {
      if (nu.total_degree() <= max_degree) {
        set.insert(nu);
        grew = true;
      }
    }
  }
  return set;
}

/// A sequence of nonnegative reals attached to multi-indices.
struct NormSequence {
  std::vector<std::pair<MultiIndex, double>> items;

  static NormSequence over(const IndexSet& set, const std::map<MultiIndex, double, GradedLexLess>& values) {
    NormSequence seq;
    seq.items.reserve(set.size());
    for (const auto& nu : set.members()) seq.items.emplace_back(nu, values.at(nu));
    return seq;
  }
};

/// theta*_nu = max over mu in Lambda with nu <= mu of theta_mu. Lambda is the
/// index set carried by the sequence and must be downward closed. The result
/// is monotonically decreasing along the partial order.
inline NormSequence monotone_envelope(const NormSequence& seq) {
  IndexSet set;
  std::map<MultiIndex, double, GradedLexLess> env;
  for (const auto& [nu, v] : seq.items) {
    set.insert(nu);
    env[nu] = v;
  }
  if (env.size() != seq.items.size())
    throw std::invalid_argument("monotone_envelope: duplicate indices in the sequence");
  if (!is_downward_closed(set)) throw std::invalid_argument("monotone_envelope: index set is not downward closed");

  // Sweep in descending graded-lex order, pushing each maximum down to the
  // one-step predecessors; downward closure makes every chain reachable.
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    for (const auto& e : it->first.entries()) {
      auto pred = env.find(it->first.minus(e.dim));
      pred->second = std::max(pred->second, it->second);
    }
  }
  NormSequence out;
  out.items.reserve(env.size());
  for (const auto& [nu, v] : env) out.items.emplace_back(nu, v);
  return out;
}

/// Values sorted descending, ties broken by graded-lex order on the indices.
inline std::vector<double> sorted_descending(const NormSequence& seq) {
  std::vector<std::pair<MultiIndex, double>> items(seq.items);
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return graded_lex_compare(a.first, b.first) < 0;
  });
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& [nu, v] : items) out.push_back(v);
  return out;
}

struct StechkinResult {
  double tail;
  double bound;
};

/// Tail after keeping the N largest values, against the Stechkin bound
/// (sum theta^s)^{1/s} * N^{-(1/s - 1)}.
inline StechkinResult stechkin_tail(const NormSequence& seq, double s, std::size_t n_keep) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("stechkin_tail: s must lie in (0,1)");
  if (n_keep < 1 || n_keep > seq.items.size())
    throw std::invalid_argument("stechkin_tail: N must lie in [1, length]");
  const std::vector<double> v = sorted_descending(seq);
  double tail = 0.0;
  for (std::size_t k = v.size(); k > n_keep; --k) tail += v[k - 1];  // smallest first
  double pow_sum = 0.0;
  for (double x : v) pow_sum += std::pow(x, s);
  const double ls_norm = std::pow(pow_sum, 1.0 / s);
  const double rate = 1.0 / s - 1.0;
  return {tail, ls_norm * std::pow(static_cast<double>(n_keep), -rate)};
}

}  // namespace sparse_saddle
