#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "model_io.hpp"

namespace hogwild {

using IndexSet = std::vector<NodeId>;

/// Multilinear polynomial Σ_S a_S Π_{i∈S} x_i on ±1 variables, stored in
/// subset form: each key is a sorted, duplicate-free index set. Zero
/// coefficients are dropped.
class MultilinearFunction {
 public:
  MultilinearFunction() = default;

  explicit MultilinearFunction(std::map<IndexSet, double> terms) {
    for (auto& [subset, coeff] : terms) {
      if (!std::isfinite(coeff)) throw ValidationError("non-finite coefficient");
      for (std::size_t k = 1; k < subset.size(); ++k) {
        if (subset[k - 1] >= subset[k]) throw ValidationError("index set must be sorted and duplicate-free");
      }
      if (coeff != 0.0) terms_.emplace(subset, coeff);
    }
    rebuild();
  }

  // Accepts unsorted subsets and sums coefficients of equal subsets. An index
  // repeated inside one subset is rejected (reduce x_i^2 = 1 first).
  static MultilinearFunction from_terms(const std::vector<std::pair<IndexSet, double>>& terms) {
    std::map<IndexSet, double> acc;
    for (auto [subset, coeff] : terms) {
      std::sort(subset.begin(), subset.end());
      if (std::adjacent_find(subset.begin(), subset.end()) != subset.end()) {
        throw ValidationError("index repeated within a monomial");
      }
      acc[subset] += coeff;
    }
    return MultilinearFunction(std::move(acc));
  }

  std::size_t degree() const noexcept { return degree_; }
  double a_inf() const noexcept { return a_inf_; }
  const std::map<IndexSet, double>& terms() const noexcept { return terms_; }
  // Smallest n on which the function is defined.
  std::size_t min_size() const noexcept { return min_size_; }

  double coefficient(const IndexSet& subset) const {
    const auto it = terms_.find(subset);
    return it == terms_.end() ? 0.0 : it->second;
  }

  double operator()(std::span<const Spin> x) const {
    if (x.size() < min_size_) throw BoundsError("function references a node outside the configuration");
    double total = 0.0;
    for (std::size_t t = 0; t < coeffs_.size(); ++t) {
      int sign = 1;
      for (std::size_t k = offsets_[t]; k < offsets_[t + 1]; ++k) sign *= x[flat_[k]];
      total += coeffs_[t] * sign;
    }
    return total;
  }

  friend bool operator==(const MultilinearFunction& a, const MultilinearFunction& b) {
    return a.terms_ == b.terms_;
  }

 private:
  void rebuild() {
    degree_ = 0;
    a_inf_ = 0.0;
    min_size_ = 0;
    offsets_.assign(1, 0);
    for (const auto& [subset, coeff] : terms_) {
      degree_ = std::max(degree_, subset.size());
      a_inf_ = std::max(a_inf_, std::abs(coeff));
      if (!subset.empty()) min_size_ = std::max<std::size_t>(min_size_, subset.back() + 1);
      flat_.insert(flat_.end(), subset.begin(), subset.end());
      offsets_.push_back(flat_.size());
      coeffs_.push_back(coeff);
    }
  }

  std::map<IndexSet, double> terms_;
  std::size_t degree_ = 0;
  double a_inf_ = 0.0;
  std::size_t min_size_ = 0;
  std::vector<NodeId> flat_;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> coeffs_;
};

inline double eval(const MultilinearFunction& f, const Configuration& x) { return f(x.spins()); }

// Σ_{i≠j} x_i x_j, i.e. coefficient 2 on every pair.
inline MultilinearFunction complete_bilinear(std::size_t n) {
  if (n < 2) throw InvalidArgumentError("complete bilinear function needs n >= 2");
  std::map<IndexSet, double> terms;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) terms.emplace(IndexSet{i, j}, 2.0);
  }
  return MultilinearFunction(std::move(terms));
}

// Σ_i coeff · x_i.
inline MultilinearFunction linear_sum(std::size_t n, double coeff = 1.0) {
  std::map<IndexSet, double> terms;
  for (NodeId i = 0; i < n; ++i) terms.emplace(IndexSet{i}, coeff);
  return MultilinearFunction(std::move(terms));
}

/// Degree-d polynomial written with ordered index tuples,
/// Σ a_{i1..id} x_{i1}...x_{id}, permutation-symmetric. Repeated indices are
/// allowed and reduce through x_i^2 = 1.
struct TensorForm {
  std::size_t degree = 0;
  std::map<IndexSet, double> entries;
};

namespace detail {

inline bool is_symmetric(const TensorForm& t, double tol = 1e-12) {
  for (const auto& [tuple, value] : t.entries) {
    IndexSet perm = tuple;
    std::sort(perm.begin(), perm.end());
    do {
      const auto it = t.entries.find(perm);
      const double other = it == t.entries.end() ? 0.0 : it->second;
      if (std::abs(other - value) > tol * std::max(1.0, std::abs(value))) return false;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return true;
}

}  // namespace detail

/// Collapses a symmetric tensor to subset form. Each tuple reduces to the set
/// of indices occurring an odd number of times; summing over all tuples
/// aggregates each size-d subset with multiplicity d!.
inline MultilinearFunction canonicalize(const TensorForm& t) {
  std::map<IndexSet, double> acc;
  for (const auto& [tuple, value] : t.entries) {
    if (tuple.size() != t.degree) throw ValidationError("tensor entry has the wrong arity");
  }
  if (!detail::is_symmetric(t)) throw ValidationError("tensor is not permutation-symmetric");
  for (const auto& [tuple, value] : t.entries) {
    IndexSet sorted = tuple;
    std::sort(sorted.begin(), sorted.end());
    IndexSet odd;
    for (std::size_t k = 0; k < sorted.size();) {
      std::size_t m = k;
      while (m < sorted.size() && sorted[m] == sorted[k]) ++m;
      if ((m - k) % 2 == 1) odd.push_back(sorted[k]);
      k = m;
    }
    acc[odd] += value;
  }
  for (auto it = acc.begin(); it != acc.end();) {
    it = std::abs(it->second) < 1e-15 ? acc.erase(it) : std::next(it);
  }
  return MultilinearFunction(std::move(acc));
}

/// Inverse of canonicalize at a fixed degree: every subset S with d - |S|
/// even is padded with pairs of a repeated index and its coefficient is
/// spread evenly over the distinct permutations of the padded tuple.
inline TensorForm expand(const MultilinearFunction& f, std::size_t d) {
  TensorForm t{d, {}};
  for (const auto& [subset, coeff] : f.terms()) {
    if (subset.size() > d || (d - subset.size()) % 2 != 0) {
      throw ValidationError("monomial of size " + std::to_string(subset.size()) +
                            " cannot be written at degree " + std::to_string(d));
    }
    IndexSet tuple = subset;
    const NodeId pad = subset.empty() ? 0 : subset.front();
    while (tuple.size() < d) tuple.push_back(pad);
    std::sort(tuple.begin(), tuple.end());
    std::vector<IndexSet> perms;
    do {
      perms.push_back(tuple);
    } while (std::next_permutation(tuple.begin(), tuple.end()));
    const double share = coeff / static_cast<double>(perms.size());
    for (auto& p : perms) t.entries[p] += share;
  }
  return t;
}

/// Function description format: one monomial per line, "i j ... coeff";
/// a line holding only a coefficient is the constant term. Monomials
/// naming the same subset are summed. '#' starts a comment.
inline MultilinearFunction parse_function(std::istream& in) {
  std::vector<std::pair<IndexSet, double>> terms;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = text::split_ws(text::trim(text::strip_comment(line)));
    if (tok.empty()) continue;
    IndexSet subset;
    for (std::size_t k = 0; k + 1 < tok.size(); ++k) {
      std::uint64_t v = 0;
      if (!text::parse_u64(tok[k], v)) throw ParseError(lineno, "expected a node index");
      subset.push_back(NodeId(v));
    }
    double coeff = 0;
    if (!text::parse_double(tok.back(), coeff)) throw ParseError(lineno, "expected a finite coefficient");
    IndexSet sorted = subset;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ParseError(lineno, "index repeated within a monomial");
    }
    terms.emplace_back(std::move(subset), coeff);
  }
  return MultilinearFunction::from_terms(terms);
}

inline MultilinearFunction load_function_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open function file '" + path + "'");
  try {
    return parse_function(in);
  } catch (const ParseError& e) {
    throw ParseError(path, e.line(), e.detail());
  }
}

inline void write_function(std::ostream& out, const MultilinearFunction& f) {
  for (const auto& [subset, coeff] : f.terms()) {
    for (auto i : subset) out << i << ' ';
    out << text::format_double(coeff) << '\n';
  }
}

}  // namespace hogwild
