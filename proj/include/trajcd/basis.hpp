#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajcd/coefficient_vector.hpp"
#include "trajcd/error.hpp"

namespace trajcd {

// Largest admissible dimension of P_{d,n}. The moment matrix is factored densely.
inline constexpr std::size_t kMaxBasisSize = 10000;

// Exponent sequence of one monomial f^a = prod_k <f, e_k>^{a_k}, stored densely
// over the first n coefficients.
struct MultiIndex {
  std::vector<int> exponents;

  int degree() const noexcept {
    int total = 0;
    for (int e : exponents) total += e;
    return total;
  }
  // 1-based harmonic degree: largest k with a_k != 0, 0 for the constant monomial.
  std::size_t harmonic_degree() const noexcept {
    for (std::size_t k = exponents.size(); k > 0; --k) {
      if (exponents[k - 1] != 0) return k;
    }
    return 0;
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

// binomial(n + d, n), or max() when it does not fit.
inline std::size_t basis_dimension(int d, int n) noexcept {
  if (d < 0 || n < 0) return 0;
  std::uint64_t result = 1;
  for (int i = 1; i <= d; ++i) {
    // result * (n + i) / i stays integral at each step.
    const std::uint64_t numerator = static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(i);
    if (result > std::numeric_limits<std::uint64_t>::max() / numerator) {
      return std::numeric_limits<std::size_t>::max();
    }
    result = result * numerator / static_cast<std::uint64_t>(i);
  }
  return static_cast<std::size_t>(result);
}

// All multi-indices of total degree <= d over n coefficients, in graded
// lexicographic order: grade ascending, and within a grade the exponent tuples in
// descending lexicographic order (so (1,0) precedes (0,1)). Index 0 is the constant.
class BasisEnumeration {
 public:
  BasisEnumeration(int d, int n) : d_(d), n_(n) {
    if (n < 1) throw InputError("harmonic degree n must be >= 1, got " + std::to_string(n));
    if (d < 0) throw InputError("algebraic degree d must be >= 0, got " + std::to_string(d));
    const std::size_t dim = basis_dimension(d, n);
    if (dim > kMaxBasisSize) {
      throw InputError("basis dimension binomial(" + std::to_string(n + d) + "," +
                       std::to_string(n) + ") exceeds the cap of " +
                       std::to_string(kMaxBasisSize));
    }
    indices_.reserve(dim);
    std::vector<int> current(static_cast<std::size_t>(n), 0);
    for (int grade = 0; grade <= d; ++grade) fill_grade(current, 0, grade);
  }

  int algebraic_degree() const noexcept { return d_; }
  int harmonic_degree() const noexcept { return n_; }
  std::size_t size() const noexcept { return indices_.size(); }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }

  static constexpr const char* ordering_name() noexcept { return "graded-lex"; }

 private:
  void fill_grade(std::vector<int>& current, std::size_t pos, int remaining) {
    if (pos + 1 == current.size()) {
      current[pos] = remaining;
      indices_.push_back(MultiIndex{current});
      current[pos] = 0;
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      current[pos] = a;
      fill_grade(current, pos + 1, remaining - a);
    }
    current[pos] = 0;
  }

  int d_;
  int n_;
  std::vector<MultiIndex> indices_;
};

inline BasisEnumeration enumerate_basis(int d, int n) { return BasisEnumeration(d, n); }

template <typename Real = double>
Real eval_monomial(std::span<const double> c, const MultiIndex& a) {
  if (a.harmonic_degree() > c.size()) {
    throw MismatchError("monomial depends on coefficient " + std::to_string(a.harmonic_degree()) +
                        " but the vector has only " + std::to_string(c.size()));
  }
  Real value = 1;
  for (std::size_t k = 0; k < a.exponents.size(); ++k) {
    for (int e = 0; e < a.exponents[k]; ++e) value *= static_cast<Real>(c[k]);
  }
  return value;
}

template <typename Real = double>
Real eval_monomial(const CoefficientVector& c, const MultiIndex& a) {
  return eval_monomial<Real>(c.values(), a);
}

// v_{d,n}(c): every basis monomial evaluated at c, constant first.
template <typename Real = double>
Eigen::Matrix<Real, Eigen::Dynamic, 1> eval_monomial_vector(std::span<const double> c,
                                                            const BasisEnumeration& basis) {
  const auto n = static_cast<std::size_t>(basis.harmonic_degree());
  const auto d = static_cast<std::size_t>(basis.algebraic_degree());
  if (c.size() < n) {
    throw MismatchError("coefficient vector has " + std::to_string(c.size()) +
                        " entries, the basis needs " + std::to_string(n));
  }
  // powers[k * (d + 1) + e] = c_k^e
  std::vector<Real> powers(n * (d + 1));
  for (std::size_t k = 0; k < n; ++k) {
    Real p = 1;
    for (std::size_t e = 0; e <= d; ++e) {
      powers[k * (d + 1) + e] = p;
      p *= static_cast<Real>(c[k]);
    }
  }
  Eigen::Matrix<Real, Eigen::Dynamic, 1> v(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& exps = basis[i].exponents;
    Real value = 1;
    for (std::size_t k = 0; k < n; ++k) {
      if (exps[k] != 0) value *= powers[k * (d + 1) + static_cast<std::size_t>(exps[k])];
    }
    v(static_cast<Eigen::Index>(i)) = value;
  }
  return v;
}

template <typename Real = double>
Eigen::Matrix<Real, Eigen::Dynamic, 1> eval_monomial_vector(const CoefficientVector& c,
                                                            const BasisEnumeration& basis) {
  return eval_monomial_vector<Real>(c.values(), basis);
}

}  // namespace trajcd
