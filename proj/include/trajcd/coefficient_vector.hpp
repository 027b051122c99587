#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "trajcd/error.hpp"

namespace trajcd {

// The first n orthonormal-basis coefficients <f, e_k> of a trajectory.
// Entry k (0-based) holds the coefficient of e_{k+1}; e_1 is the constant function.
class CoefficientVector {
 public:
  CoefficientVector() = default;
  explicit CoefficientVector(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    for (double value : coeffs_) {
      if (!std::isfinite(value)) throw InputError("coefficient vector has a non-finite entry");
    }
  }
  CoefficientVector(std::initializer_list<double> coeffs)
      : CoefficientVector(std::vector<double>(coeffs)) {}

  std::size_t size() const noexcept { return coeffs_.size(); }
  double operator[](std::size_t k) const { return coeffs_[k]; }
  std::span<const double> values() const noexcept { return coeffs_; }
  const std::vector<double>& vector() const noexcept { return coeffs_; }

  // Squared norm of the truncated projection: sum of the first n squared coefficients.
  double projected_norm2(std::size_t n) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < n && k < coeffs_.size(); ++k) acc += coeffs_[k] * coeffs_[k];
    return acc;
  }

  friend bool operator==(const CoefficientVector&, const CoefficientVector&) = default;

 private:
  std::vector<double> coeffs_;
};

}  // namespace trajcd
