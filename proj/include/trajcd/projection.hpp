#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajcd/coefficient_vector.hpp"
#include "trajcd/error.hpp"

namespace trajcd {

// Largest harmonic truncation accepted by project().
inline constexpr int kMaxHarmonicDegree = 4096;

// Time interval a trajectory is declared on; mapped affinely onto [-1, 1].
struct Domain {
  double lo = -1.0;
  double hi = 1.0;

  Domain() = default;
  Domain(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw InputError("domain must satisfy lo < hi with finite bounds");
    }
  }

  double to_unit(double t) const noexcept { return (2.0 * t - lo - hi) / (hi - lo); }
  double from_unit(double u) const noexcept { return 0.5 * (lo + hi) + 0.5 * (hi - lo) * u; }
  bool contains(double t) const noexcept { return t >= lo && t <= hi; }

  friend bool operator==(const Domain&, const Domain&) = default;
};

// Raw samples (t_i, g(t_i)) of one trajectory.
class SampledTrajectory {
 public:
  SampledTrajectory(std::vector<double> times, std::vector<double> values, Domain domain = {},
                    std::string id = {})
      : times_(std::move(times)), values_(std::move(values)), domain_(domain), id_(std::move(id)) {
    const std::string who = id_.empty() ? std::string("trajectory") : "trajectory '" + id_ + "'";
    if (times_.size() != values_.size()) {
      throw InputError(who + ": " + std::to_string(times_.size()) + " times but " +
                       std::to_string(values_.size()) + " values");
    }
    if (times_.size() < 2) throw InputError(who + ": at least 2 samples are required");
    for (std::size_t i = 0; i < times_.size(); ++i) {
      if (!std::isfinite(times_[i]) || !std::isfinite(values_[i])) {
        throw InputError(who + ": non-finite sample at row " + std::to_string(i + 1));
      }
      if (i > 0 && !(times_[i] > times_[i - 1])) {
        throw InputError(who + ": times not strictly increasing at row " + std::to_string(i + 1));
      }
    }
    if (!domain_.contains(times_.front()) || !domain_.contains(times_.back())) {
      throw MismatchError(who + ": sample times leave the declared domain [" +
                          std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
    }
  }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const Domain& domain() const noexcept { return domain_; }
  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return times_.size(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  Domain domain_;
  std::string id_;
};

inline int default_quad_points(int n) { return std::max(256, 8 * n); }

// Gauss-Chebyshev nodes t_j = cos((2j-1)pi/(2M)), j = 1..M, in descending order.
// Every node carries weight 1/M under the Chebyshev probability measure.
inline std::vector<double> chebyshev_quadrature_nodes(int m) {
  if (m < 2) throw InputError("quadrature needs at least 2 points, got " + std::to_string(m));
  std::vector<double> nodes(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) {
    nodes[static_cast<std::size_t>(j - 1)] = std::cos((2.0 * j - 1.0) * std::numbers::pi / (2.0 * m));
  }
  return nodes;
}

// Piecewise-linear interpolation at nodes given on [-1, 1]; clamps outside the sampled range.
inline std::vector<double> resample_to_nodes(const SampledTrajectory& traj,
                                             std::span<const double> nodes) {
  if (traj.size() == 0) throw InputError("cannot resample an empty trajectory");
  std::vector<double> unit_times(traj.size());
  std::transform(traj.times().begin(), traj.times().end(), unit_times.begin(),
                 [&](double t) { return traj.domain().to_unit(t); });
  const auto& values = traj.values();

  std::vector<double> out;
  out.reserve(nodes.size());
  for (double u : nodes) {
    if (u <= unit_times.front()) {
      out.push_back(values.front());
      continue;
    }
    if (u >= unit_times.back()) {
      out.push_back(values.back());
      continue;
    }
    const auto upper = std::upper_bound(unit_times.begin(), unit_times.end(), u);
    const auto i = static_cast<std::size_t>(upper - unit_times.begin());
    const double t0 = unit_times[i - 1];
    const double t1 = unit_times[i];
    const double w = (u - t0) / (t1 - t0);
    out.push_back((1.0 - w) * values[i - 1] + w * values[i]);
  }
  return out;
}

// Coefficients from values at the M Chebyshev nodes (as returned by
// chebyshev_quadrature_nodes(M)). T_k(t_j) is evaluated as cos(k * theta_j).
inline CoefficientVector project_node_values(std::span<const double> node_values, int n) {
  if (n < 1) throw InputError("harmonic truncation n must be >= 1");
  if (n > kMaxHarmonicDegree) {
    throw InputError("harmonic truncation " + std::to_string(n) + " exceeds the cap of " +
                     std::to_string(kMaxHarmonicDegree));
  }
  const auto m = node_values.size();
  if (m < 2) throw InputError("quadrature needs at least 2 points");
  for (double value : node_values) {
    if (!std::isfinite(value)) throw InputError("non-finite value at a quadrature node");
  }
  std::vector<double> coeffs(static_cast<std::size_t>(n), 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double theta = (2.0 * static_cast<double>(j) + 1.0) * std::numbers::pi /
                         (2.0 * static_cast<double>(m));
    coeffs[0] += node_values[j];
    for (int k = 1; k < n; ++k) coeffs[static_cast<std::size_t>(k)] += node_values[j] * std::cos(k * theta);
  }
  coeffs[0] *= inv_m;
  for (int k = 1; k < n; ++k) coeffs[static_cast<std::size_t>(k)] *= std::numbers::sqrt2 * inv_m;
  return CoefficientVector(std::move(coeffs));
}

// <f, e_k> for k = 1..n with e_1 = 1, e_k = sqrt(2) T_{k-1}, by an M-point Gauss-Chebyshev rule.
inline CoefficientVector project(const SampledTrajectory& traj, int n,
                                 std::optional<int> quad_points = std::nullopt) {
  if (n < 1) throw InputError("harmonic truncation n must be >= 1");
  const int m = quad_points.value_or(default_quad_points(n));
  const auto nodes = chebyshev_quadrature_nodes(m);
  const auto values = resample_to_nodes(traj, nodes);
  return project_node_values(values, n);
}

// c_1 + sum_{k>=2} c_k sqrt(2) T_{k-1}(t) by Clenshaw's recurrence; t on [-1, 1].
inline double reconstruct(const CoefficientVector& c, double t) {
  const std::size_t n = c.size();
  if (n == 0) return 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  for (std::size_t k = n - 1; k >= 1; --k) {
    const double b0 = std::numbers::sqrt2 * c[k] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + t * b1 - b2;
}

inline std::vector<double> reconstruct(const CoefficientVector& c, std::span<const double> ts) {
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(reconstruct(c, t));
  return out;
}

}  // namespace trajcd
