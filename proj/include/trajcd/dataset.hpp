#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajcd/coefficient_vector.hpp"
#include "trajcd/error.hpp"
#include "trajcd/projection.hpp"

namespace trajcd {

struct DatasetEntry {
  std::string id;
  CoefficientVector coeffs;
  // Absent when the trajectory arrived as coefficients only.
  std::optional<SampledTrajectory> curve;

  // Values on [-1, 1] nodes: interpolated from the samples when present,
  // otherwise reconstructed from the coefficients.
  std::vector<double> values_at(std::span<const double> unit_nodes) const {
    if (curve) return resample_to_nodes(*curve, unit_nodes);
    return reconstruct(coeffs, unit_nodes);
  }
};

// The reference database of trajectories on one common domain.
class TrajectoryDataset {
 public:
  TrajectoryDataset() = default;
  explicit TrajectoryDataset(Domain domain) : domain_(domain) {}

  static TrajectoryDataset from_coefficients(std::vector<CoefficientVector> coeffs,
                                             Domain domain = {},
                                             std::vector<std::string> ids = {}) {
    if (!ids.empty() && ids.size() != coeffs.size()) {
      throw InputError("got " + std::to_string(ids.size()) + " ids for " +
                       std::to_string(coeffs.size()) + " coefficient vectors");
    }
    TrajectoryDataset data(domain);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      std::string id = ids.empty() ? "g" + std::to_string(i + 1) : std::move(ids[i]);
      data.add(DatasetEntry{std::move(id), std::move(coeffs[i]), std::nullopt});
    }
    return data;
  }

  static TrajectoryDataset from_trajectories(std::vector<SampledTrajectory> curves, int n,
                                             std::optional<int> quad_points = std::nullopt) {
    if (curves.empty()) return TrajectoryDataset();
    TrajectoryDataset data(curves.front().domain());
    for (std::size_t i = 0; i < curves.size(); ++i) {
      auto coeffs = project(curves[i], n, quad_points);
      std::string id = curves[i].id().empty() ? "g" + std::to_string(i + 1) : curves[i].id();
      data.add(DatasetEntry{std::move(id), std::move(coeffs), std::move(curves[i])});
    }
    return data;
  }

  void add(DatasetEntry entry) {
    if (entry.curve && !(entry.curve->domain() == domain_)) {
      throw MismatchError("trajectory '" + entry.id + "' is declared on a different domain");
    }
    entries_.push_back(std::move(entry));
  }

  const Domain& domain() const noexcept { return domain_; }
  const std::vector<DatasetEntry>& entries() const noexcept { return entries_; }
  const DatasetEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::vector<CoefficientVector> coefficient_vectors() const {
    std::vector<CoefficientVector> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.coeffs);
    return out;
  }

 private:
  Domain domain_;
  std::vector<DatasetEntry> entries_;
};

}  // namespace trajcd
