#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajcd/coefficient_vector.hpp"
#include "trajcd/dataset.hpp"
#include "trajcd/error.hpp"
#include "trajcd/model.hpp"
#include "trajcd/projection.hpp"

namespace trajcd {

struct ThresholdMethod {
  enum class Kind { Quantile, Multiple };
  Kind kind = Kind::Quantile;
  double parameter = 0.999;

  static ThresholdMethod quantile(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw InputError("threshold quantile must lie in (0, 1]");
    return {Kind::Quantile, q};
  }
  static ThresholdMethod multiple(double alpha) {
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
      throw InputError("threshold multiple must be >= 1");
    }
    return {Kind::Multiple, alpha};
  }

  std::string describe() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s(%g)", kind == Kind::Quantile ? "quantile" : "multiple",
                  parameter);
    return buf;
  }
};

struct Threshold {
  double value = 0.0;
  ThresholdMethod method;
  std::size_t calibration_size = 0;
};

enum class Verdict { Inlier, Outlier };

inline const char* to_string(Verdict v) { return v == Verdict::Inlier ? "inlier" : "outlier"; }

struct ScoreReport {
  std::string id;
  double cd = 0.0;
  double christoffel = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::Inlier;
  std::optional<double> baseline_l2;
};

// Nearest-rank quantile: the ceil(q * N)-th smallest value.
inline double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

template <typename Real>
std::vector<double> cd_values(const BasicChristoffelModel<Real>& model,
                              std::span<const CoefficientVector> data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& c : data) out.push_back(static_cast<double>(model.cd_value(c)));
  return out;
}

template <typename Real>
Threshold calibrate(const BasicChristoffelModel<Real>& model,
                    std::span<const CoefficientVector> data, ThresholdMethod method) {
  if (data.empty()) throw InputError("threshold calibration needs a non-empty dataset");
  double value = 0.0;
  if (method.kind == ThresholdMethod::Kind::Quantile) {
    value = nearest_rank_quantile(cd_values(model, data), method.parameter);
  } else {
    value = method.parameter * static_cast<double>(model.dimension());
  }
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw NumericalError("calibrated threshold is not a finite positive number");
  }
  return Threshold{value, method, data.size()};
}

template <typename Real>
Threshold calibrate(const BasicChristoffelModel<Real>& model, const TrajectoryDataset& data,
                    ThresholdMethod method) {
  const auto coeffs = data.coefficient_vectors();
  return calibrate(model, std::span<const CoefficientVector>(coeffs), method);
}

// Outlier iff cd > threshold; ties are inliers.
template <typename Real>
ScoreReport classify(const BasicChristoffelModel<Real>& model, const Threshold& threshold,
                     const CoefficientVector& c, std::string id = {}) {
  ScoreReport report;
  report.id = std::move(id);
  const Real cd = model.cd_value(c);
  report.cd = static_cast<double>(cd);
  report.christoffel = std::isfinite(report.cd) ? static_cast<double>(Real(1) / cd) : 0.0;
  report.threshold = threshold.value;
  report.verdict = report.cd > threshold.value ? Verdict::Outlier : Verdict::Inlier;
  return report;
}

inline std::string report_header() { return "id,cd,christoffel,threshold,verdict,baseline_l2"; }

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_report(const ScoreReport& r) {
  std::string line = r.id + ',' + format_number(r.cd) + ',' + format_number(r.christoffel) + ',' +
                     format_number(r.threshold) + ',' + to_string(r.verdict) + ',';
  if (r.baseline_l2) line += format_number(*r.baseline_l2);
  return line;
}

/// Nearest-trajectory distance min_g ||g - f|| under the Chebyshev probability
/// weight, with every curve resampled to a shared M-point Gauss-Chebyshev grid.
class NearestTrajectoryScorer {
 public:
  explicit NearestTrajectoryScorer(const TrajectoryDataset& data, int quad_points = 256)
      : nodes_(chebyshev_quadrature_nodes(quad_points)), domain_(data.domain()) {
    if (data.empty()) throw InputError("nearest-trajectory score needs a non-empty dataset");
    grid_.reserve(data.size());
    for (const auto& entry : data.entries()) grid_.push_back(entry.values_at(nodes_));
  }

  double score(const SampledTrajectory& f) const {
    if (!(f.domain() == domain_)) throw MismatchError("probe and dataset domains differ");
    return score_values(resample_to_nodes(f, nodes_));
  }
  double score(const CoefficientVector& f) const { return score_values(reconstruct(f, nodes_)); }

  double score_values(const std::vector<double>& f) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : grid_) {
      double acc = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) acc += (f[j] - g[j]) * (f[j] - g[j]);
      best = std::min(best, acc);
    }
    return std::sqrt(best / static_cast<double>(nodes_.size()));
  }

  const std::vector<double>& nodes() const noexcept { return nodes_; }

 private:
  std::vector<double> nodes_;
  Domain domain_;
  std::vector<std::vector<double>> grid_;
};

inline double nearest_trajectory_score(const TrajectoryDataset& data, const SampledTrajectory& f,
                                       int quad_points = 256) {
  return NearestTrajectoryScorer(data, quad_points).score(f);
}

/// The pointwise baseline: a bivariate Christoffel function of total degree d2
/// fitted on the graph points (t_j, g(t_j)) of every reference trajectory, with
/// t_j the M Gauss-Chebyshev nodes. A probe is judged point by point.
class PointwiseChristoffel {
 public:
  PointwiseChristoffel(const TrajectoryDataset& data, int degree, int quad_points = 256)
      : nodes_(chebyshev_quadrature_nodes(quad_points)), domain_(data.domain()) {
    if (data.empty()) throw InputError("pointwise baseline needs a non-empty dataset");
    std::vector<CoefficientVector> cloud;
    cloud.reserve(data.size() * nodes_.size());
    for (const auto& entry : data.entries()) {
      const auto values = entry.values_at(nodes_);
      for (std::size_t j = 0; j < nodes_.size(); ++j) cloud.push_back({nodes_[j], values[j]});
    }
    try {
      FitOptions options;
      options.epsilon = 0.0;
      model_.emplace(fit<long double>(std::span<const CoefficientVector>(cloud), degree, 2, options));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("degenerate point cloud for the pointwise baseline: ") +
                           e.what());
    }
    floor_ = std::numeric_limits<double>::infinity();
    for (const auto& point : cloud) floor_ = std::min(floor_, value(point));
  }

  double christoffel_at(double t, double x) const { return value(CoefficientVector{t, x}); }

  // Smallest pointwise Christoffel value over the reference point cloud.
  double in_cloud_floor() const noexcept { return floor_; }

  // Fraction of nodes where the probe's pointwise Christoffel value is below delta.
  double score_values(const std::vector<double>& f, double delta) const {
    std::size_t below = 0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (christoffel_at(nodes_[j], f[j]) < delta) ++below;
    }
    return static_cast<double>(below) / static_cast<double>(nodes_.size());
  }
  double score(const SampledTrajectory& f, double delta) const {
    if (!(f.domain() == domain_)) throw MismatchError("probe and dataset domains differ");
    return score_values(resample_to_nodes(f, nodes_), delta);
  }
  double score(const CoefficientVector& f, double delta) const {
    return score_values(reconstruct(f, nodes_), delta);
  }

  const ChristoffelModel& model() const { return *model_; }

 private:
  double value(const CoefficientVector& point) const {
    return static_cast<double>(model_->christoffel_value(point));
  }

  std::vector<double> nodes_;
  Domain domain_;
  std::optional<ChristoffelModel> model_;
  double floor_ = 0.0;
};

inline double naive_pointwise_score(const TrajectoryDataset& data, const SampledTrajectory& f,
                                    int d2, double delta, int quad_points = 256) {
  return PointwiseChristoffel(data, d2, quad_points).score(f, delta);
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

// Equal-width bins over [min, max]; the last bin is closed.
inline Histogram make_histogram(std::span<const double> values, int bins = 30) {
  if (bins < 1) throw InputError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  if (values.empty()) {
    h.edges.assign(static_cast<std::size_t>(bins) + 1, 0.0);
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + width * b);
  h.edges.back() = hi;
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= h.counts.size()) b = h.counts.size() - 1;
    ++h.counts[b];
  }
  return h;
}

}  // namespace trajcd
