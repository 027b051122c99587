#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "trajcd/coefficient_vector.hpp"
#include "trajcd/dataset.hpp"
#include "trajcd/error.hpp"
#include "trajcd/projection.hpp"

namespace trajcd::synth {

// Coefficient vectors emitted by the generators (room for n up to 8).
inline constexpr std::size_t kCoefficientLength = 8;
// Sampled curves live on the 33 Chebyshev-Lobatto points of [-1, 1].
inline constexpr int kCurvePoints = 33;
inline constexpr double kInlierRadius = 0.1;
inline constexpr double kOutlierRadius = 1.0;
inline constexpr double kExample2Amplitude = 0.1;
inline constexpr std::uint64_t kOutlierStream = 0xffffffff00000001ull;

/// One reproducible random stream. Streams are keyed by (seed, index) so that the
/// i-th trajectory gets the same draws however the batch is scheduled.
/// Engine: std::mt19937_64, seeded through the splitmix64 finalizer. Uniforms use
/// the top 53 bits and normals use Box-Muller, so draws are identical across
/// standard libraries.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream) : engine_(mix(seed, stream)) {}

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

// Uniform draw from the solid Euclidean ball: normalized Gaussian direction,
// radius scaled by U^(1/dim).
inline std::vector<double> sample_ball(int dim, double radius, StreamRng& rng) {
  if (dim < 1) throw InputError("ball dimension must be >= 1");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw InputError("ball radius must be >= 0");
  std::vector<double> x(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& xi : x) {
      xi = rng.normal();
      norm2 += xi * xi;
    }
  } while (norm2 == 0.0);
  const double scale = radius * std::pow(rng.uniform(), 1.0 / dim) / std::sqrt(norm2);
  for (auto& xi : x) xi *= scale;
  return x;
}

struct SynthSpec {
  std::vector<double> nominal;
  // 0-based coefficient positions receiving the ball perturbation.
  std::vector<std::size_t> perturbed;
  double radius = kInlierRadius;
  std::size_t count = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(radius > 0.0)) throw InputError("perturbation radius must be > 0");
    if (count < 1) throw InputError("sample count must be >= 1");
    if (perturbed.empty()) throw InputError("at least one coordinate must be perturbed");
    for (auto k : perturbed) {
      if (k >= nominal.size()) throw InputError("perturbed coordinate beyond the nominal length");
    }
  }
};

inline CoefficientVector perturb(const SynthSpec& spec, double radius, std::uint64_t stream) {
  StreamRng rng(spec.seed, stream);
  const auto eps = sample_ball(static_cast<int>(spec.perturbed.size()), radius, rng);
  auto coeffs = spec.nominal;
  for (std::size_t j = 0; j < eps.size(); ++j) coeffs[spec.perturbed[j]] += eps[j];
  return CoefficientVector(std::move(coeffs));
}

// The i-th inlier uses stream i.
inline std::vector<CoefficientVector> generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<CoefficientVector> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) out.push_back(perturb(spec, spec.radius, i));
  return out;
}

// Ascending Chebyshev-Lobatto points cos(j pi / (K-1)) on [-1, 1].
inline std::vector<double> curve_times() {
  std::vector<double> t(kCurvePoints);
  for (int j = 0; j < kCurvePoints; ++j) {
    t[static_cast<std::size_t>(j)] = -std::cos(j * std::numbers::pi / (kCurvePoints - 1));
  }
  t.front() = -1.0;
  t.back() = 1.0;
  t[kCurvePoints / 2] = 0.0;
  return t;
}

inline DatasetEntry make_entry(std::string id, CoefficientVector coeffs) {
  auto times = curve_times();
  auto values = reconstruct(coeffs, times);
  SampledTrajectory curve(std::move(times), std::move(values), Domain{}, id);
  return DatasetEntry{std::move(id), std::move(coeffs), std::move(curve)};
}

struct Experiment {
  TrajectoryDataset inliers;
  DatasetEntry outlier;
  DatasetEntry nominal;
};

// g0 = (e_2 + e_3 + e_4) / 3, i.e. (T_1 + T_2 + T_3) / 3 with the sqrt(2)-scaled
// Chebyshev polynomials.
inline std::vector<double> example_nominal() {
  std::vector<double> g0(kCoefficientLength, 0.0);
  g0[1] = g0[2] = g0[3] = 1.0 / 3.0;
  return g0;
}

// Perturbations act on the first four coefficients (constant, T_1, T_2, T_3).
inline SynthSpec example_spec(std::size_t count, std::uint64_t seed) {
  return SynthSpec{example_nominal(), {0, 1, 2, 3}, kInlierRadius, count, seed};
}

inline TrajectoryDataset make_inliers(const SynthSpec& spec) {
  TrajectoryDataset data(Domain{});
  auto coeffs = generate(spec);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    data.add(make_entry("g" + std::to_string(i + 1), std::move(coeffs[i])));
  }
  return data;
}

// Inliers g0 + ball(0.1) and one outlier g0 + ball(1.0) on the same coordinates.
inline Experiment generate_example1(std::size_t count, std::uint64_t seed) {
  const auto spec = example_spec(count, seed);
  return Experiment{make_inliers(spec),
                    make_entry("outlier", perturb(spec, kOutlierRadius, kOutlierStream)),
                    make_entry("nominal", CoefficientVector(spec.nominal))};
}

// Same inliers (harmonic degree 4); the outlier g0 + amplitude * e_5 adds the
// missing fifth harmonic.
inline Experiment generate_example2(std::size_t count, std::uint64_t seed,
                                    double amplitude = kExample2Amplitude) {
  const auto spec = example_spec(count, seed);
  auto outlier = spec.nominal;
  outlier[4] += amplitude;
  return Experiment{make_inliers(spec), make_entry("outlier", CoefficientVector(std::move(outlier))),
                    make_entry("nominal", CoefficientVector(spec.nominal))};
}

}  // namespace trajcd::synth
