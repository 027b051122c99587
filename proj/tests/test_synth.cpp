#include <gtest/gtest.h>

#include <cmath>
#include <span>
#include <sstream>

#include "trajcd/csv.hpp"
#include "trajcd/model.hpp"
#include "trajcd/synth.hpp"

using namespace trajcd;

TEST(SampleBall, DrawsStayInsideTheBall) {
  synth::StreamRng rng(42, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto x = synth::sample_ball(3, 0.1, rng);
    double norm2 = 0.0;
    for (double xi : x) norm2 += xi * xi;
    ASSERT_LE(std::sqrt(norm2), 0.1);
  }
}

TEST(SampleBall, ZeroRadiusGivesTheOrigin) {
  synth::StreamRng rng(1, 0);
  for (double xi : synth::sample_ball(4, 0.0, rng)) EXPECT_EQ(xi, 0.0);
  EXPECT_THROW(synth::sample_ball(0, 1.0, rng), InputError);
  EXPECT_THROW(synth::sample_ball(2, -1.0, rng), InputError);
}

TEST(SampleBall, RadialLawMatchesUniformBall) {
  // |x|^dim = r^dim U, so E |x|^dim = r^dim / 2
  for (int dim : {1, 3, 4}) {
    synth::StreamRng rng(7, static_cast<std::uint64_t>(dim));
    const double radius = 0.5;
    double acc = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const auto x = synth::sample_ball(dim, radius, rng);
      double norm2 = 0.0;
      for (double xi : x) norm2 += xi * xi;
      acc += std::pow(std::sqrt(norm2), dim);
    }
    const double expected = std::pow(radius, dim) / 2.0;
    EXPECT_NEAR(acc / draws, expected, 0.02 * expected) << dim;
  }
}

TEST(StreamRng, StreamsAreIndependentOfOrder) {
  synth::StreamRng a(5, 3), b(5, 3), c(5, 4), d(6, 3);
  const double first = a.uniform();
  EXPECT_EQ(first, b.uniform());
  EXPECT_NE(first, c.uniform());
  EXPECT_NE(first, d.uniform());
}

TEST(Example1, Construction) {
  const auto experiment = synth::generate_example1(300, 9);
  const auto& g0 = experiment.nominal.coeffs;
  EXPECT_EQ(experiment.inliers.size(), 300u);
  for (const auto& entry : experiment.inliers.entries()) {
    ASSERT_EQ(entry.coeffs.size(), synth::kCoefficientLength);
    double dist2 = 0.0;
    for (std::size_t k = 0; k < entry.coeffs.size(); ++k) {
      if (k >= 4) EXPECT_EQ(entry.coeffs[k], 0.0);
      dist2 += (entry.coeffs[k] - g0[k]) * (entry.coeffs[k] - g0[k]);
    }
    EXPECT_LE(std::sqrt(dist2), 0.1);
  }
  double outlier_dist2 = 0.0;
  for (std::size_t k = 0; k < g0.size(); ++k) {
    outlier_dist2 += std::pow(experiment.outlier.coeffs[k] - g0[k], 2);
  }
  EXPECT_LE(std::sqrt(outlier_dist2), 1.0);
  EXPECT_DOUBLE_EQ(g0[1], 1.0 / 3.0);
  EXPECT_EQ(g0[0], 0.0);
}

TEST(Example1, Deterministic) {
  const auto write = [](const synth::Experiment& e) {
    std::ostringstream out;
    csv::write_coefficients(out, {"o"}, {e.outlier.coeffs});
    for (const auto& entry : e.inliers.entries()) csv::write_coefficients(out, {entry.id}, {entry.coeffs});
    return out.str();
  };
  EXPECT_EQ(write(synth::generate_example1(100, 3)), write(synth::generate_example1(100, 3)));
  EXPECT_NE(write(synth::generate_example1(100, 3)), write(synth::generate_example1(100, 4)));
  // prefix stability: the first draws do not depend on the batch size
  EXPECT_EQ(synth::generate_example1(10, 3).inliers[4].coeffs,
            synth::generate_example1(100, 3).inliers[4].coeffs);
}

TEST(Example1, CurvesFollowTheCoefficients) {
  const auto experiment = synth::generate_example1(5, 1);
  const auto& entry = experiment.inliers[2];
  ASSERT_TRUE(entry.curve);
  ASSERT_EQ(entry.curve->size(), 33u);
  EXPECT_EQ(entry.curve->times().front(), -1.0);
  EXPECT_EQ(entry.curve->times().back(), 1.0);
  for (std::size_t i = 0; i < entry.curve->size(); ++i) {
    EXPECT_NEAR(entry.curve->values()[i], reconstruct(entry.coeffs, entry.curve->times()[i]), 1e-15);
  }
  // piecewise-linear interpolation on 33 points biases the projection slightly
  const auto projected = project(*entry.curve, 4);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(projected[k], entry.coeffs[k], 5e-3);
}

TEST(Example2, FifthHarmonicOnlyInTheOutlier) {
  const auto experiment = synth::generate_example2(200, 2);
  for (const auto& entry : experiment.inliers.entries()) EXPECT_EQ(entry.coeffs[4], 0.0);
  EXPECT_NEAR(experiment.outlier.coeffs[4], 0.1, 1e-16);
  const auto model = fit(experiment.inliers, 1, 5);
  EXPECT_LE(model.moment_matrix().row(5).cwiseAbs().maxCoeff(), 1e-14L);
  EXPECT_GE(static_cast<double>(model.cd_value(experiment.outlier.coeffs)), 1e3 * 6);
}

TEST(Example2, OutlierCdMatchesNearKernelEstimate) {
  // The outlier's monomial vector has component 0.1 along the zero direction of
  // M, whose regularized eigenvalue is epsilon: cd ~ 0.1^2 / epsilon.
  const auto experiment = synth::generate_example2(1000, 5);
  const auto model = fit(experiment.inliers, 1, 5);
  const double cd = static_cast<double>(model.cd_value(experiment.outlier.coeffs));
  const double estimate = 0.01 / model.epsilon();
  EXPECT_NEAR(cd / estimate, 1.0, 0.01);
  EXPECT_NEAR(static_cast<double>(model.smallest_eigenvalue()), model.epsilon(),
              1e-6 * model.epsilon());
}

TEST(Synth, SpecValidation) {
  synth::SynthSpec spec{{0.0, 0.0}, {0, 1}, 0.1, 10, 1};
  EXPECT_NO_THROW(synth::generate(spec));
  spec.perturbed = {2};
  EXPECT_THROW(synth::generate(spec), InputError);
  spec.perturbed = {0};
  spec.radius = 0.0;
  EXPECT_THROW(synth::generate(spec), InputError);
}
