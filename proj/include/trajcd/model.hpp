#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "trajcd/basis.hpp"
#include "trajcd/coefficient_vector.hpp"
#include "trajcd/dataset.hpp"
#include "trajcd/error.hpp"
#include "trajcd/projection.hpp"

namespace trajcd {

using Metadata = std::map<std::string, std::string>;

// Relative magnitude of the default regularization: eps = kDefaultRelativeEpsilon * trace(S/N) / m.
inline constexpr double kDefaultRelativeEpsilon = 1e-8;

/// Empirical Christoffel-Darboux model of order (d, n).
///
/// Stores the raw moment sum S = sum_i v(g_i) v(g_i)^T over the N absorbed
/// trajectories and a symmetric eigendecomposition Q diag(s) Q^T of the
/// regularized moment matrix S/N + eps I. Every evaluation is a projection onto
/// Q followed by a diagonal scaling, so the CD kernel is
/// K(f, g) = sum_i s_i^{-1} (q_i . v(f)) (q_i . v(g)).
///
/// Values are immutable. update() and downdate() return new models.
///
/// `Real` is the working precision of the accumulation and the factorization.
/// Monomial moment matrices of clustered data are badly conditioned, so the
/// default instantiation uses long double.
template <typename Real>
class BasicChristoffelModel {
 public:
  using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

  // Builds a model from an already accumulated moment sum. With `strict`, a
  // numerically singular regularized matrix is an error; otherwise the model is
  // returned without a factorization and evaluations throw.
  static BasicChristoffelModel from_moment_sum(int d, int n, Matrix moment_sum,
                                               std::size_t samples, double epsilon,
                                               Domain domain = {}, Metadata metadata = {},
                                               bool strict = true) {
    auto basis = std::make_shared<const BasisEnumeration>(d, n);
    const auto m = static_cast<Eigen::Index>(basis->size());
    if (moment_sum.rows() != m || moment_sum.cols() != m) {
      throw MismatchError("moment sum is " + std::to_string(moment_sum.rows()) + "x" +
                          std::to_string(moment_sum.cols()) + " but binomial(n+d,n) = " +
                          std::to_string(m));
    }
    if (samples < 1) throw InputError("a model needs at least one sample");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw InputError("regularization epsilon must be finite and >= 0");
    }
    BasicChristoffelModel model(std::move(basis), std::move(moment_sum), samples, epsilon, domain,
                                std::move(metadata));
    model.refactor(strict);
    return model;
  }

  int algebraic_degree() const noexcept { return basis_->algebraic_degree(); }
  int harmonic_degree() const noexcept { return basis_->harmonic_degree(); }
  std::size_t dimension() const noexcept { return basis_->size(); }
  const BasisEnumeration& basis() const noexcept { return *basis_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t sample_count() const noexcept { return samples_; }
  const Matrix& moment_sum() const noexcept { return moment_sum_; }
  Matrix moment_matrix() const { return moment_sum_ / static_cast<Real>(samples_); }
  const Domain& domain() const noexcept { return domain_; }
  const Metadata& metadata() const noexcept { return metadata_; }

  bool has_factorization() const noexcept { return factored_; }
  // Eigenvalues of S/N + eps I in ascending order (available even when singular).
  const Vector& regularized_eigenvalues() const noexcept { return eigenvalues_; }
  const Matrix& eigenvectors() const noexcept { return eigenvectors_; }
  Real smallest_eigenvalue() const { return eigenvalues_(0); }
  Real largest_eigenvalue() const { return eigenvalues_(eigenvalues_.size() - 1); }

  Vector monomial_vector(const CoefficientVector& c) const {
    if (c.size() < static_cast<std::size_t>(harmonic_degree())) {
      throw MismatchError("coefficient vector has " + std::to_string(c.size()) +
                          " entries, the model needs n = " + std::to_string(harmonic_degree()));
    }
    return eval_monomial_vector<Real>(c.values(), *basis_);
  }

  // Q^T v(c) scaled by s^{-1/2}; its squared norm is the CD value.
  Vector whitened(const CoefficientVector& c) const {
    require_factorization();
    Vector y = eigenvectors_.transpose() * monomial_vector(c);
    return y.cwiseProduct(inv_sqrt_eigenvalues_);
  }

  // p(c) = v(c)^T (S/N + eps I)^{-1} v(c), the CD polynomial. Always >= 0.
  Real cd_value(const CoefficientVector& c) const { return whitened(c).squaredNorm(); }

  // 1 / cd_value, or 0 when the CD value overflows.
  Real christoffel_value(const CoefficientVector& c) const {
    const Real cd = cd_value(c);
    if (!std::isfinite(static_cast<double>(cd))) return Real(0);
    return Real(1) / cd;
  }

  Real kernel(const CoefficientVector& c1, const CoefficientVector& c2) const {
    return whitened(c1).dot(whitened(c2));
  }

  // Solves (S/N + eps I) x = b with the cached factorization.
  Vector solve(const Vector& b) const {
    require_factorization();
    Vector y = eigenvectors_.transpose() * b;
    y = y.cwiseProduct(inv_sqrt_eigenvalues_).cwiseProduct(inv_sqrt_eigenvalues_);
    return eigenvectors_ * y;
  }

  // Monomial-basis coefficients of the minimizer p(f) = K(f, h) / K(h, h) of the
  // normalized second moment; satisfies w . v(h) = 1.
  Vector extremal_polynomial(const CoefficientVector& h) const {
    const Vector v = monomial_vector(h);
    Vector w = solve(v);
    const Real cd = v.dot(w);
    if (!(cd > Real(0)) || !std::isfinite(static_cast<double>(cd))) {
      throw NumericalError("extremal polynomial undefined: CD value at the probe is not positive");
    }
    return w / cd;
  }

  // Copy with a modified moment sum, used by update/downdate.
  BasicChristoffelModel with_moment_sum(Matrix moment_sum, std::size_t samples) const {
    BasicChristoffelModel next(basis_, std::move(moment_sum), samples, epsilon_, domain_,
                               metadata_);
    next.refactor(false);
    return next;
  }

 private:
  BasicChristoffelModel(std::shared_ptr<const BasisEnumeration> basis, Matrix moment_sum,
                        std::size_t samples, double epsilon, Domain domain, Metadata metadata)
      : basis_(std::move(basis)),
        moment_sum_(std::move(moment_sum)),
        samples_(samples),
        epsilon_(epsilon),
        domain_(domain),
        metadata_(std::move(metadata)) {}

  void require_factorization() const {
    if (!factored_) {
      throw NumericalError(
          "factorization unavailable: the moment matrix is singular and epsilon = 0");
    }
  }

  void refactor(bool strict) {
    const auto m = static_cast<Eigen::Index>(dimension());
    Matrix regularized = moment_sum_ / static_cast<Real>(samples_);
    regularized.diagonal().array() += static_cast<Real>(epsilon_);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(regularized);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("symmetric eigendecomposition of the moment matrix failed");
    }
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();

    const Real largest = eigenvalues_(m - 1);
    const Real tolerance = Real(100) * static_cast<Real>(m) *
                           std::numeric_limits<Real>::epsilon() * std::abs(largest);
    factored_ = eigenvalues_(0) > tolerance;
    if (!factored_) {
      inv_sqrt_eigenvalues_.resize(0);
      if (strict) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "moment matrix of order (d=" << algebraic_degree() << ", n=" << harmonic_degree()
            << ") is numerically singular: smallest eigenvalue "
            << static_cast<double>(eigenvalues_(0)) << " vs largest "
            << static_cast<double>(largest) << " (epsilon = " << epsilon_
            << "); use a positive epsilon";
        throw NumericalError(msg.str());
      }
      return;
    }
    inv_sqrt_eigenvalues_ = eigenvalues_.cwiseSqrt().cwiseInverse();
  }

  std::shared_ptr<const BasisEnumeration> basis_;
  Matrix moment_sum_;
  std::size_t samples_ = 0;
  double epsilon_ = 0.0;
  Domain domain_;
  Metadata metadata_;

  bool factored_ = false;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  Vector inv_sqrt_eigenvalues_;
};

using ChristoffelModel = BasicChristoffelModel<long double>;

struct FitOptions {
  // Absolute diagonal shift; when unset, kDefaultRelativeEpsilon * trace(S/N) / m.
  std::optional<double> epsilon;
  Domain domain;
  Metadata metadata;
};

template <typename Real>
double default_epsilon(const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& moment_sum,
                       std::size_t samples) {
  const Real trace = moment_sum.trace() / static_cast<Real>(samples);
  return kDefaultRelativeEpsilon * static_cast<double>(trace) /
         static_cast<double>(moment_sum.rows());
}

template <typename Real = long double>
BasicChristoffelModel<Real> fit(std::span<const CoefficientVector> data, int d, int n,
                                const FitOptions& options = {}) {
  using Matrix = typename BasicChristoffelModel<Real>::Matrix;
  if (data.empty()) throw InputError("cannot fit a model on an empty dataset");
  const BasisEnumeration basis(d, n);
  const auto m = static_cast<Eigen::Index>(basis.size());
  Matrix sum = Matrix::Zero(m, m);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].size() < static_cast<std::size_t>(n)) {
      throw InputError("trajectory " + std::to_string(i + 1) + " has " +
                       std::to_string(data[i].size()) + " coefficients, n = " +
                       std::to_string(n) + " are required");
    }
    const auto v = eval_monomial_vector<Real>(data[i].values(), basis);
    sum.template selfadjointView<Eigen::Lower>().rankUpdate(v);
  }
  sum.template triangularView<Eigen::StrictlyUpper>() = sum.transpose();
  double epsilon = options.epsilon ? *options.epsilon : default_epsilon<Real>(sum, data.size());
  return BasicChristoffelModel<Real>::from_moment_sum(d, n, std::move(sum), data.size(), epsilon,
                                                      options.domain, options.metadata, true);
}

template <typename Real = long double>
BasicChristoffelModel<Real> fit(const TrajectoryDataset& data, int d, int n,
                                FitOptions options = {}) {
  options.domain = data.domain();
  const auto coeffs = data.coefficient_vectors();
  return fit<Real>(std::span<const CoefficientVector>(coeffs), d, n, options);
}

// Absorbs one trajectory: S += v v^T, N += 1, then refactorizes. If the new
// regularized matrix is singular the result carries no factorization.
template <typename Real>
BasicChristoffelModel<Real> update(const BasicChristoffelModel<Real>& model,
                                   const CoefficientVector& c_new) {
  const auto v = model.monomial_vector(c_new);
  auto sum = model.moment_sum();
  sum.noalias() += v * v.transpose();
  return model.with_moment_sum(std::move(sum), model.sample_count() + 1);
}

// Removes one previously absorbed trajectory. The remaining moment sum must stay
// positive semidefinite: smallest eigenvalue >= -1e-10 * trace.
template <typename Real>
BasicChristoffelModel<Real> downdate(const BasicChristoffelModel<Real>& model,
                                     const CoefficientVector& c_old) {
  if (model.sample_count() < 2) {
    throw InputError("cannot downdate a model with fewer than 2 samples");
  }
  const auto v = model.monomial_vector(c_old);
  auto sum = model.moment_sum();
  sum.noalias() -= v * v.transpose();
  const Real trace = sum.trace();
  if (trace < Real(0)) {
    throw NumericalError("downdate breaks positive semidefiniteness: negative trace");
  }
  const std::size_t remaining = model.sample_count() - 1;
  auto next = model.with_moment_sum(std::move(sum), remaining);
  const Real smallest_of_sum =
      (next.smallest_eigenvalue() - static_cast<Real>(model.epsilon())) *
      static_cast<Real>(remaining);
  if (smallest_of_sum < Real(-1e-10) * trace) {
    std::ostringstream msg;
    msg << "downdate breaks positive semidefiniteness (smallest eigenvalue "
        << static_cast<double>(smallest_of_sum)
        << "); the trajectory was not absorbed by this model";
    throw NumericalError(msg.str());
  }
  return next;
}

// CD value at `probe` after absorbing `c_new`, from the current factorization
// alone (Sherman-Morrison on N M_N + v v^T):
//   p_{N+1}(g) / (N+1) = p_N(g) / N - K_N(g, g0)^2 / N^2 / (1 + p_N(g0) / N).
// Exact only for the unregularized matrix, so epsilon must be 0.
template <typename Real>
Real fast_score_update(const BasicChristoffelModel<Real>& model, const CoefficientVector& c_new,
                       const CoefficientVector& probe) {
  if (model.epsilon() != 0.0) {
    throw InputError("the rank-one score update is exact only for epsilon = 0");
  }
  const auto n_old = static_cast<Real>(model.sample_count());
  const auto w_new = model.whitened(c_new);
  const auto w_probe = model.whitened(probe);
  const Real cross = w_probe.dot(w_new);
  const Real scaled =
      w_probe.squaredNorm() / n_old -
      (cross * cross / (n_old * n_old)) / (Real(1) + w_new.squaredNorm() / n_old);
  return scaled * (n_old + Real(1));
}

}  // namespace trajcd
