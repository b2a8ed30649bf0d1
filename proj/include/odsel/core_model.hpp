/*
 * Copyright 2026 The odsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Problem instance for the Dantzig-type saddle-point problems and the linear
// operator A = X^T [I, -X] acting on (y, w).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "odsel/errors.hpp"
#include "odsel/random.hpp"

namespace odsel {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Whether X^T X is materialized.
enum class GramPolicy { Auto, Always, Never };

struct OpNormOptions {
  double tol = 1e-4;
  int max_iters = 200;
  std::uint64_t seed = 0x0D5E1;
};

class ProblemData;

double estimate_opnorm(const ProblemData& prob, double tol, int max_iters, std::uint64_t seed);

/// Immutable regression instance (X, y) with cached X^T y, an optional Gram
/// matrix and the operator-norm estimate L >= ||X^T [I, -X]||.
class ProblemData {
 public:
  ProblemData(MatrixXd X, VectorXd y, GramPolicy gram = GramPolicy::Auto,
              const OpNormOptions& opnorm = {})
      : X_(std::move(X)), y_(std::move(y)) {
    detail::require(X_.rows() >= 1 && X_.cols() >= 1, "ProblemData: X must be at least 1x1");
    detail::require_size(y_.size(), X_.rows(), "ProblemData: y");
    detail::require(X_.allFinite() && y_.allFinite(), "ProblemData: non-finite input");
    Xty_ = X_.transpose() * y_;
    const Index n = X_.rows(), p = X_.cols();
    bool materialize = false;
    switch (gram) {
      case GramPolicy::Always: materialize = true; break;
      case GramPolicy::Never: materialize = false; break;
      case GramPolicy::Auto: materialize = p <= 4096 && p <= 4 * n; break;
    }
    if (materialize) {
      gram_ = MatrixXd(p, p);
      gram_->setZero();
      gram_->selfadjointView<Eigen::Lower>().rankUpdate(X_.transpose());
      gram_->triangularView<Eigen::StrictlyUpper>() = gram_->transpose();
    }
    L_ = estimate_opnorm(*this, opnorm.tol, opnorm.max_iters, opnorm.seed);
  }

  const MatrixXd& X() const noexcept { return X_; }
  const VectorXd& y() const noexcept { return y_; }
  const VectorXd& Xty() const noexcept { return Xty_; }
  double L() const noexcept { return L_; }
  bool use_gram() const noexcept { return gram_.has_value(); }
  const std::optional<MatrixXd>& gram() const noexcept { return gram_; }
  Index n() const noexcept { return X_.rows(); }
  Index p() const noexcept { return X_.cols(); }

  /// X^T X v through whichever path this instance was built with.
  VectorXd gram_times(const VectorXd& v) const {
    detail::require_size(v.size(), p(), "gram_times");
    if (gram_) return (*gram_) * v;
    VectorXd Xv = X_ * v;
    return X_.transpose() * Xv;
  }

 private:
  MatrixXd X_;
  VectorXd y_;
  VectorXd Xty_;
  std::optional<MatrixXd> gram_;
  double L_ = 0.0;
};

/// A applied to the augmented point (y, w): X^T y - X^T X w.
inline VectorXd apply_A(const ProblemData& prob, const VectorXd& w) {
  detail::require_size(w.size(), prob.p(), "apply_A");
  return prob.Xty() - prob.gram_times(w);
}

/// X^T X v, the (negated) w-block adjoint used by the primal step.
inline VectorXd apply_adjoint(const ProblemData& prob, const VectorXd& v) {
  detail::require_size(v.size(), prob.p(), "apply_adjoint");
  return prob.gram_times(v);
}

namespace detail {

// Largest eigenvalue of a PSD operator by Lanczos with full
// reorthogonalization (a Krylov-accelerated power iteration), returned as its
// square root. Stops once the top Ritz value moves less than tol relative and
// its residual bound is below tol relative, or after max_iters products.
template <class Apply>
double lanczos_sqrt_top(Apply&& apply, Index dim, double tol, int max_iters, std::uint64_t seed) {
  RandomStream rng(seed);
  const Index m = std::min<Index>(dim, max_iters);
  MatrixXd Q(dim, m + 1);
  Q.col(0) = rng.normal_vector(dim).normalized();
  VectorXd alpha(m), beta(m);
  double theta = 0.0, prev = 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> tri;
  for (Index j = 0; j < m; ++j) {
    VectorXd w = apply(VectorXd(Q.col(j)));
    alpha[j] = Q.col(j).dot(w);
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    beta[j] = w.norm();

    const VectorXd d = alpha.head(j + 1);
    const VectorXd e = beta.head(j);
    tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    theta = std::max(0.0, tri.eigenvalues()[j]);
    const double resid = beta[j] * std::abs(tri.eigenvectors()(j, j));

    const double scale = std::max(theta, std::abs(alpha[0]));
    if (beta[j] <= 1e-13 * scale || scale == 0.0) break;  // invariant subspace
    if (j > 0 && std::abs(theta - prev) <= tol * theta && resid <= tol * theta) break;
    prev = theta;
    Q.col(j + 1) = w / beta[j];
  }
  return std::sqrt(theta);
}

}  // namespace detail

/// Estimates ||X^T [I, -X]|| by Lanczos iteration on A A^T = G + G^2 (G = X^T X),
/// inflated by the factor 1 + 10 tol so the estimate does not undershoot.
inline double estimate_opnorm(const ProblemData& prob, double tol, int max_iters,
                              std::uint64_t seed) {
  detail::require(tol > 0.0, "estimate_opnorm: tol must be positive");
  detail::require(max_iters >= 1, "estimate_opnorm: max_iters must be >= 1");
  auto apply = [&](const VectorXd& u) -> VectorXd {
    VectorXd Gu = prob.gram_times(u);
    return Gu + prob.gram_times(Gu);
  };
  const double s = detail::lanczos_sqrt_top(apply, prob.p(), tol, max_iters, seed);
  return s * (1.0 + 10.0 * tol);
}

/// Estimates ||X||_2 the same way (Lanczos on X^T X), with the same
/// safety inflation.
inline double estimate_design_norm(const ProblemData& prob, const OpNormOptions& opts = {}) {
  auto apply = [&](const VectorXd& u) -> VectorXd { return prob.gram_times(u); };
  const double s = detail::lanczos_sqrt_top(apply, prob.p(), opts.tol, opts.max_iters, opts.seed);
  return s * (1.0 + 10.0 * opts.tol);
}

}  // namespace odsel
