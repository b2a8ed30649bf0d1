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

// The sorted (ordered) l1 norm J_lambda(w) = sum_i lambda_i |w|_(i), its dual
// norm, proximal map, dual-ball projection, subgradients, and the
// BH-style lambda sequences.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odsel/errors.hpp"

namespace odsel {

using Eigen::Index;
using Eigen::VectorXd;

/// Non-increasing, nonnegative weights with lambda_1 > 0.
class LambdaSeq {
 public:
  explicit LambdaSeq(VectorXd values) : values_(std::move(values)) {
    detail::require(values_.size() >= 1, "LambdaSeq: empty sequence");
    detail::require(values_.allFinite(), "LambdaSeq: non-finite entry");
    for (Index i = 0; i < values_.size(); ++i) {
      detail::require(values_[i] >= 0.0, "LambdaSeq: negative entry at " + std::to_string(i));
      if (i > 0) {
        detail::require(values_[i] <= values_[i - 1],
                        "LambdaSeq: not non-increasing at " + std::to_string(i));
      }
    }
    detail::require(values_[0] > 0.0, "LambdaSeq: all-zero sequence is not a norm");
  }

  LambdaSeq(std::initializer_list<double> values)
      : LambdaSeq(Eigen::Map<const VectorXd>(values.begin(), static_cast<Index>(values.size()))) {}

  const VectorXd& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

 private:
  VectorXd values_;
};

namespace detail {

/// Indices sorted by |w| descending; ties keep ascending original index.
inline std::vector<Index> magnitude_order(const VectorXd& w) {
  std::vector<Index> order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(w[a]) > std::abs(w[b]); });
  return order;
}

}  // namespace detail

inline double sorted_l1_norm(const VectorXd& w, const LambdaSeq& lam) {
  detail::require_size(w.size(), lam.size(), "sorted_l1_norm");
  const auto order = detail::magnitude_order(w);
  double acc = 0.0;
  for (Index i = 0; i < w.size(); ++i) acc += lam[i] * std::abs(w[order[i]]);
  return acc;
}

/// max_k (sum of the k largest |w_i|) / (lambda_1 + ... + lambda_k).
inline double dual_sorted_l1_norm(const VectorXd& w, const LambdaSeq& lam) {
  detail::require_size(w.size(), lam.size(), "dual_sorted_l1_norm");
  const auto order = detail::magnitude_order(w);
  double num = 0.0, den = 0.0, best = 0.0;
  for (Index k = 0; k < w.size(); ++k) {
    num += std::abs(w[order[k]]);
    den += lam[k];
    // den >= lambda_1 > 0 by the LambdaSeq invariant
    best = std::max(best, num / den);
  }
  return best;
}

/// argmin_x 1/2 ||x - z||^2 + scale * J_lambda(x).
///
/// Stack-based pool-adjacent-violators on the sorted magnitudes: with
/// d_i = |z|_(i) - scale * lambda_i, adjacent blocks are merged while the
/// block averages fail to be decreasing; averages are then clipped at zero and
/// mapped back through the sort permutation and the signs of z.
inline VectorXd prox_sorted_l1(const VectorXd& z, const LambdaSeq& lam, double scale) {
  detail::require_size(z.size(), lam.size(), "prox_sorted_l1");
  detail::require(scale >= 0.0, "prox_sorted_l1: scale must be nonnegative");
  const Index p = z.size();
  const auto order = detail::magnitude_order(z);

  struct Block {
    Index start;
    Index end;  // inclusive
    double sum;
    double avg;
  };
  std::vector<Block> stack;
  stack.reserve(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    const double d = std::abs(z[order[i]]) - scale * lam[i];
    stack.push_back({i, i, d, d});
    while (stack.size() > 1 && stack[stack.size() - 2].avg <= stack.back().avg) {
      Block top = stack.back();
      stack.pop_back();
      Block& prev = stack.back();
      prev.end = top.end;
      prev.sum += top.sum;
      prev.avg = prev.sum / static_cast<double>(prev.end - prev.start + 1);
    }
  }

  VectorXd out(p);
  for (const Block& b : stack) {
    const double v = std::max(b.avg, 0.0);
    for (Index i = b.start; i <= b.end; ++i) {
      const Index j = order[i];
      out[j] = z[j] < 0.0 ? -v : (z[j] > 0.0 ? v : 0.0);
    }
  }
  return out;
}

/// Euclidean projection onto {u : J^D_lambda(u) <= 1}, via the Moreau identity.
inline VectorXd project_dual_ball(const VectorXd& r, const LambdaSeq& lam) {
  return r - prox_sorted_l1(r, lam, 1.0);
}

/// g_i = lambda_{rank(i)} sign(w_i), with g_i = 0 where w_i = 0.
inline VectorXd subgradient_sorted_l1(const VectorXd& w, const LambdaSeq& lam) {
  detail::require_size(w.size(), lam.size(), "subgradient_sorted_l1");
  const auto order = detail::magnitude_order(w);
  VectorXd g = VectorXd::Zero(w.size());
  for (Index rank = 0; rank < w.size(); ++rank) {
    const Index j = order[rank];
    if (w[j] > 0.0) g[j] = lam[rank];
    else if (w[j] < 0.0) g[j] = -lam[rank];
  }
  return g;
}

/// Inverse standard normal CDF (Wichura's AS 241, PPND16).
inline double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("normal_quantile: argument must lie in (0, 1)");
  }
  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

/// lambda_i = sigma * Phi^{-1}(1 - i q / (2p)), i = 1..p.
inline LambdaSeq bh_lambda(Index p, double q, double sigma) {
  detail::require(p >= 1, "bh_lambda: p must be >= 1");
  detail::require(q > 0.0 && q < 1.0, "bh_lambda: q must lie in (0, 1)");
  detail::require(sigma > 0.0, "bh_lambda: sigma must be positive");
  VectorXd lam(p);
  for (Index i = 0; i < p; ++i) {
    const double u = 1.0 - static_cast<double>(i + 1) * q / (2.0 * static_cast<double>(p));
    lam[i] = sigma * normal_quantile(u);
  }
  return LambdaSeq(std::move(lam));
}

/// Gaussian-design adjustment of a lambda sequence for n observations.
///
/// lambda'_1 = lambda_1, lambda'_i = lambda_i sqrt(1 + sum_{j<i} lambda'_j^2 / (n - i)).
/// The sequence is kept up to its minimizer t and held at lambda'_t
/// afterwards. The recursion also stops at the first i with n - i <= 0.
inline LambdaSeq gaussian_adjusted_lambda(const LambdaSeq& lam, Index n) {
  detail::require(n > 1, "gaussian_adjusted_lambda: n must be > 1");
  const Index p = lam.size();
  std::vector<double> adj;
  adj.reserve(static_cast<std::size_t>(p));
  adj.push_back(lam[0]);
  double sumsq = lam[0] * lam[0];
  for (Index i = 2; i <= p; ++i) {  // 1-based i
    if (n - i <= 0) break;
    const double v = lam[i - 1] * std::sqrt(1.0 + sumsq / static_cast<double>(n - i));
    adj.push_back(v);
    sumsq += v * v;
  }
  // First local minimum; equals the argmin when the sequence is unimodal.
  Index t = 0;
  while (t + 1 < static_cast<Index>(adj.size()) &&
         adj[static_cast<std::size_t>(t + 1)] <= adj[static_cast<std::size_t>(t)])
    ++t;
  VectorXd out(p);
  for (Index i = 0; i < p; ++i) out[i] = i <= t ? adj[static_cast<std::size_t>(i)] : adj[static_cast<std::size_t>(t)];
  return LambdaSeq(std::move(out));
}

/// J_lambda packaged for the generic solvers.
struct SortedL1Norm {
  LambdaSeq lambda;

  double value(const VectorXd& w) const { return sorted_l1_norm(w, lambda); }
  /// prox of step * J_lambda.
  VectorXd prox(const VectorXd& z, double step) const { return prox_sorted_l1(z, lambda, step); }
  double dual_norm(const VectorXd& w) const { return dual_sorted_l1_norm(w, lambda); }
  VectorXd subgradient(const VectorXd& w) const { return subgradient_sorted_l1(w, lambda); }
};

}  // namespace odsel
