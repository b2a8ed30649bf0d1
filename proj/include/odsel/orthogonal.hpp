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

// Exact solvers for the orthogonal-design case (X^T X = I), where the ordered
// Dantzig selector and SLOPE share the solution (y - lambda)_+ after pooling.
// These serve as ground truth for the iterative solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "odsel/errors.hpp"
#include "odsel/sorted_l1.hpp"

namespace odsel {

/// A pooled segment [start, end] with running averages of y and lambda.
struct PoolBlock {
  Index start = 0;
  Index end = 0;  // inclusive
  double y_avg = 0.0;
  double lam_avg = 0.0;

  Index length() const noexcept { return end - start + 1; }
  double diff() const noexcept { return y_avg - lam_avg; }
};

namespace detail {

inline PoolBlock merge_blocks(const PoolBlock& a, const PoolBlock& b) {
  const auto na = static_cast<double>(a.length()), nb = static_cast<double>(b.length());
  PoolBlock m;
  m.start = a.start;
  m.end = b.end;
  m.y_avg = (na * a.y_avg + nb * b.y_avg) / (na + nb);
  m.lam_avg = (na * a.lam_avg + nb * b.lam_avg) / (na + nb);
  return m;
}

inline void require_sorted_nonneg(const VectorXd& y, const char* what) {
  for (Index i = 0; i < y.size(); ++i) {
    require(y[i] >= 0.0, std::string(what) + ": y must be nonnegative");
    if (i > 0) require(y[i] <= y[i - 1], std::string(what) + ": y must be non-increasing");
  }
}

inline VectorXd blocks_to_solution(const std::vector<PoolBlock>& blocks, Index p) {
  VectorXd w(p);
  for (const PoolBlock& b : blocks) {
    const double v = std::max(b.diff(), 0.0);
    for (Index i = b.start; i <= b.end; ++i) w[i] = v;
  }
  return w;
}

}  // namespace detail

/// Single-pass stack pooling of sorted nonnegative y against lambda until
/// the block differences y_avg - lam_avg are non-increasing.
inline std::vector<PoolBlock> pool_sorted(const VectorXd& y, const LambdaSeq& lam) {
  detail::require_size(y.size(), lam.size(), "pool_sorted");
  std::vector<PoolBlock> stack;
  stack.reserve(static_cast<std::size_t>(y.size()));
  for (Index i = 0; i < y.size(); ++i) {
    stack.push_back({i, i, y[i], lam[i]});
    while (stack.size() > 1 && stack[stack.size() - 2].diff() < stack.back().diff()) {
      PoolBlock top = stack.back();
      stack.pop_back();
      stack.back() = detail::merge_blocks(stack.back(), top);
    }
  }
  return stack;
}

/// The same fixed point by repeated rescans: every pass merges each maximal
/// run of blocks whose differences strictly increase, until none remain.
inline std::vector<PoolBlock> pool_sorted_rescan(const VectorXd& y, const LambdaSeq& lam) {
  detail::require_size(y.size(), lam.size(), "pool_sorted_rescan");
  std::vector<PoolBlock> blocks;
  for (Index i = 0; i < y.size(); ++i) blocks.push_back({i, i, y[i], lam[i]});
  for (;;) {
    bool changed = false;
    std::vector<PoolBlock> next;
    std::size_t i = 0;
    while (i < blocks.size()) {
      std::size_t j = i;
      while (j + 1 < blocks.size() && blocks[j].diff() < blocks[j + 1].diff()) ++j;
      PoolBlock merged = blocks[i];
      for (std::size_t k = i + 1; k <= j; ++k) merged = detail::merge_blocks(merged, blocks[k]);
      changed = changed || j > i;
      next.push_back(merged);
      i = j + 1;
    }
    blocks = std::move(next);
    if (!changed) break;
  }
  return blocks;
}

/// SLOPE / ODS solution for orthogonal design, given y = X^T (response).
/// Arbitrary signs and order are reduced to the sorted nonnegative case and
/// mapped back.
inline VectorXd slope_orthogonal_solve(const VectorXd& y, const LambdaSeq& lam) {
  detail::require_size(y.size(), lam.size(), "slope_orthogonal_solve");
  const Index p = y.size();
  const auto order = detail::magnitude_order(y);
  VectorXd sorted(p);
  for (Index i = 0; i < p; ++i) sorted[i] = std::abs(y[order[i]]);
  const VectorXd ws = detail::blocks_to_solution(pool_sorted(sorted, lam), p);
  VectorXd w(p);
  for (Index i = 0; i < p; ++i) {
    const Index j = order[i];
    w[j] = y[j] < 0.0 ? -ws[i] : ws[i];
  }
  return w;
}

/// Literal rescan variant of slope_orthogonal_solve for sorted nonnegative y.
inline VectorXd slope_orthogonal_solve_rescan(const VectorXd& y, const LambdaSeq& lam) {
  detail::require_sorted_nonneg(y, "slope_orthogonal_solve_rescan");
  return detail::blocks_to_solution(pool_sorted_rescan(y, lam), y.size());
}

/// Exhaustive vertex enumeration of the linear program
///
///   min lambda^T w  s.t.  sum_{i<=k} (y_i - lambda_i) <= sum_{i<=k} w_i  (k = 1..p),
///                         w_1 >= ... >= w_p >= 0,
///
/// whose solution is the orthogonal-design ODS solution for sorted
/// nonnegative y and strictly decreasing positive lambda. Each of the 2^p
/// patterns binds, for every j, either the j-th prefix constraint or the tie
/// w_j = w_{j+1} (w_{p+1} = 0); the resulting system [S_I1 | V_I2]^T w = c is
/// solved blockwise.
inline VectorXd ods_lp_bruteforce(const VectorXd& y, const LambdaSeq& lam) {
  const Index p = y.size();
  detail::require_size(lam.size(), p, "ods_lp_bruteforce");
  detail::require(p <= 12, "ods_lp_bruteforce: p must be <= 12");
  detail::require_sorted_nonneg(y, "ods_lp_bruteforce");
  for (Index i = 0; i < p; ++i) {
    detail::require(lam[i] > 0.0, "ods_lp_bruteforce: lambda must be positive");
    if (i > 0) detail::require(lam[i] < lam[i - 1], "ods_lp_bruteforce: lambda must be strictly decreasing");
  }

  VectorXd c(p);
  double run = 0.0;
  for (Index k = 0; k < p; ++k) {
    run += y[k] - lam[k];
    c[k] = run;
  }
  const double tol = 1e-12 * (1.0 + c.cwiseAbs().maxCoeff());

  VectorXd best;
  double best_obj = std::numeric_limits<double>::infinity();
  VectorXd w(p);
  const std::uint32_t patterns = 1u << p;
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    // Blocks end at prefix-bound indices; the tail after the last one ties to 0.
    w.setZero();
    Index prev = -1;
    double prev_c = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (!(mask & (1u << j))) continue;
      const double v = (c[j] - prev_c) / static_cast<double>(j - prev);
      for (Index i = prev + 1; i <= j; ++i) w[i] = v;
      prev = j;
      prev_c = c[j];
    }

    bool feasible = w[p - 1] >= -tol;
    double prefix = 0.0;
    for (Index k = 0; k < p && feasible; ++k) {
      prefix += w[k];
      if (prefix < c[k] - tol) feasible = false;
      if (k + 1 < p && w[k] < w[k + 1] - tol) feasible = false;
    }
    if (!feasible) continue;

    const double obj = lam.values().dot(w);
    bool take = false;
    if (best.size() == 0 || obj < best_obj - 1e-14 * (1.0 + std::abs(best_obj))) {
      take = true;
    } else if (std::abs(obj - best_obj) <= 1e-14 * (1.0 + std::abs(best_obj))) {
      const double wn = w.squaredNorm(), bn = best.squaredNorm();
      if (wn < bn) take = true;
      else if (wn == bn) take = std::lexicographical_compare(w.begin(), w.end(), best.begin(), best.end());
    }
    if (take) {
      best = w;
      best_obj = obj;
    }
  }
  // mask with every prefix bound is always a candidate; infeasible LPs cannot occur
  if (best.size() == 0) throw NumericalFailure("ods_lp_bruteforce: no feasible vertex", 0);
  return best;
}

/// Residuals of the KKT system of the mu-perturbed LP (objective
/// lambda^T w + mu/2 ||w||^2), with multipliers built from the pooled
/// problem on the split I1 = {1..s}, s the last index with y - lambda >= 0.
struct KktResiduals {
  double stationarity = 0.0;
  double complementary = 0.0;
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;

  double worst() const {
    return std::max({stationarity, complementary, primal_feasibility, dual_feasibility});
  }
};

struct KktReport {
  KktResiduals at_mu;
  KktResiduals at_mu_tenth;
  Index split = 0;  // s = |I1|
  bool passed = false;
};

namespace detail {

inline KktResiduals kkt_residuals(const VectorXd& w, const VectorXd& yt, const VectorXd& lt,
                                  Index s, double mu) {
  const Index p = w.size();
  const VectorXd g = mu * w + lt;

  VectorXd nu = VectorXd::Zero(p), tau = VectorXd::Zero(p);
  // nu_{I1} = V_s^T g_{I1}
  for (Index j = 0; j < s; ++j) nu[j] = j + 1 < s ? g[j] - g[j + 1] : g[j];
  // tau_{I2} = S_{p-s}^T g_{I2}
  double acc = 0.0;
  for (Index j = s; j < p; ++j) {
    acc += g[j];
    tau[j] = acc;
  }

  KktResiduals r;
  // S_p nu + V_p tau
  double tail = 0.0;
  VectorXd combo(p);
  for (Index i = p - 1; i >= 0; --i) {
    tail += nu[i];
    combo[i] = tail + tau[i] - (i > 0 ? tau[i - 1] : 0.0);
  }
  r.stationarity = (g - combo).cwiseAbs().maxCoeff();

  double prefix = 0.0;
  for (Index k = 0; k < p; ++k) {
    prefix += yt[k] - lt[k] - w[k];            // (S^T (y - lambda - w))_k <= 0
    const double tie = w[k] - (k + 1 < p ? w[k + 1] : 0.0);  // (V^T w)_k >= 0
    r.primal_feasibility = std::max({r.primal_feasibility, prefix, -tie});
    r.complementary = std::max({r.complementary, std::abs(nu[k] * prefix), std::abs(tau[k] * tie)});
    r.dual_feasibility = std::max({r.dual_feasibility, -nu[k], -tau[k]});
  }
  return r;
}

}  // namespace detail

/// Certifies (or refutes) that w solves the orthogonal-design ODS for sorted
/// nonnegative y. The multiplier construction runs on the pooled (y, lambda)
/// pair, which has the same feasible set and solution.
inline KktReport verify_kkt_orthogonal(const VectorXd& w, const VectorXd& y, const LambdaSeq& lam,
                                       double mu = 1e-6, double tol = 1e-8) {
  const Index p = y.size();
  detail::require_size(w.size(), p, "verify_kkt_orthogonal: w");
  detail::require_size(lam.size(), p, "verify_kkt_orthogonal: lambda");
  detail::require_sorted_nonneg(y, "verify_kkt_orthogonal");

  const auto blocks = pool_sorted_rescan(y, lam);
  VectorXd yt(p), lt(p);
  for (const PoolBlock& b : blocks) {
    for (Index i = b.start; i <= b.end; ++i) {
      yt[i] = b.y_avg;
      lt[i] = b.lam_avg;
    }
  }
  Index s = 0;
  for (Index i = 0; i < p; ++i)
    if (yt[i] - lt[i] >= 0.0) s = i + 1;

  KktReport rep;
  rep.split = s;
  rep.at_mu = detail::kkt_residuals(w, yt, lt, s, mu);
  rep.at_mu_tenth = detail::kkt_residuals(w, yt, lt, s, mu / 10.0);
  rep.passed = rep.at_mu.worst() <= tol && rep.at_mu_tenth.worst() <= tol;
  return rep;
}

}  // namespace odsel
