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

// Baseline solvers for the ordered Dantzig selector: linearized ADMM on the
// constrained form and the accelerated hybrid proximal extragradient method
// on the saddle form. Both report through SolveResult like pdsp_solve.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odsel/core_model.hpp"
#include "odsel/errors.hpp"
#include "odsel/pdsp.hpp"
#include "odsel/sorted_l1.hpp"

namespace odsel {

struct LadmmOptions {
  /// Linearization constant; unset means ||X||^4 (power-iteration estimate).
  std::optional<double> rho;
  double eps = 1e-7;
  std::int64_t max_iters = 1000000;
  int trace_every = 10;
  bool record_trace = true;
};

/// Linearized ADMM for  min J(w)  s.t.  r = X^T(y - Xw),  J^D(r) <= 1.
///
/// With G = X^T X, scaled multiplier u (unit ADMM penalty) and linearization
/// constant rho >= ||G||^2 = ||X||^4:
///
///   r_{k+1} = Proj_{J^D <= 1}(X^T y - G w_k - u_k)
///   w_{k+1} = prox_{J/rho}(w_k - G (G w_k + r_{k+1} - X^T y + u_k) / rho)
///   u_{k+1} = u_k + G w_{k+1} + r_{k+1} - X^T y
///
/// The saddle-point dual variable is v = -u.
inline SolveResult ladmm_solve(const ProblemData& prob, const LambdaSeq& lam,
                               const LadmmOptions& opts = {}, const VectorXd& w0 = {},
                               const VectorXd& v0 = {}) {
  detail::require_size(lam.size(), prob.p(), "ladmm_solve: lambda");
  detail::require(opts.eps > 0.0, "ladmm_solve: eps must be positive");
  detail::require(opts.max_iters >= 1, "ladmm_solve: max_iters must be >= 1");
  detail::require(opts.trace_every >= 1, "ladmm_solve: trace_every must be >= 1");
  const double xnorm = estimate_design_norm(prob);
  const double recommended = std::pow(xnorm, 4);
  const double rho = opts.rho.value_or(recommended > 0.0 ? recommended : 1.0);
  detail::require(rho > 0.0 && std::isfinite(rho), "ladmm_solve: rho must be positive");

  SolveResult res;
  if (rho < recommended) res.warnings.push_back("rho below the recommended ||X||^4");

  const Index p = prob.p();
  const SortedL1Norm J{lam};
  VectorXd w = detail::start_or_zero(w0, p, "ladmm_solve: w0");
  VectorXd u = -detail::start_or_zero(v0, p, "ladmm_solve: v0");
  VectorXd Gw = prob.gram_times(w);
  VectorXd wbar = w, ubar = u;

  for (std::int64_t k = 1; k <= opts.max_iters; ++k) {
    const VectorXd w_prev = w, u_prev = u;
    const VectorXd r = project_dual_ball(prob.Xty() - Gw - u, lam);
    const VectorXd resid = Gw + r - prob.Xty() + u;
    w = J.prox(w - prob.gram_times(resid) / rho, 1.0 / rho);
    Gw = prob.gram_times(w);
    u += Gw + r - prob.Xty();
    const VectorXd wbar_prev = wbar, ubar_prev = ubar;
    wbar += (w - wbar) / static_cast<double>(k);
    ubar += (u - ubar) / static_cast<double>(k);

    if (!w.allFinite() || !u.allFinite()) throw NumericalFailure("ladmm_solve: non-finite iterate", k);
    const double rc = relative_change(w, u, w_prev, u_prev);
    if (rc > 1e12 || std::sqrt(w.squaredNorm() + u.squaredNorm()) > 1e12) {
      throw NumericalFailure("ladmm_solve: iterates diverged", k);
    }
    const bool done = rc <= opts.eps || k == opts.max_iters;
    if (opts.record_trace && (k % opts.trace_every == 0 || done)) {
      TraceRecord rec = evaluate_pair(prob, J, J, w, VectorXd(-u));
      rec.iter = k;
      rec.rel_change_point = rc;
      rec.rel_change_ergodic = relative_change(wbar, ubar, wbar_prev, ubar_prev);
      res.trace.push_back(rec);
    }
    if (done) {
      res.iterations = k;
      res.status = rc <= opts.eps ? SolveStatus::ConvergedPointwise : SolveStatus::MaxIters;
      break;
    }
  }
  res.w = w;
  res.v = -u;
  return res;
}

struct HpeOptions {
  /// Outer step; unset means 1/L.
  std::optional<double> eta;
  double sigma_hpe = 0.9;
  std::int64_t inner_max = 10000;
  double eps = 1e-7;
  std::int64_t max_iters = 100000;
  int trace_every = 10;
  bool record_trace = true;
};

/// Output of one call of the inner accelerated subroutine.
struct HpeInnerResult {
  VectorXd u_tilde;
  VectorXd v_tilde;
  VectorXd r_u;
  VectorXd r_v;
  double eps_tilde = 0.0;
  std::int64_t iterations = 0;
  std::vector<double> t;  // t_1, t_2, ...
  std::vector<double> c;  // c_k = 1 + 1/t_k
};

/// Accelerated subroutine returning (u~, v~, r^u, r^v, eps~) that satisfies
///   ||r^u + u~ - u0||^2 + ||r^v + v~ - v0||^2 + 2 eps~ <= sigma^2 (||u~ - u0||^2 + ||v~ - v0||^2)
/// for the saddle function eta (<X^T y - X^T X u, v> + J(u) - J(v)).
/// The primal domain is all of R^p, so the projection onto it is the identity.
inline HpeInnerResult hpe_error_condition(const ProblemData& prob, const LambdaSeq& lam, double eta,
                                          double sigma_hpe, const VectorXd& u0, const VectorXd& v0,
                                          std::int64_t inner_max) {
  const SortedL1Norm J{lam};
  // Lipschitz constant of the scaled operator: L_f = 0, ||eta A||^2.
  const double Lop = prob.L() > 0.0 ? eta * eta * prob.L() * prob.L() : 1.0;
  auto dual_at = [&](const VectorXd& u) -> VectorXd {
    return J.prox(v0 + eta * apply_A(prob, u), eta);
  };

  HpeInnerResult out;
  double t_prev = 0.0;
  VectorXd u_tilde = u0, w = u0;
  VectorXd v_tilde = VectorXd::Zero(u0.size());
  for (std::int64_t k = 1; k <= inner_max; ++k) {
    const double t = t_prev + (1.0 + std::sqrt(1.0 + 4.0 * Lop * t_prev)) / (2.0 * Lop);
    const double a = t_prev / t, b = (t - t_prev) / t;
    const VectorXd u = a * u_tilde + b * w;
    v_tilde = a * v_tilde + b * dual_at(u);
    const double c = 1.0 + 1.0 / t;
    // argmin <A* v~, u> + eta J(u) + c/2 ||u - u0||^2 with A* v~ = -eta X^T X v~
    w = J.prox(u0 + (eta / c) * apply_adjoint(prob, v_tilde), eta / c);
    u_tilde = a * u_tilde + b * w;
    out.t.push_back(t);
    out.c.push_back(c);

    const double eps_tilde = (u_tilde - u0).squaredNorm() / (2.0 * t);
    VectorXd r_u = c * (u0 - w);
    VectorXd r_v = v0 - dual_at(u_tilde);
    const double lhs = (r_u + u_tilde - u0).squaredNorm() + (r_v + v_tilde - v0).squaredNorm() +
                       2.0 * eps_tilde;
    const double rhs =
        sigma_hpe * sigma_hpe * ((u_tilde - u0).squaredNorm() + (v_tilde - v0).squaredNorm());
    if (!u_tilde.allFinite() || !v_tilde.allFinite()) {
      throw NumericalFailure("hpe inner loop: non-finite iterate", k);
    }
    if (lhs <= rhs) {
      out.u_tilde = std::move(u_tilde);
      out.v_tilde = std::move(v_tilde);
      out.r_u = std::move(r_u);
      out.r_v = std::move(r_v);
      out.eps_tilde = eps_tilde;
      out.iterations = k;
      return out;
    }
    t_prev = t;
  }
  throw NumericalFailure("hpe inner loop: error condition not met within inner_max", inner_max);
}

/// Observer receiving each accepted inner result with its centre (u0, v0).
using HpeObserver =
    std::function<void(std::int64_t outer, const HpeInnerResult&, const VectorXd& u0, const VectorXd& v0)>;

/// Hybrid proximal extragradient outer loop: x_k = x_{k-1} - r^u, y_k = y_{k-1} - r^v
/// (the 1/eta rescaling of the residuals cancels against the step eta).
inline SolveResult hpe_solve(const ProblemData& prob, const LambdaSeq& lam,
                             const HpeOptions& opts = {}, const VectorXd& w0 = {},
                             const VectorXd& v0 = {}, const HpeObserver& observer = {}) {
  detail::require_size(lam.size(), prob.p(), "hpe_solve: lambda");
  const double eta = opts.eta.value_or(prob.L() > 0.0 ? 1.0 / prob.L() : 1.0);
  detail::require(eta > 0.0 && std::isfinite(eta), "hpe_solve: eta must be positive");
  detail::require(opts.sigma_hpe > 0.0 && opts.sigma_hpe < 1.0, "hpe_solve: sigma_hpe must lie in (0, 1)");
  detail::require(opts.inner_max >= 1, "hpe_solve: inner_max must be >= 1");
  detail::require(opts.eps > 0.0, "hpe_solve: eps must be positive");
  detail::require(opts.max_iters >= 1, "hpe_solve: max_iters must be >= 1");
  detail::require(opts.trace_every >= 1, "hpe_solve: trace_every must be >= 1");

  const Index p = prob.p();
  const SortedL1Norm J{lam};
  VectorXd x = detail::start_or_zero(w0, p, "hpe_solve: w0");
  VectorXd y = detail::start_or_zero(v0, p, "hpe_solve: v0");
  VectorXd xbar = x, ybar = y;

  SolveResult res;
  for (std::int64_t k = 1; k <= opts.max_iters; ++k) {
    HpeInnerResult inner;
    try {
      inner = hpe_error_condition(prob, lam, eta, opts.sigma_hpe, x, y, opts.inner_max);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(std::string("hpe_solve: subproblem stalled: ") + e.what(), k);
    }
    if (observer) observer(k, inner, x, y);
    const VectorXd x_prev = x, y_prev = y;
    x -= inner.r_u;
    y -= inner.r_v;
    const VectorXd xbar_prev = xbar, ybar_prev = ybar;
    xbar += (x - xbar) / static_cast<double>(k);
    ybar += (y - ybar) / static_cast<double>(k);

    if (!x.allFinite() || !y.allFinite()) throw NumericalFailure("hpe_solve: non-finite iterate", k);
    const double rc = relative_change(x, y, x_prev, y_prev);
    const bool done = rc <= opts.eps || k == opts.max_iters;
    if (opts.record_trace && (k % opts.trace_every == 0 || done)) {
      TraceRecord rec = evaluate_pair(prob, J, J, x, y);
      rec.iter = k;
      rec.rel_change_point = rc;
      rec.rel_change_ergodic = relative_change(xbar, ybar, xbar_prev, ybar_prev);
      res.trace.push_back(rec);
    }
    if (done) {
      res.iterations = k;
      res.status = rc <= opts.eps ? SolveStatus::ConvergedPointwise : SolveStatus::MaxIters;
      break;
    }
  }
  res.w = x;
  res.v = y;
  return res;
}

}  // namespace odsel
