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

// Primal-dual proximal extragradient solver for
//
//   min_w max_v  <X^T y - X^T X w, v> + F(w) - G(v),
//
// the saddle-point form of  min F(w)  s.t.  G^D(X^T (y - X w)) <= 1.
// With F = G = J_lambda this is the ordered Dantzig selector.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odsel/core_model.hpp"
#include "odsel/errors.hpp"
#include "odsel/sorted_l1.hpp"

namespace odsel {

/// Choice of v' in the primal step: v_{k+1} or 2 v_{k+1}.
enum class ExtragradientMode { Standard, Doubled };

enum class ConvergenceCheck { Pointwise, Ergodic, Both };

enum class SolveStatus { ConvergedPointwise, ConvergedErgodic, MaxIters };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::ConvergedPointwise: return "converged_pointwise";
    case SolveStatus::ConvergedErgodic: return "converged_ergodic";
    case SolveStatus::MaxIters: return "max_iters";
  }
  return "unknown";
}

inline bool converged(SolveStatus s) { return s != SolveStatus::MaxIters; }

struct SolverOptions {
  /// Step sizes; unset means 1/L (Standard) or 1/(L sqrt 2) (Doubled).
  std::optional<double> tau0;
  std::optional<double> sigma0;
  /// Strong-convexity modulus of G; > 0 enables the accelerated schedule.
  double gamma = 0.0;
  ExtragradientMode mode = ExtragradientMode::Standard;
  double eps = 1e-7;
  std::int64_t max_iters = 100000;
  ConvergenceCheck check = ConvergenceCheck::Both;
  int trace_every = 10;
  bool record_trace = true;
  /// Iterate norm or relative change above this aborts the solve.
  double divergence_limit = 1e12;
};

/// Iterates of the solver after iteration k.
struct SaddleState {
  VectorXd w;
  VectorXd v;
  VectorXd w_prime;
  double tau = 0.0;
  double sigma = 0.0;
  double theta = 1.0;
  VectorXd wbar;
  VectorXd vbar;
  std::int64_t k = 0;
};

struct TraceRecord {
  std::int64_t iter = 0;
  double rel_change_point = 0.0;
  double rel_change_ergodic = 0.0;
  double primal_obj = 0.0;
  double primal_feas = 0.0;
  double dual_obj = 0.0;
  double dual_feas = 0.0;
  /// primal_obj - dual_obj, reported regardless of feasibility; mask with
  /// the two feasibility columns.
  double gap = 0.0;
};

struct SolveResult {
  VectorXd w;
  VectorXd v;
  SolveStatus status = SolveStatus::MaxIters;
  std::int64_t iterations = 0;
  std::vector<TraceRecord> trace;
  double tau0 = 0.0;
  double sigma0 = 0.0;
  std::vector<std::string> warnings;
};

using IterationObserver = std::function<void(const SaddleState&)>;

/// Relative change ||z_k - z_{k-1}|| / max(1, ||z_k||) of the pair z = (w, v).
inline double relative_change(const VectorXd& w, const VectorXd& v, const VectorXd& w_prev,
                              const VectorXd& v_prev) {
  const double num = std::sqrt((w - w_prev).squaredNorm() + (v - v_prev).squaredNorm());
  const double den = std::max(1.0, std::sqrt(w.squaredNorm() + v.squaredNorm()));
  return num / den;
}

template <class Fn>
concept HasDualNorm = requires(const Fn& f, const VectorXd& x) {
  { f.dual_norm(x) } -> std::convertible_to<double>;
};

/// Objective and feasibility summary of (w, v) for the saddle problem with
/// F (primal regularizer) and G (norm whose dual bounds the residual).
template <class F, class G>
TraceRecord evaluate_pair(const ProblemData& prob, const F& f, const G& g, const VectorXd& w,
                          const VectorXd& v) {
  TraceRecord r;
  r.primal_obj = f.value(w);
  r.primal_feas = g.dual_norm(apply_A(prob, w));
  r.dual_obj = prob.Xty().dot(v) - g.value(v);
  r.dual_feas = f.dual_norm(apply_adjoint(prob, v));
  r.gap = r.primal_obj - r.dual_obj;
  return r;
}

namespace detail {

inline void resolve_steps(const ProblemData& prob, const SolverOptions& opts, double& tau0,
                          double& sigma0) {
  const double L = prob.L();
  const bool doubled = opts.mode == ExtragradientMode::Doubled;
  const double base = L > 0.0 ? (doubled ? 1.0 / (L * std::sqrt(2.0)) : 1.0 / L) : 1.0;
  tau0 = opts.tau0.value_or(base);
  sigma0 = opts.sigma0.value_or(base);
  require(tau0 > 0.0 && std::isfinite(tau0), "solver: tau0 must be positive");
  require(sigma0 > 0.0 && std::isfinite(sigma0), "solver: sigma0 must be positive");
  const double prod = (doubled ? 2.0 : 1.0) * tau0 * sigma0 * L * L;
  require(prod <= 1.0 + 1e-12, doubled ? "solver: Doubled mode requires 2 tau0 sigma0 L^2 <= 1"
                                       : "solver: Standard mode requires tau0 sigma0 L^2 <= 1");
  require(opts.gamma >= 0.0, "solver: gamma must be nonnegative");
  require(opts.gamma == 0.0 || opts.check == ConvergenceCheck::Pointwise,
          "solver: gamma > 0 requires the pointwise convergence check");
  require(opts.eps > 0.0, "solver: eps must be positive");
  require(opts.max_iters >= 1, "solver: max_iters must be >= 1");
  require(opts.trace_every >= 1, "solver: trace_every must be >= 1");
}

inline VectorXd start_or_zero(const VectorXd& x, Index p, const char* what) {
  if (x.size() == 0) return VectorXd::Zero(p);
  require_size(x.size(), p, what);
  require(x.allFinite(), std::string(what) + ": non-finite start");
  return x;
}

}  // namespace detail

/// Runs the primal-dual iteration with arbitrary proximable F and G.
///
/// F and G provide value(x) and prox(z, step) = argmin 1/2||u - z||^2 + step f(u);
/// trace rows are recorded only when both also provide dual_norm(x).
/// Stops when the relative change of (w_k, v_k) (pointwise) and/or of the
/// running averages (ergodic) drops to opts.eps, checked every iteration.
template <class F, class G>
SolveResult pdsp_solve_generic(const ProblemData& prob, const F& f, const G& g,
                               const SolverOptions& opts, const VectorXd& w0 = {},
                               const VectorXd& v0 = {}, const IterationObserver& observer = {}) {
  double tau0 = 0.0, sigma0 = 0.0;
  detail::resolve_steps(prob, opts, tau0, sigma0);
  const Index p = prob.p();

  SaddleState st;
  st.w = detail::start_or_zero(w0, p, "pdsp_solve: w0");
  st.v = detail::start_or_zero(v0, p, "pdsp_solve: v0");
  st.w_prime = st.w;
  st.tau = tau0;
  st.sigma = sigma0;
  st.theta = 1.0;
  st.wbar = st.w;
  st.vbar = st.v;

  constexpr bool kTrace = HasDualNorm<F> && HasDualNorm<G>;
  const double vscale = opts.mode == ExtragradientMode::Doubled ? 2.0 : 1.0;

  SolveResult res;
  res.tau0 = tau0;
  res.sigma0 = sigma0;

  VectorXd w_prev, v_prev, wbar_prev, vbar_prev;
  for (std::int64_t k = 0; k < opts.max_iters; ++k) {
    w_prev = st.w;
    v_prev = st.v;
    wbar_prev = st.wbar;
    vbar_prev = st.vbar;

    VectorXd dual_arg = st.v + st.sigma * apply_A(prob, st.w_prime);
    st.v = g.prox(dual_arg, st.sigma);
    VectorXd primal_arg = st.w + (st.tau * vscale) * apply_adjoint(prob, st.v);
    st.w = f.prox(primal_arg, st.tau);

    st.theta = 1.0 / std::sqrt(1.0 + 2.0 * opts.gamma * st.tau);
    st.w_prime = st.w + st.theta * (st.w - w_prev);
    st.tau *= st.theta;
    st.sigma /= st.theta;

    st.k = k + 1;
    const double inv_k = 1.0 / static_cast<double>(st.k);
    st.wbar += (st.w - st.wbar) * inv_k;
    st.vbar += (st.v - st.vbar) * inv_k;

    if (!st.w.allFinite() || !st.v.allFinite()) {
      throw NumericalFailure("pdsp_solve: non-finite iterate", st.k);
    }
    const double rc_point = relative_change(st.w, st.v, w_prev, v_prev);
    const double rc_erg = relative_change(st.wbar, st.vbar, wbar_prev, vbar_prev);
    const double znorm = std::sqrt(st.w.squaredNorm() + st.v.squaredNorm());
    if (rc_point > opts.divergence_limit || znorm > opts.divergence_limit) {
      throw NumericalFailure("pdsp_solve: iterates diverged", st.k);
    }

    if (observer) observer(st);

    const bool point_ok = opts.check != ConvergenceCheck::Ergodic && rc_point <= opts.eps;
    const bool erg_ok = opts.check != ConvergenceCheck::Pointwise && rc_erg <= opts.eps;
    const bool done = point_ok || erg_ok || st.k == opts.max_iters;

    if constexpr (kTrace) {
      if (opts.record_trace && (st.k % opts.trace_every == 0 || done)) {
        TraceRecord rec = evaluate_pair(prob, f, g, st.w, st.v);
        rec.iter = st.k;
        rec.rel_change_point = rc_point;
        rec.rel_change_ergodic = rc_erg;
        res.trace.push_back(rec);
      }
    }

    if (done) {
      res.iterations = st.k;
      res.status = point_ok ? SolveStatus::ConvergedPointwise
                 : erg_ok   ? SolveStatus::ConvergedErgodic
                            : SolveStatus::MaxIters;
      break;
    }
  }

  if (opts.check == ConvergenceCheck::Ergodic) {
    res.w = st.wbar;
    res.v = st.vbar;
  } else {
    res.w = st.w;
    res.v = st.v;
  }
  return res;
}

/// Solves the Dantzig-type problem with F = J_{lamF} and G = J_{lamG}.
/// For the ordered Dantzig selector pass the same sequence twice.
inline SolveResult pdsp_solve(const ProblemData& prob, const LambdaSeq& lamF, const LambdaSeq& lamG,
                              const SolverOptions& opts = {}, const VectorXd& w0 = {},
                              const VectorXd& v0 = {}, const IterationObserver& observer = {}) {
  detail::require_size(lamF.size(), prob.p(), "pdsp_solve: lamF");
  detail::require_size(lamG.size(), prob.p(), "pdsp_solve: lamG");
  return pdsp_solve_generic(prob, SortedL1Norm{lamF}, SortedL1Norm{lamG}, opts, w0, v0, observer);
}

/// Primal/dual values of (w, v) and the gap when both are feasible.
struct GapReport {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double primal_feas = 0.0;  // G^D(X^T (y - X w))
  double dual_feas = 0.0;    // F^D(X^T X v)
  bool primal_feasible = false;
  bool dual_feasible = false;
  std::optional<double> gap;  // empty marks an infeasible side
};

/// Primal-dual gap restricted to feasible points:
/// P = J_F(w) if G^D(X^T(y - Xw)) <= 1 + feas_tol, D = <X^T y, v> - J_G(v)
/// if F^D(X^T X v) <= 1 + feas_tol, gap = P - D.
inline GapReport restricted_gap(const ProblemData& prob, const LambdaSeq& lamF,
                                const LambdaSeq& lamG, const VectorXd& w, const VectorXd& v,
                                double feas_tol = 1e-6) {
  detail::require(feas_tol >= 0.0, "restricted_gap: feas_tol must be nonnegative");
  const TraceRecord r = evaluate_pair(prob, SortedL1Norm{lamF}, SortedL1Norm{lamG}, w, v);
  GapReport g;
  g.primal_value = r.primal_obj;
  g.dual_value = r.dual_obj;
  g.primal_feas = r.primal_feas;
  g.dual_feas = r.dual_feas;
  g.primal_feasible = r.primal_feas <= 1.0 + feas_tol;
  g.dual_feasible = r.dual_feas <= 1.0 + feas_tol;
  if (g.primal_feasible && g.dual_feasible) g.gap = r.gap;
  return g;
}

// ---------------------------------------------------------------------------
// Diagnostics for the boundedness and ergodic-rate guarantees (gamma = 0).

struct Theorem1Sample {
  std::int64_t k = 0;
  double w_dist2 = 0.0;  // ||w_k - w*||^2
  double v_dist2 = 0.0;  // ||v_k - v*||^2
  std::optional<double> ergodic_gap;  // restricted gap of the averages, if both feasible
  /// L(wbar_k, v*) - L(w*, vbar_k) with L(w, v) = J_F(w) + <X^T y - X^T X w, v> - J_G(v)
  std::optional<double> saddle_gap;
};

struct Theorem1Report {
  double C = 0.0;
  bool boundedness_ok = true;
  bool ergodic_ok = true;
  /// max over k of lhs / rhs for each inequality (<= 1 + slack passes).
  double worst_boundedness_ratio = 0.0;
  double worst_ergodic_ratio = 0.0;
  double worst_saddle_ratio = 0.0;
  std::int64_t ergodic_checked = 0;
  std::int64_t saddle_checked = 0;
  bool passed() const { return boundedness_ok && ergodic_ok; }
};

/// Checks, for every sample,
///   ||w_k-w*||^2/tau0 + ||v_k-v*||^2/sigma0 <= C (||w0-w*||^2/tau0 + ||v0-v*||^2/sigma0)
/// with C = 1/(1 - tau0 sigma0 L^2), and
///   gap(wbar_k, vbar_k) <= (1+C)/k (||w*-w0||^2/(2 tau0) + ||v*-v0||^2/(2 sigma0))
/// wherever the ergodic gap is available. The same right side bounds the
/// saddle gap L(wbar_k, v*) - L(w*, vbar_k), which is checked when recorded.
inline Theorem1Report check_theorem1_bounds(std::span<const Theorem1Sample> samples, double tau0,
                                            double sigma0, double L, double init_w_dist2,
                                            double init_v_dist2, double slack = 1e-6) {
  Theorem1Report rep;
  const double prod = tau0 * sigma0 * L * L;
  rep.C = prod < 1.0 ? 1.0 / (1.0 - prod) : std::numeric_limits<double>::infinity();
  const double init = init_w_dist2 / tau0 + init_v_dist2 / sigma0;
  const double half_init = 0.5 * init;
  for (const Theorem1Sample& s : samples) {
    const double lhs = s.w_dist2 / tau0 + s.v_dist2 / sigma0;
    const double rhs = rep.C * init;
    if (!(lhs <= rhs * (1.0 + slack) + 1e-12)) rep.boundedness_ok = false;
    if (rhs > 0.0 && std::isfinite(rhs)) rep.worst_boundedness_ratio = std::max(rep.worst_boundedness_ratio, lhs / rhs);
    if (s.ergodic_gap && s.k > 0) {
      ++rep.ergodic_checked;
      const double erhs = (1.0 + rep.C) / static_cast<double>(s.k) * half_init;
      const double elhs = *s.ergodic_gap;
      if (!(elhs <= erhs * (1.0 + slack) + 1e-12)) rep.ergodic_ok = false;
      if (erhs > 0.0 && std::isfinite(erhs)) rep.worst_ergodic_ratio = std::max(rep.worst_ergodic_ratio, elhs / erhs);
    }
    if (s.saddle_gap && s.k > 0) {
      ++rep.saddle_checked;
      const double erhs = (1.0 + rep.C) / static_cast<double>(s.k) * half_init;
      const double elhs = *s.saddle_gap;
      if (!(elhs <= erhs * (1.0 + slack) + 1e-12)) rep.ergodic_ok = false;
      if (erhs > 0.0 && std::isfinite(erhs)) rep.worst_saddle_ratio = std::max(rep.worst_saddle_ratio, elhs / erhs);
    }
  }
  return rep;
}

/// Runs the ODS solve from (w0, v0) and records a Theorem1Sample per
/// iteration against the reference saddle point (w_star, v_star).
inline std::vector<Theorem1Sample> collect_theorem1_samples(
    const ProblemData& prob, const LambdaSeq& lam, const SolverOptions& opts,
    const VectorXd& w_star, const VectorXd& v_star, const VectorXd& w0 = {},
    const VectorXd& v0 = {}, double feas_tol = 1e-6) {
  std::vector<Theorem1Sample> out;
  const SortedL1Norm J{lam};
  const double Jw_star = J.value(w_star);
  const double Jv_star = J.value(v_star);
  auto lagr = [&](const VectorXd& w, const VectorXd& v, double Jw, double Jv) {
    return Jw + apply_A(prob, w).dot(v) - Jv;
  };
  auto obs = [&](const SaddleState& st) {
    Theorem1Sample s;
    s.k = st.k;
    s.w_dist2 = (st.w - w_star).squaredNorm();
    s.v_dist2 = (st.v - v_star).squaredNorm();
    const GapReport g = restricted_gap(prob, lam, lam, st.wbar, st.vbar, feas_tol);
    s.ergodic_gap = g.gap;
    s.saddle_gap = lagr(st.wbar, v_star, J.value(st.wbar), Jv_star) -
                   lagr(w_star, st.vbar, Jw_star, J.value(st.vbar));
    out.push_back(s);
  };
  pdsp_solve(prob, lam, lam, opts, w0, v0, obs);
  return out;
}

}  // namespace odsel
