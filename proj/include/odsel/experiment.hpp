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

// Monte-Carlo harness: synthetic instances, FDR/power estimation, two-pass
// convergence traces and local strong-convexity estimates.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "odsel/baselines.hpp"
#include "odsel/core_model.hpp"
#include "odsel/errors.hpp"
#include "odsel/orthogonal.hpp"
#include "odsel/pdsp.hpp"
#include "odsel/random.hpp"
#include "odsel/sorted_l1.hpp"

namespace odsel {

enum class Design { Gaussian, Orthogonal };
enum class SolverKind { Pdsp, Ladmm, Hpe };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Pdsp: return "pdsp";
    case SolverKind::Ladmm: return "ladmm";
    case SolverKind::Hpe: return "hpe";
  }
  return "unknown";
}

inline std::optional<SolverKind> parse_solver_kind(const std::string& s) {
  if (s == "pdsp") return SolverKind::Pdsp;
  if (s == "ladmm") return SolverKind::Ladmm;
  if (s == "hpe") return SolverKind::Hpe;
  return std::nullopt;
}

/// Solves the ODS (F = G = J_lambda) with the chosen method from zero starts.
inline SolveResult solve_ods(SolverKind kind, const ProblemData& prob, const LambdaSeq& lam,
                             double eps, std::int64_t max_iters, bool record_trace = false) {
  switch (kind) {
    case SolverKind::Pdsp: {
      SolverOptions o;
      o.eps = eps;
      o.max_iters = max_iters;
      o.record_trace = record_trace;
      return pdsp_solve(prob, lam, lam, o);
    }
    case SolverKind::Ladmm: {
      LadmmOptions o;
      o.eps = eps;
      o.max_iters = max_iters;
      o.record_trace = record_trace;
      return ladmm_solve(prob, lam, o);
    }
    case SolverKind::Hpe: {
      HpeOptions o;
      o.eps = eps;
      o.max_iters = max_iters;
      o.record_trace = record_trace;
      return hpe_solve(prob, lam, o);
    }
  }
  throw InvalidArgument("solve_ods: unknown solver");
}

struct SimConfig {
  Index n = 400;
  Index p = 200;
  Index s = 10;
  double q = 0.1;
  double sigma_noise = 1.0;
  Design design = Design::Orthogonal;
  std::int64_t reps = 200;
  std::uint64_t seed = 7;
  SolverKind solver = SolverKind::Pdsp;
  double eps = 1e-7;
  std::int64_t max_iters = 200000;
  /// Discovery threshold relative to max(1, ||w_hat||_inf).
  double support_tol = 1e-6;
  int threads = 1;

  void validate() const {
    detail::require(n >= 1 && p >= 1, "SimConfig: n and p must be >= 1");
    detail::require(s >= 0 && s <= p, "SimConfig: need 0 <= s <= p");
    detail::require(q > 0.0 && q < 1.0, "SimConfig: q must lie in (0, 1)");
    detail::require(sigma_noise > 0.0, "SimConfig: sigma must be positive");
    detail::require(design != Design::Orthogonal || n >= p, "SimConfig: orthogonal design needs n >= p");
    detail::require(design != Design::Gaussian || n > 1, "SimConfig: gaussian design needs n > 1");
    detail::require(reps >= 1, "SimConfig: reps must be >= 1");
    detail::require(eps > 0.0, "SimConfig: eps must be positive");
    detail::require(max_iters >= 1, "SimConfig: max_iters must be >= 1");
    detail::require(support_tol >= 0.0, "SimConfig: support_tol must be nonnegative");
    detail::require(threads >= 1, "SimConfig: threads must be >= 1");
  }
};

struct Instance {
  ProblemData prob;
  VectorXd w_true;
  LambdaSeq lambda;
};

/// Orthonormalizes the columns of A in place (classical Gram-Schmidt, two passes).
inline void orthonormalize_columns(MatrixXd& A) {
  for (Index j = 0; j < A.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      if (j > 0) {
        const VectorXd coef = A.leftCols(j).transpose() * A.col(j);
        A.col(j) -= A.leftCols(j) * coef;
      }
    }
    const double nrm = A.col(j).norm();
    if (nrm == 0.0) throw NumericalFailure("orthonormalize_columns: rank-deficient draw", j);
    A.col(j) /= nrm;
  }
}

/// Deterministic instance for (cfg.seed, rep_index).
///
/// Gaussian designs draw entries N(0, 1); orthogonal designs orthonormalize
/// an n x p Gaussian draw. The s-sparse signal has magnitude sqrt(2 log p) on a
/// uniformly drawn support, y = X w + N(0, sigma^2) noise, and lambda is the
/// BH-style sequence (Gaussian-adjusted for Gaussian designs).
inline Instance gen_instance(const SimConfig& cfg, std::int64_t rep_index) {
  cfg.validate();
  RandomStream rng(cfg.seed, static_cast<std::uint64_t>(rep_index));
  MatrixXd X = rng.normal_matrix(cfg.n, cfg.p);
  if (cfg.design == Design::Orthogonal) orthonormalize_columns(X);

  std::vector<Index> idx(static_cast<std::size_t>(cfg.p));
  for (Index i = 0; i < cfg.p; ++i) idx[static_cast<std::size_t>(i)] = i;
  VectorXd w = VectorXd::Zero(cfg.p);
  const double mag = std::sqrt(2.0 * std::log(static_cast<double>(cfg.p)));
  for (Index i = 0; i < cfg.s; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(cfg.p - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    w[idx[static_cast<std::size_t>(i)]] = mag;
  }

  VectorXd y = X * w + cfg.sigma_noise * rng.normal_vector(cfg.n);
  LambdaSeq lam = bh_lambda(cfg.p, cfg.q, cfg.sigma_noise);
  if (cfg.design == Design::Gaussian) lam = gaussian_adjusted_lambda(lam, cfg.n);
  return Instance{ProblemData(std::move(X), std::move(y)), std::move(w), std::move(lam)};
}

/// Indices i with |w_i| > rel_tol * max(1, ||w||_inf).
inline std::vector<Index> discoveries(const VectorXd& w, double rel_tol) {
  const double thr = rel_tol * std::max(1.0, w.cwiseAbs().maxCoeff());
  std::vector<Index> out;
  for (Index i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) > thr) out.push_back(i);
  return out;
}

struct RepRecord {
  std::int64_t rep = 0;
  Index V = 0;  // false discoveries
  Index R = 0;  // all discoveries
  Index true_positives = 0;
  double fdp = 0.0;
  double power = 0.0;
  std::int64_t iters = 0;
  std::string status;
  bool failed = false;
  std::string error;
  /// max |w_hat - oracle| for orthogonal designs.
  std::optional<double> oracle_diff;
};

struct SimResult {
  std::vector<RepRecord> reps;
  Index p0 = 0;
  double mean_fdr = 0.0;
  double se_fdr = 0.0;
  double mean_power = 0.0;
  double se_power = 0.0;
  std::int64_t failures = 0;
};

/// Runs fn(i) for i in [0, count) on `threads` workers; the first exception
/// thrown by any call is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::int64_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, count));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::int64_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline RepRecord run_replication(const SimConfig& cfg, std::int64_t rep) {
  RepRecord rec;
  rec.rep = rep;
  const Instance inst = gen_instance(cfg, rep);
  SolveResult sol;
  try {
    sol = solve_ods(cfg.solver, inst.prob, inst.lambda, cfg.eps, cfg.max_iters);
  } catch (const NumericalFailure& e) {
    rec.failed = true;
    rec.status = "numerical_failure";
    rec.error = e.what();
    rec.iters = e.iteration();
    return rec;
  }
  rec.iters = sol.iterations;
  rec.status = to_string(sol.status);
  for (Index i : discoveries(sol.w, cfg.support_tol)) {
    ++rec.R;
    if (inst.w_true[i] == 0.0) ++rec.V;
    else ++rec.true_positives;
  }
  rec.fdp = static_cast<double>(rec.V) / static_cast<double>(std::max<Index>(rec.R, 1));
  rec.power = cfg.s > 0 ? static_cast<double>(rec.true_positives) / static_cast<double>(cfg.s) : 0.0;
  if (cfg.design == Design::Orthogonal) {
    const VectorXd oracle = slope_orthogonal_solve(inst.prob.Xty(), inst.lambda);
    rec.oracle_diff = (sol.w - oracle).cwiseAbs().maxCoeff();
  }
  return rec;
}

/// Replicates gen_instance + solve and tallies V, R and power per rep. Failed
/// replications are recorded and excluded from the means; 5% or more failures
/// raise NumericalFailure.
inline SimResult run_fdr_experiment(const SimConfig& cfg) {
  cfg.validate();
  SimResult res;
  res.p0 = cfg.p - cfg.s;
  res.reps.resize(static_cast<std::size_t>(cfg.reps));
  parallel_for(cfg.reps, cfg.threads,
               [&](std::int64_t r) { res.reps[static_cast<std::size_t>(r)] = run_replication(cfg, r); });

  std::vector<double> fdp, power;
  for (const RepRecord& r : res.reps) {
    if (r.failed) {
      ++res.failures;
      continue;
    }
    fdp.push_back(r.fdp);
    power.push_back(r.power);
  }
  if (static_cast<double>(res.failures) >= 0.05 * static_cast<double>(cfg.reps)) {
    throw NumericalFailure("run_fdr_experiment: " + std::to_string(res.failures) + " of " +
                               std::to_string(cfg.reps) + " replications failed",
                           res.failures);
  }
  auto mean_se = [](const std::vector<double>& xs, double& mean, double& se) {
    const auto m = static_cast<double>(xs.size());
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= m;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = xs.size() > 1 ? std::sqrt(ss / (m - 1.0)) / std::sqrt(m) : 0.0;
  };
  mean_se(fdp, res.mean_fdr, res.se_fdr);
  mean_se(power, res.mean_power, res.se_power);
  return res;
}

/// (J(w*) - J(w_k) - 1/2 <g, w* - w_k>) / ||w* - w_k||^2 with g the
/// subgradient of J at w_k. May be negative.
inline double local_strong_convexity_estimate(const LambdaSeq& lam, const VectorXd& w_star,
                                              const VectorXd& w_k) {
  detail::require_size(w_star.size(), lam.size(), "local_strong_convexity_estimate: w_star");
  detail::require_size(w_k.size(), lam.size(), "local_strong_convexity_estimate: w_k");
  const VectorXd d = w_star - w_k;
  const double dn2 = d.squaredNorm();
  detail::require(std::sqrt(dn2) > 1e-12, "local_strong_convexity_estimate: coincident points");
  const VectorXd g = subgradient_sorted_l1(w_k, lam);
  return (sorted_l1_norm(w_star, lam) - sorted_l1_norm(w_k, lam) - 0.5 * g.dot(d)) / dn2;
}

struct ConvergenceTrace {
  VectorXd w_star;
  VectorXd v_star;
  std::vector<std::int64_t> iter;
  std::vector<double> primal_point;    // ||w_k - w*|| / ||w*||
  std::vector<double> primal_ergodic;  // ||wbar_k - w*|| / ||w*||
  std::vector<double> dual_point;
  std::vector<double> dual_ergodic;
  std::optional<double> slope_primal_ergodic;
  std::optional<double> slope_primal_point;
  SolveStatus status = SolveStatus::MaxIters;
};

/// Least-squares slope of log(err) against log(k) over k in [K/10, K],
/// skipping zero errors. Empty when fewer than two usable points remain.
inline std::optional<double> final_decade_slope(const std::vector<std::int64_t>& iter,
                                                const std::vector<double>& err) {
  if (iter.empty()) return std::nullopt;
  const double K = static_cast<double>(iter.back());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < iter.size(); ++i) {
    const double k = static_cast<double>(iter[i]);
    if (k < K / 10.0 || !(err[i] > 0.0) || !std::isfinite(err[i])) continue;
    const double x = std::log(k), y = std::log(err[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  if (m < 2) return std::nullopt;
  const double den = m * sxx - sx * sx;
  if (den <= 0.0) return std::nullopt;
  return (m * sxy - sx * sy) / den;
}

/// Two passes over one instance: a solve at eps/100 for the reference pair
/// (w*, v*), then a rerun with `opts` recording relative distances of the
/// pointwise and averaged iterates to it.
inline ConvergenceTrace convergence_trace_experiment(const ProblemData& prob, const LambdaSeq& lam,
                                                     const SolverOptions& opts) {
  SolverOptions ref = opts;
  ref.eps = opts.eps * 1e-2;
  ref.record_trace = false;
  ref.max_iters = opts.max_iters * 10;
  const SolveResult star = pdsp_solve(prob, lam, lam, ref);

  ConvergenceTrace tr;
  tr.w_star = star.w;
  tr.v_star = star.v;
  const double wn = std::max(star.w.norm(), 1e-12);
  const double vn = std::max(star.v.norm(), 1e-12);
  auto obs = [&](const SaddleState& st) {
    tr.iter.push_back(st.k);
    tr.primal_point.push_back((st.w - star.w).norm() / wn);
    tr.primal_ergodic.push_back((st.wbar - star.w).norm() / wn);
    tr.dual_point.push_back((st.v - star.v).norm() / vn);
    tr.dual_ergodic.push_back((st.vbar - star.v).norm() / vn);
  };
  SolverOptions pass = opts;
  pass.record_trace = false;
  tr.status = pdsp_solve(prob, lam, lam, pass, {}, {}, obs).status;
  tr.slope_primal_ergodic = final_decade_slope(tr.iter, tr.primal_ergodic);
  tr.slope_primal_point = final_decade_slope(tr.iter, tr.primal_point);
  return tr;
}

}  // namespace odsel
