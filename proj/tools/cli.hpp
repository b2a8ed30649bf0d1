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

// Subcommands of the odsel command-line tool: lambda, solve, simulate, bench.
//
// Exit codes: 0 success, 2 usage or input error, 3 iteration limit reached,
// 4 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "odsel.hpp"

namespace odsel::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kMaxIters = 3, kNumerical = 4 };

struct LambdaArgs {
  Index p = 0;
  double q = 0.1;
  double sigma = 1.0;
  std::string adjust = "none";
  Index n = 0;
  std::string out_path;
};

struct SolveArgs {
  std::string x_path, y_path, lambda_path, out_path, trace_path;
  std::string algo = "pdsp";
  std::string mode = "standard";
  double eps = 1e-7;
  std::int64_t max_iters = 100000;
};

struct InstanceArgs {
  Index n = 400;
  Index p = 200;
  Index s = 10;
  double q = 0.1;
  double sigma = 1.0;
  std::string design = "orthogonal";
  std::uint64_t seed = 7;
  double eps = 1e-7;
  std::int64_t max_iters = 200000;
  int threads = 1;

  SimConfig config() const {
    SimConfig c;
    c.n = n;
    c.p = p;
    c.s = s;
    c.q = q;
    c.sigma_noise = sigma;
    c.design = design == "gaussian" ? Design::Gaussian : Design::Orthogonal;
    c.seed = seed;
    c.eps = eps;
    c.max_iters = max_iters;
    c.threads = threads;
    return c;
  }
};

struct SimulateArgs {
  InstanceArgs inst;
  std::int64_t reps = 200;
  std::string algo = "pdsp";
  std::string out_path;
};

struct BenchArgs {
  InstanceArgs inst;
  std::vector<std::string> algos{"pdsp"};
  std::int64_t repeats = 1;
  std::string out_path;
};

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  return out;
}

inline int cmd_lambda(const LambdaArgs& a) {
  LambdaSeq lam = bh_lambda(a.p, a.q, a.sigma);
  if (a.adjust == "gaussian") {
    detail::require(a.n > 0, "--adjust gaussian requires --n");
    lam = gaussian_adjusted_lambda(lam, a.n);
  }
  std::ofstream out = open_out(a.out_path);
  write_csv(out, lam.values());
  return kOk;
}

inline void write_trace(const std::string& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out = open_out(path);
  out << "iter,rel_change_point,rel_change_ergodic,primal_obj,primal_feas,dual_obj,dual_feas,gap\n";
  for (const TraceRecord& t : trace) {
    out << t.iter << ',' << format_double(t.rel_change_point) << ','
        << format_double(t.rel_change_ergodic) << ',' << format_double(t.primal_obj) << ','
        << format_double(t.primal_feas) << ',' << format_double(t.dual_obj) << ','
        << format_double(t.dual_feas) << ',' << format_double(t.gap) << '\n';
  }
}

inline int cmd_solve(const SolveArgs& a, std::ostream& err) {
  ProblemData prob(read_csv_file(a.x_path).values, read_vector_file(a.y_path));
  const LambdaSeq lam(read_vector_file(a.lambda_path));
  detail::require_size(lam.size(), prob.p(), "lambda length");

  SolveResult res;
  const bool trace = !a.trace_path.empty();
  if (a.algo == "pdsp") {
    SolverOptions o;
    o.eps = a.eps;
    o.max_iters = a.max_iters;
    o.record_trace = trace;
    o.mode = a.mode == "doubled" ? ExtragradientMode::Doubled : ExtragradientMode::Standard;
    res = pdsp_solve(prob, lam, lam, o);
  } else if (a.algo == "ladmm") {
    LadmmOptions o;
    o.eps = a.eps;
    o.max_iters = a.max_iters;
    o.record_trace = trace;
    res = ladmm_solve(prob, lam, o);
  } else {
    HpeOptions o;
    o.eps = a.eps;
    o.max_iters = a.max_iters;
    o.record_trace = trace;
    res = hpe_solve(prob, lam, o);
  }
  for (const std::string& w : res.warnings) err << "warning: " << w << '\n';

  std::ofstream out = open_out(a.out_path);
  write_csv(out, res.w);
  out.close();
  if (trace) write_trace(a.trace_path, res.trace);
  if (!converged(res.status)) {
    err << "iteration limit reached after " << res.iterations << " iterations\n";
    return kMaxIters;
  }
  return kOk;
}

inline int cmd_simulate(const SimulateArgs& a) {
  SimConfig cfg = a.inst.config();
  cfg.reps = a.reps;
  cfg.solver = *parse_solver_kind(a.algo);
  const SimResult res = run_fdr_experiment(cfg);

  std::ofstream out = open_out(a.out_path);
  out << "rep,V,R,fdp,power,iters,status\n";
  for (const RepRecord& r : res.reps) {
    out << r.rep << ',' << r.V << ',' << r.R << ',' << format_double(r.fdp) << ','
        << format_double(r.power) << ',' << r.iters << ',' << r.status << '\n';
  }
  out << "# mean_fdr=" << format_double(res.mean_fdr) << ",se_fdr=" << format_double(res.se_fdr)
      << ",mean_power=" << format_double(res.mean_power)
      << ",se_power=" << format_double(res.se_power) << '\n';
  return kOk;
}

struct BenchRow {
  std::string algo;
  std::int64_t rep = 0;
  double seconds = 0.0;
  std::int64_t iters = 0;
  std::string status;
  double final_obj = std::numeric_limits<double>::quiet_NaN();
};

inline int cmd_bench(const BenchArgs& a, std::ostream& err) {
  std::vector<SolverKind> kinds;
  for (const std::string& name : a.algos) {
    const auto k = parse_solver_kind(name);
    if (!k) throw InvalidArgument("unknown algo '" + name + "'");
    kinds.push_back(*k);
  }
  detail::require(a.repeats >= 1, "--repeats must be >= 1");
  SimConfig cfg = a.inst.config();
  cfg.reps = a.repeats;
  cfg.validate();

  std::vector<BenchRow> rows(static_cast<std::size_t>(a.repeats) * kinds.size());
  parallel_for(a.repeats, cfg.threads, [&](std::int64_t rep) {
    const Instance inst = gen_instance(cfg, rep);
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      BenchRow& row = rows[static_cast<std::size_t>(rep) * kinds.size() + j];
      row.algo = to_string(kinds[j]);
      row.rep = rep;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const SolveResult r = solve_ods(kinds[j], inst.prob, inst.lambda, cfg.eps, cfg.max_iters);
        row.iters = r.iterations;
        row.status = to_string(r.status);
        row.final_obj = sorted_l1_norm(r.w, inst.lambda);
      } catch (const NumericalFailure& e) {
        row.iters = e.iteration();
        row.status = "numerical_failure";
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  });

  std::ofstream out = open_out(a.out_path);
  out << "algo,rep,seconds,iters,status,final_obj\n";
  for (const BenchRow& r : rows) {
    out << r.algo << ',' << r.rep << ',' << format_double(r.seconds) << ',' << r.iters << ','
        << r.status << ',' << format_double(r.final_obj) << '\n';
    if (r.status == "numerical_failure") err << r.algo << " rep " << r.rep << ": numerical failure\n";
  }
  return kOk;
}

inline void add_instance_flags(CLI::App* sub, InstanceArgs& a) {
  sub->add_option("--n", a.n, "Number of observations")->check(CLI::PositiveNumber);
  sub->add_option("--p", a.p, "Number of features")->check(CLI::PositiveNumber);
  sub->add_option("--s", a.s, "Number of true signals")->check(CLI::NonNegativeNumber);
  sub->add_option("--q", a.q, "Target FDR level")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--sigma", a.sigma, "Noise level")->check(CLI::PositiveNumber);
  sub->add_option("--design", a.design, "Design")->check(CLI::IsMember({"orthogonal", "gaussian"}));
  sub->add_option("--seed", a.seed, "Base seed");
  sub->add_option("--eps", a.eps, "Stopping tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", a.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
  sub->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
}

/// Parses argv and runs one subcommand. Diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Ordered Dantzig selector toolkit", "odsel"};
  app.require_subcommand(1);

  LambdaArgs la;
  auto* lam = app.add_subcommand("lambda", "Write a BH-style lambda sequence");
  lam->add_option("--p", la.p, "Length")->required()->check(CLI::PositiveNumber);
  lam->add_option("--q", la.q, "Target FDR level")->check(CLI::Range(0.0, 1.0));
  lam->add_option("--sigma", la.sigma, "Noise level")->check(CLI::PositiveNumber);
  lam->add_option("--adjust", la.adjust, "Adjustment")->check(CLI::IsMember({"none", "gaussian"}));
  lam->add_option("--n", la.n, "Observations (for --adjust gaussian)");
  lam->add_option("--out-path", la.out_path, "Output file")->required();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve one ODS instance from CSV files");
  solve->add_option("--x-path", sa.x_path, "Design matrix CSV")->required();
  solve->add_option("--y-path", sa.y_path, "Response CSV")->required();
  solve->add_option("--lambda-path", sa.lambda_path, "Lambda CSV")->required();
  solve->add_option("--algo", sa.algo, "Solver")->check(CLI::IsMember({"pdsp", "ladmm", "hpe"}));
  solve->add_option("--mode", sa.mode, "Extragradient mode")->check(CLI::IsMember({"standard", "doubled"}));
  solve->add_option("--eps", sa.eps, "Stopping tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--max-iters", sa.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
  solve->add_option("--out-path", sa.out_path, "Solution output")->required();
  solve->add_option("--trace-path", sa.trace_path, "Trace CSV output");

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo FDR and power");
  add_instance_flags(sim, ma.inst);
  sim->add_option("--reps", ma.reps, "Replications")->check(CLI::PositiveNumber);
  sim->add_option("--algo", ma.algo, "Solver")->check(CLI::IsMember({"pdsp", "ladmm", "hpe"}));
  sim->add_option("--out-path", ma.out_path, "Output CSV")->required();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Relative solver timings");
  add_instance_flags(bench, ba.inst);
  bench->add_option("--algos", ba.algos, "Comma-separated solvers")->delimiter(',');
  bench->add_option("--repeats", ba.repeats, "Instances")->check(CLI::PositiveNumber);
  bench->add_option("--out-path", ba.out_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*lam) return cmd_lambda(la);
    if (*solve) return cmd_solve(sa, err);
    if (*sim) return cmd_simulate(ma);
    return cmd_bench(ba, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalFailure& e) {
    err << "numerical failure at iteration " << e.iteration() << ": " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace odsel::cli
