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
// Acceptance checks AC1-AC9. Prints one [PASS]/[FAIL] line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"

namespace {

using namespace odsel;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// The p = n = 100, s = 5 Gaussian battery shared by AC6 and AC7.
std::vector<Instance> gaussian_battery() {
  SimConfig c;
  c.n = 100;
  c.p = 100;
  c.s = 5;
  c.design = Design::Gaussian;
  c.seed = 2024;
  std::vector<Instance> out;
  for (int rep = 0; rep < 20; ++rep) out.push_back(gen_instance(c, rep));
  return out;
}

Outcome ac1_fdr_control() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream d;
  for (Index s : {0, 5, 10, 15}) {
    SimConfig c;
    c.n = 400;
    c.p = 200;
    c.s = s;
    c.q = 0.1;
    c.sigma_noise = 1.0;
    c.design = Design::Orthogonal;
    c.reps = 200;
    c.seed = 7;
    const SimResult r = run_fdr_experiment(c);
    const double bound = 0.1 * static_cast<double>(c.p - s) / static_cast<double>(c.p) + 3.0 * r.se_fdr;
    ok = ok && r.mean_fdr <= bound;
    d << " s=" << s << ":fdr=" << fmt("%.4f", r.mean_fdr) << "<=" << fmt("%.4f", bound);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  ok = ok && secs < 600.0;
  d << " runtime=" << fmt("%.1f", secs) << "s(<600)";
  return {ok, d.str()};
}

Outcome ac2_orthogonal_equivalence() {
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < 50; ++i) {
    SimConfig c;
    c.p = 20 + 180 * i / 49;  // 20 .. 200
    c.n = 2 * c.p;
    c.s = c.p / 10;
    c.seed = 1000;
    const Instance inst = gen_instance(c, i);
    SolverOptions o;
    o.eps = 1e-9;
    o.max_iters = 1000000;
    const SolveResult r = pdsp_solve(inst.prob, inst.lambda, inst.lambda, o);
    const double diff = (r.w - slope_orthogonal_solve(inst.prob.Xty(), inst.lambda)).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    ok = ok && converged(r.status) && diff <= 1e-5;
  }
  return {ok, "50 instances, max|w-oracle|=" + fmt("%.2e", worst) + " (<=1e-5)"};
}

Outcome ac3_prox_correctness() {
  RandomStream rng(3003, 0);
  double worst_obj = 0.0, worst_abs = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Index p = 1 + static_cast<Index>(rng.below(6));
    const LambdaSeq lam = testing::random_lambda(rng, p);
    const VectorXd z = 2.0 * rng.normal_vector(p);
    const double ours = testing::prox_objective(prox_sorted_l1(z, lam, 1.0), z, lam, 1.0);
    const double ref = testing::prox_objective(testing::prox_face_enumeration(z, lam, 1.0), z, lam, 1.0);
    worst_obj = std::max(worst_obj, ours - ref);
  }
  for (int i = 0; i < 1000; ++i) {
    const Index p = 1 + static_cast<Index>(rng.below(64));
    const LambdaSeq lam = testing::random_lambda(rng, p);
    const VectorXd z = 2.0 * rng.normal_vector(p);
    worst_abs = std::max(worst_abs, (prox_sorted_l1(z, lam, 1.0) - slope_orthogonal_solve(z, lam)).cwiseAbs().maxCoeff());
  }
  return {worst_obj <= 1e-6 && worst_abs <= 1e-10,
          "p<=6 objective excess=" + fmt("%.2e", worst_obj) + " (<=1e-6), p<=64 max|diff|=" +
              fmt("%.2e", worst_abs) + " (<=1e-10)"};
}

Outcome ac4_moreau() {
  RandomStream rng(4004, 0);
  double worst_rec = 0.0, worst_feas = 0.0;
  int bitwise = 0;
  bool ok = true;
  for (int i = 0; i < 1000; ++i) {
    const Index p = 1 + static_cast<Index>(rng.below(64));
    const LambdaSeq lam = testing::random_lambda(rng, p);
    const VectorXd z = 3.0 * rng.normal_vector(p);
    const VectorXd proj = project_dual_ball(z, lam);
    const VectorXd sum = prox_sorted_l1(z, lam, 1.0) + proj;
    const double rec = (sum - z).cwiseAbs().maxCoeff() / z.cwiseAbs().maxCoeff();
    bitwise += sum == z;
    worst_rec = std::max(worst_rec, rec);
    worst_feas = std::max(worst_feas, dual_sorted_l1_norm(proj, lam));
    // One rounding of the subtraction z - prox is the only error source.
    ok = ok && rec <= std::numeric_limits<double>::epsilon() && dual_sorted_l1_norm(proj, lam) <= 1.0 + 1e-9;
  }
  return {ok, "1000 pairs, bitwise-exact=" + std::to_string(bitwise) + ", max rel reconstruction err=" +
                  fmt("%.2e", worst_rec) + " (<=2^-52), max J^D(proj)=" + fmt("%.12f", worst_feas) +
                  " (<=1+1e-9)"};
}

Outcome ac5_theorem1() {
  bool ok = true;
  double wb = 0.0, we = 0.0, ws = 0.0;
  std::int64_t checked = 0, saddle = 0, samples_total = 0;
  for (int i = 0; i < 20; ++i) {
    SimConfig c;
    c.p = 20 + 80 * i / 19;  // 20 .. 100
    c.n = i % 2 ? c.p : 2 * c.p;
    c.s = 3;
    c.design = i % 4 == 3 ? Design::Orthogonal : Design::Gaussian;
    c.seed = 5005;
    const Instance inst = gen_instance(c, i);
    SolverOptions ref;
    ref.eps = 1e-12;
    ref.max_iters = 2000000;
    const SolveResult star = pdsp_solve(inst.prob, inst.lambda, inst.lambda, ref);
    SolverOptions o;
    o.tau0 = o.sigma0 = std::sqrt(0.99) / inst.prob.L();
    o.eps = 1e-8;
    o.max_iters = 200000;
    o.record_trace = false;
    const auto samples = collect_theorem1_samples(inst.prob, inst.lambda, o, star.w, star.v);
    const Theorem1Report rep = check_theorem1_bounds(samples, *o.tau0, *o.sigma0, inst.prob.L(),
                                                     star.w.squaredNorm(), star.v.squaredNorm(), 1e-6);
    ok = ok && rep.passed();
    wb = std::max(wb, rep.worst_boundedness_ratio);
    we = std::max(we, rep.worst_ergodic_ratio);
    ws = std::max(ws, rep.worst_saddle_ratio);
    checked += rep.ergodic_checked;
    saddle += rep.saddle_checked;
    samples_total += static_cast<std::int64_t>(samples.size());
  }
  return {ok, "20 instances, " + std::to_string(samples_total) + " iterations, worst bound ratio (a)=" +
                  fmt("%.3e", wb) + " (b) saddle gap=" + fmt("%.3e", ws) + " over " + std::to_string(saddle) +
                  " averages, restricted gap=" + fmt("%.3e", we) + " over " + std::to_string(checked) +
                  " feasible averages"};
}

Outcome ac6_ergodic_rate(const std::vector<Instance>& battery) {
  std::vector<double> slopes, point, erg;
  std::ostringstream misses;
  int within = 0;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    SolverOptions o;
    o.eps = 1e-7;
    o.max_iters = 1000000;
    o.check = ConvergenceCheck::Pointwise;
    const ConvergenceTrace tr = convergence_trace_experiment(battery[i].prob, battery[i].lambda, o);
    const double slope = tr.slope_primal_ergodic.value_or(std::numeric_limits<double>::infinity());
    slopes.push_back(slope);
    if (slope <= -0.8) {
      ++within;
    } else {
      misses << " rep" << i << ":slope=" << fmt("%.3f", slope) << "@k=" << tr.iter.back();
    }
    point.push_back(tr.primal_point.back());
    erg.push_back(tr.primal_ergodic.back());
  }
  const double mp = median(point), me = median(erg);
  const bool ok = within == static_cast<int>(battery.size()) && mp <= me;
  return {ok, std::to_string(within) + "/" + std::to_string(battery.size()) +
                  " instances with final-decade slope<=-0.8 (median=" + fmt("%.3f", median(slopes)) + ")" +
                  misses.str() + "; median final error pointwise=" + fmt("%.2e", mp) + " <= ergodic=" +
                  fmt("%.2e", me)};
}

Outcome ac7_cross_solver(const std::vector<Instance>& battery) {
  const SolverKind kinds[] = {SolverKind::Pdsp, SolverKind::Ladmm, SolverKind::Hpe};
  double worst_rel = 0.0;
  double worst_feas[3] = {0.0, 0.0, 0.0};
  int unconverged[3] = {0, 0, 0};
  for (const Instance& inst : battery) {
    std::vector<double> objs;
    for (int j = 0; j < 3; ++j) {
      const SolveResult r = solve_ods(kinds[j], inst.prob, inst.lambda, 1e-9, 1000000);
      unconverged[j] += !converged(r.status);
      objs.push_back(sorted_l1_norm(r.w, inst.lambda));
      const double feas = dual_sorted_l1_norm(inst.prob.Xty() - apply_adjoint(inst.prob, r.w), inst.lambda);
      worst_feas[j] = std::max(worst_feas[j], feas);
    }
    for (double o : objs) worst_rel = std::max(worst_rel, rel_diff(o, objs[0]));
  }
  bool ok = worst_rel <= 1e-4;
  std::string d = "20 instances, max relative objective spread=" + fmt("%.2e", worst_rel) + " (<=1e-4);";
  for (int j = 0; j < 3; ++j) {
    ok = ok && unconverged[j] == 0 && worst_feas[j] <= 1.0 + 1e-6;
    d += std::string(" ") + to_string(kinds[j]) + ": unconverged=" + std::to_string(unconverged[j]) +
         " max J^D(X^T(y-Xw))-1=" + fmt("%.2e", worst_feas[j] - 1.0);
  }
  return {ok, d + " (<=1e-6)"};
}

Outcome ac8_lambda_pipeline() {
  const LambdaSeq two = bh_lambda(2, 0.1, 1.0);
  bool ok = std::abs(two[0] - 1.9600) <= 1e-4 && std::abs(two[1] - 1.6449) <= 1e-4;
  double worst = 0.0;
  for (Index p : {1, 2, 10, 100, 1000}) {
    const LambdaSeq lam = bh_lambda(p, 0.1, 1.0);
    for (Index i = 0; i < p; ++i) {
      const double u = 1.0 - static_cast<double>(i + 1) * 0.1 / (2.0 * static_cast<double>(p));
      worst = std::max(worst, std::abs(lam[i] - testing::reference_quantile(u)));
    }
  }
  ok = ok && worst <= 1e-4;
  RandomStream rng(8008, 0);
  int monotone = 0;
  for (int i = 0; i < 100; ++i) {
    const Index p = 1 + static_cast<Index>(rng.below(500));
    const LambdaSeq lam = bh_lambda(p, 0.01 + 0.4 * rng.uniform(), 0.1 + 2.0 * rng.uniform());
    const LambdaSeq adj = gaussian_adjusted_lambda(lam, 2 + static_cast<Index>(rng.below(1000)));
    bool mono = true;
    for (Index k = 1; k < adj.size(); ++k) mono = mono && adj[k] <= adj[k - 1];
    monotone += mono;
  }
  ok = ok && monotone == 100;
  return {ok, "p=2: (" + fmt("%.4f", two[0]) + ", " + fmt("%.4f", two[1]) + "), max |lambda-quantile|=" +
                  fmt("%.1e", worst) + " (<=1e-4), adjusted non-increasing " + std::to_string(monotone) + "/100"};
}

Outcome ac9_relative_timings() {
  // Declaration only: the bench command reports seconds without any threshold.
  const std::string path = "acceptance_bench.csv";
  cli::BenchArgs a;
  a.inst.n = 100;
  a.inst.p = 50;
  a.inst.s = 3;
  a.inst.design = "gaussian";
  a.algos = {"pdsp", "ladmm", "hpe"};
  a.repeats = 3;
  a.out_path = path;
  std::ostringstream err;
  const int code = cli::cmd_bench(a, err);
  const CsvMatrix m = [&] {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    std::vector<double> secs;
    std::string line;
    while (std::getline(in, line)) {
      std::stringstream ls(line);
      std::string algo, rep, s;
      std::getline(ls, algo, ',');
      std::getline(ls, rep, ',');
      std::getline(ls, s, ',');
      secs.push_back(std::stod(s));
    }
    CsvMatrix out;
    out.values = Eigen::Map<VectorXd>(secs.data(), static_cast<Index>(secs.size()));
    return out;
  }();
  std::remove(path.c_str());
  const bool ok = code == 0 && m.values.size() == 9;
  return {ok, "absolute runtimes are hardware-bound and not reproduced; bench emitted " +
                  std::to_string(m.values.size()) + " timing rows, no threshold applied"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Instance> battery = gaussian_battery();
  const std::vector<Criterion> criteria{
      {"AC1", "FDR control (orthogonal, p=200, n=400, 200 reps)", ac1_fdr_control},
      {"AC2", "orthogonal equivalence pdsp vs pooled oracle", ac2_orthogonal_equivalence},
      {"AC3", "prox correctness", ac3_prox_correctness},
      {"AC4", "Moreau identity and dual-ball feasibility", ac4_moreau},
      {"AC5", "boundedness and ergodic-gap bounds at tau0*sigma0*L^2=0.99", ac5_theorem1},
      {"AC6", "ergodic rate and pointwise vs ergodic error", [&] { return ac6_ergodic_rate(battery); }},
      {"AC7", "cross-solver agreement and primal feasibility", [&] { return ac7_cross_solver(battery); }},
      {"AC8", "lambda pipeline", ac8_lambda_pipeline},
      {"AC9", "out of scope: absolute runtimes (relative timings only)", ac9_relative_timings},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("[%s] %s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
