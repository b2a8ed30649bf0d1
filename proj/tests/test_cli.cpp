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
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "cli.hpp"
#include "oracles.hpp"

namespace odsel {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            (std::string("odsel_") + info->test_suite_name() + "_" + info->name() + "_" +
             std::to_string(::getpid()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

struct CliRun {
  int code;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "odsel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, err.str()};
}

std::string fixture(const std::string& name) { return std::string(ODSEL_FIXTURE_DIR) + "/" + name; }

TEST(Csv, RoundTripIsExact) {
  RandomStream rng(71, 0);
  MatrixXd m = rng.normal_matrix(7, 4);
  m(0, 0) = 1e-300;
  m(1, 1) = -123456789.123456789;
  m(2, 2) = 0.1;
  std::stringstream ss;
  write_csv(ss, m, {"a", "b", "c", "d"});
  const CsvMatrix back = read_csv(ss);
  ASSERT_TRUE(back.header.has_value());
  EXPECT_EQ(back.header->at(2), "c");
  EXPECT_EQ(back.values, m);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Csv, ParsingRules) {
  std::stringstream ok("# comment\n1, 2\n\n3,4\n");
  const CsvMatrix m = read_csv(ok);
  EXPECT_FALSE(m.header.has_value());
  EXPECT_EQ(m.values.rows(), 2);
  EXPECT_EQ(m.values(1, 0), 3.0);
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_csv(ragged), InvalidArgument);
  std::stringstream word("1,2\n3,x\n");
  EXPECT_THROW(read_csv(word), InvalidArgument);
  std::stringstream inf("1,inf\n");
  EXPECT_THROW(read_csv(inf), InvalidArgument);
  std::stringstream empty("h1,h2\n");
  EXPECT_THROW(read_csv(empty), InvalidArgument);
  EXPECT_THROW(read_csv_file("/nonexistent/odsel.csv"), InvalidArgument);
}

TEST(CliLambda, Examples) {
  TempDir dir;
  ASSERT_EQ(run_cli({"lambda", "--p", "2", "--q", "0.1", "--sigma", "1", "--out-path", dir.file("a")}).code, 0);
  const VectorXd a = read_vector_file(dir.file("a"));
  ASSERT_EQ(a.size(), 2);
  EXPECT_NEAR(a[0], 1.9600, 1e-4);
  EXPECT_NEAR(a[1], 1.6449, 1e-4);
  ASSERT_EQ(run_cli({"lambda", "--p", "1", "--q", "0.5", "--sigma", "1", "--out-path", dir.file("b")}).code, 0);
  EXPECT_NEAR(read_vector_file(dir.file("b"))[0], 0.6745, 1e-4);
  ASSERT_EQ(run_cli({"lambda", "--p", "2", "--q", "0.1", "--sigma", "2", "--out-path", dir.file("c")}).code, 0);
  EXPECT_EQ(read_vector_file(dir.file("c")), 2.0 * a);
  ASSERT_EQ(run_cli({"lambda", "--p", "5", "--adjust", "gaussian", "--n", "50", "--out-path", dir.file("d")}).code, 0);
  EXPECT_EQ(read_vector_file(dir.file("d")), gaussian_adjusted_lambda(bh_lambda(5, 0.1, 1.0), 50).values());
}

TEST(CliLambda, InvalidFlags) {
  TempDir dir;
  EXPECT_EQ(run_cli({"lambda", "--p", "2", "--q", "1.5", "--out-path", dir.file("a")}).code, 2);
  EXPECT_EQ(run_cli({"lambda", "--p", "0", "--out-path", dir.file("a")}).code, 2);
  EXPECT_EQ(run_cli({"lambda", "--p", "2"}).code, 2);
  EXPECT_EQ(run_cli({"lambda", "--p", "2", "--adjust", "gaussian", "--out-path", dir.file("a")}).code, 2);
  EXPECT_EQ(run_cli({"lambda", "--p", "2", "--adjust", "other", "--out-path", dir.file("a")}).code, 2);
  const CliRun r = run_cli({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run_cli({}).code, 2);
}

TEST(CliSolve, OneDimensional) {
  TempDir dir;
  spit(dir.file("X"), "1\n");
  spit(dir.file("y"), "3\n");
  spit(dir.file("l"), "1\n");
  for (const char* algo : {"pdsp", "ladmm", "hpe"}) {
    const CliRun r = run_cli({"solve", "--x-path", dir.file("X"), "--y-path", dir.file("y"), "--lambda-path",
                           dir.file("l"), "--algo", algo, "--eps", "1e-9", "--out-path", dir.file("w"),
                           "--trace-path", dir.file("t")});
    ASSERT_EQ(r.code, 0) << algo << r.err;
    EXPECT_NEAR(read_vector_file(dir.file("w"))[0], 2.0, 1e-5) << algo;
    const std::string trace = slurp(dir.file("t"));
    EXPECT_EQ(trace.rfind("iter,rel_change_point,rel_change_ergodic,primal_obj,primal_feas,dual_obj,dual_feas,gap\n", 0), 0u);
    const CsvMatrix t = read_csv_file(dir.file("t"));
    EXPECT_EQ(t.values.cols(), 8);
    EXPECT_TRUE(t.values.allFinite());
  }
}

TEST(CliSolve, TraceMatchesSolverExactly) {
  TempDir dir;
  RandomStream rng(72, 0);
  const MatrixXd X = rng.normal_matrix(15, 6);
  const VectorXd y = rng.normal_vector(15);
  const LambdaSeq lam = bh_lambda(6, 0.1, 1.0);
  write_csv_file(dir.file("X"), X);
  write_csv_file(dir.file("y"), y);
  write_csv_file(dir.file("l"), lam.values());
  ASSERT_EQ(run_cli({"solve", "--x-path", dir.file("X"), "--y-path", dir.file("y"), "--lambda-path", dir.file("l"),
                     "--out-path", dir.file("w"), "--trace-path", dir.file("t")}).code, 0);
  const SolveResult r = pdsp_solve(ProblemData(X, y), lam, lam);
  EXPECT_EQ(read_vector_file(dir.file("w")), r.w);
  const CsvMatrix t = read_csv_file(dir.file("t"));
  ASSERT_EQ(t.values.rows(), static_cast<Index>(r.trace.size()));
  const TraceRecord& last = r.trace.back();
  const Index k = t.values.rows() - 1;
  EXPECT_EQ(t.values(k, 0), static_cast<double>(last.iter));
  EXPECT_EQ(t.values(k, 3), last.primal_obj);
  EXPECT_EQ(t.values(k, 7), last.gap);
}

TEST(CliSolve, ZeroResponse) {
  TempDir dir;
  spit(dir.file("X"), "1,0.5\n0,1\n2,1\n");
  spit(dir.file("y"), "0\n0\n0\n");
  spit(dir.file("l"), "2,1\n");
  ASSERT_EQ(run_cli({"solve", "--x-path", dir.file("X"), "--y-path", dir.file("y"), "--lambda-path", dir.file("l"),
                     "--out-path", dir.file("w"), "--trace-path", dir.file("t")}).code, 0);
  EXPECT_EQ(read_vector_file(dir.file("w")), VectorXd::Zero(2));
  const CsvMatrix t = read_csv_file(dir.file("t"));
  EXPECT_LE(t.values(t.values.rows() - 1, 0), 3.0);
}

TEST(CliSolve, OrthogonalFixture) {
  TempDir dir;
  for (const char* mode : {"standard", "doubled"}) {
    const CliRun r = run_cli({"solve", "--x-path", fixture("orth_X.csv"), "--y-path", fixture("orth_y.csv"),
                           "--lambda-path", fixture("orth_lambda.csv"), "--mode", mode, "--eps", "1e-9",
                           "--out-path", dir.file("w")});
    ASSERT_EQ(r.code, 0) << r.err;
    const VectorXd expected = read_vector_file(fixture("orth_expected.csv"));
    EXPECT_LE((read_vector_file(dir.file("w")) - expected).cwiseAbs().maxCoeff(), 1e-5) << mode;
  }
}

TEST(CliSolve, ExitCodes) {
  TempDir dir;
  const std::vector<std::string> base{"--x-path", fixture("orth_X.csv"), "--y-path", fixture("orth_y.csv"),
                                      "--lambda-path", fixture("orth_lambda.csv"), "--out-path", dir.file("w")};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"solve"};
    args.insert(args.end(), base.begin(), base.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };
  EXPECT_EQ(with({"--max-iters", "2"}).code, 3);
  EXPECT_EQ(read_vector_file(dir.file("w")).size(), 8);  // still written
  EXPECT_EQ(with({"--algo", "simplex"}).code, 2);
  EXPECT_EQ(with({"--mode", "tripled"}).code, 2);
  EXPECT_EQ(with({"--eps", "-1"}).code, 2);
  spit(dir.file("short"), "1\n2\n");
  EXPECT_EQ(run_cli({"solve", "--x-path", fixture("orth_X.csv"), "--y-path", dir.file("short"), "--lambda-path",
                     fixture("orth_lambda.csv"), "--out-path", dir.file("w")}).code, 2);
  spit(dir.file("bad"), "1\nfoo\n");
  EXPECT_EQ(run_cli({"solve", "--x-path", fixture("orth_X.csv"), "--y-path", dir.file("bad"), "--lambda-path",
                     fixture("orth_lambda.csv"), "--out-path", dir.file("w")}).code, 2);
  spit(dir.file("incr"), "1\n2\n3\n4\n5\n6\n7\n8\n");
  EXPECT_EQ(run_cli({"solve", "--x-path", fixture("orth_X.csv"), "--y-path", fixture("orth_y.csv"),
                     "--lambda-path", dir.file("incr"), "--out-path", dir.file("w")}).code, 2);
}

std::vector<std::string> sim_args(const TempDir& dir, const std::string& out, std::vector<std::string> extra) {
  std::vector<std::pair<std::string, std::string>> flags{
      {"--n", "60"}, {"--p", "30"}, {"--s", "3"}, {"--reps", "4"}, {"--seed", "11"}, {"--out-path", dir.file(out)}};
  for (std::size_t i = 0; i + 1 < extra.size(); i += 2) {
    auto it = std::find_if(flags.begin(), flags.end(), [&](const auto& f) { return f.first == extra[i]; });
    if (it != flags.end()) it->second = extra[i + 1];
    else flags.emplace_back(extra[i], extra[i + 1]);
  }
  std::vector<std::string> args{"simulate"};
  for (const auto& [k, v] : flags) {
    args.push_back(k);
    args.push_back(v);
  }
  return args;
}

TEST(CliSimulate, FormatAndDeterminism) {
  TempDir dir;
  ASSERT_EQ(run_cli(sim_args(dir, "a", {})).code, 0);
  ASSERT_EQ(run_cli(sim_args(dir, "b", {})).code, 0);
  ASSERT_EQ(run_cli(sim_args(dir, "c", {"--threads", "3"})).code, 0);
  const std::string a = slurp(dir.file("a"));
  EXPECT_EQ(a, slurp(dir.file("b")));
  EXPECT_EQ(a, slurp(dir.file("c")));
  EXPECT_EQ(a.rfind("rep,V,R,fdp,power,iters,status\n", 0), 0u);
  const auto summary = a.find("# mean_fdr=");
  ASSERT_NE(summary, std::string::npos);
  EXPECT_NE(a.find(",se_fdr=", summary), std::string::npos);
  EXPECT_NE(a.find(",mean_power=", summary), std::string::npos);
  EXPECT_NE(a.find(",se_power=", summary), std::string::npos);
  std::istringstream lines(a);
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  while (std::getline(lines, line) && line[0] != '#') {
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",", 0), 0u);
    ++rows;
  }
  EXPECT_EQ(rows, 4);

  ASSERT_EQ(run_cli(sim_args(dir, "d", {"--reps", "1"})).code, 0);
  ASSERT_EQ(run_cli(sim_args(dir, "e", {"--reps", "1"})).code, 0);
  EXPECT_EQ(slurp(dir.file("d")), slurp(dir.file("e")));
}

TEST(CliSimulate, GlobalNullPower) {
  TempDir dir;
  ASSERT_EQ(run_cli(sim_args(dir, "a", {"--s", "0", "--algo", "ladmm"})).code, 0);
  std::istringstream lines(slurp(dir.file("a")));
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line) && line[0] != '#') {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 7u);
    EXPECT_EQ(cols[4], "0");
  }
  EXPECT_NE(slurp(dir.file("a")).find("mean_power=0,"), std::string::npos);
}

TEST(CliSimulate, InvalidFlags) {
  TempDir dir;
  EXPECT_EQ(run_cli(sim_args(dir, "a", {"--design", "banded"})).code, 2);
  EXPECT_EQ(run_cli(sim_args(dir, "a", {"--s", "31"})).code, 2);
  EXPECT_EQ(run_cli(sim_args(dir, "a", {"--n", "10"})).code, 2);  // orthogonal needs n >= p
  EXPECT_EQ(run_cli(sim_args(dir, "a", {"--algo", "simplex"})).code, 2);
}

TEST(CliBench, RowsAndAgreement) {
  TempDir dir;
  ASSERT_EQ(run_cli({"bench", "--algos", "pdsp", "--repeats", "1", "--n", "40", "--p", "20", "--s", "2",
                     "--out-path", dir.file("a")}).code, 0);
  const std::string one = slurp(dir.file("a"));
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 2);
  EXPECT_EQ(one.rfind("algo,rep,seconds,iters,status,final_obj\n", 0), 0u);

  ASSERT_EQ(run_cli({"bench", "--algos", "pdsp,hpe,ladmm", "--repeats", "3", "--n", "200", "--p", "40", "--s", "3",
                     "--design", "gaussian", "--eps", "1e-9", "--out-path", dir.file("b")}).code, 0);
  std::istringstream lines(slurp(dir.file("b")));
  std::string line;
  std::getline(lines, line);
  std::vector<double> objs;
  std::vector<std::string> status;
  while (std::getline(lines, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 6u);
    objs.push_back(std::stod(cols[5]));
    status.push_back(cols[4]);
  }
  ASSERT_EQ(objs.size(), 9u);
  for (std::size_t rep = 0; rep < 3; ++rep) {
    for (std::size_t j = 1; j < 3; ++j) {
      if (status[rep * 3].rfind("converged", 0) != 0 || status[rep * 3 + j].rfind("converged", 0) != 0) continue;
      EXPECT_LE(std::abs(objs[rep * 3 + j] - objs[rep * 3]), 1e-4 * std::max(1.0, std::abs(objs[rep * 3])));
    }
  }
}

TEST(CliBench, UnknownAlgo) {
  TempDir dir;
  EXPECT_EQ(run_cli({"bench", "--algos", "pdsp,simplex", "--out-path", dir.file("a")}).code, 2);
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(ODSEL_TOOL_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliBinary, ExitCodeContract) {
  TempDir dir;
  EXPECT_EQ(run_binary("lambda --p 3 --out-path " + dir.file("l")), 0);
  EXPECT_EQ(read_vector_file(dir.file("l")).size(), 3);
  EXPECT_EQ(run_binary(""), 2);
  EXPECT_EQ(run_binary("--help"), 0);
  EXPECT_EQ(run_binary("solve --x-path " + fixture("orth_X.csv") + " --y-path " + fixture("orth_y.csv") +
                       " --lambda-path " + fixture("orth_lambda.csv") + " --max-iters 1 --out-path " + dir.file("w")),
            3);
}

}  // namespace
}  // namespace odsel
