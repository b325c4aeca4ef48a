#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rcb/cli.hpp"

using namespace rcb;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rcb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  return rows;
}

std::string temp_path(const std::string& name) { return "rcb_test_" + name; }

}  // namespace

TEST_CASE("scale-fn table") {
  const Result r = run_cli({"scale-fn", "--alpha", "0.5", "--b", "0", "--c", "1", "--t-max", "1", "--n-steps", "4"});
  CHECK(r.code == 0);
  const auto rows = data_rows(r.out);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "t,W,Wp,K,LK");
  const std::string last = rows.back();
  CHECK(std::stod(last.substr(last.find(',') + 1)) == doctest::Approx(1.1283792).epsilon(1e-7));
  CHECK(r.out.find("# command=scale-fn") != std::string::npos);
}

TEST_CASE("usage and validation errors") {
  const Result unknown = run_cli({"scale-fn", "--bogus", "1"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"scale-fn", "--alpha", "1.2"}).code == 1);
  CHECK(run_cli({"scale-fn", "--alpha", "abc"}).code == 1);
  CHECK(run_cli({"simulate-cmj", "--n", "1", "--beta", "2", "--paths", "1"}).code == 1);
  CHECK(run_cli({"scale-fn", "--help"}).code == 0);
}

TEST_CASE("forced verification failure") {
  const Result r = run_cli({"verify-cf", "--paths", "50", "--n-steps", "32", "--oracle-steps", "64", "--n-se", "0",
                            "--allowance", "0"});
  CHECK(r.code == 3);
  CHECK(r.out.find("\"pass\": false") != std::string::npos);
}

TEST_CASE("config precedence and replay") {
  const std::string cfg = temp_path("cfg.txt");
  {
    std::ofstream f(cfg);
    f << "# a comment\nalpha = 0.7\nn_steps=8\n";
  }
  const Result r = run_cli({"scale-fn", "--config", cfg, "--n-steps", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# alpha=0.7\n") != std::string::npos);
  CHECK(r.out.find("# n_steps=4\n") != std::string::npos);
  CHECK(data_rows(r.out).size() == 6);

  const std::string first = temp_path("first.csv");
  {
    std::ofstream f(first);
    f << r.out;
  }
  CHECK(run_cli({"scale-fn", "--config", first}).out == r.out);
  CHECK(run_cli({"solve-volterra", "--config", first}).code == 1);

  {
    std::ofstream f(cfg);
    f << "colour=blue\n";
  }
  CHECK(run_cli({"scale-fn", "--config", cfg}).code == 1);
  std::remove(cfg.c_str());
  std::remove(first.c_str());
}

TEST_CASE("seed falls back to the environment") {
  ::setenv("RCB_SEED", "123", 1);
  const Result a = run_cli({"simulate-cmj", "--paths", "3", "--n-steps", "4"});
  ::unsetenv("RCB_SEED");
  CHECK(a.out.find("# seed=123\n") != std::string::npos);
  CHECK(run_cli({"simulate-cmj", "--paths", "3", "--n-steps", "4", "--seed", "123"}).out == a.out);
  CHECK(run_cli({"simulate-cmj", "--paths", "3", "--n-steps", "4"}).out.find("# seed=0\n") != std::string::npos);
}

TEST_CASE("outputs do not depend on the thread count") {
  for (const std::string cmd : {"simulate-cmj", "simulate-cp"}) {
    for (const std::string format : {"csv", "json"}) {
      const Result one = run_cli({cmd, "--paths", "40", "--seed", "9", "--format", format, "--threads", "1"});
      const Result four = run_cli({cmd, "--paths", "40", "--seed", "9", "--format", format, "--threads", "4"});
      CHECK(one.code == 0);
      CHECK(one.out == four.out);
    }
  }
  const Result j = run_cli({"simulate-cp", "--paths", "40", "--format", "json"});
  const std::string path = temp_path("cp.json");
  {
    std::ofstream f(path);
    f << j.out;
  }
  CHECK(run_cli({"simulate-cp", "--config", path, "--threads", "3"}).out == j.out);
  std::remove(path.c_str());
}

TEST_CASE("metadata block reads back as a config") {
  const std::string path = temp_path("meta.csv");
  {
    std::ofstream f(path);
    f << "# version=0.3.0\n# command=scale-fn\n# alpha=0.6\nt,W\n0,0\n# {\"x\":1}\n";
  }
  const auto cfg = cli::read_config(path);
  CHECK(cfg.at("alpha") == "0.6");
  CHECK(cfg.at("command") == "scale-fn");
  CHECK(cfg.size() == 3);
  std::remove(path.c_str());
}
