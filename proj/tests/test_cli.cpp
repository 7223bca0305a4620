// End-to-end checks of the command-line tool: spawns the built binary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string out_path = std::string(BRCAT_TMP_DIR) + "/cli_out.txt";
  const std::string cmd =
      std::string(BRCAT_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string wine_args() {
  return std::string("--data ") + BRCAT_DATA_DIR +
         "/wine.csv --covariates temp,contact --counts rating1,rating2,rating3,rating4,rating5";
}

std::string merged_args() {
  return std::string("--data ") + BRCAT_DATA_DIR +
         "/wine_merged.csv --covariates temp,contact --counts rating1,rating24,rating5";
}

}  // namespace

TEST_CASE("fit prints the coefficient table and writes a json sidecar") {
  const std::string jpath = std::string(BRCAT_TMP_DIR) + "/fit.json";
  RunResult r = run("fit --family acl-npo --method mbr " + wine_args() + " --json " + jpath);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("alpha_1") != std::string::npos);
  CHECK(r.out.find("-0.76") != std::string::npos);

  std::ifstream in(jpath);
  json j = json::parse(in);
  CHECK(j["method"] == "mbr");
  CHECK(j["converged"] == true);
  REQUIRE(j["parameters"].size() == 12);
  CHECK(std::fabs(j["parameters"][0]["estimate"].get<double>() + 0.7643) < 1e-3);

  // the sidecar round-trips bit-exactly
  json j2 = json::parse(j.dump());
  CHECK(j2 == j);
  for (size_t t = 0; t < j["parameters"].size(); ++t) {
    const double e1 = j["parameters"][t]["estimate"].get<double>();
    const double e2 = j2["parameters"][t]["estimate"].get<double>();
    CHECK(std::memcmp(&e1, &e2, sizeof e1) == 0);
  }
}

TEST_CASE("fit annotates divergent ML estimates and still exits 0") {
  RunResult r = run("fit --family acl-npo --method ml " + wine_args());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("log-likelihood: -15.29") != std::string::npos);
  CHECK(r.out.find("diverges to +inf") != std::string::npos);
  CHECK(r.out.find("diverges to -inf") != std::string::npos);
}

TEST_CASE("data errors exit with code 2 and name the row") {
  const std::string bad = std::string(BRCAT_TMP_DIR) + "/bad.csv";
  {
    std::ofstream out(bad);
    out << "temp,a,b\n0,3,2\n1,-1,2\n";
  }
  RunResult r = run("fit --family logit --covariates temp --counts a,b --data " + bad);
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("row 3") != std::string::npos);
}

TEST_CASE("numerical failure exits with code 3") {
  RunResult r = run("fit --family acl-npo --method ml --max-iter 3 " + wine_args());
  CHECK(r.exit_code == 3);
}

TEST_CASE("wald reports the statistic and the reference quantile") {
  RunResult r = run("wald --family acl-npo --method mbr --contrast parallel " + wine_args());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("W = 1.067") != std::string::npos);
  CHECK(r.out.find("df = 6") != std::string::npos);
  CHECK(r.out.find("12.592") != std::string::npos);

  // dimension mismatch is an input error
  const std::string cfile = std::string(BRCAT_TMP_DIR) + "/contrast.txt";
  {
    std::ofstream out(cfile);
    out << "1 0 0\n";
  }
  RunResult r2 = run("wald --family acl-npo --method mbr --contrast " + cfile + " " + wine_args());
  CHECK(r2.exit_code == 2);

  // zero rows are rejected
  const std::string zfile = std::string(BRCAT_TMP_DIR) + "/zero.txt";
  {
    std::ofstream out(zfile);
    out << "0 0 0 0 0 0 0 0 0 0 0 0\n";
  }
  RunResult r3 = run("wald --family acl-npo --method mbr --contrast " + zfile + " " + wine_args());
  CHECK(r3.exit_code == 2);
}

TEST_CASE("poisson engine reproduces the scoring mean-BR fit") {
  const std::string ja = std::string(BRCAT_TMP_DIR) + "/scoring.json";
  const std::string jb = std::string(BRCAT_TMP_DIR) + "/poisson.json";
  RunResult a = run("fit --family acl-npo --method mbr " + wine_args() + " --json " + ja);
  RunResult b = run("fit --family acl-npo --method mbr --engine poisson " + wine_args() +
                    " --json " + jb);
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  std::ifstream ia(ja), ib(jb);
  json pa = json::parse(ia), pb = json::parse(ib);
  for (size_t t = 0; t < pa["parameters"].size(); ++t)
    CHECK(std::fabs(pa["parameters"][t]["estimate"].get<double>() -
                    pb["parameters"][t]["estimate"].get<double>()) < 1e-6);

  // the poisson engine is a mean-BR device only
  RunResult c = run("fit --family acl-npo --method ml --engine poisson " + wine_args());
  CHECK(c.exit_code == 2);
}

TEST_CASE("long-format input with --label") {
  const std::string path = std::string(BRCAT_TMP_DIR) + "/long.csv";
  {
    std::ofstream out(path);
    out << "temp,rating\n";
    for (int i = 0; i < 5; ++i) out << "0,low\n";
    for (int i = 0; i < 3; ++i) out << "0,high\n";
    for (int i = 0; i < 2; ++i) out << "1,low\n";
    for (int i = 0; i < 6; ++i) out << "1,high\n";
  }
  RunResult r = run("fit --family logit --method mbr --covariates temp --label rating "
                    "--categories low,high --data " +
                    path);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("alpha_1") != std::string::npos);
  CHECK(r.out.find("temp") != std::string::npos);
}

TEST_CASE("wald json sidecar round-trips") {
  const std::string jpath = std::string(BRCAT_TMP_DIR) + "/wald.json";
  RunResult r = run("wald --family acl-npo --method mbr --contrast parallel " + wine_args() +
                    " --json " + jpath);
  CHECK(r.exit_code == 0);
  std::ifstream in(jpath);
  json j = json::parse(in);
  CHECK(std::fabs(j["W"].get<double>() - 1.067) < 0.01);
  CHECK(j["df"] == 6);
  CHECK(json::parse(j.dump()) == j);
}

TEST_CASE("superiority measures from the command line") {
  RunResult r = run("superiority --family acl-po --method mbr --group contact --at temp=1 "
                    "--corrected " +
                    merged_args());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("gamma*") != std::string::npos);
  CHECK(r.out.find("0.594") != std::string::npos);

  RunResult r0 = run("superiority --family acl-po --method mbr --group contact --at temp=0 "
                     "--corrected " +
                     merged_args());
  CHECK(r0.exit_code == 0);
  CHECK(r0.out.find("0.57") != std::string::npos);

  // non-binary group column
  const std::string bad = std::string(BRCAT_TMP_DIR) + "/nb.csv";
  {
    std::ofstream out(bad);
    out << "g,a,b\n0,3,2\n0.5,1,2\n1,2,2\n";
  }
  RunResult r2 =
      run("superiority --family logit --method mbr --group g --covariates g --counts a,b --data " +
          bad);
  CHECK(r2.exit_code == 2);
}

TEST_CASE("detect prints the taxonomy and the diverging components") {
  RunResult r = run("detect --family acl-npo " + wine_args());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("quasi-complete") != std::string::npos);
  CHECK(r.out.find("alpha_4 -> +inf") != std::string::npos);
  CHECK(r.out.find("temp:1 -> -inf") != std::string::npos);
  CHECK(r.out.find("temp:4 -> -inf") != std::string::npos);
}

TEST_CASE("logits prints the haldane table") {
  RunResult r = run("logits " + wine_args());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("-0.7472") != std::string::npos);
}

TEST_CASE("simulate runs a one-replication study deterministically") {
  const std::string cfg = std::string(BRCAT_TMP_DIR) + "/study.json";
  {
    std::ofstream out(cfg);
    out << R"({"replications": 1, "seed": 5, "true_theta": [-1.247, 5.331, -3.291, -1.181],
               "methods": ["mbr"], "group_index": 1,
               "gamma_targets": [{"at": [0.0, 0.0]}]})";
  }
  RunResult a = run("simulate --family acl-po --config " + cfg + " " + merged_args());
  RunResult b = run("simulate --family acl-po --config " + cfg + " " + merged_args());
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  json j = json::parse(a.out);
  CHECK(j["replications"] == 1);
  CHECK(j["methods"][0]["method"] == "mbr");
}
