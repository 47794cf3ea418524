#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "workbench/cli.hpp"
#include "workbench/experiment.hpp"

using namespace workbench;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("wbcli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// Small, fast run of a canned config.
std::vector<std::string> quick(const std::string& name, const fs::path& out, const std::string& jobs = "1") {
  return {"run", name, "--set", "replicates=2", "--set", "dgp.n=200", "--set", "dgp.n_test=500",
          "--jobs", jobs, "--out", out.string()};
}

}  // namespace

TEST(Catalog, ListsEveryDesign) {
  const auto& c = cli::catalog();
  EXPECT_EQ(c.size(), 19u);
  int cate = 0, cov = 0;
  for (const auto& e : c) {
    cate += e.name.rfind("cate-", 0) == 0;
    cov += e.name.rfind("covshift-", 0) == 0;
  }
  EXPECT_EQ(cate, 6);
  EXPECT_EQ(cov, 5);
  const auto r = invoke({"list"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("cate-F"), std::string::npos);
  EXPECT_NE(r.out.find("covshift-v"), std::string::npos);
}

TEST(Catalog, EveryCannedConfigValidates) {
  for (const auto& e : cli::catalog()) {
    const auto c = ExperimentConfig::from_json(e.json);
    EXPECT_EQ(c.name, e.name);
    EXPECT_NO_THROW(c.validate()) << e.name;
    EXPECT_FALSE(c.notes.empty()) << e.name;
    EXPECT_EQ(invoke({"validate", e.name}).code, 0) << e.name;
  }
}

TEST(Cli, MissingSeedExitsOneNamingField) {
  TempDir tmp;
  auto j = nlohmann::json::parse(*cli::canned_config("noise-M1"));
  j.erase("seed");
  std::ofstream(tmp / "c.json") << j.dump();
  const auto r = invoke({"run", (tmp / "c.json").string(), "--out", (tmp / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("seed"), std::string::npos);
  EXPECT_FALSE(fs::exists(tmp / "o"));
}

TEST(Cli, ValidationFailures) {
  EXPECT_EQ(invoke({"validate", "no-such-config"}).code, 1);
  const auto tab = invoke({"validate", "semisup-linear", "--set", "estimators.1.base=tabpfn"});
  EXPECT_EQ(tab.code, 1);
  EXPECT_NE(tab.err.find("estimators[1].base"), std::string::npos);
  EXPECT_NE(tab.err.find("endpoint"), std::string::npos);
  EXPECT_EQ(invoke({"validate", "cate-A", "--set", "replicates=0"}).code, 1);
  EXPECT_EQ(invoke({"run"}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"run", "cate-A", "--jobs", "0"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, ShowPrintsNormalizedConfig) {
  const auto r = invoke({"show", "cate-B", "--set", "dgp.n=321"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["dgp"]["n"], 321);
  EXPECT_EQ(j["estimators"][0]["base"]["params"]["folds"], 5.0);
}

TEST(Cli, RunIsByteIdenticalAndJobsInvariant) {
  TempDir tmp;
  ASSERT_EQ(invoke(quick("cate-C", tmp / "a")).code, 0);
  ASSERT_EQ(invoke(quick("cate-C", tmp / "b")).code, 0);
  ASSERT_EQ(invoke(quick("cate-C", tmp / "c", "4")).code, 0);
  const std::string a = slurp(tmp / "a" / "records.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(tmp / "b" / "records.csv"));
  EXPECT_EQ(a, slurp(tmp / "c" / "records.csv"));
  EXPECT_EQ(slurp(tmp / "a" / "aggregate.csv"), slurp(tmp / "c" / "aggregate.csv"));
  for (const char* f : {"records.jsonl", "aggregate.csv", "thetas.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(tmp / "a" / f)) << f;
}

TEST(Cli, ReplicateOverrideControlsIds) {
  TempDir tmp;
  ASSERT_EQ(invoke(quick("noise-M2", tmp / "o")).code, 0);
  std::istringstream in(slurp(tmp / "o" / "records.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "experiment,replicate,estimator,metric,value");
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    ids.insert(line.substr(a + 1, line.find(',', a + 1) - a - 1));
  }
  EXPECT_EQ(ids, (std::set<std::string>{"0", "1"}));
}

TEST(Cli, ManifestCarriesHashSeedAndVersions) {
  TempDir tmp;
  ASSERT_EQ(invoke(quick("noise-M1", tmp / "a")).code, 0);
  auto args = quick("noise-M1", tmp / "b");
  args.insert(args.end(), {"--set", "notes=changed"});
  ASSERT_EQ(invoke(args).code, 0);
  args = quick("noise-M1", tmp / "c");
  args.insert(args.end(), {"--set", "dgp.rho=0.2"});
  ASSERT_EQ(invoke(args).code, 0);
  const auto a = nlohmann::json::parse(slurp(tmp / "a" / "manifest.json"));
  const auto b = nlohmann::json::parse(slurp(tmp / "b" / "manifest.json"));
  const auto c = nlohmann::json::parse(slurp(tmp / "c" / "manifest.json"));
  EXPECT_EQ(a["status"], "ok");
  EXPECT_EQ(a["seed"], 20240401u);
  EXPECT_EQ(a["versions"]["workbench"], version());
  EXPECT_EQ(a["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(a["config_hash"], b["config_hash"]);
  EXPECT_NE(a["config_hash"], c["config_hash"]);
  EXPECT_TRUE(a["errors"].empty());
}

TEST(Cli, PartialFailureKeepsRecords) {
  TempDir tmp;
  auto args = quick("semisup-linear", tmp / "o");
  args.insert(args.end(), {"--set", "estimators.3.base={\"type\":\"tabpfn\",\"endpoint\":\"http://127.0.0.1:1\"}",
                           "--set", "dgp.n_mc=20000"});
  // dgp.n_test is not a semisup key; drop it from the quick overrides.
  args.erase(args.begin() + 6, args.begin() + 8);
  const auto r = invoke(args);
  EXPECT_EQ(r.code, 2) << r.err;
  const auto m = nlohmann::json::parse(slurp(tmp / "o" / "manifest.json"));
  EXPECT_EQ(m["status"], "partial");
  EXPECT_FALSE(m["errors"].empty());
  EXPECT_EQ(m["errors"][0]["estimator"], "ppi-gbrt");
  const std::string csv = slurp(tmp / "o" / "records.csv");
  EXPECT_NE(csv.find("vanilla"), std::string::npos);
  EXPECT_EQ(csv.find("ppi-gbrt"), std::string::npos);
}

TEST(Cli, EnvironmentSuppliesDefaultEndpoint) {
  ::setenv("WORKBENCH_REMOTE_ENDPOINT", "http://127.0.0.1:8123", 1);
  const auto r = invoke({"show", "semisup-linear", "--set", "estimators.1.base=tabpfn"});
  ::unsetenv("WORKBENCH_REMOTE_ENDPOINT");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["estimators"][1]["base"]["endpoint"], "http://127.0.0.1:8123");
}
