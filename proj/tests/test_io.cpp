#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "anomfp/cli.hpp"

using namespace anomfp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anomfp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "anomfp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(Config, FileValuesOverlayDefaults) {
  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "run.json") << R"({"model": {"d": 3, "beta": 4.5}, "sweep": {"n_points": 6}})";
  const RunConfig c = load_config(dir / "run.json");
  EXPECT_EQ(c.model.d, 3);
  EXPECT_DOUBLE_EQ(c.model.beta, 4.5);
  EXPECT_EQ(c.sweep.n_points, 6);
  EXPECT_DOUBLE_EQ(c.sweep.eta_max, 1e-1);
  const RunConfig r = c.resolved();
  EXPECT_GT(r.grid.n_r, 0);
  EXPECT_DOUBLE_EQ(r.grid.r_max, r.grid.v1_max);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  RunConfig c;
  EXPECT_THROW(merge_config(c, json::parse(R"({"modle": {}})")), ParameterError);
  EXPECT_THROW(merge_config(c, json::parse(R"({"grid": {"nv1": 3}})")), ParameterError);
  EXPECT_THROW(merge_config(c, json::parse(R"({"model": {"d": "one"}})")), ParameterError);
  EXPECT_THROW(load_config("/nonexistent/anomfp.json"), ParameterError);
}

TEST(Config, ValidationEnforcesInvariants) {
  RunConfig c;
  EXPECT_NO_THROW(validate_config(c));
  c.model.beta = 2.0;
  EXPECT_THROW(validate_config(c), ExcludedCaseError);
  c = RunConfig{};
  c.tolerances.solver = 0.0;
  EXPECT_THROW(validate_config(c), ParameterError);
  c = RunConfig{};
  c.sweep.spacing = "linear";
  EXPECT_THROW(validate_config(c), ParameterError);
  c = RunConfig{};
  c.output.formats = {"xml"};
  EXPECT_THROW(validate_config(c), ParameterError);
}

TEST(Config, HashTracksComputationNotOutput) {
  RunConfig a, b;
  b.output.directory = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.model.beta = 4.0;
  EXPECT_NE(config_hash(a), config_hash(b));
  RunConfig c;
  c.grid.n_v1 = 4000;  // same as the resolved default
  EXPECT_EQ(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Csv, FullPrecisionWithHashHeader) {
  CsvTable t({"x", "y"});
  t.add({0.1, -1.0 / 3.0});
  EXPECT_THROW(t.add({1.0}), ParameterError);
  const std::string s = t.render("abc");
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# config_hash=abc");
  std::getline(in, line);
  EXPECT_EQ(line, "x,y");
  std::getline(in, line);
  const auto comma = line.find(',');
  EXPECT_EQ(std::stod(line.substr(0, comma)), 0.1);
  EXPECT_EQ(std::stod(line.substr(comma + 1)), -1.0 / 3.0);
  EXPECT_EQ(s.find('\r'), std::string::npos);
}

TEST(Output, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = scratch("atomic");
  write_atomic(dir / "sub" / "a.txt", "first");
  write_atomic(dir / "sub" / "a.txt", "second");
  EXPECT_EQ(slurp(dir / "sub" / "a.txt"), "second");
  EXPECT_FALSE(fs::exists(dir / "sub" / "a.txt.tmp"));
}

TEST(Cli, EtaZeroReturnsEquilibrium) {
  const fs::path dir = scratch("eta0");
  EXPECT_EQ(run_cli({"--n-v1", "400", "--v1-max", "40", "--out", dir.string(), "eigen", "--eta", "0"}), 0);
  const json j = json::parse(slurp(dir / "eigen.json"));
  EXPECT_EQ(j["re_mu"].get<double>(), 0.0);
  const json m = json::parse(slurp(dir / "manifest-eigen.json"));
  EXPECT_EQ(m["config_hash"], j["config_hash"]);
  EXPECT_EQ(m["library_version"], ANOMFP_VERSION);
  EXPECT_EQ(m["status"], "ok");
}

TEST(Cli, EigenPositiveRealPartAndReproducibleCsv) {
  const fs::path a = scratch("eig_a"), b = scratch("eig_b");
  const std::vector<std::string> common{"--n-v1", "801", "--v1-max", "40", "eigen", "--eta", "0.05"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.begin(), {"--out", a.string()});
  args_b.insert(args_b.begin(), {"--out", b.string()});
  ASSERT_EQ(run_cli(args_a), 0);
  ASSERT_EQ(run_cli(args_b), 0);
  EXPECT_GT(json::parse(slurp(a / "eigen.json"))["re_mu"].get<double>(), 0.0);
  EXPECT_EQ(slurp(a / "eigenfunction.csv"), slurp(b / "eigenfunction.csv"));
  EXPECT_EQ(slurp(a / "eigenfunction.csv").rfind("# config_hash=", 0), 0u);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("codes");
  std::string err;
  EXPECT_EQ(run_cli({"--d", "1", "--beta", "2.0", "--out", dir.string(), "eigen"}, nullptr, &err), 3);
  EXPECT_NE(err.find("excluded"), std::string::npos);
  EXPECT_EQ(run_cli({"--out", dir.string(), "eigen", "--d", "1", "--beta", "2.0"}), 3);
  EXPECT_EQ(run_cli({"--beta", "9", "eigen"}), 3);
  EXPECT_EQ(run_cli({"eigen", "--bogus"}), 3);
  EXPECT_EQ(run_cli({}), 3);
  // grid too narrow for eta^{-1/3}
  EXPECT_EQ(run_cli({"--n-v1", "64", "--v1-max", "10", "--out", dir.string(), "eigen", "--eta", "1e-3"}), 3);
  EXPECT_EQ(run_cli({"--help"}), 0);
}

TEST(Cli, ConfigFromEnvironmentAndFlagsWin) {
  const fs::path dir = scratch("env");
  std::ofstream(dir / "c.json") << R"({"model": {"beta": 2.0}, "grid": {"n_v1": 400, "v1_max": 40.0}})";
  ::setenv("ANOMFP_CONFIG", (dir / "c.json").c_str(), 1);
  EXPECT_EQ(run_cli({"--out", dir.string(), "eigen", "--eta", "0"}), 3);
  EXPECT_EQ(run_cli({"--beta", "2.5", "--out", dir.string(), "eigen", "--eta", "0"}), 0);
  ::unsetenv("ANOMFP_CONFIG");
  const json m = json::parse(slurp(dir / "manifest-eigen.json"));
  EXPECT_EQ(m["config"]["grid"]["n_v1"], 400);
}

TEST(Cli, ValidateWritesReports) {
  const fs::path dir = scratch("validate");
  EXPECT_EQ(run_cli({"--out", dir.string(), "validate", "--trials", "20"}), 0);
  const json j = json::parse(slurp(dir / "validation.json"));
  EXPECT_TRUE(j["all_pass"].get<bool>());
  EXPECT_EQ(j["reports"].size(), 3u);
}
