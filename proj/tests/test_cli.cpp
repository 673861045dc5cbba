#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mgpx/io.hpp"
#include "mgpx/mgp.hpp"
#include "mgpx/parametric.hpp"
#include "mgpx/stats.hpp"

#ifndef MGPX_CLI_PATH
#error "MGPX_CLI_PATH must name the mgpx executable"
#endif

using namespace mgpx;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(MGPX_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mgpx_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path dir_;
};

const char* kHr = R"({"dimension":2,"generator":{"type":"husler_reiss","params":{"mu":[0,0],"Sigma":[[1,0.5],[0.5,1]]}}})";
const char* kLogistic = R"({"dimension":2,"generator":{"type":"logistic","params":{"alpha":2}}})";
const char* kCd = R"({"dimension":2,"generator":{"type":"complete_dep"}})";
const char* kAi = R"({"dimension":2,"generator":{"type":"asy_indep"}})";

io::Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  return io::read_csv(in);
}

}  // namespace

TEST_F(Cli, SimulateCompleteDependenceIsReproducible) {
  const auto spec = write("cd.json", kCd);
  const CliResult a = run("simulate --spec " + spec + " --n 3 --seed 7");
  ASSERT_EQ(a.code, 0);
  const io::Table t = parse_csv(a.out);
  EXPECT_EQ(t.header, (std::vector<std::string>{"y1", "y2"}));
  ASSERT_EQ(t.values.rows, 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(t.values(i, 0), t.values(i, 1));
  EXPECT_EQ(run("simulate --spec " + spec + " --n 3 --seed 7").out, a.out);
  EXPECT_NE(run("simulate --spec " + spec + " --n 3 --seed 8").out, a.out);
}

TEST_F(Cli, SimulateRowMaximumIsExponential) {
  const auto spec = write("lg.json", kLogistic);
  const CliResult r = run("simulate --spec " + spec + " --n 100000 --seed 3");
  ASSERT_EQ(r.code, 0);
  const io::Table t = parse_csv(r.out);
  std::vector<double> m(t.values.rows);
  for (std::size_t i = 0; i < t.values.rows; ++i) m[i] = XVec::max_of(t.values.row(i));
  const double ks = stats::ks_statistic(m, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); });
  EXPECT_LT(ks, 1.5 * 1.36 / std::sqrt(100000.0));
}

TEST_F(Cli, SimulateHandlesMinusInfinityAndJson) {
  const auto spec = write("ai.json", kAi);
  const CliResult r = run("simulate --spec " + spec + " --n 50 --seed 1");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("-inf"), std::string::npos);
  const CliResult j = run("simulate --spec " + spec + " --n 5 --seed 1 --format json");
  ASSERT_EQ(j.code, 0);
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_EQ(doc["rows"].size(), 5u);
}

TEST_F(Cli, SimulateWritesToFileAndThreadCountIsIrrelevant) {
  const auto spec = write("hr.json", kHr);
  const std::string out = (dir_ / "rows.csv").string();
  ASSERT_EQ(run("simulate --spec " + spec + " --n 5000 --seed 4 --out " + out).code, 0);
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(run("simulate --spec " + spec + " --n 5000 --seed 4", "MGPX_THREADS=1").out, ss.str());
  EXPECT_EQ(run("simulate --spec " + spec + " --n 5000 --seed 4", "MGPX_THREADS=3").out, ss.str());
  const io::Table t = parse_csv(ss.str());
  for (std::size_t i = 0; i < t.values.rows; ++i) EXPECT_GT(XVec::max_of(t.values.row(i)), 0.0);
}

TEST_F(Cli, EvalStdfAtUnitVectors) {
  const auto spec = write("lg.json", kLogistic);
  const auto pts = write("p.csv", "y1,y2\n1,0\n0,1\n1,1\n");
  const CliResult r = run("eval --spec " + spec + " --what stdf --points " + pts);
  ASSERT_EQ(r.code, 0);
  const auto lines = r.out;
  EXPECT_EQ(lines.substr(0, lines.find('\n')), "y1,y2,value,std_error,provenance");
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  std::vector<double> vals;
  while (std::getline(in, line)) {
    std::vector<std::string> f = io::split_csv_line(line);
    ASSERT_EQ(f.size(), 5u);
    vals.push_back(io::parse_double(f[2]));
    EXPECT_EQ(f[4], "closed-form");
  }
  ASSERT_EQ(vals.size(), 3u);
  EXPECT_DOUBLE_EQ(vals[0], 1.0);
  EXPECT_DOUBLE_EQ(vals[1], 1.0);
  EXPECT_NEAR(vals[2], std::sqrt(2.0), 1e-15);
}

TEST_F(Cli, EvalDensityMatchesLibraryBitForBit) {
  const auto spec = write("hr.json", kHr);
  const auto pts = write("p.csv", "y1,y2\n0.5,-0.2\n1.5,2\n-1,-1\n-0.3,0.25\n");
  const CliResult r = run("eval --spec " + spec + " --what density --points " + pts + " --format json");
  ASSERT_EQ(r.code, 0);
  const auto doc = nlohmann::json::parse(r.out);
  const io::ModelSpec ms = io::read_spec_file(spec);
  const MgpModel model(ms.margins, family_generator(ms.family));
  const auto& pdf = *model.generator.info().density_Z;
  const std::vector<std::vector<double>> points{{0.5, -0.2}, {1.5, 2.0}, {-1.0, -1.0}, {-0.3, 0.25}};
  ASSERT_EQ(doc["results"].size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_EQ(doc["results"][i]["value"].get<double>(), density(model, points[i], pdf));
    EXPECT_EQ(doc["results"][i]["provenance"], "closed-form");
  }
  EXPECT_EQ(doc["results"][2]["value"].get<double>(), 0.0);
}

TEST_F(Cli, EvalCdfAndDensityErrors) {
  const auto cd = write("cd.json", kCd);
  const auto pts = write("p.csv", "y1,y2\n1,1\n");
  const CliResult r = run("eval --spec " + cd + " --what cdf --points " + pts);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(io::format_double(-std::expm1(-1.0))), std::string::npos);
  // no Lebesgue density for complete dependence
  EXPECT_EQ(run("eval --spec " + cd + " --what density --points " + pts).code, 2);
  // wrong dimension and malformed points
  EXPECT_EQ(run("eval --spec " + cd + " --what cdf --points " + write("q.csv", "a,b,c\n1,2,3\n")).code, 2);
  EXPECT_EQ(run("eval --spec " + cd + " --what cdf --points " + write("r.csv", "a,b\n1,x\n")).code, 2);
}

TEST_F(Cli, CoefBoundaryCasesAndIdentity) {
  const auto cd = nlohmann::json::parse(run("coef --spec " + write("cd.json", kCd)).out);
  EXPECT_EQ(cd["chi"]["value"], 1.0);
  EXPECT_EQ(cd["extremal"]["value"], 1.0);
  const auto ai = nlohmann::json::parse(run("coef --spec " + write("ai.json", kAi)).out);
  EXPECT_EQ(ai["chi"]["value"], 0.0);
  EXPECT_EQ(ai["extremal"]["value"], 2.0);
  const CliResult lg = run("coef --spec " + write("lg.json", kLogistic) + " --n 200000 --seed 5");
  ASSERT_EQ(lg.code, 0);
  const auto doc = nlohmann::json::parse(lg.out);
  EXPECT_TRUE(doc["identity"]["within_3_std_errors"].get<bool>());
  EXPECT_NEAR(doc["extremal"]["value"].get<double>(), std::sqrt(2.0), 1e-14);
  const CliResult three = run("coef --which chi --spec " +
                        write("l3.json", R"({"dimension":3,"generator":{"type":"logistic","params":{"alpha":2}}})"));
  EXPECT_EQ(three.code, 2);
}

TEST_F(Cli, VerifySuiteDeterministicAndTamperFails) {
  const CliResult a = run("verify --suite mev --seed 3");
  ASSERT_EQ(a.code, 0) << a.out;
  const auto doc = nlohmann::json::parse(a.out);
  EXPECT_TRUE(doc["passed"].get<bool>());
  EXPECT_GT(doc["n_checks"].get<int>(), 0);
  EXPECT_EQ(run("verify --suite mev --seed 3").out, a.out);
  EXPECT_EQ(run("verify --suite mev --seed 3 --tamper").code, 1);
}

TEST_F(Cli, BadInputsExitWithTwo) {
  EXPECT_EQ(run("simulate --spec " + write("bad.json", "{ not json") + " --n 3").code, 2);
  EXPECT_EQ(run("simulate --spec " + (dir_ / "missing.json").string() + " --n 3").code, 2);
  EXPECT_EQ(run("simulate --spec " + write("a.json", R"({"dimension":2,"generator":{"type":"logistic","params":{"alpha":0.2}}})")).code, 2);
  EXPECT_EQ(run("simulate --n 3").code, 2);
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("verify --tier huge").code, 2);
}
