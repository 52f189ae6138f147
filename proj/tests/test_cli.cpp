#include <gtest/gtest.h>

#include <wbo/descriptor.hpp>
#include <wbo/io.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace wbo;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("wbo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    write_file_atomic(path(name), content);
    return path(name);
  }

  int run(const std::string& args) {
    const std::string cmd = std::string(WBO_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    stderr_ = read_file(path("stderr.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  std::string stderr_;
};

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const std::string& file) {
  std::istringstream in(read_file(file));
  Table rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

int column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t[0].size(); ++i)
    if (t[0][i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

TEST_F(Cli, ExponentResidualColumn) {
  const auto model = write("ray.json", R"({"kind": "rayleigh"})");
  ASSERT_EQ(run("exponent --model " + model + " --eta-min 1 --eta-max 10 --points 10 --out " + path("e.csv")), 0);
  const auto t = read_csv(path("e.csv"));
  ASSERT_EQ(t.size(), 11u);
  const int c = column(t, "closed_minus_numeric");
  ASSERT_GE(c, 0);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(std::abs(parse_double(t[i][c])), 1e-9);
  EXPECT_TRUE(fs::exists(path("e.csv.manifest.json")));
}

TEST_F(Cli, ExponentBelowEtaBar) {
  const auto model = write("ray.json", R"({"kind": "rayleigh"})");
  EXPECT_EQ(run("exponent --model " + model + " --eta-min 0.1 --eta-max 0.5 --out " + path("e.csv")), 3);
  EXPECT_NE(stderr_.find("below minimum energy per nat"), std::string::npos);
}

TEST_F(Cli, ExponentRicianOrdering) {
  const auto a = write("a.json", R"({"kind": "rician", "kappa": 0.9})");
  const auto b = write("b.json", R"({"kind": "rician", "kappa": 0.5})");
  ASSERT_EQ(run("exponent --model " + a + " --eta-min 1 --eta-max 20 --out " + path("a.csv")), 0);
  ASSERT_EQ(run("exponent --model " + b + " --eta-min 1 --eta-max 20 --out " + path("b.csv")), 0);
  const auto ta = read_csv(path("a.csv"));
  const auto tb = read_csv(path("b.csv"));
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 1; i < ta.size(); ++i) EXPECT_GE(parse_double(ta[i][2]), parse_double(tb[i][2]));
}

TEST_F(Cli, ParseErrorsExitTwo) {
  const auto bad = write("bad.json", R"({"kind": "rician", "kappa": "high"})");
  EXPECT_EQ(run("exponent --model " + bad), 2);
  EXPECT_NE(stderr_.find("model.kappa"), std::string::npos);
  const auto broken = write("broken.json", "{not json");
  EXPECT_EQ(run("exponent --model " + broken), 2);
  EXPECT_EQ(run("exponent"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("feedback --tau 1,x --out " + path("f.csv")), 2);
  const auto ric = write("ric.json", R"({"kind": "rician", "kappa": 0.5})");
  EXPECT_EQ(run("simulate --model " + ric + " --eta 2 --sampler tilted --out " + path("sim")), 2);
  EXPECT_NE(stderr_.find("tilting not available"), std::string::npos);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, FeedbackDefaults) {
  ASSERT_EQ(run("feedback --conjecture --out " + path("fb.csv")), 0);
  const auto curves = read_csv(path("fb.csv"));
  EXPECT_EQ(curves[0], (std::vector<std::string>{"eta", "eta_db", "exponent", "regime", "x_star", "tau", "g0"}));
  std::set<std::string> taus;
  for (std::size_t i = 1; i < curves.size(); ++i) taus.insert(curves[i][5]);
  EXPECT_EQ(taus.size(), 4u);

  const auto env = read_csv(path("fb_envelope.csv"));
  bool found = false;
  for (std::size_t i = 1; i < env.size(); ++i) {
    if (parse_double(env[i][1]) == 0.0) {
      found = true;
      EXPECT_NEAR(parse_double(env[i][3]), 0.4587, 1e-4);
    }
  }
  EXPECT_TRUE(found);

  const auto conj = Json::parse(read_file(path("fb_conjecture.json")));
  EXPECT_TRUE(conj["results"][0]["supports_conjecture"].get<bool>());
  EXPECT_EQ(conj["results"][0]["label"], "numerical support for the conjecture");
}

TEST_F(Cli, SimulateRepeatIsByteIdentical) {
  const auto model = write("ray.json", R"({"kind": "rayleigh"})");
  const std::string args = "simulate --model " + model + " --eta 2 --sampler tilted --trials 5000 --seed 3 --out ";
  ASSERT_EQ(run(args + path("s1")), 0);
  ASSERT_EQ(run(args + path("s2")), 0);
  EXPECT_EQ(read_file(path("s1/outage.csv")), read_file(path("s2/outage.csv")));
  EXPECT_EQ(read_file(path("s1/fit.json")), read_file(path("s2/fit.json")));
  const auto fit = Json::parse(read_file(path("s1/fit.json")));
  EXPECT_NEAR(fit["ratio"].get<double>(), 1.0, 0.1);
  EXPECT_TRUE(fit["oracle_slope"].is_number());
}

TEST_F(Cli, SimulateFeedbackExactModeConsistency) {
  const std::string base = "simulate --tau 1 --g0 0 --eta 0.6 --mode exact --k-grid 10,20,30,40,50 --trials 20000 ";
  ASSERT_EQ(run(base + "--seed 1 --out " + path("a")), 0);
  ASSERT_EQ(run(base + "--seed 2 --out " + path("b")), 0);
  const auto a = read_csv(path("a/outage.csv"));
  const auto b = read_csv(path("b/outage.csv"));
  const auto& ra = a.back();
  const auto& rb = b.back();
  ASSERT_EQ(ra[0], "50");
  const double se = std::hypot(parse_double(ra[2]), parse_double(rb[2]));
  EXPECT_NEAR(parse_double(ra[1]), parse_double(rb[1]), 4 * se);
}

TEST_F(Cli, SimulateInsufficientData) {
  const auto model = write("ray.json", R"({"kind": "rayleigh"})");
  EXPECT_EQ(run("simulate --model " + model + " --eta 2 --trials 1000 --out " + path("s")), 3);
  EXPECT_NE(stderr_.find("insufficient data"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("s/outage.csv")));
}

TEST_F(Cli, ShapeIdentityAndVerbose) {
  const auto psi = write("psi.json", R"({"n_t": 2, "n_r": 2,
    "psi": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]})");
  ASSERT_EQ(run("shape --psi " + psi + " --eta 2 --verbose --out " + path("s.json")), 0);
  const auto j = Json::parse(read_file(path("s.json")));
  EXPECT_NEAR(j["exponent"].get<double>(), j["white_exponent"].get<double>(), 1e-9);
  ASSERT_TRUE(j.contains("trace"));
  EXPECT_EQ(j["trace"].size(), 16u);
  EXPECT_EQ(j["trace"][0]["kind"], "white");

  EXPECT_EQ(run("shape --psi " + psi + " --eta 0.3 --out " + path("t.json")), 3);
  EXPECT_NE(stderr_.find("no Sigma attains"), std::string::npos);
}

TEST_F(Cli, ReplayReproducesOutputs) {
  const auto model = write("nak.json", R"({"kind": "nakagami", "m": 2})");
  ASSERT_EQ(run("exponent --model " + model + " --out " + path("e.csv")), 0);
  ASSERT_EQ(run("replay --manifest " + path("e.csv.manifest.json") + " --out " + path("e2.csv")), 0);
  EXPECT_EQ(read_file(path("e.csv")), read_file(path("e2.csv")));
  const auto m = Json::parse(read_file(path("e.csv.manifest.json")));
  EXPECT_EQ(m["command"], "exponent");
  EXPECT_EQ(m["config"]["model"]["kind"], "nakagami");
  EXPECT_TRUE(m.contains("tool_version"));
  EXPECT_TRUE(m.contains("duration_seconds"));
}
