#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace intflux;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("intflux_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  // Runs the CLI inside the temp directory.
  CliRun run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" + std::string(INTFLUX_CLI) + "' " + args +
                            " >stdout.txt 2>stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(dir_ / "stdout.txt"), slurp(dir_ / "stderr.txt")};
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

TEST_F(Cli, UnknownSuiteFails) { EXPECT_EQ(run("verify bogus").code, 1); }

TEST_F(Cli, MissingSubcommandFails) { EXPECT_EQ(run("").code, 1); }

TEST_F(Cli, ZeroConfigSolve) {
  write("zero.cfg", "N = 8\nboundary = zero\nout_dir = out\n");
  const CliRun r = run("solve zero.cfg");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["energy"].get<double>(), 0.0);
  EXPECT_TRUE(j["charges"].empty());
  EXPECT_EQ(slurp(dir_ / "out" / "charges.txt"), "");
  EXPECT_EQ(read_field_file((dir_ / "out" / "field.txt").string()).mass(), 0.0);
}

TEST_F(Cli, BadExponentIsRejected) {
  write("bad.cfg", "N = 8\np = 1.6\n");
  const CliRun r = run("solve bad.cfg");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("]1, 3/2["), std::string::npos) << r.err;
}

TEST_F(Cli, TruncatedFieldNamesTheLine) {
  write("trunc.txt", "fluxfield v1 4 1\n0 0 1 1 0.5\nnot a record\n");
  const CliRun r = run("analyze trunc.txt");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, ScanOfZeroFieldFlagsNothing) {
  write_field_file((dir_ / "z.txt").string(), FluxField(build_domain(8)), false);
  const CliRun r = run("analyze z.txt --mode scan");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(json::parse(r.out)["flagged"].empty());
}

TEST_F(Cli, MonotonicityOfTheBundledMonopole) {
  const fs::path sample = fs::path(INTFLUX_SOURCE_DIR) / "presets" / "monopole_sample.txt";
  const FluxField M = read_field_file(sample.string());
  const Vec3 x0 = test::central_cell_center(M.domain());
  std::ostringstream center;
  center << x0[0] << ',' << x0[1] << ',' << x0[2];
  const CliRun r = run("analyze '" + sample.string() + "' --mode monotonicity --center " + center.str() +
                    " --radii 0.3,0.4,0.5,0.6,0.7");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "r,theta,rhs,dtheta,quad_error");
  // Flat to 10% of the mean; the shortfall from the radial value is bounded by
  // the reported quadrature error.
  std::vector<double> theta, quad;
  while (std::getline(is, line)) {
    std::vector<double> cols;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) cols.push_back(std::stod(tok));
    ASSERT_EQ(cols.size(), 5u) << line;
    theta.push_back(cols[1]);
    quad.push_back(cols[4]);
  }
  const int rows = static_cast<int>(theta.size());
  double mean = 0;
  for (double t : theta) mean += t / rows;
  for (int k = 0; k < rows; ++k) {
    EXPECT_NEAR(theta[k], mean, 0.10 * mean);
    EXPECT_LE(monopole_energy(1.2) - theta[k], 1.5 * quad[k]);
  }
  EXPECT_EQ(rows, 5);
}

TEST_F(Cli, SolveOutputRoundTrips) {
  write("m.cfg", "N = 8\nboundary = uniform-degree-1\nout_dir = out\n");
  const CliRun r = run("solve m.cfg");
  ASSERT_EQ(r.code, 0) << r.err;
  const double E = json::parse(r.out)["energy"].get<double>();
  const FluxField X = read_field_file((dir_ / "out" / "field.txt").string());
  EXPECT_NEAR(energy(X, 1.2), E, 1e-12 * E);
  EXPECT_EQ(slurp(dir_ / "out" / "charges.txt").empty(), json::parse(r.out)["charges"].empty());
}

TEST_F(Cli, SolveIsDeterministic) {
  write("a.cfg", "N = 8\nboundary = uniform-degree-1\nout_dir = a\n");
  write("b.cfg", "N = 8\nboundary = uniform-degree-1\nout_dir = b\n");
  ASSERT_EQ(run("solve a.cfg").code, 0);
  ASSERT_EQ(run("solve b.cfg").code, 0);
  for (const char* f : {"field.txt", "charges.txt", "history.csv"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(Cli, DecomposeWritesPathsAndGraph) {
  const DomainPtr d = build_domain(8);
  write_field_file((dir_ / "dip.txt").string(), test::route_field(d, test::straight_run(*d, {1, 4, 4}, 0, 4)), false);
  const CliRun r = run("decompose dip.txt --out dec.txt --dot g.dot");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["paths"].get<int>(), 1);
  EXPECT_EQ(j["cycles"].get<int>(), 0);
  EXPECT_EQ(j["graph_edges"].get<int>(), 1);
  EXPECT_EQ(j["kirchhoff_defect"].get<double>(), 2.0);
  EXPECT_EQ(slurp(dir_ / "dec.txt").rfind("P 1 ", 0), 0u);
  EXPECT_NE(slurp(dir_ / "g.dot").find("digraph"), std::string::npos);
}

TEST_F(Cli, BlowupWritesAField) {
  const DomainPtr d = build_domain(16);
  write_field_file((dir_ / "m.bin").string(), sample_monopole(d, test::central_cell_center(*d)), true);
  const CliRun r = run("analyze m.bin --mode blowup --lambda 0.5 --out b.txt");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["resolution"].get<int>(), 8);
  EXPECT_EQ(read_field_file((dir_ / "b.txt").string()).domain().resolution(), 8);
}

}  // namespace
