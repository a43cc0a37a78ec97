#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

using namespace qdefect;
namespace fs = std::filesystem;

namespace {

fs::path workdir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "qdefect_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string write_config(const fs::path& dir, const nlohmann::json& j) {
  const std::string p = (dir / "cfg.json").string();
  std::ofstream(p) << j.dump();
  return p;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(std::ifstream(p)); }

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const RunConfig d = parse_config(nlohmann::json::object());
  EXPECT_EQ(d.N, 33);
  EXPECT_EQ(d.solver.max_iters, 5000);
  EXPECT_DOUBLE_EQ(d.analysis.beta_threshold, 0.05);
  const RunConfig c = parse_config({{"grid", {{"N", 17}}}, {"solver", {{"mode", "penalty"}, {"mu", 500.0}}}});
  EXPECT_EQ(c.N, 17);
  EXPECT_EQ(c.solver.mode, SolverMode::penalty);
  EXPECT_DOUBLE_EQ(c.solver.mu, 500.0);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  auto message = [](const nlohmann::json& j) {
    try {
      parse_config(j);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message({{"solver", {{"max_iter", 10}}}}).find("unknown key 'solver.max_iter'"), std::string::npos);
  EXPECT_NE(message({{"gird", 1}}).find("unknown key 'gird'"), std::string::npos);
  EXPECT_NE(message({{"grid", {{"N", 32}}}}).find("grid.N"), std::string::npos);
  EXPECT_NE(message({{"grid", {{"N", "big"}}}}).find("grid.N"), std::string::npos);
  EXPECT_NE(message({{"synthetic", {{"case", "spiral"}}}}).find("synthetic.case"), std::string::npos);
}

TEST(Config, HashIsStableAndSensitive) {
  const RunConfig a = parse_config(nlohmann::json::object());
  const RunConfig b = parse_config({{"grid", {{"N", 33}}}});
  const RunConfig c = parse_config({{"grid", {{"N", 35}}}});
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(config_hash(parse_config(config_json(c))), config_hash(c));
}

TEST(Cli, MinimizeWritesArtifacts) {
  const fs::path d = workdir("min");
  CliOptions o;
  o.config = write_config(d, {{"grid", {{"N", 13}}}, {"output", {{"dir", d.string()}}}});
  std::ostringstream out, err;
  EXPECT_EQ(cmd_minimize(o, out, err), 0) << err.str();
  const nlohmann::json rep = read_json(d / "solver_report.json");
  EXPECT_TRUE(rep["converged"].get<bool>());
  EXPECT_EQ(rep["status"], "critical point");
  EXPECT_EQ(rep["config_hash"], config_hash(load_config(o.config)));
  const Resumed r = resume((d / "field.qfld").string());
  EXPECT_EQ(r.state.iteration, rep["iterations"].get<int>());
  EXPECT_TRUE(fs::exists(d / "trace.csv"));
}

TEST(Cli, MinimizeNotConvergedExitsTwo) {
  const fs::path d = workdir("short");
  CliOptions o;
  o.config = write_config(d, {{"grid", {{"N", 13}}}, {"solver", {{"max_iters", 2}}}});
  o.out_dir = d.string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_minimize(o, out, err), 2);
  EXPECT_TRUE(fs::exists(d / "field.qfld"));
}

TEST(Cli, ResumeFromCheckpointMatchesStraightRun) {
  const fs::path a = workdir("straight"), b = workdir("resumed");
  std::ostringstream out, err;
  CliOptions o;
  o.config = write_config(a, {{"grid", {{"N", 13}}}, {"solver", {{"max_iters", 20}, {"grad_tol", 1e-12}}}});
  o.out_dir = a.string();
  ASSERT_EQ(cmd_minimize(o, out, err), 2);

  o.config = write_config(b, {{"grid", {{"N", 13}}},
                              {"solver", {{"max_iters", 8}, {"grad_tol", 1e-12}, {"checkpoint_every", 4}}}});
  o.out_dir = b.string();
  ASSERT_EQ(cmd_minimize(o, out, err), 2);
  ASSERT_TRUE(fs::exists(b / "checkpoint.qfld"));
  o.config = write_config(b, {{"grid", {{"N", 13}}},
                              {"solver", {{"max_iters", 20}, {"grad_tol", 1e-12}, {"resume", true}}}});
  ASSERT_EQ(cmd_minimize(o, out, err), 2);
  EXPECT_EQ(load_snapshot((a / "field.qfld").string()).field.values(),
            load_snapshot((b / "field.qfld").string()).field.values());
}

TEST(Cli, SynthesizeAnalyzeRoundTrip) {
  const fs::path d = workdir("syn");
  CliOptions o;
  o.config = write_config(d, {{"grid", {{"N", 33}}},
                              {"synthetic", {{"case", "half_degree"}, {"axis", {0.0, 0.0, 1.0}}}},
                              {"output", {{"dir", d.string()}}}});
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synthesize(o, out, err), 0) << err.str();
  o.snapshot = (d / "field.qfld").string();
  ASSERT_EQ(cmd_analyze(o, out, err), 0) << err.str();
  const nlohmann::json rep = read_json(d / "defects.json");
  EXPECT_EQ(rep["schema"], "defect-report/1");
  ASSERT_GE(rep["candidates"].size(), 1u);
  EXPECT_EQ(rep["candidates"][0]["classification"], "half_degree_line");
  EXPECT_TRUE(fs::exists(d / "beta.vtk"));
  EXPECT_TRUE(fs::exists(d / "s.vtk"));
}

TEST(Cli, AnalyzeErrors) {
  std::ostringstream out, err;
  CliOptions o;
  EXPECT_EQ(cmd_analyze(o, out, err), 1);
  o.snapshot = (workdir("missing") / "nope.qfld").string();
  EXPECT_EQ(cmd_analyze(o, out, err), 1);
  EXPECT_NE(err.str().find("Io"), std::string::npos);
}

TEST(Cli, BoundaryMarginIsEnforced) {
  const fs::path d = workdir("margin");
  CliOptions o;
  o.config = write_config(d, {{"grid", {{"N", 13}}}, {"boundary", {{"type", "hedgehog"}, {"min_beta_margin", 2.5}}}});
  o.out_dir = d.string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_minimize(o, out, err), 1);
}

TEST(Cli, VerifyDetectsPerturbedTau) {
  std::ostringstream out, err;
  CliOptions o;
  EXPECT_EQ(cmd_verify(o, out, err), 0) << out.str();
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
  std::ostringstream out2;
  o.tau_scale = 1.001;
  EXPECT_EQ(cmd_verify(o, out2, err), 1);
  EXPECT_NE(out2.str().find("FAIL tau_closed_form"), std::string::npos);
}
