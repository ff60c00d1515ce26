#include <gtest/gtest.h>

#include "mev/subprocess.hpp"
#include "test_support.hpp"

namespace mev {
namespace {

namespace fs = std::filesystem;

using namespace std::chrono_literals;

class Cli : public ::testing::Test {
 protected:
  test::TempDir dir;

  ProcessResult mev(const std::string& args, const std::string& env = {}) {
    return run_shell(env + " " + shell_quote(test::kCli.string()) + " " + args, dir.path(), 120s);
  }
  std::string suite() const { return shell_quote((test::kDataDir / "mini_suite").string()); }
};

TEST_F(Cli, HelpEverywhere) {
  for (const char* cmd : {"", "dataset", "dataset ingest", "dataset dedup", "dataset label", "dataset categorize",
                          "dataset partition", "dataset corrupt", "dataset export", "dataset manifests", "route",
                          "eval", "eval run", "eval report", "eval misroute"}) {
    const auto r = mev(std::string(cmd) + " --help");
    EXPECT_EQ(r.exit_code, 0) << cmd;
    EXPECT_NE(r.output.find("Usage"), std::string::npos) << cmd;
  }
}

TEST_F(Cli, UnknownFlagIsConfigError) { EXPECT_EQ(mev("route --bogus x").exit_code, 1); }

TEST_F(Cli, RouteHeuristic) {
  auto r = mev("route --heuristic ripple carry adder");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  auto j = json::parse(r.output);
  EXPECT_EQ(j.at("category"), "Intermediate");
  EXPECT_EQ(j.at("expert_id"), "intermediate-expert");

  r = mev("route --heuristic \"traffic light FSM with counter\"");
  EXPECT_EQ(json::parse(r.output).at("category"), "Advanced");

  r = mev("route --force-category basic \"ALU with FSM\"");
  j = json::parse(r.output);
  EXPECT_EQ(j.at("category"), "Basic");
  EXPECT_EQ(j.at("classifier_kind"), "Forced");

  EXPECT_EQ(mev("route --heuristic \"  \"").exit_code, 1);
  EXPECT_EQ(mev("route").exit_code, 1);
}

TEST_F(Cli, DatasetStages) {
  for (const char* name : {"a.v", "b.v", "c.sv"}) {
    test::write_file(dir / "corpus" / name, std::string("module ") + name[0] + "(input clk, output reg q);\n"
                                            "  always @(posedge clk) q <= ~q;\nendmodule\n");
  }
  auto r = mev("dataset ingest --root corpus --out raw.jsonl");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("3 entries"), std::string::npos) << r.output;

  r = mev("dataset categorize --in raw.jsonl --out cat.jsonl");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("stage"), std::string::npos) << r.output;

  ASSERT_EQ(mev("dataset dedup --in raw.jsonl --out dd.jsonl").exit_code, 0);
  ASSERT_EQ(mev("dataset label --in dd.jsonl --out lab.jsonl").exit_code, 0);
  r = mev("dataset categorize --in lab.jsonl --out cat.jsonl");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_EQ(mev("dataset partition --in cat.jsonl --out-dir parts").exit_code, 0);
  EXPECT_TRUE(fs::exists(dir / "parts" / "advanced.jsonl"));

  r = mev("--seed 7 dataset corrupt --in lab.jsonl --out bad.jsonl");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto again = mev("dataset corrupt --seed 7 --in lab.jsonl --out bad2.jsonl");
  ASSERT_EQ(again.exit_code, 0) << again.output;
  EXPECT_EQ(test::read_file(dir / "bad.jsonl"), test::read_file(dir / "bad2.jsonl"));

  r = mev("dataset manifests --in cat.jsonl --base-model codegen-2B --out-dir ft");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto m = json::parse(test::read_file(dir / "ft" / "basic.manifest.json"));
  EXPECT_DOUBLE_EQ(m.at("learning_rate").get<double>(), 5e-5);
  EXPECT_EQ(mev("dataset manifests --in cat.jsonl --base-model llama --out-dir ft").exit_code, 1);

  test::write_file(dir / "broken.jsonl", "{\"id\": 1}\n");
  EXPECT_EQ(mev("dataset export --in broken.jsonl --out x.jsonl").exit_code, 4);
  EXPECT_EQ(mev("dataset ingest --root nowhere --out x.jsonl").exit_code, 2);
}

TEST_F(Cli, EvalOracleAndReports) {
  auto r = mev("--seed 1 eval run --suite " + suite() + " --mock oracle --stub-sim --route ground-truth --run-id good");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("100.0"), std::string::npos) << r.output;
  EXPECT_EQ(r.output.find(" 0.0"), std::string::npos) << r.output;

  r = mev("eval run --suite " + suite() + " --mock broken --stub-sim --run-id bad");
  ASSERT_EQ(r.exit_code, 0) << r.output;

  r = mev("eval report --run good --format csv");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("model,suite,k,value"), std::string::npos);
  EXPECT_NE(r.output.find("Verilog-Machine,10,100.0"), std::string::npos) << r.output;

  r = mev("eval report --compare good bad");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("+100.0"), std::string::npos) << r.output;

  EXPECT_EQ(mev("eval report --run nope").exit_code, 2);
}

TEST_F(Cli, EvalWithoutSimulatorExits5) {
  if (program_exists("iverilog")) GTEST_SKIP() << "a real simulator is installed";
  const auto r = mev("eval run --suite " + suite() + " --mock oracle");
  EXPECT_EQ(r.exit_code, 5) << r.output;
}

TEST_F(Cli, SecretsStayOut) {
  const std::string secret = "sk-test-very-secret-123";
  const auto r = mev("eval run --suite " + suite() + " --mock echo --stub-sim --n 2 --k 1,2 --run-id s",
                     "MEV_API_KEY=" + secret);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(r.output.find(secret), std::string::npos);
  for (const auto& f : fs::recursive_directory_iterator(dir.path())) {
    if (f.is_regular_file()) EXPECT_EQ(test::read_file(f.path()).find(secret), std::string::npos) << f.path();
  }
}

TEST_F(Cli, ReproducibleOutputs) {
  const std::string args = "--seed 4 eval run --suite " + suite() + " --mock echo --stub-sim --n 3 --k 1,3 --runs-dir ";
  ASSERT_EQ(mev(args + "r1 --run-id x").exit_code, 0);
  ASSERT_EQ(mev(args + "r2 --run-id x").exit_code, 0);
  for (const char* f : {"records.jsonl", "outcomes.jsonl", "requests.jsonl", "params.json"}) {
    EXPECT_EQ(test::read_file(dir / "r1/x" / f), test::read_file(dir / "r2/x" / f)) << f;
  }
}

}  // namespace
}  // namespace mev
