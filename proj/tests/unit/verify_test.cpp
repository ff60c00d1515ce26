#include <gtest/gtest.h>

#include <chrono>

#include "mev/errors.hpp"
#include "mev/verify.hpp"
#include "test_support.hpp"

namespace mev {
namespace {

namespace fs = std::filesystem;

using namespace std::chrono_literals;
using test::read_file;

std::string fixture(const std::string& name) { return read_file(test::kFixtureDir / "verify" / name); }

class VerifyTest : public ::testing::Test {
 protected:
  test::TempDir work;
  SimulatorConfig cfg = test::stub_config(work.path());
};

TEST_F(VerifyTest, KnownGoodPasses) {
  const auto o = functional_check(fixture("and_good.v"), fixture("and_tb.v"), cfg);
  EXPECT_TRUE(o.syntax_ok());
  EXPECT_TRUE(o.functional_ok()) << o.detail();
  EXPECT_FALSE(o.timed_out());
}

TEST_F(VerifyTest, WrongGateFailsFunctionallyOnly) {
  const auto o = functional_check(fixture("or_wrong.v"), fixture("and_tb.v"), cfg);
  EXPECT_TRUE(o.syntax_ok());
  EXPECT_FALSE(o.functional_ok());
  EXPECT_NE(o.detail().find("mismatch"), std::string::npos);
}

TEST_F(VerifyTest, MissingEndmoduleFailsSyntax) {
  const auto s = syntax_check(fixture("no_endmodule.v"), cfg);
  EXPECT_FALSE(s.syntax_ok());
  EXPECT_FALSE(s.functional_ok());
  const auto f = functional_check(fixture("no_endmodule.v"), fixture("and_tb.v"), cfg);
  EXPECT_FALSE(f.syntax_ok());
  EXPECT_TRUE(syntax_check(fixture("and_good.v"), cfg).syntax_ok());
  EXPECT_FALSE(syntax_check(fixture("and_good.v"), cfg).functional_ok());
}

TEST_F(VerifyTest, RunawayTestbenchTimesOut) {
  cfg.run_timeout = 1000ms;
  const auto start = std::chrono::steady_clock::now();
  const auto o = functional_check(fixture("and_good.v"), fixture("hang_tb.v"), cfg);
  const auto took = std::chrono::steady_clock::now() - start;
  EXPECT_TRUE(o.syntax_ok());
  EXPECT_FALSE(o.functional_ok());
  EXPECT_TRUE(o.timed_out());
  EXPECT_LT(took, cfg.run_timeout + 5s);
}

TEST_F(VerifyTest, MissingMarkerFails) {
  const std::string tb = "module tb; initial begin $display(\"done\"); $finish; end endmodule\n";
  EXPECT_FALSE(functional_check(fixture("and_good.v"), tb, cfg).functional_ok());
}

TEST_F(VerifyTest, DiagnosticsAreBounded) {
  const std::string tb =
      "module tb; integer i; initial begin for (i = 0; i < 5000; i = i + 1) "
      "$display(\"line %0d of chatter chatter chatter\", i); $finish; end endmodule\n";
  const auto o = functional_check(fixture("and_good.v"), tb, cfg);
  EXPECT_LE(o.detail().size(), kDiagnosticLimit + 64);
}

TEST_F(VerifyTest, MissingSimulator) {
  SimulatorConfig missing = cfg;
  missing.compile_cmd = "definitely-not-a-simulator-xyz -o {out} {files}";
  EXPECT_FALSE(simulator_available(missing));
  EXPECT_THROW(require_simulator(missing), SimulatorMissing);
  EXPECT_THROW(functional_check(fixture("and_good.v"), fixture("and_tb.v"), missing), SimulatorMissing);
  EXPECT_TRUE(simulator_available(cfg));
}

TEST_F(VerifyTest, WorkdirsCleanedUnlessKept) {
  functional_check(fixture("and_good.v"), fixture("and_tb.v"), cfg, {"p", 0});
  EXPECT_TRUE(fs::is_empty(work.path()) || !fs::exists(work.path()));
  cfg.keep_artifacts = true;
  functional_check(fixture("and_good.v"), fixture("and_tb.v"), cfg, {"p", 1});
  EXPECT_FALSE(fs::is_empty(work.path()));
}

TEST_F(VerifyTest, BatchReusesIdenticalSamples) {
  Problem p;
  p.id = "and";
  p.prompt = "AND gate";
  p.testbench = fixture("and_tb.v");
  const std::map<std::string, Problem> problems = {{"and", p}};
  std::vector<GenerationSample> samples;
  for (int i = 0; i < 6; ++i) {
    GenerationSample s;
    s.problem_id = "and";
    s.sample_index = i;
    s.code = i < 4 ? fixture("and_good.v") : (i == 4 ? fixture("or_wrong.v") : "garbage with no module");
    samples.push_back(s);
  }
  samples[1].code = "Here you go:\n" + samples[1].code + "\nHope this helps.";  // extracts to the same code

  BatchStats stats;
  const auto out = verify_batch(samples, problems, cfg, 3, &stats);
  ASSERT_EQ(out.size(), 6u);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(out.at({"and", i}).functional_ok()) << i;
  EXPECT_TRUE(out.at({"and", 4}).syntax_ok());
  EXPECT_FALSE(out.at({"and", 4}).functional_ok());
  EXPECT_FALSE(out.at({"and", 5}).syntax_ok());
  EXPECT_EQ(stats.simulations, 2u);  // good + wrong; garbage stopped at precheck
  EXPECT_LE(stats.peak_concurrent, 3u);

  cfg.reuse_identical_samples = false;
  const auto again = verify_batch(samples, problems, cfg, 3, &stats);
  EXPECT_EQ(stats.simulations, 5u);
  EXPECT_EQ(again, out);

  samples[0].problem_id = "unknown";
  EXPECT_FALSE(verify_batch(samples, problems, cfg, 1).at({"unknown", 0}).syntax_ok());
  EXPECT_THROW(verify_batch(samples, problems, cfg, 0), ConfigError);
}

TEST(Precheck, StructuralRules) {
  EXPECT_TRUE(precheck("module a; endmodule").ok);
  EXPECT_FALSE(precheck("").ok);
  EXPECT_FALSE(precheck("assign y = a;").ok);
  EXPECT_FALSE(precheck("module a; ").ok);
  EXPECT_FALSE(precheck("module a(input x; endmodule").ok);
  EXPECT_FALSE(precheck("module a; initial begin end end endmodule").ok);
  // comments and strings do not count
  EXPECT_TRUE(precheck("module a; // (begin\n initial $display(\"(\"); endmodule").ok);
  // passes the filter yet is not valid Verilog
  EXPECT_TRUE(precheck("module a; this is not verilog; endmodule").ok);
}

TEST(Extract, DropsSurroundingProse) {
  EXPECT_EQ(extract_verilog("Sure! Here it is:\nmodule a;\nendmodule\nThanks"), "module a;\nendmodule\n");
  EXPECT_EQ(extract_verilog("```verilog\nmodule a; endmodule\nmodule b; endmodule\n```"),
            "module a; endmodule\nmodule b; endmodule\n");
  EXPECT_EQ(extract_verilog("no code here"), "no code here");
  // "module" inside prose is not a line-leading keyword
  EXPECT_EQ(extract_verilog("This module does X.\nmodule a; endmodule"), "module a; endmodule\n");
}

TEST(OutcomeLine, KeyOrder) {
  const auto line = outcome_line({"p", 2}, VerifyOutcome::functional_failure("d", true));
  std::vector<std::string> keys;
  for (const auto& [k, _] : line.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"problem_id", "sample_index", "syntax_ok", "functional_ok", "timed_out",
                                            "detail"}));
}

TEST(SimulatorConfig, JsonRoundTripAndValidate) {
  SimulatorConfig c;
  c.run_timeout = 1234ms;
  c.reuse_identical_samples = false;
  const auto back = json(c).get<SimulatorConfig>();
  EXPECT_EQ(back.run_timeout, 1234ms);
  EXPECT_FALSE(back.reuse_identical_samples);
  c.run_timeout = 0ms;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace mev
