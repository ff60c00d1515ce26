#include <gtest/gtest.h>

#include <bit>

#include "mev/errors.hpp"
#include "mev/passk.hpp"
#include "test_support.hpp"

namespace mev {
namespace {

// Fraction of k-subsets of n samples (the first c passing) that hold a pass.
double enumerate_pass_at_k(int n, int c, int k) {
  const std::uint32_t pass_mask = (1u << c) - 1u;
  std::uint64_t total = 0, hit = 0;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    if (std::popcount(s) != k) continue;
    ++total;
    if (s & pass_mask) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

TEST(PassAtK, MatchesExhaustiveEnumeration) {
  for (int n = 1; n <= 12; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k) EXPECT_NEAR(pass_at_k(n, c, k), enumerate_pass_at_k(n, c, k), 1e-12) << n << c << k;
}

TEST(PassAtK, SpotValues) {
  EXPECT_NEAR(pass_at_k(15, 15, 1), 1.0, 1e-12);
  EXPECT_NEAR(pass_at_k(15, 0, 10), 0.0, 1e-12);
  EXPECT_NEAR(pass_at_k(15, 5, 1), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(pass_at_k(15, 1, 5), 1.0 / 3.0, 1e-12);
}

TEST(PassAtK, DomainErrors) {
  EXPECT_THROW(pass_at_k(0, 0, 1), DomainError);
  EXPECT_THROW(pass_at_k(5, 6, 1), DomainError);
  EXPECT_THROW(pass_at_k(5, -1, 1), DomainError);
  EXPECT_THROW(pass_at_k(5, 1, 0), DomainError);
  EXPECT_THROW(pass_at_k(5, 1, 6), DomainError);
}

TEST(PassAtK, MonotoneInCAndK) {
  for (int c = 0; c < 15; ++c)
    for (int k = 1; k <= 15; ++k) {
      EXPECT_LE(pass_at_k(15, c, k), pass_at_k(15, c + 1, k) + 1e-15);
      if (k < 15) EXPECT_LE(pass_at_k(15, c, k), pass_at_k(15, c, k + 1) + 1e-15);
    }
}

TEST(LiteralTopK, FirstKOnly) {
  const std::vector<bool> flags = {false, false, true, false};
  EXPECT_EQ(literal_top_k(flags, 2), 0.0);
  EXPECT_EQ(literal_top_k(flags, 3), 1.0);
  EXPECT_THROW(literal_top_k(flags, 5), DomainError);
}

std::vector<EvalRecord> records_from_histogram(const json& hist, int n, Suite suite) {
  std::vector<EvalRecord> out;
  int id = 0;
  for (const auto& [c, count] : hist.items()) {
    for (int i = 0; i < count.get<int>(); ++i) {
      out.push_back({"p" + std::to_string(id++), n, std::stoi(c), suite, {}, std::nullopt});
    }
  }
  return out;
}

PassKTable fixture_table() {
  const auto j = json::parse(test::read_file(test::kFixtureDir / "table_histograms.json"));
  const int n = j.at("n");
  std::map<Suite, std::vector<EvalRecord>> per_suite;
  per_suite[Suite::VerilogMachine] = records_from_histogram(j.at("machine"), n, Suite::VerilogMachine);
  per_suite[Suite::VerilogHuman] = records_from_histogram(j.at("human"), n, Suite::VerilogHuman);
  return build_table(j.at("model"), per_suite, PassKParams{});
}

TEST(Table, FixtureRowRendersExactly) {
  const auto t = fixture_table();
  EXPECT_EQ(render_row(t), "correct dataset |    15.3    28.6    36.3 |    13.4    25.6    32.6");
  const std::string text = render_text(t);
  EXPECT_EQ(text,
            "                | Verilog-Machine         | Verilog-Human\n"
            "model           |  pass@1  pass@5 pass@10 |  pass@1  pass@5 pass@10\n"
            "-------------------------------------------------------------------\n"
            "correct dataset |    15.3    28.6    36.3 |    13.4    25.6    32.6\n");
}

PassKTable literal(std::string label, std::array<double, 6> v) {
  PassKTable t;
  t.model_label = std::move(label);
  t.rows[Suite::VerilogMachine] = {{1, v[0]}, {5, v[1]}, {10, v[2]}};
  t.rows[Suite::VerilogHuman] = {{1, v[3]}, {5, v[4]}, {10, v[5]}};
  return t;
}

TEST(Table, CompareReportsLargestGain) {
  const auto mine = literal("experts-2B", {44.0, 60.1, 63.6, 34.6, 51.3, 53.2});
  const auto base = literal("baseline-2B", {20.1, 45.4, 55.2, 17.9, 35.8, 40.3});
  const auto d = compare_tables(mine, base);
  EXPECT_EQ(format_percent(d.max_delta), "23.9");
  EXPECT_EQ(d.max_suite, Suite::VerilogMachine);
  EXPECT_EQ(d.max_k, 1);
  EXPECT_EQ(d.summary(), "max delta: +23.9 (Verilog-Machine, pass@1)");
  EXPECT_NE(render_delta(d).find("23.9"), std::string::npos);

  auto narrow = base;
  narrow.rows[Suite::VerilogHuman].erase(10);
  EXPECT_THROW(compare_tables(mine, narrow), ShapeMismatch);
}

TEST(Table, Csv) {
  const auto t = literal("a,b", {1, 2, 3, 4, 5, 6.04});
  const auto csv = render_csv(std::span(&t, 1));
  EXPECT_TRUE(csv.starts_with("model,suite,k,value\n\"a,b\",Verilog-Machine,1,1.0\n"));
  EXPECT_TRUE(csv.ends_with("\"a,b\",Verilog-Human,10,6.0\n"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Table, FormatPercent) {
  EXPECT_EQ(format_percent(-0.01), "0.0");
  EXPECT_EQ(format_percent(100.0), "100.0");
  EXPECT_EQ(format_percent(33.333), "33.3");
}

TEST(Aggregate, ErrorsAndEstimators) {
  PassKParams p;
  EXPECT_THROW(aggregate({}, p), EmptyRecords);
  std::vector<EvalRecord> small = {{"x", 5, 1, Suite::VerilogHuman, {}, std::nullopt}};
  try {
    aggregate(small, p);
    FAIL();
  } catch (const KExceedsN& e) {
    EXPECT_EQ(e.problem_id(), "x");
  }
  std::vector<EvalRecord> recs = {{"a", 2, 1, Suite::VerilogHuman, {false, true}, std::nullopt},
                                  {"b", 2, 0, Suite::VerilogHuman, {false, false}, std::nullopt}};
  PassKParams two{{1, 2}, 2};
  const auto unbiased = aggregate(recs, two);
  EXPECT_NEAR(unbiased.at(1), 25.0, 1e-9);
  EXPECT_NEAR(unbiased.at(2), 50.0, 1e-9);
  const auto lit = aggregate(recs, two, Estimator::LiteralTopK);
  EXPECT_NEAR(lit.at(1), 0.0, 1e-9);
  EXPECT_NEAR(lit.at(2), 50.0, 1e-9);
  recs[0].sample_passes.clear();
  EXPECT_THROW(aggregate(recs, two, Estimator::LiteralTopK), DomainError);
}

TEST(BuildTable, MissingSuites) {
  std::map<Suite, std::vector<EvalRecord>> only_human = {
      {Suite::VerilogHuman, {{"a", 15, 15, Suite::VerilogHuman, {}, std::nullopt}}}};
  EXPECT_THROW(build_table("m", only_human, PassKParams{}), PreconditionError);
  const auto t = build_table("m", only_human, PassKParams{}, Estimator::Unbiased, true);
  EXPECT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows.at(Suite::VerilogHuman).at(10), 100.0);
}

TEST(PassKParams, Validation) {
  EXPECT_THROW((PassKParams{{5, 1}, 15}).validate(), ConfigError);
  EXPECT_THROW((PassKParams{{1, 20}, 15}).validate(), ConfigError);
  EXPECT_THROW((PassKParams{{}, 15}).validate(), ConfigError);
  EXPECT_EQ(json(PassKParams{}).get<PassKParams>(), PassKParams{});
}

}  // namespace
}  // namespace mev
