#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "mev/backends.hpp"
#include "mev/dataset.hpp"
#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/text.hpp"
#include "mev/prompts.hpp"
#include "test_support.hpp"

namespace mev {
namespace {

namespace fs = std::filesystem;
using test::Gen;
using test::TempDir;
using test::write_file;

GatewayConfig unlimited() {
  GatewayConfig c;
  c.rate_per_second = 0;
  return c;
}

Corpus corpus_of(std::vector<std::string> codes) {
  Corpus c;
  for (std::size_t i = 0; i < codes.size(); ++i) c.entries.push_back(make_entry("f" + std::to_string(i) + ".v", codes[i]));
  return c;
}

Corpus described(std::size_t n, Gen& g) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) {
    auto e = make_entry("f" + std::to_string(i) + ".v", "module m" + std::to_string(i) + "; endmodule\n");
    e.description = "description " + std::to_string(i) + " " + g.ident();
    c.entries.push_back(std::move(e));
  }
  return c;
}

// Replies with a fixed string, or fails for prompts containing a marker.
class FixedBackend final : public Backend {
 public:
  FixedBackend(std::string reply, std::string fail_marker = {}) : reply_(std::move(reply)), marker_(std::move(fail_marker)) {}
  std::string name() const override { return "fixed"; }
  std::vector<std::string> complete_once(const CompletionRequest& req) override {
    {
      std::lock_guard lock(mu);
      prompts.push_back(req.prompt);
    }
    if (!marker_.empty() && req.prompt.find(marker_) != std::string::npos) throw BackendRejected("refused");
    return {reply_};
  }
  std::mutex mu;
  std::vector<std::string> prompts;

 private:
  std::string reply_;
  std::string marker_;
};

TEST(Ingest, SortedRelativePathsAndSkips) {
  TempDir dir;
  write_file(dir / "b.v", "module b; endmodule\n");
  write_file(dir / "sub/a.sv", "module a; endmodule\n");
  write_file(dir / "notes.txt", "ignored");
  write_file(dir / "bad.v", std::string("module \xff\xfe; endmodule"));
  const auto r = ingest(dir.path());
  ASSERT_EQ(r.corpus.entries.size(), 2u);
  EXPECT_EQ(r.corpus.entries[0].source, "b.v");
  EXPECT_EQ(r.corpus.entries[1].source, "sub/a.sv");
  EXPECT_EQ(r.warnings, 1u);
  EXPECT_EQ(r.skipped, std::vector<std::string>{"bad.v"});
  EXPECT_EQ(r.corpus.last_pipeline_stage(), Stage::Ingest);
  const auto& e = r.corpus.entries[0];
  EXPECT_EQ(e.token_estimate, token_estimate(e.code));
  EXPECT_EQ(e.content_hash, content_hash(e.code));
}

TEST(Ingest, EmptyAndMissing) {
  TempDir dir;
  EXPECT_THROW(ingest(dir.path()), EmptyCorpus);
  EXPECT_THROW(ingest(dir / "missing"), IoError);
}

TEST(Dedup, KeepsFirstSeen) {
  auto c = corpus_of({"module a;\nendmodule\n", "module b; endmodule", "module a;   \r\nendmodule\n"});
  const auto d = dedup(c);
  ASSERT_EQ(d.entries.size(), 2u);
  EXPECT_EQ(d.entries[0].source, "f0.v");
  EXPECT_EQ(d.entries[1].source, "f1.v");
}

TEST(Dedup, PropertyIdempotentAndUnique) {
  Gen g(11);
  for (int iter = 0; iter < 200; ++iter) {
    Corpus c;
    const int n = g.range(0, 30);
    for (int i = 0; i < n; ++i) c.entries.push_back(make_entry("x.v", g.verilog(6)));
    const auto once = dedup(c);
    const auto twice = dedup(once);
    EXPECT_EQ(once.entries, twice.entries);
    std::set<std::string> hashes;
    for (const auto& e : once.entries) EXPECT_TRUE(hashes.insert(e.content_hash).second);
    std::set<std::string> all;
    for (const auto& e : c.entries) all.insert(e.content_hash);
    EXPECT_EQ(all, hashes);
  }
}

TEST(Truncate, CutsToBudgetAndMarks) {
  auto cfg = unlimited();
  cfg.prompt_token_limit = 100;
  Gateway gw(cfg);
  const std::string prefix(40, 'p');  // 10 tokens
  EXPECT_FALSE(truncate_for_budget(prefix, std::string(360, 'c'), gw).has_value());
  const auto cut = truncate_for_budget(prefix, std::string(1000, 'c'), gw);
  ASSERT_TRUE(cut.has_value());
  EXPECT_TRUE(cut->ends_with(prompts::kTruncationMarker));
  EXPECT_LE(gw.estimate(prefix + *cut), 100u);
  EXPECT_THROW(truncate_for_budget(std::string(400, 'p'), "x", gw), TokenLimitExceeded);
}

TEST(FineGrainLabel, DescribesAndTruncates) {
  auto cfg = unlimited();
  cfg.prompt_token_limit = 200;
  Gateway gw(cfg);
  FixedBackend backend("  A design.  ");
  auto c = dedup(corpus_of({"module a; endmodule", std::string("module big;\n") + std::string(4000, 'x') + "\nendmodule"}));
  const auto out = fine_grain_label(c, gw, backend);
  ASSERT_EQ(out.entries.size(), 2u);
  EXPECT_EQ(out.entries[0].description, "A design.");
  EXPECT_FALSE(out.entries[0].has_flag(flags::kTruncated));
  EXPECT_TRUE(out.entries[1].has_flag(flags::kTruncated));
  for (const auto& p : backend.prompts) {
    EXPECT_TRUE(p.starts_with(prompts::kDescribePreamble));
    EXPECT_LE(gw.estimate(p), 200u);
  }
  EXPECT_EQ(out.last_pipeline_stage(), Stage::FineGrainLabel);
}

TEST(FineGrainLabel, DropsFailuresWithinFraction) {
  Gateway gw(unlimited());
  std::vector<std::string> codes;
  for (int i = 0; i < 20; ++i) codes.push_back("module m" + std::to_string(i) + "; endmodule");
  codes[3] = "module POISON; endmodule";
  FixedBackend backend("desc", "POISON");
  const auto out = fine_grain_label(dedup(corpus_of(codes)), gw, backend);
  EXPECT_EQ(out.entries.size(), 19u);
  EXPECT_EQ(out.provenance.back().params.at("skipped").size(), 1u);

  codes[4] = "module POISON2; endmodule";
  codes[5] = "module POISON3; endmodule";
  EXPECT_THROW(fine_grain_label(dedup(corpus_of(codes)), gw, backend), LabelingFailed);
}

TEST(FineGrainLabel, RequiresDedupWhenDuplicatesPresent) {
  Gateway gw(unlimited());
  FixedBackend backend("d");
  EXPECT_THROW(fine_grain_label(corpus_of({"module a; endmodule", "module a; endmodule"}), gw, backend),
               StageOrderError);
}

TEST(CoarseGrainLabel, ParsesRequeriesAndFallsBack) {
  Gateway gw(unlimited());
  Gen g(1);
  auto c = described(3, g);
  c.provenance.push_back({Stage::FineGrainLabel, "t", json::object()});
  FixedBackend advanced("I think this is ADVANCED.");
  auto out = coarse_grain_label(c, gw, advanced);
  for (const auto& e : out.entries) {
    EXPECT_EQ(e.category, ComplexityCategory::Advanced);
    EXPECT_FALSE(e.has_flag(flags::kFallback));
  }
  EXPECT_TRUE(advanced.prompts.front().starts_with(prompts::kCategorizePreamble));

  FixedBackend confused("no idea");
  out = coarse_grain_label(c, gw, confused);
  EXPECT_EQ(confused.prompts.size(), 6u);  // one re-query each
  for (const auto& e : out.entries) {
    EXPECT_EQ(e.category, ComplexityCategory::Intermediate);
    EXPECT_TRUE(e.has_flag(flags::kFallback));
  }
}

TEST(CoarseGrainLabel, NeedsDescriptions) {
  Gateway gw(unlimited());
  FixedBackend b("Basic");
  EXPECT_THROW(coarse_grain_label(corpus_of({"module a; endmodule"}), gw, b), PreconditionError);
}

TEST(StageOrder, CategorizeBeforeLabelIsRejected) {
  Gateway gw(unlimited());
  FixedBackend b("Basic");
  Corpus c = corpus_of({"module a; endmodule"});
  c.entries[0].description = "x";
  c.provenance.push_back({Stage::Ingest, "t", json::object()});
  EXPECT_THROW(coarse_grain_label(c, gw, b), StageOrderError);
  EXPECT_NO_THROW(require_stage_order(c, Stage::Dedup));
  EXPECT_THROW(require_stage_order(c, Stage::Partition), StageOrderError);
}

TEST(KeywordLabeler, EndToEnd) {
  Gateway gw(unlimited());
  KeywordLabelerBackend labeler;
  auto c = dedup(corpus_of({"module c(input clk, output reg [3:0] q);\n always @(posedge clk) q <= q + 1;\nendmodule",
                            "module w(input a, output y); assign y = a; endmodule"}));
  c = fine_grain_label(c, gw, labeler);
  c = coarse_grain_label(c, gw, labeler);
  ASSERT_EQ(c.entries.size(), 2u);
  for (const auto& e : c.entries) ASSERT_TRUE(e.category.has_value());
  EXPECT_EQ(c.entries[1].category, ComplexityCategory::Basic);
  EXPECT_GE(c.entries[0].category, ComplexityCategory::Advanced);
}

TEST(Partition, DisjointCoverProperty) {
  Gen g(5);
  for (int iter = 0; iter < 200; ++iter) {
    Corpus c = described(static_cast<std::size_t>(g.range(0, 25)), g);
    for (auto& e : c.entries) e.category = g.category();
    const auto p = partition(c);
    ASSERT_EQ(p.size(), 4u);
    std::multiset<std::string> ids;
    for (const auto& [tier, entries] : p) {
      for (const auto& e : entries) {
        EXPECT_EQ(e.category, tier);
        ids.insert(e.id);
      }
    }
    std::multiset<std::string> expected;
    for (const auto& e : c.entries) expected.insert(e.id);
    EXPECT_EQ(ids, expected);
  }
}

TEST(Partition, RejectsUncategorized) {
  Gen g(2);
  auto c = described(2, g);
  c.entries[0].category = ComplexityCategory::Basic;
  EXPECT_THROW(partition(c), UncategorizedEntry);
}

TEST(Corrupt, DerangementProperty) {
  Gen g(9);
  for (int iter = 0; iter < 200; ++iter) {
    const auto c = described(static_cast<std::size_t>(g.range(2, 20)), g);
    const auto out = corrupt_shuffle(c, g.u64());
    ASSERT_EQ(out.entries.size(), c.entries.size());
    std::multiset<std::string> before, after;
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      before.insert(*c.entries[i].description);
      after.insert(*out.entries[i].description);
      EXPECT_NE(out.entries[i].description, c.entries[i].description);
      EXPECT_EQ(out.entries[i].code, c.entries[i].code);
      EXPECT_TRUE(out.entries[i].has_flag(flags::kShuffled));
    }
    EXPECT_EQ(before, after);
  }
}

TEST(Corrupt, DeterministicPerSeed) {
  Gen g(3);
  const auto c = described(10, g);
  EXPECT_EQ(corrupt_shuffle(c, 7).entries, corrupt_shuffle(c, 7).entries);
  EXPECT_NE(corrupt_shuffle(c, 7).entries, corrupt_shuffle(c, 8).entries);
}

TEST(Corrupt, TooSmallAndImpossible) {
  Gen g(4);
  EXPECT_THROW(corrupt_shuffle(described(1, g), 1), TooSmall);
  auto same = described(3, g);
  for (auto& e : same.entries) e.description = "identical";
  EXPECT_THROW(corrupt_shuffle(same, 1), NoDerangement);
}

TEST(ExportLoad, RoundTripProperty) {
  TempDir dir;
  Gen g(21);
  for (int iter = 0; iter < 100; ++iter) {
    Corpus c;
    const int n = g.range(1, 8);
    for (int i = 0; i < n; ++i) {
      auto e = make_entry(g.ident() + ".v", g.text());
      if (g.coin()) e.description = g.text();
      if (e.description && g.coin()) e.category = g.category();
      if (g.coin(0.2)) e.add_flag(flags::kTruncated);
      c.entries.push_back(std::move(e));
    }
    c.provenance.push_back({Stage::Ingest, "2026-01-01T00:00:00Z", json{{"k", iter}}});
    const auto path = dir / "d.jsonl";
    export_corpus(c, path);
    const auto back = load_dataset(path);
    EXPECT_EQ(back.entries, c.entries);
    EXPECT_EQ(back.provenance, c.provenance);
  }
}

TEST(ExportLoad, SchemaErrorsCarryLine) {
  TempDir dir;
  write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"source\":\"a\",\"code\":\"x\",\"token_estimate\":1,\"content_hash\":\"h\"}\nnot json\n");
  try {
    load_dataset(dir / "bad.jsonl");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Manifests, DefaultsPerFamily) {
  EXPECT_EQ(default_hyperparameters("Salesforce/codegen-16B-multi"), (Hyperparameters{5e-5, {1, 5, 10}}));
  EXPECT_EQ(default_hyperparameters("google/gemma-7b"), (Hyperparameters{2e-4, {1, 5, 10, 20}}));
  EXPECT_FALSE(default_hyperparameters("llama").has_value());
}

TEST(Manifests, EmitsFourSlices) {
  TempDir dir;
  Gen g(6);
  Corpus c = described(8, g);
  for (std::size_t i = 0; i < c.entries.size(); ++i) c.entries[i].category = kAllCategories[i % 4];
  const auto ms = emit_manifests(partition(c), "codegen-2B", dir.path());
  ASSERT_EQ(ms.size(), 4u);
  for (const auto& m : ms) {
    EXPECT_TRUE(fs::exists(m.dataset_path));
    EXPECT_EQ(load_dataset(m.dataset_path).entries.size(), 2u);
    const auto j = json::parse(test::read_file(dir / (to_lower(to_string(m.category)) + ".manifest.json")));
    EXPECT_EQ(j.get<FinetuneManifest>(), m);
  }
  EXPECT_THROW(emit_manifests(partition(c), "mystery-model", dir.path()), UnknownBaseModelFamily);
  EXPECT_NO_THROW(emit_manifests(partition(c), "mystery-model", dir.path(), Hyperparameters{1e-4, {2}}));
}

}  // namespace
}  // namespace mev
