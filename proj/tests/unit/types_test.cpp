#include <gtest/gtest.h>

#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/registry.hpp"
#include "mev/text.hpp"
#include "mev/types.hpp"
#include "test_support.hpp"

namespace mev {
namespace {

TEST(Category, TotalOrderFollowsDeclaration) {
  EXPECT_LT(ComplexityCategory::Basic, ComplexityCategory::Intermediate);
  EXPECT_LT(ComplexityCategory::Intermediate, ComplexityCategory::Advanced);
  EXPECT_LT(ComplexityCategory::Advanced, ComplexityCategory::Expert);
}

TEST(Category, ParseIsCaseInsensitiveExact) {
  EXPECT_EQ(parse_category("advanced"), ComplexityCategory::Advanced);
  EXPECT_EQ(parse_category("EXPERT"), ComplexityCategory::Expert);
  EXPECT_FALSE(parse_category("Advanced tier").has_value());
  EXPECT_THROW(category_from_string("Hard"), SchemaError);
  for (const auto c : kAllCategories) EXPECT_EQ(parse_category(to_string(c)), c);
}

TEST(Suite, BothSpellingsParse) {
  EXPECT_EQ(parse_suite("machine"), Suite::VerilogMachine);
  EXPECT_EQ(parse_suite("Verilog-Human"), Suite::VerilogHuman);
  EXPECT_EQ(to_string(Suite::VerilogMachine), "Verilog-Machine");
  EXPECT_EQ(suite_key(Suite::VerilogHuman), "human");
  EXPECT_FALSE(parse_suite("robot").has_value());
}

TEST(DatasetEntry, CategoryRequiresDescription) {
  DatasetEntry e;
  e.id = "x";
  e.category = ComplexityCategory::Basic;
  EXPECT_THROW(e.validate(), InvariantViolation);
  e.description = "a wire";
  EXPECT_NO_THROW(e.validate());
}

TEST(DatasetEntry, FlagsAreASet) {
  DatasetEntry e;
  e.add_flag("truncated");
  e.add_flag("truncated");
  EXPECT_EQ(e.flags.size(), 1u);
  EXPECT_TRUE(e.has_flag("truncated"));
  EXPECT_FALSE(e.has_flag("fallback"));
}

TEST(DatasetEntry, OrderedJsonKeyOrder) {
  DatasetEntry e;
  e.id = "a";
  e.source = "a.v";
  e.code = "module a; endmodule";
  e.description = "d";
  e.category = ComplexityCategory::Expert;
  e.token_estimate = 5;
  e.content_hash = "h";
  std::vector<std::string> keys;
  const auto ordered = dataset_entry_to_ordered_json(e);
  for (const auto& [k, _] : ordered.items()) keys.push_back(k);
  const std::vector<std::string> expected = {"id", "source", "code", "description", "category",
                                             "token_estimate", "content_hash", "flags"};
  EXPECT_EQ(keys, expected);
  EXPECT_EQ(json(e).get<DatasetEntry>(), e);
}

TEST(VerifyOutcome, FactoriesEnforceImplications) {
  EXPECT_THROW(VerifyOutcome::make(false, true, "", false), InvariantViolation);
  EXPECT_THROW(VerifyOutcome::make(true, true, "", true), InvariantViolation);
  const auto p = VerifyOutcome::passed("ok");
  EXPECT_TRUE(p.syntax_ok());
  EXPECT_TRUE(p.functional_ok());
  const auto f = VerifyOutcome::functional_failure("bad", true);
  EXPECT_TRUE(f.syntax_ok());
  EXPECT_FALSE(f.functional_ok());
  EXPECT_TRUE(f.timed_out());
  EXPECT_EQ(json(f).get<VerifyOutcome>(), f);
}

TEST(EvalRecord, ValidateBounds) {
  EvalRecord r{"p", 3, 2, Suite::VerilogHuman, {true, false, true}, std::nullopt};
  EXPECT_NO_THROW(r.validate());
  EXPECT_EQ(json(r).get<EvalRecord>(), r);
  r.c = 4;
  EXPECT_THROW(r.validate(), DomainError);
  r.c = 1;
  EXPECT_THROW(r.validate(), DomainError);  // disagrees with the flags
  r.n = 0;
  EXPECT_THROW(r.validate(), DomainError);
}

TEST(SamplingParams, Validate) {
  SamplingParams p;
  EXPECT_NO_THROW(p.validate());
  p.top_p = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.max_tokens = 0;
  EXPECT_THROW(p.validate(), ConfigError);
}

std::vector<ExpertSpec> specs() { return default_mock_registry_specs("echo"); }

TEST(Registry, ExactCoverRequired) {
  auto s = specs();
  const auto reg = validate_registry(s);
  for (const auto c : kAllCategories) EXPECT_EQ(reg.expert_for(c).category, c);

  auto missing = s;
  missing.pop_back();
  EXPECT_THROW(validate_registry(missing), MissingCategory);

  auto dup = s;
  dup.push_back(s[0]);
  dup.back().expert_id = "other";
  EXPECT_THROW(validate_registry(dup), DuplicateCategory);

  auto bad = s;
  bad[1].endpoint = "ftp://host";
  EXPECT_THROW(validate_registry(bad), MalformedEndpoint);

  EXPECT_THROW(validate_registry(std::vector<ExpertSpec>{}), PreconditionError);
}

TEST(Registry, DigestStableAndSensitive) {
  auto s = specs();
  const auto a = validate_registry(s).digest();
  std::reverse(s.begin(), s.end());
  EXPECT_EQ(validate_registry(s).digest(), a);
  s[0].model_name = "changed";
  EXPECT_NE(validate_registry(s).digest(), a);
}

TEST(Registry, EndpointGrammar) {
  EXPECT_TRUE(is_valid_endpoint("http://localhost:8080/v1/completions"));
  EXPECT_TRUE(is_valid_endpoint("https://api.example.com"));
  EXPECT_TRUE(is_valid_endpoint("mock://oracle/basic"));
  EXPECT_FALSE(is_valid_endpoint("localhost:8080"));
  EXPECT_FALSE(is_valid_endpoint("http://host:70000/"));
  EXPECT_FALSE(is_valid_endpoint("http:///path"));
}

// Known-answer vectors from the published algorithm definitions.
TEST(Hashing, KnownAnswers) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Hashing, NormalizationIgnoresLineEndingsAndTrailingSpace) {
  EXPECT_EQ(content_hash("a  \r\nb\t\n"), content_hash("a\nb\n"));
  EXPECT_NE(content_hash("a\nb"), content_hash("a b"));
  EXPECT_EQ(normalize_code("x \r\ny"), "x\ny");
}

TEST(Hashing, DerivedSeedsDifferByLabel) {
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_EQ(derive_seed(7, "x"), derive_seed(7, "x"));
}

TEST(Text, TokenEstimateCountsCodePoints) {
  EXPECT_EQ(token_estimate(""), 0u);
  EXPECT_EQ(token_estimate("abcd"), 1u);
  EXPECT_EQ(token_estimate("abcde"), 2u);
  EXPECT_EQ(token_estimate("\xC3\xA9\xC3\xA9\xC3\xA9"), 1u);  // 3 code points, 6 bytes
  EXPECT_EQ(token_estimate(std::string(16384, 'x')), 4096u);
  EXPECT_EQ(token_estimate(std::string(16385, 'x')), 4097u);
}

TEST(Text, Utf8Helpers) {
  EXPECT_TRUE(utf8_valid("\xE2\x86\x92"));
  EXPECT_FALSE(utf8_valid("\xC3"));
  EXPECT_EQ(utf8_length("a\xE2\x86\x92z"), 3u);
  EXPECT_EQ(utf8_prefix("a\xE2\x86\x92z", 2), "a\xE2\x86\x92");
  EXPECT_EQ(trim("  x \n"), "x");
  EXPECT_EQ(to_lower("AbC"), "abc");
}

TEST(Errors, KindsMapToClasses) {
  EXPECT_EQ(SimulatorMissing("x").kind(), ErrorKind::SimulatorMissing);
  EXPECT_EQ(LabelingFailed(2, 10).kind(), ErrorKind::Labeling);
  EXPECT_EQ(SchemaError(3, "bad").line(), 3u);
  EXPECT_EQ(KExceedsN("p", 10, 5).problem_id(), "p");
  EXPECT_EQ(MissingTestbench("q").problem_id(), "q");
}

}  // namespace
}  // namespace mev
