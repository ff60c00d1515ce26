// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "eval_fixture.hpp"
#include "mev/dataset.hpp"
#include "mev/errors.hpp"
#include "mev/passk.hpp"
#include "mev/router.hpp"

namespace mev::acceptance {
namespace {

namespace fs = std::filesystem;

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and budgets.
constexpr double kPassKTol = 1e-12;
constexpr auto kExhaustiveBudget = 10s;
constexpr auto kOracleStubBudget = 10s;
constexpr int kMisrouteSeeds = 24;
constexpr double kMisrouteCenter = 25.0;
constexpr double kMisrouteHalfWidth = 10.0;
constexpr int kPropertyCases = 1000;
constexpr auto kVerifyRunTimeout = 2000ms;
constexpr auto kTimeoutSlack = 5s;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double enumerate(int n, int c, int k) {
  const std::uint32_t pass_mask = (1u << c) - 1u;
  std::uint64_t total = 0, hit = 0;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    if (std::popcount(s) != k) continue;
    ++total;
    hit += (s & pass_mask) ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

Verdict passk_exactness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int cases = 0;
  for (int n = 1; n <= 12; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k, ++cases) worst = std::max(worst, std::abs(pass_at_k(n, c, k) - enumerate(n, c, k)));
  const auto took = Clock::now() - t0;
  std::ostringstream d;
  d << cases << " cases, max error " << worst << ", "
    << std::chrono::duration_cast<std::chrono::milliseconds>(took).count() << " ms";
  return {worst <= kPassKTol && took < kExhaustiveBudget, d.str()};
}

Verdict passk_spots() {
  struct Spot {
    int n, c, k;
    double want;
  };
  const Spot spots[] = {{15, 15, 1, 1.0}, {15, 0, 10, 0.0}, {15, 5, 1, 1.0 / 3}, {15, 1, 5, 1.0 / 3}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& s : spots) {
    const double got = pass_at_k(s.n, s.c, s.k);
    ok = ok && std::abs(got - s.want) <= kPassKTol;
    d << "(" << s.n << "," << s.c << "," << s.k << ")=" << got << " ";
  }
  return {ok, d.str()};
}

Verdict table_fidelity() {
  const auto j = json::parse(test::read_file(test::kFixtureDir / "table_histograms.json"));
  const int n = j.at("n");
  std::map<Suite, std::vector<EvalRecord>> per_suite;
  for (const auto& [key, suite] : {std::pair{"machine", Suite::VerilogMachine}, std::pair{"human", Suite::VerilogHuman}}) {
    int id = 0;
    for (const auto& [c, count] : j.at(key).items())
      for (int i = 0; i < count.get<int>(); ++i)
        per_suite[suite].push_back({std::string(key) + std::to_string(id++), n, std::stoi(c), suite, {}, std::nullopt});
  }
  const auto table = build_table(j.at("model"), per_suite, PassKParams{});
  const std::string want = "correct dataset |    15.3    28.6    36.3 |    13.4    25.6    32.6";
  const std::string row = render_row(table);

  PassKTable a, b;
  a.model_label = "a";
  b.model_label = "b";
  a.rows[Suite::VerilogMachine] = {{1, 44.0}};
  b.rows[Suite::VerilogMachine] = {{1, 20.1}};
  const auto delta = format_percent(compare_tables(a, b).max_delta);
  return {row == want && delta == "23.9", "row '" + row + "', delta " + delta};
}

bool all_cells(const PassKTable& t, double v) {
  for (const auto& [s, cells] : t.rows)
    for (const auto& [k, x] : cells)
      if (x != v) return false;
  return !t.rows.empty();
}

Verdict oracle_end_to_end() {
  const auto t0 = Clock::now();
  test::EvalRig oracle("oracle");
  const auto good = oracle.run();
  test::EvalRig broken("broken");
  const auto bad = broken.run();
  const auto took = Clock::now() - t0;
  const bool ok = good.table && bad.table && all_cells(*good.table, 100.0) && all_cells(*bad.table, 0.0) &&
                  took < kOracleStubBudget;
  return {ok, "oracle " + std::string(good.table ? render_row(*good.table) : "-") + "; broken " +
                  std::string(bad.table ? render_row(*bad.table) : "-") + "; " +
                  std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(took).count()) + " ms"};
}

// Two problems per tier copied from the mini-suite.
fs::path balanced_suite(const fs::path& root) {
  const std::set<std::string> pick = {"b01_and_gate", "b02_inverter", "i01_mux4", "i02_adder8",
                                      "a01_counter4", "a02_seq_detector", "e01_accumulator", "e02_alu_register"};
  fs::create_directories(root);
  for (const auto& name : pick) fs::copy(test::kDataDir / "mini_suite" / name, root / name, fs::copy_options::recursive);
  return root;
}

Verdict misroute() {
  test::TempDir dir;
  const auto suite_root = balanced_suite(dir / "balanced");
  test::EvalRig rig("oracle", suite_root);
  std::map<ComplexityCategory, int> tiers;
  for (const auto& p : rig.suite.problems) ++tiers[*p.category];
  bool balanced = tiers.size() == 4;
  for (const auto& [c, count] : tiers) balanced = balanced && count == tiers.begin()->second;

  double sum = 0.0;
  int cells = 0;
  bool always_below = true;
  bool truth_full = true;
  for (int seed = 1; seed <= kMisrouteSeeds; ++seed) {
    rig.config.seed = static_cast<std::uint64_t>(seed);
    const auto m = misroute_experiment(rig.suite, rig.services(), rig.config);
    truth_full = truth_full && all_cells(m.ground_truth, 100.0);
    double seed_sum = 0.0;
    for (const auto& [s, c] : m.random.rows) seed_sum += c.at(1);
    // both tracks hold four problems, so the row mean is the suite mean
    always_below = always_below && seed_sum / static_cast<double>(m.random.rows.size()) < 100.0;
    sum += seed_sum;
    cells += static_cast<int>(m.random.rows.size());
  }
  const double mean = sum / cells;
  std::ostringstream d;
  d << kMisrouteSeeds << " seeds, mean random pass@1 " << format_percent(mean) << " (want " << kMisrouteCenter
    << " +/- " << kMisrouteHalfWidth << "), ground truth 100.0 every seed: " << (truth_full ? "yes" : "no");
  return {balanced && truth_full && always_below && std::abs(mean - kMisrouteCenter) <= kMisrouteHalfWidth, d.str()};
}

Verdict pipeline_properties() {
  test::Gen g(2024);
  int failures = 0;
  for (int i = 0; i < kPropertyCases; ++i) {
    Corpus c;
    const int n = g.range(2, 24);
    for (int e = 0; e < n; ++e) {
      auto entry = make_entry("f" + std::to_string(e) + ".v", g.verilog(8));
      entry.description = "d" + std::to_string(e) + " " + g.text(12);
      entry.category = g.category();
      c.entries.push_back(std::move(entry));
    }
    // dedup: idempotent, unique hashes, same hash set
    const auto once = dedup(c);
    std::set<std::string> hashes, all;
    bool unique = true;
    for (const auto& e : once.entries) unique = unique && hashes.insert(e.content_hash).second;
    for (const auto& e : c.entries) all.insert(e.content_hash);
    if (dedup(once).entries != once.entries || !unique || hashes != all) ++failures;

    // partition: disjoint cover keyed by category
    const auto part = partition(c);
    std::multiset<std::string> ids, want;
    bool keyed = part.size() == 4;
    for (const auto& [tier, entries] : part)
      for (const auto& e : entries) {
        ids.insert(e.id);
        keyed = keyed && e.category == tier;
      }
    for (const auto& e : c.entries) want.insert(e.id);
    if (!keyed || ids != want) ++failures;

    // corrupt (runs after dedup): zero preserved pairs, multiset of descriptions unchanged
    if (once.entries.size() < 2) continue;
    const auto bad = corrupt_shuffle(once, g.u64());
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& e : once.entries) pairs.emplace(e.code, *e.description);
    std::multiset<std::string> before, after;
    bool deranged = bad.entries.size() == once.entries.size();
    for (std::size_t k = 0; k < bad.entries.size() && deranged; ++k) {
      deranged = !pairs.count({bad.entries[k].code, *bad.entries[k].description});
      before.insert(*once.entries[k].description);
      after.insert(*bad.entries[k].description);
    }
    if (!deranged || before != after) ++failures;
  }

  // JSONL round trip
  test::TempDir dir;
  for (int i = 0; i < kPropertyCases; ++i) {
    Corpus c;
    const int n = g.range(1, 6);
    for (int e = 0; e < n; ++e) {
      auto entry = make_entry(g.ident() + ".v", g.text(60));
      if (g.coin()) entry.description = g.text(30);
      if (entry.description && g.coin()) entry.category = g.category();
      if (g.coin(0.2)) entry.add_flag(flags::kTruncated);
      c.entries.push_back(std::move(entry));
    }
    export_corpus(c, dir / "rt.jsonl");
    if (load_dataset(dir / "rt.jsonl").entries != c.entries) ++failures;
  }
  return {failures == 0, std::to_string(kPropertyCases) + " cases per property, " + std::to_string(failures) + " failures"};
}

Verdict verifier_contract() {
  test::TempDir work;
  auto cfg = test::stub_config(work.path(), kVerifyRunTimeout);
  const auto fx = [](const char* name) { return test::read_file(test::kFixtureDir / "verify" / name); };
  const auto good = functional_check(fx("and_good.v"), fx("and_tb.v"), cfg);
  const auto wrong = functional_check(fx("or_wrong.v"), fx("and_tb.v"), cfg);
  const auto broken = syntax_check(fx("no_endmodule.v"), cfg);
  const auto t0 = Clock::now();
  const auto hang = functional_check(fx("and_good.v"), fx("hang_tb.v"), cfg);
  const auto took = Clock::now() - t0;
  const bool ok = good.functional_ok() && wrong.syntax_ok() && !wrong.functional_ok() && !broken.syntax_ok() &&
                  hang.timed_out() && !hang.functional_ok() && took < kVerifyRunTimeout + kTimeoutSlack;
  std::ostringstream d;
  d << "good=" << good.functional_ok() << " wrong(syntax=" << wrong.syntax_ok() << ",func=" << wrong.functional_ok()
    << ") no-endmodule(syntax=" << broken.syntax_ok() << ") hang(timed_out=" << hang.timed_out() << ", "
    << std::chrono::duration_cast<std::chrono::milliseconds>(took).count() << " ms)";
  return {ok, d.str()};
}

Verdict resume_equivalence() {
  test::TempDir dir;
  const auto fixture = dir / "script.jsonl";
  test::write_scripted_fixture(load_suite(test::kDataDir / "mini_suite"), fixture, {"a02_seq_detector"});
  test::EvalRig full("scripted", test::kDataDir / "mini_suite", fixture);
  full.config.run_id = "r";
  const auto reference = full.run();

  bool ok = reference.complete;
  for (const std::size_t cut : {1u, 5u, 9u}) {
    test::EvalRig part("scripted", test::kDataDir / "mini_suite", fixture);
    part.config.run_id = "r";
    part.config.stop_after = cut;
    const auto partial = part.run();
    part.config.stop_after.reset();
    part.config.resume = true;
    const auto resumed = part.run();
    ok = ok && !partial.complete && resumed.complete && resumed.resumed == cut && resumed.records == reference.records &&
         test::read_file(resumed.dir / "records.jsonl") == test::read_file(reference.dir / "records.jsonl") &&
         test::read_file(resumed.dir / "outcomes.jsonl") == test::read_file(reference.dir / "outcomes.jsonl");
  }
  return {ok, "interrupted after 1, 5, 9 problems; records and outcomes identical"};
}

Verdict golden_set() {
  const auto golden = json::parse(test::read_file(test::kFixtureDir / "golden_descriptions.json"));
  int agree = 0;
  std::map<std::string, int> per_tier;
  std::string misses;
  for (const auto& e : golden) {
    const auto want = e.at("tier").get<ComplexityCategory>();
    ++per_tier[e.at("tier")];
    if (classify_heuristic(e.at("description").get<std::string>()) == want) {
      ++agree;
    } else {
      misses += " '" + e.at("description").get<std::string>() + "'";
    }
  }
  bool five_each = per_tier.size() == 4;
  for (const auto& [t, count] : per_tier) five_each = five_each && count == 5;
  return {golden.size() == 20 && five_each && agree == 20,
          std::to_string(agree) + "/" + std::to_string(golden.size()) + " agree" + misses};
}

Verdict manifest_defaults() {
  const auto codegen = default_hyperparameters("Salesforce/codegen-6B-multi");
  const auto gemma = default_hyperparameters("google/gemma-2b");
  const bool ok = codegen && gemma && codegen->learning_rate == 5e-5 && codegen->epochs == std::vector<int>{1, 5, 10} &&
                  gemma->learning_rate == 2e-4 && gemma->epochs == std::vector<int>{1, 5, 10, 20};
  return {ok, "codegen lr 5e-05 epochs {1,5,10}; gemma lr 2e-04 epochs {1,5,10,20}"};
}

}  // namespace
}  // namespace mev::acceptance

int main() {
  using namespace mev::acceptance;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"pass@k matches exhaustive enumeration", passk_exactness},
      {"pass@k spot values", passk_spots},
      {"table row and delta rendering", table_fidelity},
      {"oracle and broken experts end to end", oracle_end_to_end},
      {"random misrouting over seeds", misroute},
      {"dataset pipeline properties", pipeline_properties},
      {"verifier contract on fixtures", verifier_contract},
      {"resume equivalence", resume_equivalence},
      {"keyword classifier golden set", golden_set},
      {"fine-tuning manifest defaults", manifest_defaults},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures;
}
