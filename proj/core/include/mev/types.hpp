#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mev {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Design-complexity tier. Declaration order is the total order Basic < ... < Expert.
enum class ComplexityCategory : std::uint8_t { Basic, Intermediate, Advanced, Expert };

inline constexpr std::array<ComplexityCategory, 4> kAllCategories = {
    ComplexityCategory::Basic, ComplexityCategory::Intermediate, ComplexityCategory::Advanced,
    ComplexityCategory::Expert};

std::string_view to_string(ComplexityCategory c) noexcept;
// Case-insensitive exact match of a tier name.
std::optional<ComplexityCategory> parse_category(std::string_view name);
ComplexityCategory category_from_string(std::string_view name);  // throws SchemaError

enum class Suite : std::uint8_t { VerilogMachine, VerilogHuman };

inline constexpr std::array<Suite, 2> kAllSuites = {Suite::VerilogMachine, Suite::VerilogHuman};

// "Verilog-Machine" / "Verilog-Human"
std::string_view to_string(Suite s) noexcept;
// "machine" / "human", the spelling used in problem meta.json files.
std::string_view suite_key(Suite s) noexcept;
// Accepts either spelling, case-insensitive.
std::optional<Suite> parse_suite(std::string_view name);

struct DatasetEntry {
  std::string id;
  std::string source;
  std::string code;
  std::optional<std::string> description;
  std::optional<ComplexityCategory> category;
  std::size_t token_estimate = 0;
  std::string content_hash;
  std::vector<std::string> flags;

  bool has_flag(std::string_view flag) const;
  void add_flag(std::string_view flag);
  // category present => description present
  void validate() const;

  bool operator==(const DatasetEntry&) const = default;
};

struct Problem {
  std::string id;
  Suite suite = Suite::VerilogHuman;
  std::string prompt;
  std::string testbench;
  std::optional<std::string> reference_solution;
  // Ground-truth tier when the suite declares one.
  std::optional<ComplexityCategory> category;

  void validate() const;
  bool operator==(const Problem&) const = default;
};

struct SamplingParams {
  double temperature = 0.8;
  double top_p = 0.95;
  int max_tokens = 1024;

  void validate() const;
  bool operator==(const SamplingParams&) const = default;
};

struct GenerationSample {
  std::string problem_id;
  int sample_index = 0;
  std::string expert_id;
  ComplexityCategory category = ComplexityCategory::Basic;
  std::string code;
  double latency_ms = 0.0;

  bool operator==(const GenerationSample&) const = default;
};

// Syntax/functional verdict for one sample. Constructed only through the
// factories, which reject functional_ok without syntax_ok and timed_out with
// functional_ok.
class VerifyOutcome {
 public:
  static VerifyOutcome make(bool syntax_ok, bool functional_ok, std::string detail, bool timed_out);
  static VerifyOutcome syntax_failure(std::string detail, bool timed_out = false);
  static VerifyOutcome functional_failure(std::string detail, bool timed_out = false);
  static VerifyOutcome passed(std::string detail = {});

  bool syntax_ok() const noexcept { return syntax_ok_; }
  bool functional_ok() const noexcept { return functional_ok_; }
  bool timed_out() const noexcept { return timed_out_; }
  const std::string& detail() const noexcept { return detail_; }

  bool operator==(const VerifyOutcome&) const = default;

 private:
  VerifyOutcome(bool syntax_ok, bool functional_ok, std::string detail, bool timed_out)
      : syntax_ok_(syntax_ok), functional_ok_(functional_ok), timed_out_(timed_out),
        detail_(std::move(detail)) {}

  bool syntax_ok_;
  bool functional_ok_;
  bool timed_out_;
  std::string detail_;
};

struct EvalRecord {
  std::string problem_id;
  int n = 0;
  int c = 0;
  std::optional<Suite> suite;
  // Per-sample pass flags in sample_index order; empty when unknown.
  std::vector<bool> sample_passes;
  std::optional<std::string> error;

  void validate() const;  // n >= 1, 0 <= c <= n, sample_passes consistent with c
  bool operator==(const EvalRecord&) const = default;
};

struct PassKTable {
  std::string model_label;
  std::map<Suite, std::map<int, double>> rows;  // suite -> k -> percentage

  bool operator==(const PassKTable&) const = default;
};

struct ExpertSpec {
  std::string expert_id;
  ComplexityCategory category = ComplexityCategory::Basic;
  std::string endpoint;
  std::string model_name;
  SamplingParams sampling;
  // Whether the backend honours n > 1 in one request.
  bool supports_n = true;

  bool operator==(const ExpertSpec&) const = default;
};

void to_json(json& j, ComplexityCategory c);
void from_json(const json& j, ComplexityCategory& c);
void to_json(json& j, Suite s);
void from_json(const json& j, Suite& s);
void to_json(json& j, const SamplingParams& p);
void from_json(const json& j, SamplingParams& p);
void to_json(json& j, const DatasetEntry& e);
void from_json(const json& j, DatasetEntry& e);
void to_json(json& j, const Problem& p);
void from_json(const json& j, Problem& p);
void to_json(json& j, const GenerationSample& s);
void from_json(const json& j, GenerationSample& s);
void to_json(json& j, const EvalRecord& r);
void from_json(const json& j, EvalRecord& r);
void to_json(json& j, const PassKTable& t);
void from_json(const json& j, PassKTable& t);
void to_json(json& j, const ExpertSpec& e);
void from_json(const json& j, ExpertSpec& e);

// Dataset JSONL line in its fixed key order.
ordered_json dataset_entry_to_ordered_json(const DatasetEntry& e);

}  // namespace mev

namespace nlohmann {
template <>
struct adl_serializer<mev::VerifyOutcome> {
  static void to_json(json& j, const mev::VerifyOutcome& o);
  static mev::VerifyOutcome from_json(const json& j);
};
}  // namespace nlohmann
