#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mev/gateway.hpp"
#include "mev/types.hpp"

namespace mev {

// Pipeline stages in their required order; Corrupt and Export sit outside
// the ordering.
enum class Stage : std::uint8_t { Ingest, Dedup, FineGrainLabel, CoarseGrainLabel, Partition, Corrupt, Export };

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view name);

struct ProvenanceRecord {
  Stage stage = Stage::Ingest;
  std::string timestamp;
  json params;

  bool operator==(const ProvenanceRecord&) const = default;
};

struct Corpus {
  std::vector<DatasetEntry> entries;
  std::vector<ProvenanceRecord> provenance;

  // Most advanced ordered stage recorded, if any.
  std::optional<Stage> last_pipeline_stage() const;
};

// Entry flags set by the pipeline.
namespace flags {
inline constexpr std::string_view kTruncated = "truncated";
inline constexpr std::string_view kFallback = "fallback";
inline constexpr std::string_view kShuffled = "shuffled";
}  // namespace flags

struct IngestResult {
  Corpus corpus;
  std::size_t warnings = 0;
  std::vector<std::string> skipped;  // relative paths
};

// One entry per .v / .sv file under root, in sorted path order. Non-UTF-8 and
// unreadable files are skipped with a warning. Throws EmptyCorpus, IoError.
IngestResult ingest(const std::filesystem::path& root);

// Builds an entry the way ingest does.
DatasetEntry make_entry(std::string source, std::string code, std::size_t token_divisor = kDefaultTokenDivisor);

// Collapses equal content hashes, keeping the first-seen entry.
Corpus dedup(const Corpus& corpus);

struct LabelOptions {
  double max_failure_fraction = 0.10;
  std::string model_name;
  std::uint64_t seed = 0;
  // 0 means the gateway's in-flight bound.
  std::size_t concurrency = 0;
};

// Cuts code so that fixed_prefix + code fits the gateway's prompt budget,
// then appends the truncation marker. fixed_prefix is everything the prompt
// carries before the code. Returns nullopt when no cut is needed; throws
// TokenLimitExceeded when the prefix alone leaves no room.
std::optional<std::string> truncate_for_budget(std::string_view fixed_prefix, std::string_view code,
                                               const Gateway& gateway);

// Adds a description to every entry; entries whose query fails are dropped
// and listed in provenance. Throws LabelingFailed past the failure fraction.
Corpus fine_grain_label(const Corpus& corpus, Gateway& gateway, Backend& labeler,
                        const LabelOptions& options = {});

// Content sent for coarse labeling: description section, then code section.
std::string categorization_content(std::string_view description, std::string_view code);

// Assigns a tier to every described entry: parse, one re-query, then the
// Intermediate fallback with a flag.
Corpus coarse_grain_label(const Corpus& corpus, Gateway& gateway, Backend& labeler,
                          const LabelOptions& options = {});

using Partition = std::map<ComplexityCategory, std::vector<DatasetEntry>>;

// Always four keys. Throws UncategorizedEntry.
Partition partition(const Corpus& corpus);

// Seeded derangement of descriptions: no entry ends up with a (code,
// description) pair that existed before. Throws TooSmall, NoDerangement.
Corpus corrupt_shuffle(const Corpus& corpus, std::uint64_t seed);

void export_dataset(std::span<const DatasetEntry> entries, const std::filesystem::path& path);
// JSONL plus "<path>.provenance.json".
void export_corpus(const Corpus& corpus, const std::filesystem::path& path);
// Reads JSONL and, when present, the provenance sidecar. Throws SchemaError
// with the offending line number.
Corpus load_dataset(const std::filesystem::path& path);

std::filesystem::path provenance_path(const std::filesystem::path& dataset_path);

struct Hyperparameters {
  double learning_rate = 0.0;
  std::vector<int> epochs;

  bool operator==(const Hyperparameters&) const = default;
};

// CodeGen family: 5e-5 and {1,5,10}; GEMMA family: 2e-4 and {1,5,10,20}.
std::optional<Hyperparameters> default_hyperparameters(std::string_view base_model);

struct FinetuneManifest {
  ComplexityCategory category = ComplexityCategory::Basic;
  std::string dataset_path;
  std::string base_model;
  double learning_rate = 0.0;
  std::vector<int> epochs;

  void validate() const;
  bool operator==(const FinetuneManifest&) const = default;
};

void to_json(json& j, const FinetuneManifest& m);
void from_json(const json& j, FinetuneManifest& m);

// Writes <tier>.jsonl and <tier>.manifest.json per tier into out_dir.
// Throws UnknownBaseModelFamily.
std::vector<FinetuneManifest> emit_manifests(const Partition& part, const std::string& base_model,
                                             const std::filesystem::path& out_dir,
                                             std::optional<Hyperparameters> overrides = std::nullopt);

// Throws StageOrderError when `stage` may not run on this corpus.
void require_stage_order(const Corpus& corpus, Stage stage);

}  // namespace mev
