#include "mev/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/parallel.hpp"
#include "mev/prompts.hpp"
#include "mev/router.hpp"
#include "mev/text.hpp"

namespace fs = std::filesystem;

namespace mev {

namespace {

constexpr std::size_t kMaxDerangementTries = 10000;

ProvenanceRecord record(Stage stage, json params) {
  return ProvenanceRecord{stage, utc_timestamp(), std::move(params)};
}

bool is_ordered(Stage s) { return s <= Stage::Partition; }

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % bound;
  }
}

std::string read_file(const fs::path& path, bool& ok) {
  std::ifstream in(path, std::ios::binary);
  ok = static_cast<bool>(in);
  if (!ok) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  ok = !in.bad();
  return ss.str();
}

std::string basename_stem(const std::string& source) {
  return fs::path(source).filename().string();
}

std::size_t worker_count(const LabelOptions& options, const Gateway& gateway) {
  return options.concurrency == 0 ? gateway.config().max_in_flight : options.concurrency;
}

void check_failure_fraction(std::size_t failed, std::size_t total, double fraction) {
  if (total == 0) return;
  if (static_cast<double>(failed) > fraction * static_cast<double>(total)) {
    throw LabelingFailed(failed, total);
  }
}

}  // namespace

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Dedup: return "dedup";
    case Stage::FineGrainLabel: return "fine_grain_label";
    case Stage::CoarseGrainLabel: return "coarse_grain_label";
    case Stage::Partition: return "partition";
    case Stage::Corrupt: return "corrupt_shuffle";
    case Stage::Export: return "export";
  }
  return "ingest";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (const auto s : {Stage::Ingest, Stage::Dedup, Stage::FineGrainLabel, Stage::CoarseGrainLabel,
                       Stage::Partition, Stage::Corrupt, Stage::Export}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

std::optional<Stage> Corpus::last_pipeline_stage() const {
  std::optional<Stage> last;
  for (const auto& p : provenance) {
    if (is_ordered(p.stage) && (!last || p.stage > *last)) last = p.stage;
  }
  return last;
}

void require_stage_order(const Corpus& corpus, Stage stage) {
  if (!is_ordered(stage) || stage == Stage::Ingest) return;
  const auto last = corpus.last_pipeline_stage();
  if (!last) return;  // no history; content checks decide
  const auto previous = static_cast<Stage>(static_cast<int>(stage) - 1);
  if (*last != previous && *last != stage) {
    throw StageOrderError("stage " + std::string(to_string(stage)) + " must follow " +
                          std::string(to_string(previous)) + ", but the corpus was last through " +
                          std::string(to_string(*last)));
  }
}

DatasetEntry make_entry(std::string source, std::string code, std::size_t token_divisor) {
  DatasetEntry e;
  e.content_hash = content_hash(code);
  e.id = basename_stem(source) + "-" + e.content_hash.substr(0, 8);
  e.source = std::move(source);
  e.token_estimate = token_estimate(code, token_divisor);
  e.code = std::move(code);
  return e;
}

IngestResult ingest(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("ingest root is not a directory: " + root.string());

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file(ec)) continue;
    const std::string ext = to_lower(it->path().extension().string());
    if (ext == ".v" || ext == ".sv") files.push_back(it->path());
  }
  if (ec) throw IoError("cannot walk " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  IngestResult result;
  std::size_t non_utf8 = 0;
  std::size_t unreadable = 0;
  for (const auto& file : files) {
    const std::string rel = fs::relative(file, root).generic_string();
    bool ok = false;
    std::string code = read_file(file, ok);
    if (!ok) {
      ++unreadable;
      result.skipped.push_back(rel);
      continue;
    }
    if (!utf8_valid(code)) {
      ++non_utf8;
      result.skipped.push_back(rel);
      continue;
    }
    result.corpus.entries.push_back(make_entry(rel, std::move(code)));
  }
  result.warnings = non_utf8 + unreadable;
  if (result.corpus.entries.empty()) {
    throw EmptyCorpus("no readable .v/.sv files under " + root.string());
  }
  result.corpus.provenance.push_back(record(Stage::Ingest, json{{"root", root.generic_string()},
                                                                {"files", files.size()},
                                                                {"entries", result.corpus.entries.size()},
                                                                {"skipped_non_utf8", non_utf8},
                                                                {"skipped_unreadable", unreadable}}));
  return result;
}

Corpus dedup(const Corpus& corpus) {
  require_stage_order(corpus, Stage::Dedup);
  Corpus out;
  out.provenance = corpus.provenance;
  std::unordered_set<std::string> seen;
  for (const auto& e : corpus.entries) {
    if (seen.insert(e.content_hash).second) out.entries.push_back(e);
  }
  out.provenance.push_back(record(Stage::Dedup, json{{"input", corpus.entries.size()},
                                                     {"output", out.entries.size()},
                                                     {"method", "exact-sha256"}}));
  return out;
}

std::optional<std::string> truncate_for_budget(std::string_view fixed_prefix, std::string_view code,
                                               const Gateway& gateway) {
  const auto& cfg = gateway.config();
  std::string full(fixed_prefix);
  full.append(code);
  if (gateway.estimate(full) <= cfg.prompt_token_limit) return std::nullopt;

  const std::size_t fixed = gateway.estimate(fixed_prefix) + gateway.estimate(prompts::kTruncationMarker);
  if (fixed >= cfg.prompt_token_limit) {
    throw TokenLimitExceeded("labeling preamble leaves no room for code under the token limit");
  }
  const std::size_t keep_chars = (cfg.prompt_token_limit - fixed) * cfg.token_divisor;
  std::string cut(utf8_prefix(code, keep_chars));
  cut.append(prompts::kTruncationMarker);
  return cut;
}

Corpus fine_grain_label(const Corpus& corpus, Gateway& gateway, Backend& labeler,
                        const LabelOptions& options) {
  require_stage_order(corpus, Stage::FineGrainLabel);
  if (!corpus.last_pipeline_stage()) {
    std::unordered_set<std::string> hashes;
    for (const auto& e : corpus.entries) {
      if (!hashes.insert(e.content_hash).second) {
        throw StageOrderError("corpus has duplicate entries; run dedup before labeling");
      }
    }
  }

  const std::string prefix = compose_labeling_prompt(prompts::kDescribePreamble, "");
  const std::size_t count = corpus.entries.size();
  std::vector<std::optional<std::string>> descriptions(count);
  std::vector<bool> truncated(count, false);
  std::vector<std::string> errors(count);

  parallel_for(count, worker_count(options, gateway), [&](std::size_t i) {
    const auto& entry = corpus.entries[i];
    try {
      if (trim(entry.code).empty()) throw PreconditionError("entry has no code");
      std::string content = entry.code;
      if (auto cut = truncate_for_budget(prefix, entry.code, gateway)) {
        content = std::move(*cut);
        truncated[i] = true;
      }
      std::string reply = gateway.label_query(labeler, prompts::kDescribePreamble, content,
                                              options.model_name, derive_seed(options.seed, entry.id));
      if (trim(reply).empty()) throw MalformedResponse("empty description");
      descriptions[i] = std::string(trim(reply));
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  Corpus out;
  out.provenance = corpus.provenance;
  json skipped = json::array();
  std::size_t truncated_count = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!descriptions[i]) {
      skipped.push_back(json{{"id", corpus.entries[i].id}, {"error", errors[i]}});
      continue;
    }
    DatasetEntry e = corpus.entries[i];
    e.description = std::move(descriptions[i]);
    if (truncated[i]) {
      e.add_flag(flags::kTruncated);
      ++truncated_count;
    }
    out.entries.push_back(std::move(e));
  }
  check_failure_fraction(skipped.size(), count, options.max_failure_fraction);
  out.provenance.push_back(record(Stage::FineGrainLabel,
                                  json{{"backend", labeler.name()},
                                       {"model", options.model_name},
                                       {"seed", options.seed},
                                       {"token_limit", gateway.config().prompt_token_limit},
                                       {"truncated", truncated_count},
                                       {"skipped", skipped}}));
  return out;
}

std::string categorization_content(std::string_view description, std::string_view code) {
  std::string content(prompts::kDescriptionHeader);
  content.append(description);
  content.append(prompts::kCodeHeader);
  content.append(code);
  return content;
}

Corpus coarse_grain_label(const Corpus& corpus, Gateway& gateway, Backend& labeler,
                          const LabelOptions& options) {
  require_stage_order(corpus, Stage::CoarseGrainLabel);
  for (const auto& e : corpus.entries) {
    if (!e.description || trim(*e.description).empty()) {
      throw PreconditionError("entry " + e.id + " has no description; run fine-grained labeling first");
    }
  }

  const std::size_t count = corpus.entries.size();
  std::vector<std::optional<ComplexityCategory>> tiers(count);
  std::vector<bool> fallback(count, false);
  std::vector<bool> truncated(count, false);
  std::vector<std::string> errors(count);

  parallel_for(count, worker_count(options, gateway), [&](std::size_t i) {
    const auto& entry = corpus.entries[i];
    try {
      const std::string prefix =
          compose_labeling_prompt(prompts::kCategorizePreamble, categorization_content(*entry.description, ""));
      std::string code = entry.code;
      if (auto cut = truncate_for_budget(prefix, entry.code, gateway)) {
        code = std::move(*cut);
        truncated[i] = true;
      }
      const std::string content = categorization_content(*entry.description, code);
      const std::uint64_t seed = derive_seed(options.seed, entry.id);
      for (int attempt = 0; attempt < 2 && !tiers[i]; ++attempt) {
        const std::string reply = gateway.label_query(labeler, prompts::kCategorizePreamble, content,
                                                      options.model_name, seed + static_cast<std::uint64_t>(attempt));
        tiers[i] = parse_tier_response(reply);
      }
      if (!tiers[i]) {
        tiers[i] = ComplexityCategory::Intermediate;
        fallback[i] = true;
      }
    } catch (const Error& e) {
      tiers[i].reset();
      errors[i] = e.what();
    }
  });

  Corpus out;
  out.provenance = corpus.provenance;
  json skipped = json::array();
  std::size_t fallback_count = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!tiers[i]) {
      skipped.push_back(json{{"id", corpus.entries[i].id}, {"error", errors[i]}});
      continue;
    }
    DatasetEntry e = corpus.entries[i];
    e.category = tiers[i];
    if (fallback[i]) {
      e.add_flag(flags::kFallback);
      ++fallback_count;
    }
    if (truncated[i]) e.add_flag(flags::kTruncated);
    out.entries.push_back(std::move(e));
  }
  check_failure_fraction(skipped.size(), count, options.max_failure_fraction);
  out.provenance.push_back(record(Stage::CoarseGrainLabel,
                                  json{{"backend", labeler.name()},
                                       {"model", options.model_name},
                                       {"seed", options.seed},
                                       {"fallback", fallback_count},
                                       {"skipped", skipped}}));
  return out;
}

Partition partition(const Corpus& corpus) {
  require_stage_order(corpus, Stage::Partition);
  Partition out;
  for (const auto c : kAllCategories) out[c];
  for (const auto& e : corpus.entries) {
    if (!e.category) throw UncategorizedEntry("entry " + e.id + " has no category");
    out[*e.category].push_back(e);
  }
  return out;
}

Corpus corrupt_shuffle(const Corpus& corpus, std::uint64_t seed) {
  const std::size_t count = corpus.entries.size();
  if (count < 2) throw TooSmall("corrupt_shuffle needs at least 2 entries, got " + std::to_string(count));
  for (const auto& e : corpus.entries) {
    if (!e.description) throw PreconditionError("entry " + e.id + " has no description");
  }

  std::set<std::pair<std::string_view, std::string_view>> original;
  for (const auto& e : corpus.entries) original.emplace(e.code, *e.description);

  std::mt19937_64 rng(derive_seed(seed, "corrupt_shuffle"));
  std::vector<std::size_t> perm(count);
  std::size_t tries = 0;
  for (;;) {
    if (++tries > kMaxDerangementTries) {
      throw NoDerangement("no description permutation avoids every original pair after " +
                          std::to_string(kMaxDerangementTries) + " tries");
    }
    for (std::size_t i = 0; i < count; ++i) perm[i] = i;
    for (std::size_t i = count - 1; i > 0; --i) {
      std::swap(perm[i], perm[uniform_below(rng, i + 1)]);
    }
    bool ok = true;
    for (std::size_t i = 0; i < count && ok; ++i) {
      ok = perm[i] != i &&
           !original.contains({corpus.entries[i].code, *corpus.entries[perm[i]].description});
    }
    if (ok) break;
  }

  Corpus out;
  out.provenance = corpus.provenance;
  out.entries = corpus.entries;
  for (std::size_t i = 0; i < count; ++i) {
    out.entries[i].description = corpus.entries[perm[i]].description;
    out.entries[i].add_flag(flags::kShuffled);
  }
  out.provenance.push_back(record(Stage::Corrupt, json{{"seed", seed}, {"tries", tries}}));
  return out;
}

fs::path provenance_path(const fs::path& dataset_path) {
  return fs::path(dataset_path.string() + ".provenance.json");
}

void export_dataset(std::span<const DatasetEntry> entries, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : entries) {
    e.validate();
    out << dataset_entry_to_ordered_json(e).dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void export_corpus(const Corpus& corpus, const fs::path& path) {
  export_dataset(corpus.entries, path);
  ordered_json prov = ordered_json::array();
  for (const auto& p : corpus.provenance) {
    ordered_json rec;
    rec["stage"] = std::string(to_string(p.stage));
    rec["timestamp"] = p.timestamp;
    rec["params"] = ordered_json::parse(p.params.dump());
    prov.push_back(std::move(rec));
  }
  std::ofstream out(provenance_path(path), std::ios::trunc);
  if (!out) throw IoError("cannot write " + provenance_path(path).string());
  out << ordered_json{{"provenance", prov}}.dump(2) << '\n';
}

Corpus load_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      corpus.entries.push_back(json::parse(line).get<DatasetEntry>());
    } catch (const std::exception& e) {
      throw SchemaError(line_no, std::string("invalid dataset entry: ") + e.what());
    }
  }

  const fs::path sidecar = provenance_path(path);
  if (fs::exists(sidecar)) {
    std::ifstream pin(sidecar);
    try {
      const json j = json::parse(pin);
      for (const auto& rec : j.at("provenance")) {
        const auto stage = parse_stage(rec.at("stage").get<std::string>());
        if (!stage) throw SchemaError(0, "unknown stage in provenance");
        corpus.provenance.push_back(
            ProvenanceRecord{*stage, rec.value("timestamp", std::string{}), rec.value("params", json::object())});
      }
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(0, "invalid provenance sidecar " + sidecar.string() + ": " + e.what());
    }
  }
  return corpus;
}

std::optional<Hyperparameters> default_hyperparameters(std::string_view base_model) {
  const std::string lower = to_lower(base_model);
  if (lower.find("codegen") != std::string::npos) return Hyperparameters{5e-5, {1, 5, 10}};
  if (lower.find("gemma") != std::string::npos) return Hyperparameters{2e-4, {1, 5, 10, 20}};
  return std::nullopt;
}

void FinetuneManifest::validate() const {
  if (!(learning_rate > 0.0)) throw InvariantViolation("manifest learning_rate must be > 0");
  if (epochs.empty()) throw InvariantViolation("manifest epochs must be non-empty");
  for (const int e : epochs) {
    if (e <= 0) throw InvariantViolation("manifest epochs must be positive");
  }
}

void to_json(json& j, const FinetuneManifest& m) {
  j = json{{"category", m.category},
           {"dataset_path", m.dataset_path},
           {"base_model", m.base_model},
           {"learning_rate", m.learning_rate},
           {"epochs", m.epochs}};
}

void from_json(const json& j, FinetuneManifest& m) {
  FinetuneManifest out;
  out.category = j.at("category").get<ComplexityCategory>();
  out.dataset_path = j.at("dataset_path").get<std::string>();
  out.base_model = j.at("base_model").get<std::string>();
  out.learning_rate = j.at("learning_rate").get<double>();
  out.epochs = j.at("epochs").get<std::vector<int>>();
  out.validate();
  m = std::move(out);
}

std::vector<FinetuneManifest> emit_manifests(const Partition& part, const std::string& base_model,
                                             const fs::path& out_dir,
                                             std::optional<Hyperparameters> overrides) {
  for (const auto c : kAllCategories) {
    if (!part.contains(c)) throw PreconditionError("partition lacks tier " + std::string(to_string(c)));
  }
  const auto hp = overrides ? overrides : default_hyperparameters(base_model);
  if (!hp) {
    throw UnknownBaseModelFamily("base model '" + base_model +
                                 "' is neither CodeGen nor GEMMA; pass explicit hyperparameters");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<FinetuneManifest> manifests;
  for (const auto c : kAllCategories) {
    const std::string tier = to_lower(to_string(c));
    const fs::path slice = out_dir / (tier + ".jsonl");
    export_dataset(part.at(c), slice);

    FinetuneManifest m{c, slice.generic_string(), base_model, hp->learning_rate, hp->epochs};
    m.validate();
    ordered_json j;
    j["category"] = std::string(to_string(c));
    j["dataset_path"] = m.dataset_path;
    j["base_model"] = m.base_model;
    j["learning_rate"] = m.learning_rate;
    j["epochs"] = m.epochs;
    std::ofstream out(out_dir / (tier + ".manifest.json"), std::ios::trunc);
    if (!out) throw IoError("cannot write manifest for " + tier);
    out << j.dump(2) << '\n';
    manifests.push_back(std::move(m));
  }
  return manifests;
}

}  // namespace mev
