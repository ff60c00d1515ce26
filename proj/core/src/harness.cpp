#include "mev/harness.hpp"

#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/parallel.hpp"

namespace fs = std::filesystem;

namespace mev {

namespace {

constexpr std::string_view kParamsFile = "params.json";
constexpr std::string_view kRecordsFile = "records.jsonl";
constexpr std::string_view kOutcomesFile = "outcomes.jsonl";
constexpr std::string_view kRequestsFile = "requests.jsonl";
constexpr std::string_view kRoutingFile = "routing.jsonl";
constexpr std::string_view kStateFile = "state.json";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

// Complete JSONL lines; a torn final line (no trailing newline or not JSON)
// is dropped.
std::vector<json> read_jsonl_prefix(const fs::path& path) {
  std::vector<json> lines;
  std::error_code ec;
  if (!fs::exists(path, ec)) return lines;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    ++lineno;
    if (nl == std::string::npos) break;  // torn tail
    const std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) {
      try {
        lines.push_back(json::parse(line));
      } catch (const json::exception& e) {
        if (nl + 1 >= text.size()) break;  // torn final line
        throw SchemaError(lineno, path.string() + ": " + e.what());
      }
    }
    pos = nl + 1;
  }
  return lines;
}

std::string jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

std::string sample_file_name(int index) { return std::to_string(index) + ".v"; }

// Result of one problem, ready to checkpoint.
struct ProblemResult {
  EvalRecord record;
  std::vector<GenerationSample> samples;
  std::vector<json> outcome_lines;
  json request_line;
  std::optional<RoutingDecision> decision;
};

ProblemResult evaluate_problem(const Problem& problem, const EvalServices& s, const EvalConfig& cfg) {
  ProblemResult out;
  out.record.problem_id = problem.id;
  out.record.n = cfg.params.n;
  out.record.suite = problem.suite;
  try {
    const RoutingDecision decision = route(problem, s.registry, s.classifier);
    out.decision = decision;
    const std::string prompt = build_generation_prompt(problem);
    out.request_line = json{{"problem_id", problem.id},
                            {"expert_id", decision.expert_id},
                            {"prompt_sha256", sha256_hex(prompt)},
                            {"prompt", prompt}};

    const auto backend = s.backends.find(decision.expert_id);
    if (backend == s.backends.end() || !backend->second) {
      throw ConfigError("no backend for expert " + decision.expert_id);
    }
    out.samples = generate(problem, decision, s.registry, s.gateway, *backend->second, cfg.params.n,
                           derive_seed(cfg.seed, "generate:" + problem.id));

    const std::map<std::string, Problem> one{{problem.id, problem}};
    const auto outcomes = verify_batch(out.samples, one, s.simulator, cfg.verify_parallelism);
    out.record.sample_passes.assign(out.samples.size(), false);
    for (const auto& sample : out.samples) {
      const SampleKey key{problem.id, sample.sample_index};
      const VerifyOutcome& o = outcomes.at(key);
      out.outcome_lines.push_back(outcome_line(key, o));
      out.record.sample_passes[static_cast<std::size_t>(sample.sample_index)] = o.functional_ok();
    }
    out.record.c = static_cast<int>(
        std::count(out.record.sample_passes.begin(), out.record.sample_passes.end(), true));
  } catch (const SimulatorMissing&) {
    throw;
  } catch (const Error& e) {
    out.record.c = 0;
    out.record.sample_passes.assign(static_cast<std::size_t>(cfg.params.n), false);
    out.record.error = e.what();
    std::cerr << "warning: problem " << problem.id << " failed: " << e.what() << "\n";
  }
  out.record.validate();
  return out;
}

class Checkpointer {
 public:
  Checkpointer(fs::path dir, std::string run_id, std::vector<std::string> order,
               std::map<std::string, EvalRecord> done, std::optional<std::size_t> stop_after)
      : dir_(std::move(dir)), run_id_(std::move(run_id)), order_(std::move(order)),
        done_(std::move(done)), stop_after_(stop_after), routing_(dir_ / kRoutingFile) {}

  bool stopped() const {
    std::lock_guard lock(mu_);
    return stop_after_ && written_ >= *stop_after_;
  }

  void commit(const ProblemResult& r) {
    std::lock_guard lock(mu_);
    if (stop_after_ && written_ >= *stop_after_) return;  // the process is "dead"

    if (r.decision) routing_.append(*r.decision);
    const fs::path sample_dir = dir_ / "samples" / r.record.problem_id;
    fs::create_directories(sample_dir);
    for (const auto& s : r.samples) write_atomic(sample_dir / sample_file_name(s.sample_index), s.code);
    append(kOutcomesFile, jsonl(r.outcome_lines));
    if (!r.request_line.is_null()) append(kRequestsFile, r.request_line.dump() + "\n");
    // The record line is written last: it is what marks the problem done.
    append(kRecordsFile, json(r.record).dump() + "\n");
    done_[r.record.problem_id] = r.record;
    ++written_;
    write_state();
  }

  void write_state() const {
    json completed = json::array();
    json pending = json::array();
    for (const auto& id : order_) (done_.count(id) ? completed : pending).push_back(id);
    write_atomic(dir_ / kStateFile,
                 json{{"run_id", run_id_}, {"completed", completed}, {"pending", pending}}.dump(2) + "\n");
  }

  const std::map<std::string, EvalRecord>& done() const { return done_; }

 private:
  void append(std::string_view file, const std::string& text) {
    if (text.empty()) return;
    std::ofstream out(dir_ / file, std::ios::binary | std::ios::app);
    out << text;
    out.flush();
    if (!out) throw IoError("cannot append to " + (dir_ / file).string());
  }

  fs::path dir_;
  std::string run_id_;
  std::vector<std::string> order_;
  std::map<std::string, EvalRecord> done_;
  std::optional<std::size_t> stop_after_;
  std::size_t written_ = 0;
  RoutingAuditLog routing_;
  mutable std::mutex mu_;
};

// Loads finished problems and trims artifacts of unfinished ones.
std::map<std::string, EvalRecord> recover(const fs::path& dir) {
  const auto record_lines = read_jsonl_prefix(dir / kRecordsFile);
  std::map<std::string, EvalRecord> done;
  for (const auto& line : record_lines) {
    EvalRecord r;
    try {
      r = line.get<EvalRecord>();
    } catch (const json::exception& e) {
      throw SchemaError(0, (dir / kRecordsFile).string() + ": " + e.what());
    }
    done[r.problem_id] = r;
  }
  write_atomic(dir / kRecordsFile, jsonl(record_lines));

  auto keep_done = [&](std::string_view file) {
    auto lines = read_jsonl_prefix(dir / file);
    std::vector<json> kept;
    for (auto& l : lines) {
      if (l.contains("problem_id") && done.count(l["problem_id"].get<std::string>())) kept.push_back(l);
    }
    write_atomic(dir / file, jsonl(kept));
  };
  keep_done(kOutcomesFile);
  keep_done(kRequestsFile);
  keep_done(kRoutingFile);
  return done;
}

// Canonical order: suite order, each problem's outcomes by sample index.
void finalize(const fs::path& dir, const std::vector<std::string>& order,
              const std::map<std::string, EvalRecord>& done) {
  std::vector<json> records;
  for (const auto& id : order) records.push_back(json(done.at(id)));
  write_atomic(dir / kRecordsFile, jsonl(records));

  auto sort_by_problem = [&](std::string_view file, bool by_index) {
    auto lines = read_jsonl_prefix(dir / file);
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    std::stable_sort(lines.begin(), lines.end(), [&](const json& a, const json& b) {
      const auto ra = rank[a.value("problem_id", "")];
      const auto rb = rank[b.value("problem_id", "")];
      if (ra != rb) return ra < rb;
      return by_index && a.value("sample_index", 0) < b.value("sample_index", 0);
    });
    write_atomic(dir / file, jsonl(lines));
  };
  sort_by_problem(kOutcomesFile, true);
  sort_by_problem(kRequestsFile, false);
  sort_by_problem(kRoutingFile, false);
}

std::map<Suite, std::vector<EvalRecord>> split_by_suite(const std::vector<EvalRecord>& records) {
  std::map<Suite, std::vector<EvalRecord>> out;
  for (const auto& r : records) out[r.suite.value_or(Suite::VerilogHuman)].push_back(r);
  return out;
}

}  // namespace

json run_params(const ProblemSet& suite, const EvalServices& services, const EvalConfig& config) {
  json ids = json::array();
  for (const auto& p : suite.problems) ids.push_back(p.id);
  json sampling = json::object();
  for (const auto& e : services.registry.experts()) sampling[e.expert_id] = e.sampling;
  return json{{"model_label", config.model_label},
              {"passk", config.params},
              {"seed", config.seed},
              {"registry_digest", services.registry.digest()},
              {"classifier", services.classifier.describe()},
              {"pass_marker", services.simulator.pass_marker},
              {"reuse_identical_samples", services.simulator.reuse_identical_samples},
              {"sampling", sampling},
              {"problems", ids}};
}

std::string default_run_id(const json& params) { return "run-" + sha256_hex(params.dump()).substr(0, 12); }

RunResult run_eval(const ProblemSet& suite, const EvalServices& services, const EvalConfig& config) {
  config.params.validate();
  if (suite.problems.empty()) throw PreconditionError("suite is empty");
  if (config.problem_parallelism == 0 || config.verify_parallelism == 0) {
    throw ConfigError("parallelism must be positive");
  }
  require_simulator(services.simulator);

  const json params = run_params(suite, services, config);
  RunResult result;
  result.run_id = config.run_id.value_or(default_run_id(params));
  result.dir = config.runs_dir / result.run_id;

  std::map<std::string, EvalRecord> done;
  std::error_code ec;
  if (fs::exists(result.dir / kParamsFile, ec)) {
    if (!config.resume) {
      throw ConfigError("run " + result.run_id + " already exists; pass resume to continue it");
    }
    const json stored = json::parse(read_file(result.dir / kParamsFile));
    if (stored != params) {
      throw ConfigError("run " + result.run_id + " was started with different parameters");
    }
    done = recover(result.dir);
  } else {
    fs::create_directories(result.dir / "samples", ec);
    if (ec) throw IoError("cannot create run directory " + result.dir.string() + ": " + ec.message());
    write_atomic(result.dir / kParamsFile, params.dump(2) + "\n");
  }

  std::vector<std::string> order;
  std::vector<const Problem*> todo;
  for (const auto& p : suite.problems) {
    order.push_back(p.id);
    if (done.count(p.id)) {
      ++result.resumed;
    } else {
      todo.push_back(&p);
    }
  }

  Checkpointer checkpoints(result.dir, result.run_id, order, std::move(done), config.stop_after);
  checkpoints.write_state();
  parallel_for(todo.size(), config.problem_parallelism, [&](std::size_t i) {
    if (checkpoints.stopped()) return;
    checkpoints.commit(evaluate_problem(*todo[i], services, config));
  });

  for (const auto& id : order) {
    if (const auto it = checkpoints.done().find(id); it != checkpoints.done().end()) {
      result.records.push_back(it->second);
    }
  }
  result.complete = result.records.size() == order.size();
  if (result.complete) {
    finalize(result.dir, order, checkpoints.done());
    result.table = build_table(config.model_label, split_by_suite(result.records), config.params,
                               config.estimator, true);
  }
  return result;
}

std::vector<EvalRecord> load_run_records(const fs::path& runs_dir, const std::string& run_id) {
  const fs::path dir = runs_dir / run_id;
  std::error_code ec;
  if (!fs::exists(dir / kParamsFile, ec)) throw UnknownRun("no run named " + run_id + " in " + runs_dir.string());
  const auto lines = read_jsonl_prefix(dir / kRecordsFile);
  std::vector<EvalRecord> records;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      records.push_back(lines[i].get<EvalRecord>());
    } catch (const json::exception& e) {
      throw SchemaError(i + 1, (dir / kRecordsFile).string() + ": " + e.what());
    }
  }
  return records;
}

RunReport report(const fs::path& runs_dir, const std::string& run_id, Estimator estimator) {
  const auto records = load_run_records(runs_dir, run_id);
  if (records.empty()) throw EmptyRecords("run " + run_id + " has no finished problems");
  const json params = json::parse(read_file(runs_dir / run_id / kParamsFile));
  RunReport out;
  out.table = build_table(params.value("model_label", run_id), split_by_suite(records),
                          params.at("passk").get<PassKParams>(), estimator, true);
  out.problems = records.size();
  for (const auto& r : records) out.failed_problems += r.error ? 1 : 0;
  return out;
}

MisrouteResult misroute_experiment(const ProblemSet& suite, const EvalServices& services,
                                   const EvalConfig& config) {
  for (const auto& p : suite.problems) {
    if (!p.category) throw MissingGroundTruth("problem " + p.id + " has no category in meta.json");
  }
  auto run_with = [&](ClassifierConfig classifier, const std::string& label) {
    EvalServices s{services.registry, services.backends, classifier, services.simulator, services.gateway};
    EvalConfig c = config;
    c.model_label = label;
    c.stop_after.reset();
    c.run_id = config.run_id.value_or(default_run_id(run_params(suite, services, config))) + "-" + label;
    c.resume = true;
    auto r = run_eval(suite, s, c);
    return *r.table;
  };
  ClassifierConfig truth;
  truth.mode = ClassifierConfig::Mode::GroundTruth;
  ClassifierConfig random;
  random.mode = ClassifierConfig::Mode::Random;
  random.random_seed = config.seed;
  return {run_with(truth, "ground-truth"), run_with(random, "random")};
}

std::shared_ptr<const std::map<std::string, OracleExpertBackend::Answer>> oracle_answers(
    const ProblemSet& suite) {
  auto answers = std::make_shared<std::map<std::string, OracleExpertBackend::Answer>>();
  for (const auto& p : suite.problems) {
    if (!p.reference_solution) continue;
    (*answers)[p.id] = OracleExpertBackend::Answer{*p.reference_solution, p.category};
  }
  return answers;
}

}  // namespace mev
