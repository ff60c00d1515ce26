// mev: dataset pipeline, routing, and evaluation front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mev/backends.hpp"
#include "mev/config.hpp"
#include "mev/dataset.hpp"
#include "mev/errors.hpp"
#include "mev/gateway.hpp"
#include "mev/harness.hpp"
#include "mev/hashing.hpp"
#include "mev/passk.hpp"
#include "mev/registry.hpp"
#include "mev/router.hpp"
#include "mev/suite.hpp"
#include "mev/text.hpp"
#include "mev/verify.hpp"

namespace fs = std::filesystem;

namespace {

int exit_code(mev::ErrorKind kind) {
  switch (kind) {
    case mev::ErrorKind::Config: return 1;
    case mev::ErrorKind::Domain: return 1;
    case mev::ErrorKind::Io: return 2;
    case mev::ErrorKind::Backend: return 2;
    case mev::ErrorKind::Labeling: return 3;
    case mev::ErrorKind::Schema: return 4;
    case mev::ErrorKind::SimulatorMissing: return 5;
  }
  return 1;
}

struct Globals {
  std::string config_path;
  bool config_given = false;
  std::uint64_t seed = 0;
};

mev::AppConfig load_config(const Globals& g) {
  if (g.config_given) return mev::load_app_config(g.config_path);
  if (fs::exists(mev::kDefaultConfigFile)) return mev::load_app_config(std::string(mev::kDefaultConfigFile));
  mev::AppConfig c;
  c.validate();
  return c;
}

fs::path vstub_path() {
  std::error_code ec;
  const fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    const fs::path sibling = self.parent_path() / "vstub";
    if (fs::exists(sibling, ec)) return sibling;
  }
#ifdef MEV_DEFAULT_VSTUB
  return MEV_DEFAULT_VSTUB;
#else
  return "vstub";
#endif
}

std::optional<mev::ComplexityCategory> category_arg(const std::string& s) {
  auto c = mev::parse_category(s);
  if (!c) throw mev::ConfigError("unknown tier '" + s + "' (Basic, Intermediate, Advanced, Expert)");
  return c;
}

// "heuristic" | "model" | "ground-truth" | "random" | "forced:<tier>"
mev::ClassifierConfig make_classifier(const std::string& kind, const mev::AppConfig& cfg, mev::Gateway& gateway,
                                      const mev::BackendContext& ctx, std::uint64_t seed) {
  mev::ClassifierConfig c;
  if (kind == "heuristic") {
    c.mode = mev::ClassifierConfig::Mode::Heuristic;
  } else if (kind == "model") {
    if (cfg.classifier_endpoint.empty()) throw mev::ConfigError("model classifier needs classifier.endpoint");
    c.mode = mev::ClassifierConfig::Mode::Model;
    c.backend = mev::make_backend(cfg.classifier_endpoint, ctx);
    c.model_name = cfg.classifier_model;
    c.gateway = &gateway;
  } else if (kind == "ground-truth") {
    c.mode = mev::ClassifierConfig::Mode::GroundTruth;
  } else if (kind == "random") {
    c.mode = mev::ClassifierConfig::Mode::Random;
    c.random_seed = seed;
  } else if (kind.starts_with("forced:")) {
    c.mode = mev::ClassifierConfig::Mode::Forced;
    c.forced = category_arg(kind.substr(7));
  } else {
    throw mev::ConfigError("unknown classifier '" + kind + "'");
  }
  return c;
}

mev::BackendContext backend_context(const mev::AppConfig& cfg) {
  mev::BackendContext ctx;
  ctx.scripted_fixture = cfg.scripted_fixture;
  ctx.http.api_key_env = cfg.api_key_env;
  return ctx;
}

// ---- dataset ----

struct DatasetOpts {
  std::string root, in, out, out_dir, base_model;
  double max_failure = 0.10;
  std::optional<double> lr;
  std::vector<int> epochs;
};

void print_counts(const mev::Corpus& c, std::size_t warnings) {
  std::cout << c.entries.size() << " entries, " << warnings << " warnings\n";
}

std::size_t count_flag(const mev::Corpus& c, std::string_view flag) {
  std::size_t n = 0;
  for (const auto& e : c.entries) n += e.has_flag(flag);
  return n;
}

void add_dataset(CLI::App& app, Globals& g, DatasetOpts& o) {
  auto* ds = app.add_subcommand("dataset", "Dataset curation stages");
  ds->require_subcommand(1);

  auto* ingest = ds->add_subcommand("ingest", "Collect .v/.sv files into a JSONL corpus");
  ingest->add_option("--root", o.root, "Directory to scan")->required();
  ingest->add_option("--out", o.out, "Output JSONL")->required();
  ingest->callback([&] {
    auto r = mev::ingest(o.root);
    mev::export_corpus(r.corpus, o.out);
    for (const auto& s : r.skipped) std::cerr << "warning: skipped " << s << "\n";
    print_counts(r.corpus, r.warnings);
  });

  auto* dedup = ds->add_subcommand("dedup", "Drop entries whose normalized code repeats");
  dedup->add_option("--in", o.in, "Input JSONL")->required();
  dedup->add_option("--out", o.out, "Output JSONL")->required();
  dedup->callback([&] {
    const auto in = mev::load_dataset(o.in);
    const auto out = mev::dedup(in);
    mev::export_corpus(out, o.out);
    std::cout << out.entries.size() << " entries (" << in.entries.size() - out.entries.size()
              << " duplicates removed), 0 warnings\n";
  });

  auto labeler_options = [&](CLI::App* sub) {
    sub->add_option("--in", o.in, "Input JSONL")->required();
    sub->add_option("--out", o.out, "Output JSONL")->required();
    sub->add_option("--max-failure-fraction", o.max_failure, "Abort past this fraction of failed queries")
        ->capture_default_str();
  };

  auto run_labeler = [&](bool fine) {
    const auto cfg = load_config(g);
    mev::Gateway gateway(cfg.gateway);
    auto labeler = mev::make_backend(cfg.labeler_endpoint, backend_context(cfg));
    mev::LabelOptions lo;
    lo.max_failure_fraction = o.max_failure;
    lo.model_name = cfg.labeler_model;
    lo.seed = mev::derive_seed(g.seed, fine ? "label" : "categorize");
    const auto in = mev::load_dataset(o.in);
    const auto out = fine ? mev::fine_grain_label(in, gateway, *labeler, lo)
                          : mev::coarse_grain_label(in, gateway, *labeler, lo);
    mev::export_corpus(out, o.out);
    const std::size_t warnings = fine ? in.entries.size() - out.entries.size() : count_flag(out, mev::flags::kFallback);
    print_counts(out, warnings);
  };

  auto* label = ds->add_subcommand("label", "Describe every entry with the labeling model");
  labeler_options(label);
  label->callback([=] { run_labeler(true); });

  auto* categorize = ds->add_subcommand("categorize", "Assign a complexity tier to every described entry");
  labeler_options(categorize);
  categorize->callback([=] { run_labeler(false); });

  auto* part = ds->add_subcommand("partition", "Split a categorized corpus into one JSONL per tier");
  part->add_option("--in", o.in, "Input JSONL")->required();
  part->add_option("--out-dir", o.out_dir, "Output directory")->required();
  part->callback([&] {
    const auto in = mev::load_dataset(o.in);
    const auto p = mev::partition(in);
    fs::create_directories(o.out_dir);
    for (const auto& [tier, entries] : p) {
      const fs::path path = fs::path(o.out_dir) / (mev::to_lower(mev::to_string(tier)) + ".jsonl");
      mev::export_dataset(entries, path);
      std::cout << mev::to_string(tier) << ": " << entries.size() << " entries\n";
    }
    print_counts(in, 0);
  });

  auto* corrupt = ds->add_subcommand("corrupt", "Derange descriptions for the erroneous-dataset ablation");
  corrupt->add_option("--in", o.in, "Input JSONL")->required();
  corrupt->add_option("--out", o.out, "Output JSONL")->required();
  corrupt->callback([&] {
    const auto out = mev::corrupt_shuffle(mev::load_dataset(o.in), mev::derive_seed(g.seed, "corrupt"));
    mev::export_corpus(out, o.out);
    print_counts(out, 0);
  });

  auto* exp = ds->add_subcommand("export", "Validate a corpus and write it in canonical form");
  exp->add_option("--in", o.in, "Input JSONL")->required();
  exp->add_option("--out", o.out, "Output JSONL")->required();
  exp->callback([&] {
    const auto c = mev::load_dataset(o.in);
    mev::export_corpus(c, o.out);
    print_counts(c, 0);
  });

  auto* man = ds->add_subcommand("manifests", "Emit per-tier datasets and fine-tuning manifests");
  man->add_option("--in", o.in, "Categorized JSONL")->required();
  man->add_option("--base-model", o.base_model, "Base model name (CodeGen or Gemma family)")->required();
  man->add_option("--out-dir", o.out_dir, "Output directory")->required();
  man->add_option("--lr", o.lr, "Override the learning rate");
  man->add_option("--epochs", o.epochs, "Override the epoch list")->delimiter(',');
  man->callback([&] {
    std::optional<mev::Hyperparameters> over;
    if (o.lr || !o.epochs.empty()) {
      auto base = mev::default_hyperparameters(o.base_model).value_or(mev::Hyperparameters{});
      if (o.lr) base.learning_rate = *o.lr;
      if (!o.epochs.empty()) base.epochs = o.epochs;
      over = base;
    }
    const auto p = mev::partition(mev::load_dataset(o.in));
    const auto ms = mev::emit_manifests(p, o.base_model, o.out_dir, over);
    for (const auto& m : ms) {
      std::cout << mev::to_string(m.category) << ": " << m.dataset_path << " lr=" << m.learning_rate << "\n";
    }
  });
}

// ---- route ----

struct RouteOpts {
  bool heuristic = false;
  std::string force;
  std::string file;
  std::vector<std::string> words;
};

void add_route(CLI::App& app, Globals& g, RouteOpts& o) {
  auto* r = app.add_subcommand("route", "Classify a design description and name the expert it routes to");
  r->add_option("description", o.words, "Description text (or use --file)");
  r->add_flag("--heuristic", o.heuristic, "Use the keyword classifier regardless of configuration");
  r->add_option("--force-category", o.force, "Route every description to this tier");
  r->add_option("--file", o.file, "Read the description from a file");
  r->callback([&] {
    const auto cfg = load_config(g);
    std::string text;
    if (!o.file.empty()) {
      std::ifstream in(o.file, std::ios::binary);
      if (!in) throw mev::IoError("cannot read " + o.file);
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    } else {
      for (std::size_t i = 0; i < o.words.size(); ++i) text += (i ? " " : "") + o.words[i];
    }
    if (mev::trim(text).empty()) throw mev::EmptyDescription("description is empty");

    mev::Gateway gateway(cfg.gateway);
    const auto ctx = backend_context(cfg);
    std::string kind = cfg.classifier;
    if (o.heuristic) kind = "heuristic";
    if (!o.force.empty()) kind = "forced:" + o.force;
    if (kind == "ground-truth" || kind == "random") kind = "heuristic";  // no problem metadata here
    const auto classifier = make_classifier(kind, cfg, gateway, ctx, mev::derive_seed(g.seed, "route"));
    const auto specs = cfg.registry.empty() ? mev::default_mock_registry_specs("echo") : cfg.registry;
    const auto registry = mev::validate_registry(specs);

    mev::Problem p;
    p.id = "cli";
    p.prompt = text;
    mev::json j = mev::route(p, registry, classifier);
    std::cout << j.dump(2) << "\n";
  });
}

// ---- eval ----

struct EvalOpts {
  std::string suite;
  std::string mock;
  std::optional<int> n;
  std::vector<int> ks;
  std::string runs_dir;
  std::string run_id;
  bool resume = false;
  bool stub_sim = false;
  std::string route;
  bool literal = false;
  std::optional<std::size_t> stop_after;
  std::string label = "MEV-LLM";
  std::string fixture;
  std::optional<std::size_t> jobs;
  // report
  std::vector<std::string> compare;
  std::string format = "text";
};

struct EvalSetup {
  mev::AppConfig cfg;
  mev::ProblemSet suite;
  std::optional<mev::ExpertRegistry> registry;
  mev::BackendPool pool;
  mev::BackendContext ctx;
  mev::EvalConfig eval;
};

void common_eval_options(CLI::App* sub, EvalOpts& o, bool routing) {
  sub->add_option("--suite", o.suite, "Problem suite directory (overrides paths.suite)");
  sub->add_option("--mock", o.mock, "Use four mock experts: oracle, broken, echo, or scripted");
  sub->add_option("--fixture", o.fixture, "Scripted mock fixture (overrides paths.scripted_fixture)");
  sub->add_option("--n", o.n, "Samples per problem");
  sub->add_option("--k", o.ks, "pass@k values, comma separated")->delimiter(',');
  sub->add_option("--runs-dir", o.runs_dir, "Run artifact directory (overrides paths.runs_dir)");
  sub->add_option("--run-id", o.run_id, "Run name (default derived from parameters)");
  sub->add_flag("--stub-sim", o.stub_sim, "Verify with the bundled vstub simulator");
  sub->add_flag("--literal-topk", o.literal, "Score pass@k as 'any of the first k samples passed'");
  sub->add_option("--label", o.label, "Model label in the table")->capture_default_str();
  sub->add_option("--jobs", o.jobs, "Problems evaluated concurrently");
  if (routing) {
    sub->add_option("--route", o.route, "Classifier: heuristic, model, ground-truth, random, forced:<tier>");
  }
}

EvalSetup prepare_eval(const Globals& g, const EvalOpts& o) {
  EvalSetup s;
  s.cfg = load_config(g);
  auto& cfg = s.cfg;
  if (!o.suite.empty()) cfg.suite = o.suite;
  if (!o.fixture.empty()) cfg.scripted_fixture = o.fixture;
  if (!o.runs_dir.empty()) cfg.runs_dir = o.runs_dir;
  if (o.n) cfg.eval.n = *o.n;
  if (!o.ks.empty()) cfg.eval.ks = o.ks;
  if (o.jobs) cfg.problem_parallelism = *o.jobs;
  if (o.stub_sim) {
    const auto stub = mev::stub_simulator_config(vstub_path());
    cfg.simulator.compile_cmd = stub.compile_cmd;
    cfg.simulator.run_cmd = stub.run_cmd;
  }
  cfg.validate();
  if (!cfg.suite) throw mev::ConfigError("no suite: pass --suite or set paths.suite");

  s.suite = mev::load_suite(*cfg.suite);
  std::vector<mev::ExpertSpec> specs = cfg.registry;
  if (!o.mock.empty()) specs = mev::default_mock_registry_specs(o.mock);
  if (specs.empty()) throw mev::ConfigError("no expert registry: configure one or pass --mock");
  s.registry.emplace(mev::validate_registry(specs));
  s.ctx = backend_context(cfg);
  s.ctx.oracle_answers = mev::oracle_answers(s.suite);
  s.pool = mev::make_backend_pool(*s.registry, s.ctx);

  s.eval.params = cfg.eval;
  s.eval.seed = g.seed;
  s.eval.model_label = o.label;
  s.eval.estimator = o.literal ? mev::Estimator::LiteralTopK : mev::Estimator::Unbiased;
  s.eval.problem_parallelism = cfg.problem_parallelism;
  s.eval.verify_parallelism = cfg.verify_parallelism;
  s.eval.runs_dir = cfg.runs_dir;
  if (!o.run_id.empty()) s.eval.run_id = o.run_id;
  s.eval.resume = o.resume;
  s.eval.stop_after = o.stop_after;
  return s;
}

std::string render(const std::vector<mev::PassKTable>& tables, const std::string& format) {
  if (format == "csv") return mev::render_csv(tables);
  if (format == "text") return mev::render_text(tables);
  throw mev::ConfigError("unknown format '" + format + "' (text, csv)");
}

void add_eval(CLI::App& app, Globals& g, EvalOpts& o) {
  auto* ev = app.add_subcommand("eval", "Evaluation runs and reports");
  ev->require_subcommand(1);

  auto* run = ev->add_subcommand("run", "Route, generate, verify, and score a suite");
  common_eval_options(run, o, true);
  run->add_flag("--resume", o.resume, "Continue an existing run directory");
  run->add_option("--stop-after", o.stop_after, "Stop after checkpointing this many problems");
  run->add_option("--format", o.format, "Table format: text or csv")->capture_default_str();
  run->callback([&] {
    auto s = prepare_eval(g, o);
    mev::Gateway gateway(s.cfg.gateway);
    const std::string kind = o.route.empty() ? s.cfg.classifier : o.route;
    const auto classifier =
        make_classifier(kind, s.cfg, gateway, s.ctx, mev::derive_seed(g.seed, "route"));
    const mev::EvalServices services{*s.registry, s.pool, classifier, s.cfg.simulator, gateway};
    const auto r = mev::run_eval(s.suite, services, s.eval);
    std::cerr << "run " << r.run_id << " in " << r.dir.string() << ": " << r.records.size() << "/"
              << s.suite.size() << " problems" << (r.resumed ? " (" + std::to_string(r.resumed) + " resumed)" : "")
              << "\n";
    if (r.table) {
      std::cout << render({*r.table}, o.format);
    } else {
      std::cout << "run incomplete: " << r.records.size() << " of " << s.suite.size()
                << " problems checkpointed; rerun with --resume\n";
    }
  });

  auto* rep = ev->add_subcommand("report", "Render the table of a finished run, or compare two runs");
  rep->add_option("--run", o.run_id, "Run id");
  rep->add_option("--compare", o.compare, "Two run ids: A B (prints A - B)")->expected(2);
  rep->add_option("--runs-dir", o.runs_dir, "Run artifact directory (overrides paths.runs_dir)");
  rep->add_option("--format", o.format, "Table format: text or csv")->capture_default_str();
  rep->add_flag("--literal-topk", o.literal, "Score pass@k as 'any of the first k samples passed'");
  rep->callback([&] {
    const auto cfg = load_config(g);
    const fs::path runs = o.runs_dir.empty() ? cfg.runs_dir : fs::path(o.runs_dir);
    const auto est = o.literal ? mev::Estimator::LiteralTopK : mev::Estimator::Unbiased;
    if (!o.compare.empty()) {
      auto a = mev::report(runs, o.compare[0], est).table;
      auto b = mev::report(runs, o.compare[1], est).table;
      a.model_label = o.compare[0];
      b.model_label = o.compare[1];
      const auto d = mev::compare_tables(a, b);
      if (o.format == "csv") {
        std::cout << mev::render_csv(std::vector<mev::PassKTable>{a, b, d.delta});
      } else {
        std::cout << render({a, b}, o.format) << "\n" << mev::render_delta(d);
      }
      return;
    }
    if (o.run_id.empty()) throw mev::ConfigError("pass --run ID or --compare A B");
    const auto r = mev::report(runs, o.run_id, est);
    std::cout << render({r.table}, o.format);
    if (r.failed_problems) std::cerr << r.failed_problems << " of " << r.problems << " problems failed with errors\n";
  });

  auto* mis = ev->add_subcommand("misroute", "Compare ground-truth routing against seeded random routing");
  common_eval_options(mis, o, false);
  mis->callback([&] {
    EvalOpts local = o;
    if (local.mock.empty()) local.mock = "oracle";
    auto s = prepare_eval(g, local);
    mev::Gateway gateway(s.cfg.gateway);
    mev::ClassifierConfig unused;
    const mev::EvalServices services{*s.registry, s.pool, unused, s.cfg.simulator, gateway};
    const auto r = mev::misroute_experiment(s.suite, services, s.eval);
    std::cout << mev::render_text(std::vector<mev::PassKTable>{r.ground_truth, r.random}) << "\n"
              << mev::compare_tables(r.ground_truth, r.random).summary() << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-expert Verilog generation: dataset curation, routing, and pass@k evaluation"};
  app.require_subcommand(1);
  // Global options may follow the subcommand; set before subcommands inherit it.
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file")
                      ->default_str(std::string(mev::kDefaultConfigFile))
                      ->each([&g](const std::string&) { g.config_given = true; });
  app.add_option("--seed", g.seed, "Run seed; every stage derives its own from it")->capture_default_str();

  DatasetOpts dopts;
  RouteOpts ropts;
  EvalOpts eopts;
  add_dataset(app, g, dopts);
  add_route(app, g, ropts);
  add_eval(app, g, eopts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const mev::LabelingFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mev::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
