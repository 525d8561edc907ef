// archgen: operator CLI for prompt construction, generation campaigns,
// deduplication checks, statistics and registry maintenance.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "archgen/codecheck.hpp"
#include "archgen/config.hpp"
#include "archgen/dedup.hpp"
#include "archgen/error.hpp"
#include "archgen/fileio.hpp"
#include "archgen/latency.hpp"
#include "archgen/log.hpp"
#include "archgen/pipeline.hpp"
#include "archgen/registry.hpp"
#include "archgen/report.hpp"
#include "archgen/synth.hpp"
#include "archgen/trainer.hpp"

namespace fs = std::filesystem;
using namespace archgen;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config_path;
  std::string store_dir;
  std::string out_dir;
  int verbose = 0;
  bool quiet = false;
};

Config load_config(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty())
    if (const char* env = std::getenv("ARCHGEN_CONFIG")) path = env;
  Config c = path.empty() ? Config{} : Config::load(path);
  if (!g.store_dir.empty()) c.store_dir = g.store_dir;
  if (!g.out_dir.empty()) c.output_dir = g.out_dir;
  return c;
}

fs::path output_dir(const Config& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) throw StorageError("cannot create output directory " + c.output_dir.string() + ": " + ec.message());
  return c.output_dir;
}

void emit(const fs::path& file, const std::string& content) {
  write_file_atomic(file, content);
  log::info("cli", "wrote " + file.string());
}

std::shared_ptr<gen::Transport> make_transport(const Config& c) {
  switch (c.llm.mode) {
    case LlmMode::Http: return std::make_shared<gen::HttpTransport>();
    case LlmMode::Mock: {
      auto t = std::make_shared<gen::MockTransport>();
      t->load_fixture(*c.llm.mock_fixture);
      return t;
    }
    case LlmMode::Synthetic: {
      auto t = std::make_shared<gen::MockTransport>();
      t->set_fallback(pipeline::synthetic_responder());
      return t;
    }
  }
  throw std::logic_error("unhandled llm mode");
}

std::unique_ptr<train::Trainer> make_trainer(const Config& c) {
  if (c.trainer.mode == TrainerMode::Worker)
    return std::make_unique<train::WorkerTrainer>(c.trainer.url, std::chrono::seconds(c.trainer.timeout_s));
  return std::make_unique<train::MockTrainer>();
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string dataset;
  int n = 3;
  std::size_t count = 10;
  std::uint64_t seed = 0;
};

int cmd_generate(const Globals& g, const GenerateArgs& a) {
  if (a.n < 1 || a.n > 6) throw ArgumentError("--n must be in 1..6 (number of supporting models), got " + std::to_string(a.n));
  Config c = load_config(g);
  const fs::path out = output_dir(c);
  Registry store(c.store_dir);
  gen::GenClient client(make_transport(c), c.llm.params, {}, c.llm.replay_log);
  auto trainer = make_trainer(c);
  pipeline::PipelineConfig pc = c.pipeline;
  pc.run_log = out / "run_log.jsonl";
  std::optional<fsap::PromptTemplate> custom;
  if (c.template_path) custom = fsap::PromptTemplate::from_file(c.template_path->string());
  pipeline::Pipeline pipe(store, client, *trainer, c.datasets, pc, custom ? *custom : fsap::PromptTemplate::builtin());

  const pipeline::PipelineReport report = pipe.run_campaign(a.dataset, a.n, a.count, a.seed);
  emit(out / "report.json", report.to_json().dump(2) + "\n");
  emit(out / "report.csv", report.to_csv());
  emit(out / "report.txt", report.to_text());
  if (!g.quiet) std::cout << report.to_text();
  return report.identities_hold() ? 0 : kExitFailure;
}

int cmd_seed(const Globals& g, const std::string& fixture) {
  Config c = load_config(g);
  Registry store(c.store_dir);
  const std::size_t inserted = pipeline::seed_registry(store, fixture);
  if (!g.quiet) std::cout << "inserted " << inserted << " of fixture " << fixture << " (store now " << store.size() << ")\n";
  return 0;
}

struct StatsArgs {
  std::string input;
  std::string baseline = "alt-nn1";
  std::optional<std::size_t> min_samples;
  std::optional<double> alpha;
  bool student = false;
};

int cmd_stats(const Globals& g, const StatsArgs& a) {
  Config c = load_config(g);
  const stats::AccuracyTable table = stats::AccuracyTable::load_csv(a.input);
  if (table.empty()) throw MissingDataError("no accuracy records in " + a.input);
  stats::ReportOptions opts{c.stats.min_samples, c.stats.alpha, c.stats.test};
  if (a.min_samples) opts.min_samples = *a.min_samples;
  if (a.alpha) opts.alpha = *a.alpha;
  if (a.student) opts.test = stats::TTest::Student;
  const stats::StatsReport r = stats::build_report(table, a.baseline, opts);

  const fs::path out = output_dir(c);
  emit(out / "overall.csv", r.overall_csv);
  emit(out / "overall.txt", r.overall_text);
  emit(out / "per_dataset.csv", r.per_dataset_csv);
  emit(out / "per_dataset.txt", r.per_dataset_text);
  emit(out / "significance.csv", r.significance_csv);
  emit(out / "significance.txt", r.significance_text);
  std::string skipped = "dataset,variant,reason\n";
  for (const auto& s : r.skipped) skipped += s.dataset + "," + s.variant + ",\"" + s.reason + "\"\n";
  emit(out / "skipped.csv", skipped);
  if (!g.quiet)
    std::cout << "Overall\n" << r.overall_text << "\nPer dataset\n" << r.per_dataset_text << "\nSignificant comparisons\n"
              << r.significance_text;
  return 0;
}

int cmd_check(const Globals& g, const std::string& file) {
  Config c = load_config(g);
  const std::string code = read_file(file);
  const codecheck::ValidationReport v = codecheck::validate(code);
  for (const auto& viol : v.violations)
    std::cout << "INVALID " << codecheck::rule_id(viol.rule) << (viol.line ? " line " + std::to_string(viol.line) : "")
              << ": " << viol.message << "\n";
  const NnId id = dedup::digest_of(code);
  std::optional<Registry> store;
  if (fs::exists(c.store_dir)) store.emplace(c.store_dir);
  if (store && store->contains(id)) std::cout << "REJECT duplicate of " << id << "\n";
  else std::cout << "ACCEPT unique " << id << "\n";
  if (!v.passed) std::cout << "validation failed (" << v.violations.size() << " violation(s))\n";
  return 0;
}

// A corpus is a directory of files, a line-delimited file of {"code": ...}
// objects, or a single source file.
std::vector<std::string> load_corpus(const std::string& path) {
  if (!fs::exists(path)) throw ArgumentError("corpus path does not exist: " + path);
  std::vector<std::string> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(read_file(f));
  } else if (fs::path(path).extension() == ".jsonl") {
    const std::string text = read_file(path);
    std::size_t line = 0, pos = 0;
    while (pos < text.size()) {
      const std::size_t nl = std::min(text.find('\n', pos), text.size());
      const std::string row = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line;
      if (row.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.push_back(nlohmann::json::parse(row).at("code").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, line, e.what());
      }
    }
  } else {
    out.push_back(read_file(path));
  }
  if (out.empty()) throw ArgumentError("corpus is empty: " + path);
  return out;
}

int cmd_bench(const Globals& g, const std::string& corpus_path, std::size_t synthetic, std::uint64_t seed) {
  Config c = load_config(g);
  std::vector<std::string> corpus;
  if (!corpus_path.empty()) corpus = load_corpus(corpus_path);
  else if (synthetic > 0) corpus = synth::corpus(synthetic, seed);
  else throw ArgumentError("bench needs --corpus PATH or --synthetic COUNT");
  const dedup::LatencyReport r = dedup::benchmark_latency(corpus);
  const fs::path out = output_dir(c);
  emit(out / "bench.csv", r.to_csv());
  emit(out / "bench.txt", r.to_text());
  if (!g.quiet) std::cout << r.to_text();
  return 0;
}

int cmd_synth(const Globals& g, const std::string& file, std::size_t count, std::uint64_t seed, std::size_t bytes,
              bool variants) {
  std::string text;
  const auto originals = synth::corpus(count, seed, bytes);
  for (const auto& code : originals) text += nlohmann::json{{"code", code}}.dump() + "\n";
  if (variants)
    for (std::size_t i = 0; i < originals.size(); ++i)
      text += nlohmann::json{{"code", synth::mutate_whitespace(originals[i], seed ^ (i + 1))}}.dump() + "\n";
  write_file_atomic(file, text);
  if (!g.quiet) std::cout << "wrote " << originals.size() * (variants ? 2 : 1) << " samples to " << file << "\n";
  return 0;
}

int cmd_export(const Globals& g, const std::string& file) {
  Config c = load_config(g);
  Registry store(c.store_dir);
  store.export_to(file);
  if (!g.quiet) std::cout << "exported " << store.size() << " records to " << file << "\n";
  return 0;
}

int cmd_import(const Globals& g, const std::string& file) {
  Config c = load_config(g);
  Registry store(c.store_dir);
  const std::size_t added = store.import_from(file);
  if (!g.quiet) std::cout << "imported " << added << " new records (store now " << store.size() << ")\n";
  return 0;
}

int cmd_show_config(const Globals& g) {
  std::cout << load_config(g).to_json().dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM-driven architecture generation with few-shot prompting and hash deduplication"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file (default: $ARCHGEN_CONFIG, else built-in defaults)");
  app.add_option("--store", g.store_dir, "registry directory (overrides config)");
  app.add_option("--out", g.out_dir, "output directory for reports (overrides config)");
  app.add_flag("-v,--verbose", g.verbose, "more logging (repeatable)");
  app.add_flag("-q,--quiet", g.quiet, "print nothing on success");

  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "run a generation campaign");
  generate->add_option("--dataset", gen_args.dataset, "dataset name")->required();
  generate->add_option("--n", gen_args.n, "supporting models per prompt, 1..6");
  generate->add_option("--count", gen_args.count, "generation slots");
  generate->add_option("--seed", gen_args.seed, "selection seed");

  std::string seed_fixture = std::string(ARCHGEN_ASSET_DIR) + "/seed_models.jsonl";
  auto* seed = app.add_subcommand("seed", "insert seed architectures into the registry");
  seed->add_option("--fixture", seed_fixture, "line-delimited seed file")->capture_default_str();

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "balanced means and significance tables");
  stats_cmd->add_option("--input", stats_args.input, "CSV with variant,dataset,accuracy header")->required();
  stats_cmd->add_option("--baseline", stats_args.baseline, "baseline variant")->capture_default_str();
  stats_cmd->add_option("--min-samples", stats_args.min_samples, "exclude variants with fewer samples");
  stats_cmd->add_option("--alpha", stats_args.alpha, "significance level");
  stats_cmd->add_flag("--student", stats_args.student, "pooled-variance t-test instead of Welch");

  std::string check_file;
  auto* check = app.add_subcommand("check", "validate a code file and test it for uniqueness");
  check->add_option("file", check_file, "source file")->required();

  std::string corpus;
  std::size_t bench_synthetic = 0;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench", "dedup latency against a full-parse baseline");
  bench->add_option("--corpus", corpus, "directory, .jsonl file or single file");
  bench->add_option("--synthetic", bench_synthetic, "generate this many samples instead");
  bench->add_option("--seed", bench_seed, "seed for --synthetic");

  std::string synth_file;
  std::size_t synth_count = 1000, synth_bytes = 3000;
  std::uint64_t synth_seed = 1;
  bool synth_variants = false;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus as line-delimited JSON");
  synth_cmd->add_option("--file", synth_file, "output file")->required();
  synth_cmd->add_option("--count", synth_count, "distinct samples")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "seed")->capture_default_str();
  synth_cmd->add_option("--bytes", synth_bytes, "approximate sample size")->capture_default_str();
  synth_cmd->add_flag("--variants", synth_variants, "append one whitespace variant per sample");

  std::string export_file, import_file;
  auto* exp = app.add_subcommand("export", "write every record to a line-delimited file");
  exp->add_option("--file", export_file, "output file")->required();
  auto* imp = app.add_subcommand("import", "insert records from an export file");
  imp->add_option("--file", import_file, "input file")->required()->check(CLI::ExistingFile);

  auto* show = app.add_subcommand("show-config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  log::set_level(g.quiet ? log::Level::Error
                 : g.verbose >= 2 ? log::Level::Debug
                 : g.verbose == 1 ? log::Level::Info
                                  : log::Level::Warn);
  try {
    if (*generate) return cmd_generate(g, gen_args);
    if (*seed) return cmd_seed(g, seed_fixture);
    if (*stats_cmd) return cmd_stats(g, stats_args);
    if (*check) return cmd_check(g, check_file);
    if (*bench) return cmd_bench(g, corpus, bench_synthetic, bench_seed);
    if (*synth_cmd) return cmd_synth(g, synth_file, synth_count, synth_seed, synth_bytes, synth_variants);
    if (*exp) return cmd_export(g, export_file);
    if (*imp) return cmd_import(g, import_file);
    if (*show) return cmd_show_config(g);
  } catch (const ArgumentError& e) {
    std::cerr << "archgen: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "archgen: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
