#include "archgen/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "archgen/codecheck.hpp"
#include "archgen/dedup.hpp"
#include "archgen/error.hpp"
#include "archgen/fileio.hpp"
#include "archgen/log.hpp"
#include "archgen/md5.hpp"
#include "archgen/random.hpp"
#include "archgen/synth.hpp"

namespace archgen::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

void PipelineConfig::validate() const {
  if (pool_size < 2) throw ArgumentError("pool_size must be >= 2");
  if (!(hours_per_training >= 0.0)) throw ArgumentError("hours_per_training must be >= 0");
  if (concurrency < 1) throw ArgumentError("concurrency must be >= 1");
  if (slot_attempts < 1) throw ArgumentError("slot_attempts must be >= 1");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1 || subset_size < batch_size)
    throw ArgumentError("need subset_size >= batch_size >= 1");
}

// ---------------------------------------------------------------------------
// Report

bool PipelineReport::identities_hold() const {
  return requested == generated_ok + extraction_failures + generation_failures &&
         generated_ok == validation_failures + duplicates_rejected + trained + training_failures + stored_untrained &&
         gpu_hours_saved == static_cast<double>(duplicates_rejected) * hours_per_training &&
         accepted.size() == trained + training_failures + stored_untrained;
}

namespace {

ordered_json latency_json(const LatencySummary& s) {
  ordered_json j;
  j["count"] = s.count;
  j["mean_ms"] = s.mean_ms;
  j["median_ms"] = s.median_ms;
  j["p99_ms"] = s.p99_ms;
  j["min_ms"] = s.min_ms;
  j["max_ms"] = s.max_ms;
  return j;
}

// Counter fields in report order; shared by the JSON, CSV and text writers.
std::vector<std::pair<const char*, std::size_t>> counters(const PipelineReport& r) {
  return {{"requested", r.requested},
          {"generated_ok", r.generated_ok},
          {"generation_failures", r.generation_failures},
          {"extraction_failures", r.extraction_failures},
          {"validation_failures", r.validation_failures},
          {"duplicates_rejected", r.duplicates_rejected},
          {"trained", r.trained},
          {"training_failures", r.training_failures},
          {"stored_untrained", r.stored_untrained}};
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

ordered_json PipelineReport::to_json() const {
  ordered_json j;
  j["dataset"] = dataset;
  j["n"] = n;
  j["seed"] = seed;
  j["slots"] = slots;
  for (const auto& [k, v] : counters(*this)) j[k] = v;
  j["hours_per_training"] = hours_per_training;
  j["gpu_hours_saved"] = gpu_hours_saved;
  j["wall_time_s"] = wall_time_s;
  j["identities_hold"] = identities_hold();
  ordered_json stages = ordered_json::object();
  for (const auto& [k, v] : stage_latency) stages[k] = latency_json(v);
  j["stage_latency"] = std::move(stages);
  json ids = json::array();
  for (const auto& id : accepted) ids.push_back(id.str());
  j["accepted"] = std::move(ids);
  return j;
}

std::string PipelineReport::to_csv() const {
  std::ostringstream head, row;
  head << "dataset,n,seed,slots";
  row << dataset << ',' << n << ',' << seed << ',' << slots;
  for (const auto& [k, v] : counters(*this)) {
    head << ',' << k;
    row << ',' << v;
  }
  head << ",hours_per_training,gpu_hours_saved,wall_time_s\n";
  row << ',' << fmt(hours_per_training) << ',' << fmt(gpu_hours_saved) << ',' << fmt(wall_time_s, "%.3f") << '\n';
  return head.str() + row.str();
}

std::string PipelineReport::to_text() const {
  std::ostringstream os;
  os << "campaign " << dataset << " alt-nn" << n << " seed " << seed << ", " << slots << " slots\n";
  for (const auto& [k, v] : counters(*this)) {
    char line[96];
    std::snprintf(line, sizeof line, "  %-22s %8zu\n", k, v);
    os << line;
  }
  os << "  gpu_hours_saved        " << fmt(gpu_hours_saved, "%8.1f") << "  (" << fmt(hours_per_training)
     << " h per training)\n";
  os << "  identities             " << (identities_hold() ? "hold" : "VIOLATED") << '\n';
  os << "  stage latency (ms)     median      p99\n";
  for (const auto& [k, v] : stage_latency) {
    char line[128];
    std::snprintf(line, sizeof line, "    %-20s %8.3f %8.3f\n", k.c_str(), v.median_ms, v.p99_ms);
    os << line;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Campaign

namespace {

enum class Outcome { Pending, GenerationFailed, ExtractionFailed, Invalid, Duplicate, Trained, TrainFailed, Untrained };

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Pending: return "pending";
    case Outcome::GenerationFailed: return "generation-failed";
    case Outcome::ExtractionFailed: return "extraction-failed";
    case Outcome::Invalid: return "invalid";
    case Outcome::Duplicate: return "duplicate";
    case Outcome::Trained: return "trained";
    case Outcome::TrainFailed: return "train-failed";
    case Outcome::Untrained: return "stored-untrained";
  }
  return "?";
}

struct Job {
  std::size_t slot = 0;
  int attempt = 0;
  std::string request_id;
  std::optional<fsap::PromptBundle> bundle;
  std::string code;
  codecheck::ValidationReport validation;
  std::optional<NnId> id;
  std::optional<train::TrainResult> result;
  std::string error;
  Outcome outcome = Outcome::Pending;
  double prompt_ms = 0, generate_ms = 0, validate_ms = 0, dedup_ms = 0, train_ms = 0;
  std::size_t http_attempts = 0;
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Runs fn(i) for i in [0, count) on up to `width` threads; rethrows the
// first failure after every task has finished.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t width, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (width <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(width, count); ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) guarded(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::int64_t system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Pipeline::Pipeline(Registry& store, const gen::GenClient& client, train::Trainer& trainer,
                   std::vector<fsap::DatasetSpec> catalog, PipelineConfig config, const fsap::PromptTemplate& tmpl)
    : store_(store),
      client_(client),
      trainer_(trainer),
      catalog_(std::move(catalog)),
      config_(std::move(config)),
      tmpl_(tmpl) {
  config_.validate();
  if (!config_.clock) config_.clock = system_now;
}

std::string Pipeline::request_id(std::string_view dataset, int n, std::uint64_t seed, std::size_t slot,
                                 int attempt) {
  std::ostringstream os;
  os << dataset << "/alt-nn" << n << "/s" << seed << "/slot" << slot << "/a" << attempt;
  return os.str();
}

PipelineReport Pipeline::run_campaign(std::string_view dataset_name, int n, std::size_t count, std::uint64_t seed) {
  const Variant variant(n);
  const fsap::DatasetSpec& dataset = fsap::find_dataset(catalog_, dataset_name);
  const auto started = Clock::now();

  PipelineReport report;
  report.dataset = dataset.name;
  report.n = n;
  report.seed = seed;
  report.slots = count;
  report.hours_per_training = config_.hours_per_training;

  std::vector<double> prompt_ms, generate_ms, validate_ms, dedup_ms, train_ms;
  std::optional<std::ofstream> run_log;
  if (config_.run_log) {
    run_log.emplace(*config_.run_log, std::ios::app);
    if (!*run_log) throw StorageError("cannot open run log " + config_.run_log->string());
  }
  std::atomic<bool> trainer_down{false};
  const fsap::PromptTemplate::Options opts{config_.strict_prompt};

  std::deque<std::pair<std::size_t, int>> pending;
  for (std::size_t s = 0; s < count; ++s) pending.emplace_back(s, 0);

  while (!pending.empty()) {
    std::vector<Job> wave;
    while (!pending.empty() && wave.size() < config_.concurrency) {
      auto [slot, attempt] = pending.front();
      pending.pop_front();
      Job& job = wave.emplace_back();
      job.slot = slot;
      job.attempt = attempt;
      job.request_id = request_id(dataset.name, n, seed, slot, attempt);
    }

    // Prompts, serially and in slot order, against the registry as of wave start.
    for (Job& job : wave) {
      const auto t0 = Clock::now();
      const std::uint64_t job_seed = mix_seed(seed, job.slot * 64 + static_cast<std::uint64_t>(job.attempt));
      job.bundle = fsap::make_bundle(store_, dataset, n, job_seed, tmpl_, opts, config_.pool_size);
      job.prompt_ms = ms_since(t0);
    }

    // Generation, extraction and validation in parallel.
    parallel_for(wave.size(), config_.concurrency, [&](std::size_t i) {
      Job& job = wave[i];
      auto t0 = Clock::now();
      std::string text;
      try {
        gen::GenerationResult res = client_.generate(job.bundle->prompt_text, job.request_id);
        job.http_attempts = res.attempts.size();
        text = std::move(res.text);
      } catch (const GenerationUnavailable& e) {
        job.generate_ms = ms_since(t0);
        job.outcome = Outcome::GenerationFailed;
        job.error = e.what();
        return;
      }
      job.generate_ms = ms_since(t0);

      t0 = Clock::now();
      std::optional<std::string> code = gen::try_extract_code(text);
      if (!code) {
        job.outcome = Outcome::ExtractionFailed;
        job.error = "no code block or class/import line in completion";
        return;
      }
      job.code = std::move(*code);
      job.validation = codecheck::validate(job.code);
      job.validate_ms = ms_since(t0);
      if (!job.validation.passed) {
        job.outcome = Outcome::Invalid;
        for (const auto& v : job.validation.violations) {
          if (!job.error.empty()) job.error += "; ";
          job.error += codecheck::rule_id(v.rule) + " " + v.message;
        }
      }
    });

    // Dedup and insert, serially and in slot order, so duplicates within one
    // wave resolve the same way regardless of completion order.
    for (Job& job : wave) {
      if (job.outcome != Outcome::Pending) continue;
      const auto t0 = Clock::now();
      ModelRecord rec = ModelRecord::from_code(job.code, dataset.name, variant, config_.clock());
      rec.reference_id = job.bundle->reference.nn_id;
      for (const auto& s : job.bundle->supporting) rec.supporting_ids.push_back(s.nn_id);
      job.id = rec.nn_id;
      if (dedup::check_unique(job.code, store_) == dedup::Decision::Reject ||
          store_.insert(rec) == InsertResult::RejectedDuplicate) {
        job.outcome = Outcome::Duplicate;
      }
      job.dedup_ms = ms_since(t0);
    }

    // Training of accepted records in parallel. Only freshly inserted ids get
    // here, so no stored id is ever dispatched twice.
    std::vector<Job*> accepted;
    for (Job& job : wave)
      if (job.outcome == Outcome::Pending) accepted.push_back(&job);
    parallel_for(accepted.size(), config_.concurrency, [&](std::size_t i) {
      Job& job = *accepted[i];
      if (trainer_down.load()) {
        job.outcome = Outcome::Untrained;
        return;
      }
      train::TrainRequest req{*job.id, job.code, dataset.name, config_.epochs, config_.batch_size,
                              config_.device, config_.subset_size};
      const auto t0 = Clock::now();
      try {
        job.result = trainer_.train(req);
      } catch (const TrainerUnavailable& e) {
        if (!trainer_down.exchange(true))
          log::warn("pipeline", std::string("trainer unavailable, storing untrained: ") + e.what());
        job.outcome = Outcome::Untrained;
        job.error = e.what();
        return;
      }
      job.train_ms = ms_since(t0);
      if (job.result->status == train::TrainStatus::Ok) {
        job.outcome = Outcome::Trained;
      } else {
        job.outcome = Outcome::TrainFailed;
        job.error = job.result->error;
      }
    });

    // Bookkeeping, serially and in slot order.
    for (Job& job : wave) {
      ++report.requested;
      prompt_ms.push_back(job.prompt_ms);
      if (job.outcome != Outcome::GenerationFailed) generate_ms.push_back(job.generate_ms);
      if (job.outcome != Outcome::GenerationFailed && job.outcome != Outcome::ExtractionFailed) ++report.generated_ok;
      if (!job.code.empty()) validate_ms.push_back(job.validate_ms);
      if (job.id) dedup_ms.push_back(job.dedup_ms);
      if (job.result) train_ms.push_back(job.train_ms);

      switch (job.outcome) {
        case Outcome::GenerationFailed: ++report.generation_failures; break;
        case Outcome::ExtractionFailed: ++report.extraction_failures; break;
        case Outcome::Invalid: ++report.validation_failures; break;
        case Outcome::Duplicate: ++report.duplicates_rejected; break;
        case Outcome::Trained:
          store_.update_accuracy(*job.id, *job.result->accuracy);
          ++report.trained;
          break;
        case Outcome::TrainFailed: ++report.training_failures; break;
        case Outcome::Untrained: ++report.stored_untrained; break;
        case Outcome::Pending: throw std::logic_error("slot left pending");
      }
      const bool stored = job.outcome == Outcome::Trained || job.outcome == Outcome::TrainFailed ||
                          job.outcome == Outcome::Untrained;
      if (stored) report.accepted.push_back(*job.id);

      const bool rejected = !stored;
      if (rejected && job.attempt + 1 < config_.slot_attempts) pending.emplace_back(job.slot, job.attempt + 1);

      if (run_log) {
        ordered_json ev;
        ev["request_id"] = job.request_id;
        ev["slot"] = job.slot;
        ev["attempt"] = job.attempt;
        ev["outcome"] = outcome_name(job.outcome);
        ev["reference_id"] = job.bundle->reference.nn_id.str();
        ev["supporting"] = job.bundle->supporting.size();
        ev["http_attempts"] = job.http_attempts;
        if (job.id) ev["nn_id"] = job.id->str();
        if (job.result && job.result->accuracy) ev["accuracy"] = *job.result->accuracy;
        if (!job.error.empty()) ev["error"] = job.error;
        ev["latency_ms"] = {{"prompt", job.prompt_ms},
                            {"generate", job.generate_ms},
                            {"validate", job.validate_ms},
                            {"dedup", job.dedup_ms},
                            {"train", job.train_ms}};
        *run_log << ev.dump() << '\n';
        run_log->flush();
      }
      log::debug("pipeline", job.request_id + " " + outcome_name(job.outcome));
    }
  }

  report.gpu_hours_saved = static_cast<double>(report.duplicates_rejected) * report.hours_per_training;
  report.stage_latency["prompt"] = summarize(std::move(prompt_ms));
  report.stage_latency["generate"] = summarize(std::move(generate_ms));
  report.stage_latency["validate"] = summarize(std::move(validate_ms));
  report.stage_latency["dedup"] = summarize(std::move(dedup_ms));
  report.stage_latency["train"] = summarize(std::move(train_ms));
  report.wall_time_s = std::chrono::duration<double>(Clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Seeding

std::size_t seed_registry_text(Registry& store, std::string_view text, const std::string& source) {
  // Parse everything first so a bad line leaves the store untouched.
  std::vector<ModelRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw ArgumentError("expected an object");
      for (const auto& key : {"dataset", "code", "accuracy"})
        if (!j.contains(key)) throw ArgumentError(std::string("missing field '") + key + "'");
      std::optional<Variant> variant;
      if (j.contains("variant") && !j["variant"].is_null()) {
        variant = Variant::parse(j["variant"].get<std::string>());
        if (!variant) throw ArgumentError("unknown variant " + j["variant"].dump());
      }
      ModelRecord rec = ModelRecord::from_code(j["code"].get<std::string>(), j["dataset"].get<std::string>(),
                                               variant, j.value("created_at", std::int64_t{0}));
      const double acc = j["accuracy"].get<double>();
      if (!(acc >= 0.0 && acc <= 1.0)) throw ArgumentError("accuracy must lie in [0,1]");
      rec.accuracy = acc;
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  std::size_t inserted = 0;
  for (const auto& r : records)
    if (store.insert(r) == InsertResult::Inserted) ++inserted;
  return inserted;
}

std::size_t seed_registry(Registry& store, const std::filesystem::path& fixture) {
  return seed_registry_text(store, read_file(fixture), fixture.string());
}

// ---------------------------------------------------------------------------

gen::MockTransport::Responder synthetic_responder(std::size_t target_bytes) {
  return [target_bytes](std::string_view prompt, std::string_view request_id) {
    const Md5::Digest d = Md5::of(std::string(request_id) + '\n' + std::string(prompt));
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | d[static_cast<std::size_t>(i)];
    if (seed % 5 == 0) {
      // The main model is the first fenced block of the prompt.
      if (auto main = gen::try_extract_code(prompt))
        return "Improved version:\n\n" + gen::fence(synth::mutate_whitespace(*main, seed)) + "\n";
    }
    return synth::completion(seed, target_bytes);
  };
}

}  // namespace archgen::pipeline
