#include "archgen/registry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "archgen/dedup.hpp"
#include "archgen/error.hpp"
#include "archgen/fileio.hpp"

namespace archgen {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kJournal = "records.jsonl";

NnId id_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  auto id = NnId::parse(v.get<std::string>());
  if (!id) throw IntegrityError(std::string("malformed ") + key + ": " + v.dump());
  return *id;
}

}  // namespace

Variant::Variant(int supporting_count) : n_(supporting_count) {
  if (n_ < kMin || n_ > kMax)
    throw ArgumentError("n must be in 1..6, got " + std::to_string(n_));
}

std::optional<Variant> Variant::parse(std::string_view name) noexcept {
  constexpr std::string_view prefix = "alt-nn";
  if (name.size() != prefix.size() + 1 || name.substr(0, prefix.size()) != prefix) return std::nullopt;
  const int n = name.back() - '0';
  if (n < kMin || n > kMax) return std::nullopt;
  return Variant(n);
}

ModelRecord ModelRecord::from_code(std::string code, std::string dataset,
                                   std::optional<Variant> variant, std::int64_t created_at) {
  NnId id = dedup::digest_of(code);
  return ModelRecord{std::move(id), variant,  std::move(dataset), std::move(code),
                     std::nullopt,  std::nullopt, {},                created_at};
}

ordered_json to_json(const ModelRecord& r) {
  ordered_json j;
  j["nn_id"] = r.nn_id.str();
  j["variant"] = r.variant ? json(r.variant->name()) : json(nullptr);
  j["dataset"] = r.dataset;
  j["code"] = r.code;
  j["accuracy"] = r.accuracy ? json(*r.accuracy) : json(nullptr);
  j["reference_id"] = r.reference_id ? json(r.reference_id->str()) : json(nullptr);
  auto supp = json::array();
  for (const auto& s : r.supporting_ids) supp.push_back(s.str());
  j["supporting_ids"] = std::move(supp);
  j["created_at"] = r.created_at;
  return j;
}

ModelRecord record_from_json(const json& j) {
  if (!j.is_object()) throw IntegrityError("record must be an object");
  ModelRecord r{id_field(j, "nn_id"), std::nullopt, j.at("dataset").get<std::string>(),
                j.at("code").get<std::string>(), {}, {}, {}};
  if (const auto& v = j.value("variant", json(nullptr)); !v.is_null()) {
    r.variant = Variant::parse(v.get<std::string>());
    if (!r.variant) throw IntegrityError("unknown variant " + v.dump());
  }
  if (const auto& a = j.value("accuracy", json(nullptr)); !a.is_null()) r.accuracy = a.get<double>();
  if (const auto& ref = j.value("reference_id", json(nullptr)); !ref.is_null())
    r.reference_id = id_field(j, "reference_id");
  for (const auto& s : j.value("supporting_ids", json::array())) {
    auto id = NnId::parse(s.get<std::string>());
    if (!id) throw IntegrityError("malformed supporting id " + s.dump());
    r.supporting_ids.push_back(*id);
  }
  r.created_at = j.value("created_at", std::int64_t{0});
  return r;
}

Registry::Registry(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(*dir_, ec);
  if (ec) throw StorageError("cannot create store at " + dir_->string() + ": " + ec.message());
  replay();
}

void Registry::validate(const ModelRecord& r) {
  if (r.code.empty()) throw IntegrityError("record has empty code");
  if (dedup::digest_of(r.code) != r.nn_id)
    throw IntegrityError("nn_id " + r.nn_id.str() + " does not match the code's fingerprint");
  if (r.accuracy && !(*r.accuracy >= 0.0 && *r.accuracy <= 1.0))
    throw IntegrityError("accuracy outside [0,1]");
  if (r.reference_id &&
      std::find(r.supporting_ids.begin(), r.supporting_ids.end(), *r.reference_id) !=
          r.supporting_ids.end())
    throw IntegrityError("reference_id listed among supporting_ids");
}

void Registry::replay() {
  const fs::path journal = *dir_ / kJournal;
  if (!fs::exists(journal)) return;
  const std::string text = read_file(journal);

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const bool torn = nl == std::string::npos;
    const std::string_view line(text.data() + pos, (torn ? text.size() : nl) - pos);
    const std::size_t line_start = pos;
    pos = torn ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      if (torn) {
        // Interrupted final append: drop it so later appends start on a clean line.
        fs::resize_file(journal, line_start);
        break;
      }
      throw ParseError(journal.string(), line_no, e.what());
    }
    try {
      if (j.contains("update")) {
        const NnId id = id_field(j, "update");
        auto it = records_.find(id);
        if (it == records_.end()) throw IntegrityError("update for unknown record " + id.str());
        it->second.accuracy = j.at("accuracy").get<double>();
      } else {
        ModelRecord r = record_from_json(j);
        validate(r);
        records_.try_emplace(r.nn_id, std::move(r));
      }
    } catch (const json::exception& e) {
      throw ParseError(journal.string(), line_no, e.what());
    } catch (const IntegrityError& e) {
      throw ParseError(journal.string(), line_no, e.what());
    }
  }
}

void Registry::append_line(const std::string& line) {
  if (!dir_) return;
  std::ofstream out(*dir_ / kJournal, std::ios::app | std::ios::binary);
  if (!out) throw StorageError("cannot open journal in " + dir_->string());
  out << line << '\n';
  out.flush();
  if (!out) throw StorageError("journal append failed in " + dir_->string());
}

InsertResult Registry::insert(const ModelRecord& record) {
  validate(record);
  std::unique_lock lock(mu_);
  if (records_.contains(record.nn_id)) return InsertResult::RejectedDuplicate;
  append_line(to_json(record).dump());
  records_.emplace(record.nn_id, record);
  return InsertResult::Inserted;
}

bool Registry::contains(const NnId& id) const {
  std::shared_lock lock(mu_);
  return records_.contains(id);
}

bool Registry::contains(std::string_view hex) const { return contains(NnId(hex)); }

std::optional<ModelRecord> Registry::get(const NnId& id) const {
  std::shared_lock lock(mu_);
  if (auto it = records_.find(id); it != records_.end()) return it->second;
  return std::nullopt;
}

std::vector<ModelRecord> Registry::query_best(std::string_view dataset, std::size_t limit) const {
  if (limit == 0) throw ArgumentError("query_best limit must be >= 1");
  std::vector<const ModelRecord*> hits;
  std::shared_lock lock(mu_);
  for (const auto& [id, r] : records_)
    if (r.accuracy && r.dataset == dataset) hits.push_back(&r);

  const auto better = [](const ModelRecord* a, const ModelRecord* b) {
    if (*a->accuracy != *b->accuracy) return *a->accuracy > *b->accuracy;
    if (a->created_at != b->created_at) return a->created_at < b->created_at;
    return a->nn_id < b->nn_id;
  };
  const std::size_t keep = std::min(limit, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), better);

  std::vector<ModelRecord> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(*hits[i]);
  return out;
}

void Registry::update_accuracy(const NnId& id, double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0))
    throw ArgumentError("accuracy must lie in [0,1], got " + std::to_string(accuracy));
  std::unique_lock lock(mu_);
  auto it = records_.find(id);
  if (it == records_.end()) throw NotFoundError("no record with nn_id " + id.str());
  ordered_json j;
  j["update"] = id.str();
  j["accuracy"] = accuracy;
  append_line(j.dump());
  it->second.accuracy = accuracy;
}

std::size_t Registry::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::vector<ModelRecord> Registry::all() const {
  std::shared_lock lock(mu_);
  std::vector<ModelRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, r] : records_) out.push_back(r);
  return out;
}

void Registry::export_to(const fs::path& file) const {
  std::string text;
  for (const auto& r : all()) {
    text += to_json(r).dump();
    text += '\n';
  }
  write_file_atomic(file, text);
}

std::size_t Registry::import_from(const fs::path& file) {
  const std::string text = read_file(file);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t inserted = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ModelRecord r = [&] {
      try {
        return record_from_json(json::parse(line));
      } catch (const std::exception& e) {
        throw ParseError(file.string(), line_no, e.what());
      }
    }();
    if (insert(r) == InsertResult::Inserted) ++inserted;
  }
  return inserted;
}

void Registry::compact() {
  if (!dir_) return;
  std::unique_lock lock(mu_);
  std::string text;
  for (const auto& [id, r] : records_) {
    text += to_json(r).dump();
    text += '\n';
  }
  write_file_atomic(*dir_ / kJournal, text);
}

}  // namespace archgen
