#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archgen/digest.hpp"
#include "archgen/variant.hpp"

namespace archgen {

/// One generated (or seeded) architecture and its training outcome.
struct ModelRecord {
  NnId nn_id;
  std::optional<Variant> variant;  // empty for seed models
  std::string dataset;
  std::string code;
  std::optional<double> accuracy;  // fraction in [0,1]
  std::optional<NnId> reference_id;
  std::vector<NnId> supporting_ids;
  std::int64_t created_at = 0;  // seconds since epoch

  /// Builds a record keyed by the normalized digest of code.
  static ModelRecord from_code(std::string code, std::string dataset,
                               std::optional<Variant> variant = std::nullopt,
                               std::int64_t created_at = 0);

  friend bool operator==(const ModelRecord&, const ModelRecord&) = default;
};

/// Field order matches the ModelRecord declaration.
nlohmann::ordered_json to_json(const ModelRecord& r);
ModelRecord record_from_json(const nlohmann::json& j);

enum class InsertResult { Inserted, RejectedDuplicate };

/// Hash-indexed store of architectures, optionally file-backed.
///
/// Records live in an ordered in-memory index (O(log N) lookup). When opened
/// on a path, every mutation is appended to a line-delimited journal in that
/// directory and replayed on open. Readers share a lock; writers serialize.
class Registry {
 public:
  static constexpr std::size_t kDefaultPoolSize = 50;

  /// Memory-only store.
  Registry() = default;

  /// Opens (creating if needed) a store rooted at dir. Throws StorageError.
  explicit Registry(std::filesystem::path dir);

  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  /// Atomic check-and-insert. Throws IntegrityError when nn_id does not match
  /// the code's fingerprint or the record is otherwise malformed.
  InsertResult insert(const ModelRecord& record);

  bool contains(const NnId& id) const;
  /// Throws ArgumentError on a malformed digest.
  bool contains(std::string_view hex) const;

  std::optional<ModelRecord> get(const NnId& id) const;

  /// Trained records for dataset, best accuracy first; ties by created_at
  /// then nn_id. Throws ArgumentError when limit == 0.
  std::vector<ModelRecord> query_best(std::string_view dataset,
                                      std::size_t limit = kDefaultPoolSize) const;

  /// Throws NotFoundError for unknown ids, ArgumentError outside [0,1].
  void update_accuracy(const NnId& id, double accuracy);

  std::size_t size() const;
  std::vector<ModelRecord> all() const;

  /// Writes one record per line (temp file + rename).
  void export_to(const std::filesystem::path& file) const;
  /// Inserts every record from an export file; returns how many were new.
  std::size_t import_from(const std::filesystem::path& file);

  /// Rewrites the journal as one line per live record.
  void compact();

  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

 private:
  void replay();
  void append_line(const std::string& line);
  static void validate(const ModelRecord& r);

  mutable std::shared_mutex mu_;
  std::map<NnId, ModelRecord> records_;
  std::optional<std::filesystem::path> dir_;
};

}  // namespace archgen
