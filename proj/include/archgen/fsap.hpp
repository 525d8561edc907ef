#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "archgen/registry.hpp"

namespace archgen::fsap {

struct DatasetSpec {
  std::string name;
  int num_classes = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::string description;

  /// Throws ArgumentError unless num_classes >= 2 and every dim >= 1.
  void validate() const;
  /// "32x32 RGB images", "28x28 grayscale images", ...
  std::string image_phrase() const;
};

/// The seven benchmark datasets with their class counts and input shapes.
std::vector<DatasetSpec> default_catalog();

/// Throws ArgumentError when name is not in catalog.
const DatasetSpec& find_dataset(std::span<const DatasetSpec> catalog, std::string_view name);

struct Selection {
  ModelRecord reference;
  std::vector<ModelRecord> supporting;  // sampled order
};

/// Draws a reference uniformly from the best-accuracy pool, then up to n
/// supporting models without replacement from the rest of the pool.
/// Deterministic in seed. Throws EmptyPoolError when no trained record
/// exists for dataset and ArgumentError for n outside 1..6.
Selection select_models(const Registry& store, std::string_view dataset, int n, std::uint64_t seed,
                        std::size_t pool_size = Registry::kDefaultPoolSize);

/// Prompt text with {{name}} placeholders and one {{#supporting}} ... {{/supporting}}
/// section repeated per supporting model.
class PromptTemplate {
 public:
  /// Throws ArgumentError on unknown placeholders or a malformed section.
  explicit PromptTemplate(std::string text);

  static const PromptTemplate& builtin();
  static PromptTemplate from_file(const std::string& path);

  struct Options {
    /// Render the literal "32x32 RGB images" regardless of the dataset.
    bool strict_image_phrase = false;
  };

  /// Throws ArgumentError when a record lacks code or accuracy or more than six
  /// supporting models are given.
  std::string render(const DatasetSpec& dataset, const ModelRecord& reference,
                     std::span<const ModelRecord> supporting, Options opts) const;
  std::string render(const DatasetSpec& dataset, const ModelRecord& reference,
                     std::span<const ModelRecord> supporting) const {
    return render(dataset, reference, supporting, Options{});
  }

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
  std::string head_, section_, tail_;
};

/// Renders with the built-in template.
std::string build_prompt(const DatasetSpec& dataset, const ModelRecord& reference,
                         std::span<const ModelRecord> supporting,
                         PromptTemplate::Options opts = {});

/// "53.1%"
std::string format_accuracy(double fraction);

struct PromptBundle {
  std::string dataset;
  int n_requested;
  ModelRecord reference;
  std::vector<ModelRecord> supporting;
  std::string prompt_text;
};

PromptBundle make_bundle(const Registry& store, const DatasetSpec& dataset, int n, std::uint64_t seed,
                         const PromptTemplate& tmpl, PromptTemplate::Options opts = {},
                         std::size_t pool_size = Registry::kDefaultPoolSize);

/// Number of lines starting with "SUPPORTING MODEL " in rendered prompt text.
std::size_t count_supporting_headers(std::string_view prompt);

}  // namespace archgen::fsap
