#include "archgen/fsap.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "archgen/error.hpp"
#include "archgen/fileio.hpp"
#include "archgen/prompt_template.hpp"
#include "archgen/random.hpp"

namespace archgen::fsap {

void DatasetSpec::validate() const {
  if (name.empty()) throw ArgumentError("dataset name is empty");
  if (num_classes < 2) throw ArgumentError(name + ": num_classes must be >= 2");
  if (channels < 1 || height < 1 || width < 1) throw ArgumentError(name + ": input shape dims must be >= 1");
}

std::string DatasetSpec::image_phrase() const {
  std::string kind = channels == 3 ? "RGB" : channels == 1 ? "grayscale" : std::to_string(channels) + "-channel";
  return std::to_string(height) + "x" + std::to_string(width) + " " + kind + " images";
}

std::vector<DatasetSpec> default_catalog() {
  return {
      {"mnist", 10, 1, 28, 28, "handwritten digits"},
      {"celeba-gender", 2, 3, 64, 64, "celebrity faces, binary gender"},
      {"cifar-10", 10, 3, 32, 32, "natural images"},
      {"cifar-100", 100, 3, 32, 32, "fine-grained natural images"},
      {"imagenette", 10, 3, 128, 128, "10-class ImageNet subset"},
      {"svhn", 10, 3, 32, 32, "street view house numbers"},
      {"places365", 365, 3, 64, 64, "scene images"},
  };
}

const DatasetSpec& find_dataset(std::span<const DatasetSpec> catalog, std::string_view name) {
  for (const auto& d : catalog)
    if (d.name == name) return d;
  throw ArgumentError("unknown dataset '" + std::string(name) + "'");
}

Selection select_models(const Registry& store, std::string_view dataset, int n, std::uint64_t seed,
                        std::size_t pool_size) {
  if (n < 1 || n > 6) throw ArgumentError("n must be in 1..6, got " + std::to_string(n));
  std::vector<ModelRecord> pool = store.query_best(dataset, pool_size);
  if (pool.empty())
    throw EmptyPoolError("no trained models for dataset '" + std::string(dataset) +
                         "'; seed the registry first");

  std::mt19937_64 rng(seed);
  const std::size_t ref = uniform_below(rng, pool.size());
  Selection sel{std::move(pool[ref]), {}};
  pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(ref));

  const auto want = static_cast<std::size_t>(n);
  if (pool.size() <= want) {
    sel.supporting = std::move(pool);
    return sel;
  }
  // Partial Fisher-Yates: the first `want` slots become the sample.
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < want; ++i) {
    const std::size_t j = i + uniform_below(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  for (std::size_t i = 0; i < want; ++i) sel.supporting.push_back(std::move(pool[idx[i]]));
  return sel;
}

std::string format_accuracy(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

namespace {

constexpr std::string_view kOpen = "{{#supporting}}";
constexpr std::string_view kClose = "{{/supporting}}";

const std::vector<std::string_view> kOuterKeys = {"reference_accuracy", "reference_code", "image_spec",
                                                  "num_classes", "dataset"};
const std::vector<std::string_view> kSectionKeys = {"index", "accuracy", "code"};

void check_keys(std::string_view text, const std::vector<std::string_view>& allowed) {
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const std::size_t end = text.find("}}", pos);
    if (end == std::string_view::npos) throw ArgumentError("unterminated placeholder in prompt template");
    const std::string_view key = text.substr(pos + 2, end - pos - 2);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ArgumentError("unknown placeholder {{" + std::string(key) + "}} in prompt template");
    pos = end + 2;
  }
}

template <typename Lookup>
void substitute(std::string_view text, Lookup&& value, std::string& out) {
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      return;
    }
    const std::size_t close = text.find("}}", open);
    out.append(text.substr(pos, open - pos));
    out.append(value(text.substr(open + 2, close - open - 2)));
    pos = close + 2;
  }
}

void require_trained(const ModelRecord& r, const char* role) {
  if (r.code.empty()) throw ArgumentError(std::string(role) + " model " + r.nn_id.str() + " has no code");
  if (!r.accuracy) throw ArgumentError(std::string(role) + " model " + r.nn_id.str() + " has no accuracy");
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  const std::size_t open = text_.find(kOpen);
  const std::size_t close = text_.find(kClose);
  if (open == std::string::npos || close == std::string::npos || close < open ||
      text_.find(kOpen, open + 1) != std::string::npos)
    throw ArgumentError("prompt template needs exactly one {{#supporting}}...{{/supporting}} section");
  head_ = text_.substr(0, open);
  section_ = text_.substr(open + kOpen.size(), close - open - kOpen.size());
  tail_ = text_.substr(close + kClose.size());
  check_keys(head_, kOuterKeys);
  check_keys(tail_, kOuterKeys);
  check_keys(section_, kSectionKeys);
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate t{std::string(detail::kDefaultTemplate)};
  return t;
}

PromptTemplate PromptTemplate::from_file(const std::string& path) { return PromptTemplate(read_file(path)); }

std::string PromptTemplate::render(const DatasetSpec& dataset, const ModelRecord& reference,
                                   std::span<const ModelRecord> supporting, Options opts) const {
  if (supporting.size() > 6) throw ArgumentError("at most 6 supporting models");
  require_trained(reference, "reference");
  for (const auto& s : supporting) require_trained(s, "supporting");

  const std::string image = opts.strict_image_phrase ? "32x32 RGB images" : dataset.image_phrase();
  const auto outer = [&](std::string_view key) -> std::string {
    if (key == "reference_accuracy") return format_accuracy(*reference.accuracy);
    if (key == "reference_code") return reference.code;
    if (key == "image_spec") return image;
    if (key == "num_classes") return std::to_string(dataset.num_classes);
    return dataset.name;
  };

  std::string out;
  substitute(head_, outer, out);
  for (std::size_t i = 0; i < supporting.size(); ++i) {
    const ModelRecord& m = supporting[i];
    substitute(section_, [&](std::string_view key) -> std::string {
      if (key == "index") return std::to_string(i + 1);
      if (key == "accuracy") return format_accuracy(*m.accuracy);
      return m.code;
    }, out);
  }
  substitute(tail_, outer, out);
  return out;
}

std::string build_prompt(const DatasetSpec& dataset, const ModelRecord& reference,
                         std::span<const ModelRecord> supporting, PromptTemplate::Options opts) {
  return PromptTemplate::builtin().render(dataset, reference, supporting, opts);
}

PromptBundle make_bundle(const Registry& store, const DatasetSpec& dataset, int n, std::uint64_t seed,
                         const PromptTemplate& tmpl, PromptTemplate::Options opts, std::size_t pool_size) {
  Selection sel = select_models(store, dataset.name, n, seed, pool_size);
  std::string text = tmpl.render(dataset, sel.reference, sel.supporting, opts);
  return PromptBundle{dataset.name, n, std::move(sel.reference), std::move(sel.supporting), std::move(text)};
}

std::size_t count_supporting_headers(std::string_view prompt) {
  std::size_t count = 0;
  for (std::size_t pos = 0; (pos = prompt.find("SUPPORTING MODEL ", pos)) != std::string_view::npos; ++pos)
    if (pos == 0 || prompt[pos - 1] == '\n') ++count;
  return count;
}

}  // namespace archgen::fsap
