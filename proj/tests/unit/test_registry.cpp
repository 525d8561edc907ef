#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "archgen/dedup.hpp"
#include "archgen/error.hpp"
#include "archgen/registry.hpp"
#include "archgen/synth.hpp"

using namespace archgen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("archgen-reg-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ModelRecord trained(const std::string& code, const std::string& dataset, double acc, std::int64_t t = 0) {
  ModelRecord r = ModelRecord::from_code(code, dataset, Variant(3), t);
  r.accuracy = acc;
  return r;
}

}  // namespace

TEST(Registry, InsertThenDuplicateIsRejected) {
  Registry store;
  const std::string code = synth::architecture(1);
  EXPECT_EQ(store.insert(ModelRecord::from_code(code, "mnist")), InsertResult::Inserted);
  EXPECT_EQ(store.insert(ModelRecord::from_code(synth::mutate_whitespace(code, 2), "mnist")),
            InsertResult::RejectedDuplicate);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_TRUE(store.contains(dedup::digest_of(code)));
  EXPECT_TRUE(store.contains(dedup::digest_of(code).str()));
  EXPECT_THROW((void)store.contains(std::string_view("not-a-digest")), ArgumentError);
}

TEST(Registry, RejectsRecordWhoseIdDoesNotMatchCode) {
  Registry store;
  ModelRecord r = ModelRecord::from_code("x = 1", "mnist");
  r.code = "x = 2";
  EXPECT_THROW(store.insert(r), IntegrityError);
  ModelRecord bad_acc = ModelRecord::from_code("x = 3", "mnist");
  bad_acc.accuracy = 1.5;
  EXPECT_THROW(store.insert(bad_acc), IntegrityError);
}

TEST(Registry, QueryBestOrdersByAccuracyThenAgeThenId) {
  Registry store;
  store.insert(trained("a = 1", "cifar-10", 0.5, 30));
  store.insert(trained("a = 2", "cifar-10", 0.7, 20));
  store.insert(trained("a = 3", "cifar-10", 0.5, 10));
  store.insert(trained("a = 4", "mnist", 0.99));
  store.insert(ModelRecord::from_code("a = 5", "cifar-10"));  // untrained, never returned
  const auto best = store.query_best("cifar-10");
  ASSERT_EQ(best.size(), 3u);
  EXPECT_EQ(best[0].code, "a = 2");
  EXPECT_EQ(best[1].code, "a = 3");
  EXPECT_EQ(best[2].code, "a = 1");
  EXPECT_EQ(store.query_best("cifar-10", 1).size(), 1u);
  EXPECT_TRUE(store.query_best("svhn").empty());
  EXPECT_THROW(store.query_best("cifar-10", 0), ArgumentError);
}

TEST(Registry, UpdateAccuracyValidates) {
  Registry store;
  const auto r = ModelRecord::from_code("b = 1", "svhn");
  store.insert(r);
  store.update_accuracy(r.nn_id, 0.42);
  EXPECT_DOUBLE_EQ(*store.get(r.nn_id)->accuracy, 0.42);
  EXPECT_THROW(store.update_accuracy(r.nn_id, -0.1), ArgumentError);
  EXPECT_THROW(store.update_accuracy(dedup::digest_of("nope"), 0.5), NotFoundError);
}

TEST(Registry, JsonRoundTripPreservesEveryField) {
  ModelRecord r = trained("c = 1", "cifar-100", 0.261, 1700000000);
  r.reference_id = dedup::digest_of("ref");
  r.supporting_ids = {dedup::digest_of("s1"), dedup::digest_of("s2")};
  EXPECT_EQ(record_from_json(to_json(r)), r);
  const std::string dumped = to_json(r).dump();
  EXPECT_LT(dumped.find("nn_id"), dumped.find("variant"));
  EXPECT_LT(dumped.find("supporting_ids"), dumped.find("created_at"));
}

TEST(Registry, JournalReplaysOnReopen) {
  TempDir dir;
  NnId id = dedup::digest_of("d = 1");
  {
    Registry store(dir.path);
    store.insert(ModelRecord::from_code("d = 1", "mnist"));
    store.insert(ModelRecord::from_code("d = 2", "mnist"));
    store.update_accuracy(id, 0.9);
  }
  Registry again(dir.path);
  EXPECT_EQ(again.size(), 2u);
  EXPECT_DOUBLE_EQ(*again.get(id)->accuracy, 0.9);
}

TEST(Registry, TornFinalLineIsDroppedAndLaterAppendsSurvive) {
  TempDir dir;
  {
    Registry store(dir.path);
    store.insert(ModelRecord::from_code("e = 1", "mnist"));
  }
  {
    std::ofstream(dir.path / "records.jsonl", std::ios::app) << "{\"nn_id\": \"abc";
  }
  {
    Registry store(dir.path);
    EXPECT_EQ(store.size(), 1u);
    store.insert(ModelRecord::from_code("e = 2", "mnist"));
  }
  Registry again(dir.path);
  EXPECT_EQ(again.size(), 2u);
}

TEST(Registry, CorruptMiddleLineRaisesParseErrorWithLine) {
  TempDir dir;
  {
    std::ofstream out(dir.path / "records.jsonl");
    out << to_json(ModelRecord::from_code("f = 1", "mnist")).dump() << "\n{broken\n"
        << to_json(ModelRecord::from_code("f = 2", "mnist")).dump() << "\n";
  }
  try {
    Registry store(dir.path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Registry, ExportImportRoundTrip) {
  TempDir dir;
  Registry a;
  for (int i = 0; i < 5; ++i) a.insert(trained(synth::architecture(static_cast<std::uint64_t>(i)), "svhn", 0.1 * (i + 1), i));
  a.export_to(dir.path / "dump.jsonl");
  Registry b;
  EXPECT_EQ(b.import_from(dir.path / "dump.jsonl"), 5u);
  EXPECT_EQ(b.import_from(dir.path / "dump.jsonl"), 0u);
  EXPECT_EQ(a.all(), b.all());
}

TEST(Registry, ImportReportsLineOfBadRecord) {
  TempDir dir;
  {
    std::ofstream out(dir.path / "bad.jsonl");
    out << to_json(ModelRecord::from_code("g = 1", "mnist")).dump() << "\n" << R"({"nn_id": "zz"})" << "\n";
  }
  Registry store;
  try {
    store.import_from(dir.path / "bad.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Registry, CompactKeepsState) {
  TempDir dir;
  {
    Registry store(dir.path);
    const auto r = ModelRecord::from_code("h = 1", "mnist");
    store.insert(r);
    for (int i = 1; i <= 10; ++i) store.update_accuracy(r.nn_id, i / 10.0);
    store.compact();
  }
  Registry again(dir.path);
  EXPECT_EQ(again.size(), 1u);
  EXPECT_DOUBLE_EQ(*again.all().front().accuracy, 1.0);
  std::ifstream in(dir.path / "records.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 1);
}

TEST(Registry, ConcurrentInsertsOfVariantsStoreExactlyOne) {
  TempDir dir;
  Registry store(dir.path);
  const auto originals = synth::corpus(20, 6);
  std::atomic<int> inserted{0};
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (std::size_t i = 0; i < originals.size(); ++i) {
        const std::string code = synth::mutate_whitespace(originals[i], static_cast<std::uint64_t>(t * 100) + i);
        if (store.insert(ModelRecord::from_code(code, "mnist")) == InsertResult::Inserted) ++inserted;
      }
    });
  threads.clear();
  EXPECT_EQ(inserted.load(), 20);
  EXPECT_EQ(store.size(), 20u);
  Registry again(dir.path);
  EXPECT_EQ(again.size(), 20u);
}
