#include <gtest/gtest.h>

#include "archgen/dedup.hpp"
#include "archgen/error.hpp"
#include "archgen/md5.hpp"
#include "archgen/registry.hpp"
#include "archgen/synth.hpp"

using namespace archgen;

TEST(NnIdTest, AcceptsOnlyLowercaseHex32) {
  EXPECT_TRUE(NnId::is_valid("d41d8cd98f00b204e9800998ecf8427e"));
  EXPECT_FALSE(NnId::is_valid("D41D8CD98F00B204E9800998ECF8427E"));
  EXPECT_FALSE(NnId::is_valid("d41d8cd98f00b204e9800998ecf8427"));
  EXPECT_FALSE(NnId::is_valid("g41d8cd98f00b204e9800998ecf8427e"));
  EXPECT_THROW(NnId("xyz"), ArgumentError);
  EXPECT_FALSE(NnId::parse("").has_value());
}

TEST(Normalize, StripsAsciiWhitespace) {
  EXPECT_EQ(dedup::normalize("def f(x):\n\treturn  x \r\n\v\f"), "deff(x):returnx");
}

TEST(Normalize, StripsUnicodeWhitespace) {
  // NBSP, ideographic space, line separator, em space
  EXPECT_EQ(dedup::normalize("a b　c d e"), "abcde");
}

TEST(Normalize, KeepsCommentsAndOtherBytes) {
  EXPECT_EQ(dedup::normalize("x = 1  # note"), "x=1#note");
  EXPECT_EQ(dedup::normalize("café \xff\xfe"), "café\xff\xfe");
}

TEST(Fingerprint, DigestIsMd5OfNormalizedText) {
  const std::string code = "class Net:\n    pass\n";
  const auto fp = dedup::fingerprint(code);
  EXPECT_EQ(fp.normalized, "classNet:pass");
  EXPECT_EQ(fp.digest.str(), md5_hex("classNet:pass"));
  EXPECT_EQ(dedup::digest_of(code), fp.digest);
}

TEST(Fingerprint, WhitespaceVariantsCollide) {
  const auto corpus = synth::corpus(50, 3);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string variant = synth::mutate_whitespace(corpus[i], i);
    ASSERT_NE(variant, corpus[i]);
    EXPECT_EQ(dedup::digest_of(variant), dedup::digest_of(corpus[i]));
  }
}

TEST(Fingerprint, NonWhitespaceEditsDiffer) {
  EXPECT_NE(dedup::digest_of("x = 1"), dedup::digest_of("x = 2"));
  EXPECT_NE(dedup::digest_of("x = 1"), dedup::digest_of("x = 1 # c"));
}

TEST(CheckUnique, RejectsStoredDigest) {
  Registry store;
  const std::string code = synth::minimal_net();
  EXPECT_EQ(dedup::check_unique(code, store), dedup::Decision::Accept);
  store.insert(ModelRecord::from_code(code, "cifar-10"));
  EXPECT_EQ(dedup::check_unique(code, store), dedup::Decision::Reject);
  EXPECT_EQ(dedup::check_unique(synth::mutate_whitespace(code, 9), store), dedup::Decision::Reject);
  EXPECT_STREQ(dedup::to_string(dedup::Decision::Reject), "REJECT");
}

TEST(DigestBatch, ParallelMatchesSerial) {
  const auto corpus = synth::corpus(300, 8);
  EXPECT_EQ(dedup::digest_batch(corpus), dedup::digest_batch_serial(corpus));
  EXPECT_TRUE(dedup::digest_batch(std::vector<std::string>{}).empty());
}
