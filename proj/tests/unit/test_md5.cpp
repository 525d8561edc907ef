#include <gtest/gtest.h>
#include <openssl/evp.h>

#include <random>

#include "archgen/md5.hpp"

namespace {

std::string openssl_md5(std::string_view s) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(s.data(), s.size(), out, &len, EVP_md5(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string r;
  for (unsigned i = 0; i < len; ++i) {
    r += hex[out[i] >> 4];
    r += hex[out[i] & 15];
  }
  return r;
}

}  // namespace

TEST(Md5, ReferenceVectors) {
  EXPECT_EQ(archgen::md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
  EXPECT_EQ(archgen::md5_hex("a"), "0cc175b9c0f1b6a831c399e269772661");
  EXPECT_EQ(archgen::md5_hex("abc"), "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_EQ(archgen::md5_hex("message digest"), "f96b697d7cb7938d525a2f31aaf161d0");
  EXPECT_EQ(archgen::md5_hex("abcdefghijklmnopqrstuvwxyz"), "c3fcd3d76192e4007dfb496cca67e13b");
  EXPECT_EQ(archgen::md5_hex("12345678901234567890123456789012345678901234567890123456789012345678901234567890"),
            "57edf4a22be3c955ac49da2e2107b67a");
}

TEST(Md5, MatchesOpenSslOnRandomInputs) {
  std::mt19937_64 rng(5);
  for (int len = 0; len < 300; ++len) {
    std::string s(static_cast<std::size_t>(len), '\0');
    for (char& c : s) c = static_cast<char>(rng());
    ASSERT_EQ(archgen::md5_hex(s), openssl_md5(s)) << "length " << len;
  }
}

TEST(Md5, StreamingEqualsOneShot) {
  const std::string text(1000, 'x');
  for (std::size_t split : {0u, 1u, 55u, 56u, 63u, 64u, 65u, 999u}) {
    archgen::Md5 h;
    h.update(std::string_view(text).substr(0, split));
    h.update(std::string_view(text).substr(split));
    EXPECT_EQ(archgen::Md5::hex(h.finish()), archgen::md5_hex(text)) << split;
  }
}
