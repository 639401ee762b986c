#include <gtest/gtest.h>

#include <set>

#include "evalsys/crypto.hpp"
#include "evalsys/net.hpp"

namespace evalsys {
namespace {

TEST(Crypto, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Crypto, HexRoundTrip) {
  const std::vector<std::uint8_t> bytes = {0x00, 0x7f, 0x80, 0xff, 0x12};
  EXPECT_EQ(to_hex(bytes), "007f80ff12");
  EXPECT_EQ(from_hex("007f80ff12"), bytes);
}

TEST(Crypto, TokensAreUrlSafeAndDistinct) {
  SystemEntropy entropy;
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::string t = new_token(entropy);
    EXPECT_EQ(t.size(), 43u);  // 32 bytes, unpadded base64
    EXPECT_EQ(t.find_first_not_of(
                  "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"),
              std::string::npos);
    seen.insert(t);
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Crypto, SeededEntropyIsReproducible) {
  SeededEntropy a(5), b(5), c(6);
  EXPECT_EQ(new_token(a), new_token(b));
  EXPECT_NE(new_token(a), new_token(c));
}

TEST(Crypto, PasswordHashDependsOnSaltAndPassword) {
  const auto params = PasswordHashParams::minimal();
  const std::vector<std::uint8_t> s1(kSaltBytes, 1), s2(kSaltBytes, 2);
  const auto h = hash_password("secret", s1, params);
  EXPECT_EQ(h.size(), kPasswordDigestBytes);
  EXPECT_EQ(h, hash_password("secret", s1, params));
  EXPECT_NE(h, hash_password("secret", s2, params));
  EXPECT_NE(h, hash_password("Secret", s1, params));
  EXPECT_TRUE(constant_time_equal(h, hash_password("secret", s1, params)));
  EXPECT_FALSE(constant_time_equal(h, std::span(h).first(8)));
}

TEST(Net, ParsesAndCanonicalizes) {
  EXPECT_EQ(IpAddress::parse("127.0.0.1")->str(), "127.0.0.1");
  EXPECT_FALSE(IpAddress::parse("127.0.0.1")->is_v6());
  EXPECT_EQ(IpAddress::parse("0:0:0:0:0:0:0:1")->str(), "::1");
  EXPECT_EQ(IpAddress::parse("::ffff:10.0.0.5")->str(), "10.0.0.5");
  EXPECT_EQ(*IpAddress::parse("::ffff:10.0.0.5"), *IpAddress::parse("10.0.0.5"));
  EXPECT_FALSE(IpAddress::parse("256.0.0.1"));
  EXPECT_FALSE(IpAddress::parse("localhost"));
  EXPECT_FALSE(IpAddress::parse(""));
}

TEST(Net, TimestampRoundTrip) {
  const auto t = parse_utc("2026-06-26T22:34:00Z");
  ASSERT_TRUE(t);
  EXPECT_EQ(format_utc(*t), "2026-06-26T22:34:00Z");
  EXPECT_FALSE(parse_utc("2026-06-26 22:34"));
}

}  // namespace
}  // namespace evalsys
