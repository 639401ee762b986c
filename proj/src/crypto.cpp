#include "evalsys/crypto.hpp"

#include <sodium.h>

#include <array>
#include <stdexcept>

#include "evalsys/error.hpp"

namespace evalsys {

namespace {

void ensure_sodium() {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw std::runtime_error("libsodium initialization failed");
}

}  // namespace

SystemEntropy::SystemEntropy() { ensure_sodium(); }

void SystemEntropy::fill(std::span<std::uint8_t> out) {
  randombytes_buf(out.data(), out.size());
}

void SeededEntropy::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = rng_();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
}

std::string new_token(EntropySource& entropy) {
  ensure_sodium();
  std::array<std::uint8_t, kTokenBytes> raw{};
  entropy.fill(raw);
  constexpr int variant = sodium_base64_VARIANT_URLSAFE_NO_PADDING;
  std::string out(sodium_base64_ENCODED_LEN(raw.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), raw.data(), raw.size(), variant);
  out.resize(std::char_traits<char>::length(out.c_str()));
  return out;
}

std::string sha256_hex(std::string_view data) {
  ensure_sodium();
  std::array<std::uint8_t, crypto_hash_sha256_BYTES> digest{};
  crypto_hash_sha256(digest.data(),
                     reinterpret_cast<const unsigned char*>(data.data()),
                     data.size());
  return to_hex(digest);
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  ensure_sodium();
  std::string out(bytes.size() * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), bytes.data(), bytes.size());
  out.pop_back();
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  ensure_sodium();
  std::vector<std::uint8_t> out(hex.size() / 2);
  std::size_t len = 0;
  if (sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr,
                     &len, nullptr) != 0) {
    fail(ErrorCode::ParseError, "invalid hex string");
  }
  out.resize(len);
  return out;
}

bool constant_time_equal(std::span<const std::uint8_t> a,
                         std::span<const std::uint8_t> b) {
  ensure_sodium();
  if (a.size() != b.size()) return false;
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

PasswordHashParams PasswordHashParams::minimal() {
  return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN};
}

std::vector<std::uint8_t> hash_password(std::string_view password,
                                        std::span<const std::uint8_t> salt,
                                        const PasswordHashParams& params) {
  ensure_sodium();
  static_assert(kSaltBytes == crypto_pwhash_SALTBYTES);
  if (salt.size() != kSaltBytes) {
    fail(ErrorCode::InvalidValue, "password salt has the wrong length");
  }
  std::vector<std::uint8_t> out(kPasswordDigestBytes);
  if (crypto_pwhash(out.data(), out.size(), password.data(), password.size(),
                    salt.data(), params.ops_limit, params.mem_limit,
                    crypto_pwhash_ALG_ARGON2ID13) != 0) {
    fail(ErrorCode::StorageError, "password hashing ran out of memory");
  }
  return out;
}

}  // namespace evalsys
