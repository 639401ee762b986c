#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evalsys {

/// Source of random bytes for tokens, salts and access keys.
class EntropySource {
 public:
  virtual ~EntropySource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;
};

/// OS-backed CSPRNG (libsodium randombytes).
class SystemEntropy final : public EntropySource {
 public:
  SystemEntropy();
  void fill(std::span<std::uint8_t> out) override;
};

/// Deterministic stream for tests and reproducible simulations. Not for
/// production tokens.
class SeededEntropy final : public EntropySource {
 public:
  explicit SeededEntropy(std::uint64_t seed) : rng_(seed) {}
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mt19937_64 rng_;
};

inline constexpr std::size_t kTokenBytes = 32;

/// kTokenBytes random bytes, unpadded base64url.
std::string new_token(EntropySource& entropy);

std::string sha256_hex(std::string_view data);
std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

bool constant_time_equal(std::span<const std::uint8_t> a,
                         std::span<const std::uint8_t> b);

/// Argon2id cost parameters.
struct PasswordHashParams {
  std::uint64_t ops_limit = 2;
  std::size_t mem_limit = 64u * 1024u * 1024u;

  /// Cheapest parameters libsodium accepts; for tests only.
  static PasswordHashParams minimal();
};

inline constexpr std::size_t kSaltBytes = 16;
inline constexpr std::size_t kPasswordDigestBytes = 32;

std::vector<std::uint8_t> hash_password(std::string_view password,
                                        std::span<const std::uint8_t> salt,
                                        const PasswordHashParams& params);

}  // namespace evalsys
