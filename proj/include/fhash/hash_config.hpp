#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fhash {

// XOR mask deriving the sign seed from the bucket seed when none is given.
inline constexpr std::uint32_t kDefaultSignSeedMask = 0x5F375A86u;

// Separates the task (user) id from the token in a personalized token.
inline constexpr char kTaskSeparator = '\x1f';

inline constexpr int kMinBits = 1;
inline constexpr int kMaxBits = 30;

// A pair of seeded hash functions: bucket index h into m = 2^bits buckets
// and sign xi in {-1, +1}. The two use distinct MurmurHash3 seeds.
class HashConfig {
 public:
  // sign_seed = bucket_seed ^ kDefaultSignSeedMask
  HashConfig(int bits, std::uint32_t bucket_seed);
  HashConfig(int bits, std::uint32_t bucket_seed, std::uint32_t sign_seed);

  // Config for Monte Carlo trial `seed`: bucket seed is the low word of
  // splitmix64(seed), sign seed follows the default mask.
  static HashConfig for_trial(int bits, std::uint64_t seed);

  int bits() const noexcept { return bits_; }
  std::uint32_t m() const noexcept { return std::uint32_t{1} << bits_; }
  std::uint32_t mask() const noexcept { return m() - 1; }
  std::uint32_t bucket_seed() const noexcept { return bucket_seed_; }
  std::uint32_t sign_seed() const noexcept { return sign_seed_; }

  friend bool operator==(const HashConfig&, const HashConfig&) = default;

 private:
  int bits_;
  std::uint32_t bucket_seed_;
  std::uint32_t sign_seed_;
};

struct HashSlot {
  std::uint32_t bucket;
  int sign;  // -1 or +1

  friend bool operator==(const HashSlot&, const HashSlot&) = default;
};

// Throws InputError on an empty token.
HashSlot hash_token(std::string_view token, const HashConfig& cfg);

// No emptiness check; for inner loops that already validated their tokens.
HashSlot hash_token_unchecked(std::string_view token, const HashConfig& cfg) noexcept;

// task + 0x1F + token
std::string personalize(std::string_view token, std::string_view task);

// hash_token(personalize(token, task), cfg); both inputs must be nonempty.
HashSlot pair_hash(std::string_view token, std::string_view task, const HashConfig& cfg);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace fhash
