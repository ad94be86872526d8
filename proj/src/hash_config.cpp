#include "fhash/hash_config.hpp"

#include "fhash/errors.hpp"
#include "fhash/murmur3.hpp"

namespace fhash {

HashConfig::HashConfig(int bits, std::uint32_t bucket_seed)
    : HashConfig(bits, bucket_seed, bucket_seed ^ kDefaultSignSeedMask) {}

HashConfig::HashConfig(int bits, std::uint32_t bucket_seed, std::uint32_t sign_seed)
    : bits_(bits), bucket_seed_(bucket_seed), sign_seed_(sign_seed) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw InputError("bits must lie in [" + std::to_string(kMinBits) + ", " +
                     std::to_string(kMaxBits) + "], got " + std::to_string(bits));
  }
  if (bucket_seed == sign_seed) {
    throw InputError("sign_seed must differ from bucket_seed");
  }
}

HashConfig HashConfig::for_trial(int bits, std::uint64_t seed) {
  return HashConfig(bits, static_cast<std::uint32_t>(splitmix64(seed)));
}

HashSlot hash_token_unchecked(std::string_view token, const HashConfig& cfg) noexcept {
  const std::uint32_t bucket = murmur3_32(token, cfg.bucket_seed()) & cfg.mask();
  const int sign = (murmur3_32(token, cfg.sign_seed()) & 1u) ? 1 : -1;
  return {bucket, sign};
}

HashSlot hash_token(std::string_view token, const HashConfig& cfg) {
  if (token.empty()) throw InputError("cannot hash an empty token");
  return hash_token_unchecked(token, cfg);
}

std::string personalize(std::string_view token, std::string_view task) {
  std::string out;
  out.reserve(task.size() + 1 + token.size());
  out.append(task);
  out.push_back(kTaskSeparator);
  out.append(token);
  return out;
}

HashSlot pair_hash(std::string_view token, std::string_view task, const HashConfig& cfg) {
  if (token.empty()) throw InputError("pair_hash: empty token");
  if (task.empty()) throw InputError("pair_hash: empty task");
  return hash_token_unchecked(personalize(token, task), cfg);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace fhash
