#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "fhash/errors.hpp"
#include "fhash/learner.hpp"

namespace fhash::learn {
namespace {

constexpr std::array<char, 4> kMagic{'F', 'H', 'M', 'T'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 4 + 8 + 4;

template <class T>
void put(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <class T>
T get(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void save_model(const HashedModel& model, const std::filesystem::path& path) {
  const auto& cfg = model.config();
  std::vector<unsigned char> buf;
  buf.reserve(kHeaderBytes + 4 * std::size_t{cfg.m()});
  buf.insert(buf.end(), kMagic.begin(), kMagic.end());
  put(buf, kModelFormatVersion);
  put(buf, static_cast<std::uint32_t>(cfg.bits()));
  put(buf, cfg.bucket_seed());
  put(buf, cfg.sign_seed());
  put(buf, model.examples_seen());
  put(buf, static_cast<float>(model.lr0()));
  for (float w : model.weights()) put(buf, w);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InputError("write failed for model " + path.string());
}

HashedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model " + path.string());
  const std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::string where = "model " + path.string() + ": ";
  if (buf.size() < kHeaderBytes) throw CorruptModelError(where + "truncated header");
  if (std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) throw CorruptModelError(where + "bad magic");
  const unsigned char* p = buf.data() + 4;
  const auto version = get<std::uint32_t>(p);
  if (version != kModelFormatVersion)
    throw CorruptModelError(where + "unsupported format version " + std::to_string(version));
  const auto bits = get<std::uint32_t>(p + 4);
  const auto bucket_seed = get<std::uint32_t>(p + 8);
  const auto sign_seed = get<std::uint32_t>(p + 12);
  const auto seen = get<std::uint64_t>(p + 16);
  const auto lr0 = get<float>(p + 24);
  if (bits < kMinBits || bits > kMaxBits) throw CorruptModelError(where + "bits out of range");
  const std::size_t m = std::size_t{1} << bits;
  if (buf.size() != kHeaderBytes + 4 * m)
    throw CorruptModelError(where + "expected " + std::to_string(kHeaderBytes + 4 * m) + " bytes, found " +
                            std::to_string(buf.size()));
  std::optional<HashedModel> model;
  try {
    model.emplace(HashConfig(static_cast<int>(bits), bucket_seed, sign_seed), lr0);
  } catch (const InputError& e) {
    throw CorruptModelError(where + e.what());
  }
  auto w = model->mutable_weights();
  const unsigned char* q = buf.data() + kHeaderBytes;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = get<float>(q + 4 * i);
    if (!std::isfinite(w[i])) throw CorruptModelError(where + "non-finite weight at bucket " + std::to_string(i));
  }
  model->set_examples_seen(seen);
  return std::move(*model);
}

}  // namespace fhash::learn
