#include <doctest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "fhash/errors.hpp"
#include "fhash/feature_map.hpp"
#include "fhash/stats.hpp"
#include "oracles.hpp"

using namespace fhash;

TEST_CASE("murmur3 published vectors") {
  CHECK(murmur3_32("", 0) == 0u);
  CHECK(murmur3_32("", 1) == 0x514E28B7u);
  CHECK(murmur3_32("", 0xFFFFFFFFu) == 0x81F16F39u);
  CHECK(murmur3_32(std::string_view("\0\0\0\0", 4), 0) == 0x2362F9DEu);
  CHECK(murmur3_32("aaaa", 0x9747B28Cu) == 0x5A97808Au);
  CHECK(murmur3_32("Hello, world!", 0x9747B28Cu) == 0x24884CBAu);
  CHECK(murmur3_32("The quick brown fox jumps over the lazy dog", 0) == 0x2E4FF723u);
  // Tail lengths 1..3.
  CHECK(murmur3_32("a", 0x9747B28Cu) == 0x7FA09EA6u);
  CHECK(murmur3_32("ab", 0x9747B28Cu) == 0x74875592u);
  CHECK(murmur3_32("abc", 0x9747B28Cu) == 0xC84A62DDu);
}

TEST_CASE("golden hash vectors") {
  std::ifstream in(FHASH_GOLDENS);
  REQUIRE(in);
  std::string line;
  int rows = 0;
  bool saw_spam4 = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    std::string hex, field;
    std::getline(f, hex, '\t');
    std::vector<std::uint64_t> v;
    while (std::getline(f, field, '\t')) v.push_back(std::stoull(field));
    REQUIRE(v.size() == 5);
    const std::string token = oracle::from_hex(hex);
    const auto bits = static_cast<int>(v[0]);
    const auto bseed = static_cast<std::uint32_t>(v[1]);
    if (bits == 0) {
      CHECK(murmur3_32(token, bseed) == v[3]);
    } else {
      const HashConfig cfg(bits, bseed, static_cast<std::uint32_t>(v[2]));
      const HashSlot s = hash_token(token, cfg);
      CHECK(s.bucket == v[3]);
      CHECK(s.sign == (v[4] == 1 ? 1 : -1));
      if (token == "spam" && bits == 4) saw_spam4 = true;
    }
    ++rows;
  }
  CHECK(rows > 50);
  CHECK(saw_spam4);
}

TEST_CASE("HashConfig validation") {
  CHECK_THROWS_AS(HashConfig(0, 1), InputError);
  CHECK_THROWS_AS(HashConfig(31, 1), InputError);
  CHECK_THROWS_AS(HashConfig(10, 5, 5), InputError);
  CHECK_NOTHROW(HashConfig(1, 1));
  CHECK_NOTHROW(HashConfig(30, 1));
  const HashConfig c(10, 123);
  CHECK(c.m() == 1024u);
  CHECK(c.sign_seed() == (123u ^ kDefaultSignSeedMask));
  CHECK(HashConfig::for_trial(10, 7) == HashConfig::for_trial(10, 7));
  CHECK_FALSE(HashConfig::for_trial(10, 7) == HashConfig::for_trial(10, 8));
}

TEST_CASE("hash_token") {
  const HashConfig c(12, 99);
  CHECK_THROWS_AS(hash_token("", c), InputError);
  CHECK(hash_token("token", c) == hash_token("token", c));
  const auto [b, s] = oracle::slot("token", 12, 99, 99u ^ kDefaultSignSeedMask);
  CHECK(hash_token("token", c) == HashSlot{b, s});
}

TEST_CASE("sign balance and bucket uniformity over 10^6 tokens") {
  const HashConfig c(10, 2024);
  long sign_sum = 0;
  std::vector<double> counts(c.m(), 0.0);
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const HashSlot s = hash_token("tok" + std::to_string(i), c);
    sign_sum += s.sign;
    counts[s.bucket] += 1.0;
  }
  const double mean = static_cast<double>(sign_sum) / n;
  CHECK(mean >= -0.003);
  CHECK(mean <= 0.003);
  CHECK(std::abs(sign_sum) <= 4000);
  const std::vector<double> expected(c.m(), static_cast<double>(n) / c.m());
  CHECK(stats::chi_square_statistic(counts, expected) < stats::chi_square_critical(c.m() - 1, 0.999));
}

TEST_CASE("pair_hash") {
  const HashConfig c(10, 5);
  CHECK(pair_hash("viagra", "u7", c) == hash_token(std::string("u7\x1fviagra"), c));
  CHECK(personalize("t", "u") == std::string("u\x1ft"));
  CHECK_THROWS_AS(pair_hash("", "u", c), InputError);
  CHECK_THROWS_AS(pair_hash("t", "", c), InputError);

  int collisions = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    const std::string t = "w" + std::to_string(i);
    if (pair_hash(t, "alice", c).bucket == pair_hash(t, "bob", c).bucket) ++collisions;
  }
  const double rate = static_cast<double>(collisions) / n;
  CHECK(rate >= 0.7 / c.m());
  CHECK(rate <= 1.3 / c.m());
}

TEST_CASE("SparseVector invariants") {
  SparseVector x{{"a", 3.0}, {"b", 0.0}, {"c", -4.0}};
  CHECK(x.nnz() == 2);
  CHECK(x.l2() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(x.linf() == 4.0);
  x.set("a", 0.0);
  CHECK(x.nnz() == 1);
  CHECK(x.l2() == 4.0);
  x.add("c", 4.0);
  CHECK(x.empty());
  CHECK(x.l2() == 0.0);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const SparseVector y = oracle::random_sparse(rng, 1 + k % 16, 40);
    double s = 0, mx = 0;
    for (const auto& [_, v] : y.entries()) s += v * v, mx = std::max(mx, std::abs(v));
    CHECK(std::abs(y.l2() - std::sqrt(s)) <= 1e-12 * std::sqrt(s));
    CHECK(y.linf() == mx);
  }
  const SparseVector p{{"a", 1.0}, {"b", 2.0}}, q{{"b", 3.0}, {"c", 5.0}};
  CHECK(p.dot(q) == 6.0);
  CHECK((p - p).empty());
}

TEST_CASE("HashedVector representations") {
  std::vector<double> d(64, 0.0);
  d[3] = 1.5;
  d[40] = -2.0;
  const HashedVector dense = HashedVector::from_dense(d).as_dense();
  const HashedVector sparse = dense.as_sparse();
  CHECK(sparse.is_sparse());
  CHECK_FALSE(dense.is_sparse());
  CHECK(dense == sparse);
  const HashedVector other = HashedVector::from_sorted_entries(64, {{3, 2.0}, {10, 1.0}, {40, 0.25}});
  CHECK(hashed_inner(dense, other) == hashed_inner(sparse, other));
  CHECK(hashed_inner(dense, other.as_dense()) == hashed_inner(sparse, other));
  CHECK(hashed_inner(dense, other) == 2.5);
  CHECK_THROWS_AS(hashed_inner(dense, HashedVector(32)), DimensionError);
  CHECK_THROWS(HashedVector::from_sorted_entries(64, {{5, 1.0}, {4, 1.0}}));
  CHECK_THROWS(HashedVector::from_sorted_entries(64, {{64, 1.0}}));
}

TEST_CASE("feature_map matches the reference map") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 30; ++k) {
    const SparseVector x = oracle::random_sparse(rng, 1 + k, 200);
    const HashConfig c(4 + k % 6, static_cast<std::uint32_t>(k * 7919));
    const auto ref = oracle::dense_map(x, c);
    const auto got = feature_map(x, c).to_dense_values();
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    CHECK(feature_map(x, c).l1() <= x.l1() * (1 + 1e-15));
  }
}

TEST_CASE("feature_map examples") {
  const HashConfig c(8, 1);
  SUBCASE("single token") {
    const auto phi = feature_map(SparseVector{{"a", 1.0}}, c);
    const HashSlot s = hash_token("a", c);
    CHECK(phi.nnz() == 1);
    CHECK(phi[s.bucket] == s.sign * 1.0);
  }
  SUBCASE("opposite-sign collision cancels") {
    const HashSlot a = hash_token("t0", c);
    std::string partner;
    for (int i = 1; partner.empty(); ++i) {
      const std::string t = "t" + std::to_string(i);
      const HashSlot s = hash_token(t, c);
      if (s.bucket == a.bucket && s.sign == -a.sign) partner = t;
    }
    const auto phi = feature_map(SparseVector{{"t0", 1.0}, {partner, 1.0}}, c);
    CHECK(phi[a.bucket] == 0.0);
    CHECK(phi.nnz() == 0);
  }
  SUBCASE("injective token set preserves the norm exactly") {
    SparseVector::Map m;
    std::vector<bool> used(c.m(), false);
    for (int i = 0; m.size() < 20; ++i) {
      const std::string t = "q" + std::to_string(i);
      const auto b = hash_token(t, c).bucket;
      if (used[b]) continue;
      used[b] = true;
      m[t] = 0.5 + i;
    }
    const SparseVector x(m);
    const auto phi = feature_map(x, c);
    double sq = 0;
    for (const auto& [_, v] : x.entries()) sq += v * v;
    CHECK(hashed_inner(phi, phi) == sq);
  }
  SUBCASE("linearity") {
    // Dyadic values keep every partial sum exact, so equality is bit-for-bit.
    const SparseVector x{{"a", 1.0}, {"b", 0.5}, {"c", -2.0}, {"d", 4.0}};
    const SparseVector y{{"b", 0.25}, {"c", 3.0}, {"e", -1.0}};
    const auto lhs = feature_map(linear_combination(2.0, x, -3.0, y), c);
    const auto rhs = feature_map(x, c).scaled(2.0) + feature_map(y, c).scaled(-3.0);
    CHECK(lhs == rhs);
  }
}

TEST_CASE("hashed_inner examples") {
  const HashConfig c(6, 17);
  CHECK(hashed_inner(feature_map(SparseVector{{"x", 1.0}}, c), feature_map(SparseVector{}, c)) == 0.0);
  const HashSlot a = hash_token("x0", c);
  std::string partner;
  for (int i = 1; partner.empty(); ++i) {
    const std::string t = "x" + std::to_string(i);
    const HashSlot s = hash_token(t, c);
    if (s.bucket == a.bucket && s.sign == a.sign) partner = t;
  }
  CHECK(hashed_kernel(SparseVector{{"x0", 1.0}}, SparseVector{{partner, 1.0}}, c) == 1.0);
}

TEST_CASE("hashed kernel is unbiased (m=8, 10^5 seeds)") {
  const double r = 1.0 / std::sqrt(2.0);
  const SparseVector x{{"e0", r}, {"e1", r}}, y{{"e1", r}, {"e2", r}};
  std::vector<double> samples;
  samples.reserve(100'000);
  for (std::uint64_t s = 0; s < 100'000; ++s) samples.push_back(hashed_kernel(x, y, HashConfig::for_trial(3, s)));
  const auto mom = stats::sample_moments(samples);
  CHECK(std::abs(mom.mean - 0.5) <= 4 * mom.stddev / std::sqrt(1e5));
}

TEST_CASE("variance_closed_form") {
  CHECK_THROWS_AS(variance_closed_form(SparseVector{{"a", 1.0}}, SparseVector{{"a", 1.0}}, 0), InputError);
  CHECK(variance_closed_form(SparseVector{{"a", 1.0}}, SparseVector{{"a", 1.0}}, 16) == 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  const SparseVector h{{"a", r}, {"b", r}};
  for (std::uint64_t m : {1u, 8u, 1024u}) CHECK(variance_closed_form(h, h, m) == doctest::Approx(1.0 / m));

  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const auto x = oracle::random_sparse(rng, 1 + k % 16, 30, true);
    const auto y = oracle::random_sparse(rng, 1 + (k * 7) % 16, 30, true);
    for (std::uint64_t m : {16u, 256u}) {
      const double v = variance_closed_form(x, y, m);
      CHECK(v <= 2.0 / m + 1e-15);
      CHECK(v == doctest::Approx(oracle::variance_brute(x, y, m)).epsilon(1e-10));
    }
  }
}

TEST_CASE("replicate") {
  CHECK_THROWS_AS(ReplicationParams(0), InputError);
  SUBCASE("c=1 renames only") {
    const SparseVector x{{"a", 0.6}, {"b", -0.8}};
    const auto r = replicate(x, ReplicationParams(1));
    CHECK(r.get("a#0") == 0.6);
    CHECK(r.get("b#0") == -0.8);
    CHECK(r.l2() == x.l2());
  }
  SUBCASE("c=4 one-hot") {
    const auto r = replicate(SparseVector{{"a", 1.0}}, ReplicationParams(4));
    CHECK(r.nnz() == 4);
    for (const auto& [_, v] : r.entries()) CHECK(v == 0.5);
    CHECK(r.l2() == 1.0);
    CHECK(r.linf() == 0.5);
  }
  SUBCASE("'#' in tokens is escaped") {
    CHECK(replica_token("a#b", 2) == "a##b#2");
    // "a#" replica 1 and "a" with a different escaping never collide.
    const auto r = replicate(SparseVector{{"a", 1.0}, {"a#", 1.0}, {"a#1", 1.0}}, ReplicationParams(12));
    CHECK(r.nnz() == 36);
  }
  SUBCASE("norms and variance identity over random (x, c)") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
      const auto x = oracle::random_sparse(rng, 1 + k % 10, 50);
      const int c = 1 + static_cast<int>(rng() % 16);
      const auto r = replicate(x, ReplicationParams(c));
      CHECK(r.nnz() == static_cast<std::size_t>(c) * x.nnz());
      CHECK(std::abs(r.l2() - x.l2()) <= 1e-12 * x.l2());
      CHECK(std::abs(r.linf() - x.linf() / std::sqrt(c)) <= 1e-15 * x.linf());
      const double n4 = std::pow(x.l2(), 4);
      for (std::uint64_t m : {1u, 64u}) {
        const double expect = variance_closed_form(x, x, m) / c + (c - 1.0) / c * 2.0 * n4 / m;
        CHECK(std::abs(variance_closed_form(r, r, m) - expect) <= 1e-9 * std::max(1.0, expect));
      }
    }
  }
}

TEST_CASE("bernstein_interference_bound") {
  const double expect = 2.0 * std::exp(-0.02 / (1.0 / 1024 + 0.2 * 0.01 / 3));
  const double b = bernstein_interference_bound(1, 0.1, 1, 0.1, 1024, 0.2).raw;
  CHECK(std::abs(b - expect) <= 0.01 * expect);
  // The stated "about 1e-5" is that expression rounded.
  CHECK(b == doctest::Approx(1.0e-5).epsilon(0.05));

  double prev = 2.0;
  for (double eps : {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 50.0}) {
    const double v = bernstein_interference_bound(1, 0.1, 1, 0.1, 1024, eps).raw;
    CHECK(v < prev);
    prev = v;
  }
  CHECK(bernstein_interference_bound(1, 0.1, 1, 0.1, 1024, 1e4).raw == 0.0);
  for (int k = 0; k < 10; ++k) {
    const std::uint64_t m = std::uint64_t{16} << k;
    CHECK(bernstein_interference_bound(1, 0.1, 1, 0.1, 2 * m, 0.2).raw <
          bernstein_interference_bound(1, 0.1, 1, 0.1, m, 0.2).raw);
  }
  CHECK_THROWS_AS(bernstein_interference_bound(-1, 0.1, 1, 0.1, 1024, 0.2), InputError);
  CHECK_THROWS_AS(bernstein_interference_bound(1, 0.1, 1, -0.1, 1024, 0.2), InputError);
  CHECK(bernstein_interference_bound(5, 5, 5, 5, 2, 0.01).probability() == 1.0);

  const double eps = interference_eps_for_bound(0.1, 1.3, 0.2, 1.0, 0.05, 4096);
  CHECK(bernstein_interference_bound(1.3, 0.2, 1.0, 0.05, 4096, eps).raw == doctest::Approx(0.1).epsilon(1e-9));
}
