#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <utility>

namespace fhash {

// Real vector indexed by byte-string tokens. Entries are kept in ascending
// byte order of the token, zeros are never stored, and the l2/linf norms are
// cached on every mutation (mutations cost O(nnz)).
class SparseVector {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  SparseVector() = default;
  explicit SparseVector(Map entries);
  SparseVector(std::initializer_list<std::pair<const std::string, double>> entries);

  double get(std::string_view token) const;
  void set(std::string_view token, double value);
  void add(std::string_view token, double value);

  const Map& entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double l2() const noexcept { return l2_; }
  double squared_l2() const noexcept { return l2_ * l2_; }
  double linf() const noexcept { return linf_; }
  double l1() const noexcept;

  double dot(const SparseVector& other) const;
  SparseVector scaled(double factor) const;

  friend SparseVector operator+(const SparseVector& a, const SparseVector& b);
  friend SparseVector operator-(const SparseVector& a, const SparseVector& b);
  friend bool operator==(const SparseVector& a, const SparseVector& b) {
    return a.entries_ == b.entries_;
  }

 private:
  void refresh_norms() noexcept;

  Map entries_;
  double l2_ = 0.0;
  double linf_ = 0.0;
};

// a*x + b*y
SparseVector linear_combination(double a, const SparseVector& x, double b, const SparseVector& y);

// n tokens prefix0..prefix{n-1}, each 1/sqrt(n): a unit vector with linf = n^-1/2.
SparseVector uniform_unit_vector(std::size_t n, std::string_view prefix);

}  // namespace fhash
