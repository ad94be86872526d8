#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace fhash {

// Image of a sparse vector in R^m. Stored sparse (sorted index/value pairs,
// no zeros) when nnz < m/4, dense otherwise. Both forms compare equal
// entrywise and produce bit-identical inner products.
class HashedVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  // Empty (all-zero) vector of dimension m.
  explicit HashedVector(std::uint32_t m = 1);

  static HashedVector from_dense(std::vector<double> values);
  // `entries` must be sorted by index with unique indices; zeros are dropped.
  static HashedVector from_sorted_entries(std::uint32_t m, std::vector<Entry> entries);

  std::uint32_t dims() const noexcept { return m_; }
  bool is_sparse() const noexcept { return dense_.empty(); }
  std::size_t nnz() const noexcept;

  double operator[](std::uint32_t i) const;

  // f(index, value) over nonzero entries in ascending index order.
  template <class F>
  void for_each_nonzero(F&& f) const {
    if (is_sparse()) {
      for (const auto& [i, v] : sparse_) f(i, v);
    } else {
      for (std::uint32_t i = 0; i < m_; ++i)
        if (dense_[i] != 0.0) f(i, dense_[i]);
    }
  }

  HashedVector as_dense() const;
  HashedVector as_sparse() const;
  std::vector<double> to_dense_values() const;

  double l1() const noexcept;
  double squared_l2() const noexcept;
  double l2() const noexcept;
  double linf() const noexcept;

  HashedVector scaled(double factor) const;
  friend HashedVector operator+(const HashedVector& a, const HashedVector& b);

  friend bool operator==(const HashedVector& a, const HashedVector& b);

 private:
  std::uint32_t m_;
  std::vector<Entry> sparse_;
  std::vector<double> dense_;  // non-empty iff dense representation
};

// Throws DimensionError when a.dims() != b.dims().
double hashed_inner(const HashedVector& a, const HashedVector& b);

}  // namespace fhash
