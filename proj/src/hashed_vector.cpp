#include "fhash/hashed_vector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fhash/errors.hpp"

namespace fhash {

HashedVector::HashedVector(std::uint32_t m) : m_(m) {
  if (m == 0) throw InputError("hashed vector dimension must be positive");
}

HashedVector HashedVector::from_dense(std::vector<double> values) {
  if (values.empty()) throw InputError("hashed vector dimension must be positive");
  const auto m = static_cast<std::uint32_t>(values.size());
  const auto nnz = static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return v != 0.0; }));
  HashedVector out(m);
  if (nnz < m / 4) {
    out.sparse_.reserve(nnz);
    for (std::uint32_t i = 0; i < m; ++i)
      if (values[i] != 0.0) out.sparse_.emplace_back(i, values[i]);
  } else {
    out.dense_ = std::move(values);
  }
  return out;
}

HashedVector HashedVector::from_sorted_entries(std::uint32_t m, std::vector<Entry> entries) {
  std::erase_if(entries, [](const Entry& e) { return e.second == 0.0; });
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].first >= m) throw DimensionError("bucket index out of range");
    if (k > 0 && entries[k - 1].first >= entries[k].first)
      throw InputError("hashed entries must be sorted with unique indices");
  }
  HashedVector out(m);
  if (entries.size() < m / 4) {
    out.sparse_ = std::move(entries);
  } else {
    out.dense_.assign(m, 0.0);
    for (const auto& [i, v] : entries) out.dense_[i] = v;
  }
  return out;
}

std::size_t HashedVector::nnz() const noexcept {
  if (is_sparse()) return sparse_.size();
  return static_cast<std::size_t>(
      std::count_if(dense_.begin(), dense_.end(), [](double v) { return v != 0.0; }));
}

double HashedVector::operator[](std::uint32_t i) const {
  if (i >= m_) throw DimensionError("index " + std::to_string(i) + " out of range");
  if (!is_sparse()) return dense_[i];
  auto it = std::lower_bound(sparse_.begin(), sparse_.end(), i,
                             [](const Entry& e, std::uint32_t k) { return e.first < k; });
  return (it != sparse_.end() && it->first == i) ? it->second : 0.0;
}

std::vector<double> HashedVector::to_dense_values() const {
  if (!is_sparse()) return dense_;
  std::vector<double> out(m_, 0.0);
  for (const auto& [i, v] : sparse_) out[i] = v;
  return out;
}

HashedVector HashedVector::as_dense() const {
  HashedVector out(m_);
  out.dense_ = to_dense_values();
  return out;
}

HashedVector HashedVector::as_sparse() const {
  HashedVector out(m_);
  for_each_nonzero([&](std::uint32_t i, double v) { out.sparse_.emplace_back(i, v); });
  return out;
}

double HashedVector::l1() const noexcept {
  double s = 0.0;
  for_each_nonzero([&](std::uint32_t, double v) { s += std::abs(v); });
  return s;
}

double HashedVector::squared_l2() const noexcept {
  double s = 0.0;
  for_each_nonzero([&](std::uint32_t, double v) { s += v * v; });
  return s;
}

double HashedVector::l2() const noexcept { return std::sqrt(squared_l2()); }

double HashedVector::linf() const noexcept {
  double s = 0.0;
  for_each_nonzero([&](std::uint32_t, double v) { s = std::max(s, std::abs(v)); });
  return s;
}

HashedVector HashedVector::scaled(double factor) const {
  std::vector<Entry> entries;
  for_each_nonzero([&](std::uint32_t i, double v) { entries.emplace_back(i, v * factor); });
  return from_sorted_entries(m_, std::move(entries));
}

HashedVector operator+(const HashedVector& a, const HashedVector& b) {
  if (a.m_ != b.m_) throw DimensionError("cannot add hashed vectors of different dimension");
  std::vector<HashedVector::Entry> merged;
  auto ea = a.as_sparse().sparse_;
  auto eb = b.as_sparse().sparse_;
  std::size_t i = 0, j = 0;
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && ea[i].first < eb[j].first)) {
      merged.push_back(ea[i++]);
    } else if (i == ea.size() || eb[j].first < ea[i].first) {
      merged.push_back(eb[j++]);
    } else {
      merged.emplace_back(ea[i].first, ea[i].second + eb[j].second);
      ++i;
      ++j;
    }
  }
  return HashedVector::from_sorted_entries(a.m_, std::move(merged));
}

bool operator==(const HashedVector& a, const HashedVector& b) {
  if (a.m_ != b.m_) return false;
  return a.as_sparse().sparse_ == b.as_sparse().sparse_;
}

double hashed_inner(const HashedVector& a, const HashedVector& b) {
  if (a.dims() != b.dims()) {
    throw DimensionError("hashed_inner: dimension mismatch (" + std::to_string(a.dims()) +
                         " vs " + std::to_string(b.dims()) + ")");
  }
  // Sum over common nonzero indices in ascending order, whatever the
  // representation, so dense and sparse forms agree bit for bit.
  double s = 0.0;
  if (!a.is_sparse() && !b.is_sparse()) {
    a.for_each_nonzero([&](std::uint32_t i, double v) {
      const double w = b[i];
      if (w != 0.0) s += v * w;
    });
    return s;
  }
  const HashedVector& sp = a.is_sparse() ? a : b;
  const HashedVector& other = a.is_sparse() ? b : a;
  sp.for_each_nonzero([&](std::uint32_t i, double v) {
    const double w = other[i];
    if (w != 0.0) s += v * w;
  });
  return s;
}

}  // namespace fhash
