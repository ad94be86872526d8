#include "fhash/sparse_vector.hpp"

#include <algorithm>
#include <cmath>

namespace fhash {

SparseVector::SparseVector(Map entries) : entries_(std::move(entries)) {
  std::erase_if(entries_, [](const auto& kv) { return kv.second == 0.0; });
  refresh_norms();
}

SparseVector::SparseVector(std::initializer_list<std::pair<const std::string, double>> entries)
    : SparseVector(Map(entries.begin(), entries.end())) {}

double SparseVector::get(std::string_view token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? 0.0 : it->second;
}

void SparseVector::set(std::string_view token, double value) {
  auto it = entries_.find(token);
  if (value == 0.0) {
    if (it != entries_.end()) entries_.erase(it);
  } else if (it != entries_.end()) {
    it->second = value;
  } else {
    entries_.emplace(std::string(token), value);
  }
  refresh_norms();
}

void SparseVector::add(std::string_view token, double value) { set(token, get(token) + value); }

double SparseVector::l1() const noexcept {
  double s = 0.0;
  for (const auto& [_, v] : entries_) s += std::abs(v);
  return s;
}

double SparseVector::dot(const SparseVector& other) const {
  // Merge walk over both sorted maps.
  double s = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      s += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return s;
}

SparseVector SparseVector::scaled(double factor) const {
  Map out;
  for (const auto& [t, v] : entries_) out.emplace_hint(out.end(), t, v * factor);
  return SparseVector(std::move(out));
}

void SparseVector::refresh_norms() noexcept {
  double ss = 0.0;
  double mx = 0.0;
  for (const auto& [_, v] : entries_) {
    ss += v * v;
    mx = std::max(mx, std::abs(v));
  }
  l2_ = std::sqrt(ss);
  linf_ = mx;
}

SparseVector linear_combination(double a, const SparseVector& x, double b, const SparseVector& y) {
  SparseVector::Map out;
  auto i = x.entries().begin();
  auto j = y.entries().begin();
  while (i != x.entries().end() || j != y.entries().end()) {
    if (j == y.entries().end() || (i != x.entries().end() && i->first < j->first)) {
      out.emplace_hint(out.end(), i->first, a * i->second);
      ++i;
    } else if (i == x.entries().end() || j->first < i->first) {
      out.emplace_hint(out.end(), j->first, b * j->second);
      ++j;
    } else {
      out.emplace_hint(out.end(), i->first, a * i->second + b * j->second);
      ++i;
      ++j;
    }
  }
  return SparseVector(std::move(out));
}

SparseVector operator+(const SparseVector& a, const SparseVector& b) {
  return linear_combination(1.0, a, 1.0, b);
}

SparseVector operator-(const SparseVector& a, const SparseVector& b) {
  return linear_combination(1.0, a, -1.0, b);
}

SparseVector uniform_unit_vector(std::size_t n, std::string_view prefix) {
  SparseVector::Map m;
  const double v = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) m.emplace(std::string(prefix) + std::to_string(i), v);
  return SparseVector(std::move(m));
}

}  // namespace fhash
