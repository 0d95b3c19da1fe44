#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ssv/error.hpp"
#include "ssv/grammar.hpp"

namespace ssv {

/// Running statistics for one measure. Every aggregation function is
/// derived from these five; avg is sum / count and is never stored.
struct MeasureAcc {
  std::uint64_t count = 0;
  double sum = 0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  double sqrsum = 0;

  void add(double v) noexcept {
    ++count;
    sum += v;
    min = std::min(min, v);
    max = std::max(max, v);
    sqrsum += v * v;
  }
  void merge(const MeasureAcc& o) noexcept {
    count += o.count;
    sum += o.sum;
    min = std::min(min, o.min);
    max = std::max(max, o.max);
    sqrsum += o.sqrsum;
  }
  double value(AggFunction f) const noexcept {
    switch (f) {
      case AggFunction::Count: return static_cast<double>(count);
      case AggFunction::Sum: return sum;
      case AggFunction::Avg: return count ? sum / static_cast<double>(count) : 0.0;
      case AggFunction::Min: return min;
      case AggFunction::Max: return max;
      case AggFunction::Sqrsum: return sqrsum;
    }
    return 0.0;
  }
  bool operator==(const MeasureAcc&) const = default;
};

/// Aggregates of one cluster, grouped by dimension-tuple key. Keys index a
/// dictionary owned by the layout input; with no dimensions every object
/// carries key 0. Groups are kept sorted by key.
class AggState {
 public:
  AggState() = default;

  static AggState singleton(std::uint32_t key, std::span<const double> measureValues) {
    AggState s;
    s.width_ = static_cast<std::uint32_t>(measureValues.size());
    s.keys_.push_back(key);
    s.accs_.resize(measureValues.size());
    for (std::size_t m = 0; m < measureValues.size(); ++m) s.accs_[m].add(measureValues[m]);
    return s;
  }

  static AggState fromParts(std::uint32_t width, std::vector<std::uint32_t> keys, std::vector<MeasureAcc> accs) {
    if (accs.size() != keys.size() * width) throw Error(ErrorCode::SchemaMismatch, "aggregate shape mismatch");
    AggState s;
    s.width_ = width;
    s.keys_ = std::move(keys);
    s.accs_ = std::move(accs);
    return s;
  }

  bool empty() const noexcept { return keys_.empty(); }
  std::uint32_t width() const noexcept { return width_; }
  std::size_t groupCount() const noexcept { return keys_.size(); }
  std::span<const std::uint32_t> keys() const noexcept { return keys_; }
  std::span<const MeasureAcc> accs() const noexcept { return accs_; }
  std::span<const MeasureAcc> group(std::size_t g) const noexcept {
    return std::span<const MeasureAcc>(accs_).subspan(g * width_, width_);
  }

  /// Number of objects folded in, read from the first measure.
  std::uint64_t count() const noexcept {
    std::uint64_t c = 0;
    if (width_ == 0) return 0;
    for (std::size_t g = 0; g < keys_.size(); ++g) c += accs_[g * width_].count;
    return c;
  }

  /// Totals across all groups, one accumulator per measure.
  std::vector<MeasureAcc> totals() const {
    std::vector<MeasureAcc> out(width_);
    for (std::size_t g = 0; g < keys_.size(); ++g)
      for (std::uint32_t m = 0; m < width_; ++m) out[m].merge(accs_[g * width_ + m]);
    return out;
  }

  void mergeFrom(const AggState& o) {
    if (o.empty()) return;
    if (empty()) {
      *this = o;
      return;
    }
    if (o.width_ != width_) throw Error(ErrorCode::SchemaMismatch, "aggregates have different measure counts");
    // Fast path: one shared group.
    if (keys_.size() == 1 && o.keys_.size() == 1 && keys_[0] == o.keys_[0]) {
      for (std::uint32_t m = 0; m < width_; ++m) accs_[m].merge(o.accs_[m]);
      return;
    }
    std::vector<std::uint32_t> keys;
    std::vector<MeasureAcc> accs;
    keys.reserve(keys_.size() + o.keys_.size());
    accs.reserve(accs_.size() + o.accs_.size());
    std::size_t i = 0, j = 0;
    auto append = [&](const AggState& s, std::size_t g) {
      keys.push_back(s.keys_[g]);
      accs.insert(accs.end(), s.accs_.begin() + static_cast<std::ptrdiff_t>(g * width_),
                  s.accs_.begin() + static_cast<std::ptrdiff_t>((g + 1) * width_));
    };
    while (i < keys_.size() || j < o.keys_.size()) {
      if (j == o.keys_.size() || (i < keys_.size() && keys_[i] < o.keys_[j])) {
        append(*this, i++);
      } else if (i == keys_.size() || o.keys_[j] < keys_[i]) {
        append(o, j++);
      } else {
        append(*this, i);
        for (std::uint32_t m = 0; m < width_; ++m) accs[accs.size() - width_ + m].merge(o.accs_[j * width_ + m]);
        ++i;
        ++j;
      }
    }
    keys_ = std::move(keys);
    accs_ = std::move(accs);
  }

  bool operator==(const AggState&) const = default;

 private:
  std::uint32_t width_ = 0;
  std::vector<std::uint32_t> keys_;
  std::vector<MeasureAcc> accs_;
};

inline AggState mergeAgg(const AggState& a, const AggState& b) {
  AggState out = a;
  out.mergeFrom(b);
  return out;
}

}  // namespace ssv
