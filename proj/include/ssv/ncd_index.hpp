#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ssv/error.hpp"
#include "ssv/geometry.hpp"

namespace ssv {

/// Dynamic nearest-neighbour index under ncd. Coordinates are scaled by the
/// mark box so ncd becomes the L-infinity metric, then bucketed into square
/// cells of side `cell` (in ncd units). Any two entries closer than `cell`
/// lie in adjacent cells, so a radius query with radius <= cell probes at
/// most 3x3 buckets.
///
/// Entries are addressed by insertion slot; `key` breaks distance ties
/// (smaller wins).
class NcdGrid {
 public:
  struct Hit {
    std::uint32_t slot = 0;
    double distance = 0;
  };

  NcdGrid(MarkBox box, double cell) : box_(box), cell_(cell) {
    if (!(cell > 0) || !(box.width > 0) || !(box.height > 0))
      throw Error(ErrorCode::InvalidArgument, "grid cell and mark box must be positive");
  }

  void reserve(std::size_t n) {
    xs_.reserve(n);
    ys_.reserve(n);
    keys_.reserve(n);
    next_.reserve(n);
    heads_.reserve(n);
  }

  std::uint32_t insert(double x, double y, std::uint64_t key) {
    const auto slot = static_cast<std::uint32_t>(xs_.size());
    xs_.push_back(x);
    ys_.push_back(y);
    keys_.push_back(key);
    const Cell c = cellOf(x, y);
    auto [it, inserted] = heads_.try_emplace(c, kNone);
    next_.push_back(it->second);
    it->second = slot;
    if (slot == 0) {
      lo_ = hi_ = c;
    } else {
      lo_.cx = std::min(lo_.cx, c.cx);
      lo_.cy = std::min(lo_.cy, c.cy);
      hi_.cx = std::max(hi_.cx, c.cx);
      hi_.cy = std::max(hi_.cy, c.cy);
    }
    return slot;
  }

  std::size_t size() const noexcept { return xs_.size(); }
  double x(std::uint32_t slot) const { return xs_[slot]; }
  double y(std::uint32_t slot) const { return ys_[slot]; }
  std::uint64_t key(std::uint32_t slot) const { return keys_[slot]; }

  /// Nearest entry with ncd strictly below `radius`, if any.
  std::optional<Hit> nearestWithin(double x, double y, double radius) const {
    if (xs_.empty()) return std::nullopt;
    const Cell c = cellOf(x, y);
    const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_));
    std::optional<Hit> best;
    for (std::int64_t dx = -reach; dx <= reach; ++dx)
      for (std::int64_t dy = -reach; dy <= reach; ++dy) scanCell({c.cx + dx, c.cy + dy}, x, y, best);
    if (best && best->distance < radius) return best;
    return std::nullopt;
  }

  /// Global nearest entry. Expands square rings of cells around the query
  /// and falls back to a linear scan once a ring would touch more cells
  /// than there are entries.
  Hit nearest(double x, double y) const {
    if (xs_.empty()) throw Error(ErrorCode::EmptyIndex, "nearest-neighbour query on an empty index");
    const Cell c = cellOf(x, y);
    std::optional<Hit> best;
    const std::int64_t maxRing = std::max({std::abs(c.cx - lo_.cx), std::abs(c.cx - hi_.cx), std::abs(c.cy - lo_.cy),
                                           std::abs(c.cy - hi_.cy)});
    for (std::int64_t r = 0; r <= maxRing; ++r) {
      if (8 * r > static_cast<std::int64_t>(xs_.size()) + 8) return linearScan(x, y);
      if (r == 0) {
        scanCell(c, x, y, best);
      } else {
        for (std::int64_t d = -r; d <= r; ++d) {
          scanCell({c.cx + d, c.cy - r}, x, y, best);
          scanCell({c.cx + d, c.cy + r}, x, y, best);
        }
        for (std::int64_t d = -r + 1; d <= r - 1; ++d) {
          scanCell({c.cx - r, c.cy + d}, x, y, best);
          scanCell({c.cx + r, c.cy + d}, x, y, best);
        }
      }
      // Anything in ring r+1 is more than r cells away on some axis.
      if (best && best->distance <= static_cast<double>(r) * cell_) return *best;
    }
    return *best;
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Cell {
    std::int64_t cx = 0;
    std::int64_t cy = 0;
    bool operator==(const Cell&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
      auto h = static_cast<std::uint64_t>(c.cx) * 0x9e3779b97f4a7c15ULL;
      h ^= static_cast<std::uint64_t>(c.cy) + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  Cell cellOf(double x, double y) const noexcept {
    return {static_cast<std::int64_t>(std::floor(x / box_.width / cell_)),
            static_cast<std::int64_t>(std::floor(y / box_.height / cell_))};
  }

  void consider(std::uint32_t s, double x, double y, std::optional<Hit>& best) const {
    const double d = ncd(x, y, xs_[s], ys_[s], box_);
    if (!best || d < best->distance || (d == best->distance && keys_[s] < keys_[best->slot])) best = Hit{s, d};
  }

  void scanCell(Cell c, double x, double y, std::optional<Hit>& best) const {
    auto it = heads_.find(c);
    if (it == heads_.end()) return;
    for (auto s = it->second; s != kNone; s = next_[s]) consider(s, x, y, best);
  }

  Hit linearScan(double x, double y) const {
    std::optional<Hit> best;
    for (std::uint32_t s = 0; s < xs_.size(); ++s) consider(s, x, y, best);
    return *best;
  }

  MarkBox box_;
  double cell_;
  std::vector<double> xs_, ys_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> next_;
  std::unordered_map<Cell, std::uint32_t, CellHash> heads_;
  Cell lo_, hi_;
};

}  // namespace ssv
