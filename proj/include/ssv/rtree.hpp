#pragma once

// Static bounding-box index: an R-tree bulk-loaded with Sort-Tile-Recursive
// packing. Nodes are implicit; the children of node k on tier t+1 are
// entries [k*F, k*F+F) of tier t.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ssv/binary_io.hpp"
#include "ssv/geometry.hpp"

namespace ssv {

class PackedRTree {
 public:
  static constexpr std::uint32_t kDefaultFanout = 16;

  PackedRTree() = default;

  static PackedRTree build(std::span<const Rect> boxes, std::uint32_t fanout = kDefaultFanout) {
    PackedRTree t;
    t.fanout_ = std::max<std::uint32_t>(fanout, 2);
    t.order_.resize(boxes.size());
    std::iota(t.order_.begin(), t.order_.end(), 0u);
    if (boxes.empty()) return t;

    auto cx = [&](std::uint32_t i) { return (boxes[i].xMin + boxes[i].xMax) / 2; };
    auto cy = [&](std::uint32_t i) { return (boxes[i].yMin + boxes[i].yMax) / 2; };
    // STR: sort by x, cut into vertical slabs, sort each slab by y.
    const std::size_t n = boxes.size();
    const auto leaves = (n + t.fanout_ - 1) / t.fanout_;
    const auto slabs = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(leaves))));
    const std::size_t slabSize = slabs * t.fanout_;
    std::sort(t.order_.begin(), t.order_.end(),
              [&](auto a, auto b) { return cx(a) < cx(b) || (cx(a) == cx(b) && a < b); });
    for (std::size_t s = 0; s < n; s += slabSize) {
      auto first = t.order_.begin() + static_cast<std::ptrdiff_t>(s);
      auto last = t.order_.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + slabSize));
      std::sort(first, last, [&](auto a, auto b) { return cy(a) < cy(b) || (cy(a) == cy(b) && a < b); });
    }

    std::vector<Rect> tier(n);
    for (std::size_t i = 0; i < n; ++i) tier[i] = boxes[t.order_[i]];
    t.tiers_.push_back(std::move(tier));
    while (t.tiers_.back().size() > 1) {
      const auto& below = t.tiers_.back();
      std::vector<Rect> up((below.size() + t.fanout_ - 1) / t.fanout_);
      for (std::size_t k = 0; k < up.size(); ++k) {
        up[k] = below[k * t.fanout_];
        for (std::size_t c = k * t.fanout_ + 1; c < std::min(below.size(), (k + 1) * t.fanout_); ++c)
          up[k].expand(below[c]);
      }
      t.tiers_.push_back(std::move(up));
    }
    return t;
  }

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t height() const noexcept { return tiers_.size(); }

  /// Entry indices whose box intersects `q` (closed), in ascending order.
  std::vector<std::uint32_t> query(const Rect& q) const {
    std::vector<std::uint32_t> out;
    if (tiers_.empty()) return out;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{tiers_.size() - 1, 0}};
    while (!stack.empty()) {
      const auto [t, k] = stack.back();
      stack.pop_back();
      if (!tiers_[t][k].intersects(q)) continue;
      if (t == 0) {
        out.push_back(order_[k]);
        continue;
      }
      const auto end = std::min(tiers_[t - 1].size(), (k + 1) * fanout_);
      for (std::size_t c = k * fanout_; c < end; ++c) stack.emplace_back(t - 1, c);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void serialize(io::ByteWriter& w) const {
    w.put<std::uint32_t>(fanout_);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tiers_.size()));
    w.put<std::uint64_t>(order_.size());
    w.putSpan<std::uint32_t>(order_);
    for (const auto& tier : tiers_) {
      w.put<std::uint64_t>(tier.size());
      w.putSpan<Rect>(tier);
    }
  }

  static PackedRTree deserialize(io::ByteReader& r) {
    PackedRTree t;
    t.fanout_ = r.get<std::uint32_t>();
    const auto tiers = r.get<std::uint32_t>();
    t.order_ = r.getVector<std::uint32_t>(r.get<std::uint64_t>());
    for (std::uint32_t i = 0; i < tiers; ++i) t.tiers_.push_back(r.getVector<Rect>(r.get<std::uint64_t>()));
    if (t.fanout_ < 2 || (!t.order_.empty() && (t.tiers_.empty() || t.tiers_[0].size() != t.order_.size())))
      throw Error(ErrorCode::IoError, "corrupt spatial index");
    return t;
  }

  bool operator==(const PackedRTree&) const = default;

 private:
  std::uint32_t fanout_ = kDefaultFanout;
  std::vector<std::uint32_t> order_;   // tier-0 slot -> entry index
  std::vector<std::vector<Rect>> tiers_;  // tiers_[0] = entry boxes in slot order
};

}  // namespace ssv
