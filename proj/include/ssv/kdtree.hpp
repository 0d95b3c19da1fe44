#pragma once

// KD-tree spatial partitioning over raw object coordinates.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "json.hpp"
#include "ssv/geometry.hpp"
#include "ssv/layout_input.hpp"

namespace ssv {

enum class Axis : std::uint8_t { X, Y };

struct KdNode {
  int left = -1;
  int right = -1;
  int depth = 0;
  Axis axis = Axis::X;
  double splitValue = 0;
  ObjectId splitId = 0;  // ties on splitValue are broken by id
  int partitionId = -1;  // leaves only
  std::uint64_t objectCount = 0;
  Rect extent;  // raw units, closed

  bool isLeaf() const noexcept { return left < 0; }
  bool operator==(const KdNode&) const = default;
};

/// Binary partition of the plane by alternating median splits. Axis order
/// by depth is X, Y, X, ... A point goes left iff (coordinate, id) <=
/// (splitValue, splitId), which keeps sibling counts within one even when
/// many points share a coordinate.
class KdPartitionTree {
 public:
  std::vector<KdNode> nodes;  // nodes[0] is the root
  std::vector<int> leaves;    // node index per partition id

  std::size_t partitionCount() const noexcept { return leaves.size(); }
  const KdNode& root() const { return nodes.front(); }
  const KdNode& leaf(int partitionId) const { return nodes[static_cast<std::size_t>(leaves.at(partitionId))]; }

  static bool goesLeft(const KdNode& n, double x, double y, ObjectId id) noexcept {
    const double v = n.axis == Axis::X ? x : y;
    return v < n.splitValue || (v == n.splitValue && id <= n.splitId);
  }

  int partitionOf(double x, double y, ObjectId id) const {
    int i = 0;
    while (!nodes[i].isLeaf()) i = goesLeft(nodes[i], x, y, id) ? nodes[i].left : nodes[i].right;
    return nodes[i].partitionId;
  }

  int maxDepth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }

  /// Internal nodes grouped by depth, deepest first.
  std::vector<std::vector<int>> splitsBottomUp() const {
    std::vector<std::vector<int>> byDepth(static_cast<std::size_t>(maxDepth()) + 1);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (!nodes[i].isLeaf()) byDepth[static_cast<std::size_t>(nodes[i].depth)].push_back(static_cast<int>(i));
    std::vector<std::vector<int>> out;
    for (auto it = byDepth.rbegin(); it != byDepth.rend(); ++it)
      if (!it->empty()) out.push_back(std::move(*it));
    return out;
  }

  /// Partition ids of the leaves under node `i`, left to right.
  std::vector<int> leavesUnder(int i) const {
    std::vector<int> out;
    std::vector<int> stack{i};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      if (nodes[n].isLeaf()) {
        out.push_back(nodes[n].partitionId);
      } else {
        stack.push_back(nodes[n].right);
        stack.push_back(nodes[n].left);
      }
    }
    return out;
  }

  bool operator==(const KdPartitionTree&) const = default;
};

namespace detail {

struct KdBuilder {
  std::span<const PointObject> objects;
  std::uint64_t capacity;
  KdPartitionTree tree;

  bool less(Axis axis, std::uint32_t a, std::uint32_t b) const {
    const double va = axis == Axis::X ? objects[a].rawX : objects[a].rawY;
    const double vb = axis == Axis::X ? objects[b].rawX : objects[b].rawY;
    return va < vb || (va == vb && objects[a].id < objects[b].id);
  }

  int build(std::span<std::uint32_t> idx, int depth, Rect extent) {
    const int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    KdNode node;
    node.depth = depth;
    node.objectCount = idx.size();
    node.extent = extent;
    node.axis = depth % 2 == 0 ? Axis::X : Axis::Y;
    if (idx.size() <= capacity) {
      node.partitionId = static_cast<int>(tree.leaves.size());
      tree.leaves.push_back(self);
      tree.nodes[self] = node;
      return self;
    }
    // Lower median goes left: left gets ceil(n/2) objects.
    const std::size_t mid = (idx.size() - 1) / 2;
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(mid), idx.end(),
                     [&](auto a, auto b) { return less(node.axis, a, b); });
    const auto& m = objects[idx[mid]];
    node.splitValue = node.axis == Axis::X ? m.rawX : m.rawY;
    node.splitId = m.id;
    Rect le = extent, re = extent;
    if (node.axis == Axis::X) {
      le.xMax = node.splitValue;
      re.xMin = node.splitValue;
    } else {
      le.yMax = node.splitValue;
      re.yMin = node.splitValue;
    }
    tree.nodes[self] = node;
    const int l = build(idx.subspan(0, mid + 1), depth + 1, le);
    const int r = build(idx.subspan(mid + 1), depth + 1, re);
    tree.nodes[self].left = l;
    tree.nodes[self].right = r;
    return self;
  }
};

}  // namespace detail

/// Recursive median splits until every leaf holds at most `capacity` objects.
inline KdPartitionTree buildKdTree(std::span<const PointObject> objects, std::uint64_t capacity) {
  if (capacity < 1) throw Error(ErrorCode::InvalidArgument, "partition capacity must be >= 1");
  Rect extent{0, 0, 0, 0};
  if (!objects.empty()) {
    extent = {objects[0].rawX, objects[0].rawY, objects[0].rawX, objects[0].rawY};
    for (const auto& o : objects) extent.expand({o.rawX, o.rawY, o.rawX, o.rawY});
  }
  std::vector<std::uint32_t> idx(objects.size());
  std::iota(idx.begin(), idx.end(), 0u);
  detail::KdBuilder b{objects, capacity, {}};
  b.tree.nodes.reserve(2 * (objects.size() / capacity + 1));
  b.build(idx, 0, extent);
  return std::move(b.tree);
}

inline json toJson(const KdPartitionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json j = {{"depth", n.depth},
              {"objectCount", n.objectCount},
              {"extent", {n.extent.xMin, n.extent.yMin, n.extent.xMax, n.extent.yMax}}};
    if (n.isLeaf()) {
      j["partitionId"] = n.partitionId;
    } else {
      j["axis"] = n.axis == Axis::X ? "x" : "y";
      j["splitValue"] = n.splitValue;
      j["splitId"] = n.splitId;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  return {{"nodes", nodes}, {"partitions", t.leaves.size()}};
}

inline KdPartitionTree kdTreeFromJson(const json& j) {
  KdPartitionTree t;
  for (const auto& nj : j.at("nodes")) {
    KdNode n;
    n.depth = nj.at("depth").get<int>();
    n.objectCount = nj.at("objectCount").get<std::uint64_t>();
    const auto& e = nj.at("extent");
    n.extent = {e[0].get<double>(), e[1].get<double>(), e[2].get<double>(), e[3].get<double>()};
    n.axis = n.depth % 2 == 0 ? Axis::X : Axis::Y;
    if (nj.contains("partitionId")) {
      n.partitionId = nj["partitionId"].get<int>();
    } else {
      n.axis = nj.at("axis").get<std::string>() == "x" ? Axis::X : Axis::Y;
      n.splitValue = nj.at("splitValue").get<double>();
      n.splitId = nj.at("splitId").get<ObjectId>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
    }
    t.nodes.push_back(n);
  }
  t.leaves.assign(j.at("partitions").get<std::size_t>(), -1);
  for (std::size_t i = 0; i < t.nodes.size(); ++i)
    if (t.nodes[i].isLeaf()) t.leaves.at(static_cast<std::size_t>(t.nodes[i].partitionId)) = static_cast<int>(i);
  return t;
}

}  // namespace ssv
