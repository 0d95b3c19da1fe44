#pragma once

// Single-node bottom-up hierarchical clustering.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ssv/aggregate.hpp"
#include "ssv/geometry.hpp"
#include "ssv/layout_input.hpp"
#include "ssv/ncd_index.hpp"
#include "ssv/plan.hpp"

namespace ssv {

/// One mark on one zoom level. The representative is referenced by its
/// index into LayoutInput::objects; `repId`/`priority` are cached copies.
struct ClusterRecord {
  int level = 0;
  double cx = 0;  // level-pixel centroid = representative's projection
  double cy = 0;
  std::uint32_t rep = 0;
  ObjectId repId = 0;
  double priority = 0;
  /// Representative index of the cluster one level up that contains this
  /// one (own rep on level 1).
  std::uint32_t parent = 0;
  std::uint64_t memberCount = 1;
  AggState agg;
  std::vector<std::uint32_t> ranklist;  // most important first
  std::vector<Point> boundary;          // raw units: hull vertices, or {min, max} corners for bbox

  bool operator==(const ClusterRecord&) const = default;
};

struct LevelLayout {
  int level = 0;
  std::vector<ClusterRecord> clusters;
  bool operator==(const LevelLayout&) const = default;
};

struct LayoutResult {
  std::vector<LevelLayout> levels;  // levels[0] is level 1
  /// Per object, the representative index of its bottom-level cluster.
  std::vector<std::uint32_t> objectParent;
  bool operator==(const LayoutResult&) const = default;

  const LevelLayout& level(int i) const { return levels.at(static_cast<std::size_t>(i - 1)); }
};

/// Cluster construction and merging against one layout input and plan.
class ClusterOps {
 public:
  ClusterOps(const LayoutInput& input, const LayoutPlan& plan) : in_(input), plan_(plan) {}

  const LayoutInput& input() const noexcept { return in_; }
  const LayoutPlan& plan() const noexcept { return plan_; }

  /// Singleton cluster on the fake bottom level.
  ClusterRecord singleton(std::uint32_t i) const {
    ClusterRecord c;
    c.level = plan_.numLevels + 1;
    c.rep = i;
    c.repId = in_.objects[i].id;
    c.priority = in_.priority[i];
    c.parent = i;
    c.memberCount = 1;
    c.agg = in_.seedAggregate(i);
    if (plan_.topk > 0) c.ranklist.push_back(i);
    const Point p{in_.objects[i].rawX, in_.objects[i].rawY};
    if (plan_.boundary == BoundaryMode::ConvexHull)
      c.boundary = {p};
    else if (plan_.boundary == BoundaryMode::BBox)
      c.boundary = {p, p};
    place(c, c.level);
    return c;
  }

  void place(ClusterRecord& c, int level) const {
    const double s = plan_.levelScale(level);
    c.level = level;
    c.cx = in_.topX[c.rep] * s;
    c.cy = in_.topY[c.rep] * s;
  }

  bool moreImportant(const ClusterRecord& a, const ClusterRecord& b) const noexcept {
    return a.priority > b.priority || (a.priority == b.priority && a.repId < b.repId);
  }

  /// Folds `from` into `into`; `into` keeps its centroid and representative.
  void absorb(ClusterRecord& into, const ClusterRecord& from) const {
    into.memberCount += from.memberCount;
    into.agg.mergeFrom(from.agg);
    if (plan_.topk > 0) mergeRanklists(into.ranklist, from.ranklist);
    switch (plan_.boundary) {
      case BoundaryMode::None: break;
      case BoundaryMode::BBox:
        into.boundary[0].x = std::min(into.boundary[0].x, from.boundary[0].x);
        into.boundary[0].y = std::min(into.boundary[0].y, from.boundary[0].y);
        into.boundary[1].x = std::max(into.boundary[1].x, from.boundary[1].x);
        into.boundary[1].y = std::max(into.boundary[1].y, from.boundary[1].y);
        break;
      case BoundaryMode::ConvexHull: {
        std::vector<Point> pts = into.boundary;
        pts.insert(pts.end(), from.boundary.begin(), from.boundary.end());
        into.boundary = convexHull(std::move(pts));
        break;
      }
    }
  }

 private:
  void mergeRanklists(std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) const {
    std::vector<std::uint32_t> out;
    const auto k = static_cast<std::size_t>(plan_.topk);
    out.reserve(std::min(k, a.size() + b.size()));
    std::size_t i = 0, j = 0;
    while (out.size() < k && (i < a.size() || j < b.size())) {
      if (j == b.size() || (i < a.size() && in_.before(a[i], b[j])))
        out.push_back(a[i++]);
      else
        out.push_back(b[j++]);
    }
    a = std::move(out);
  }

  const LayoutInput& in_;
  const LayoutPlan& plan_;
};

/// Nearest cluster to `q` under ncd; ties go to the smaller representative id.
inline std::pair<std::size_t, double> nearestNeighborNcd(std::span<const ClusterRecord> clusters, Point q,
                                                         MarkBox box, double cell = 1.0) {
  if (clusters.empty()) throw Error(ErrorCode::EmptyIndex, "no clusters to search");
  NcdGrid grid(box, cell);
  grid.reserve(clusters.size());
  for (const auto& c : clusters) grid.insert(c.cx, c.cy, c.repId);
  const auto hit = grid.nearest(q.x, q.y);
  return {hit.slot, hit.distance};
}

/// Builds level `level` from the clusters one level below. Children are
/// visited most-important first; each is merged into its nearest existing
/// cluster when that ncd is below theta, otherwise it starts a new cluster.
/// Sets every child's `parent`. Output is in importance order.
inline std::vector<ClusterRecord> clusterStep(const ClusterOps& ops, std::span<ClusterRecord> children, int level) {
  const auto& plan = ops.plan();
  std::vector<std::uint32_t> order(children.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return ops.moreImportant(children[a], children[b]); });

  std::vector<ClusterRecord> out;
  NcdGrid grid(plan.box, plan.theta);
  grid.reserve(children.size());
  const double scale = plan.levelScale(level);
  const auto& in = ops.input();

  for (auto idx : order) {
    auto& child = children[idx];
    const double x = in.topX[child.rep] * scale;
    const double y = in.topY[child.rep] * scale;
    if (auto hit = grid.nearestWithin(x, y, plan.theta)) {
      auto& target = out[hit->slot];
      ops.absorb(target, child);
      child.parent = target.rep;
    } else {
      ClusterRecord c = child;
      c.level = level;
      c.cx = x;
      c.cy = y;
      c.parent = c.rep;
      child.parent = c.rep;
      grid.insert(x, y, c.repId);
      out.push_back(std::move(c));
    }
  }
  return out;
}

/// Sequential layout of levels 1..numLevels.
inline LayoutResult clusterLevels(const LayoutInput& input, const LayoutPlan& plan) {
  if (input.size() == 0) throw Error(ErrorCode::EmptyDataset, "no objects to lay out");
  ClusterOps ops(input, plan);
  const int eta = plan.numLevels;

  std::vector<ClusterRecord> below(input.size());
  for (std::uint32_t i = 0; i < input.size(); ++i) below[i] = ops.singleton(i);

  LayoutResult result;
  result.levels.resize(static_cast<std::size_t>(eta));
  for (int level = eta; level >= 1; --level) {
    auto current = clusterStep(ops, below, level);
    if (level == eta) {
      result.objectParent.resize(input.size());
      for (const auto& c : below) result.objectParent[c.rep] = c.parent;
    } else {
      result.levels[static_cast<std::size_t>(level)].clusters = std::move(below);
    }
    below = std::move(current);
  }
  result.levels[0].clusters = std::move(below);
  for (int level = 1; level <= eta; ++level) {
    auto& lv = result.levels[static_cast<std::size_t>(level - 1)];
    lv.level = level;
    if (level == 1)
      for (auto& c : lv.clusters) c.parent = c.rep;
  }
  return result;
}

}  // namespace ssv
