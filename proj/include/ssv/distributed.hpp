#pragma once

// Partitioned layout: KD-tree partitioning, per-partition clustering in
// parallel, then greedy merging of clusters along each KD split.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ssv/cluster.hpp"
#include "ssv/kdtree.hpp"
#include "ssv/parallel.hpp"

namespace ssv {

/// Clusters near one KD split on one level. `halfWidth` is theta * WB for a
/// split on X (vertical line) or theta * HB for a split on Y, in level px.
struct SplitMergeTask {
  Axis axis = Axis::X;
  double splitPx = 0;
  double halfWidth = 0;
  std::vector<ClusterRecord*> candidates;
};

struct MergeEvent {
  ObjectId victim = 0;
  ObjectId survivor = 0;
  bool residual = false;  // found by the cleanup sweep, not the greedy pass
  bool operator==(const MergeEvent&) const = default;
};

inline bool inBand(const ClusterRecord& c, Axis axis, double splitPx, double halfWidth) noexcept {
  const double d = axis == Axis::X ? c.cx - splitPx : c.cy - splitPx;
  return std::abs(d) <= halfWidth;
}

/// Greedy pass over the band. Candidates are visited in order of the
/// coordinate running along the split (x for a split on Y, y for a split on
/// X), ties by representative id. Keeps the last kept/surviving cluster as
/// alpha; a current cluster within theta of alpha is merged with it, the
/// less important one folding into the other. Victims are marked with
/// memberCount = 0.
///
/// The single pass can miss a cross-split pair when a same-side cluster sits
/// between them at exactly theta from its neighbour. A second sweep compares
/// each survivor with every earlier survivor inside the theta window along
/// the sort key and merges what is left; on typical inputs it finds nothing.
inline std::vector<MergeEvent> mergeAlongSplit(SplitMergeTask& task, const ClusterOps& ops) {
  auto& band = task.candidates;
  const bool byX = task.axis == Axis::Y;
  auto key = [byX](const ClusterRecord* c) { return byX ? c->cx : c->cy; };
  std::sort(band.begin(), band.end(), [&](const ClusterRecord* a, const ClusterRecord* b) {
    return key(a) < key(b) || (key(a) == key(b) && a->repId < b->repId);
  });

  const auto& plan = ops.plan();
  std::vector<MergeEvent> events;
  auto merge = [&](ClusterRecord* a, ClusterRecord* b, bool residual) {
    ClusterRecord* survivor = ops.moreImportant(*a, *b) ? a : b;
    ClusterRecord* victim = survivor == a ? b : a;
    ops.absorb(*survivor, *victim);
    victim->memberCount = 0;
    events.push_back({victim->repId, survivor->repId, residual});
    return survivor;
  };

  ClusterRecord* alpha = nullptr;
  for (ClusterRecord* beta : band) {
    if (!alpha || ncd(alpha->cx, alpha->cy, beta->cx, beta->cy, plan.box) >= plan.theta)
      alpha = beta;
    else
      alpha = merge(alpha, beta, false);
  }

  const double window = plan.theta * (byX ? plan.box.width : plan.box.height);
  for (std::size_t b = 1; b < band.size(); ++b) {
    for (std::size_t a = b; a-- > 0 && band[b]->memberCount > 0 && key(band[b]) - key(band[a]) < window;) {
      if (band[a]->memberCount == 0) continue;
      if (ncd(band[a]->cx, band[a]->cy, band[b]->cx, band[b]->cy, plan.box) < plan.theta) merge(band[a], band[b], true);
    }
  }
  return events;
}

struct SplitMergeResult {
  std::vector<ClusterRecord> clusters;  // survivors and out-of-band clusters, input order
  std::vector<MergeEvent> merges;
};

/// Value-level form: filters the band from `clusters`, merges, and returns
/// the remaining clusters.
inline SplitMergeResult mergeAlongSplit(std::vector<ClusterRecord> clusters, Axis axis, double splitPx,
                                        const ClusterOps& ops) {
  const auto& plan = ops.plan();
  SplitMergeTask task{axis, splitPx, plan.theta * (axis == Axis::X ? plan.box.width : plan.box.height), {}};
  for (auto& c : clusters)
    if (inBand(c, axis, splitPx, task.halfWidth)) task.candidates.push_back(&c);
  SplitMergeResult r;
  r.merges = mergeAlongSplit(task, ops);
  for (auto& c : clusters)
    if (c.memberCount > 0) r.clusters.push_back(std::move(c));
  return r;
}

struct PhaseTimings {
  double kdBuildMs = 0;
  double redistributeMs = 0;
  double parallelClusterMs = 0;
  double splitMergeMs = 0;
};

struct DistributedResult {
  LayoutResult layout;
  KdPartitionTree tree;
  PhaseTimings timings;
  std::uint64_t splitMerges = 0;
  std::uint64_t residualMerges = 0;  // merges the greedy pass alone would have missed
  std::uint64_t maxBandSize = 0;
};

namespace detail {

using Clock = std::chrono::steady_clock;
inline double msSince(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

inline void canonicalOrder(std::vector<ClusterRecord>& v) {
  std::sort(v.begin(), v.end(), [](const ClusterRecord& a, const ClusterRecord& b) {
    return a.priority > b.priority || (a.priority == b.priority && a.repId < b.repId);
  });
}

}  // namespace detail

/// Split line of KD node `n` in level-`level` pixel space.
inline double splitPixel(const KdNode& n, const LayoutPlan& plan, int level) {
  const double s = plan.levelScale(level);
  return n.axis == Axis::X ? plan.projectX(n.splitValue) * s : plan.projectY(n.splitValue) * s;
}

inline DistributedResult distributedCluster(const LayoutInput& input, const LayoutPlan& plan, std::uint64_t capacity,
                                            int workers) {
  if (input.size() == 0) throw Error(ErrorCode::EmptyDataset, "no objects to lay out");
  using detail::Clock;
  DistributedResult res;
  ClusterOps ops(input, plan);
  const int eta = plan.numLevels;

  // Step 1: partition the fake bottom level once; every level reuses it.
  auto t0 = Clock::now();
  res.tree = buildKdTree(input.objects, capacity);
  res.timings.kdBuildMs = detail::msSince(t0);

  t0 = Clock::now();
  const std::size_t T = res.tree.partitionCount();
  std::vector<std::vector<ClusterRecord>> parts(T);
  for (std::uint32_t i = 0; i < input.size(); ++i) {
    const auto& o = input.objects[i];
    parts[static_cast<std::size_t>(res.tree.partitionOf(o.rawX, o.rawY, o.id))].push_back(ops.singleton(i));
  }
  res.timings.redistributeMs = detail::msSince(t0);

  const auto splitGroups = res.tree.splitsBottomUp();
  res.layout.levels.resize(static_cast<std::size_t>(eta));
  auto partitionId = [](std::size_t i) { return static_cast<int>(i); };

  for (int level = eta; level >= 1; --level) {
    // Step 2: cluster every partition independently.
    t0 = Clock::now();
    std::vector<std::vector<ClusterRecord>> next(T);
    parallelForPartitions(T, workers, partitionId, [&](std::size_t j) { next[j] = clusterStep(ops, parts[j], level); });
    res.timings.parallelClusterMs += detail::msSince(t0);

    // Step 3: merge along splits, deepest first; one depth at a time.
    t0 = Clock::now();
    std::unordered_map<std::uint32_t, std::uint32_t> redirect;  // victim rep -> survivor rep
    for (const auto& group : splitGroups) {
      std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> localRedirects(group.size());
      std::vector<std::uint64_t> residual(group.size(), 0);
      std::vector<std::uint64_t> bandSizes(group.size());
      parallelFor(group.size(), workers, [&](std::size_t g) {
        const auto& node = res.tree.nodes[static_cast<std::size_t>(group[g])];
        SplitMergeTask task{node.axis, splitPixel(node, plan, level),
                            plan.theta * (node.axis == Axis::X ? plan.box.width : plan.box.height), {}};
        for (int pid : res.tree.leavesUnder(group[g]))
          for (auto& c : next[static_cast<std::size_t>(pid)])
            if (c.memberCount > 0 && inBand(c, task.axis, task.splitPx, task.halfWidth)) task.candidates.push_back(&c);
        bandSizes[g] = task.candidates.size();
        std::unordered_map<ObjectId, std::uint32_t> repOf;
        for (auto* c : task.candidates) repOf.emplace(c->repId, c->rep);
        for (const auto& e : mergeAlongSplit(task, ops)) {
          localRedirects[g].emplace_back(repOf.at(e.victim), repOf.at(e.survivor));
          residual[g] += e.residual;
        }
      });
      for (std::size_t g = 0; g < group.size(); ++g) {
        res.maxBandSize = std::max(res.maxBandSize, bandSizes[g]);
        res.splitMerges += localRedirects[g].size();
        res.residualMerges += residual[g];
        for (auto [v, s] : localRedirects[g]) redirect[v] = s;
      }
    }
    for (auto& p : next) std::erase_if(p, [](const ClusterRecord& c) { return c.memberCount == 0; });
    if (!redirect.empty()) {
      for (auto& p : parts)
        for (auto& c : p)
          for (auto it = redirect.find(c.parent); it != redirect.end(); it = redirect.find(c.parent)) c.parent = it->second;
    }
    res.timings.splitMergeMs += detail::msSince(t0);

    // Retire the level below into the result.
    if (level == eta) {
      res.layout.objectParent.resize(input.size());
      for (const auto& p : parts)
        for (const auto& c : p) res.layout.objectParent[c.rep] = c.parent;
    } else {
      auto& dst = res.layout.levels[static_cast<std::size_t>(level)];
      for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(dst.clusters));
      detail::canonicalOrder(dst.clusters);
    }
    parts = std::move(next);
  }
  auto& top = res.layout.levels[0];
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(top.clusters));
  detail::canonicalOrder(top.clusters);
  for (int level = 1; level <= eta; ++level) res.layout.levels[static_cast<std::size_t>(level - 1)].level = level;
  return res;
}

}  // namespace ssv
