#pragma once

// Post-build invariant suite. Grid-accelerated so it can run on full-size
// builds; the test suite checks the same properties with brute force.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "ssv/cluster.hpp"
#include "ssv/layout_input.hpp"
#include "ssv/plan.hpp"

namespace ssv {

struct Violation {
  std::string check;
  int level = 0;
  std::string message;
};

struct VerifyReport {
  std::vector<Violation> violations;  // first few per check
  std::map<std::string, std::uint64_t> counts;  // every check appears, 0 when clean

  bool ok() const {
    return std::all_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second == 0; });
  }
  void add(const std::string& check, int level, std::string message) {
    if (++counts[check] <= 5) violations.push_back({check, level, std::move(message)});
  }
  json toJson() const {
    json v = json::array();
    for (const auto& x : violations) v.push_back({{"check", x.check}, {"level", x.level}, {"message", x.message}});
    return {{"ok", ok()}, {"counts", counts}, {"violations", v}};
  }
};

inline constexpr double kOverlapSlack = 1e-9;

namespace detail {

// Uniform bucket grid over level pixels.
class CellIndex {
 public:
  CellIndex(double cw, double ch) : cw_(cw), ch_(ch) {}
  void insert(double x, double y, std::uint32_t v) { cells_[key(cellX(x), cellY(y))].push_back(v); }
  std::int64_t cellX(double x) const { return static_cast<std::int64_t>(std::floor(x / cw_)); }
  std::int64_t cellY(double y) const { return static_cast<std::int64_t>(std::floor(y / ch_)); }
  const std::vector<std::uint32_t>* at(std::int64_t cx, std::int64_t cy) const {
    auto it = cells_.find(key(cx, cy));
    return it == cells_.end() ? nullptr : &it->second;
  }

 private:
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
  }
  double cw_, ch_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

inline bool relClose(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace detail

/// Pairwise ncd on every level is at least theta (minus slack).
inline void checkOverlap(const LayoutResult& r, const LayoutPlan& plan, VerifyReport& rep) {
  rep.counts["overlap"] += 0;
  for (const auto& lv : r.levels) {
    NcdGrid grid(plan.box, plan.theta);
    for (const auto& c : lv.clusters) {
      if (auto hit = grid.nearestWithin(c.cx, c.cy, plan.theta - kOverlapSlack))
        rep.add("overlap", lv.level,
                "clusters " + std::to_string(grid.key(hit->slot)) + " and " + std::to_string(c.repId) +
                    " at ncd " + std::to_string(hit->distance));
      grid.insert(c.cx, c.cy, c.repId);
    }
  }
}

/// Every viewport-sized window [cx, cx+WV) x [cy, cy+HV) anchored at a
/// centroid holds at most K centroids. Only binding when the budget is
/// feasible.
inline void checkDensity(const LayoutResult& r, const LayoutPlan& plan, VerifyReport& rep) {
  rep.counts["density"] += 0;
  if (!plan.budgetFeasible) return;
  for (const auto& lv : r.levels) {
    detail::CellIndex idx(plan.viewportW, plan.viewportH);
    for (std::uint32_t i = 0; i < lv.clusters.size(); ++i) idx.insert(lv.clusters[i].cx, lv.clusters[i].cy, i);
    for (const auto& a : lv.clusters) {
      std::uint64_t count = 0;
      const auto x0 = idx.cellX(a.cx), y0 = idx.cellY(a.cy);
      for (std::int64_t dx = 0; dx <= 1; ++dx)
        for (std::int64_t dy = 0; dy <= 1; ++dy)
          if (const auto* cell = idx.at(x0 + dx, y0 + dy))
            for (auto j : *cell) {
              const auto& b = lv.clusters[j];
              if (b.cx >= a.cx && b.cx < a.cx + plan.viewportW && b.cy >= a.cy && b.cy < a.cy + plan.viewportH) ++count;
            }
      if (count > plan.densityBudget)
        rep.add("density", lv.level,
                "window at cluster " + std::to_string(a.repId) + " holds " + std::to_string(count) + " centroids");
    }
  }
}

/// Representatives of level i also represent clusters on level i+1, and
/// every parent link points at a cluster on the level above.
inline void checkZoomConsistency(const LayoutResult& r, const LayoutInput& in, VerifyReport& rep) {
  rep.counts["zoom"] += 0;
  std::vector<std::unordered_set<std::uint32_t>> reps(r.levels.size());
  for (std::size_t i = 0; i < r.levels.size(); ++i)
    for (const auto& c : r.levels[i].clusters) reps[i].insert(c.rep);
  for (std::size_t i = 0; i + 1 < r.levels.size(); ++i)
    for (auto x : reps[i])
      if (!reps[i + 1].count(x))
        rep.add("zoom", static_cast<int>(i + 1), "representative " + std::to_string(in.objects[x].id) + " vanishes below");
  for (std::size_t i = 1; i < r.levels.size(); ++i)
    for (const auto& c : r.levels[i].clusters)
      if (!reps[i - 1].count(c.parent))
        rep.add("zoom", static_cast<int>(i + 1), "cluster " + std::to_string(c.repId) + " has a dangling parent");
  for (std::uint32_t o = 0; o < r.objectParent.size(); ++o)
    if (!reps.back().count(r.objectParent[o]))
      rep.add("zoom", static_cast<int>(r.levels.size()), "object " + std::to_string(in.objects[o].id) + " has no cluster");
}

/// Member counts sum to n on each level; each cluster's aggregate equals a
/// direct fold over its members; the representative is its most important
/// member; isolated objects stay singletons.
inline void checkConservation(const LayoutResult& r, const LayoutInput& in, VerifyReport& rep) {
  rep.counts["conservation"] += 0;
  rep.counts["representative"] += 0;
  const auto n = in.size();
  std::vector<std::uint32_t> owner = r.objectParent;  // object -> rep index on the current level
  for (int level = static_cast<int>(r.levels.size()); level >= 1; --level) {
    const auto& lv = r.levels[static_cast<std::size_t>(level - 1)];
    if (level < static_cast<int>(r.levels.size())) {
      std::unordered_map<std::uint32_t, std::uint32_t> up;
      for (const auto& c : r.levels[static_cast<std::size_t>(level)].clusters) up.emplace(c.rep, c.parent);
      for (auto& o : owner) {
        const auto it = up.find(o);
        o = it == up.end() ? UINT32_MAX : it->second;
      }
    }
    std::uint64_t total = 0;
    std::unordered_map<std::uint32_t, std::size_t> slot;
    for (std::size_t k = 0; k < lv.clusters.size(); ++k) {
      total += lv.clusters[k].memberCount;
      slot.emplace(lv.clusters[k].rep, k);
    }
    if (total != n)
      rep.add("conservation", level, "member counts sum to " + std::to_string(total) + ", expected " + std::to_string(n));

    std::vector<AggState> direct(lv.clusters.size());
    std::vector<std::uint64_t> members(lv.clusters.size(), 0);
    std::vector<std::uint32_t> best(lv.clusters.size(), UINT32_MAX);
    for (std::uint32_t o = 0; o < n; ++o) {
      const auto it = slot.find(owner[o]);
      if (it == slot.end()) {
        rep.add("conservation", level, "object " + std::to_string(in.objects[o].id) + " lost its cluster");
        continue;
      }
      const auto k = it->second;
      direct[k].mergeFrom(in.seedAggregate(o));
      ++members[k];
      if (best[k] == UINT32_MAX || in.before(o, best[k])) best[k] = o;
    }
    for (std::size_t k = 0; k < lv.clusters.size(); ++k) {
      const auto& c = lv.clusters[k];
      if (members[k] != c.memberCount)
        rep.add("conservation", level, "cluster " + std::to_string(c.repId) + " member count mismatch");
      if (best[k] != c.rep)
        rep.add("representative", level, "cluster " + std::to_string(c.repId) + " is not led by its top member");
      const auto& a = c.agg;
      const auto& d = direct[k];
      bool same = a.width() == d.width() && a.groupCount() == d.groupCount() &&
                  std::equal(a.keys().begin(), a.keys().end(), d.keys().begin(), d.keys().end());
      for (std::size_t m = 0; same && m < a.accs().size(); ++m) {
        const auto &x = a.accs()[m], &y = d.accs()[m];
        same = x.count == y.count && x.min == y.min && x.max == y.max && detail::relClose(x.sum, y.sum, 1e-9) &&
               detail::relClose(x.sqrsum, y.sqrsum, 1e-9);
      }
      if (!same) rep.add("conservation", level, "cluster " + std::to_string(c.repId) + " aggregate differs from direct fold");
    }
  }
}

/// An object at ncd >= theta from every other object on a level must be a
/// singleton cluster there.
inline void checkOutliers(const LayoutResult& r, const LayoutInput& in, const LayoutPlan& plan, VerifyReport& rep) {
  rep.counts["outlier"] += 0;
  for (const auto& lv : r.levels) {
    const double s = plan.levelScale(lv.level);
    const double cw = plan.theta * plan.box.width, ch = plan.theta * plan.box.height;
    detail::CellIndex idx(cw, ch);
    for (std::uint32_t i = 0; i < in.size(); ++i) idx.insert(in.topX[i] * s, in.topY[i] * s, i);
    std::unordered_map<std::uint32_t, const ClusterRecord*> byRep;
    for (const auto& c : lv.clusters) byRep.emplace(c.rep, &c);
    for (std::uint32_t i = 0; i < in.size(); ++i) {
      const double x = in.topX[i] * s, y = in.topY[i] * s;
      bool isolated = true;
      const auto cx = idx.cellX(x), cy = idx.cellY(y);
      for (std::int64_t dx = -1; dx <= 1 && isolated; ++dx)
        for (std::int64_t dy = -1; dy <= 1 && isolated; ++dy)
          if (const auto* cell = idx.at(cx + dx, cy + dy))
            for (auto j : *cell)
              if (j != i && ncd(x, y, in.topX[j] * s, in.topY[j] * s, plan.box) < plan.theta) {
                isolated = false;
                break;
              }
      if (!isolated) continue;
      auto it = byRep.find(i);
      if (it == byRep.end() || it->second->memberCount != 1)
        rep.add("outlier", lv.level, "isolated object " + std::to_string(in.objects[i].id) + " is not a singleton");
    }
  }
}

inline VerifyReport verifyLayout(const LayoutResult& r, const LayoutInput& in, const LayoutPlan& plan) {
  VerifyReport rep;
  checkOverlap(r, plan, rep);
  checkDensity(r, plan, rep);
  checkZoomConsistency(r, in, rep);
  checkConservation(r, in, rep);
  checkOutliers(r, in, plan, rep);
  return rep;
}

}  // namespace ssv
