#pragma once

// Shared fixtures and brute-force oracles for the test suites. The oracles
// deliberately avoid the library's own grids, trees and aggregators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ssv/ssv.hpp"

namespace ssvtest {

using namespace ssv;

inline std::filesystem::path dataDir() { return SSV_TEST_DATA_DIR; }

inline std::filesystem::path scratchDir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ssv-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// x/y/z spec with count, sum(z), min(z), max(z), sqrsum(z) and a bbox hover.
inline SsvSpec xyzSpec(std::uint64_t budget = 300, const std::string& extra = "") {
  std::string cfg = R"("densityBudget": )" + std::to_string(budget);
  if (!extra.empty()) cfg += ", " + extra;
  return parseSpec(R"({
    "data": {"source": "gen.csv", "columns": [{"name": "x"}, {"name": "y"}, {"name": "z"}]},
    "marks": {
      "cluster": {"mode": "circle", "aggregate": {"measures": [
        {"function": "count"}, {"function": "sum", "field": "z"}, {"function": "min", "field": "z"},
        {"function": "max", "field": "z"}, {"function": "sqrsum", "field": "z"}]}},
      "hover": {"ranklist": {"topk": 3}, "boundary": "bbox"}},
    "layout": {"x": {"field": "x"}, "y": {"field": "y"}, "z": {"field": "z", "order": "descending"}},
    "config": {)" + cfg + "}}");
}

struct Build {
  Dataset data;
  LayoutPlan plan;
  LayoutInput input;
  LayoutResult layout;
  KdPartitionTree tree;
  DistributedResult dist;  // only for distributed builds
};

inline Build prepare(const Dataset& d, const SsvSpec& spec) {
  Build b;
  b.data = d;
  b.plan = compilePlan(spec, computeStats(d, "x", "y"));
  b.input = prepareLayoutInput(d, b.plan);
  return b;
}

inline Build seqBuild(const Dataset& d, const SsvSpec& spec, std::uint64_t capacity = 2'000'000) {
  auto b = prepare(d, spec);
  b.layout = clusterLevels(b.input, b.plan);
  b.tree = buildKdTree(b.input.objects, capacity);
  return b;
}

inline Build distBuild(const Dataset& d, const SsvSpec& spec, std::uint64_t capacity, int workers) {
  auto b = prepare(d, spec);
  b.dist = distributedCluster(b.input, b.plan, capacity, workers);
  b.layout = b.dist.layout;
  b.tree = b.dist.tree;
  return b;
}

// ---- oracles ---------------------------------------------------------------

inline double oracleNcd(double ax, double ay, double bx, double by, double wb, double hb) {
  return std::max(std::fabs(ax - bx) / wb, std::fabs(ay - by) / hb);
}

/// Smallest pairwise ncd on a level, O(m^2). +inf when m < 2.
inline double minPairwiseNcd(const std::vector<ClusterRecord>& cs, double wb, double hb) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j)
      best = std::min(best, oracleNcd(cs[i].cx, cs[i].cy, cs[j].cx, cs[j].cy, wb, hb));
  return best;
}

/// Largest count of centroids in a half-open viewport window anchored at a
/// centroid, O(m^2).
inline std::uint64_t maxWindowCount(const std::vector<ClusterRecord>& cs, double vw, double vh) {
  std::uint64_t best = 0;
  for (const auto& a : cs) {
    std::uint64_t c = 0;
    for (const auto& b : cs)
      if (b.cx >= a.cx && b.cx < a.cx + vw && b.cy >= a.cy && b.cy < a.cy + vh) ++c;
    best = std::max(best, c);
  }
  return best;
}

/// Packing count straight from its definition.
inline std::uint64_t oraclePack(double theta, double vw, double vh, double wb, double hb) {
  return static_cast<std::uint64_t>(std::ceil(vw / (wb * theta))) *
         static_cast<std::uint64_t>(std::ceil(vh / (hb * theta)));
}

/// Smallest theta on a 1e-3 grid in (0, 1] whose packing count fits K; 1 when
/// none does.
inline double gridScanTheta(std::uint64_t k, double vw, double vh, double wb, double hb) {
  for (int i = 1; i <= 1000; ++i) {
    const double t = i / 1000.0;
    if (oraclePack(t, vw, vh, wb, hb) <= k) return t;
  }
  return 1.0;
}

/// Object index -> representative index on every level, by walking parents.
inline std::vector<std::vector<std::uint32_t>> ownersByLevel(const LayoutResult& r) {
  const auto eta = r.levels.size();
  std::vector<std::vector<std::uint32_t>> owners(eta);
  owners[eta - 1] = r.objectParent;
  for (std::size_t li = eta - 1; li-- > 0;) {
    std::map<std::uint32_t, std::uint32_t> up;
    for (const auto& c : r.levels[li + 1].clusters) up[c.rep] = c.parent;
    owners[li].resize(owners[li + 1].size());
    for (std::size_t o = 0; o < owners[li + 1].size(); ++o) owners[li][o] = up.at(owners[li + 1][o]);
  }
  return owners;
}

struct DirectAgg {
  std::uint64_t count = 0;
  double sum = 0, sqrsum = 0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
};

inline bool relEq(double a, double b, double tol) {
  return a == b || std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

struct ConservationResult {
  std::uint64_t memberSumMismatches = 0;
  std::uint64_t aggregateMismatches = 0;
  double worstRelError = 0;
};

/// Per level: sum of member counts equals n, and every cluster's measures
/// match a fold over its members computed here. The spec's measure order is
/// count, sum(z), min(z), max(z), sqrsum(z).
inline ConservationResult checkConservationOracle(const Build& b) {
  ConservationResult res;
  const auto owners = ownersByLevel(b.layout);
  const auto n = b.input.size();
  for (std::size_t li = 0; li < b.layout.levels.size(); ++li) {
    std::map<std::uint32_t, DirectAgg> direct;
    for (std::uint32_t o = 0; o < n; ++o) {
      auto& d = direct[owners[li][o]];
      const double z = b.input.objects[o].importance;
      ++d.count;
      d.sum += z;
      d.sqrsum += z * z;
      d.min = std::min(d.min, z);
      d.max = std::max(d.max, z);
    }
    std::uint64_t total = 0;
    for (const auto& c : b.layout.levels[li].clusters) {
      total += c.memberCount;
      const auto it = direct.find(c.rep);
      if (it == direct.end()) {
        ++res.aggregateMismatches;
        continue;
      }
      const auto& d = it->second;
      const auto t = c.agg.totals();
      if (t.size() < 5) {
        ++res.aggregateMismatches;
        continue;
      }
      const double e1 = d.sum == 0 ? 0 : std::fabs(t[1].value(AggFunction::Sum) - d.sum) / std::fabs(d.sum);
      const double e2 = std::fabs(t[4].value(AggFunction::Sqrsum) - d.sqrsum) / std::max(d.sqrsum, 1e-300);
      res.worstRelError = std::max({res.worstRelError, e1, e2});
      const bool ok = c.memberCount == d.count && t[0].value(AggFunction::Count) == static_cast<double>(d.count) &&
                      t[2].value(AggFunction::Min) == d.min && t[3].value(AggFunction::Max) == d.max &&
                      relEq(t[1].value(AggFunction::Sum), d.sum, 1e-9) &&
                      relEq(t[4].value(AggFunction::Sqrsum), d.sqrsum, 1e-9);
      if (!ok) ++res.aggregateMismatches;
    }
    if (total != n || direct.size() != b.layout.levels[li].clusters.size()) ++res.memberSumMismatches;
  }
  return res;
}

/// Level i representative ids are a subset of level i+1's.
inline bool repsNested(const LayoutResult& r) {
  for (std::size_t li = 0; li + 1 < r.levels.size(); ++li) {
    std::set<ObjectId> below;
    for (const auto& c : r.levels[li + 1].clusters) below.insert(c.repId);
    for (const auto& c : r.levels[li].clusters)
      if (!below.count(c.repId)) return false;
  }
  return true;
}

/// Rep ids of every cluster whose mark box meets the closed rectangle.
inline std::vector<ObjectId> linearScan(const LevelLayout& lv, const LayoutPlan& plan, double x0, double y0, double x1,
                                        double y1) {
  std::vector<std::pair<double, ObjectId>> hits;
  const double hw = plan.box.width / 2, hh = plan.box.height / 2;
  for (const auto& c : lv.clusters)
    if (c.cx - hw <= x1 && c.cx + hw >= x0 && c.cy - hh <= y1 && c.cy + hh >= y0) hits.emplace_back(c.priority, c.repId);
  std::sort(hits.begin(), hits.end(), [](auto& a, auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<ObjectId> out;
  for (auto& h : hits) out.push_back(h.second);
  return out;
}

}  // namespace ssvtest
