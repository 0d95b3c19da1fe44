#pragma once

// Scaling benchmark: index synthetic skewed datasets of growing size and
// replay a pan/zoom trace against each build.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssv/pipeline.hpp"
#include "ssv/server.hpp"

namespace ssv {

struct FetchSample {
  int level = 0;
  Viewport viewport;
  std::size_t clusters = 0;
  double ms = 0;
};

struct BenchRow {
  std::uint64_t n = 0;
  int numLevels = 0;
  std::size_t partitions = 0;
  PhaseTimings phases;
  double indexBuildMs = 0;
  double indexMs = 0;  // layout + index build, fastest of the repeats
  std::size_t fetches = 0;
  double fetchP50Ms = 0;
  double fetchP95Ms = 0;
  double fetchMaxMs = 0;
  std::uint64_t residualMerges = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  /// indexMs[i] / indexMs[i-1] for consecutive rows.
  std::vector<double> ratios() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < rows.size(); ++i) out.push_back(rows[i].indexMs / rows[i - 1].indexMs);
    return out;
  }

  json toJson() const {
    json rj = json::array();
    for (const auto& r : rows)
      rj.push_back({{"n", r.n},
                    {"numLevels", r.numLevels},
                    {"partitions", r.partitions},
                    {"phasesMs",
                     {{"kdBuild", r.phases.kdBuildMs},
                      {"redistribute", r.phases.redistributeMs},
                      {"parallelCluster", r.phases.parallelClusterMs},
                      {"splitMerge", r.phases.splitMergeMs},
                      {"indexBuild", r.indexBuildMs}}},
                    {"indexMs", r.indexMs},
                    {"fetch", {{"count", r.fetches}, {"p50Ms", r.fetchP50Ms}, {"p95Ms", r.fetchP95Ms}, {"maxMs", r.fetchMaxMs}}},
                    {"residualMerges", r.residualMerges}});
    return {{"rows", rj}, {"indexTimeRatios", ratios()}};
  }

  void writeCsv(std::ostream& out) const {
    out << "n,num_levels,partitions,kd_build_ms,redistribute_ms,parallel_cluster_ms,split_merge_ms,index_build_ms,"
           "index_ms,fetches,fetch_p50_ms,fetch_p95_ms,fetch_max_ms\n";
    for (const auto& r : rows)
      out << r.n << ',' << r.numLevels << ',' << r.partitions << ',' << r.phases.kdBuildMs << ','
          << r.phases.redistributeMs << ',' << r.phases.parallelClusterMs << ',' << r.phases.splitMergeMs << ','
          << r.indexBuildMs << ',' << r.indexMs << ',' << r.fetches << ',' << r.fetchP50Ms << ',' << r.fetchP95Ms
          << ',' << r.fetchMaxMs << '\n';
  }
};

/// Nearest-rank percentile of unsorted samples, q in [0, 1].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

/// Default spec for generated x/y/z data.
inline SsvSpec benchSpec() {
  return parseSpec(R"({
    "data": {"source": "generated.csv", "columns": [
      {"name": "x", "type": "number"}, {"name": "y", "type": "number"}, {"name": "z", "type": "number"}]},
    "layout": {"x": {"field": "x"}, "y": {"field": "y"}, "z": {"field": "z", "order": "descending"}},
    "marks": {
      "cluster": {"mode": "circle", "aggregate": {"measures": [{"function": "count"}, {"function": "avg", "field": "z"}]}},
      "hover": {"ranklist": {"topk": 3}, "boundary": "bbox"}},
    "config": {"densityBudget": 300}
  })");
}

/// Viewport-sized window (centered on a centroid) holding the most
/// centroids among `rows`, clamped to the level canvas.
inline Viewport densestWindow(const std::vector<StoredCluster>& rows, const LayoutPlan& plan, int level,
                              const Viewport& fallback) {
  if (rows.empty()) return fallback;
  const double w = plan.viewportW, h = plan.viewportH;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells;
  auto cellOf = [&](double x, double y) {
    return std::pair{static_cast<std::int64_t>(std::floor(x / w)), static_cast<std::int64_t>(std::floor(y / h))};
  };
  for (std::size_t i = 0; i < rows.size(); ++i) cells[cellOf(rows[i].cx, rows[i].cy)].push_back(i);
  std::size_t best = 0, bestCount = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [cx, cy] = cellOf(rows[i].cx, rows[i].cy);
    std::size_t count = 0;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells.find({cx + dx, cy + dy});
        if (it == cells.end()) continue;
        for (auto j : it->second)
          if (std::abs(rows[j].cx - rows[i].cx) <= w / 2 && std::abs(rows[j].cy - rows[i].cy) <= h / 2) ++count;
      }
    if (count > bestCount) {
      bestCount = count;
      best = i;
    }
  }
  const double W = plan.levelWidth(level), H = plan.levelHeight(level);
  const double x0 = std::clamp(rows[best].cx - w / 2, 0.0, std::max(0.0, W - w));
  const double y0 = std::clamp(rows[best].cy - h / 2, 0.0, std::max(0.0, H - h));
  return {level, x0, y0, x0 + w, y0 + h};
}

/// Replays the trace: on each level pan in `panSteps` steps to the densest
/// window of the current region, then zoom in about its center; at the
/// bottom, zoom back out to level 1 about the same point.
inline std::vector<FetchSample> replayTrace(const Store& store, int panSteps = 4) {
  const auto& plan = store.plan();
  const double zf = plan.zoomFactor, w = plan.viewportW, h = plan.viewportH;
  std::vector<FetchSample> samples;
  auto fetch = [&](const Viewport& v) {
    const std::map<std::string, std::string> params = {{"level", std::to_string(v.level)},
                                                       {"xmin", json(v.xMin).dump()},
                                                       {"ymin", json(v.yMin).dump()},
                                                       {"xmax", json(v.xMax).dump()},
                                                       {"ymax", json(v.yMax).dump()}};
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = handleFetch(&store, params);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (r.status != 200) throw Error(ErrorCode::InvalidArgument, "trace fetch failed: " + r.body.dump());
    samples.push_back({v.level, v, r.body["clusters"].size(), ms});
  };
  auto clampView = [&](int level, double cx, double cy) {
    const double W = plan.levelWidth(level), H = plan.levelHeight(level);
    const double x0 = std::clamp(cx - w / 2, 0.0, std::max(0.0, W - w));
    const double y0 = std::clamp(cy - h / 2, 0.0, std::max(0.0, H - h));
    return Viewport{level, x0, y0, x0 + w, y0 + h};
  };

  Viewport view = clampView(1, plan.canvasW / 2, plan.canvasH / 2);
  Rect region{0, 0, plan.canvasW, plan.canvasH};
  for (int level = 1;; ++level) {
    fetch(view);
    const auto rows = store.fetch({level, region.xMin, region.yMin, region.xMax, region.yMax});
    const auto target = densestWindow(rows, plan, level, view);
    for (int s = 1; s <= panSteps; ++s) {
      const double t = static_cast<double>(s) / panSteps;
      const double x0 = view.xMin + (target.xMin - view.xMin) * t, y0 = view.yMin + (target.yMin - view.yMin) * t;
      fetch({level, x0, y0, x0 + w, y0 + h});
    }
    view = target;
    if (level == plan.numLevels) break;
    const double cx = (view.xMin + view.xMax) / 2 * zf, cy = (view.yMin + view.yMax) / 2 * zf;
    region = {view.xMin * zf, view.yMin * zf, view.xMax * zf, view.yMax * zf};
    view = clampView(level + 1, cx, cy);
  }
  for (int level = plan.numLevels - 1; level >= 1; --level) {
    const double cx = (view.xMin + view.xMax) / 2 / zf, cy = (view.yMin + view.yMax) / 2 / zf;
    view = clampView(level, cx, cy);
    fetch(view);
  }
  return samples;
}

struct BenchOptions {
  std::vector<std::uint64_t> sizes;
  std::uint64_t seed = 7;
  IndexOptions index;
  int repeats = 5;        // index builds per size; the fastest is reported
  int traceRepeats = 10;  // trace replays per size
  std::filesystem::path workDir = std::filesystem::temp_directory_path() / "ssv-bench";
  std::optional<SsvSpec> spec;
};

inline BenchRow benchOne(std::uint64_t n, const BenchOptions& opt) {
  const auto spec = opt.spec ? *opt.spec : benchSpec();
  const auto data = generateDataset(Distribution::Skew, n, opt.seed);
  const auto dir = opt.workDir / ("n_" + std::to_string(n));
  std::filesystem::remove_all(dir);

  std::vector<IndexResult> runs;
  for (int r = 0; r < std::max(1, opt.repeats); ++r) {
    auto res = runIndex(spec, data, dir, opt.index);
    res.input = {};
    res.layout = {};
    runs.push_back(std::move(res));
  }
  const auto& best = *std::min_element(runs.begin(), runs.end(),
                                      [](const auto& a, const auto& b) { return a.totalMs < b.totalMs; });

  BenchRow row;
  row.n = n;
  row.numLevels = best.plan.numLevels;
  row.partitions = best.tree.partitionCount();
  row.phases = best.timings;
  row.indexBuildMs = best.build.indexBuildMs;
  row.indexMs = best.layoutMs + best.build.indexBuildMs;
  row.residualMerges = best.residualMerges;

  const auto store = Store::open(dir);
  std::vector<double> ms;
  for (int r = 0; r < std::max(1, opt.traceRepeats); ++r)
    for (const auto& s : replayTrace(store)) ms.push_back(s.ms);
  row.fetches = ms.size();
  row.fetchP50Ms = percentile(ms, 0.50);
  row.fetchP95Ms = percentile(ms, 0.95);
  row.fetchMaxMs = ms.empty() ? 0 : *std::max_element(ms.begin(), ms.end());
  return row;
}

/// Spec for a size sweep. Unless the spec pins numLevels, every size uses
/// the level count the largest size needs, so the sweep measures growth in
/// n with the level count held constant.
inline SsvSpec sweepSpec(const BenchOptions& opt) {
  auto spec = opt.spec ? *opt.spec : benchSpec();
  if (opt.sizes.empty() || spec.config.contains("numLevels")) return spec;
  const auto largest = *std::max_element(opt.sizes.begin(), opt.sizes.end());
  const auto plan = compilePlan(spec, {largest, 0, kGeneratorPlane, 0, kGeneratorPlane});
  spec.config["numLevels"] = plan.numLevels;
  return spec;
}

inline BenchReport runBench(BenchOptions opt) {
  opt.spec = sweepSpec(opt);
  BenchReport rep;
  for (auto n : opt.sizes) rep.rows.push_back(benchOne(n, opt));
  return rep;
}

}  // namespace ssv
