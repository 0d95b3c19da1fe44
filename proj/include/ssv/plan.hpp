#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssv/geometry.hpp"
#include "ssv/grammar.hpp"

namespace ssv {

/// Summary statistics of the ingested dataset over the x/y fields.
struct DataStats {
  std::uint64_t n = 0;
  double xMin = 0;
  double xMax = 0;
  double yMin = 0;
  double yMax = 0;
};

struct MeasurePlan {
  std::optional<std::string> field;
  AggFunction function = AggFunction::Count;
  bool operator==(const MeasurePlan&) const = default;
};

/// Everything the layout engine, the store and the server need, with every
/// default resolved.
struct LayoutPlan {
  int numLevels = 1;
  double zoomFactor = 2;
  double canvasW = 0;  // top level
  double canvasH = 0;
  double viewportW = 0;
  double viewportH = 0;
  MarkBox box;
  double theta = 1;         // effective lower bound on pairwise ncd
  double thetaSpec = 0;     // from the spec, 0 when absent
  double thetaDensity = 1;  // from the density budget
  bool budgetFeasible = true;
  std::uint64_t densityBudget = config_defaults::kDensityBudget;
  int topLevelMergeCount = config_defaults::kTopLevelMergeCount;

  std::string xField, yField, zField;
  SortOrder order = SortOrder::Descending;
  Extent xExtent, yExtent;
  bool xExtentExplicit = false;
  bool yExtentExplicit = false;

  std::vector<DimensionSpec> dimensions;
  std::vector<MeasurePlan> measures;
  int topk = 0;
  BoundaryMode boundary = BoundaryMode::None;
  MarkMode mode = MarkMode::Circle;

  bool operator==(const LayoutPlan& o) const {
    // MarkBox has no operator==; compare its members.
    return numLevels == o.numLevels && zoomFactor == o.zoomFactor && canvasW == o.canvasW &&
           canvasH == o.canvasH && viewportW == o.viewportW && viewportH == o.viewportH &&
           box.width == o.box.width && box.height == o.box.height && theta == o.theta &&
           thetaSpec == o.thetaSpec && thetaDensity == o.thetaDensity && budgetFeasible == o.budgetFeasible &&
           densityBudget == o.densityBudget && topLevelMergeCount == o.topLevelMergeCount &&
           xField == o.xField && yField == o.yField && zField == o.zField && order == o.order &&
           xExtent == o.xExtent && yExtent == o.yExtent && xExtentExplicit == o.xExtentExplicit &&
           yExtentExplicit == o.yExtentExplicit && dimensions == o.dimensions && measures == o.measures &&
           topk == o.topk && boundary == o.boundary && mode == o.mode;
  }

  /// Pixel scale of `level` relative to the top level.
  double levelScale(int level) const { return std::pow(zoomFactor, level - 1); }
  double levelWidth(int level) const { return canvasW * levelScale(level); }
  double levelHeight(int level) const { return canvasH * levelScale(level); }

  /// Raw data units to top-level pixels. Y grows downward on screen, so
  /// larger raw y maps to smaller pixel y. A zero-width extent maps to the
  /// canvas center.
  double projectX(double rawX) const {
    const double span = xExtent.hi - xExtent.lo;
    return span > 0 ? (rawX - xExtent.lo) / span * canvasW : canvasW / 2;
  }
  double projectY(double rawY) const {
    const double span = yExtent.hi - yExtent.lo;
    return span > 0 ? (yExtent.hi - rawY) / span * canvasH : canvasH / 2;
  }
  bool insideExtent(double rawX, double rawY) const {
    return rawX >= xExtent.lo && rawX <= xExtent.hi && rawY >= yExtent.lo && rawY <= yExtent.hi;
  }
};

/// Smallest level count whose bottom canvas holds n marks at the packing
/// bound: n / P(theta) <= (zoomFactor^(levels-1))^2, capped.
inline int defaultNumLevels(std::uint64_t n, std::uint64_t packed, double zoomFactor,
                            int cap = config_defaults::kMaxLevels) {
  const double need = static_cast<double>(n) / static_cast<double>(std::max<std::uint64_t>(packed, 1));
  int levels = 1;
  double area = 1;
  while (need > area && levels < cap) {
    ++levels;
    area *= zoomFactor * zoomFactor;
  }
  return levels;
}

inline LayoutPlan compilePlan(const SsvSpec& spec, const DataStats& stats) {
  if (stats.n == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
  const auto& cfg = spec.config;
  auto num = [&](const char* key, double fallback) {
    auto it = cfg.find(key);
    return it != cfg.end() && it->is_number() ? it->get<double>() : fallback;
  };

  LayoutPlan p;
  p.mode = spec.marks.cluster.mode;
  p.viewportW = num("viewportWidth", config_defaults::kViewportWidth);
  p.viewportH = num("viewportHeight", config_defaults::kViewportHeight);
  p.canvasW = num("width", p.viewportW);
  p.canvasH = num("height", p.viewportH);
  p.zoomFactor = num("zoomFactor", config_defaults::kZoomFactor);
  const auto box = defaultMarkBox(p.mode).value_or(std::pair{0.0, 0.0});
  p.box = {num("bboxW", box.first), num("bboxH", box.second)};
  if (!(p.box.width > 0 && p.box.height > 0))
    throw Error(ErrorCode::InvalidArgument, "mark bounding box must be positive");
  p.densityBudget = static_cast<std::uint64_t>(num("densityBudget", static_cast<double>(config_defaults::kDensityBudget)));
  p.topLevelMergeCount = static_cast<int>(num("topLevelMergeCount", config_defaults::kTopLevelMergeCount));

  const auto solved = solveTheta(p.densityBudget, p.viewportW, p.viewportH, p.box);
  p.thetaDensity = solved.theta;
  p.budgetFeasible = solved.feasible;
  p.thetaSpec = spec.layout.theta.value_or(0.0);
  p.theta = std::max(p.thetaSpec, p.thetaDensity);

  p.xField = spec.layout.x.field;
  p.yField = spec.layout.y.field;
  p.zField = spec.layout.z.field;
  p.order = spec.layout.z.order;
  p.xExtentExplicit = spec.layout.x.extent.has_value();
  p.yExtentExplicit = spec.layout.y.extent.has_value();
  p.xExtent = spec.layout.x.extent.value_or(Extent{stats.xMin, stats.xMax});
  p.yExtent = spec.layout.y.extent.value_or(Extent{stats.yMin, stats.yMax});

  p.dimensions = spec.marks.cluster.aggregate.dimensions;
  for (const auto& m : spec.marks.cluster.aggregate.measures) p.measures.push_back({m.field, m.function});
  if (spec.marks.hover) {
    p.topk = spec.marks.hover->ranklist.topk;
    p.boundary = spec.marks.hover->boundary;
  }

  if (auto it = cfg.find("numLevels"); it != cfg.end() && it->is_number_integer())
    p.numLevels = it->get<int>();
  else
    p.numLevels = defaultNumLevels(stats.n, packBound(p.theta, p.viewportW, p.viewportH, p.box), p.zoomFactor);
  return p;
}

inline json toJson(const LayoutPlan& p) {
  json dims = json::array();
  for (const auto& d : p.dimensions) {
    json dj = {{"field", d.field}};
    if (d.domain) dj["domain"] = *d.domain;
    dims.push_back(dj);
  }
  json measures = json::array();
  for (const auto& m : p.measures) {
    json mj = {{"function", to_string(m.function)}};
    if (m.field) mj["field"] = *m.field;
    measures.push_back(mj);
  }
  return {
      {"numLevels", p.numLevels},
      {"zoomFactor", p.zoomFactor},
      {"canvas", {{"width", p.canvasW}, {"height", p.canvasH}}},
      {"viewport", {{"width", p.viewportW}, {"height", p.viewportH}}},
      {"bbox", {{"width", p.box.width}, {"height", p.box.height}}},
      {"theta", p.theta},
      {"thetaSpec", p.thetaSpec},
      {"thetaDensity", p.thetaDensity},
      {"budgetFeasible", p.budgetFeasible},
      {"densityBudget", p.densityBudget},
      {"topLevelMergeCount", p.topLevelMergeCount},
      {"x", {{"field", p.xField}, {"extent", {p.xExtent.lo, p.xExtent.hi}}, {"explicit", p.xExtentExplicit}}},
      {"y", {{"field", p.yField}, {"extent", {p.yExtent.lo, p.yExtent.hi}}, {"explicit", p.yExtentExplicit}}},
      {"z", {{"field", p.zField}, {"order", to_string(p.order)}}},
      {"dimensions", dims},
      {"measures", measures},
      {"topk", p.topk},
      {"boundary", to_string(p.boundary)},
      {"mode", to_string(p.mode)},
  };
}

inline LayoutPlan planFromJson(const json& j) {
  LayoutPlan p;
  p.numLevels = j.at("numLevels").get<int>();
  p.zoomFactor = j.at("zoomFactor").get<double>();
  p.canvasW = j.at("canvas").at("width").get<double>();
  p.canvasH = j.at("canvas").at("height").get<double>();
  p.viewportW = j.at("viewport").at("width").get<double>();
  p.viewportH = j.at("viewport").at("height").get<double>();
  p.box = {j.at("bbox").at("width").get<double>(), j.at("bbox").at("height").get<double>()};
  p.theta = j.at("theta").get<double>();
  p.thetaSpec = j.at("thetaSpec").get<double>();
  p.thetaDensity = j.at("thetaDensity").get<double>();
  p.budgetFeasible = j.at("budgetFeasible").get<bool>();
  p.densityBudget = j.at("densityBudget").get<std::uint64_t>();
  p.topLevelMergeCount = j.at("topLevelMergeCount").get<int>();
  auto axis = [](const json& a, std::string& field, Extent& e, bool& ex) {
    field = a.at("field").get<std::string>();
    e = {a.at("extent")[0].get<double>(), a.at("extent")[1].get<double>()};
    ex = a.at("explicit").get<bool>();
  };
  axis(j.at("x"), p.xField, p.xExtent, p.xExtentExplicit);
  axis(j.at("y"), p.yField, p.yExtent, p.yExtentExplicit);
  p.zField = j.at("z").at("field").get<std::string>();
  p.order = j.at("z").at("order").get<std::string>() == "ascending" ? SortOrder::Ascending : SortOrder::Descending;
  for (const auto& d : j.at("dimensions")) {
    DimensionSpec ds{d.at("field").get<std::string>(), std::nullopt};
    if (d.contains("domain")) ds.domain = d["domain"].get<std::vector<std::string>>();
    p.dimensions.push_back(ds);
  }
  for (const auto& m : j.at("measures")) {
    MeasurePlan mp;
    mp.function = *detail::parseFunction(m.at("function").get<std::string>());
    if (m.contains("field")) mp.field = m["field"].get<std::string>();
    p.measures.push_back(mp);
  }
  p.topk = j.at("topk").get<int>();
  const auto b = j.at("boundary").get<std::string>();
  p.boundary = b == "none" ? BoundaryMode::None : *detail::parseBoundary(b);
  p.mode = *detail::parseMode(j.at("mode").get<std::string>());
  return p;
}

}  // namespace ssv
