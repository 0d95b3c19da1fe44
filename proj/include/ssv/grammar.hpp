#pragma once

// Declarative spec: JSON schema, validation against the grammar's 24
// production rules, and canonical serialization.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ssv/error.hpp"

namespace ssv {

using json = nlohmann::json;

enum class MarkMode { Circle, Contour, Heatmap, Radar, Pie, Custom };
enum class AggFunction { Count, Sum, Avg, Min, Max, Sqrsum };
enum class BoundaryMode { None, ConvexHull, BBox };
enum class SortOrder { Ascending, Descending };
enum class RanklistMode { Tabular, Custom };
enum class DataFormat { Csv, Ndjson };
enum class ColumnType { Number, String };

inline constexpr std::string_view to_string(MarkMode m) {
  switch (m) {
    case MarkMode::Circle: return "circle";
    case MarkMode::Contour: return "contour";
    case MarkMode::Heatmap: return "heatmap";
    case MarkMode::Radar: return "radar";
    case MarkMode::Pie: return "pie";
    case MarkMode::Custom: return "custom";
  }
  return "";
}
inline constexpr std::string_view to_string(AggFunction f) {
  switch (f) {
    case AggFunction::Count: return "count";
    case AggFunction::Sum: return "sum";
    case AggFunction::Avg: return "avg";
    case AggFunction::Min: return "min";
    case AggFunction::Max: return "max";
    case AggFunction::Sqrsum: return "sqrsum";
  }
  return "";
}
inline constexpr std::string_view to_string(BoundaryMode b) {
  switch (b) {
    case BoundaryMode::None: return "none";
    case BoundaryMode::ConvexHull: return "convexhull";
    case BoundaryMode::BBox: return "bbox";
  }
  return "";
}
inline constexpr std::string_view to_string(SortOrder o) {
  return o == SortOrder::Ascending ? "ascending" : "descending";
}
inline constexpr std::string_view to_string(RanklistMode m) {
  return m == RanklistMode::Tabular ? "tabular" : "custom";
}
inline constexpr std::string_view to_string(DataFormat f) { return f == DataFormat::Csv ? "csv" : "ndjson"; }
inline constexpr std::string_view to_string(ColumnType t) { return t == ColumnType::Number ? "number" : "string"; }

struct Extent {
  double lo = 0;
  double hi = 0;
  bool operator==(const Extent&) const = default;
};

struct DimensionSpec {
  std::string field;
  std::optional<std::vector<std::string>> domain;
  bool operator==(const DimensionSpec&) const = default;
};

struct MeasureSpec {
  std::optional<std::string> field;  // absent only for count
  AggFunction function = AggFunction::Count;
  std::optional<Extent> extent;
  bool operator==(const MeasureSpec&) const = default;
};

struct AggregateSpec {
  std::vector<DimensionSpec> dimensions;
  std::vector<MeasureSpec> measures;
  bool operator==(const AggregateSpec&) const = default;
};

struct ClusterSpec {
  MarkMode mode = MarkMode::Circle;
  std::optional<std::string> custom;  // renderer source when mode == Custom
  AggregateSpec aggregate;
  json config = json::object();
  bool operator==(const ClusterSpec&) const = default;
};

struct RanklistSpec {
  int topk = 1;
  RanklistMode mode = RanklistMode::Tabular;
  std::optional<std::string> custom;
  bool operator==(const RanklistSpec&) const = default;
};

struct HoverSpec {
  RanklistSpec ranklist;
  BoundaryMode boundary = BoundaryMode::BBox;
  json config = json::object();
  bool operator==(const HoverSpec&) const = default;
};

struct MarksSpec {
  ClusterSpec cluster;
  std::optional<HoverSpec> hover;
  bool operator==(const MarksSpec&) const = default;
};

struct AxisSpec {
  std::string field;
  std::optional<Extent> extent;
  bool operator==(const AxisSpec&) const = default;
};

struct ZSpec {
  std::string field;
  SortOrder order = SortOrder::Descending;
  bool operator==(const ZSpec&) const = default;
};

struct LayoutSpec {
  AxisSpec x;
  AxisSpec y;
  ZSpec z;
  std::optional<double> theta;
  bool operator==(const LayoutSpec&) const = default;
};

struct ColumnSpec {
  std::string name;
  ColumnType type = ColumnType::Number;
  bool operator==(const ColumnSpec&) const = default;
};

struct DataSpec {
  std::string source;
  DataFormat format = DataFormat::Csv;
  std::vector<ColumnSpec> columns;
  bool operator==(const DataSpec&) const = default;

  const ColumnSpec* column(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct SsvSpec {
  MarksSpec marks;
  LayoutSpec layout;
  DataSpec data;
  json config = json::object();
  bool operator==(const SsvSpec&) const = default;
};

/// Default mark bounding box (px) for the built-in modes. Custom marks have
/// no default and must declare bboxW/bboxH.
inline std::optional<std::pair<double, double>> defaultMarkBox(MarkMode mode) {
  switch (mode) {
    case MarkMode::Circle:
    case MarkMode::Contour:
    case MarkMode::Heatmap: return std::pair{80.0, 80.0};
    case MarkMode::Radar:
    case MarkMode::Pie: return std::pair{120.0, 120.0};
    case MarkMode::Custom: return std::nullopt;
  }
  return std::nullopt;
}

namespace config_defaults {
inline constexpr double kViewportWidth = 1600;
inline constexpr double kViewportHeight = 900;
inline constexpr double kZoomFactor = 2;
inline constexpr std::uint64_t kDensityBudget = 200;
inline constexpr int kTopLevelMergeCount = 3;
inline constexpr int kMaxLevels = 20;
}  // namespace config_defaults

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  out.erase(std::remove_if(out.begin(), out.end(), [](char c) { return c == ' ' || c == '_' || c == '-'; }),
            out.end());
  return out;
}

inline std::optional<MarkMode> parseMode(std::string_view s) {
  const auto l = lower(s);
  if (l == "circle") return MarkMode::Circle;
  if (l == "contour") return MarkMode::Contour;
  if (l == "heatmap") return MarkMode::Heatmap;
  if (l == "radar") return MarkMode::Radar;
  if (l == "pie") return MarkMode::Pie;
  if (l == "custom") return MarkMode::Custom;
  return std::nullopt;
}

inline std::optional<AggFunction> parseFunction(std::string_view s) {
  const auto l = lower(s);
  if (l == "count") return AggFunction::Count;
  if (l == "sum") return AggFunction::Sum;
  if (l == "avg" || l == "average") return AggFunction::Avg;
  if (l == "min") return AggFunction::Min;
  if (l == "max") return AggFunction::Max;
  if (l == "sqrsum" || l == "squaresum") return AggFunction::Sqrsum;
  return std::nullopt;
}

inline std::optional<BoundaryMode> parseBoundary(std::string_view s) {
  const auto l = lower(s);
  if (l == "convexhull") return BoundaryMode::ConvexHull;
  if (l == "bbox") return BoundaryMode::BBox;
  return std::nullopt;
}

/// Collects violations while walking the document.
class Validator {
 public:
  void fail(int rule, std::string path, std::string message) {
    errors_.push_back({rule, std::move(path), std::move(message)});
  }
  bool ok() const { return errors_.empty(); }
  std::vector<RuleViolation> take() { return std::move(errors_); }

  const json* member(const json& obj, const char* key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  // Rule 21.
  std::optional<Extent> extent(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
      fail(21, path, "extent must be a pair of numbers");
      return std::nullopt;
    }
    Extent e{j[0].get<double>(), j[1].get<double>()};
    if (!std::isfinite(e.lo) || !std::isfinite(e.hi) || !(e.lo < e.hi)) {
      fail(21, path, "extent requires finite lo < hi");
      return std::nullopt;
    }
    return e;
  }

  // Rule 20: the field must name a declared column (numeric when required).
  std::string field(const json* j, const std::string& path, const DataSpec* data, bool numeric, int ownerRule) {
    if (!j) {
      fail(ownerRule, path, "missing field");
      return {};
    }
    if (!j->is_string() || j->get<std::string>().empty()) {
      fail(20, path, "field must be a non-empty column name");
      return {};
    }
    auto name = j->get<std::string>();
    if (data && !data->columns.empty()) {
      const auto* col = data->column(name);
      if (!col)
        fail(20, path, "column '" + name + "' is not declared in data.columns");
      else if (numeric && col->type != ColumnType::Number)
        fail(20, path, "column '" + name + "' must be numeric");
    }
    return name;
  }

 private:
  std::vector<RuleViolation> errors_;
};

inline DataSpec readData(Validator& v, const json* j) {
  DataSpec d;
  if (!j) {
    v.fail(1, "/data", "missing data component");
    return d;
  }
  if (!j->is_object()) {
    v.fail(23, "/data", "data must be an object");
    return d;
  }
  if (auto* src = v.member(*j, "source"); src && src->is_string() && !src->get<std::string>().empty()) {
    d.source = src->get<std::string>();
  } else {
    v.fail(23, "/data/source", "data.source must be a non-empty path");
  }
  if (auto* fmt = v.member(*j, "format")) {
    const auto f = fmt->is_string() ? lower(fmt->get<std::string>()) : std::string{};
    if (f == "csv")
      d.format = DataFormat::Csv;
    else if (f == "ndjson" || f == "jsonl")
      d.format = DataFormat::Ndjson;
    else
      v.fail(23, "/data/format", "format must be csv or ndjson");
  } else {
    const auto& s = d.source;
    auto endsWith = [&](std::string_view suf) {
      return s.size() >= suf.size() && lower(s.substr(s.size() - suf.size())) == lower(suf);
    };
    if (endsWith(".ndjson") || endsWith(".jsonl"))
      d.format = DataFormat::Ndjson;
    else if (endsWith(".csv") || s.empty())
      d.format = DataFormat::Csv;
    else
      v.fail(23, "/data/format", "format missing and not inferable from source extension");
  }
  auto* cols = v.member(*j, "columns");
  if (!cols || !cols->is_array() || cols->empty()) {
    v.fail(23, "/data/columns", "columns must be a non-empty list of {name, type}");
    return d;
  }
  for (std::size_t i = 0; i < cols->size(); ++i) {
    const auto& c = (*cols)[i];
    const auto path = "/data/columns/" + std::to_string(i);
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string() || c["name"].get<std::string>().empty()) {
      v.fail(23, path, "column requires a non-empty name");
      continue;
    }
    ColumnSpec col{c["name"].get<std::string>(), ColumnType::Number};
    if (c.contains("type")) {
      const auto t = c["type"].is_string() ? lower(c["type"].get<std::string>()) : std::string{};
      if (t == "number" || t == "float" || t == "double" || t == "int" || t == "integer")
        col.type = ColumnType::Number;
      else if (t == "string" || t == "text" || t == "category")
        col.type = ColumnType::String;
      else
        v.fail(23, path + "/type", "type must be number or string");
    }
    if (d.column(col.name)) v.fail(23, path, "duplicate column '" + col.name + "'");
    d.columns.push_back(std::move(col));
  }
  return d;
}

inline AggregateSpec readAggregate(Validator& v, const json& j, const DataSpec& data) {
  AggregateSpec agg;
  const std::string base = "/marks/cluster/aggregate";
  const json* dims = nullptr;
  const json* measures = nullptr;
  if (j.is_array()) {
    measures = &j;  // shorthand: a bare list of measures
  } else if (j.is_object()) {
    dims = v.member(j, "dimensions");
    measures = v.member(j, "measures");
  } else {
    v.fail(6, base, "aggregate must be an object {dimensions, measures} or a list of measures");
    return agg;
  }
  const std::string mbase = j.is_array() ? base : base + "/measures";

  if (dims) {
    if (!dims->is_array()) {
      v.fail(6, base + "/dimensions", "dimensions must be a list");
    } else {
      for (std::size_t i = 0; i < dims->size(); ++i) {
        const auto& d = (*dims)[i];
        const auto path = base + "/dimensions/" + std::to_string(i);
        if (!d.is_object()) {
          v.fail(10, path, "dimension must be an object");
          continue;
        }
        DimensionSpec dim;
        dim.field = v.field(v.member(d, "field"), path + "/field", &data, false, 10);
        if (auto* dom = v.member(d, "domain")) {
          bool good = dom->is_array();
          if (good)
            for (const auto& e : *dom) good = good && e.is_string();
          if (!good)
            v.fail(13, path + "/domain", "domain must be a list of strings");
          else
            dim.domain = dom->get<std::vector<std::string>>();
        }
        agg.dimensions.push_back(std::move(dim));
      }
    }
  }

  if (!measures || !measures->is_array() || measures->empty()) {
    v.fail(6, mbase, "aggregate requires at least one measure");
    return agg;
  }
  for (std::size_t i = 0; i < measures->size(); ++i) {
    const auto& m = (*measures)[i];
    const auto path = mbase + "/" + std::to_string(i);
    if (!m.is_object()) {
      v.fail(11, path, "measure must be an object");
      continue;
    }
    MeasureSpec ms;
    auto* fn = v.member(m, "function");
    if (!fn) {
      v.fail(11, path + "/function", "measure requires a function");
      continue;
    }
    auto parsed = fn->is_string() ? parseFunction(fn->get<std::string>()) : std::nullopt;
    if (!parsed) {
      v.fail(14, path + "/function", "function must be one of count, sum, avg, min, max, sqrsum");
      continue;
    }
    ms.function = *parsed;
    if (auto* f = v.member(m, "field"))
      ms.field = v.field(f, path + "/field", &data, true, 11);
    else if (ms.function != AggFunction::Count)
      v.fail(11, path + "/field", "measure '" + std::string(to_string(ms.function)) + "' requires a field");
    if (auto* e = v.member(m, "extent")) ms.extent = v.extent(*e, path + "/extent");
    agg.measures.push_back(std::move(ms));
  }
  return agg;
}

inline ClusterSpec readCluster(Validator& v, const json& j, const DataSpec& data) {
  ClusterSpec c;
  const std::string base = "/marks/cluster";
  if (!j.is_object()) {
    v.fail(3, base, "cluster must be an object");
    return c;
  }
  if (auto* mode = v.member(j, "mode")) {
    auto parsed = mode->is_string() ? parseMode(mode->get<std::string>()) : std::nullopt;
    if (!parsed)
      v.fail(5, base + "/mode", "mode must be circle, contour, heatmap, radar, pie or custom");
    else
      c.mode = *parsed;
  } else {
    v.fail(3, base + "/mode", "cluster requires a mode");
  }
  if (auto* custom = v.member(j, "custom")) {
    if (!custom->is_string() || custom->get<std::string>().empty())
      v.fail(9, base + "/custom", "custom renderer must be a non-empty string");
    else
      c.custom = custom->get<std::string>();
  }
  if (c.mode == MarkMode::Custom && !c.custom)
    v.fail(9, base + "/custom", "custom mode requires a renderer");
  if (auto* agg = v.member(j, "aggregate"))
    c.aggregate = readAggregate(v, *agg, data);
  else
    v.fail(3, base + "/aggregate", "cluster requires an aggregate");
  if (auto* cfg = v.member(j, "config")) {
    if (!cfg->is_object())
      v.fail(24, base + "/config", "config must be key-value pairs");
    else
      c.config = *cfg;
  }
  return c;
}

inline HoverSpec readHover(Validator& v, const json& j) {
  HoverSpec h;
  const std::string base = "/marks/hover";
  if (!j.is_object()) {
    v.fail(4, base, "hover must be an object");
    return h;
  }
  if (auto* rl = v.member(j, "ranklist")) {
    if (!rl->is_object()) {
      v.fail(7, base + "/ranklist", "ranklist must be an object");
    } else {
      if (auto* k = v.member(*rl, "topk")) {
        const bool integral = k->is_number_integer() ||
                              (k->is_number_float() && std::floor(k->get<double>()) == k->get<double>());
        if (!integral || k->get<double>() < 1 || k->get<double>() > 1e6)
          v.fail(12, base + "/ranklist/topk", "topk must be a positive integer");
        else
          h.ranklist.topk = static_cast<int>(k->get<double>());
      } else {
        v.fail(7, base + "/ranklist/topk", "ranklist requires topk");
      }
      if (auto* mode = v.member(*rl, "mode")) {
        const auto m = mode->is_string() ? lower(mode->get<std::string>()) : std::string{};
        if (m == "tabular")
          h.ranklist.mode = RanklistMode::Tabular;
        else if (m == "custom")
          h.ranklist.mode = RanklistMode::Custom;
        else
          v.fail(7, base + "/ranklist/mode", "ranklist mode must be tabular or custom");
      }
      if (auto* custom = v.member(*rl, "custom")) {
        if (!custom->is_string() || custom->get<std::string>().empty())
          v.fail(9, base + "/ranklist/custom", "custom renderer must be a non-empty string");
        else
          h.ranklist.custom = custom->get<std::string>();
      }
      if (h.ranklist.mode == RanklistMode::Custom && !h.ranklist.custom)
        v.fail(9, base + "/ranklist/custom", "custom ranklist requires a renderer");
    }
  } else {
    v.fail(4, base + "/ranklist", "hover requires a ranklist");
  }
  if (auto* b = v.member(j, "boundary")) {
    auto parsed = b->is_string() ? parseBoundary(b->get<std::string>()) : std::nullopt;
    if (!parsed)
      v.fail(8, base + "/boundary", "boundary must be convexhull or bbox");
    else
      h.boundary = *parsed;
  } else {
    v.fail(4, base + "/boundary", "hover requires a boundary");
  }
  if (auto* cfg = v.member(j, "config")) {
    if (!cfg->is_object())
      v.fail(24, base + "/config", "config must be key-value pairs");
    else
      h.config = *cfg;
  }
  return h;
}

inline AxisSpec readAxis(Validator& v, const json* j, const char* name, int rule, const DataSpec& data) {
  AxisSpec a;
  const std::string base = std::string("/layout/") + name;
  if (!j) {
    v.fail(15, base, std::string("layout requires ") + name);
    return a;
  }
  if (!j->is_object()) {
    v.fail(rule, base, std::string(name) + " must be an object {field, extent?}");
    return a;
  }
  a.field = v.field(v.member(*j, "field"), base + "/field", &data, true, rule);
  if (auto* e = v.member(*j, "extent")) a.extent = v.extent(*e, base + "/extent");
  return a;
}

inline LayoutSpec readLayout(Validator& v, const json* j, const DataSpec& data) {
  LayoutSpec l;
  if (!j) {
    v.fail(1, "/layout", "missing layout component");
    return l;
  }
  if (!j->is_object()) {
    v.fail(15, "/layout", "layout must be an object");
    return l;
  }
  l.x = readAxis(v, v.member(*j, "x"), "x", 16, data);
  l.y = readAxis(v, v.member(*j, "y"), "y", 17, data);
  if (auto* z = v.member(*j, "z")) {
    if (!z->is_object()) {
      v.fail(18, "/layout/z", "z must be an object {field, order}");
    } else {
      l.z.field = v.field(v.member(*z, "field"), "/layout/z/field", &data, true, 18);
      if (auto* o = v.member(*z, "order")) {
        const auto s = o->is_string() ? lower(o->get<std::string>()) : std::string{};
        if (s == "ascending" || s == "asc")
          l.z.order = SortOrder::Ascending;
        else if (s == "descending" || s == "desc")
          l.z.order = SortOrder::Descending;
        else
          v.fail(22, "/layout/z/order", "order must be ascending or descending");
      } else {
        v.fail(18, "/layout/z/order", "z requires an order");
      }
    }
  } else {
    v.fail(15, "/layout/z", "layout requires z");
  }
  if (auto* t = v.member(*j, "theta")) {
    if (!t->is_number() || !(t->get<double>() >= 0.0 && t->get<double>() <= 1.0))
      v.fail(19, "/layout/theta", "theta must be a number between 0 and 1");
    else
      l.theta = t->get<double>();
  }
  return l;
}

inline void checkPositive(Validator& v, const json& cfg, const char* key, bool integral, double minExclusive = 0) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return;
  const bool num = integral ? (it->is_number_integer() || it->is_number_unsigned()) : it->is_number();
  if (!num || !(it->get<double>() > minExclusive))
    v.fail(24, std::string("/config/") + key,
           std::string(key) + " must be " + (integral ? "an integer" : "a number") + " > " +
               std::to_string(static_cast<int>(minExclusive)));
}

/// Validates known config keys and fills the static defaults. Unknown keys
/// pass through untouched.
inline json readConfig(Validator& v, const json* j, const ClusterSpec& cluster) {
  json cfg = json::object();
  if (j) {
    if (!j->is_object()) {
      v.fail(24, "/config", "config must be key-value pairs");
      return cfg;
    }
    cfg = *j;
  }
  checkPositive(v, cfg, "width", false);
  checkPositive(v, cfg, "height", false);
  checkPositive(v, cfg, "viewportWidth", false);
  checkPositive(v, cfg, "viewportHeight", false);
  checkPositive(v, cfg, "bboxW", false);
  checkPositive(v, cfg, "bboxH", false);
  checkPositive(v, cfg, "zoomFactor", false, 1);
  checkPositive(v, cfg, "densityBudget", true);
  if (auto it = cfg.find("numLevels"); it != cfg.end()) {
    if (!it->is_number_integer() || it->get<long long>() < 1 || it->get<long long>() > 30)
      v.fail(24, "/config/numLevels", "numLevels must be an integer in [1, 30]");
  }
  if (auto it = cfg.find("topLevelMergeCount"); it != cfg.end()) {
    if (!it->is_number_integer() || it->get<long long>() < 0)
      v.fail(24, "/config/topLevelMergeCount", "topLevelMergeCount must be a non-negative integer");
  }
  if (auto it = cfg.find("axes"); it != cfg.end() && !it->is_boolean())
    v.fail(24, "/config/axes", "axes must be a boolean");

  // bboxW/bboxH may also be given on the cluster's own config.
  for (const char* key : {"bboxW", "bboxH"}) {
    if (!cfg.contains(key) && cluster.config.contains(key) && cluster.config[key].is_number() &&
        cluster.config[key].get<double>() > 0)
      cfg[key] = cluster.config[key];
  }
  if (!cfg.contains("bboxW") || !cfg.contains("bboxH")) {
    if (auto box = defaultMarkBox(cluster.mode)) {
      if (!cfg.contains("bboxW")) cfg["bboxW"] = box->first;
      if (!cfg.contains("bboxH")) cfg["bboxH"] = box->second;
    } else {
      v.fail(24, "/config", "custom marks require explicit bboxW and bboxH");
    }
  }
  if (!cfg.contains("viewportWidth")) cfg["viewportWidth"] = config_defaults::kViewportWidth;
  if (!cfg.contains("viewportHeight")) cfg["viewportHeight"] = config_defaults::kViewportHeight;
  if (!cfg.contains("width")) cfg["width"] = cfg["viewportWidth"];
  if (!cfg.contains("height")) cfg["height"] = cfg["viewportHeight"];
  if (!cfg.contains("zoomFactor")) cfg["zoomFactor"] = config_defaults::kZoomFactor;
  if (!cfg.contains("densityBudget")) cfg["densityBudget"] = config_defaults::kDensityBudget;
  if (!cfg.contains("topLevelMergeCount")) cfg["topLevelMergeCount"] = config_defaults::kTopLevelMergeCount;
  if (!cfg.contains("axes")) cfg["axes"] = true;
  return cfg;
}

}  // namespace detail

/// Validates an already-parsed document. Returns the spec (defaults filled)
/// when the violation list is empty.
inline std::pair<SsvSpec, std::vector<RuleViolation>> validateSpec(const json& doc) {
  detail::Validator v;
  SsvSpec spec;
  if (!doc.is_object()) {
    v.fail(1, "", "spec must be an object with marks, layout, data and optional config");
    return {spec, v.take()};
  }
  // Data first: field references elsewhere are checked against its columns.
  spec.data = detail::readData(v, v.member(doc, "data"));

  if (auto* marks = v.member(doc, "marks")) {
    if (!marks->is_object()) {
      v.fail(2, "/marks", "marks must be an object");
    } else {
      if (auto* cluster = v.member(*marks, "cluster"))
        spec.marks.cluster = detail::readCluster(v, *cluster, spec.data);
      else
        v.fail(2, "/marks/cluster", "marks requires a cluster component");
      if (auto* hover = v.member(*marks, "hover")) spec.marks.hover = detail::readHover(v, *hover);
    }
  } else {
    v.fail(1, "/marks", "missing marks component");
  }
  spec.layout = detail::readLayout(v, v.member(doc, "layout"), spec.data);
  spec.config = detail::readConfig(v, v.member(doc, "config"), spec.marks.cluster);
  return {std::move(spec), v.take()};
}

/// Parses and validates JSON spec text. Throws Error{MalformedJson} or
/// SpecError carrying every violation found.
inline SsvSpec parseSpec(std::string_view raw) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedJson, e.what());
  }
  auto [spec, errors] = validateSpec(doc);
  if (!errors.empty()) throw SpecError(std::move(errors));
  return spec;
}

/// Canonical JSON form; parseSpec(serializeSpec(s).dump()) == s.
inline json serializeSpec(const SsvSpec& s) {
  auto extent = [](const Extent& e) { return json::array({e.lo, e.hi}); };

  json agg = json::object();
  agg["dimensions"] = json::array();
  for (const auto& d : s.marks.cluster.aggregate.dimensions) {
    json dj = {{"field", d.field}};
    if (d.domain) dj["domain"] = *d.domain;
    agg["dimensions"].push_back(std::move(dj));
  }
  agg["measures"] = json::array();
  for (const auto& m : s.marks.cluster.aggregate.measures) {
    json mj = {{"function", to_string(m.function)}};
    if (m.field) mj["field"] = *m.field;
    if (m.extent) mj["extent"] = extent(*m.extent);
    agg["measures"].push_back(std::move(mj));
  }

  json cluster = {{"mode", to_string(s.marks.cluster.mode)}, {"aggregate", agg}, {"config", s.marks.cluster.config}};
  if (s.marks.cluster.custom) cluster["custom"] = *s.marks.cluster.custom;
  json marks = {{"cluster", cluster}};
  if (s.marks.hover) {
    const auto& h = *s.marks.hover;
    json rl = {{"topk", h.ranklist.topk}, {"mode", to_string(h.ranklist.mode)}};
    if (h.ranklist.custom) rl["custom"] = *h.ranklist.custom;
    marks["hover"] = {{"ranklist", rl}, {"boundary", to_string(h.boundary)}, {"config", h.config}};
  }

  auto axis = [&](const AxisSpec& a) {
    json j = {{"field", a.field}};
    if (a.extent) j["extent"] = extent(*a.extent);
    return j;
  };
  json layout = {{"x", axis(s.layout.x)},
                 {"y", axis(s.layout.y)},
                 {"z", {{"field", s.layout.z.field}, {"order", to_string(s.layout.z.order)}}}};
  if (s.layout.theta) layout["theta"] = *s.layout.theta;

  json columns = json::array();
  for (const auto& c : s.data.columns) columns.push_back({{"name", c.name}, {"type", to_string(c.type)}});
  json data = {{"source", s.data.source}, {"format", to_string(s.data.format)}, {"columns", columns}};

  return {{"marks", marks}, {"layout", layout}, {"data", data}, {"config", s.config}};
}

}  // namespace ssv
