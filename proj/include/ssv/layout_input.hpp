#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssv/aggregate.hpp"
#include "ssv/dataset.hpp"
#include "ssv/plan.hpp"

namespace ssv {

/// One raw data object. `importance` is the raw Z value; `payload` holds the
/// values of the columns not bound to x, y or z, in schema order.
struct PointObject {
  ObjectId id = 0;
  double rawX = 0;
  double rawY = 0;
  double importance = 0;
  std::vector<Value> payload;

  bool operator==(const PointObject&) const = default;
};

/// Objects ready for layout: sorted by id, projected to top-level pixels,
/// with per-object measure values and dimension keys resolved.
struct LayoutInput {
  std::vector<PointObject> objects;
  std::vector<std::string> payloadColumns;
  std::vector<double> topX;
  std::vector<double> topY;
  /// Larger is more important; equals importance or -importance per z order.
  std::vector<double> priority;
  std::vector<double> measureValues;  // objects.size() x measureCount, row-major
  std::uint32_t measureCount = 0;
  std::vector<std::uint32_t> groupKey;
  std::vector<std::vector<std::string>> groupKeys;  // key id -> dimension tuple
  std::uint64_t droppedOutsideExtent = 0;

  std::size_t size() const noexcept { return objects.size(); }

  AggState seedAggregate(std::uint32_t i) const {
    return AggState::singleton(groupKey[i], std::span<const double>(measureValues).subspan(
                                                std::size_t{i} * measureCount, measureCount));
  }

  /// Strict "more important" order: priority descending, then id ascending.
  bool before(std::uint32_t a, std::uint32_t b) const noexcept {
    return priority[a] > priority[b] || (priority[a] == priority[b] && objects[a].id < objects[b].id);
  }
};

namespace detail {

inline std::string valueText(const Value& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  if (std::holds_alternative<double>(v)) {
    auto s = json(std::get<double>(v)).dump();
    return s;
  }
  return "";
}

}  // namespace detail

/// Builds the layout input. Objects outside an explicit extent are dropped
/// and counted. Measure and dimension fields may name x, y, z or any payload
/// column.
inline LayoutInput prepareLayoutInput(std::vector<PointObject> objects, std::vector<std::string> payloadColumns,
                                      const LayoutPlan& plan) {
  LayoutInput in;
  in.payloadColumns = std::move(payloadColumns);
  std::sort(objects.begin(), objects.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < objects.size(); ++i)
    if (objects[i].id == objects[i - 1].id)
      throw Error(ErrorCode::SchemaError, "duplicate object id " + std::to_string(objects[i].id));

  const bool clip = plan.xExtentExplicit || plan.yExtentExplicit;
  if (clip) {
    const auto before = objects.size();
    std::erase_if(objects, [&](const PointObject& o) { return !plan.insideExtent(o.rawX, o.rawY); });
    in.droppedOutsideExtent = before - objects.size();
  }
  in.objects = std::move(objects);

  auto payloadIndex = [&](const std::string& field) -> int {
    for (std::size_t c = 0; c < in.payloadColumns.size(); ++c)
      if (in.payloadColumns[c] == field) return static_cast<int>(c);
    return -1;
  };
  auto fieldValue = [&](const PointObject& o, const std::string& field, int payloadCol) -> Value {
    if (field == plan.xField) return o.rawX;
    if (field == plan.yField) return o.rawY;
    if (field == plan.zField) return o.importance;
    return o.payload.at(static_cast<std::size_t>(payloadCol));
  };
  auto resolve = [&](const std::string& field) {
    if (field == plan.xField || field == plan.yField || field == plan.zField) return -1;
    const int c = payloadIndex(field);
    if (c < 0) throw Error(ErrorCode::SchemaError, "unknown field '" + field + "'");
    return c;
  };

  std::vector<int> measureCols;
  for (const auto& m : plan.measures) measureCols.push_back(m.field ? resolve(*m.field) : -2);
  std::vector<int> dimCols;
  for (const auto& d : plan.dimensions) dimCols.push_back(resolve(d.field));

  const auto n = in.objects.size();
  in.measureCount = static_cast<std::uint32_t>(plan.measures.size());
  in.topX.resize(n);
  in.topY.resize(n);
  in.priority.resize(n);
  in.measureValues.resize(n * in.measureCount);
  in.groupKey.resize(n);

  std::map<std::vector<std::string>, std::uint32_t> keyIds;
  std::vector<std::string> tuple(plan.dimensions.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = in.objects[i];
    in.topX[i] = plan.projectX(o.rawX);
    in.topY[i] = plan.projectY(o.rawY);
    in.priority[i] = plan.order == SortOrder::Descending ? o.importance : -o.importance;
    for (std::size_t m = 0; m < plan.measures.size(); ++m) {
      double v = 1.0;  // count without a field
      if (measureCols[m] != -2) {
        const auto val = fieldValue(o, *plan.measures[m].field, measureCols[m]);
        if (!std::holds_alternative<double>(val))
          throw Error(ErrorCode::SchemaError, "measure field '" + *plan.measures[m].field + "' is not numeric");
        v = std::get<double>(val);
      }
      in.measureValues[i * in.measureCount + m] = v;
    }
    for (std::size_t d = 0; d < plan.dimensions.size(); ++d) {
      auto text = detail::valueText(fieldValue(o, plan.dimensions[d].field, dimCols[d]));
      const auto& domain = plan.dimensions[d].domain;
      if (domain && std::find(domain->begin(), domain->end(), text) == domain->end()) text = "(other)";
      tuple[d] = std::move(text);
    }
    auto [it, inserted] = keyIds.try_emplace(tuple, 0);
    if (inserted) {
      it->second = static_cast<std::uint32_t>(in.groupKeys.size());
      in.groupKeys.push_back(tuple);
    }
    in.groupKey[i] = it->second;
  }
  if (in.groupKeys.empty()) in.groupKeys.push_back({});
  return in;
}

/// Converts dataset rows to objects (x/y/z from the plan's fields, the rest
/// as payload) and prepares them.
inline LayoutInput prepareLayoutInput(const Dataset& d, const LayoutPlan& plan) {
  const int xc = d.columnIndex(plan.xField);
  const int yc = d.columnIndex(plan.yField);
  const int zc = d.columnIndex(plan.zField);
  if (xc < 0 || yc < 0 || zc < 0) throw Error(ErrorCode::SchemaError, "dataset lacks a layout column");
  for (int c : {xc, yc, zc})
    if (d.columns[c].type != ColumnType::Number)
      throw Error(ErrorCode::SchemaError, "layout column '" + d.columns[c].name + "' is not numeric");

  std::vector<std::size_t> payloadCols;
  std::vector<std::string> payloadNames;
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    if (static_cast<int>(c) == xc || static_cast<int>(c) == yc || static_cast<int>(c) == zc) continue;
    payloadCols.push_back(c);
    payloadNames.push_back(d.columns[c].name);
  }
  std::vector<PointObject> objects(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) {
    auto& o = objects[r];
    o.id = d.ids[r];
    o.rawX = d.numbers[xc][r];
    o.rawY = d.numbers[yc][r];
    o.importance = d.numbers[zc][r];
    o.payload.reserve(payloadCols.size());
    for (auto c : payloadCols) o.payload.push_back(d.value(r, c));
  }
  return prepareLayoutInput(std::move(objects), std::move(payloadNames), plan);
}

}  // namespace ssv
