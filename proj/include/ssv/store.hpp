#pragma once

// Persisted cluster tables, one per (level, partition), each with a packed
// R-tree over mark boxes, plus the viewport query that traverses the KD-tree
// to pick tables.
//
// Layout on disk:
//   <out>/manifest.json
//   <out>/level_<i>/part_<j>.tbl
// Levels 1..L are merged into a single part_0 table each.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssv/binary_io.hpp"
#include "ssv/cluster.hpp"
#include "ssv/kdtree.hpp"
#include "ssv/layout_input.hpp"
#include "ssv/parallel.hpp"
#include "ssv/plan.hpp"
#include "ssv/rtree.hpp"

namespace ssv {

inline constexpr char kTableMagic[8] = {'S', 'S', 'V', 'T', 'A', 'B', 'L', 'E'};
inline constexpr std::uint32_t kTableVersion = 1;
inline constexpr std::uint32_t kManifestVersion = 1;

struct RankEntry {
  ObjectId id = 0;
  double importance = 0;
  std::vector<Value> payload;
  bool operator==(const RankEntry&) const = default;
};

struct StoredCluster {
  int level = 0;
  double cx = 0;
  double cy = 0;
  ObjectId repId = 0;
  double priority = 0;
  double importance = 0;
  ObjectId parentId = 0;
  std::uint64_t memberCount = 0;
  Rect bbox;
  AggState agg;
  std::vector<RankEntry> ranklist;
  std::vector<Point> boundary;  // raw units

  bool operator==(const StoredCluster&) const = default;
};

struct Viewport {
  int level = 1;
  double xMin = 0;
  double yMin = 0;
  double xMax = 0;
  double yMax = 0;
  Rect rect() const noexcept { return {xMin, yMin, xMax, yMax}; }
};

struct PartitionTable {
  int level = 0;
  int partitionId = 0;
  std::vector<StoredCluster> rows;
  PackedRTree index;

  bool operator==(const PartitionTable&) const = default;
};

inline std::filesystem::path tablePath(int level, int partition) {
  return std::filesystem::path("level_" + std::to_string(level)) / ("part_" + std::to_string(partition) + ".tbl");
}

inline bool storesMerged(const LayoutPlan& plan, int level) { return level <= plan.topLevelMergeCount; }

namespace detail {

inline void putValue(io::ByteWriter& w, const Value& v) {
  if (std::holds_alternative<double>(v)) {
    w.put<std::uint8_t>(1);
    w.put<double>(std::get<double>(v));
  } else if (std::holds_alternative<std::string>(v)) {
    w.put<std::uint8_t>(2);
    w.putString(std::get<std::string>(v));
  } else {
    w.put<std::uint8_t>(0);
  }
}

inline Value getValue(io::ByteReader& r) {
  switch (r.get<std::uint8_t>()) {
    case 0: return std::monostate{};
    case 1: return r.get<double>();
    case 2: return r.getString();
    default: throw Error(ErrorCode::IoError, "corrupt value tag");
  }
}

// Variable-size part of a row: aggregates, ranklist, boundary.
inline std::string encodeRowPayload(const StoredCluster& c) {
  io::ByteWriter w;
  w.put<std::uint32_t>(c.agg.width());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.agg.groupCount()));
  w.putSpan<std::uint32_t>(c.agg.keys());
  w.putSpan<MeasureAcc>(c.agg.accs());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.ranklist.size()));
  for (const auto& e : c.ranklist) {
    w.put<ObjectId>(e.id);
    w.put<double>(e.importance);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.payload.size()));
    for (const auto& v : e.payload) putValue(w, v);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.boundary.size()));
  w.putSpan<Point>(c.boundary);
  return w.take();
}

inline void decodeRowPayload(std::string_view bytes, StoredCluster& c, const std::string& context) {
  io::ByteReader r(bytes, context);
  const auto width = r.get<std::uint32_t>();
  const auto groups = r.get<std::uint32_t>();
  auto keys = r.getVector<std::uint32_t>(groups);
  auto accs = r.getVector<MeasureAcc>(std::size_t{groups} * width);
  c.agg = AggState::fromParts(width, std::move(keys), std::move(accs));
  c.ranklist.resize(r.get<std::uint32_t>());
  for (auto& e : c.ranklist) {
    e.id = r.get<ObjectId>();
    e.importance = r.get<double>();
    e.payload.resize(r.get<std::uint32_t>());
    for (auto& v : e.payload) v = getValue(r);
  }
  c.boundary = r.getVector<Point>(r.get<std::uint32_t>());
  if (!r.atEnd()) throw Error(ErrorCode::IoError, context + ": trailing bytes in row payload");
}

template <typename T, typename F>
void putColumn(io::ByteWriter& w, const std::vector<StoredCluster>& rows, F get) {
  for (const auto& c : rows) w.put<T>(static_cast<T>(get(c)));
}

}  // namespace detail

/// Binary table file: magic, version, level, partition, row count, one
/// column per fixed-size field, length-prefixed variable payloads, R-tree.
inline std::string encodeTable(const PartitionTable& t) {
  io::ByteWriter w;
  w.putBytes(std::string_view(kTableMagic, sizeof kTableMagic));
  w.put<std::uint32_t>(kTableVersion);
  w.put<std::int32_t>(t.level);
  w.put<std::int32_t>(t.partitionId);
  w.put<std::uint64_t>(t.rows.size());
  const auto& rows = t.rows;
  detail::putColumn<double>(w, rows, [](auto& c) { return c.cx; });
  detail::putColumn<double>(w, rows, [](auto& c) { return c.cy; });
  detail::putColumn<ObjectId>(w, rows, [](auto& c) { return c.repId; });
  detail::putColumn<double>(w, rows, [](auto& c) { return c.priority; });
  detail::putColumn<double>(w, rows, [](auto& c) { return c.importance; });
  detail::putColumn<ObjectId>(w, rows, [](auto& c) { return c.parentId; });
  detail::putColumn<std::uint64_t>(w, rows, [](auto& c) { return c.memberCount; });
  for (const auto& c : rows) w.put<Rect>(c.bbox);
  for (const auto& c : rows) w.putString(detail::encodeRowPayload(c));
  t.index.serialize(w);
  return w.take();
}

inline PartitionTable decodeTable(std::string_view bytes, const std::string& context) {
  io::ByteReader r(bytes, context);
  if (r.getBytes(sizeof kTableMagic) != std::string_view(kTableMagic, sizeof kTableMagic))
    throw Error(ErrorCode::IoError, context + ": not a table file");
  if (const auto v = r.get<std::uint32_t>(); v != kTableVersion)
    throw Error(ErrorCode::IoError, context + ": unsupported table version " + std::to_string(v));
  PartitionTable t;
  t.level = r.get<std::int32_t>();
  t.partitionId = r.get<std::int32_t>();
  const auto n = r.get<std::uint64_t>();
  t.rows.resize(n);
  for (auto& c : t.rows) c.level = t.level;
  auto cx = r.getVector<double>(n);
  auto cy = r.getVector<double>(n);
  auto rep = r.getVector<ObjectId>(n);
  auto pri = r.getVector<double>(n);
  auto imp = r.getVector<double>(n);
  auto par = r.getVector<ObjectId>(n);
  auto cnt = r.getVector<std::uint64_t>(n);
  auto box = r.getVector<Rect>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = t.rows[i];
    c.cx = cx[i];
    c.cy = cy[i];
    c.repId = rep[i];
    c.priority = pri[i];
    c.importance = imp[i];
    c.parentId = par[i];
    c.memberCount = cnt[i];
    c.bbox = box[i];
  }
  for (auto& c : t.rows) detail::decodeRowPayload(r.getBytes(r.get<std::uint32_t>()), c, context);
  t.index = PackedRTree::deserialize(r);
  if (t.index.size() != n) throw Error(ErrorCode::IoError, context + ": index size mismatch");
  if (!r.atEnd()) throw Error(ErrorCode::IoError, context + ": trailing bytes");
  return t;
}

inline StoredCluster storeCluster(const ClusterRecord& c, const LayoutInput& in, const LayoutPlan& plan) {
  StoredCluster s;
  s.level = c.level;
  s.cx = c.cx;
  s.cy = c.cy;
  s.repId = c.repId;
  s.priority = c.priority;
  s.importance = in.objects[c.rep].importance;
  s.parentId = in.objects[c.parent].id;
  s.memberCount = c.memberCount;
  s.bbox = Rect::centered(c.cx, c.cy, plan.box.width, plan.box.height);
  s.agg = c.agg;
  s.ranklist.reserve(c.ranklist.size());
  for (auto i : c.ranklist) s.ranklist.push_back({in.objects[i].id, in.objects[i].importance, in.objects[i].payload});
  s.boundary = c.boundary;
  return s;
}

/// Tables for one level: a single merged table on the top L levels, else one
/// per KD leaf, each row filed under its representative's partition. Rows
/// keep the level's canonical order.
inline std::vector<PartitionTable> levelTables(const LevelLayout& lv, const KdPartitionTree& tree,
                                               const LayoutInput& in, const LayoutPlan& plan) {
  const bool merged = storesMerged(plan, lv.level);
  std::vector<PartitionTable> tables(merged ? 1 : tree.partitionCount());
  for (std::size_t j = 0; j < tables.size(); ++j) {
    tables[j].level = lv.level;
    tables[j].partitionId = static_cast<int>(j);
  }
  for (const auto& c : lv.clusters) {
    const auto& o = in.objects[c.rep];
    const auto j = merged ? 0 : static_cast<std::size_t>(tree.partitionOf(o.rawX, o.rawY, o.id));
    tables[j].rows.push_back(storeCluster(c, in, plan));
  }
  return tables;
}

struct BuildSummary {
  std::size_t tableCount = 0;
  std::uint64_t bytesWritten = 0;
  double indexBuildMs = 0;
  json manifest;
};

/// Writes every table and the manifest under `outDir`. Tables are built and
/// written concurrently; the output is byte-identical across runs.
inline BuildSummary buildIndexes(const LayoutResult& layout, const KdPartitionTree& tree, const LayoutInput& in,
                                 const LayoutPlan& plan, const std::filesystem::path& outDir, int workers = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Job {
    int level;
    int partition;
    PartitionTable table;
    std::string path;
    std::uint64_t bytes = 0;
    std::uint32_t crc = 0;
  };
  std::vector<Job> jobs;
  for (const auto& lv : layout.levels)
    for (auto& t : levelTables(lv, tree, in, plan)) {
      const int level = t.level, part = t.partitionId;
      jobs.push_back({level, part, std::move(t), tablePath(level, part).generic_string()});
    }

  std::filesystem::create_directories(outDir);
  parallelFor(jobs.size(), workers, [&](std::size_t k) {
    auto& job = jobs[k];
    std::vector<Rect> boxes;
    boxes.reserve(job.table.rows.size());
    for (const auto& r : job.table.rows) boxes.push_back(r.bbox);
    job.table.index = PackedRTree::build(boxes);
    const auto bytes = encodeTable(job.table);
    job.bytes = bytes.size();
    job.crc = io::crc32(bytes);
    try {
      io::writeFile(outDir / job.path, bytes);
    } catch (const Error& e) {
      throw Error(ErrorCode::IoError, "table level " + std::to_string(job.level) + " partition " +
                                          std::to_string(job.partition) + ": " + e.what());
    }
    job.table.rows = {};
  });

  BuildSummary s;
  json tables = json::array();
  for (const auto& job : jobs) {
    tables.push_back({{"level", job.level},
                      {"partition", job.partition},
                      {"path", job.path},
                      {"rows", job.table.index.size()},
                      {"bytes", job.bytes},
                      {"crc32", job.crc}});
    s.bytesWritten += job.bytes;
  }
  json levels = json::array();
  for (const auto& lv : layout.levels)
    levels.push_back({{"level", lv.level}, {"clusters", lv.clusters.size()}, {"merged", storesMerged(plan, lv.level)}});

  s.manifest = {{"format", "ssv-store"},
                {"version", kManifestVersion},
                {"objects", in.size()},
                {"droppedOutsideExtent", in.droppedOutsideExtent},
                {"plan", toJson(plan)},
                {"kdTree", toJson(tree)},
                {"payloadColumns", in.payloadColumns},
                {"groupKeys", in.groupKeys},
                {"levels", levels},
                {"tables", tables}};
  io::writeFile(outDir / "manifest.json", s.manifest.dump(2) + "\n");
  s.tableCount = jobs.size();
  s.indexBuildMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

inline bool fetchOrder(const StoredCluster& a, const StoredCluster& b) noexcept {
  return a.priority > b.priority || (a.priority == b.priority && a.repId < b.repId);
}

/// A loaded, immutable index set. All queries are const and thread-safe.
class Store {
 public:
  static Store open(const std::filesystem::path& dir) {
    Store s;
    const auto manifestPath = dir / "manifest.json";
    if (!std::filesystem::exists(manifestPath)) throw Error(ErrorCode::IoError, "no manifest.json in " + dir.string());
    try {
      s.manifest_ = json::parse(io::readFile(manifestPath));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::IoError, "manifest.json: " + std::string(e.what()));
    }
    if (s.manifest_.value("format", "") != "ssv-store" || s.manifest_.value("version", 0u) != kManifestVersion)
      throw Error(ErrorCode::IoError, "manifest.json: unsupported format");
    s.plan_ = planFromJson(s.manifest_.at("plan"));
    s.tree_ = kdTreeFromJson(s.manifest_.at("kdTree"));
    s.payloadColumns_ = s.manifest_.at("payloadColumns").get<std::vector<std::string>>();
    s.groupKeys_ = s.manifest_.at("groupKeys").get<std::vector<std::vector<std::string>>>();
    s.tables_.resize(static_cast<std::size_t>(s.plan_.numLevels));
    for (int level = 1; level <= s.plan_.numLevels; ++level)
      s.tables_[static_cast<std::size_t>(level - 1)].resize(storesMerged(s.plan_, level) ? 1 : s.tree_.partitionCount());
    for (const auto& tj : s.manifest_.at("tables")) {
      const int level = tj.at("level").get<int>();
      const int part = tj.at("partition").get<int>();
      const auto rel = tj.at("path").get<std::string>();
      const auto bytes = io::readFile(dir / rel);
      if (io::crc32(bytes) != tj.at("crc32").get<std::uint32_t>())
        throw Error(ErrorCode::IoError, rel + ": checksum mismatch");
      auto t = decodeTable(bytes, rel);
      if (t.level != level || t.partitionId != part) throw Error(ErrorCode::IoError, rel + ": table identity mismatch");
      if (level < 1 || level > s.plan_.numLevels ||
          static_cast<std::size_t>(part) >= s.tables_[static_cast<std::size_t>(level - 1)].size())
        throw Error(ErrorCode::IoError, rel + ": table outside the manifest's layout");
      s.tables_[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(part)] = std::move(t);
    }
    return s;
  }

  const LayoutPlan& plan() const noexcept { return plan_; }
  const KdPartitionTree& tree() const noexcept { return tree_; }
  const json& manifest() const noexcept { return manifest_; }
  const std::vector<std::string>& payloadColumns() const noexcept { return payloadColumns_; }
  const std::vector<std::vector<std::string>>& groupKeys() const noexcept { return groupKeys_; }
  int numLevels() const noexcept { return plan_.numLevels; }

  const std::vector<PartitionTable>& tables(int level) const {
    checkLevel(level);
    return tables_[static_cast<std::size_t>(level - 1)];
  }

  /// Partitions whose projected leaf extent, grown by half a mark box, meets
  /// `v`. Every row of a pruned partition lies outside `v`.
  std::vector<int> partitionsFor(const Viewport& v) const {
    checkViewport(v);
    if (storesMerged(plan_, v.level)) return {0};
    const Rect q = v.rect();
    std::vector<int> out;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const auto& n = tree_.nodes[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      if (!levelExtent(n.extent, v.level).intersects(q)) continue;
      if (n.isLeaf()) {
        out.push_back(n.partitionId);
      } else {
        stack.push_back(n.right);
        stack.push_back(n.left);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Rows whose mark box meets the viewport, most important first.
  std::vector<StoredCluster> fetch(const Viewport& v) const {
    std::vector<StoredCluster> out;
    const auto& level = tables(v.level);
    for (int j : partitionsFor(v)) {
      const auto& t = level[static_cast<std::size_t>(j)];
      for (auto i : t.index.query(v.rect())) out.push_back(t.rows[i]);
    }
    std::sort(out.begin(), out.end(), fetchOrder);
    return out;
  }

  /// Raw-extent rectangle mapped to level pixels and grown by half a mark.
  Rect levelExtent(const Rect& raw, int level) const {
    const double s = plan_.levelScale(level);
    const double x0 = plan_.projectX(raw.xMin) * s, x1 = plan_.projectX(raw.xMax) * s;
    const double y0 = plan_.projectY(raw.yMax) * s, y1 = plan_.projectY(raw.yMin) * s;
    const double hw = plan_.box.width / 2, hh = plan_.box.height / 2;
    return {std::min(x0, x1) - hw, std::min(y0, y1) - hh, std::max(x0, x1) + hw, std::max(y0, y1) + hh};
  }

 private:
  void checkLevel(int level) const {
    if (level < 1 || level > plan_.numLevels)
      throw Error(ErrorCode::UnknownLevel, "level " + std::to_string(level) + " is outside [1, " +
                                               std::to_string(plan_.numLevels) + "]");
  }
  void checkViewport(const Viewport& v) const {
    checkLevel(v.level);
    if (!(v.xMin <= v.xMax && v.yMin <= v.yMax))
      throw Error(ErrorCode::InvalidArgument, "viewport min must not exceed max");
  }

  json manifest_;
  LayoutPlan plan_;
  KdPartitionTree tree_;
  std::vector<std::string> payloadColumns_;
  std::vector<std::vector<std::string>> groupKeys_;
  std::vector<std::vector<PartitionTable>> tables_;  // [level-1][partition]
};

}  // namespace ssv
