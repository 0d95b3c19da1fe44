#pragma once

// Columnar in-memory dataset, text ingest (CSV / NDJSON), the binary
// dataset file, and seeded synthetic generators.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ssv/binary_io.hpp"
#include "ssv/grammar.hpp"
#include "ssv/plan.hpp"

namespace ssv {

using ObjectId = std::uint64_t;
using Value = std::variant<std::monostate, double, std::string>;

inline json toJson(const Value& v) {
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  return nullptr;
}

/// Column-oriented table of accepted rows. Row i has object id ids[i].
struct Dataset {
  std::vector<ColumnSpec> columns;
  std::vector<ObjectId> ids;
  std::vector<std::vector<double>> numbers;     // per column; empty for string columns
  std::vector<std::vector<std::string>> texts;  // per column; empty for numeric columns

  explicit Dataset(std::vector<ColumnSpec> cols = {}) : columns(std::move(cols)) {
    numbers.resize(columns.size());
    texts.resize(columns.size());
  }

  std::size_t size() const noexcept { return ids.size(); }

  int columnIndex(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return static_cast<int>(i);
    return -1;
  }
  const std::vector<double>& numeric(std::string_view name) const {
    const int c = columnIndex(name);
    if (c < 0 || columns[c].type != ColumnType::Number)
      throw Error(ErrorCode::SchemaError, "no numeric column '" + std::string(name) + "'");
    return numbers[c];
  }
  Value value(std::size_t row, std::size_t col) const {
    if (columns[col].type == ColumnType::Number) return numbers[col][row];
    return texts[col][row];
  }

  bool operator==(const Dataset&) const = default;
};

struct RejectedRow {
  std::uint64_t line = 0;  // 1-based line in the source file
  std::string reason;
};

struct IngestResult {
  Dataset data;
  std::vector<RejectedRow> rejected;
};

namespace detail {

inline bool parseNumber(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

/// Splits one CSV record (RFC 4180 quoting). Returns false on an unterminated
/// quote; embedded newlines are not supported.
inline bool splitCsv(std::string_view line, std::vector<std::string>& fields) {
  fields.clear();
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return !quoted;
}

}  // namespace detail

/// Reads CSV with a header row. Declared columns are matched by header name;
/// undeclared header columns are ignored. Rows that fail type checks are
/// reported and skipped; accepted rows get sequential ids.
inline IngestResult readCsv(std::istream& in, const std::vector<ColumnSpec>& schema) {
  IngestResult result{Dataset(schema), {}};
  std::string line;
  std::uint64_t lineNo = 0;
  std::vector<std::string> fields;

  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "empty CSV input (no header)");
  ++lineNo;
  if (!detail::splitCsv(line, fields)) throw Error(ErrorCode::SchemaError, "malformed CSV header");
  std::vector<std::size_t> source(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto it = std::find(fields.begin(), fields.end(), schema[c].name);
    if (it == fields.end()) throw Error(ErrorCode::SchemaError, "CSV header lacks column '" + schema[c].name + "'");
    source[c] = static_cast<std::size_t>(it - fields.begin());
  }
  const std::size_t width = fields.size();

  auto& d = result.data;
  std::vector<double> nums(schema.size());
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line == "\r") continue;
    if (!detail::splitCsv(line, fields)) {
      result.rejected.push_back({lineNo, "unterminated quote"});
      continue;
    }
    if (fields.size() != width) {
      result.rejected.push_back({lineNo, "expected " + std::to_string(width) + " fields, got " +
                                             std::to_string(fields.size())});
      continue;
    }
    bool ok = true;
    for (std::size_t c = 0; c < schema.size() && ok; ++c) {
      if (schema[c].type == ColumnType::Number && !detail::parseNumber(fields[source[c]], nums[c])) {
        result.rejected.push_back({lineNo, "column '" + schema[c].name + "' is not a finite number"});
        ok = false;
      }
    }
    if (!ok) continue;
    d.ids.push_back(d.ids.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (schema[c].type == ColumnType::Number)
        d.numbers[c].push_back(nums[c]);
      else
        d.texts[c].push_back(fields[source[c]]);
    }
  }
  return result;
}

/// Reads newline-delimited JSON objects.
inline IngestResult readNdjson(std::istream& in, const std::vector<ColumnSpec>& schema) {
  IngestResult result{Dataset(schema), {}};
  std::string line;
  std::uint64_t lineNo = 0;
  auto& d = result.data;
  std::vector<double> nums(schema.size());
  std::vector<std::string> strs(schema.size());
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      result.rejected.push_back({lineNo, "not a JSON object"});
      continue;
    }
    bool ok = true;
    for (std::size_t c = 0; c < schema.size() && ok; ++c) {
      auto it = row.find(schema[c].name);
      if (it == row.end()) {
        result.rejected.push_back({lineNo, "missing column '" + schema[c].name + "'"});
        ok = false;
      } else if (schema[c].type == ColumnType::Number) {
        if (it->is_number() && std::isfinite(it->get<double>()))
          nums[c] = it->get<double>();
        else if (!(it->is_string() && detail::parseNumber(it->get<std::string>(), nums[c]))) {
          result.rejected.push_back({lineNo, "column '" + schema[c].name + "' is not a finite number"});
          ok = false;
        }
      } else {
        strs[c] = it->is_string() ? it->get<std::string>() : it->dump();
      }
    }
    if (!ok) continue;
    d.ids.push_back(d.ids.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (schema[c].type == ColumnType::Number)
        d.numbers[c].push_back(nums[c]);
      else
        d.texts[c].push_back(std::move(strs[c]));
    }
  }
  return result;
}

inline IngestResult ingestFile(const std::filesystem::path& path, const DataSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return spec.format == DataFormat::Csv ? readCsv(in, spec.columns) : readNdjson(in, spec.columns);
}

inline DataStats computeStats(const Dataset& d, std::string_view xField, std::string_view yField) {
  DataStats s;
  s.n = d.size();
  if (s.n == 0) return s;
  const auto& xs = d.numeric(xField);
  const auto& ys = d.numeric(yField);
  const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
  const auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
  s.xMin = *xlo;
  s.xMax = *xhi;
  s.yMin = *ylo;
  s.yMax = *yhi;
  return s;
}

inline constexpr char kDatasetMagic[8] = {'S', 'S', 'V', 'D', 'S', 'E', 'T', '1'};

inline std::string encodeDataset(const Dataset& d) {
  io::ByteWriter w;
  w.putBytes(std::string_view(kDatasetMagic, 8));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(d.columns.size()));
  for (const auto& c : d.columns) {
    w.put<std::uint8_t>(c.type == ColumnType::Number ? 0 : 1);
    w.putString(c.name);
  }
  w.put<std::uint64_t>(d.size());
  w.putSpan<ObjectId>(d.ids);
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    if (d.columns[c].type == ColumnType::Number)
      w.putSpan<double>(d.numbers[c]);
    else
      for (const auto& s : d.texts[c]) w.putString(s);
  }
  return w.take();
}

inline Dataset decodeDataset(std::string_view bytes, const std::string& context = "dataset") {
  io::ByteReader r(bytes, context);
  if (r.getBytes(8) != std::string_view(kDatasetMagic, 8)) throw Error(ErrorCode::IoError, context + ": bad magic");
  const auto ncols = r.get<std::uint32_t>();
  std::vector<ColumnSpec> cols;
  for (std::uint32_t i = 0; i < ncols; ++i) {
    const auto type = r.get<std::uint8_t>();
    cols.push_back({r.getString(), type == 0 ? ColumnType::Number : ColumnType::String});
  }
  Dataset d(std::move(cols));
  const auto n = r.get<std::uint64_t>();
  d.ids = r.getVector<ObjectId>(n);
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    if (d.columns[c].type == ColumnType::Number) {
      d.numbers[c] = r.getVector<double>(n);
    } else {
      d.texts[c].reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) d.texts[c].push_back(r.getString());
    }
  }
  if (!r.atEnd()) throw Error(ErrorCode::IoError, context + ": trailing bytes");
  return d;
}

inline void writeDataset(const std::filesystem::path& path, const Dataset& d) { io::writeFile(path, encodeDataset(d)); }
inline Dataset readDataset(const std::filesystem::path& path) {
  return decodeDataset(io::readFile(path), path.string());
}

enum class Distribution { Uniform, Skew, Coincident, Collinear };

inline Distribution parseDistribution(std::string_view s) {
  if (s == "uniform") return Distribution::Uniform;
  if (s == "skew") return Distribution::Skew;
  if (s == "coincident") return Distribution::Coincident;
  if (s == "collinear") return Distribution::Collinear;
  throw Error(ErrorCode::InvalidArgument, "unknown distribution '" + std::string(s) + "'");
}

inline constexpr double kGeneratorPlane = 10000.0;

/// Axis-aligned region holding 80% of the points of a skewed dataset.
struct SkewRegion {
  double x0 = 0, y0 = 0, width = 0, height = 0;
};

inline SkewRegion skewRegion(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double L = kGeneratorPlane;
  const double w = (0.2 + 0.8 * u(rng)) * L;
  const double h = 0.2 * L * L / w;
  return {u(rng) * (L - w), u(rng) * (L - h), w, h};
}

/// Synthetic dataset with numeric columns x, y, z on a square plane. `Skew`
/// puts exactly round(0.8 n) points uniformly in a random axis-aligned
/// rectangle covering 20% of the plane and the rest uniformly everywhere.
inline Dataset generateDataset(Distribution dist, std::uint64_t n, std::uint64_t seed) {
  Dataset d({{"x", ColumnType::Number}, {"y", ColumnType::Number}, {"z", ColumnType::Number}});
  auto& xs = d.numbers[0];
  auto& ys = d.numbers[1];
  auto& zs = d.numbers[2];
  xs.resize(n);
  ys.resize(n);
  zs.resize(n);
  d.ids.resize(n);
  std::iota(d.ids.begin(), d.ids.end(), ObjectId{0});

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double L = kGeneratorPlane;

  std::vector<char> inRegion;
  SkewRegion region;
  if (dist == Distribution::Skew) {
    region = skewRegion(seed);
    const auto dense = static_cast<std::uint64_t>(std::llround(0.8 * static_cast<double>(n)));
    inRegion.assign(n, 0);
    std::fill(inRegion.begin(), inRegion.begin() + static_cast<std::ptrdiff_t>(dense), 1);
    std::shuffle(inRegion.begin(), inRegion.end(), rng);
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    switch (dist) {
      case Distribution::Uniform:
        xs[i] = u(rng) * L;
        ys[i] = u(rng) * L;
        break;
      case Distribution::Skew:
        if (inRegion[i]) {
          xs[i] = region.x0 + u(rng) * region.width;
          ys[i] = region.y0 + u(rng) * region.height;
        } else {
          xs[i] = u(rng) * L;
          ys[i] = u(rng) * L;
        }
        break;
      case Distribution::Coincident:
        xs[i] = L / 2;
        ys[i] = L / 2;
        break;
      case Distribution::Collinear:
        xs[i] = u(rng) * L;
        ys[i] = L / 2;
        break;
    }
    zs[i] = u(rng);
  }
  return d;
}

inline void writeCsv(std::ostream& out, const Dataset& d) {
  for (std::size_t c = 0; c < d.columns.size(); ++c) out << (c ? "," : "") << d.columns[c].name;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
      if (c) out << ',';
      if (d.columns[c].type == ColumnType::Number) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), d.numbers[c][r]);
        out.write(buf, res.ptr - buf);
      } else {
        const auto& s = d.texts[c][r];
        if (s.find_first_of(",\"\n") == std::string::npos) {
          out << s;
        } else {
          out << '"';
          for (char ch : s) out << (ch == '"' ? "\"\"" : std::string(1, ch));
          out << '"';
        }
      }
    }
    out << '\n';
  }
}

}  // namespace ssv
