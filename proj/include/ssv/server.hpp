#pragma once

// HTTP front end over a loaded Store. The handlers are plain functions of
// (store, request parameters) so they can be tested without sockets.

#include <chrono>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "ssv/store.hpp"

namespace ssv {

struct HttpResult {
  int status = 200;
  json body;
};

inline std::string measureName(const MeasurePlan& m) {
  return std::string(to_string(m.function)) + "(" + (m.field ? *m.field : "*") + ")";
}

inline json aggregatesJson(const AggState& agg, const LayoutPlan& plan,
                           const std::vector<std::vector<std::string>>& groupKeys) {
  auto values = [&](std::span<const MeasureAcc> accs) {
    json v = json::object();
    for (std::size_t m = 0; m < plan.measures.size() && m < accs.size(); ++m)
      v[measureName(plan.measures[m])] = accs[m].value(plan.measures[m].function);
    return v;
  };
  json groups = json::array();
  if (!plan.dimensions.empty()) {
    for (std::size_t g = 0; g < agg.groupCount(); ++g) {
      json key = json::object();
      const auto& tuple = groupKeys.at(agg.keys()[g]);
      for (std::size_t d = 0; d < plan.dimensions.size() && d < tuple.size(); ++d)
        key[plan.dimensions[d].field] = tuple[d];
      groups.push_back({{"key", key}, {"values", values(agg.group(g))}});
    }
  }
  const auto totals = agg.totals();
  return {{"totals", values(totals)}, {"groups", groups}};
}

inline json clusterJson(const StoredCluster& c, const Store& store) {
  json ranklist = json::array();
  for (const auto& e : c.ranklist) {
    json payload = json::object();
    for (std::size_t k = 0; k < e.payload.size() && k < store.payloadColumns().size(); ++k)
      payload[store.payloadColumns()[k]] = toJson(e.payload[k]);
    ranklist.push_back({{"id", e.id}, {"importance", e.importance}, {"payload", payload}});
  }
  json boundary = json::array();
  for (const auto& p : c.boundary) boundary.push_back({p.x, p.y});
  return {{"repId", c.repId},
          {"cx", c.cx},
          {"cy", c.cy},
          {"importance", c.importance},
          {"memberCount", c.memberCount},
          {"aggregates", aggregatesJson(c.agg, store.plan(), store.groupKeys())},
          {"ranklist", ranklist},
          {"boundary", boundary}};
}

inline HttpResult errorResult(int status, ErrorCode code, const std::string& message) {
  return {status, {{"error", to_string(code)}, {"message", message}}};
}

inline HttpResult handleMeta(const Store* store) {
  if (!store) return errorResult(503, ErrorCode::NotLoaded, "no build loaded");
  const auto& p = store->plan();
  return {200,
          {{"numLevels", p.numLevels},
           {"zoomFactor", p.zoomFactor},
           {"canvas", {{"width", p.canvasW}, {"height", p.canvasH}}},
           {"viewport", {{"width", p.viewportW}, {"height", p.viewportH}}},
           {"bbox", {{"width", p.box.width}, {"height", p.box.height}}},
           {"theta", p.theta},
           {"densityBudget", p.densityBudget},
           {"budgetFeasible", p.budgetFeasible},
           {"mode", to_string(p.mode)},
           {"topk", p.topk},
           {"boundary", to_string(p.boundary)},
           {"objects", store->manifest().value("objects", 0)},
           {"partitions", store->tree().partitionCount()},
           {"topLevelMergeCount", p.topLevelMergeCount}}};
}

namespace detail {

inline bool parseDouble(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline bool parseInt(const std::string& s, int& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// GET /fetch. Parameters: level, xmin, ymin, xmax, ymax (level pixels).
inline HttpResult handleFetch(const Store* store, const std::map<std::string, std::string>& params) {
  if (!store) return errorResult(503, ErrorCode::NotLoaded, "no build loaded");
  auto get = [&](const char* k) -> const std::string* {
    auto it = params.find(k);
    return it == params.end() ? nullptr : &it->second;
  };
  Viewport v;
  const auto* level = get("level");
  if (!level || !detail::parseInt(*level, v.level))
    return errorResult(400, ErrorCode::InvalidArgument, "level must be an integer");
  const std::pair<const char*, double*> coords[] = {
      {"xmin", &v.xMin}, {"ymin", &v.yMin}, {"xmax", &v.xMax}, {"ymax", &v.yMax}};
  for (auto [name, dst] : coords) {
    const auto* s = get(name);
    if (!s || !detail::parseDouble(*s, *dst))
      return errorResult(400, ErrorCode::InvalidArgument, std::string(name) + " must be a finite number");
  }
  if (v.xMin > v.xMax || v.yMin > v.yMax)
    return errorResult(400, ErrorCode::InvalidArgument, "viewport min must not exceed max");
  if (v.level < 1 || v.level > store->numLevels())
    return errorResult(404, ErrorCode::UnknownLevel, "unknown level " + *level);

  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = store->fetch(v);
  json clusters = json::array();
  for (const auto& r : rows) clusters.push_back(clusterJson(r, *store));
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {200, {{"level", v.level}, {"clusters", std::move(clusters)}, {"timingMs", ms}}};
}

struct ServerOptions {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::filesystem::path uiDir;  // mounted at /ui when set
  std::ostream* log = nullptr;   // one JSON line per request
  int threads = 8;
};

/// Registers handlers on `srv`. The store must outlive the server.
inline void configureServer(httplib::Server& srv, const Store* store, const ServerOptions& opt) {
  auto mutex = std::make_shared<std::mutex>();
  auto reply = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Get("/meta", [=](const httplib::Request&, httplib::Response& res) { reply(res, handleMeta(store)); });
  srv.Get("/fetch", [=](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params.emplace(k, v);
    try {
      const auto r = handleFetch(store, params);
      reply(res, r);
      if (r.status == 200) {
        res.set_header("X-Fetch-Ms", std::to_string(r.body["timingMs"].get<double>()));
        res.set_header("X-Cluster-Count", std::to_string(r.body["clusters"].size()));
      }
    } catch (const Error& e) {
      reply(res, errorResult(e.code() == ErrorCode::UnknownLevel ? 404 : 500, e.code(), e.what()));
    }
  });
  if (!opt.uiDir.empty()) srv.set_mount_point("/ui", opt.uiDir.string());
  srv.new_task_queue = [n = opt.threads] { return new httplib::ThreadPool(static_cast<std::size_t>(n)); };
  if (opt.log) {
    srv.set_logger([log = opt.log, mutex](const httplib::Request& req, const httplib::Response& res) {
      json line = {{"method", req.method}, {"path", req.path}, {"status", res.status}};
      if (!req.params.empty()) {
        json q = json::object();
        for (const auto& [k, v] : req.params) q[k] = v;
        line["query"] = q;
      }
      if (res.has_header("X-Fetch-Ms")) {
        line["timingMs"] = std::stod(res.get_header_value("X-Fetch-Ms"));
        line["clusters"] = std::stoull(res.get_header_value("X-Cluster-Count"));
      }
      std::lock_guard lock(*mutex);
      *log << line.dump() << '\n' << std::flush;
    });
  }
}

}  // namespace ssv
