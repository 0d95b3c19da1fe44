#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "support.hpp"

using namespace ssv;
using namespace ssvtest;
namespace fs = std::filesystem;

namespace {

/// One small indexed store shared by every test in this file.
const Store& sharedStore() {
  static const Store store = [] {
    const auto dir = scratchDir("server");
    IndexOptions opt{LayoutMode::Distributed, 2, 400, false};
    runIndex(xyzSpec(), generateDataset(Distribution::Skew, 3000, 4), dir, opt);
    return Store::open(dir);
  }();
  return store;
}

std::map<std::string, std::string> query(int level, double x0, double y0, double x1, double y1) {
  return {{"level", std::to_string(level)},
          {"xmin", json(x0).dump()},
          {"ymin", json(y0).dump()},
          {"xmax", json(x1).dump()},
          {"ymax", json(y1).dump()}};
}

json withoutTiming(json body) {
  body.erase("timingMs");
  return body;
}

/// Runs a real server on an ephemeral port for the lifetime of the object.
struct LiveServer {
  httplib::Server srv;
  std::thread thread;
  int port = 0;

  LiveServer(const Store* store, const ServerOptions& opt) {
    configureServer(srv, store, opt);
    port = srv.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { srv.listen_after_bind(); });
    srv.wait_until_ready();
  }
  ~LiveServer() {
    srv.stop();
    thread.join();
  }
};

}  // namespace

TEST(Meta, NotLoadedWithoutStore) {
  const auto r = handleMeta(nullptr);
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(r.body["error"], "NotLoaded");
  EXPECT_EQ(handleFetch(nullptr, query(1, 0, 0, 1, 1)).status, 503);
}

TEST(Meta, DescribesTheBuild) {
  const auto& store = sharedStore();
  const auto a = handleMeta(&store), b = handleMeta(&store);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  EXPECT_EQ(a.body["numLevels"], store.numLevels());
  EXPECT_EQ(a.body["theta"].get<double>(), store.plan().theta);
  EXPECT_EQ(a.body["objects"], 3000);
  EXPECT_EQ(a.body["partitions"], store.tree().partitionCount());
}

TEST(Fetch, RejectsBadParameters) {
  const auto& store = sharedStore();
  auto q = query(1, 0, 0, 100, 100);
  q["xmin"] = "abc";
  EXPECT_EQ(handleFetch(&store, q).status, 400);
  q = query(1, 0, 0, 100, 100);
  q.erase("ymax");
  EXPECT_EQ(handleFetch(&store, q).status, 400);
  q = query(1, 0, 0, 100, 100);
  q["level"] = "one";
  EXPECT_EQ(handleFetch(&store, q).status, 400);
  q = query(1, 0, 0, 100, 100);
  q["xmax"] = "nan";
  EXPECT_EQ(handleFetch(&store, q).status, 400);
  EXPECT_EQ(handleFetch(&store, query(1, 200, 0, 100, 100)).status, 400);
  EXPECT_EQ(handleFetch(&store, query(0, 0, 0, 100, 100)).status, 404);
  EXPECT_EQ(handleFetch(&store, query(store.numLevels() + 1, 0, 0, 100, 100)).status, 404);
}

TEST(Fetch, WholeTopLevel) {
  const auto& store = sharedStore();
  const auto& p = store.plan();
  const auto r = handleFetch(&store, query(1, -p.box.width, -p.box.height, p.canvasW + p.box.width,
                                           p.canvasH + p.box.height));
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["level"], 1);
  EXPECT_EQ(r.body["clusters"].size(), store.tables(1).front().rows.size());
  std::uint64_t members = 0;
  for (const auto& c : r.body["clusters"]) {
    members += c["memberCount"].get<std::uint64_t>();
    EXPECT_LE(c["ranklist"].size(), 3u);
    EXPECT_EQ(c["aggregates"]["totals"].size(), p.measures.size());
    EXPECT_EQ(c["boundary"].size(), 2u);  // bbox corners
  }
  EXPECT_EQ(members, 3000u);
  EXPECT_EQ(withoutTiming(r.body), withoutTiming(handleFetch(&store, query(1, -p.box.width, -p.box.height,
                                                                          p.canvasW + p.box.width,
                                                                          p.canvasH + p.box.height)).body));
}

TEST(Http, ConcurrentRequestsCorsAndLog) {
  const auto& store = sharedStore();
  std::ostringstream log;
  const auto ui = scratchDir("server-ui");
  std::ofstream(ui / "index.html") << "<html>ok</html>";
  LiveServer live(&store, {"127.0.0.1", 0, ui, &log, 8});

  const std::string path = "/fetch?level=2&xmin=0&ymin=0&xmax=1600&ymax=900";
  std::vector<std::string> bodies(64);
  std::vector<int> statuses(64);
  std::vector<std::thread> clients;
  for (std::size_t i = 0; i < bodies.size(); ++i)
    clients.emplace_back([&, i] {
      httplib::Client cli("127.0.0.1", live.port);
      if (auto res = cli.Get(path)) {
        statuses[i] = res->status;
        bodies[i] = withoutTiming(json::parse(res->body)).dump();
      }
    });
  for (auto& t : clients) t.join();
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    EXPECT_EQ(statuses[i], 200);
    EXPECT_EQ(bodies[i], bodies[0]);
  }

  httplib::Client cli("127.0.0.1", live.port);
  const auto meta = cli.Get("/meta");
  ASSERT_TRUE(meta);
  EXPECT_EQ(meta->get_header_value("Access-Control-Allow-Origin"), "*");
  const auto bad = cli.Get("/fetch?level=99&xmin=0&ymin=0&xmax=1&ymax=1");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 404);
  const auto page = cli.Get("/ui/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->body, "<html>ok</html>");

  std::istringstream lines(log.str());
  std::string line;
  std::size_t fetches = 0;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    EXPECT_TRUE(j.contains("status"));
    if (j["path"] == "/fetch" && j["status"] == 200) {
      ++fetches;
      EXPECT_TRUE(j.contains("timingMs"));
      EXPECT_EQ(j["query"]["level"], "2");
    }
  }
  EXPECT_EQ(fetches, 64u);
}
