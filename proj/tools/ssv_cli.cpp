// ssv: command-line driver for ingest, indexing, serving and benchmarks.
//
// Exit codes: 0 ok, 1 user error (bad input, spec, arguments), 2 internal.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ssv/ssv.hpp"

namespace fs = std::filesystem;
using namespace ssv;

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

int exitCodeFor(ErrorCode c) {
  switch (c) {
    case ErrorCode::PartitionFailure:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::EmptyIndex:
    case ErrorCode::NotLoaded: return kInternalError;
    default: return kUserError;
  }
}

void writeJson(const fs::path& path, const json& j) { io::writeFile(path, j.dump(2) + "\n"); }

SsvSpec loadSpec(const fs::path& path) { return parseSpec(io::readFile(path)); }

// The spec's data.source is resolved against the spec file's directory.
fs::path dataSource(const SsvSpec& spec, const fs::path& specPath) {
  fs::path src = spec.data.source;
  return src.is_absolute() ? src : specPath.parent_path() / src;
}

bool isDatasetFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  char magic[sizeof kDatasetMagic] = {};
  in.read(magic, sizeof magic);
  return in && std::equal(std::begin(magic), std::end(magic), std::begin(kDatasetMagic));
}

json statsJson(const DataStats& s) {
  return {{"n", s.n}, {"x", {{"min", s.xMin}, {"max", s.xMax}}}, {"y", {{"min", s.yMin}, {"max", s.yMax}}}};
}

json rejectedJson(const IngestResult& r) {
  json rej = json::array();
  for (const auto& row : r.rejected) rej.push_back({{"line", row.line}, {"reason", row.reason}});
  return rej;
}

std::pair<Distribution, std::uint64_t> parseGen(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--gen expects <distribution>:<n>");
  double n = 0;
  if (!detail::parseDouble(s.substr(colon + 1), n) || n < 1 || n != std::floor(n))
    throw Error(ErrorCode::InvalidArgument, "--gen size must be a positive integer");
  return {parseDistribution(s.substr(0, colon)), static_cast<std::uint64_t>(n)};
}

LayoutMode parseMode(const std::string& m) {
  if (m == "seq") return LayoutMode::Sequential;
  if (m == "dist") return LayoutMode::Distributed;
  throw Error(ErrorCode::InvalidArgument, "--mode must be seq or dist");
}

json phasesJson(const IndexResult& r) {
  return {{"kdBuild", r.timings.kdBuildMs},
          {"redistribute", r.timings.redistributeMs},
          {"parallelCluster", r.timings.parallelClusterMs},
          {"splitMerge", r.timings.splitMergeMs},
          {"indexBuild", r.build.indexBuildMs}};
}

httplib::Server* g_server = nullptr;
void onSignal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalable scatterplot layout engine and tile server"};
  app.require_subcommand(1);

  // ingest
  std::string ingSpec, ingInput, ingOut, ingReport;
  auto* ingest = app.add_subcommand("ingest", "Validate a CSV/NDJSON file against the spec schema and store it");
  ingest->add_option("spec", ingSpec, "Spec JSON file")->required();
  ingest->add_option("--input", ingInput, "Input file (default: the spec's data.source)");
  ingest->add_option("--out", ingOut, "Binary dataset output")->required();
  ingest->add_option("--report", ingReport, "Stats/rejections JSON report");

  // index
  std::string idxSpec, idxData, idxOut, idxMode = "dist", idxGen, idxReport;
  int idxWorkers = defaultWorkers();
  std::uint64_t idxM = kDefaultPartitionCapacity, idxSeed = 7;
  bool idxVerify = false;
  auto* index = app.add_subcommand("index", "Compile, lay out and build the tile index");
  index->add_option("spec", idxSpec, "Spec JSON file")->required();
  index->add_option("--data", idxData, "Binary dataset or raw input (default: the spec's data.source)");
  index->add_option("--gen", idxGen, "Generate data instead, e.g. skew:100000");
  index->add_option("--seed", idxSeed, "Generator seed");
  index->add_option("--out", idxOut, "Output directory")->required();
  index->add_option("--mode", idxMode, "seq or dist")->check(CLI::IsMember({"seq", "dist"}));
  index->add_option("--workers", idxWorkers, "Concurrency width")->check(CLI::PositiveNumber);
  index->add_option("--M", idxM, "Partition capacity")->check(CLI::PositiveNumber);
  index->add_flag("--verify", idxVerify, "Run the invariant suite after the build");
  index->add_option("--report", idxReport, "Report JSON (default: <out>/report.json)");

  // serve
  std::string srvDir, srvUi, srvHost = "0.0.0.0", srvLog;
  int srvPort = 8080, srvThreads = 8;
  auto* serve = app.add_subcommand("serve", "Serve /meta and /fetch over HTTP");
  serve->add_option("--data-dir", srvDir, "Index directory")->required();
  serve->add_option("--port", srvPort, "Port");
  serve->add_option("--host", srvHost, "Bind address");
  serve->add_option("--ui", srvUi, "Static viewer bundle mounted at /ui");
  serve->add_option("--threads", srvThreads, "Request threads")->check(CLI::PositiveNumber);
  serve->add_option("--log", srvLog, "Request log file (default: stdout)");

  // bench
  std::vector<std::uint64_t> bSizes;
  std::string bJson = "bench.json", bCsv = "bench.csv", bMode = "dist", bWork, bSpec;
  int bWorkers = defaultWorkers(), bRepeats = 5, bTrace = 10;
  std::uint64_t bM = kDefaultPartitionCapacity, bSeed = 7;
  auto* bench = app.add_subcommand("bench", "Index skewed synthetic data at several sizes and replay a pan/zoom trace");
  bench->add_option("--sizes", bSizes, "Dataset sizes")->delimiter(',');
  bench->add_option("--json", bJson, "JSON report path");
  bench->add_option("--csv", bCsv, "CSV report path");
  bench->add_option("--mode", bMode, "seq or dist")->check(CLI::IsMember({"seq", "dist"}));
  bench->add_option("--workers", bWorkers, "Concurrency width")->check(CLI::PositiveNumber);
  bench->add_option("--M", bM, "Partition capacity")->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bRepeats, "Index builds per size (fastest reported)")->check(CLI::PositiveNumber);
  bench->add_option("--trace-repeats", bTrace, "Trace replays per size")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bSeed, "Generator seed");
  bench->add_option("--work-dir", bWork, "Where builds are written");
  bench->add_option("--spec", bSpec, "Spec to use instead of the built-in x/y/z spec");

  // validate-spec
  std::string vsSpec;
  auto* validate = app.add_subcommand("validate-spec", "Check a spec against the grammar rules");
  validate->add_option("spec", vsSpec, "Spec JSON file")->required();

  // gen
  std::string genDist = "skew", genOut;
  std::uint64_t genN = 10000, genSeed = 7;
  auto* gen = app.add_subcommand("gen", "Write a synthetic x/y/z CSV");
  gen->add_option("--dist", genDist, "uniform, skew, coincident or collinear");
  gen->add_option("--n", genN, "Number of points")->check(CLI::PositiveNumber);
  gen->add_option("--seed", genSeed, "Seed");
  gen->add_option("--out", genOut, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUserError;
  }

  try {
    if (*ingest) {
      const auto spec = loadSpec(ingSpec);
      const fs::path input = ingInput.empty() ? dataSource(spec, ingSpec) : fs::path(ingInput);
      const auto result = ingestFile(input, spec.data);
      writeDataset(ingOut, result.data);
      const json report = {{"stats", statsJson(computeStats(result.data, spec.layout.x.field, spec.layout.y.field))},
                           {"rejected", rejectedJson(result)}};
      if (!ingReport.empty()) writeJson(ingReport, report);
      std::cout << report.dump(2) << '\n';
      return kOk;
    }

    if (*index) {
      const auto spec = loadSpec(idxSpec);
      Dataset data;
      if (!idxGen.empty()) {
        const auto [dist, n] = parseGen(idxGen);
        data = generateDataset(dist, n, idxSeed);
      } else {
        const fs::path input = idxData.empty() ? dataSource(spec, idxSpec) : fs::path(idxData);
        if (isDatasetFile(input)) {
          data = readDataset(input);
        } else {
          auto ing = ingestFile(input, spec.data);
          for (const auto& r : ing.rejected) std::cerr << "rejected line " << r.line << ": " << r.reason << '\n';
          data = std::move(ing.data);
        }
      }
      IndexOptions opt{parseMode(idxMode), idxWorkers, idxM, idxVerify};
      const auto r = runIndex(spec, data, idxOut, opt);
      json report = {{"n", r.input.size()},
                     {"droppedOutsideExtent", r.input.droppedOutsideExtent},
                     {"mode", idxMode},
                     {"workers", idxWorkers},
                     {"M", idxM},
                     {"numLevels", r.plan.numLevels},
                     {"theta", r.plan.theta},
                     {"budgetFeasible", r.plan.budgetFeasible},
                     {"partitions", r.tree.partitionCount()},
                     {"tables", r.build.tableCount},
                     {"clustersPerLevel", json::array()},
                     {"phasesMs", phasesJson(r)},
                     {"layoutMs", r.layoutMs},
                     {"totalMs", r.totalMs},
                     {"splitMerges", r.splitMerges},
                     {"residualMerges", r.residualMerges}};
      for (const auto& lv : r.layout.levels) report["clustersPerLevel"].push_back(lv.clusters.size());
      if (r.verify) report["verify"] = r.verify->toJson();
      writeJson(idxReport.empty() ? fs::path(idxOut) / "report.json" : fs::path(idxReport), report);
      std::cout << report.dump(2) << '\n';
      if (r.verify && !r.verify->ok()) {
        std::cerr << "invariant violations found\n";
        return kUserError;
      }
      return kOk;
    }

    if (*serve) {
      const auto store = Store::open(srvDir);
      std::ofstream logFile;
      if (!srvLog.empty()) {
        logFile.open(srvLog, std::ios::app);
        if (!logFile) throw Error(ErrorCode::IoError, "cannot open log " + srvLog);
      }
      httplib::Server srv;
      ServerOptions opt{srvHost, srvPort, srvUi, srvLog.empty() ? &std::cout : &logFile, srvThreads};
      configureServer(srv, &store, opt);
      g_server = &srv;
      std::signal(SIGINT, onSignal);
      std::signal(SIGTERM, onSignal);
      std::cerr << "serving " << srvDir << " on " << srvHost << ':' << srvPort << '\n';
      if (!srv.listen(srvHost, srvPort)) throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(srvPort));
      return kOk;
    }

    if (*bench) {
      BenchOptions opt;
      opt.sizes = bSizes;
      opt.seed = bSeed;
      opt.index = {parseMode(bMode), bWorkers, bM, false};
      opt.repeats = bRepeats;
      opt.traceRepeats = bTrace;
      if (!bWork.empty()) opt.workDir = bWork;
      if (!bSpec.empty()) opt.spec = loadSpec(bSpec);
      opt.spec = sweepSpec(opt);
      BenchReport rep;
      for (auto n : opt.sizes) {
        rep.rows.push_back(benchOne(n, opt));
        const auto& row = rep.rows.back();
        std::cerr << "n=" << row.n << " index=" << row.indexMs << "ms p95=" << row.fetchP95Ms << "ms\n";
      }
      writeJson(bJson, rep.toJson());
      std::ostringstream csv;
      rep.writeCsv(csv);
      io::writeFile(bCsv, csv.str());
      std::cout << rep.toJson().dump(2) << '\n';
      return kOk;
    }

    if (*validate) {
      const auto text = io::readFile(vsSpec);
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error& e) {
        std::cout << json{{"valid", false}, {"error", "MalformedJson"}, {"message", e.what()}}.dump(2) << '\n';
        return kUserError;
      }
      const auto [spec, violations] = validateSpec(j);
      json out = {{"valid", violations.empty()}, {"violations", json::array()}};
      for (const auto& v : violations)
        out["violations"].push_back({{"rule", v.rule}, {"path", v.path}, {"message", v.message}});
      if (violations.empty()) out["canonical"] = serializeSpec(spec);
      std::cout << out.dump(2) << '\n';
      return violations.empty() ? kOk : kUserError;
    }

    if (*gen) {
      const auto data = generateDataset(parseDistribution(genDist), genN, genSeed);
      std::ofstream out(genOut);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + genOut);
      writeCsv(out, data);
      return kOk;
    }
  } catch (const SpecError& e) {
    std::cerr << e.what() << '\n';
    for (const auto& v : e.violations()) std::cerr << "  rule " << v.rule << " at " << v.path << ": " << v.message << '\n';
    return kUserError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kOk;
}
