#pragma once

// Offline indexing: compile the plan, lay out every level, persist tables.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <thread>

#include "ssv/dataset.hpp"
#include "ssv/distributed.hpp"
#include "ssv/grammar.hpp"
#include "ssv/plan.hpp"
#include "ssv/store.hpp"
#include "ssv/verify.hpp"

namespace ssv {

enum class LayoutMode { Sequential, Distributed };

inline constexpr std::uint64_t kDefaultPartitionCapacity = 2'000'000;

inline int defaultWorkers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct IndexOptions {
  LayoutMode mode = LayoutMode::Distributed;
  int workers = defaultWorkers();
  std::uint64_t capacity = kDefaultPartitionCapacity;
  bool verify = false;
};

struct IndexResult {
  LayoutPlan plan;
  LayoutInput input;
  LayoutResult layout;
  KdPartitionTree tree;
  PhaseTimings timings;
  BuildSummary build;
  double layoutMs = 0;
  double totalMs = 0;
  std::uint64_t splitMerges = 0;
  std::uint64_t residualMerges = 0;
  std::optional<VerifyReport> verify;
};

/// Lays out `input` under `plan`. In sequential mode the KD-tree is still
/// built, since the store files rows by partition.
inline void runLayout(IndexResult& r, const IndexOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opt.mode == LayoutMode::Distributed) {
    auto d = distributedCluster(r.input, r.plan, opt.capacity, opt.workers);
    r.layout = std::move(d.layout);
    r.tree = std::move(d.tree);
    r.timings = d.timings;
    r.splitMerges = d.splitMerges;
    r.residualMerges = d.residualMerges;
  } else {
    auto t = std::chrono::steady_clock::now();
    r.tree = buildKdTree(r.input.objects, opt.capacity);
    r.timings.kdBuildMs = detail::msSince(t);
    t = std::chrono::steady_clock::now();
    r.layout = clusterLevels(r.input, r.plan);
    r.timings.parallelClusterMs = detail::msSince(t);
  }
  r.layoutMs = detail::msSince(t0);
}

inline IndexResult runIndex(const SsvSpec& spec, const Dataset& data, const std::filesystem::path& outDir,
                            const IndexOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  IndexResult r;
  r.plan = compilePlan(spec, computeStats(data, spec.layout.x.field, spec.layout.y.field));
  r.input = prepareLayoutInput(data, r.plan);
  if (r.input.size() == 0) throw Error(ErrorCode::EmptyDataset, "no objects inside the declared extent");
  runLayout(r, opt);
  r.build = buildIndexes(r.layout, r.tree, r.input, r.plan, outDir, opt.workers);
  r.totalMs = detail::msSince(t0);
  if (opt.verify) r.verify = verifyLayout(r.layout, r.input, r.plan);
  return r;
}

}  // namespace ssv
