#include <gtest/gtest.h>

#include <iostream>
#include <random>

#include "support.hpp"

using namespace ssv;
using namespace ssvtest;

namespace {

/// Hand-placed clusters in level pixels with theta = 1 and a 10x10 box.
struct Fixture {
  LayoutPlan plan;
  LayoutInput input;

  explicit Fixture(const std::vector<double>& importance) {
    plan.numLevels = 1;
    plan.theta = 1;
    plan.box = {10, 10};
    plan.canvasW = plan.canvasH = plan.viewportW = plan.viewportH = 1000;
    plan.xField = "x";
    plan.yField = "y";
    plan.zField = "z";
    plan.measures = {{std::nullopt, AggFunction::Count}};
    std::vector<PointObject> objs;
    for (std::size_t i = 0; i < importance.size(); ++i) objs.push_back({i, 0, 0, importance[i], {}});
    input = prepareLayoutInput(std::move(objs), {}, plan);
  }

  ClusterRecord at(std::uint32_t i, double x, double y) const {
    ClusterRecord c = ClusterOps(input, plan).singleton(i);
    c.level = 1;
    c.cx = x;
    c.cy = y;
    return c;
  }
};

enum : std::uint32_t { A, B, C, D, E };

std::set<ObjectId> idsOf(const std::vector<ClusterRecord>& cs) {
  std::set<ObjectId> out;
  for (const auto& c : cs) out.insert(c.repId);
  return out;
}

void expectGlobalInvariants(const Build& b) {
  for (const auto& lv : b.layout.levels) {
    SCOPED_TRACE("level " + std::to_string(lv.level));
    EXPECT_GE(minPairwiseNcd(lv.clusters, b.plan.box.width, b.plan.box.height), b.plan.theta - 1e-9);
    if (b.plan.budgetFeasible) {
      EXPECT_LE(maxWindowCount(lv.clusters, b.plan.viewportW, b.plan.viewportH), b.plan.densityBudget);
    }
  }
  EXPECT_TRUE(repsNested(b.layout));
  const auto cons = checkConservationOracle(b);
  EXPECT_EQ(cons.memberSumMismatches, 0u);
  EXPECT_EQ(cons.aggregateMismatches, 0u);
  EXPECT_TRUE(verifyLayout(b.layout, b.input, b.plan).ok());
}

}  // namespace

// Five clusters around a horizontal split at y = 0, importance A > B > ... > E.
TEST(MergeAlongSplit, FigureSixFixture) {
  Fixture f({5, 4, 3, 2, 1});
  ClusterOps ops(f.input, f.plan);
  std::vector<ClusterRecord> cs{f.at(A, 30, 3), f.at(B, 0, -2), f.at(C, 60, -3), f.at(D, 22, -4), f.at(E, 66, 4)};

  SplitMergeTask task{Axis::Y, 0, 10, {}};
  for (auto& c : cs) task.candidates.push_back(&c);
  const auto events = mergeAlongSplit(task, ops);

  std::vector<ObjectId> order;
  for (auto* c : task.candidates) order.push_back(c->repId);
  EXPECT_EQ(order, (std::vector<ObjectId>{B, D, A, C, E}));
  EXPECT_EQ(events, (std::vector<MergeEvent>{{D, A, false}, {E, C, false}}));
  EXPECT_EQ(cs[A].memberCount, 2u);
  EXPECT_EQ(cs[C].memberCount, 2u);
  EXPECT_EQ(cs[D].memberCount, 0u);
  EXPECT_EQ(cs[E].memberCount, 0u);

  std::vector<ClusterRecord> fresh{f.at(A, 30, 3), f.at(B, 0, -2), f.at(C, 60, -3), f.at(D, 22, -4), f.at(E, 66, 4)};
  const auto r = mergeAlongSplit(fresh, Axis::Y, 0, ops);
  EXPECT_EQ(idsOf(r.clusters), (std::set<ObjectId>{A, B, C}));
  EXPECT_EQ(r.merges.size(), 2u);
  // Survivors keep their own centroids.
  for (const auto& c : r.clusters)
    if (c.repId == A) {
      EXPECT_EQ(std::pair(c.cx, c.cy), std::pair(30.0, 3.0));
    }
}

TEST(MergeAlongSplit, EmptyBandIsUnchanged) {
  Fixture f({3, 2, 1});
  ClusterOps ops(f.input, f.plan);
  std::vector<ClusterRecord> cs{f.at(A, 0, 50), f.at(B, 5, -50), f.at(C, 9, 11)};
  const auto r = mergeAlongSplit(cs, Axis::Y, 0, ops);
  EXPECT_TRUE(r.merges.empty());
  EXPECT_EQ(r.clusters, cs);
}

TEST(MergeAlongSplit, FarApartPairIsKept) {
  Fixture f({2, 1});
  ClusterOps ops(f.input, f.plan);
  const auto r = mergeAlongSplit({f.at(A, 0, 2), f.at(B, 10, -2)}, Axis::Y, 0, ops);
  EXPECT_TRUE(r.merges.empty());
  EXPECT_EQ(r.clusters.size(), 2u);
}

TEST(MergeAlongSplit, VerticalSplitSortsByY) {
  Fixture f({1, 2, 3});
  ClusterOps ops(f.input, f.plan);
  std::vector<ClusterRecord> cs{f.at(A, 2, 30), f.at(B, -3, 0), f.at(C, 1, 15)};
  SplitMergeTask task{Axis::X, 0, 10, {}};
  for (auto& c : cs) task.candidates.push_back(&c);
  mergeAlongSplit(task, ops);
  EXPECT_EQ(task.candidates[0]->repId, B);
  EXPECT_EQ(task.candidates[1]->repId, C);
  EXPECT_EQ(task.candidates[2]->repId, A);
}

TEST(MergeAlongSplit, ImportanceTieGoesToSmallerId) {
  Fixture f({1, 1});
  ClusterOps ops(f.input, f.plan);
  const auto r = mergeAlongSplit({f.at(B, 0, -1), f.at(A, 1, 1)}, Axis::Y, 0, ops);
  ASSERT_EQ(r.merges.size(), 1u);
  EXPECT_EQ(r.merges[0].survivor, A);
}

// S sits just above the split, X at the lower band edge and T on the split
// line (lower side). S-T are close, but X lies between them in x at exactly
// theta from each, so the sorted pass never compares S with T.
TEST(MergeAlongSplit, ResidualSweepCatchesSkippedPair) {
  Fixture f({3, 2, 1});
  ClusterOps ops(f.input, f.plan);
  const auto r = mergeAlongSplit({f.at(A, 0, 1), f.at(B, 1, -10), f.at(C, 2, 0)}, Axis::Y, 0, ops);
  ASSERT_EQ(r.merges.size(), 1u);
  EXPECT_EQ(r.merges[0], (MergeEvent{C, A, true}));
  EXPECT_EQ(idsOf(r.clusters), (std::set<ObjectId>{A, B}));
  EXPECT_GE(minPairwiseNcd(r.clusters, 10, 10), 1.0);
}

TEST(MergeAlongSplit, BandHoldsEveryCloseCrossPair) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-60, 60);
  const MarkBox box{10, 10};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClusterRecord> cs(60);
    for (auto& c : cs) {
      c.cx = u(rng);
      c.cy = u(rng);
    }
    const double theta = 0.3 + 0.7 * (trial % 10) / 10.0;
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = i + 1; j < cs.size(); ++j) {
        const bool opposite = (cs[i].cy <= 0) != (cs[j].cy <= 0);
        if (!opposite || ncd(cs[i].cx, cs[i].cy, cs[j].cx, cs[j].cy, box) >= theta) continue;
        EXPECT_TRUE(inBand(cs[i], Axis::Y, 0, theta * box.height));
        EXPECT_TRUE(inBand(cs[j], Axis::Y, 0, theta * box.height));
      }
  }
}

TEST(Distributed, DegeneratesToSequential) {
  const auto d = generateDataset(Distribution::Skew, 5000, 4);
  const auto seq = seqBuild(d, xyzSpec());
  const auto dist = distBuild(d, xyzSpec(), 5000, 1);
  EXPECT_EQ(dist.tree.partitionCount(), 1u);
  EXPECT_EQ(dist.layout, seq.layout);
  EXPECT_EQ(dist.dist.splitMerges, 0u);
}

TEST(Distributed, SkewedTenThousandHoldsGlobalInvariants) {
  const auto b = distBuild(generateDataset(Distribution::Skew, 10000, 12), xyzSpec(), 500, 4);
  EXPECT_GE(b.tree.partitionCount(), 20u);
  EXPECT_GT(b.dist.splitMerges, 0u);
  expectGlobalInvariants(b);
  std::cout << "[ info ] split merges " << b.dist.splitMerges << ", residual " << b.dist.residualMerges
            << ", widest band " << b.dist.maxBandSize << "\n";
}

TEST(Distributed, DegenerateShapesAcrossPartitions) {
  for (auto dist : {Distribution::Coincident, Distribution::Collinear, Distribution::Uniform}) {
    const auto b = distBuild(generateDataset(dist, 3000, 6), xyzSpec(), 200, 3);
    expectGlobalInvariants(b);
  }
}

TEST(Distributed, IndependentOfWorkerCount) {
  const auto d = generateDataset(Distribution::Skew, 6000, 8);
  const auto one = distBuild(d, xyzSpec(), 300, 1);
  for (int w : {2, 3, 8}) {
    const auto many = distBuild(d, xyzSpec(), 300, w);
    EXPECT_EQ(many.layout, one.layout) << w << " workers";
    EXPECT_EQ(many.dist.splitMerges, one.dist.splitMerges);
  }
}

TEST(Distributed, PartitionOutputsArePure) {
  const auto b = prepare(generateDataset(Distribution::Uniform, 2000, 1), xyzSpec());
  ClusterOps ops(b.input, b.plan);
  std::vector<ClusterRecord> part;
  for (std::uint32_t i = 0; i < 500; ++i) part.push_back(ops.singleton(i));
  auto copy = part;
  std::reverse(copy.begin(), copy.end());
  const auto x = clusterStep(ops, part, b.plan.numLevels);
  const auto y = clusterStep(ops, copy, b.plan.numLevels);
  EXPECT_EQ(x, y);
}

TEST(Distributed, WorkerFailureCarriesPartitionId) {
  try {
    parallelForPartitions(8, 4, [](std::size_t i) { return static_cast<int>(i) + 100; },
                          [](std::size_t i) {
                            if (i == 5) throw std::runtime_error("boom");
                          });
    FAIL();
  } catch (const PartitionError& e) {
    EXPECT_EQ(e.partitionId(), 105);
    EXPECT_EQ(e.code(), ErrorCode::PartitionFailure);
  }
}
