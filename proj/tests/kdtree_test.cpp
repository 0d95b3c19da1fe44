#include <gtest/gtest.h>

#include "support.hpp"

using namespace ssv;

namespace {

std::vector<PointObject> objectsOf(const Dataset& d) {
  std::vector<PointObject> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = {d.ids[i], d.numbers[0][i], d.numbers[1][i], d.numbers[2][i], {}};
  return out;
}

/// Every object lands in exactly one leaf, leaf counts match, leaves respect
/// capacity and lie inside their extents, siblings differ by at most one and
/// axes alternate by depth.
void expectValidPartition(const KdPartitionTree& t, const std::vector<PointObject>& objs, std::uint64_t m) {
  std::vector<std::uint64_t> counts(t.partitionCount(), 0);
  for (const auto& o : objs) {
    const int p = t.partitionOf(o.rawX, o.rawY, o.id);
    ASSERT_GE(p, 0);
    ++counts[static_cast<std::size_t>(p)];
    EXPECT_TRUE(t.leaf(p).extent.contains(o.rawX, o.rawY));
  }
  for (std::size_t p = 0; p < counts.size(); ++p) {
    EXPECT_EQ(counts[p], t.leaf(static_cast<int>(p)).objectCount);
    EXPECT_LE(counts[p], m);
  }
  for (const auto& n : t.nodes) {
    if (n.isLeaf()) continue;
    EXPECT_EQ(n.axis, n.depth % 2 == 0 ? Axis::X : Axis::Y);
    const auto a = t.nodes[n.left].objectCount, b = t.nodes[n.right].objectCount;
    EXPECT_EQ(a + b, n.objectCount);
    EXPECT_LE(a > b ? a - b : b - a, 1u);
  }
}

}  // namespace

TEST(KdTree, FitsInOneLeaf) {
  const auto objs = objectsOf(generateDataset(Distribution::Uniform, 100, 1));
  const auto t = buildKdTree(objs, 100);
  EXPECT_EQ(t.partitionCount(), 1u);
  EXPECT_TRUE(t.root().isLeaf());
}

TEST(KdTree, EightCollinearPoints) {
  std::vector<PointObject> objs;
  for (ObjectId i = 0; i < 8; ++i) objs.push_back({i, static_cast<double>(i), 5.0, 0.0, {}});
  const auto t = buildKdTree(objs, 2);
  ASSERT_EQ(t.partitionCount(), 4u);
  expectValidPartition(t, objs, 2);
  // Root splits on x between 3 and 4; the y splits see identical
  // coordinates and fall back to ids.
  EXPECT_EQ(t.root().axis, Axis::X);
  EXPECT_EQ(t.root().splitValue, 3.0);
  for (int side : {t.root().left, t.root().right}) {
    const auto& n = t.nodes[side];
    ASSERT_FALSE(n.isLeaf());
    EXPECT_EQ(n.axis, Axis::Y);
    EXPECT_EQ(n.splitValue, 5.0);
    EXPECT_TRUE(t.nodes[n.left].isLeaf());
    EXPECT_TRUE(t.nodes[n.right].isLeaf());
  }
  EXPECT_EQ(t.maxDepth(), 2);
  for (int p = 0; p < 4; ++p) EXPECT_EQ(t.leaf(p).objectCount, 2u);
  // Leaves in order hold ids {0,1}, {2,3}, {4,5}, {6,7}.
  for (ObjectId i = 0; i < 8; ++i) EXPECT_EQ(t.partitionOf(objs[i].rawX, 5.0, i), static_cast<int>(i / 2));
}

TEST(KdTree, SkewedHundredThousand) {
  const auto objs = objectsOf(generateDataset(Distribution::Skew, 100000, 9));
  const auto t = buildKdTree(objs, 1000);
  EXPECT_GE(t.partitionCount(), 100u);
  expectValidPartition(t, objs, 1000);
}

TEST(KdTree, CoincidentPointsStillSplit) {
  const auto objs = objectsOf(generateDataset(Distribution::Coincident, 1000, 9));
  const auto t = buildKdTree(objs, 64);
  expectValidPartition(t, objs, 64);
}

TEST(KdTree, PointOnSplitGoesLeft) {
  std::vector<PointObject> objs{{0, 1, 0, 0, {}}, {1, 2, 0, 0, {}}, {2, 3, 0, 0, {}}, {3, 4, 0, 0, {}}};
  const auto t = buildKdTree(objs, 2);
  EXPECT_EQ(t.root().splitValue, 2.0);
  EXPECT_EQ(t.partitionOf(2.0, 0, 0), t.partitionOf(1.0, 0, 0));
}

TEST(KdTree, JsonRoundTrip) {
  const auto objs = objectsOf(generateDataset(Distribution::Skew, 5000, 2));
  const auto t = buildKdTree(objs, 300);
  EXPECT_EQ(kdTreeFromJson(json::parse(toJson(t).dump())), t);
}

TEST(KdTree, SplitsBottomUpAreDeepestFirst) {
  const auto objs = objectsOf(generateDataset(Distribution::Uniform, 4000, 2));
  const auto t = buildKdTree(objs, 300);
  int prev = std::numeric_limits<int>::max();
  std::size_t internal = 0;
  for (const auto& group : t.splitsBottomUp()) {
    const int d = t.nodes[group.front()].depth;
    EXPECT_LT(d, prev);
    for (int i : group) EXPECT_EQ(t.nodes[i].depth, d);
    internal += group.size();
    prev = d;
  }
  EXPECT_EQ(internal + 1, t.partitionCount());
}

TEST(KdTree, ZeroCapacityRejected) { EXPECT_THROW(buildKdTree(std::vector<PointObject>{}, 0), Error); }
