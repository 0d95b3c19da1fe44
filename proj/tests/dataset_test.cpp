#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace ssv;

namespace {

std::vector<ColumnSpec> schema() {
  return {{"x", ColumnType::Number}, {"y", ColumnType::Number}, {"z", ColumnType::Number}, {"name", ColumnType::String}};
}

}  // namespace

TEST(Csv, RejectsBadRowsAndKeepsTheRest) {
  std::istringstream in(
      "name,x,y,z,ignored\n"
      "a,1,2,3,q\n"
      "b,oops,2,3,q\n"
      "\"c, quoted\",4,5,6,q\n"
      "d,1,2\n"
      "e,7,8,nan,q\n"
      "f,9,10,11,q\n");
  const auto r = readCsv(in, schema());
  EXPECT_EQ(r.data.size(), 3u);
  ASSERT_EQ(r.rejected.size(), 3u);
  EXPECT_EQ(r.rejected[0].line, 3u);
  EXPECT_EQ(r.rejected[1].line, 5u);
  EXPECT_EQ(r.rejected[2].line, 6u);
  EXPECT_EQ(r.data.texts[3][1], "c, quoted");
  EXPECT_EQ(r.data.numbers[0], (std::vector<double>{1, 4, 9}));
  EXPECT_EQ(r.data.ids, (std::vector<ObjectId>{0, 1, 2}));
}

TEST(Csv, MissingHeaderColumnIsSchemaError) {
  std::istringstream in("x,y\n1,2\n");
  try {
    readCsv(in, schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
  }
}

TEST(Csv, WriteThenReadRoundTrips) {
  auto d = generateDataset(Distribution::Uniform, 300, 4);
  std::stringstream ss;
  writeCsv(ss, d);
  const auto r = readCsv(ss, d.columns);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_EQ(r.data, d);
}

TEST(Ndjson, ReadsObjectsAndRejectsGarbage) {
  std::istringstream in(
      R"({"x": 1, "y": 2, "z": 3, "name": "a"})" "\n"
      "not json\n"
      R"({"x": "4.5", "y": 2, "z": 3, "name": 7})" "\n"
      R"({"x": 1, "y": 2, "name": "no z"})" "\n");
  const auto r = readNdjson(in, schema());
  EXPECT_EQ(r.data.size(), 2u);
  ASSERT_EQ(r.rejected.size(), 2u);
  EXPECT_EQ(r.rejected[0].line, 2u);
  EXPECT_EQ(r.rejected[1].line, 4u);
  EXPECT_EQ(r.data.numbers[0][1], 4.5);
  EXPECT_EQ(r.data.texts[3][1], "7");
}

TEST(Stats, MinMaxOverLayoutColumns) {
  Dataset d({{"x", ColumnType::Number}, {"y", ColumnType::Number}});
  d.ids = {0, 1, 2};
  d.numbers[0] = {3, -1, 2};
  d.numbers[1] = {10, 20, 15};
  const auto s = computeStats(d, "x", "y");
  EXPECT_EQ(s.n, 3u);
  EXPECT_EQ(s.xMin, -1);
  EXPECT_EQ(s.xMax, 3);
  EXPECT_EQ(s.yMin, 10);
  EXPECT_EQ(s.yMax, 20);
}

TEST(Binary, RoundTripWithStrings) {
  std::istringstream in("x,y,z,name\n1,2,3,alpha\n4,5,6,\"be,ta\"\n");
  const auto d = readCsv(in, schema()).data;
  const auto dir = ssvtest::scratchDir("dataset-bin");
  writeDataset(dir / "d.bin", d);
  EXPECT_EQ(readDataset(dir / "d.bin"), d);
}

TEST(Binary, BadMagicIsRejected) {
  const auto dir = ssvtest::scratchDir("dataset-magic");
  std::ofstream(dir / "bad.bin") << "NOTADATASETFILE";
  EXPECT_THROW(readDataset(dir / "bad.bin"), Error);
}

TEST(Generator, SkewPutsEightyPercentInTwentyPercentRegion) {
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    const std::uint64_t n = 20000;
    const auto d = generateDataset(Distribution::Skew, n, seed);
    const auto r = skewRegion(seed);
    EXPECT_NEAR(r.width * r.height, 0.2 * kGeneratorPlane * kGeneratorPlane, 1e-3);
    std::uint64_t inside = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (d.numbers[0][i] >= r.x0 && d.numbers[0][i] <= r.x0 + r.width && d.numbers[1][i] >= r.y0 &&
          d.numbers[1][i] <= r.y0 + r.height)
        ++inside;
    // 16000 placed inside by construction, plus about 20% of the 4000 others.
    EXPECT_GE(inside, 16000u);
    EXPECT_NEAR(static_cast<double>(inside), 16000 + 0.2 * 4000, 200);
  }
}

TEST(Generator, DeterministicPerSeed) {
  EXPECT_EQ(generateDataset(Distribution::Uniform, 1000, 3), generateDataset(Distribution::Uniform, 1000, 3));
  EXPECT_NE(generateDataset(Distribution::Uniform, 1000, 3), generateDataset(Distribution::Uniform, 1000, 4));
}

TEST(Generator, DegenerateShapes) {
  const auto c = generateDataset(Distribution::Coincident, 50, 1);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(c.numbers[0][i], kGeneratorPlane / 2);
    EXPECT_EQ(c.numbers[1][i], kGeneratorPlane / 2);
  }
  const auto l = generateDataset(Distribution::Collinear, 50, 1);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(l.numbers[1][i], kGeneratorPlane / 2);
  EXPECT_THROW(parseDistribution("gaussian"), Error);
}

TEST(LayoutInput, ExplicitExtentDropsOutsideObjects) {
  auto d = generateDataset(Distribution::Uniform, 1000, 2);
  auto spec = ssvtest::xyzSpec();
  spec.layout.x.extent = Extent{0, 5000};
  const auto plan = compilePlan(spec, computeStats(d, "x", "y"));
  const auto in = prepareLayoutInput(d, plan);
  std::uint64_t expected = 0;
  for (double x : d.numbers[0])
    if (x > 5000) ++expected;
  EXPECT_EQ(in.droppedOutsideExtent, expected);
  EXPECT_EQ(in.size() + expected, 1000u);
}

TEST(LayoutInput, ProjectionFlipsY) {
  Dataset d({{"x", ColumnType::Number}, {"y", ColumnType::Number}, {"z", ColumnType::Number}});
  d.ids = {0, 1};
  d.numbers = {{0, 10}, {0, 10}, {1, 2}};
  const auto plan = compilePlan(ssvtest::xyzSpec(), computeStats(d, "x", "y"));
  const auto in = prepareLayoutInput(d, plan);
  EXPECT_EQ(in.topX[0], 0);
  EXPECT_EQ(in.topY[0], plan.canvasH);
  EXPECT_EQ(in.topX[1], plan.canvasW);
  EXPECT_EQ(in.topY[1], 0);
}
