#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace ssv;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kMinimal = R"({
  "data": {"source": "points.csv", "columns": [{"name": "x"}, {"name": "y"}, {"name": "z"}]},
  "marks": {"cluster": {"mode": "circle", "aggregate": [{"function": "count"}]}},
  "layout": {"x": {"field": "x"}, "y": {"field": "y"}, "z": {"field": "z", "order": "descending"}}
})";

std::vector<int> rulesOf(const json& doc) {
  std::vector<int> rules;
  for (const auto& v : validateSpec(doc).second) rules.push_back(v.rule);
  return rules;
}

bool hasRule(const json& doc, int rule) {
  const auto r = rulesOf(doc);
  return std::find(r.begin(), r.end(), rule) != r.end();
}

int ruleFromName(const std::string& stem) { return std::stoi(stem.substr(4, 2)); }

}  // namespace

TEST(ParseSpec, MinimalSpecGetsDefaults) {
  const auto s = parseSpec(kMinimal);
  EXPECT_EQ(s.marks.cluster.mode, MarkMode::Circle);
  EXPECT_EQ(s.config["zoomFactor"], 2);
  EXPECT_EQ(s.config["viewportWidth"], 1600);
  EXPECT_EQ(s.config["viewportHeight"], 900);
  EXPECT_EQ(s.config["densityBudget"], 200);
  EXPECT_EQ(s.config["bboxW"], 80);
  EXPECT_EQ(s.config["bboxH"], 80);
  EXPECT_EQ(s.data.format, DataFormat::Csv);
}

TEST(ParseSpec, ThetaOutOfRangeIsRule19) {
  auto doc = json::parse(kMinimal);
  doc["layout"]["theta"] = 1.5;
  EXPECT_EQ(rulesOf(doc), std::vector<int>{19});
  try {
    parseSpec(doc.dump());
    FAIL();
  } catch (const SpecError& e) {
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_EQ(e.violations()[0].rule, 19);
    EXPECT_EQ(e.violations()[0].path, "/layout/theta");
  }
}

TEST(ParseSpec, MalformedJson) {
  try {
    parseSpec("{\"marks\": ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedJson);
  }
}

TEST(ParseSpec, PieGallerySpecStructure) {
  const auto s = parseSpec(slurp(ssvtest::dataDir() / "specs/valid/liquor_pie.json"));
  EXPECT_EQ(s.marks.cluster.mode, MarkMode::Pie);
  ASSERT_EQ(s.marks.cluster.aggregate.dimensions.size(), 1u);
  EXPECT_EQ(s.marks.cluster.aggregate.dimensions[0].field, "day_of_week");
  ASSERT_EQ(s.marks.cluster.aggregate.measures.size(), 1u);
  EXPECT_EQ(s.marks.cluster.aggregate.measures[0].function, AggFunction::Count);
  ASSERT_TRUE(s.marks.hover.has_value());
  EXPECT_EQ(s.marks.hover->ranklist.topk, 3);
  EXPECT_EQ(s.marks.hover->boundary, BoundaryMode::ConvexHull);
  EXPECT_EQ(s.config["bboxW"], 120);
}

TEST(Corpus, ValidSpecsParseAndRoundTrip) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(ssvtest::dataDir() / "specs/valid")) {
    SCOPED_TRACE(e.path().filename().string());
    const auto s = parseSpec(slurp(e.path()));
    EXPECT_EQ(parseSpec(serializeSpec(s).dump()), s);
    ++count;
  }
  EXPECT_GE(count, 6);
}

TEST(Corpus, InvalidSpecsNameTheirRule) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(ssvtest::dataDir() / "specs/invalid")) {
    const auto stem = e.path().stem().string();
    SCOPED_TRACE(stem);
    EXPECT_TRUE(hasRule(json::parse(slurp(e.path())), ruleFromName(stem)));
    ++count;
  }
  EXPECT_GE(count, 6);
}

TEST(Mutation, DroppingRequiredComponents) {
  const auto base = json::parse(kMinimal);
  auto d = base;
  d["marks"].erase("cluster");
  EXPECT_TRUE(hasRule(d, 2));
  d = base;
  d["layout"].erase("x");
  EXPECT_TRUE(hasRule(d, 15));
  d = base;
  d["layout"].erase("z");
  EXPECT_TRUE(hasRule(d, 15));
  d = base;
  d.erase("layout");
  EXPECT_TRUE(hasRule(d, 1));
  d = base;
  d["marks"]["cluster"]["aggregate"] = json::array();
  EXPECT_TRUE(hasRule(d, 6));
}

TEST(Mutation, OutOfEnumValues) {
  const auto base = json::parse(kMinimal);
  auto d = base;
  d["marks"]["cluster"]["mode"] = "hexbin";
  EXPECT_TRUE(hasRule(d, 5));
  d = base;
  d["marks"]["cluster"]["aggregate"] = json::array({{{"function", "median"}, {"field", "z"}}});
  EXPECT_TRUE(hasRule(d, 14));
  d = base;
  d["layout"]["z"]["order"] = "random";
  EXPECT_TRUE(hasRule(d, 22));
  d = base;
  d["marks"]["hover"] = {{"ranklist", {{"topk", 3}}}, {"boundary", "circle"}};
  EXPECT_TRUE(hasRule(d, 8));
}

TEST(Mutation, NonPositiveTopk) {
  auto d = json::parse(kMinimal);
  for (json bad : {json(0), json(-2), json(1.5), json("3")}) {
    d["marks"]["hover"] = {{"ranklist", {{"topk", bad}}}, {"boundary", "bbox"}};
    EXPECT_TRUE(hasRule(d, 12)) << bad.dump();
  }
}

TEST(Mutation, EveryValidCorpusSpecBreaksUnderMutation) {
  for (const auto& e : fs::directory_iterator(ssvtest::dataDir() / "specs/valid")) {
    SCOPED_TRACE(e.path().filename().string());
    const auto base = json::parse(slurp(e.path()));
    auto d = base;
    d["marks"]["cluster"]["mode"] = "nope";
    EXPECT_TRUE(hasRule(d, 5));
    d = base;
    d["layout"]["theta"] = -0.1;
    EXPECT_TRUE(hasRule(d, 19));
    d = base;
    d["layout"].erase("y");
    EXPECT_TRUE(hasRule(d, 15));
  }
}

TEST(CompilePlan, DelegatesToSolver) {
  const auto s = parseSpec(kMinimal);
  const auto p = compilePlan(s, {100, 0, 1, 0, 1});
  const auto solved = solveTheta(200, 1600, 900, {80, 80});
  EXPECT_EQ(p.thetaDensity, solved.theta);
  EXPECT_EQ(p.theta, solved.theta);
  EXPECT_EQ(p.budgetFeasible, solved.feasible);
}

TEST(CompilePlan, SpecThetaDominates) {
  auto doc = json::parse(kMinimal);
  doc["layout"]["theta"] = 0.5;
  doc["config"] = {{"densityBudget", 100000}};
  const auto p = compilePlan(parseSpec(doc.dump()), {100, 0, 1, 0, 1});
  EXPECT_LT(p.thetaDensity, 0.5);
  EXPECT_EQ(p.theta, 0.5);
}

TEST(CompilePlan, DensityBoundDominates) {
  auto doc = json::parse(kMinimal);
  doc["layout"]["theta"] = 0.2;
  doc["config"] = {{"densityBudget", 1450}};  // packBound(0.4) = 50 * 29
  const auto p = compilePlan(parseSpec(doc.dump()), {100, 0, 1, 0, 1});
  EXPECT_NEAR(p.thetaDensity, 0.4, 1e-3);
  EXPECT_EQ(p.theta, p.thetaDensity);
}

TEST(CompilePlan, EmptyDatasetRejected) {
  try {
    compilePlan(parseSpec(kMinimal), {0, 0, 0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(CompilePlan, DeterministicAndSerializable) {
  for (const auto& e : fs::directory_iterator(ssvtest::dataDir() / "specs/valid")) {
    SCOPED_TRACE(e.path().filename().string());
    const auto s = parseSpec(slurp(e.path()));
    const DataStats st{123456, -74.1, -73.7, 40.5, 40.9};
    const auto a = compilePlan(s, st), b = compilePlan(s, st);
    EXPECT_EQ(a, b);
    EXPECT_EQ(planFromJson(toJson(a)), a);
    EXPECT_GT(a.theta, 0.0);
    EXPECT_LE(a.theta, 1.0);
    if (a.budgetFeasible) {
      EXPECT_LE(packBound(a.theta, a.viewportW, a.viewportH, a.box), a.densityBudget);
    }
  }
}

TEST(CompilePlan, LevelCanvasScalesByZoomFactor) {
  const auto p = compilePlan(parseSpec(kMinimal), {1000000, 0, 1, 0, 1});
  for (int i = 1; i <= p.numLevels; ++i) {
    EXPECT_DOUBLE_EQ(p.levelWidth(i), p.canvasW * std::pow(2.0, i - 1));
    EXPECT_DOUBLE_EQ(p.levelHeight(i), p.canvasH * std::pow(2.0, i - 1));
  }
}

TEST(CompilePlan, DefaultLevelCountCoversDataset) {
  const auto p = compilePlan(parseSpec(kMinimal), {1000000, 0, 1, 0, 1});
  const double packed = static_cast<double>(packBound(p.theta, p.viewportW, p.viewportH, p.box));
  const double area = std::pow(p.zoomFactor, 2 * (p.numLevels - 1));
  EXPECT_LE(1e6 / packed, area);
  EXPECT_GT(1e6 / packed, area / (p.zoomFactor * p.zoomFactor));
}
