#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ssv/error.hpp"

namespace ssv {

struct Point {
  double x = 0;
  double y = 0;

  bool operator==(const Point&) const = default;
};

/// Closed axis-aligned rectangle.
struct Rect {
  double xMin = 0;
  double yMin = 0;
  double xMax = 0;
  double yMax = 0;

  bool operator==(const Rect&) const = default;

  bool intersects(const Rect& o) const noexcept {
    return xMin <= o.xMax && o.xMin <= xMax && yMin <= o.yMax && o.yMin <= yMax;
  }
  bool contains(double x, double y) const noexcept {
    return x >= xMin && x <= xMax && y >= yMin && y <= yMax;
  }
  void expand(const Rect& o) noexcept {
    xMin = std::min(xMin, o.xMin);
    yMin = std::min(yMin, o.yMin);
    xMax = std::max(xMax, o.xMax);
    yMax = std::max(yMax, o.yMax);
  }
  static Rect centered(double cx, double cy, double w, double h) noexcept {
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  }
};

/// Mark bounding-box size in pixels. Every cluster mark shares it.
struct MarkBox {
  double width = 0;
  double height = 0;
};

/// Normalized chessboard distance between two mark centroids.
inline double ncd(Point p, Point q, MarkBox box) noexcept {
  return std::max(std::abs(p.x - q.x) / box.width, std::abs(p.y - q.y) / box.height);
}

inline double ncd(double px, double py, double qx, double qy, MarkBox box) noexcept {
  return std::max(std::abs(px - qx) / box.width, std::abs(py - qy) / box.height);
}

/// Maximum number of marks whose theta-scaled boxes fit in one viewport
/// without overlapping.
inline std::uint64_t packBound(double theta, double viewportW, double viewportH, MarkBox box) {
  const double cols = std::ceil(viewportW / (box.width * theta));
  const double rows = std::ceil(viewportH / (box.height * theta));
  return static_cast<std::uint64_t>(cols) * static_cast<std::uint64_t>(rows);
}

struct ThetaSolution {
  double theta = 1.0;
  /// False when even theta = 1 packs more than the budget.
  bool feasible = true;
};

inline constexpr double kMinTheta = 1e-6;
inline constexpr double kThetaTolerance = 1e-6;

/// Smallest theta in [kMinTheta, 1] with packBound(theta) <= budget. The
/// returned value is always on the feasible side of the search bracket.
inline ThetaSolution solveTheta(std::uint64_t budget, double viewportW, double viewportH, MarkBox box) {
  if (budget < 1) throw Error(ErrorCode::InvalidBudget, "density budget must be >= 1");
  if (!(viewportW > 0 && viewportH > 0 && box.width > 0 && box.height > 0))
    throw Error(ErrorCode::InvalidArgument, "viewport and mark dimensions must be positive");

  if (packBound(1.0, viewportW, viewportH, box) > budget) return {1.0, false};
  if (packBound(kMinTheta, viewportW, viewportH, box) <= budget) return {kMinTheta, true};

  double lo = kMinTheta;  // infeasible
  double hi = 1.0;        // feasible
  while (hi - lo > kThetaTolerance) {
    const double mid = lo + (hi - lo) / 2;
    if (packBound(mid, viewportW, viewportH, box) <= budget)
      hi = mid;
    else
      lo = mid;
  }
  return {hi, true};
}

namespace detail {
inline double cross(Point o, Point a, Point b) noexcept {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}
}  // namespace detail

/// Convex hull (counter-clockwise, no collinear vertices) by monotone chain.
/// Degenerate inputs return the distinct extreme points (1 or 2 vertices).
inline std::vector<Point> convexHull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;

  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && detail::cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace ssv
