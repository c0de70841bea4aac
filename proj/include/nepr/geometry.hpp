#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace nepr {

inline constexpr double kPi = 3.14159265358979323846;

/// A point on the substrate, in micrometres.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double manhattan(Point a, Point b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }
inline double euclidean(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned rectangle with lower-left corner (x, y).
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  Point center() const { return {x + w / 2.0, y + h / 2.0}; }
  double diagonal() const { return std::hypot(w, h); }

  // Half-open on the upper/right sides so that a tiling assigns every point
  // to exactly one rectangle.
  bool contains(Point p) const { return p.x >= x && p.x < x + w && p.y >= y && p.y < y + h; }
  bool contains_closed(Point p, double eps = 1e-9) const {
    return p.x >= x - eps && p.x <= x + w + eps && p.y >= y - eps && p.y <= y + h + eps;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Rounds to the file-format resolution (1e-3 um by default).
/// Dividing by the integer 1/step yields the double nearest to the decimal
/// value, so quantized numbers survive a text round trip exactly.
inline double quantize(double v, double step = 1e-3) {
  const double inv = std::round(1.0 / step);
  double q = std::round(v * inv) / inv;
  return q == 0.0 ? 0.0 : q;  // no negative zero in text output
}

enum class Metric : std::uint8_t { manhattan, euclidean };

inline double distance(Point a, Point b, Metric m) {
  return m == Metric::manhattan ? manhattan(a, b) : euclidean(a, b);
}

/// Prim's algorithm over the complete graph on `pts`. parent[order[0]] == -1.
struct SpanningTree {
  std::vector<int> order;   // Prim insertion order
  std::vector<int> parent;  // parent index per point
  double length = 0.0;
};

SpanningTree prim_tree(std::span<const Point> pts, Metric metric, int root = 0);

/// Length of the minimum spanning tree. O(K^2) with no allocation for small K.
double mst_length(std::span<const Point> pts, Metric metric = Metric::manhattan);

}  // namespace nepr
