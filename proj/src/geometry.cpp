#include "nepr/geometry.hpp"

#include <array>
#include <limits>

namespace nepr {

SpanningTree prim_tree(std::span<const Point> pts, Metric metric, int root) {
  SpanningTree t;
  const int n = static_cast<int>(pts.size());
  if (n == 0) return t;
  t.parent.assign(n, -1);
  t.order.reserve(n);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<char> in_tree(n, 0);
  best[root] = 0.0;
  for (int step = 0; step < n; ++step) {
    int u = -1;
    for (int i = 0; i < n; ++i) {
      if (!in_tree[i] && (u < 0 || best[i] < best[u])) u = i;
    }
    in_tree[u] = 1;
    t.order.push_back(u);
    t.length += best[u];
    for (int i = 0; i < n; ++i) {
      if (in_tree[i]) continue;
      double d = distance(pts[u], pts[i], metric);
      if (d < best[i]) {
        best[i] = d;
        t.parent[i] = u;
      }
    }
  }
  return t;
}

namespace {

template <class Dist>
double mst_small(std::span<const Point> pts, Dist dist) {
  constexpr int kMax = 64;
  const int n = static_cast<int>(pts.size());
  std::array<double, kMax> best;
  std::array<int, kMax> rest;
  int m = n - 1;
  for (int i = 1; i < n; ++i) {
    rest[i - 1] = i;
    best[i - 1] = dist(pts[0], pts[i]);
  }
  double total = 0.0;
  while (m > 0) {
    int k = 0;
    for (int i = 1; i < m; ++i) {
      if (best[i] < best[k]) k = i;
    }
    total += best[k];
    const Point u = pts[rest[k]];
    rest[k] = rest[m - 1];
    best[k] = best[m - 1];
    --m;
    for (int i = 0; i < m; ++i) {
      double d = dist(u, pts[rest[i]]);
      if (d < best[i]) best[i] = d;
    }
  }
  return total;
}

}  // namespace

double mst_length(std::span<const Point> pts, Metric metric) {
  if (pts.size() < 2) return 0.0;
  if (pts.size() == 2) return distance(pts[0], pts[1], metric);
  if (pts.size() <= 64) {
    if (metric == Metric::manhattan) return mst_small(pts, [](Point a, Point b) { return manhattan(a, b); });
    return mst_small(pts, [](Point a, Point b) { return euclidean(a, b); });
  }
  return prim_tree(pts, metric).length;
}

}  // namespace nepr
