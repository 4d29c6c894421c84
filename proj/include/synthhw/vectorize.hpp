#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthhw/image.hpp"

namespace synthhw {

// A run of skeleton pixels between nodes. start_node / end_node index into
// TraceResult::junctions, or are -1 for a free end.
struct PixelChain {
  std::vector<Point> pixels;
  int start_node = -1;
  int end_node = -1;
  bool closed = false;  // loop with no junction; pixels.front() is its cut point
};

// 8-connected cluster of junction pixels (>= 3 skeleton neighbours).
struct JunctionCluster {
  std::vector<Point> pixels;
  Point point;  // cluster pixel nearest the centroid
};

struct TraceResult {
  std::vector<PixelChain> chains;
  std::vector<JunctionCluster> junctions;
};

TraceResult trace_chains(const BilevelImage& skel);

// Recursive split at the maximum-deviation pixel until every segment's
// deviation is below `tolerance`. The first and last chain pixels are always
// kept.
std::vector<Point> polygonal_approx(std::span<const Point> chain, double tolerance = 3.0);

struct Polyline {
  std::vector<Point> vertices;
};

struct Incidence {
  int polyline = 0;
  bool at_end = false;  // false: vertices.front(), true: vertices.back()

  friend bool operator==(const Incidence&, const Incidence&) = default;
};

struct JunctionNode {
  Point point;
  std::vector<Incidence> incident;
};

struct VectorModel {
  int width = 0;
  int height = 0;
  std::vector<Polyline> polylines;
  std::vector<JunctionNode> junctions;
  std::vector<Point> dots;  // isolated single-pixel components

  Point& endpoint(const Incidence& inc) {
    auto& v = polylines[inc.polyline].vertices;
    return inc.at_end ? v.back() : v.front();
  }
  const Point& endpoint(const Incidence& inc) const {
    const auto& v = polylines[inc.polyline].vertices;
    return inc.at_end ? v.back() : v.front();
  }
};

// Traces the skeleton, merges chains through degree-2 nodes and approximates
// every chain. Nodes with three or more incident ends become JunctionNodes.
VectorModel vectorize(const BilevelImage& skel, double tolerance = 3.0);

// Union of Bresenham lines over all polyline edges plus dots. Throws
// OutOfBounds if any vertex is off the canvas.
BilevelImage rasterize_model(const VectorModel& vm);

// Line-oriented text form:
//   vectormodel 1
//   size <w> <h>
//   polyline <n> <x0> <y0> ... <x(n-1)> <y(n-1)>
//   dot <x> <y>
//   junction <x> <y> <k> <polyline> <0|1> ...   (1 = incident at the end)
std::string to_text(const VectorModel& vm);
VectorModel parse_vector_model(std::string_view text);

}  // namespace synthhw
