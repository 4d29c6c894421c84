#pragma once

#include <vector>

#include "synthhw/image.hpp"

namespace synthhw {

// Chamfer distance with axial weight 3 and diagonal weight 4. Pixels outside
// the canvas count as background.
struct DistanceMap {
  int width = 0;
  int height = 0;
  std::vector<int> values;

  int at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

DistanceMap chamfer_34(const BilevelImage& img);

// True when removing (x, y) changes neither the 8-connected foreground nor the
// 4-connected background topology of its 3x3 neighbourhood.
bool is_simple_point(const BilevelImage& img, int x, int y);

// Topology-preserving thinning. Border pixels are peeled in increasing
// chamfer-distance order; end points (exactly one 8-neighbour) are kept so
// strokes do not shrink. Stops when no removable pixel remains.
BilevelImage skeletonize(const BilevelImage& img);

}  // namespace synthhw
