#include "synthhw/skeleton.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>

namespace synthhw {

namespace {

// Neighbours in circular order starting east, counter-clockwise (y down).
constexpr std::array<Point, 8> kRing{{{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

int ring_mask(const BilevelImage& img, int x, int y) {
  int m = 0;
  for (int k = 0; k < 8; ++k)
    if (img.get(x + kRing[k].x, y + kRing[k].y)) m |= 1 << k;
  return m;
}

// Simple-point table over the 256 neighbourhood configurations, computed by
// explicit component counting inside the 3x3 window.
std::array<bool, 256> build_simple_table() {
  std::array<bool, 256> table{};
  for (int m = 0; m < 256; ++m) {
    bool fg[3][3] = {};
    for (int k = 0; k < 8; ++k)
      if (m & (1 << k)) fg[1 + kRing[k].y][1 + kRing[k].x] = true;

    // 8-connected foreground components among the neighbours.
    int labels[3][3] = {};
    int fg_components = 0;
    for (int sy = 0; sy < 3; ++sy)
      for (int sx = 0; sx < 3; ++sx) {
        if ((sx == 1 && sy == 1) || !fg[sy][sx] || labels[sy][sx]) continue;
        ++fg_components;
        std::vector<std::pair<int, int>> st{{sx, sy}};
        labels[sy][sx] = fg_components;
        while (!st.empty()) {
          auto [cx, cy] = st.back();
          st.pop_back();
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = cx + dx, ny = cy + dy;
              if (nx < 0 || ny < 0 || nx > 2 || ny > 2 || (nx == 1 && ny == 1)) continue;
              if (!fg[ny][nx] || labels[ny][nx]) continue;
              labels[ny][nx] = fg_components;
              st.emplace_back(nx, ny);
            }
        }
      }

    // 4-connected background components that touch a 4-neighbour of the centre.
    int bl[3][3] = {};
    int bg_components = 0;
    const std::array<std::pair<int, int>, 4> four{{{2, 1}, {1, 0}, {0, 1}, {1, 2}}};
    for (auto [sx, sy] : four) {
      if (fg[sy][sx] || bl[sy][sx]) continue;
      ++bg_components;
      std::vector<std::pair<int, int>> st{{sx, sy}};
      bl[sy][sx] = bg_components;
      while (!st.empty()) {
        auto [cx, cy] = st.back();
        st.pop_back();
        const std::array<std::pair<int, int>, 4> d{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (auto [dx, dy] : d) {
          const int nx = cx + dx, ny = cy + dy;
          if (nx < 0 || ny < 0 || nx > 2 || ny > 2 || (nx == 1 && ny == 1)) continue;
          if (fg[ny][nx] || bl[ny][nx]) continue;
          bl[ny][nx] = bg_components;
          st.emplace_back(nx, ny);
        }
      }
    }
    table[m] = fg_components == 1 && bg_components == 1;
  }
  return table;
}

const std::array<bool, 256>& simple_table() {
  static const std::array<bool, 256> t = build_simple_table();
  return t;
}

int popcount8(int m) {
  int c = 0;
  for (; m; m &= m - 1) ++c;
  return c;
}

}  // namespace

DistanceMap chamfer_34(const BilevelImage& img) {
  const int w = img.width(), h = img.height();
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  DistanceMap d{w, h, std::vector<int>(static_cast<std::size_t>(w) * h, 0)};
  auto val = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0;
    return d.values[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (img.at(x, y)) d.values[static_cast<std::size_t>(y) * w + x] = kInf;

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int& v = d.values[static_cast<std::size_t>(y) * w + x];
      if (v == 0) continue;
      v = std::min({v, val(x - 1, y) + 3, val(x - 1, y - 1) + 4, val(x, y - 1) + 3, val(x + 1, y - 1) + 4});
    }
  for (int y = h - 1; y >= 0; --y)
    for (int x = w - 1; x >= 0; --x) {
      int& v = d.values[static_cast<std::size_t>(y) * w + x];
      if (v == 0) continue;
      v = std::min({v, val(x + 1, y) + 3, val(x + 1, y + 1) + 4, val(x, y + 1) + 3, val(x - 1, y + 1) + 4});
    }
  return d;
}

bool is_simple_point(const BilevelImage& img, int x, int y) { return simple_table()[ring_mask(img, x, y)]; }

BilevelImage skeletonize(const BilevelImage& img) {
  BilevelImage out = img;
  const DistanceMap dist = chamfer_34(img);

  // Foreground pixels bucketed by distance, raster order within a bucket.
  std::map<int, std::vector<Point>> levels;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.at(x, y)) levels[dist.at(x, y)].push_back({x, y});

  // Each level is peeled in four directional sub-passes (N, S, W, E) so a
  // stroke loses pixels evenly from both sides.
  constexpr std::array<Point, 4> kSides{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};
  const auto& table = simple_table();
  auto removable = [&](int x, int y, Point side) {
    if (!out.at(x, y) || out.get(x + side.x, y + side.y)) return false;
    const int m = ring_mask(out, x, y);
    return popcount8(m) > 1 && table[m];
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [level, pixels] : levels) {
      (void)level;
      for (const Point side : kSides)
        for (const Point& p : pixels)
          if (removable(p.x, p.y, side)) {
            out.set(p.x, p.y, false);
            changed = true;
          }
    }
  }
  return out;
}

}  // namespace synthhw
