#include "synthhw/vectorize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "synthhw/error.hpp"

namespace synthhw {

namespace {

// 4-neighbours first so walks prefer axial steps.
constexpr std::array<Point, 8> kNeighbours{{{1, 0}, {0, -1}, {-1, 0}, {0, 1}, {1, -1}, {-1, -1}, {-1, 1}, {1, 1}}};

class Grid {
 public:
  explicit Grid(const BilevelImage& img) : img_(img), w_(img.width()), h_(img.height()) {}

  bool ink(Point p) const { return img_.get(p.x, p.y); }
  int degree(Point p) const {
    int d = 0;
    for (Point o : kNeighbours) d += ink({p.x + o.x, p.y + o.y});
    return d;
  }
  std::size_t idx(Point p) const { return static_cast<std::size_t>(p.y) * w_ + p.x; }
  int width() const { return w_; }
  int height() const { return h_; }

 private:
  const BilevelImage& img_;
  int w_, h_;
};

double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double px = p.x - a.x, py = p.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::hypot(px, py);
  const double t = std::clamp((px * dx + py * dy) / len2, 0.0, 1.0);
  return std::hypot(px - t * dx, py - t * dy);
}

// Splits [i, j] at its maximum-deviation pixel while that deviation reaches
// the tolerance (always once when `force`, for closed chains whose chord is a
// single point), collecting the break indices in chain order.
void split_chain(std::span<const Point> c, int i, int j, double tol, bool force, std::vector<int>& breaks) {
  double dev = 0.0;
  int best = -1;
  for (int m = i + 1; m < j; ++m) {
    const double d = point_segment_distance(c[m], c[i], c[j]);
    if (d > dev) {
      dev = d;
      best = m;
    }
  }
  if (best < 0 || (dev < tol && !force)) return;
  split_chain(c, i, best, tol, false, breaks);
  breaks.push_back(best);
  split_chain(c, best, j, tol, false, breaks);
}

}  // namespace

std::vector<Point> polygonal_approx(std::span<const Point> chain, double tolerance) {
  require(chain.size() >= 2, ErrorKind::Precondition, "polygonal_approx needs at least two pixels");
  const int last = static_cast<int>(chain.size()) - 1;
  std::vector<int> breaks;
  split_chain(chain, 0, last, tolerance, chain.front() == chain.back(), breaks);
  std::vector<Point> out{chain.front()};
  for (int b : breaks) out.push_back(chain[b]);
  out.push_back(chain.back());
  return out;
}

TraceResult trace_chains(const BilevelImage& skel) {
  const Grid g(skel);
  const int w = g.width(), h = g.height();
  TraceResult result;

  // Junction pixels and their clusters.
  std::vector<int> node_of(static_cast<std::size_t>(w) * h, -1);
  std::vector<char> visited(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Point p{x, y};
      if (!g.ink(p) || g.degree(p) < 3 || node_of[g.idx(p)] >= 0) continue;
      JunctionCluster cl;
      const int id = static_cast<int>(result.junctions.size());
      std::vector<Point> stack{p};
      node_of[g.idx(p)] = id;
      while (!stack.empty()) {
        const Point q = stack.back();
        stack.pop_back();
        cl.pixels.push_back(q);
        for (Point o : kNeighbours) {
          const Point r{q.x + o.x, q.y + o.y};
          if (!g.ink(r) || node_of[g.idx(r)] >= 0 || g.degree(r) < 3) continue;
          node_of[g.idx(r)] = id;
          stack.push_back(r);
        }
      }
      std::sort(cl.pixels.begin(), cl.pixels.end());
      double cx = 0, cy = 0;
      for (Point q : cl.pixels) {
        cx += q.x;
        cy += q.y;
      }
      cx /= cl.pixels.size();
      cy /= cl.pixels.size();
      double best = std::numeric_limits<double>::infinity();
      for (Point q : cl.pixels) {
        const double d = (q.x - cx) * (q.x - cx) + (q.y - cy) * (q.y - cy);
        if (d < best) {
          best = d;
          cl.point = q;
        }
      }
      result.junctions.push_back(std::move(cl));
    }

  auto free_pixel = [&](Point p) { return g.ink(p) && node_of[g.idx(p)] < 0 && !visited[g.idx(p)]; };

  auto walk = [&](Point start, int start_node) {
    PixelChain ch;
    ch.start_node = start_node;
    ch.pixels.push_back(start);
    visited[g.idx(start)] = 1;
    Point cur = start;
    for (;;) {
      bool moved = false;
      for (Point o : kNeighbours) {
        const Point r{cur.x + o.x, cur.y + o.y};
        if (free_pixel(r)) {
          visited[g.idx(r)] = 1;
          ch.pixels.push_back(r);
          cur = r;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    // Node at the far end: prefer one other than the start node.
    int fallback = -1;
    for (Point o : kNeighbours) {
      const Point r{cur.x + o.x, cur.y + o.y};
      if (!g.ink(r)) continue;
      const int n = node_of[g.idx(r)];
      if (n < 0) continue;
      if (n != start_node) {
        ch.end_node = n;
        break;
      }
      if (ch.pixels.size() >= 2) fallback = n;
    }
    if (ch.end_node < 0) ch.end_node = fallback;
    if (start_node < 0 && ch.end_node < 0 && ch.pixels.size() >= 3) {
      const Point s = ch.pixels.front();
      ch.closed = std::abs(s.x - cur.x) <= 1 && std::abs(s.y - cur.y) <= 1;
    }
    result.chains.push_back(std::move(ch));
  };

  for (std::size_t n = 0; n < result.junctions.size(); ++n)
    for (Point q : result.junctions[n].pixels)
      for (Point o : kNeighbours) {
        const Point r{q.x + o.x, q.y + o.y};
        if (free_pixel(r)) walk(r, static_cast<int>(n));
      }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (free_pixel({x, y}) && g.degree({x, y}) == 1) walk({x, y}, -1);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (free_pixel({x, y})) walk({x, y}, -1);  // isolated pixels and pure loops

  return result;
}

namespace {

struct WorkChain {
  std::vector<Point> seq;
  int start_node = -1;
  int end_node = -1;
  bool alive = true;
};

}  // namespace

VectorModel vectorize(const BilevelImage& skel, double tolerance) {
  const TraceResult tr = trace_chains(skel);
  VectorModel vm;
  vm.width = skel.width();
  vm.height = skel.height();

  std::vector<WorkChain> work;
  for (const PixelChain& c : tr.chains) {
    if (c.pixels.size() == 1 && c.start_node < 0 && c.end_node < 0) {
      vm.dots.push_back(c.pixels.front());
      continue;
    }
    WorkChain wc;
    wc.start_node = c.start_node;
    wc.end_node = c.end_node;
    if (c.start_node >= 0) wc.seq.push_back(tr.junctions[c.start_node].point);
    wc.seq.insert(wc.seq.end(), c.pixels.begin(), c.pixels.end());
    if (c.end_node >= 0) wc.seq.push_back(tr.junctions[c.end_node].point);
    if (c.closed) wc.seq.push_back(c.pixels.front());
    work.push_back(std::move(wc));
  }

  // Incidences per node, then resolve nodes by degree.
  const int nodes = static_cast<int>(tr.junctions.size());
  auto incidences = [&](int n) {
    std::vector<Incidence> out;
    for (std::size_t i = 0; i < work.size(); ++i) {
      if (!work[i].alive) continue;
      if (work[i].start_node == n) out.push_back({static_cast<int>(i), false});
      if (work[i].end_node == n) out.push_back({static_cast<int>(i), true});
    }
    return out;
  };

  for (int n = 0; n < nodes; ++n) {
    const auto inc = incidences(n);
    if (inc.empty()) vm.dots.push_back(tr.junctions[n].point);
    if (inc.size() != 2) continue;
    WorkChain& a = work[inc[0].polyline];
    if (inc[0].polyline == inc[1].polyline) {
      a.start_node = a.end_node = -1;  // loop through a pass-through node
      continue;
    }
    WorkChain& b = work[inc[1].polyline];
    if (!inc[0].at_end) {
      std::reverse(a.seq.begin(), a.seq.end());
      std::swap(a.start_node, a.end_node);
    }
    if (inc[1].at_end) {
      std::reverse(b.seq.begin(), b.seq.end());
      std::swap(b.start_node, b.end_node);
    }
    a.seq.insert(a.seq.end(), b.seq.begin() + 1, b.seq.end());
    a.end_node = b.end_node;
    b.alive = false;
  }

  std::vector<int> remap(work.size(), -1);
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (!work[i].alive) continue;
    remap[i] = static_cast<int>(vm.polylines.size());
    vm.polylines.push_back({polygonal_approx(work[i].seq, tolerance)});
  }
  for (int n = 0; n < nodes; ++n) {
    auto inc = incidences(n);
    if (inc.size() < 3) continue;
    JunctionNode jn{tr.junctions[n].point, {}};
    for (Incidence& i : inc) jn.incident.push_back({remap[i.polyline], i.at_end});
    vm.junctions.push_back(std::move(jn));
  }
  return vm;
}

BilevelImage rasterize_model(const VectorModel& vm) {
  BilevelImage out(vm.width, vm.height);
  auto check = [&](Point p) {
    if (!out.contains(p.x, p.y))
      fail(ErrorKind::OutOfBounds, "vertex (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") outside " +
                                       std::to_string(vm.width) + "x" + std::to_string(vm.height) + " canvas");
  };
  for (const Polyline& pl : vm.polylines) {
    for (Point p : pl.vertices) check(p);
    for (std::size_t k = 0; k + 1 < pl.vertices.size(); ++k)
      for (Point p : bresenham_line(pl.vertices[k], pl.vertices[k + 1])) out.set(p.x, p.y);
    if (pl.vertices.size() == 1) out.set(pl.vertices[0].x, pl.vertices[0].y);
  }
  for (Point d : vm.dots) {
    check(d);
    out.set(d.x, d.y);
  }
  return out;
}

std::string to_text(const VectorModel& vm) {
  std::ostringstream os;
  os << "vectormodel 1\nsize " << vm.width << ' ' << vm.height << '\n';
  for (const Polyline& pl : vm.polylines) {
    os << "polyline " << pl.vertices.size();
    for (Point p : pl.vertices) os << ' ' << p.x << ' ' << p.y;
    os << '\n';
  }
  for (Point d : vm.dots) os << "dot " << d.x << ' ' << d.y << '\n';
  for (const JunctionNode& j : vm.junctions) {
    os << "junction " << j.point.x << ' ' << j.point.y << ' ' << j.incident.size();
    for (const Incidence& i : j.incident) os << ' ' << i.polyline << ' ' << (i.at_end ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

VectorModel parse_vector_model(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  VectorModel vm;
  auto bad = [](const std::string& what) { fail(ErrorKind::Parse, "vector model: " + what); };
  if (!std::getline(is, line) || line != "vectormodel 1") bad("missing header");
  bool have_size = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "size") {
      if (!(ls >> vm.width >> vm.height) || vm.width <= 0 || vm.height <= 0) bad("bad size");
      have_size = true;
    } else if (tag == "polyline") {
      std::size_t n = 0;
      if (!(ls >> n)) bad("bad polyline count");
      Polyline pl;
      for (std::size_t k = 0; k < n; ++k) {
        Point p;
        if (!(ls >> p.x >> p.y)) bad("short polyline");
        pl.vertices.push_back(p);
      }
      vm.polylines.push_back(std::move(pl));
    } else if (tag == "dot") {
      Point p;
      if (!(ls >> p.x >> p.y)) bad("bad dot");
      vm.dots.push_back(p);
    } else if (tag == "junction") {
      JunctionNode j;
      std::size_t k = 0;
      if (!(ls >> j.point.x >> j.point.y >> k)) bad("bad junction");
      for (std::size_t i = 0; i < k; ++i) {
        int pl = 0, end = 0;
        if (!(ls >> pl >> end)) bad("short junction");
        if (pl < 0 || pl >= static_cast<int>(vm.polylines.size())) bad("junction references unknown polyline");
        j.incident.push_back({pl, end != 0});
      }
      vm.junctions.push_back(std::move(j));
    } else {
      bad("unknown record '" + tag + "'");
    }
  }
  if (!have_size) bad("missing size");
  return vm;
}

}  // namespace synthhw
