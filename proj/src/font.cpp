#include "synthhw/font.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "synthhw/error.hpp"

namespace synthhw {

namespace {

constexpr std::uint8_t kOnCurve = 0x01;
constexpr std::uint8_t kXShort = 0x02;
constexpr std::uint8_t kYShort = 0x04;
constexpr std::uint8_t kRepeat = 0x08;
constexpr std::uint8_t kXSame = 0x10;
constexpr std::uint8_t kYSame = 0x20;

constexpr std::uint16_t kArgWords = 0x0001;
constexpr std::uint16_t kArgsXY = 0x0002;
constexpr std::uint16_t kHaveScale = 0x0008;
constexpr std::uint16_t kMoreComponents = 0x0020;
constexpr std::uint16_t kHaveXYScale = 0x0040;
constexpr std::uint16_t kHaveTwoByTwo = 0x0080;

void apply(const double m[6], double x, double y, double& ox, double& oy) {
  ox = m[0] * x + m[2] * y + m[4];
  oy = m[1] * x + m[3] * y + m[5];
}

}  // namespace

Font Font::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::FontLoad, "cannot open font " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(std::move(bytes), path.filename().string());
}

Font Font::from_bytes(std::vector<std::uint8_t> bytes, std::string name) {
  Font f;
  f.name_ = std::move(name);
  f.data_ = std::move(bytes);
  f.parse();
  return f;
}

std::uint8_t Font::u8(std::size_t off) const {
  if (off >= data_.size()) fail(ErrorKind::FontLoad, name_ + ": read past end of font data");
  return data_[off];
}

std::uint16_t Font::u16(std::size_t off) const {
  return static_cast<std::uint16_t>((u8(off) << 8) | u8(off + 1));
}

std::uint32_t Font::u32(std::size_t off) const {
  return (static_cast<std::uint32_t>(u16(off)) << 16) | u16(off + 2);
}

void Font::parse() {
  if (data_.size() < 12) fail(ErrorKind::FontLoad, name_ + ": file too small");
  const std::uint32_t version = u32(0);
  if (version != 0x00010000 && version != 0x74727565 /* 'true' */)
    fail(ErrorKind::FontLoad, name_ + ": not a TrueType outline font");

  Table head, maxp, hhea;
  const int num_tables = u16(4);
  for (int i = 0; i < num_tables; ++i) {
    const std::size_t rec = 12 + 16 * static_cast<std::size_t>(i);
    const std::string tag(reinterpret_cast<const char*>(&data_.at(rec)), 4);
    Table t{u32(rec + 8), u32(rec + 12)};
    if (static_cast<std::size_t>(t.offset) + t.length > data_.size())
      fail(ErrorKind::FontLoad, name_ + ": table " + tag + " out of range");
    if (tag == "head") head = t;
    else if (tag == "maxp") maxp = t;
    else if (tag == "hhea") hhea = t;
    else if (tag == "hmtx") hmtx_ = t;
    else if (tag == "loca") loca_ = t;
    else if (tag == "glyf") glyf_ = t;
    else if (tag == "cmap") cmap_ = t;
  }
  for (const Table* t : {&head, &maxp, &hhea, &hmtx_, &loca_, &glyf_, &cmap_})
    if (t->length == 0) fail(ErrorKind::FontLoad, name_ + ": missing required table");

  units_per_em_ = u16(head.offset + 18);
  index_to_loc_format_ = i16(head.offset + 50);
  num_glyphs_ = u16(maxp.offset + 4);
  ascender_ = i16(hhea.offset + 4);
  descender_ = i16(hhea.offset + 6);
  num_hmetrics_ = u16(hhea.offset + 34);
  if (units_per_em_ <= 0 || num_hmetrics_ <= 0) fail(ErrorKind::FontLoad, name_ + ": bad metrics header");

  // Prefer a full-repertoire Unicode map (format 12), then the BMP map.
  int best_rank = -1;
  const int n = u16(cmap_.offset + 2);
  for (int i = 0; i < n; ++i) {
    const std::size_t rec = cmap_.offset + 4 + 8 * static_cast<std::size_t>(i);
    const int platform = u16(rec), encoding = u16(rec + 2);
    const std::uint32_t sub = cmap_.offset + u32(rec + 4);
    const int format = u16(sub);
    int rank = -1;
    if (format == 12 && (platform == 3 && encoding == 10)) rank = 4;
    else if (format == 12 && platform == 0) rank = 3;
    else if (format == 4 && platform == 3 && encoding == 1) rank = 2;
    else if (format == 4 && platform == 0) rank = 1;
    if (rank > best_rank) {
      best_rank = rank;
      cmap_subtable_ = sub;
      cmap_format_ = format;
    }
  }
  if (best_rank < 0) fail(ErrorKind::FontLoad, name_ + ": no Unicode character map");
}

std::uint32_t Font::glyph_index(char32_t cp) const {
  const std::uint32_t c = static_cast<std::uint32_t>(cp);
  if (cmap_format_ == 12) {
    const std::uint32_t groups = u32(cmap_subtable_ + 12);
    std::uint32_t lo = 0, hi = groups;
    while (lo < hi) {
      const std::uint32_t mid = (lo + hi) / 2;
      const std::size_t g = cmap_subtable_ + 16 + 12 * static_cast<std::size_t>(mid);
      const std::uint32_t start = u32(g), end = u32(g + 4);
      if (c < start) hi = mid;
      else if (c > end) lo = mid + 1;
      else return u32(g + 8) + (c - start);
    }
    return 0;
  }
  if (c > 0xFFFF) return 0;
  const std::size_t base = cmap_subtable_;
  const int seg_count = u16(base + 6) / 2;
  const std::size_t ends = base + 14;
  const std::size_t starts = ends + 2 * seg_count + 2;
  const std::size_t deltas = starts + 2 * seg_count;
  const std::size_t ranges = deltas + 2 * seg_count;
  for (int i = 0; i < seg_count; ++i) {
    const std::uint16_t end = u16(ends + 2 * i);
    if (c > end) continue;
    const std::uint16_t start = u16(starts + 2 * i);
    if (c < start) return 0;
    const std::uint16_t delta = u16(deltas + 2 * i);
    const std::uint16_t range = u16(ranges + 2 * i);
    if (range == 0) return static_cast<std::uint16_t>(c + delta);
    const std::size_t addr = ranges + 2 * i + range + 2 * (c - start);
    const std::uint16_t g = u16(addr);
    return g == 0 ? 0 : static_cast<std::uint16_t>(g + delta);
  }
  return 0;
}

int Font::advance_width(std::uint32_t glyph) const {
  const std::uint32_t i = std::min<std::uint32_t>(glyph, static_cast<std::uint32_t>(num_hmetrics_ - 1));
  return u16(hmtx_.offset + 4 * i);
}

std::uint32_t Font::glyph_offset(std::uint32_t glyph, std::uint32_t& length) const {
  if (glyph >= static_cast<std::uint32_t>(num_glyphs_)) fail(ErrorKind::FontLoad, name_ + ": glyph index out of range");
  std::uint32_t a, b;
  if (index_to_loc_format_ == 0) {
    a = 2u * u16(loca_.offset + 2 * glyph);
    b = 2u * u16(loca_.offset + 2 * (glyph + 1));
  } else {
    a = u32(loca_.offset + 4 * glyph);
    b = u32(loca_.offset + 4 * (glyph + 1));
  }
  length = b > a ? b - a : 0;
  return glyf_.offset + a;
}

GlyphOutline Font::outline(std::uint32_t glyph, double tolerance) const {
  GlyphOutline out;
  const double identity[6] = {1, 0, 0, 1, 0, 0};
  append_outline(glyph, identity, std::max(tolerance, 0.05), 0, out);
  return out;
}

void Font::append_outline(std::uint32_t glyph, const double m[6], double tolerance, int depth,
                          GlyphOutline& out) const {
  if (depth > 8) fail(ErrorKind::FontLoad, name_ + ": composite glyph nesting too deep");
  std::uint32_t length = 0;
  const std::uint32_t off = glyph_offset(glyph, length);
  if (length == 0) return;  // blank glyph, e.g. space

  const int contours = i16(off);
  if (contours < 0) {
    std::size_t p = off + 10;
    for (;;) {
      const std::uint16_t flags = u16(p);
      const std::uint16_t child = u16(p + 2);
      p += 4;
      double dx = 0, dy = 0;
      if (flags & kArgWords) {
        if (flags & kArgsXY) {
          dx = i16(p);
          dy = i16(p + 2);
        }
        p += 4;
      } else {
        if (flags & kArgsXY) {
          dx = static_cast<std::int8_t>(u8(p));
          dy = static_cast<std::int8_t>(u8(p + 1));
        }
        p += 2;
      }
      double a = 1, b = 0, c = 0, d = 1;
      auto f2dot14 = [&](std::size_t q) { return i16(q) / 16384.0; };
      if (flags & kHaveScale) {
        a = d = f2dot14(p);
        p += 2;
      } else if (flags & kHaveXYScale) {
        a = f2dot14(p);
        d = f2dot14(p + 2);
        p += 4;
      } else if (flags & kHaveTwoByTwo) {
        a = f2dot14(p);
        b = f2dot14(p + 2);
        c = f2dot14(p + 4);
        d = f2dot14(p + 6);
        p += 8;
      }
      // child transform: scale/rotate, then offset; composed with parent.
      const double cm[6] = {a, b, c, d, dx, dy};
      double composed[6];
      composed[0] = m[0] * cm[0] + m[2] * cm[1];
      composed[1] = m[1] * cm[0] + m[3] * cm[1];
      composed[2] = m[0] * cm[2] + m[2] * cm[3];
      composed[3] = m[1] * cm[2] + m[3] * cm[3];
      composed[4] = m[0] * cm[4] + m[2] * cm[5] + m[4];
      composed[5] = m[1] * cm[4] + m[3] * cm[5] + m[5];
      append_outline(child, composed, tolerance, depth + 1, out);
      if (!(flags & kMoreComponents)) break;
    }
    return;
  }
  if (contours == 0) return;

  std::vector<int> end_pts(static_cast<std::size_t>(contours));
  for (int i = 0; i < contours; ++i) end_pts[i] = u16(off + 10 + 2 * i);
  const int npts = end_pts.back() + 1;
  std::size_t p = off + 10 + 2 * static_cast<std::size_t>(contours);
  p += 2 + u16(p);  // skip hinting instructions

  std::vector<std::uint8_t> flags;
  flags.reserve(static_cast<std::size_t>(npts));
  while (static_cast<int>(flags.size()) < npts) {
    const std::uint8_t f = u8(p++);
    flags.push_back(f);
    if (f & kRepeat) {
      const int rep = u8(p++);
      for (int r = 0; r < rep && static_cast<int>(flags.size()) < npts; ++r) flags.push_back(f);
    }
  }
  std::vector<double> xs(static_cast<std::size_t>(npts)), ys(static_cast<std::size_t>(npts));
  int v = 0;
  for (int i = 0; i < npts; ++i) {
    if (flags[i] & kXShort) {
      const int dx = u8(p++);
      v += (flags[i] & kXSame) ? dx : -dx;
    } else if (!(flags[i] & kXSame)) {
      v += i16(p);
      p += 2;
    }
    xs[i] = v;
  }
  v = 0;
  for (int i = 0; i < npts; ++i) {
    if (flags[i] & kYShort) {
      const int dy = u8(p++);
      v += (flags[i] & kYSame) ? dy : -dy;
    } else if (!(flags[i] & kYSame)) {
      v += i16(p);
      p += 2;
    }
    ys[i] = v;
  }

  int first = 0;
  for (int c = 0; c < contours; ++c) {
    const int last = end_pts[c];
    const int n = last - first + 1;
    if (n < 2) {
      first = last + 1;
      continue;
    }
    struct Pt {
      double x, y;
      bool on;
    };
    std::vector<Pt> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = first; i <= last; ++i) {
      double tx, ty;
      apply(m, xs[i], ys[i], tx, ty);
      pts.push_back({tx, ty, (flags[i] & kOnCurve) != 0});
    }
    // Start on an on-curve point; synthesize one between two off-curve points.
    int start = -1;
    for (int i = 0; i < n; ++i)
      if (pts[i].on) {
        start = i;
        break;
      }
    Pt origin;
    if (start < 0) {
      origin = {(pts[0].x + pts[1].x) / 2, (pts[0].y + pts[1].y) / 2, true};
      start = 1;
    } else {
      origin = pts[start];
      start = (start + 1) % n;
    }

    std::vector<std::pair<double, double>> poly;
    poly.emplace_back(origin.x, origin.y);
    Pt cur = origin;
    auto quad = [&](const Pt& ctrl, const Pt& to) {
      const double ex = cur.x - 2 * ctrl.x + to.x, ey = cur.y - 2 * ctrl.y + to.y;
      const double err = std::sqrt(ex * ex + ey * ey) / 4.0;
      const int steps = std::clamp(static_cast<int>(std::ceil(std::sqrt(err / tolerance))), 1, 64);
      for (int s = 1; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps, u = 1 - t;
        poly.emplace_back(u * u * cur.x + 2 * u * t * ctrl.x + t * t * to.x,
                          u * u * cur.y + 2 * u * t * ctrl.y + t * t * to.y);
      }
      cur = to;
    };
    bool have_ctrl = false;
    Pt ctrl{};
    for (int k = 0; k < n; ++k) {
      const Pt& q = pts[(start + k) % n];
      if (q.on) {
        if (have_ctrl) quad(ctrl, q);
        else {
          poly.emplace_back(q.x, q.y);
          cur = q;
        }
        have_ctrl = false;
      } else {
        if (have_ctrl) quad(ctrl, Pt{(ctrl.x + q.x) / 2, (ctrl.y + q.y) / 2, true});
        ctrl = q;
        have_ctrl = true;
      }
    }
    if (have_ctrl) quad(ctrl, origin);
    out.contours.push_back(std::move(poly));
    first = last + 1;
  }
}

}  // namespace synthhw
