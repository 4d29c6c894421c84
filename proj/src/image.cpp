#include "synthhw/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "synthhw/error.hpp"

namespace synthhw {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Precondition: return "PreconditionViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyImage: return "EmptyImage";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::MissingGlyph: return "MissingGlyph";
    case ErrorKind::FontLoad: return "FontLoadError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::NoValidPath: return "NoValidPath";
    case ErrorKind::MissingCharacterModel: return "MissingCharacterModel";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::ImageTooNarrow: return "ImageTooNarrow";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
  }
  return "Error";
}

BilevelImage::BilevelImage(int width, int height) : width_(width), height_(height) {
  require(width >= 0 && height >= 0, ErrorKind::Precondition, "negative image size");
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t BilevelImage::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Box BilevelImage::ink_box() const {
  Box b{width_, height_, -1, -1};
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (at(x, y)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  if (b.x1 < 0) return Box{};
  return b;
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  require(width >= 0 && height >= 0, ErrorKind::Precondition, "negative image size");
  samples_.assign(static_cast<std::size_t>(width) * height, fill);
}

BilevelImage Component::mask() const {
  BilevelImage m(box.width(), box.height());
  for (const Point& p : pixels) m.set(p.x - box.x0, p.y - box.y0);
  return m;
}

std::vector<Point> bresenham_line(Point p0, Point p1) {
  // Walk from the lexicographically smaller endpoint so that both orders
  // produce the same pixels, then reverse if the caller asked the other way.
  const bool swapped = p1 < p0;
  Point a = swapped ? p1 : p0;
  Point b = swapped ? p0 : p1;

  const int dx = std::abs(b.x - a.x);
  const int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(std::max(dx, -dy)) + 1);
  Point p = a;
  for (;;) {
    out.push_back(p);
    if (p == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      p.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      p.y += sy;
    }
  }
  if (swapped) std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Component> connected_components(const BilevelImage& img, Connectivity conn) {
  const int w = img.width(), h = img.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<Component> out;
  std::vector<Point> stack;

  static constexpr std::array<Point, 8> kNbr{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
  const std::size_t nn = conn == Connectivity::Eight ? 8 : 4;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (!img.at(x, y) || seen[idx]) continue;
      Component c;
      c.box = Box{x, y, x, y};
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        Point p = stack.back();
        stack.pop_back();
        c.pixels.push_back(p);
        c.box.x0 = std::min(c.box.x0, p.x);
        c.box.x1 = std::max(c.box.x1, p.x);
        c.box.y0 = std::min(c.box.y0, p.y);
        c.box.y1 = std::max(c.box.y1, p.y);
        for (std::size_t k = 0; k < nn; ++k) {
          const int qx = p.x + kNbr[k].x, qy = p.y + kNbr[k].y;
          if (!img.get(qx, qy)) continue;
          const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
          if (seen[q]) continue;
          seen[q] = 1;
          stack.push_back({qx, qy});
        }
      }
      std::sort(c.pixels.begin(), c.pixels.end());
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::size_t count_components(const BilevelImage& img, Connectivity conn) {
  return connected_components(img, conn).size();
}

std::vector<int> horizontal_projection(const BilevelImage& img) {
  std::vector<int> rows(static_cast<std::size_t>(img.height()), 0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) rows[y] += img.at(x, y) ? 1 : 0;
  return rows;
}

std::vector<int> vertical_projection(const BilevelImage& img) {
  std::vector<int> cols(static_cast<std::size_t>(img.width()), 0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) cols[x] += img.at(x, y) ? 1 : 0;
  return cols;
}

GrayImage resize_gray(const GrayImage& img, int width, int height) {
  require(width > 0 && height > 0, ErrorKind::Precondition, "resize target must be positive");
  require(img.width() > 0 && img.height() > 0, ErrorKind::EmptyImage, "resize of empty image");
  GrayImage out(width, height);
  const double fx = static_cast<double>(img.width()) / width;
  const double fy = static_cast<double>(img.height()) / height;

  // Pixel-center alignment; sample positions clamp to the source border.
  auto axis = [](int i, double f, int n, int& i0, int& i1, double& t) {
    double s = (i + 0.5) * f - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, n - 1);
    t = s - i0;
  };

  for (int y = 0; y < height; ++y) {
    int y0, y1;
    double ty;
    axis(y, fy, img.height(), y0, y1, ty);
    for (int x = 0; x < width; ++x) {
      int x0, x1;
      double tx;
      axis(x, fx, img.width(), x0, x1, tx);
      const double top = img.at(x0, y0) * (1 - tx) + img.at(x1, y0) * tx;
      const double bot = img.at(x0, y1) * (1 - tx) + img.at(x1, y1) * tx;
      const double v = top * (1 - ty) + bot * ty;
      out.set(x, y, static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
    }
  }
  return out;
}

BilevelImage displace_columns(const BilevelImage& img, std::span<const int> offsets) {
  require(offsets.size() == static_cast<std::size_t>(img.width()), ErrorKind::DimensionMismatch,
          "one offset per column required");
  BilevelImage out(img.width(), img.height());
  for (int x = 0; x < img.width(); ++x) {
    const int dy = offsets[x];
    for (int y = 0; y < img.height(); ++y) {
      if (!img.at(x, y)) continue;
      const int ny = y + dy;
      if (ny >= 0 && ny < img.height()) out.set(x, ny);
    }
  }
  return out;
}

BilevelImage shear_columns(const BilevelImage& img, int start_col, int end_col, double vertical_slope) {
  require(0 <= start_col && start_col <= end_col && end_col < img.width(), ErrorKind::Precondition,
          "shear column range outside image");
  std::vector<int> offsets(static_cast<std::size_t>(img.width()), 0);
  for (int c = start_col; c <= end_col; ++c) offsets[c] = round_symmetric(vertical_slope * (c - start_col));
  return displace_columns(img, offsets);
}

BilevelImage crop(const BilevelImage& img, const Box& box) {
  require(!box.empty() && box.x0 >= 0 && box.y0 >= 0 && box.x1 < img.width() && box.y1 < img.height(),
          ErrorKind::OutOfBounds, "crop box outside image");
  BilevelImage out(box.width(), box.height());
  for (int y = box.y0; y <= box.y1; ++y)
    for (int x = box.x0; x <= box.x1; ++x)
      if (img.at(x, y)) out.set(x - box.x0, y - box.y0);
  return out;
}

BilevelImage pad(const BilevelImage& img, int left, int top, int right, int bottom) {
  require(left >= 0 && top >= 0 && right >= 0 && bottom >= 0, ErrorKind::Precondition, "negative padding");
  BilevelImage out(img.width() + left + right, img.height() + top + bottom);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.at(x, y)) out.set(x + left, y + top);
  return out;
}

BilevelImage stack_rows(std::span<const BilevelImage> parts) {
  int w = -1, h = 0;
  for (const auto& p : parts) {
    if (p.height() == 0) continue;
    require(w < 0 || p.width() == w, ErrorKind::DimensionMismatch, "stacked slices differ in width");
    w = p.width();
    h += p.height();
  }
  BilevelImage out(std::max(w, 0), h);
  int row = 0;
  for (const auto& p : parts) {
    for (int y = 0; y < p.height(); ++y, ++row)
      for (int x = 0; x < p.width(); ++x)
        if (p.at(x, y)) out.set(x, row);
  }
  return out;
}

GrayImage to_gray(const BilevelImage& img) {
  GrayImage g(img.width(), img.height(), 255);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.at(x, y)) g.set(x, y, 0);
  return g;
}

// --- PNM -------------------------------------------------------------------

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

// Parses magic and the numeric header fields; returns the offset of the raster.
std::size_t parse_header(const std::string& data, std::string& magic, std::vector<int>& fields, int nfields) {
  std::size_t i = 0;
  auto skip_ws = [&] {
    for (;;) {
      while (i < data.size() && std::isspace(static_cast<unsigned char>(data[i]))) ++i;
      if (i < data.size() && data[i] == '#') {
        while (i < data.size() && data[i] != '\n') ++i;
        continue;
      }
      break;
    }
  };
  if (data.size() < 2) fail(ErrorKind::Parse, "truncated PNM header");
  magic = data.substr(0, 2);
  i = 2;
  for (int k = 0; k < nfields; ++k) {
    skip_ws();
    std::size_t start = i;
    while (i < data.size() && std::isdigit(static_cast<unsigned char>(data[i]))) ++i;
    if (start == i) fail(ErrorKind::Parse, "bad PNM header field");
    fields.push_back(std::stoi(data.substr(start, i - start)));
  }
  if (i >= data.size()) fail(ErrorKind::Parse, "missing PNM raster");
  return i + 1;  // single whitespace byte before the raster
}

}  // namespace

std::vector<std::uint8_t> encode_pbm(const BilevelImage& img) {
  std::string header = "P4\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  const int row_bytes = (img.width() + 7) / 8;
  for (int y = 0; y < img.height(); ++y) {
    for (int b = 0; b < row_bytes; ++b) {
      std::uint8_t v = 0;
      for (int k = 0; k < 8; ++k) {
        const int x = b * 8 + k;
        if (x < img.width() && img.at(x, y)) v |= static_cast<std::uint8_t>(0x80 >> k);
      }
      bytes.push_back(v);
    }
  }
  return bytes;
}

void write_pbm(const BilevelImage& img, const std::filesystem::path& path) { write_file(path, encode_pbm(img)); }

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), img.samples().begin(), img.samples().end());
  write_file(path, bytes);
}

BilevelImage read_pbm(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::string magic;
  std::vector<int> f;
  const std::size_t off = parse_header(data, magic, f, 2);
  if (magic != "P4") fail(ErrorKind::Parse, path.string() + " is not a binary PBM");
  BilevelImage img(f[0], f[1]);
  const int row_bytes = (f[0] + 7) / 8;
  if (data.size() < off + static_cast<std::size_t>(row_bytes) * f[1]) fail(ErrorKind::Parse, "truncated PBM raster");
  for (int y = 0; y < f[1]; ++y)
    for (int x = 0; x < f[0]; ++x) {
      const auto byte = static_cast<std::uint8_t>(data[off + static_cast<std::size_t>(y) * row_bytes + x / 8]);
      if (byte & (0x80 >> (x % 8))) img.set(x, y);
    }
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::string magic;
  std::vector<int> f;
  const std::size_t off = parse_header(data, magic, f, 3);
  if (magic != "P5") fail(ErrorKind::Parse, path.string() + " is not a binary PGM");
  if (f[2] <= 0 || f[2] > 255) fail(ErrorKind::Parse, "only 8-bit PGM is supported");
  GrayImage img(f[0], f[1]);
  if (data.size() < off + static_cast<std::size_t>(f[0]) * f[1]) fail(ErrorKind::Parse, "truncated PGM raster");
  for (std::size_t i = 0; i < img.samples().size(); ++i) {
    const int v = static_cast<std::uint8_t>(data[off + i]);
    img.samples()[i] = static_cast<std::uint8_t>(v * 255 / f[2]);
  }
  return img;
}

}  // namespace synthhw
