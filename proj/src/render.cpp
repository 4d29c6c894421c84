#include "synthhw/render.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "synthhw/error.hpp"

namespace synthhw {

std::string to_string(Script s) {
  switch (s) {
    case Script::Devanagari: return "Devanagari";
    case Script::Bengali: return "Bengali";
    case Script::Latin: return "Latin";
    case Script::Other: return "other";
  }
  return "other";
}

std::string to_string(TextKind k) {
  switch (k) {
    case TextKind::Numeral: return "numeral";
    case TextKind::Character: return "character";
    case TextKind::Word: return "word";
  }
  return "word";
}

Script parse_script(const std::string& s) {
  std::string l;
  for (char c : s) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (l == "devanagari") return Script::Devanagari;
  if (l == "bengali" || l == "bangla") return Script::Bengali;
  if (l == "latin") return Script::Latin;
  return Script::Other;
}

TextKind parse_kind(const std::string& s) {
  if (s == "numeral") return TextKind::Numeral;
  if (s == "character") return TextKind::Character;
  if (s == "word") return TextKind::Word;
  fail(ErrorKind::Parse, "unknown text kind '" + s + "'");
}

std::u32string decode_utf8(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07;
      len = 4;
    } else {
      fail(ErrorKind::Parse, "invalid UTF-8 lead byte");
    }
    if (i + len > s.size()) fail(ErrorKind::Parse, "truncated UTF-8 sequence");
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) fail(ErrorKind::Parse, "invalid UTF-8 continuation byte");
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::string encode_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  for (char32_t cp : decode_utf8(s)) out.push_back(encode_utf8(std::u32string(1, cp)));
  return out;
}

namespace {

constexpr int kSupersample = 4;

struct Edge {
  double x0, y0, x1, y1;
  int dir;
};

bool is_space(char32_t cp) { return cp == U' ' || cp == U'\t' || cp == 0x00A0; }

}  // namespace

GrayImage render_text(const TextItem& item, const Font& font, int size_px) {
  require(size_px > 0, ErrorKind::Precondition, "size_px must be positive");
  const std::u32string cps = decode_utf8(item.text);
  require(!cps.empty(), ErrorKind::Precondition, "text must be non-empty");

  const double scale = static_cast<double>(size_px) / font.units_per_em();
  std::vector<std::pair<std::vector<std::pair<double, double>>, double>> placed;  // contour, pen offset
  double pen = 0.0;
  for (char32_t cp : cps) {
    const std::uint32_t g = font.glyph_index(cp);
    if (g == 0 && !is_space(cp))
      fail(ErrorKind::MissingGlyph, font.name() + " has no glyph for U+" + [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04X", static_cast<unsigned>(cp));
        return std::string(buf);
      }());
    // Flatten to about a quarter of a supersampled pixel.
    const GlyphOutline ol = font.outline(g, 0.25 / (scale * kSupersample));
    for (const auto& c : ol.contours) placed.emplace_back(c, pen);
    pen += font.advance_width(g);
  }

  const int margin = std::max(1, static_cast<int>(std::lround(0.05 * size_px)));
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [contour, off] : placed)
    for (const auto& [x, y] : contour) {
      xmin = std::min(xmin, (x + off) * scale);
      xmax = std::max(xmax, (x + off) * scale);
      ymin = std::min(ymin, -y * scale);
      ymax = std::max(ymax, -y * scale);
    }
  if (placed.empty()) {
    const int w = std::max(1, static_cast<int>(std::lround(pen * scale)) + 2 * margin);
    return GrayImage(w, size_px, 255);
  }

  const double ox = margin - std::floor(xmin);
  const double oy = margin - std::floor(ymin);
  const int width = static_cast<int>(std::ceil(xmax) - std::floor(xmin)) + 2 * margin;
  const int height = static_cast<int>(std::ceil(ymax) - std::floor(ymin)) + 2 * margin;

  std::vector<Edge> edges;
  for (const auto& [contour, off] : placed) {
    for (std::size_t i = 0; i < contour.size(); ++i) {
      const auto& a = contour[i];
      const auto& b = contour[(i + 1) % contour.size()];
      const double ax = ((a.first + off) * scale + ox) * kSupersample;
      const double ay = (-a.second * scale + oy) * kSupersample;
      const double bx = ((b.first + off) * scale + ox) * kSupersample;
      const double by = (-b.second * scale + oy) * kSupersample;
      if (ay == by) continue;
      edges.push_back({ax, ay, bx, by, by > ay ? 1 : -1});
    }
  }

  const int sw = width * kSupersample;
  std::vector<int> coverage(static_cast<std::size_t>(width) * height, 0);
  std::vector<std::pair<double, int>> xs;
  for (int sy = 0; sy < height * kSupersample; ++sy) {
    const double yc = sy + 0.5;
    xs.clear();
    for (const Edge& e : edges) {
      const double lo = std::min(e.y0, e.y1), hi = std::max(e.y0, e.y1);
      if (yc < lo || yc >= hi) continue;
      const double t = (yc - e.y0) / (e.y1 - e.y0);
      xs.emplace_back(e.x0 + t * (e.x1 - e.x0), e.dir);
    }
    std::sort(xs.begin(), xs.end());
    int winding = 0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      winding += xs[k].second;
      if (winding == 0) continue;
      const int i0 = std::max(0, static_cast<int>(std::ceil(xs[k].first - 0.5)));
      const int i1 = std::min(sw, static_cast<int>(std::ceil(xs[k + 1].first - 0.5)));
      int* row = &coverage[static_cast<std::size_t>(sy / kSupersample) * width];
      for (int i = i0; i < i1; ++i) ++row[i / kSupersample];
    }
  }

  GrayImage out(width, height, 255);
  constexpr int kFull = kSupersample * kSupersample;
  for (std::size_t i = 0; i < coverage.size(); ++i)
    out.samples()[i] = static_cast<std::uint8_t>(255 - (255 * coverage[i] + kFull / 2) / kFull);
  return out;
}

GrayImage render_text(const TextItem& item, const FontRef& font) {
  return render_text(item, Font::load(font.path), font.size_px);
}

int otsu_threshold(const GrayImage& img) {
  std::array<double, 256> hist{};
  for (std::uint8_t v : img.samples()) hist[v] += 1;
  const double total = static_cast<double>(img.samples().size());
  if (total == 0) return 128;
  double sum_all = 0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

  // Foreground is "< t", so class A holds levels [0, t).
  double best = -1, w_a = 0, sum_a = 0;
  int best_t = 128;
  for (int t = 1; t <= 255; ++t) {
    w_a += hist[t - 1];
    sum_a += (t - 1) * hist[t - 1];
    const double w_b = total - w_a;
    if (w_a == 0 || w_b == 0) continue;
    const double mu_a = sum_a / w_a, mu_b = (sum_all - sum_a) / w_b;
    const double between = w_a * w_b * (mu_a - mu_b) * (mu_a - mu_b);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

BilevelImage binarize(const GrayImage& img, std::optional<int> threshold) {
  const int t = threshold ? *threshold : otsu_threshold(img);
  BilevelImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.samples().size(); ++i) out.bits()[i] = img.samples()[i] < t ? 1 : 0;
  return out;
}

BilevelImage crop_to_content(const BilevelImage& img, int margin) {
  require(margin >= 0, ErrorKind::Precondition, "negative margin");
  Box b = img.ink_box();
  if (b.empty()) fail(ErrorKind::EmptyImage, "crop_to_content on blank image");
  b.x0 = std::max(0, b.x0 - margin);
  b.y0 = std::max(0, b.y0 - margin);
  b.x1 = std::min(img.width() - 1, b.x1 + margin);
  b.y1 = std::min(img.height() - 1, b.y1 + margin);
  return crop(img, b);
}

GrayImage crop_gray(const GrayImage& img, const Box& box) {
  require(!box.empty() && box.x0 >= 0 && box.y0 >= 0 && box.x1 < img.width() && box.y1 < img.height(),
          ErrorKind::OutOfBounds, "crop box outside image");
  GrayImage out(box.width(), box.height());
  for (int y = box.y0; y <= box.y1; ++y)
    for (int x = box.x0; x <= box.x1; ++x) out.set(x - box.x0, y - box.y0, img.at(x, y));
  return out;
}

std::vector<LabeledImage> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open label file " + path.string());
  std::vector<LabeledImage> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    LabeledImage rec;
    rec.path = line.substr(0, t1);
    if (rec.path.is_relative()) rec.path = path.parent_path() / rec.path;
    rec.text = line.substr(t1 + 1, t2 - t1 - 1);
    rec.script = parse_script(line.substr(t2 + 1));
    if (rec.text.empty()) fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": empty transcription");
    out.push_back(std::move(rec));
  }
  return out;
}

BilevelImage load_bilevel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] == 'P' && magic[1] == '4') return read_pbm(path);
  if (magic[0] == 'P' && magic[1] == '5') return binarize(read_pgm(path));
  fail(ErrorKind::Parse, path.string() + ": unsupported image format (PBM P4 or PGM P5 expected)");
}

}  // namespace synthhw
