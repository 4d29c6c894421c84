#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace synthhw {

// A flattened glyph outline in font units (y up). Each contour is closed.
struct GlyphOutline {
  std::vector<std::vector<std::pair<double, double>>> contours;
};

// Minimal TrueType ('glyf' flavoured sfnt) reader: character map, horizontal
// metrics and quadratic outlines, including composite glyphs. CFF-flavoured
// OpenType files are rejected with FontLoadError.
class Font {
 public:
  static Font load(const std::filesystem::path& path);
  static Font from_bytes(std::vector<std::uint8_t> bytes, std::string name = "memory");

  const std::string& name() const { return name_; }
  int units_per_em() const { return units_per_em_; }
  int ascender() const { return ascender_; }
  int descender() const { return descender_; }
  int glyph_count() const { return num_glyphs_; }

  // 0 when the font has no mapping for `cp`.
  std::uint32_t glyph_index(char32_t cp) const;
  int advance_width(std::uint32_t glyph) const;
  // Quadratic curves are flattened with `tolerance` font units of chord error.
  GlyphOutline outline(std::uint32_t glyph, double tolerance = 2.0) const;

 private:
  struct Table {
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
  };

  Font() = default;
  void parse();
  std::uint32_t glyph_offset(std::uint32_t glyph, std::uint32_t& length) const;
  void append_outline(std::uint32_t glyph, const double m[6], double tolerance, int depth, GlyphOutline& out) const;

  std::uint8_t u8(std::size_t off) const;
  std::uint16_t u16(std::size_t off) const;
  std::int16_t i16(std::size_t off) const { return static_cast<std::int16_t>(u16(off)); }
  std::uint32_t u32(std::size_t off) const;

  std::string name_;
  std::vector<std::uint8_t> data_;
  Table glyf_, loca_, hmtx_, cmap_;
  int units_per_em_ = 0;
  int index_to_loc_format_ = 0;
  int num_glyphs_ = 0;
  int num_hmetrics_ = 0;
  int ascender_ = 0;
  int descender_ = 0;
  std::uint32_t cmap_subtable_ = 0;
  int cmap_format_ = 0;
};

}  // namespace synthhw
