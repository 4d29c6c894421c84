#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synthhw/font.hpp"
#include "synthhw/image.hpp"

namespace synthhw {

enum class Script { Devanagari, Bengali, Latin, Other };
enum class TextKind { Numeral, Character, Word };

std::string to_string(Script s);
std::string to_string(TextKind k);
Script parse_script(const std::string& s);
TextKind parse_kind(const std::string& s);

struct FontRef {
  std::string id;
  std::filesystem::path path;
  int size_px = 150;
};

struct TextItem {
  std::string text;  // UTF-8
  Script script = Script::Latin;
  TextKind kind = TextKind::Word;
};

std::u32string decode_utf8(const std::string& s);
std::string encode_utf8(const std::u32string& s);
// Splits a UTF-8 string into one string per code point.
std::vector<std::string> utf8_chars(const std::string& s);

// Lays glyphs left to right by advance width and rasterizes them with 4x4
// supersampled non-zero winding. Margins are 5% of size_px per side.
GrayImage render_text(const TextItem& item, const Font& font, int size_px = 150);
GrayImage render_text(const TextItem& item, const FontRef& font);

// Foreground = samples strictly darker than `threshold`; nullopt selects
// Otsu's threshold.
BilevelImage binarize(const GrayImage& img, std::optional<int> threshold = std::nullopt);
int otsu_threshold(const GrayImage& img);

// Ink bounding box expanded by `margin`, clipped to the canvas.
BilevelImage crop_to_content(const BilevelImage& img, int margin = 0);
GrayImage crop_gray(const GrayImage& img, const Box& box);

// Pre-rendered ingestion: one record per line, tab-separated
// "image-path<TAB>transcription<TAB>script". Relative paths resolve against
// the label file's directory.
struct LabeledImage {
  std::filesystem::path path;
  std::string text;
  Script script = Script::Other;
};
std::vector<LabeledImage> read_label_file(const std::filesystem::path& path);
// Loads a PBM as-is, or binarizes a PGM with Otsu's threshold.
BilevelImage load_bilevel(const std::filesystem::path& path);

}  // namespace synthhw
