#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace synthhw {

struct Point {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
  friend constexpr auto operator<=>(const Point& a, const Point& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

// Inclusive pixel box.
struct Box {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool empty() const { return x1 < x0 || y1 < y0; }
  friend bool operator==(const Box&, const Box&) = default;
};

// Row-major foreground mask; 1 = ink.
class BilevelImage {
 public:
  BilevelImage() = default;
  BilevelImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  // Out-of-canvas reads are background.
  bool get(int x, int y) const { return contains(x, y) && at(x, y); }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }

  std::size_t count() const;
  Box ink_box() const;

  friend bool operator==(const BilevelImage&, const BilevelImage&) = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Row-major 8-bit intensities; rendered text is dark ink on a light ground.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 255);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t at(int x, int y) const { return samples_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, std::uint8_t v) { samples_[static_cast<std::size_t>(y) * width_ + x] = v; }

  std::span<const std::uint8_t> samples() const { return samples_; }
  std::span<std::uint8_t> samples() { return samples_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> samples_;
};

struct Component {
  Box box;
  std::vector<Point> pixels;  // raster order

  // Mask cropped to `box`.
  BilevelImage mask() const;
};

enum class Connectivity { Four = 4, Eight = 8 };

// 8-connected digital line from p0 to p1 inclusive. Endpoint order does not
// change the produced point set.
std::vector<Point> bresenham_line(Point p0, Point p1);

// Components ordered by their first pixel in raster order.
std::vector<Component> connected_components(const BilevelImage& img,
                                            Connectivity conn = Connectivity::Eight);
std::size_t count_components(const BilevelImage& img, Connectivity conn = Connectivity::Eight);

std::vector<int> horizontal_projection(const BilevelImage& img);
std::vector<int> vertical_projection(const BilevelImage& img);

GrayImage resize_gray(const GrayImage& img, int width, int height);

// Shifts column c in [start_col, end_col] down by round(slope * (c - start_col)).
// Pixels leaving the canvas are dropped.
BilevelImage shear_columns(const BilevelImage& img, int start_col, int end_col, double vertical_slope);

// Shifts every column c down by offsets[c]; offsets.size() must equal width.
BilevelImage displace_columns(const BilevelImage& img, std::span<const int> offsets);

BilevelImage crop(const BilevelImage& img, const Box& box);
BilevelImage pad(const BilevelImage& img, int left, int top, int right, int bottom);
// Stacks images of equal width top to bottom.
BilevelImage stack_rows(std::span<const BilevelImage> parts);

// Ink -> 0, background -> 255.
GrayImage to_gray(const BilevelImage& img);

// Rounds half away from zero; odd-symmetric so opposite shears cancel.
inline int round_symmetric(double v) { return static_cast<int>(std::lround(v)); }

// PBM (P4) / PGM (P5) binary formats.
void write_pbm(const BilevelImage& img, const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
BilevelImage read_pbm(const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pbm(const BilevelImage& img);

}  // namespace synthhw
