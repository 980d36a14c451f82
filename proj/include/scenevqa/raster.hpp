#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenevqa/annotation.hpp"

namespace scenevqa {

/// 8-bit RGB image, row-major, origin top-left.
class Image {
 public:
  Image(int width, int height, Rgb fill = kBlack);

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb at(int x, int y) const;
  const std::vector<std::uint8_t>& data() const { return data_; }

  void fill_rect(const PixelRect& r, Rgb c);
  /// Covers pixels whose centres fall inside the polygon (even-odd rule).
  void fill_polygon(const std::vector<Vec2>& pts, Rgb c);
  /// Band of `width` pixels centred on the rectangle outline.
  void stroke_rect(const PixelRect& r, int width, Rgb c);
  /// Background box plus bitmap glyphs, centred on `anchor`.
  void draw_label(const std::string& text, Vec2 anchor, double scale, Rgb fg, Rgb bg);

  void execute(const AnnotationPlan& plan);

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Deterministic PNG encoding (truecolor, no interlace).
std::vector<std::uint8_t> encode_png(const Image& img);

/// Glyph grid metrics for the built-in bitmap font, which covers the digits
/// and angle brackets used by label text.
struct FontMetrics {
  int pixel;      // size of one glyph cell in pixels
  int advance;    // horizontal distance between glyph origins
  int glyph_h;
  int padding;    // background margin around the text
};
FontMetrics font_metrics(double scale);

}  // namespace scenevqa
