#include "scenevqa/raster.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace scenevqa {

namespace {

// 5x7 glyphs, one string of five bits per row.
struct Glyph {
  char ch;
  std::array<const char*, 7> rows;
};

constexpr Glyph kGlyphs[] = {
    {'0', {"01110", "10001", "10011", "10101", "11001", "10001", "01110"}},
    {'1', {"00100", "01100", "00100", "00100", "00100", "00100", "01110"}},
    {'2', {"01110", "10001", "00001", "00010", "00100", "01000", "11111"}},
    {'3', {"11111", "00010", "00100", "00010", "00001", "10001", "01110"}},
    {'4', {"00010", "00110", "01010", "10010", "11111", "00010", "00010"}},
    {'5', {"11111", "10000", "11110", "00001", "00001", "10001", "01110"}},
    {'6', {"00110", "01000", "10000", "11110", "10001", "10001", "01110"}},
    {'7', {"11111", "00001", "00010", "00100", "01000", "01000", "01000"}},
    {'8', {"01110", "10001", "10001", "01110", "10001", "10001", "01110"}},
    {'9', {"01110", "10001", "10001", "01111", "00001", "00010", "01100"}},
    {'<', {"00010", "00100", "01000", "10000", "01000", "00100", "00010"}},
    {'>', {"01000", "00100", "00010", "00001", "00010", "00100", "01000"}},
};

const Glyph* glyph(char c) {
  for (const auto& g : kGlyphs) {
    if (g.ch == c) return &g;
  }
  return nullptr;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& body) {
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), body.begin(), body.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

FontMetrics font_metrics(double scale) {
  const int px = std::max(1, static_cast<int>(std::lround(3.0 * scale)));
  return {px, 6 * px, 7 * px, 3 * px};
}

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

Rgb Image::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::fill_rect(const PixelRect& r, Rgb c) {
  const int x0 = std::max(0, r.x0());
  const int x1 = std::min(width_, r.x1());
  const int y0 = std::max(0, r.y0());
  const int y1 = std::min(height_, r.y1());
  for (int y = y0; y < y1; ++y) {
    std::uint8_t* row = data_.data() + static_cast<std::size_t>(y) * width_ * 3;
    for (int x = x0; x < x1; ++x) {
      row[3 * x] = c[0];
      row[3 * x + 1] = c[1];
      row[3 * x + 2] = c[2];
    }
  }
}

void Image::fill_polygon(const std::vector<Vec2>& pts, Rgb c) {
  if (pts.size() < 3) return;
  double ymin = pts[0].y;
  double ymax = pts[0].y;
  for (const auto& p : pts) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row0 = std::max(0, static_cast<int>(std::floor(ymin)));
  const int row1 = std::min(height_ - 1, static_cast<int>(std::ceil(ymax)));
  std::vector<double> xs;
  for (int y = row0; y <= row1; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0, n = pts.size(), j = n - 1; i < n; j = i++) {
      const Vec2& a = pts[i];
      const Vec2& b = pts[j];
      if ((a.y > yc) != (b.y > yc)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      PixelRect span{{xs[k], static_cast<double>(y)}, {xs[k + 1], static_cast<double>(y + 1)}};
      fill_rect(span, c);
    }
  }
}

void Image::stroke_rect(const PixelRect& r, int width, Rgb c) {
  const double h = width / 2.0;
  const Vec2 lo = r.min;
  const Vec2 hi = r.max;
  fill_rect({{lo.x - h, lo.y - h}, {hi.x + h, lo.y + h}}, c);
  fill_rect({{lo.x - h, hi.y - h}, {hi.x + h, hi.y + h}}, c);
  fill_rect({{lo.x - h, lo.y - h}, {lo.x + h, hi.y + h}}, c);
  fill_rect({{hi.x - h, lo.y - h}, {hi.x + h, hi.y + h}}, c);
}

void Image::draw_label(const std::string& text, Vec2 anchor, double scale, Rgb fg, Rgb bg) {
  const FontMetrics m = font_metrics(scale);
  const Vec2 size = label_text_size(text, scale);
  const Vec2 origin = anchor - size * 0.5;
  fill_rect({origin, origin + size}, bg);
  const int ox = static_cast<int>(std::lround(origin.x)) + m.padding;
  const int oy = static_cast<int>(std::lround(origin.y)) + m.padding;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph* g = glyph(text[i]);
    if (g == nullptr) continue;
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if (g->rows[row][col] != '1') continue;
        const double x = ox + static_cast<int>(i) * m.advance + col * m.pixel;
        const double y = oy + row * m.pixel;
        fill_rect({{x, y}, {x + m.pixel, y + m.pixel}}, fg);
      }
    }
  }
}

void Image::execute(const AnnotationPlan& plan) {
  for (const auto& cmd : plan.commands) {
    std::visit(
        [this](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, FillPolygon>) {
            fill_polygon(c.points, c.color);
          } else if constexpr (std::is_same_v<T, StrokeRect> || std::is_same_v<T, HighlightRect>) {
            stroke_rect(c.rect, c.width, c.color);
          } else if constexpr (std::is_same_v<T, LabelText>) {
            draw_label(c.text, c.anchor, c.scale, c.fg, c.bg);
          }
        },
        cmd);
  }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(h) * (w * 3 + 1));
  const auto& d = img.data();
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    const auto* row = d.data() + static_cast<std::size_t>(y) * w * 3;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(w) * 3);
  }
  uLongf zsize = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(zsize);
  if (compress2(z.data(), &zsize, raw.data(), static_cast<uLong>(raw.size()), Z_BEST_SPEED) != Z_OK) {
    throw std::runtime_error("zlib compression failed");
  }
  z.resize(zsize);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(w));
  put_u32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

}  // namespace scenevqa
