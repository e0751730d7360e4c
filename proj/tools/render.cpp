#include "render.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace uniflg::cli {

Canvas::Canvas(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 255) {
  if (w < 1 || h < 1) throw std::invalid_argument("canvas size must be positive");
}

void Canvas::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  std::uint8_t* p = &rgb[3 * (static_cast<std::size_t>(y) * width + x)];
  p[0] = r, p[1] = g, p[2] = b;
}

void Canvas::line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // Bresenham
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    set(x0, y0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) err += dy, x0 += sx;
    if (e2 <= dx) err += dx, y0 += sy;
  }
}

void Canvas::dot(int x, int y, int radius, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (int oy = -radius; oy <= radius; ++oy)
    for (int ox = -radius; ox <= radius; ++ox)
      if (ox * ox + oy * oy <= radius * radius) set(x + ox, y + oy, r, g, b);
}

Canvas render_frame(const LandmarkSequence& y, int t, int size) {
  if (t < 0 || t >= y.frames()) throw std::out_of_range("frame " + std::to_string(t) + " out of range");
  Canvas c(size, size);
  auto px = [&](double v) { return static_cast<int>(std::lround((v + 1.0) * 0.5 * (size - 1))); };
  auto py = [&](double v) { return static_cast<int>(std::lround((1.0 - v) * 0.5 * (size - 1))); };
  const std::vector<int>& lips = y.lip_indices;
  for (std::size_t i = 0; i < lips.size(); ++i) {
    const int a = lips[i], b = lips[(i + 1) % lips.size()];
    c.line(px(y.px(t, a)), py(y.py(t, a)), px(y.px(t, b)), py(y.py(t, b)), 200, 30, 30);
  }
  const int radius = std::max(1, size / 128);
  for (int k = 0; k < y.num_points(); ++k) c.dot(px(y.px(t, k)), py(y.py(t, k)), radius, 20, 20, 20);
  return c;
}

void write_png(const std::filesystem::path& path, const Canvas& c) {
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, c.width, c.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int row = 0; row < c.height; ++row)
    png_write_row(png, const_cast<png_bytep>(c.at(0, row)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

int render_sequence(const LandmarkSequence& y, const std::filesystem::path& out_dir, int size, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  std::filesystem::create_directories(out_dir);
  int n = 0;
  char name[32];
  for (int t = 0; t < y.frames(); t += stride, ++n) {
    std::snprintf(name, sizeof name, "frame_%05d.png", t);
    write_png(out_dir / name, render_frame(y, t, size));
  }
  return n;
}

}  // namespace uniflg::cli
