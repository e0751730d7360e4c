#pragma once

// Stick-figure frames of landmark sequences for quick inspection.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uniflg/types.hpp"

namespace uniflg::cli {

struct Canvas {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Canvas(int w, int h);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  const std::uint8_t* at(int x, int y) const { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
  void line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void dot(int x, int y, int radius, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Face coordinates in [-1, 1] (y up) mapped onto a size x size canvas.
/// Keypoints are dots; the lip loop is closed in red.
Canvas render_frame(const LandmarkSequence& y, int t, int size);

void write_png(const std::filesystem::path& path, const Canvas& c);

/// Writes frame_NNNNN.png for every `stride`-th frame; returns the count.
int render_sequence(const LandmarkSequence& y, const std::filesystem::path& out_dir, int size, int stride);

}  // namespace uniflg::cli
