#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acre/metrics.hpp"

namespace acre {

struct PlotOptions {
  int width = 800;
  int height = 500;
  int window = 10;  // trailing moving-average span, >= 1
};

// Top-down RGB raster, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

// Trailing moving average: out[i] = mean(values[max(0, i-w+1) .. i]).
std::vector<double> moving_average(const std::vector<double>& values, int window);

// Learning curve: smoothed mean_return against env steps, with axes and tick
// marks. No rows still draws the empty axes frame.
Image render_learning_curve(const std::vector<MetricsRow>& rows, const PlotOptions& opts);

// Uncompressed 24-bit BMP (rows bottom-up, 4-byte aligned).
void write_bmp(const std::string& path, const Image& img);

int run_plot(const std::string& csv_path, const std::string& img_path, int window);

}  // namespace acre
