#include "acre/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace acre {
namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kBackground{255, 255, 255};
constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kCurve{31, 90, 200};

constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 20;
constexpr int kMarginBottom = 40;
constexpr int kTickLen = 5;
constexpr int kTicks = 5;

void put(Image& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * img.width + x);
  img.rgb[i] = c.r;
  img.rgb[i + 1] = c.g;
  img.rgb[i + 2] = c.b;
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  // Bresenham.
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_dot(Image& img, int x, int y, Rgb c) {
  for (int oy = -1; oy <= 1; ++oy)
    for (int ox = -1; ox <= 1; ++ox) put(img, x + ox, y + oy, c);
}

void draw_axes(Image& img) {
  const int x0 = kMarginLeft, x1 = img.width - 1 - kMarginRight;
  const int y0 = kMarginTop, y1 = img.height - 1 - kMarginBottom;
  draw_line(img, x0, y0, x0, y1, kAxis);
  draw_line(img, x0, y1, x1, y1, kAxis);
  for (int k = 0; k <= kTicks; ++k) {
    const int tx = x0 + (x1 - x0) * k / kTicks;
    const int ty = y1 - (y1 - y0) * k / kTicks;
    draw_line(img, tx, y1, tx, y1 + kTickLen, kAxis);
    draw_line(img, x0 - kTickLen, ty, x0, ty, kAxis);
  }
}

}  // namespace

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= static_cast<std::size_t>(window)) acc -= values[i - window];
    const std::size_t span = std::min<std::size_t>(i + 1, window);
    out[i] = acc / static_cast<double>(span);
  }
  return out;
}

Image render_learning_curve(const std::vector<MetricsRow>& rows, const PlotOptions& opts) {
  if (opts.width < kMarginLeft + kMarginRight + 20 ||
      opts.height < kMarginTop + kMarginBottom + 20)
    throw std::invalid_argument("render_learning_curve: image too small");
  Image img{opts.width, opts.height, {}};
  img.rgb.assign(3 * static_cast<std::size_t>(opts.width) * opts.height, 0);
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = kBackground.r;
    img.rgb[i + 1] = kBackground.g;
    img.rgb[i + 2] = kBackground.b;
  }
  draw_axes(img);
  if (rows.empty()) return img;

  std::vector<double> xs(rows.size()), raw(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    xs[i] = static_cast<double>(rows[i].step);
    raw[i] = rows[i].mean_return;
  }
  const std::vector<double> ys = moving_average(raw, opts.window);

  double x_lo = *std::min_element(xs.begin(), xs.end());
  double x_hi = *std::max_element(xs.begin(), xs.end());
  double y_lo = *std::min_element(ys.begin(), ys.end());
  double y_hi = *std::max_element(ys.begin(), ys.end());
  if (x_hi <= x_lo) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }
  if (y_hi <= y_lo) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }

  const int px0 = kMarginLeft, px1 = opts.width - 1 - kMarginRight;
  const int py0 = kMarginTop, py1 = opts.height - 1 - kMarginBottom;
  const auto to_px = [&](double x) {
    return px0 + static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * (px1 - px0)));
  };
  const auto to_py = [&](double y) {
    return py1 - static_cast<int>(std::lround((y - y_lo) / (y_hi - y_lo) * (py1 - py0)));
  };

  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    draw_line(img, to_px(xs[i]), to_py(ys[i]), to_px(xs[i + 1]), to_py(ys[i + 1]), kCurve);
  for (std::size_t i = 0; i < rows.size(); ++i) draw_dot(img, to_px(xs[i]), to_py(ys[i]), kCurve);
  return img;
}

void write_bmp(const std::string& path, const Image& img) {
  const int row_bytes = (3 * img.width + 3) / 4 * 4;
  const std::uint32_t pixel_bytes = static_cast<std::uint32_t>(row_bytes) * img.height;
  const std::uint32_t file_size = 54 + pixel_bytes;

  std::uint8_t header[54] = {};
  const auto put32 = [&](int at, std::uint32_t v) {
    header[at] = v & 0xff;
    header[at + 1] = (v >> 8) & 0xff;
    header[at + 2] = (v >> 16) & 0xff;
    header[at + 3] = (v >> 24) & 0xff;
  };
  header[0] = 'B';
  header[1] = 'M';
  put32(2, file_size);
  put32(10, 54);              // pixel data offset
  put32(14, 40);              // BITMAPINFOHEADER
  put32(18, static_cast<std::uint32_t>(img.width));
  put32(22, static_cast<std::uint32_t>(img.height));
  header[26] = 1;             // planes
  header[28] = 24;            // bits per pixel
  put32(34, pixel_bytes);
  put32(38, 2835);            // 72 dpi
  put32(42, 2835);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_bmp: cannot open " + path);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<char> row(row_bytes, 0);
  // BMP stores rows bottom-up in BGR order.
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = 3 * (static_cast<std::size_t>(y) * img.width + x);
      row[3 * x] = static_cast<char>(img.rgb[i + 2]);
      row[3 * x + 1] = static_cast<char>(img.rgb[i + 1]);
      row[3 * x + 2] = static_cast<char>(img.rgb[i]);
    }
    out.write(row.data(), row_bytes);
  }
  out.flush();
  if (!out) throw std::runtime_error("write_bmp: short write to " + path);
}

int run_plot(const std::string& csv_path, const std::string& img_path, int window) {
  if (window < 1) throw std::invalid_argument("plot: window must be >= 1");
  const std::vector<MetricsRow> rows = parse_metrics_csv(csv_path);
  PlotOptions opts;
  opts.window = window;
  write_bmp(img_path, render_learning_curve(rows, opts));
  std::printf("[plot] %s: %zu rows -> %s\n", csv_path.c_str(), rows.size(), img_path.c_str());
  return 0;
}

}  // namespace acre
