#include "bcid/plot.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

struct Canvas {
  int w, h;
  std::vector<std::uint8_t> px;
  Canvas(int width, int height) : w(width), h(height), px(static_cast<std::size_t>(width * height * 3), 255) {}
  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    auto* p = &px[static_cast<std::size_t>((y * w + x) * 3)];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) err += dy, x0 += sx;
      if (e2 <= dx) err += dx, y0 += sy;
    }
  }
};

void save(const std::string& path, const Canvas& c) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw ConfigurationError("cannot write image " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw NumericError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw NumericError("libpng failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(c.w), static_cast<png_uint_32>(c.h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < c.h; ++y)
    png_write_row(png, const_cast<png_bytep>(&c.px[static_cast<std::size_t>(y * c.w * 3)]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// viridis, sampled at five stops
Rgb colormap(double t) {
  static const std::array<Rgb, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  Rgb out;
  for (int k = 0; k < 3; ++k) out[k] = static_cast<std::uint8_t>(std::lround(stops[i][k] * (1 - f) + stops[i + 1][k] * f));
  return out;
}

const std::array<Rgb, 6> kPalette{{{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {0, 0, 0}}};

}  // namespace

void write_line_plot_png(const std::string& path, const std::vector<Series>& series, bool log_y, int width, int height) {
  auto usable = [&](double y) { return std::isfinite(y) && (!log_y || y > 0); };
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.y[i]) || !std::isfinite(s.x[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  Canvas c(width, height);
  const int m = 30;
  const Rgb grey{160, 160, 160};
  c.line(m, m, width - m, m, grey);
  c.line(m, height - m, width - m, height - m, grey);
  c.line(m, m, m, height - m, grey);
  c.line(width - m, m, width - m, height - m, grey);
  if (!std::isfinite(x0)) {
    save(path, c);
    return;
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  if (log_y)  // decade ticks
    for (double d = std::ceil(y0); d <= y1; d += 1) {
      const int py = height - m - static_cast<int>(std::lround((d - y0) / (y1 - y0) * (height - 2 * m)));
      c.line(m, py, m + 6, py, grey);
    }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const Rgb col = kPalette[k % kPalette.size()];
    bool have = false;
    int px = 0, py = 0;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.y[i]) || !std::isfinite(s.x[i])) {
        have = false;
        continue;
      }
      const int qx = m + static_cast<int>(std::lround((s.x[i] - x0) / (x1 - x0) * (width - 2 * m)));
      const int qy = height - m - static_cast<int>(std::lround((ty(s.y[i]) - y0) / (y1 - y0) * (height - 2 * m)));
      if (have) c.line(px, py, qx, qy, col);
      else c.set(qx, qy, col);
      px = qx, py = qy, have = true;
    }
  }
  save(path, c);
}

void write_heatmap_png(const std::string& path, const Matrix& values, int cell_pixels) {
  if (values.size() == 0) throw ContractViolation("heatmap needs values");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (std::isfinite(values(i))) lo = std::min(lo, values(i)), hi = std::max(hi, values(i));
  const double span = hi > lo ? hi - lo : 1.0;
  const auto rows = static_cast<int>(values.rows()), cols = static_cast<int>(values.cols());
  Canvas c(cols * cell_pixels, rows * cell_pixels);
  for (int r = 0; r < rows; ++r)
    for (int q = 0; q < cols; ++q) {
      const double v = values(r, q);
      if (!std::isfinite(v)) continue;
      const Rgb col = colormap((v - lo) / span);
      for (int a = 0; a < cell_pixels; ++a)
        for (int b = 0; b < cell_pixels; ++b) c.set(q * cell_pixels + b, (rows - 1 - r) * cell_pixels + a, col);
    }
  save(path, c);
}

}  // namespace bcid
