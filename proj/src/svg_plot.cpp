#include "photonlab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "photonlab/error.hpp"

namespace photonlab::svg {

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1-2-5 tick spacing giving roughly `n` ticks.
double tick_step(double span, int n) {
  const double raw = span / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render(const Plot& plot) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::string o;
  o += fmt::format(R"s(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">)s", kW, kH);
  o += "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += fmt::format(R"s(<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>)s", kW / 2, escape(plot.title));
  o += "\n";
  o += fmt::format(R"s(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)s", kLeft, kTop, pw, ph);
  o += "\n";

  const double xs = tick_step(x1 - x0, 6), ys = tick_step(y1 - y0, 5);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1; t += xs) {
    o += fmt::format(R"s(<line x1="{0:.2f}" y1="{1}" x2="{0:.2f}" y2="{2}" stroke="black"/><text x="{0:.2f}" y="{3}" text-anchor="middle">{4:.4g}</text>)s",
                     px(t), kTop + ph, kTop + ph + 5, kTop + ph + 18, std::abs(t) < 1e-12 * xs ? 0.0 : t);
    o += "\n";
  }
  for (double t = std::ceil(y0 / ys) * ys; t <= y1; t += ys) {
    o += fmt::format(R"s(<line x1="{1}" y1="{0:.2f}" x2="{2}" y2="{0:.2f}" stroke="black"/><text x="{3}" y="{0:.2f}" text-anchor="end" dominant-baseline="middle">{4:.4g}</text>)s",
                     py(t), kLeft - 5, kLeft, kLeft - 8, std::abs(t) < 1e-12 * ys ? 0.0 : t);
    o += "\n";
  }
  o += fmt::format(R"s(<text x="{}" y="{}" text-anchor="middle">{}</text>)s", kLeft + pw / 2, kH - 10, escape(plot.xlabel));
  o += "\n";
  o += fmt::format(R"s(<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>)s", kTop + ph / 2, escape(plot.ylabel));
  o += "\n";

  int legend = 0;
  for (const auto& s : plot.series) {
    if (s.style == Style::Line) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
      }
      o += fmt::format(R"s(<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>)s", s.color, pts);
      o += "\n";
    } else {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        o += fmt::format(R"s(<circle cx="{:.2f}" cy="{:.2f}" r="2" fill="{}"/>)s", px(s.x[i]), py(s.y[i]), s.color);
      }
      o += "\n";
    }
    if (!s.label.empty()) {
      const double ly = kTop + 14 + 16 * legend++;
      o += fmt::format(R"s(<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>)s",
                       kW - kRight - 150, ly - 9, s.color, kW - kRight - 135, ly, escape(s.label));
      o += "\n";
    }
  }
  o += "</svg>\n";
  return o;
}

std::string render_images(const std::vector<std::vector<double>>& images, int grid_size,
                          const std::vector<std::string>& captions, const std::string& title) {
  const double cell = 4.0;
  const double tile = cell * grid_size;
  const double gap = 20.0;
  const double w = gap + double(images.size()) * (tile + gap);
  const double h = tile + 80.0;
  std::string o = fmt::format(R"s(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">)s", w, h);
  o += "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += fmt::format(R"s(<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>)s", w / 2, escape(title));
  o += "\n";
  for (std::size_t k = 0; k < images.size(); ++k) {
    const auto& im = images[k];
    const double peak = im.empty() ? 1.0 : std::max(*std::max_element(im.begin(), im.end()), 1e-300);
    const double ox = gap + double(k) * (tile + gap), oy = 40.0;
    for (int r = 0; r < grid_size; ++r) {
      for (int c = 0; c < grid_size; ++c) {
        const auto v = int(std::lround(255.0 * std::clamp(im[std::size_t(r * grid_size + c)] / peak, 0.0, 1.0)));
        o += fmt::format(R"s(<rect x="{}" y="{}" width="{}" height="{}" fill="rgb({},{},{})"/>)s",
                         ox + c * cell, oy + r * cell, cell, cell, v, v, v);
      }
    }
    o += "\n";
    if (k < captions.size()) {
      o += fmt::format(R"s(<text x="{}" y="{}" text-anchor="middle">{}</text>)s", ox + tile / 2, oy + tile + 20, escape(captions[k]));
      o += "\n";
    }
  }
  o += "</svg>\n";
  return o;
}

void save(const std::filesystem::path& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write plot " + path.string());
  out << svg;
  if (!out) throw IoError("failed writing plot " + path.string());
}

}  // namespace photonlab::svg
