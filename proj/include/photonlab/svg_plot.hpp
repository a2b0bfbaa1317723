#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace photonlab::svg {

enum class Style { Points, Line };

struct Series {
  std::vector<double> x, y;
  std::string label;
  Style style = Style::Points;
  std::string color = "#1f77b4";
};

struct Plot {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
};

// Static x/y chart; data points plus fitted curves.
std::string render(const Plot& plot);

// Row-major grayscale tiles side by side, each normalized to its own peak.
std::string render_images(const std::vector<std::vector<double>>& images, int grid_size,
                          const std::vector<std::string>& captions, const std::string& title);

void save(const std::filesystem::path& path, const std::string& svg);

}  // namespace photonlab::svg
