#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "holp/matrix.hpp"

namespace holp {

inline constexpr std::size_t kHeatmapMaxCells = 1000;

/// Grayscale heatmap: the maximum maps to black, the minimum to white, a
/// constant matrix to mid-gray. Matrices larger than 1000 per side are
/// subsampled with stride ceil(dim / 1000).
std::string heatmap_svg(const DataMatrix& m, const std::string& title = {});
void emit_heatmap(const DataMatrix& m, const std::filesystem::path& path,
                  const std::string& title = {});

struct CurveSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

std::string curves_svg(const std::vector<CurveSeries>& series, const std::string& title = {},
                       const std::string& x_label = {}, const std::string& y_label = {});
void emit_curves(const std::vector<CurveSeries>& series, const std::filesystem::path& path,
                 const std::string& title = {}, const std::string& x_label = {},
                 const std::string& y_label = {});

}  // namespace holp
