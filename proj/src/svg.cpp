#include "holp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace holp {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Fixed-precision text so output bytes do not depend on stream state.
std::string num(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string tick_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw Error("failed writing " + path.string());
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string heatmap_svg(const DataMatrix& m, const std::string& title) {
    const std::size_t sr = std::max<std::size_t>(1, (m.rows() + kHeatmapMaxCells - 1) / kHeatmapMaxCells);
    const std::size_t sc = std::max<std::size_t>(1, (m.cols() + kHeatmapMaxCells - 1) / kHeatmapMaxCells);
    const std::size_t rows = (m.rows() + sr - 1) / sr;
    const std::size_t cols = (m.cols() + sc - 1) / sc;

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < m.rows(); i += sr)
        for (std::size_t j = 0; j < m.cols(); j += sc) {
            lo = std::min(lo, m(i, j));
            hi = std::max(hi, m(i, j));
        }
    const bool flat = !(hi > lo);

    const double cell = std::max(1.0, 600.0 / static_cast<double>(std::max<std::size_t>({rows, cols, 1})));
    const double top = title.empty() ? 0.0 : 24.0;
    const double w = cell * static_cast<double>(cols), h = cell * static_cast<double>(rows) + top;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
       << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\" shape-rendering=\"crispEdges\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
        os << "<text x=\"4\" y=\"17\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = m(i * sr, j * sc);
            const int level = flat ? 128 : static_cast<int>(std::lround(255.0 * (1.0 - (v - lo) / (hi - lo))));
            if (level == 255) continue;  // background already white
            char color[8];
            std::snprintf(color, sizeof color, "#%02x%02x%02x", level, level, level);
            os << "<rect x=\"" << num(cell * static_cast<double>(j)) << "\" y=\""
               << num(top + cell * static_cast<double>(i)) << "\" width=\"" << num(cell) << "\" height=\""
               << num(cell) << "\" fill=\"" << color << "\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

void emit_heatmap(const DataMatrix& m, const std::filesystem::path& path, const std::string& title) {
    write_file(path, heatmap_svg(m, title));
}

std::string curves_svg(const std::vector<CurveSeries>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
    if (series.empty()) throw InvalidArgument("curves_svg: no series");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    // Degenerate ranges get a unit window centered on the value.
    if (!(xmax > xmin)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymax > ymin)) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double width = 640, height = 420;
    const double left = 64, right = 170, top = 40, bottom = 56;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width, 0) << "\" height=\""
       << num(height, 0) << "\" viewBox=\"0 0 " << num(width, 0) << ' ' << num(height, 0) << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << num(width, 0) << "\" height=\"" << num(height, 0)
       << "\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
        os << "<text x=\"" << num(left) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
           << escape(title) << "</text>\n";
    // Axes
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw)
       << "\" y2=\"" << num(top + ph) << "\" stroke=\"#000\"/>\n";
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
       << num(top + ph) << "\" stroke=\"#000\"/>\n";
    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        const double fx = xmin + (xmax - xmin) * t / kTicks;
        const double fy = ymin + (ymax - ymin) * t / kTicks;
        os << "<line x1=\"" << num(sx(fx)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(fx))
           << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"#000\"/>\n";
        os << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(top + ph + 18)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << tick_label(fx)
           << "</text>\n";
        os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy(fy)) << "\" x2=\"" << num(left)
           << "\" y2=\"" << num(sy(fy)) << "\" stroke=\"#000\"/>\n";
        os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(fy) + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << tick_label(fy)
           << "</text>\n";
    }
    if (!x_label.empty())
        os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 12)
           << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << escape(x_label)
           << "</text>\n";
    if (!y_label.empty())
        os << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" font-family=\"sans-serif\" font-size=\"12\" "
           << "text-anchor=\"middle\" transform=\"rotate(-90 16 " << num(top + ph / 2) << ")\">"
           << escape(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
        if (s.points.size() > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                if (i) os << ' ';
                os << num(sx(s.points[i].first)) << ',' << num(sy(s.points[i].second));
            }
            os << "\"/>\n";
        }
        for (const auto& [x, y] : s.points)
            os << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"3\" fill=\"" << color
               << "\"/>\n";
        const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << num(left + pw + 14) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 34)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(left + pw + 40) << "\" y=\"" << num(ly + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void emit_curves(const std::vector<CurveSeries>& series, const std::filesystem::path& path,
                 const std::string& title, const std::string& x_label, const std::string& y_label) {
    write_file(path, curves_svg(series, title, x_label, y_label));
}

}  // namespace holp
