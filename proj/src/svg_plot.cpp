#include "faa/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace faa::plot {
namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 24.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 48.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool valid() const { return lo <= hi; }
};

/// step of 1, 2, or 5 times a power of ten giving roughly `target` intervals
double nice_step(double span, int target) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    double step = 10.0;
    if (frac <= 1.0) step = 1.0;
    else if (frac <= 2.0) step = 2.0;
    else if (frac <= 5.0) step = 5.0;
    return step * mag;
}

std::string svg_header(const std::string& title) {
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + fmt(kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" + title +
         "</text>\n";
    return s;
}

}  // namespace

std::string line_plot(const std::string& title, const std::string& y_label,
                      const std::vector<Series>& series, bool log_y) {
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;

    auto transform = [log_y](double y) -> double {
        if (!std::isfinite(y)) return std::numeric_limits<double>::quiet_NaN();
        if (!log_y) return y;
        if (y <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        return std::log10(y);
    };

    Range xr, yr;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            const double t = transform(s.ys[i]);
            if (std::isnan(t)) continue;
            xr.expand(s.xs[i]);
            yr.expand(t);
        }
    }

    std::string svg = svg_header(title);
    if (!xr.valid() || !yr.valid()) {
        svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"" + fmt(kHeight / 2) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">no plottable "
               "data</text>\n</svg>\n";
        return svg;
    }
    if (xr.hi == xr.lo) xr.hi = xr.lo + 1.0;
    if (yr.hi == yr.lo) {
        yr.lo -= 0.5;
        yr.hi += 0.5;
    }

    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double t) { return kTop + ph - (t - yr.lo) / (yr.hi - yr.lo) * ph; };

    svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) +
           "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"#333333\"/>\n";

    const double xstep = nice_step(xr.hi - xr.lo, 6);
    for (double x = std::ceil(xr.lo / xstep) * xstep; x <= xr.hi + 1e-9 * xstep; x += xstep) {
        const double cx = px(x);
        svg += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(cx) +
               "\" y2=\"" + fmt(kTop + ph + 5) + "\" stroke=\"#333333\"/>\n";
        svg += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(kTop + ph + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(x) +
               "</text>\n";
    }
    svg += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 10) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">iteration k</text>\n";

    if (log_y) {
        const int d0 = static_cast<int>(std::ceil(yr.lo - 1e-9));
        const int d1 = static_cast<int>(std::floor(yr.hi + 1e-9));
        const int span = std::max(1, d1 - d0);
        const int dstep = (span + 9) / 10;
        for (int d = d0; d <= d1; d += std::max(1, dstep)) {
            const double cy = py(static_cast<double>(d));
            svg += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(cy) + "\" x2=\"" + fmt(kLeft) +
                   "\" y2=\"" + fmt(cy) + "\" stroke=\"#333333\"/>\n";
            svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(cy) + "\" x2=\"" + fmt(kLeft + pw) +
                   "\" y2=\"" + fmt(cy) + "\" stroke=\"#dddddd\"/>\n";
            svg += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(cy + 4) +
                   "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" +
                   std::to_string(d) + "</text>\n";
        }
    } else {
        const double ystep = nice_step(yr.hi - yr.lo, 5);
        for (double t = std::ceil(yr.lo / ystep) * ystep; t <= yr.hi + 1e-9 * ystep; t += ystep) {
            const double cy = py(t);
            svg += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(cy) + "\" x2=\"" + fmt(kLeft) +
                   "\" y2=\"" + fmt(cy) + "\" stroke=\"#333333\"/>\n";
            svg += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(cy + 4) +
                   "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(t) +
                   "</text>\n";
        }
    }
    svg += "<text x=\"16\" y=\"" + fmt(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fmt(kTop + ph / 2) + ")\" font-family=\"sans-serif\" font-size=\"12\">" + y_label +
           "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kPalette[si % kPaletteSize];
        std::string points;
        auto flush = [&]() {
            if (!points.empty()) {
                svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
                       "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
                points.clear();
            }
        };
        for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
            const double t = transform(s.ys[i]);
            if (std::isnan(t)) {
                flush();
                continue;
            }
            if (!points.empty()) points += ' ';
            points += fmt(px(s.xs[i])) + "," + fmt(py(t));
        }
        flush();
        const double ly = kTop + 14 + 16 * static_cast<double>(si);
        svg += "<line x1=\"" + fmt(kLeft + pw - 150) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
               fmt(kLeft + pw - 126) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(kLeft + pw - 120) + "\" y=\"" + fmt(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string kept_columns_raster(const std::string& title,
                                const std::vector<std::size_t>& iteration_index,
                                const std::vector<std::vector<bool>>& masks) {
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    const std::size_t n = std::min(iteration_index.size(), masks.size());

    std::size_t depth = 0;
    for (std::size_t i = 0; i < n; ++i) depth = std::max(depth, masks[i].size());

    std::string svg = svg_header(title);
    if (n == 0 || depth == 0) {
        svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"" + fmt(kHeight / 2) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">no column "
               "history</text>\n</svg>\n";
        return svg;
    }

    const double cw = pw / static_cast<double>(n);
    const double ch = ph / static_cast<double>(depth);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < masks[i].size(); ++j) {
            if (!masks[i][j]) continue;
            const double x = kLeft + cw * static_cast<double>(i);
            const double y = kTop + ph - ch * static_cast<double>(j + 1);
            svg += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(cw) +
                   "\" height=\"" + fmt(ch) + "\" fill=\"#1f77b4\"/>\n";
        }
    }
    svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) +
           "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"#333333\"/>\n";

    const double xstep = nice_step(static_cast<double>(iteration_index[n - 1]), 6);
    for (double x = 0.0; x <= static_cast<double>(iteration_index[n - 1]) + 1e-9; x += xstep) {
        // place the tick at the cell whose iteration index is nearest
        std::size_t best = 0;
        double bestd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(static_cast<double>(iteration_index[i]) - x);
            if (d < bestd) {
                bestd = d;
                best = i;
            }
        }
        const double cx = kLeft + cw * (static_cast<double>(best) + 0.5);
        svg += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(kTop + ph + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(x) +
               "</text>\n";
    }
    svg += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 10) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">iteration k</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fmt(kTop + ph / 2) + ")\" font-family=\"sans-serif\" font-size=\"12\">history slot (newest at "
           "bottom)</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace faa::plot
