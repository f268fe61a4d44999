#include "ofesim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ofesim {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

std::string text(double x, double y, const std::string& s, int size, const char* anchor = "middle",
                 double rotate = 0.0) {
    std::string out = "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
                      "\" text-anchor=\"" + anchor + "\"";
    if (rotate != 0.0) out += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    return out + ">" + escape(s) + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke = "#333") {
    return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

std::string rect(double x, double y, double w, double h, const char* fill) {
    return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"" + fill + "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
}

std::string open(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\" "
           "font-family=\"sans-serif\">\n<rect width=\"800\" height=\"600\" fill=\"white\"/>\n" +
           text(kWidth / 2, 24, title, 16);
}

const char* kPalette[] = {"#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462"};

}  // namespace

std::string boxplot_svg(const std::string& title, const std::vector<BoxplotPanel>& panels) {
    std::string out = open(title);
    if (panels.empty()) return out + "</svg>\n";
    const double left = 50.0, top = 50.0, bottom = 130.0, gap = 20.0;
    const double panel_w = (kWidth - left - 20.0 - gap * static_cast<double>(panels.size() - 1)) /
                           static_cast<double>(panels.size());
    const double plot_h = kHeight - top - bottom;

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double x0 = left + static_cast<double>(p) * (panel_w + gap);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& b : panel.boxes) {
            lo = std::min(lo, b.min);
            hi = std::max(hi, b.max);
            for (double v : b.outliers) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

        out += rect(x0, top, panel_w, plot_h, "none");
        out += text(x0 + panel_w / 2, top - 8, panel.title, 12);
        for (int t = 0; t <= 4; ++t) {
            const double v = lo + (hi - lo) * t / 4.0;
            out += line(x0 - 4, y_of(v), x0, y_of(v));
            out += text(x0 - 6, y_of(v) + 4, num(v), 9, "end");
        }
        const double slot = panel_w / static_cast<double>(std::max<std::size_t>(panel.boxes.size(), 1));
        for (std::size_t i = 0; i < panel.boxes.size(); ++i) {
            const auto& b = panel.boxes[i];
            const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
            const double half = slot * 0.3;
            out += line(cx, y_of(b.max), cx, y_of(b.q3));
            out += line(cx, y_of(b.q1), cx, y_of(b.min));
            out += line(cx - half / 2, y_of(b.max), cx + half / 2, y_of(b.max));
            out += line(cx - half / 2, y_of(b.min), cx + half / 2, y_of(b.min));
            out += rect(cx - half, y_of(b.q3), 2 * half, std::max(y_of(b.q1) - y_of(b.q3), 0.5),
                        kPalette[i % std::size(kPalette)]);
            out += line(cx - half, y_of(b.median), cx + half, y_of(b.median), "#000");
            for (double v : b.outliers) {
                out += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(y_of(v)) +
                       "\" r=\"1.5\" fill=\"none\" stroke=\"#333\"/>\n";
            }
            out += text(cx, top + plot_h + 10, b.group, 8, "end", -60.0);
        }
    }
    out += text(14, top + plot_h / 2, "ln(MSE)", 12, "middle", -90.0);
    return out + "</svg>\n";
}

std::string histogram_svg(const std::string& title, const std::vector<HistogramPanel>& panels, int lower,
                          int upper) {
    std::string out = open(title);
    if (panels.empty()) return out + "</svg>\n";
    const double left = 60.0, right = 20.0, top = 45.0, bottom = 40.0, gap = 25.0;
    const double plot_w = kWidth - left - right;
    const double panel_h = (kHeight - top - bottom - gap * static_cast<double>(panels.size() - 1)) /
                           static_cast<double>(panels.size());
    const double bin_w = plot_w / static_cast<double>(upper - lower + 1);

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double y0 = top + static_cast<double>(p) * (panel_h + gap);
        std::size_t peak = 1;
        for (const auto& [bin, count] : panel.bins) peak = std::max(peak, count);
        out += rect(left, y0, plot_w, panel_h, "none");
        out += text(left + plot_w / 2, y0 + 12, panel.title, 11);
        out += text(left - 6, y0 + 10, std::to_string(peak), 9, "end");
        out += text(left - 6, y0 + panel_h, "0", 9, "end");
        for (const auto& [bin, count] : panel.bins) {
            if (bin < lower || bin > upper) continue;
            const double h = (panel_h - 16.0) * static_cast<double>(count) / static_cast<double>(peak);
            out += rect(left + bin_w * (bin - lower), y0 + panel_h - h, bin_w, h, "#80b1d3");
        }
    }
    const double axis_y = kHeight - bottom;
    for (int t = lower; t <= upper; t += std::max(1, (upper - lower) / 8)) {
        const double x = left + bin_w * (t - lower + 0.5);
        out += line(x, axis_y, x, axis_y + 4);
        out += text(x, axis_y + 16, std::to_string(t), 10);
    }
    out += text(left + plot_w / 2, kHeight - 6, "selected bandwidth (grid units)", 12);
    out += text(16, top + (kHeight - top - bottom) / 2, "count", 12, "middle", -90.0);
    return out + "</svg>\n";
}

}  // namespace ofesim
