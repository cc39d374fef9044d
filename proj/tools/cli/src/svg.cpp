#include "svg.hpp"

#include "nlsd/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace nlsd::cli {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 50;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string escape(const std::string &s) {
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

} // namespace

void write_svg(std::ostream &out, const Chart &chart) {
    auto ty = [&](double v) { return chart.log_y ? std::log10(v) : v; };
    auto usable = [&](double v) { return std::isfinite(v) && (!chart.log_y || v > 0.0); };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto &s : chart.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (!(x0 <= x1)) {
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << escape(chart.title) << "</text>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#444\"/>\n";

    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5.0;
        const double yv = y0 + (y1 - y0) * k / 5.0;
        out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
            << io::format_double(std::round(xv * 100) / 100) << "</text>\n";
        char label[32];
        std::snprintf(label, sizeof label, "%.3g", chart.log_y ? std::pow(10.0, yv) : yv);
        out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << label
            << "</text>\n";
        out << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kLeft + pw) << "\" y1=\"" << num(py(yv))
            << "\" y2=\"" << num(py(yv)) << "\" stroke=\"#ddd\"/>\n";
    }
    out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
        << escape(chart.x_label) << "</text>\n";
    out << "<text transform=\"translate(16," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(chart.y_label) << "</text>\n";

    int legend = 0;
    for (const auto &s : chart.series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.y[i])) continue;
            if (s.markers) {
                out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(ty(s.y[i])))
                    << "\" r=\"2\" fill=\"" << s.color << "\"/>\n";
            } else {
                pts += num(px(s.x[i])) + "," + num(py(ty(s.y[i]))) + " ";
            }
        }
        if (!s.markers && !pts.empty()) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\""
                << (s.dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"" << pts << "\"/>\n";
        }
        const double ly = kTop + 10 + 16 * legend++;
        out << "<line x1=\"" << num(kWidth - kRight + 12) << "\" x2=\"" << num(kWidth - kRight + 32) << "\" y1=\""
            << num(ly) << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
            << (s.dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
        out << "<text x=\"" << num(kWidth - kRight + 38) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name)
            << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace nlsd::cli
