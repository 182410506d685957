#include "lpbf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lpbf {

double rmse_per_map(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw std::invalid_argument("rmse_per_map: length mismatch");
    }
    double sq = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = pred[k] - truth[k];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(pred.size()));
}

PercentileReport percentiles(const RmseCurve& curve) {
    if (curve.values.empty() || curve.values.size() != curve.maps.size()) {
        throw std::invalid_argument("percentiles: empty or inconsistent curve");
    }
    const std::size_t n = curve.values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return curve.values[a] < curve.values[b]; });

    PercentileReport report;
    const std::array<int, 4> ps{25, 50, 75, 100};
    for (std::size_t k = 0; k < ps.size(); ++k) {
        // ceil(p n / 100) in integer arithmetic
        std::size_t rank = (static_cast<std::size_t>(ps[k]) * n + 99) / 100;
        rank = std::clamp<std::size_t>(rank, 1, n);
        const std::size_t idx = order[rank - 1];
        report.picks[k] = {ps[k], curve.maps[idx], curve.values[idx]};
    }
    return report;
}

std::vector<double> persistence_baseline(const FeatureSeries& series, int zeta) {
    if (zeta < 2 || zeta > series.num_maps) {
        throw std::invalid_argument("persistence_baseline: map index out of range");
    }
    const auto prev = series.map(zeta - 2);
    return {prev.begin(), prev.end()};
}

double median(std::vector<double> v) {
    if (v.empty()) {
        throw std::invalid_argument("median of empty set");
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           int width, int height) {
    const double left = 70, right = 20, top = 40, bottom = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return top + ph - (v - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"15\">"
       << escape(title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << yv
           << "</text>\n";
        os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << xv
           << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label)
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
       << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape(y_label) << "</text>\n";

    int legend = 0;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            os << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
        }
        os << "\"/>\n";
        if (s.markers) {
            for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
                os << "<text x=\"" << px(s.x[k]) << "\" y=\"" << py(s.y[k]) + 4
                   << "\" text-anchor=\"middle\" font-size=\"12\" fill=\"" << s.color
                   << "\">&#215;</text>\n";
            }
        }
        if (!s.label.empty()) {
            const double ly = top + 14 + 16 * legend++;
            os << "<line x1=\"" << left + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + 30
               << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << left + 36 << "\" y=\"" << ly
               << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label)
               << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace lpbf
