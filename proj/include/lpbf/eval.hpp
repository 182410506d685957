#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "lpbf/dataset.hpp"

namespace lpbf {

/// sqrt(mean((pred - truth)^2)).
double rmse_per_map(std::span<const double> pred, std::span<const double> truth);

/// RMSE per predicted map; maps[k] is the 1-based map number of values[k].
struct RmseCurve {
    std::vector<int> maps;
    std::vector<double> values;
    std::string scale = "normalized";
};

struct PercentilePick {
    int percentile = 0;
    int map = 0;
    double rmse = 0.0;
};

struct PercentileReport {
    std::array<PercentilePick, 4> picks{};
    std::string rule = "nearest-rank";
};

/// Nearest rank: the value at rank ceil(p/100 N) of the ascending sort
/// (ties keep map order), for p = 25, 50, 75, 100.
PercentileReport percentiles(const RmseCurve& curve);

/// Copies map zeta-1's features as the prediction for map zeta (1-based).
std::vector<double> persistence_baseline(const FeatureSeries& series, int zeta);

double median(std::vector<double> v);

/// Minimal line chart writer.
struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color;
    std::string label;
    bool markers = false;
};

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           int width = 800, int height = 400);

}  // namespace lpbf
