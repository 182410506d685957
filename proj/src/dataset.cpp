#include "lpbf/dataset.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace lpbf {

std::vector<std::array<double, kSubdomains>> FeatureSeries::unflatten() const {
    if (width != kSubdomains) {
        throw std::invalid_argument("unflatten: series width is not 16");
    }
    std::vector<std::array<double, kSubdomains>> table(num_maps);
    for (int k = 0; k < num_maps; ++k) {
        for (int l = 0; l < kSubdomains; ++l) {
            table[k][l] = values[static_cast<std::size_t>(k) * kSubdomains + l];
        }
    }
    return table;
}

FeatureSeries FeatureSeries::flatten(const std::vector<std::array<double, kSubdomains>>& table,
                                     int mu) {
    FeatureSeries s;
    s.mu = mu;
    s.num_maps = static_cast<int>(table.size());
    s.values.reserve(table.size() * kSubdomains);
    for (const auto& row : table) {
        s.values.insert(s.values.end(), row.begin(), row.end());
    }
    return s;
}

FeatureSeries extract_features(const RunRecord& run, const SubdomainPartition& part, int mu,
                               FeatureScalar scalar) {
    const int maps = static_cast<int>(run.snapshots.size());
    if (mu < 0) {
        throw std::invalid_argument("extract_features: history length must be non-negative");
    }
    if (maps < mu + 1) {
        throw std::invalid_argument("extract_features: run has " + std::to_string(maps) +
                                    " maps, at least " + std::to_string(mu + 1) + " are required");
    }
    FeatureSeries series;
    series.mu = mu;
    series.num_maps = maps;
    series.values.reserve(static_cast<std::size_t>(maps) * kSubdomains);
    for (int k = 0; k < maps; ++k) {
        const StatsTable stats =
            subdomain_stats(std::span<const MoveSnapshot>(&run.snapshots[k], 1), part);
        for (const SubdomainStats& s : stats) {
            const double e = psi_energy(s);
            series.values.push_back(scalar == FeatureScalar::PsiNorm ? std::sqrt(e) : e);
        }
    }
    return series;
}

std::vector<double> extract_lambda(const RunRecord& run, const SubdomainPartition& part) {
    std::vector<double> out;
    out.reserve(run.snapshots.size() * kSubdomains);
    for (const MoveSnapshot& snap : run.snapshots) {
        const StatsTable stats = subdomain_stats(std::span<const MoveSnapshot>(&snap, 1), part);
        for (const SubdomainStats& s : stats) {
            out.push_back(s.lambda);
        }
    }
    return out;
}

std::string to_string(NormScheme s) {
    switch (s) {
        case NormScheme::ZScore:
            return "zscore";
        case NormScheme::ShiftOnly:
            return "shift";
        case NormScheme::None:
            return "none";
    }
    return "none";
}

NormScheme norm_scheme_from_string(const std::string& s) {
    if (s == "zscore") return NormScheme::ZScore;
    if (s == "shift") return NormScheme::ShiftOnly;
    if (s == "none") return NormScheme::None;
    throw std::invalid_argument("unknown normalization scheme '" + s + "'");
}

int train_map_count(int num_maps, double split) {
    if (!(split > 0.0 && split <= 1.0)) {
        throw std::invalid_argument("train split must lie in (0, 1]");
    }
    return std::max(1, static_cast<int>(std::floor(split * num_maps)));
}

NormStats fit_normalization(const FeatureSeries& series, int train_maps, NormScheme scheme) {
    NormStats stats;
    stats.scheme = scheme;
    if (scheme == NormScheme::None) {
        return stats;
    }
    const std::size_t n = static_cast<std::size_t>(train_maps) * series.width;
    if (n == 0 || n > series.values.size()) {
        throw std::invalid_argument("fit_normalization: training split out of range");
    }
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mean += series.values[k];
    }
    mean /= static_cast<double>(n);
    stats.shift = mean;
    if (scheme == NormScheme::ShiftOnly) {
        return stats;
    }
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = series.values[k] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    if (!(var > 0.0)) {
        std::cerr << "warning: training features have zero variance; using shift-only "
                     "normalization\n";
        stats.scheme = NormScheme::ShiftOnly;
        stats.degenerate = true;
        return stats;
    }
    stats.scale = std::sqrt(var);
    return stats;
}

std::vector<double> apply_normalization(std::span<const double> values, const NormStats& stats) {
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        out[k] = stats.apply(values[k]);
    }
    return out;
}

std::vector<double> invert_normalization(std::span<const double> values, const NormStats& stats) {
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        out[k] = stats.invert(values[k]);
    }
    return out;
}

WindowPlan make_windows(const FeatureSeries& series, double split, int window_length,
                        EvalScope scope) {
    if (series.mu < 1 || series.mu >= series.num_maps) {
        throw std::invalid_argument("make_windows: history length mu must satisfy 1 <= mu < maps (mu=" +
                                    std::to_string(series.mu) +
                                    ", maps=" + std::to_string(series.num_maps) + ")");
    }
    if (window_length < 1) {
        throw std::invalid_argument("make_windows: window length must be positive");
    }
    WindowPlan plan;
    plan.train_maps = train_map_count(series.num_maps, split);
    const int train_values = plan.train_maps * series.width;
    // the last target of a window sits at start + window_length
    for (int start = 0; start + window_length < train_values; start += series.width) {
        plan.train.push_back({start, window_length});
    }
    const int first = scope == EvalScope::All ? series.mu + 1
                                              : std::max(series.mu + 1, plan.train_maps + 1);
    for (int zeta = first; zeta <= series.num_maps; ++zeta) {
        plan.eval_maps.push_back(zeta);
    }
    return plan;
}

SampleBatch make_batch(std::span<const double> normalized, std::span<const TrainWindow> windows) {
    if (windows.empty()) {
        throw std::invalid_argument("make_batch: no windows");
    }
    const int len = windows.front().length;
    SampleBatch batch;
    batch.inputs.assign(len, std::vector<double>(windows.size()));
    batch.targets.assign(len, std::vector<double>(windows.size()));
    for (std::size_t r = 0; r < windows.size(); ++r) {
        const TrainWindow& w = windows[r];
        if (w.length != len) {
            throw std::invalid_argument("make_batch: windows differ in length");
        }
        if (w.start < 0 || static_cast<std::size_t>(w.start + w.length) >= normalized.size()) {
            throw std::invalid_argument("make_batch: window exceeds the series");
        }
        for (int t = 0; t < len; ++t) {
            batch.inputs[t][r] = normalized[w.start + t];
            batch.targets[t][r] = normalized[w.start + t + 1];
        }
    }
    return batch;
}

}  // namespace lpbf
