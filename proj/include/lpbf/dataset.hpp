#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "lpbf/features.hpp"
#include "lpbf/heatsim.hpp"

namespace lpbf {

enum class FeatureScalar {
    PsiSquared,  // ||Psi||^2
    PsiNorm,     // ||Psi||
};

/// Per-map gradient features flattened map-major: value (map k, sub-domain l)
/// sits at k * width + l. `width` is 16 for heat maps.
struct FeatureSeries {
    std::vector<double> values;
    int num_maps = 0;
    int mu = 14;
    int width = kSubdomains;

    int history_length() const { return mu * width; }
    std::span<const double> map(int k) const {
        return std::span<const double>(values).subspan(static_cast<std::size_t>(k) * width,
                                                       width);
    }
    std::vector<std::array<double, kSubdomains>> unflatten() const;
    static FeatureSeries flatten(const std::vector<std::array<double, kSubdomains>>& table, int mu);
};

/// One scalar per (map, sub-domain). Each snapshot is its own window.
FeatureSeries extract_features(const RunRecord& run, const SubdomainPartition& part, int mu,
                               FeatureScalar scalar = FeatureScalar::PsiSquared);

/// Lambda (mean temperature) per (map, sub-domain), same layout as the features.
std::vector<double> extract_lambda(const RunRecord& run, const SubdomainPartition& part);

enum class NormScheme { ZScore, ShiftOnly, None };

struct NormStats {
    NormScheme scheme = NormScheme::ZScore;
    double shift = 0.0;
    double scale = 1.0;
    bool degenerate = false;  // zero variance forced a shift-only fallback

    double apply(double v) const { return (v - shift) / scale; }
    double invert(double v) const { return v * scale + shift; }
};

std::string to_string(NormScheme s);
NormScheme norm_scheme_from_string(const std::string& s);

/// Number of leading maps in the training split: floor(split * num_maps).
int train_map_count(int num_maps, double split);

/// Fits normalization on the first `train_maps` maps only.
NormStats fit_normalization(const FeatureSeries& series, int train_maps, NormScheme scheme);

std::vector<double> apply_normalization(std::span<const double> values, const NormStats& stats);
std::vector<double> invert_normalization(std::span<const double> values, const NormStats& stats);

/// A training window over the flattened series: inputs values[start .. start+length-1],
/// targets values[start+1 .. start+length].
struct TrainWindow {
    int start = 0;
    int length = 0;
};

struct WindowPlan {
    std::vector<TrainWindow> train;
    std::vector<int> eval_maps;  // 1-based map numbers, first is mu + 1
    int train_maps = 0;
};

enum class EvalScope { All, Holdout };

/// Training windows start at every map boundary and are `window_length` long;
/// a window is kept when all its targets lie inside the training split.
/// Evaluation covers 1-based maps mu+1 .. num_maps (or only those past the
/// split for Holdout).
WindowPlan make_windows(const FeatureSeries& series, double split, int window_length,
                        EvalScope scope = EvalScope::All);

/// b sequences of aligned inputs and next-value targets, time-major:
/// inputs[t][r] is row r at step t.
struct SampleBatch {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    int steps() const { return static_cast<int>(inputs.size()); }
    int rows() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().size()); }
};

/// Builds one batch from the given windows (all must share a length).
SampleBatch make_batch(std::span<const double> normalized, std::span<const TrainWindow> windows);

}  // namespace lpbf
