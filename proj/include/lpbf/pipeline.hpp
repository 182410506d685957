#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "lpbf/dataset.hpp"
#include "lpbf/eval.hpp"
#include "lpbf/features.hpp"
#include "lpbf/heatsim.hpp"
#include "lpbf/lstm.hpp"
#include "lpbf/tour.hpp"

namespace lpbf {

struct PipelineConfig {
    std::uint64_t seed = 42;
    int threads = 1;
    std::string output_dir = "out";

    SimulationSetup simulation{};
    int stop_grid_side = 16;

    double target_temperature = 600.0;
    LambdaMode lambda_mode = LambdaMode::TimeMean;
    PsiNorm psi_norm = PsiNorm::SummedVector;

    AnnealSchedule anneal{};  // seed is derived from the master seed
    int anneal_restarts = 1;

    int mu = 14;
    double split = 0.7;
    NormScheme normalization = NormScheme::ZScore;
    FeatureScalar feature = FeatureScalar::PsiSquared;
    /// Truncated-BPTT window in values; non-positive selects mu * 16.
    int window_length = 0;

    TrainConfig train{};  // seed is derived from the master seed
    EvalScope eval_scope = EvalScope::All;

    /// Throws ConfigError.
    void validate() const;
    int resolved_window_length() const;
    std::uint64_t tour_seed() const;
    std::uint64_t train_seed() const;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
/// Overlays `j` on the defaults; unknown keys and bad types raise ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
/// Hex FNV-1a of the canonical config JSON, excluding output_dir and threads.
std::string config_hash(const PipelineConfig& cfg);

/// Artifact locations under the output directory.
struct ArtifactPaths {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.json"; }
    std::filesystem::path raster_run() const { return root / "run_raster"; }
    std::filesystem::path tour_run() const { return root / "run_tour"; }
    std::filesystem::path tour_dir() const { return root / "tour"; }
    std::filesystem::path dataset_dir() const { return root / "dataset"; }
    std::filesystem::path model_dir() const { return root / "model"; }
    std::filesystem::path predictions_dir() const { return root / "predictions"; }
    std::filesystem::path evaluation_dir() const { return root / "evaluation"; }
};

enum class TourSource { Raster, TourFile };

struct SimulateSummary {
    std::filesystem::path run_dir;
    int moves = 0;
    double objective = 0.0;
};

/// Raster runs go to run_raster/, tour-file runs to run_tour/.
SimulateSummary cmd_simulate(const PipelineConfig& cfg, TourSource source,
                             const std::optional<std::filesystem::path>& tour_file = {});

struct TourSummary {
    double raster_cost = 0.0;
    double final_cost = 0.0;
    double lower_bound = 0.0;
    Tour tour;
};

/// Builds stop costs and the penalty matrix from run_raster/ and anneals from
/// the raster order. Writes tour/{stop_costs,penalty_matrix,tour}.csv and
/// tour/summary.json.
TourSummary cmd_tour(const PipelineConfig& cfg);

struct DatasetSummary {
    int num_maps = 0;
    int train_maps = 0;
    int train_windows = 0;
    NormStats norm;
};

/// Features from run_tour/ (run_raster/ when no tour run exists).
DatasetSummary cmd_dataset(const PipelineConfig& cfg);

struct TrainSummary {
    std::vector<double> loss_history;
};

TrainSummary cmd_train(const PipelineConfig& cfg);

struct ForecastTable {
    std::vector<int> maps;                    // 1-based
    std::vector<std::vector<double>> values;  // physical units, 16 per map
};

/// Closed-loop forecasts for every evaluation map, written to predictions/.
ForecastTable cmd_predict(const PipelineConfig& cfg);

struct EvaluateSummary {
    RmseCurve curve_normalized;
    RmseCurve curve_physical;
    RmseCurve baseline_normalized;
    RmseCurve baseline_physical;
    PercentileReport report;
    double median_lstm = 0.0;
    double median_baseline = 0.0;
};

EvaluateSummary cmd_evaluate(const PipelineConfig& cfg);

struct PipelineSummary {
    SimulateSummary raster;
    TourSummary tour;
    SimulateSummary optimized;
    DatasetSummary dataset;
    TrainSummary train;
    EvaluateSummary evaluation;
};

/// All stages in order, plus pipeline_summary.json.
PipelineSummary cmd_pipeline(const PipelineConfig& cfg);

}  // namespace lpbf
