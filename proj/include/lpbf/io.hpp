#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lpbf/dataset.hpp"
#include "lpbf/heatsim.hpp"
#include "lpbf/lstm.hpp"
#include "lpbf/tour.hpp"

namespace lpbf::io {

namespace fs = std::filesystem;

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Little-endian IEEE-754 float64 blobs.
void write_f64(const fs::path& path, std::span<const double> values);
std::vector<double> read_f64(const fs::path& path);

/// Comma-separated rows; lines starting with '#' are skipped.
std::vector<std::vector<std::string>> read_csv(const fs::path& path);

/// "# config_hash: <hash>" provenance line prefixed to every CSV artifact.
std::string provenance_line(const std::string& config_hash);

/// Run directory: manifest.json, index.csv (move, stop_index, t_start, t_end)
/// and snapshots/move_NNNN.bin, row-major nx*ny values. Stop indices in the
/// files are 1-based.
void save_run(const fs::path& dir, const RunRecord& run, const std::string& config_hash);
RunRecord load_run(const fs::path& dir);

/// First line n, then n rows of n entries.
void save_penalty_matrix(const fs::path& path, const PenaltyMatrix& c,
                         const std::string& config_hash);
PenaltyMatrix load_penalty_matrix(const fs::path& path);

/// One 1-based stop index per line after a "stop" header.
void save_tour(const fs::path& path, const Tour& tour, const std::string& config_hash);
Tour load_tour(const fs::path& path);

/// move_index (1-based), subdomain_1..subdomain_16.
void save_feature_table(const fs::path& path, std::span<const double> values, int num_maps,
                        const std::string& config_hash);
std::vector<double> load_feature_table(const fs::path& path, int* num_maps = nullptr);

/// manifest.json with shapes, config and normalization, plus one blob per
/// tensor named after LstmParams::tensor_names(), column-major.
void save_model(const fs::path& dir, const LstmModel& model, const TrainConfig& config,
                const std::string& config_hash);
LstmModel load_model(const fs::path& dir);

}  // namespace lpbf::io
