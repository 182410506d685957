#include "lpbf/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "lpbf/errors.hpp"
#include "lpbf/io.hpp"
#include "lpbf/rng.hpp"

namespace lpbf {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* lambda_mode_name(LambdaMode m) {
    return m == LambdaMode::TimeMean ? "time-mean" : "literal";
}

const char* psi_norm_name(PsiNorm n) {
    return n == PsiNorm::SummedVector ? "summed-vector" : "sum-of-squares";
}

const char* feature_name(FeatureScalar f) {
    return f == FeatureScalar::PsiSquared ? "psi-squared" : "psi-norm";
}

const char* scope_name(EvalScope s) { return s == EvalScope::All ? "all" : "holdout"; }

template <typename E>
E parse_enum(const std::string& value, std::initializer_list<std::pair<const char*, E>> options,
             const char* key) {
    for (const auto& [name, e] : options) {
        if (value == name) return e;
    }
    throw ConfigError(std::string("invalid value '") + value + "' for " + key);
}

void check_known_keys(const json& user, const json& defaults, const std::string& prefix) {
    if (!user.is_object()) {
        throw ConfigError("config section '" + prefix + "' must be an object");
    }
    for (const auto& [key, value] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!defaults.contains(key)) {
            throw ConfigError("unknown config key '" + path + "'");
        }
        if (defaults[key].is_object()) {
            check_known_keys(value, defaults[key], path);
        }
    }
}

}  // namespace

void PipelineConfig::validate() const {
    try {
        simulation.grid.validate();
        simulation.material.validate();
        anneal.validate();
        train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (!(simulation.power >= 0.0) || !(simulation.omega_cells > 0.0)) {
        throw ConfigError("laser power must be >= 0 and waist > 0");
    }
    if (simulation.substeps < 1) throw ConfigError("substeps must be >= 1");
    if (simulation.tau > 0.0 &&
        simulation.tau / simulation.substeps >
            max_stable_dt(simulation.grid, simulation.material) * (1.0 + 1e-12)) {
        throw ConfigError("move duration / substeps exceeds the explicit stability limit");
    }
    if (stop_grid_side < 2) throw ConfigError("stop grid side must be >= 2");
    if (anneal_restarts < 1) throw ConfigError("anneal restarts must be >= 1");
    if (mu < 1) throw ConfigError("mu must be >= 1");
    if (mu >= stop_grid_side * stop_grid_side) {
        throw ConfigError("mu must be smaller than the number of moves");
    }
    if (!(split > 0.0 && split <= 1.0)) throw ConfigError("split must lie in (0, 1]");
}

int PipelineConfig::resolved_window_length() const {
    return window_length > 0 ? window_length : mu * kSubdomains;
}

std::uint64_t PipelineConfig::tour_seed() const { return derive_seed(seed, "tour"); }

std::uint64_t PipelineConfig::train_seed() const { return derive_seed(seed, "train"); }

json config_to_json(const PipelineConfig& c) {
    const auto& s = c.simulation;
    const auto& t = c.train;
    json j;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;
    j["simulation"] = {{"nx", s.grid.nx},
                       {"ny", s.grid.ny},
                       {"kappa", s.material.kappa},
                       {"c_heat", s.material.c_heat},
                       {"rho", s.material.rho},
                       {"power", s.power},
                       {"omega_cells", s.omega_cells},
                       {"theta0", s.theta0},
                       {"initial_temperature", s.initial_temperature},
                       {"substeps", s.substeps},
                       {"tau", s.tau}};
    j["stops"] = {{"side", c.stop_grid_side}};
    j["features"] = {{"target_temperature", c.target_temperature},
                     {"lambda_mode", lambda_mode_name(c.lambda_mode)},
                     {"psi_norm", psi_norm_name(c.psi_norm)}};
    j["tour"] = {{"initial_temperature", c.anneal.initial_temperature},
                 {"cooling", c.anneal.cooling},
                 {"sweeps", c.anneal.sweeps},
                 {"proposals_per_sweep", c.anneal.proposals_per_sweep},
                 {"restarts", c.anneal_restarts}};
    j["dataset"] = {{"mu", c.mu},
                    {"split", c.split},
                    {"normalization", to_string(c.normalization)},
                    {"feature", feature_name(c.feature)},
                    {"window_length", c.window_length}};
    j["train"] = {{"batch", t.batch},
                  {"epochs", t.epochs},
                  {"learning_rate", t.learning_rate},
                  {"lr_drop_factor", t.lr_drop_factor},
                  {"lr_drop_period", t.lr_drop_period},
                  {"dropout", t.dropout},
                  {"beta1", t.beta1},
                  {"beta2", t.beta2},
                  {"epsilon", t.epsilon},
                  {"hidden", t.hidden},
                  {"layers", t.layers},
                  {"gradient_threshold", t.gradient_threshold}};
    j["evaluation"] = {{"scope", scope_name(c.eval_scope)}};
    return j;
}

PipelineConfig config_from_json(const json& user) {
    const json defaults = config_to_json(PipelineConfig{});
    check_known_keys(user, defaults, "");
    json j = defaults;
    j.merge_patch(user);

    PipelineConfig c;
    try {
        c.seed = j.at("seed").get<std::uint64_t>();
        c.threads = j.at("threads").get<int>();
        c.output_dir = j.at("output_dir").get<std::string>();
        const json& s = j.at("simulation");
        c.simulation.grid.nx = s.at("nx").get<int>();
        c.simulation.grid.ny = s.at("ny").get<int>();
        c.simulation.material.kappa = s.at("kappa").get<double>();
        c.simulation.material.c_heat = s.at("c_heat").get<double>();
        c.simulation.material.rho = s.at("rho").get<double>();
        c.simulation.power = s.at("power").get<double>();
        c.simulation.omega_cells = s.at("omega_cells").get<double>();
        c.simulation.theta0 = s.at("theta0").get<double>();
        c.simulation.initial_temperature = s.at("initial_temperature").get<double>();
        c.simulation.substeps = s.at("substeps").get<int>();
        c.simulation.tau = s.at("tau").get<double>();
        c.stop_grid_side = j.at("stops").at("side").get<int>();
        const json& f = j.at("features");
        c.target_temperature = f.at("target_temperature").get<double>();
        c.lambda_mode = parse_enum<LambdaMode>(
            f.at("lambda_mode").get<std::string>(),
            {{"time-mean", LambdaMode::TimeMean}, {"literal", LambdaMode::Literal}},
            "features.lambda_mode");
        c.psi_norm = parse_enum<PsiNorm>(
            f.at("psi_norm").get<std::string>(),
            {{"summed-vector", PsiNorm::SummedVector}, {"sum-of-squares", PsiNorm::SumOfSquares}},
            "features.psi_norm");
        const json& t = j.at("tour");
        c.anneal.initial_temperature = t.at("initial_temperature").get<double>();
        c.anneal.cooling = t.at("cooling").get<double>();
        c.anneal.sweeps = t.at("sweeps").get<int>();
        c.anneal.proposals_per_sweep = t.at("proposals_per_sweep").get<int>();
        c.anneal_restarts = t.at("restarts").get<int>();
        const json& d = j.at("dataset");
        c.mu = d.at("mu").get<int>();
        c.split = d.at("split").get<double>();
        c.normalization = parse_enum<NormScheme>(
            d.at("normalization").get<std::string>(),
            {{"zscore", NormScheme::ZScore}, {"shift", NormScheme::ShiftOnly},
             {"none", NormScheme::None}},
            "dataset.normalization");
        c.feature = parse_enum<FeatureScalar>(
            d.at("feature").get<std::string>(),
            {{"psi-squared", FeatureScalar::PsiSquared}, {"psi-norm", FeatureScalar::PsiNorm}},
            "dataset.feature");
        c.window_length = d.at("window_length").get<int>();
        const json& tr = j.at("train");
        c.train.batch = tr.at("batch").get<int>();
        c.train.epochs = tr.at("epochs").get<int>();
        c.train.learning_rate = tr.at("learning_rate").get<double>();
        c.train.lr_drop_factor = tr.at("lr_drop_factor").get<double>();
        c.train.lr_drop_period = tr.at("lr_drop_period").get<int>();
        c.train.dropout = tr.at("dropout").get<double>();
        c.train.beta1 = tr.at("beta1").get<double>();
        c.train.beta2 = tr.at("beta2").get<double>();
        c.train.epsilon = tr.at("epsilon").get<double>();
        c.train.hidden = tr.at("hidden").get<int>();
        c.train.layers = tr.at("layers").get<int>();
        c.train.gradient_threshold = tr.at("gradient_threshold").get<double>();
        c.eval_scope = parse_enum<EvalScope>(j.at("evaluation").at("scope").get<std::string>(),
                                             {{"all", EvalScope::All}, {"holdout", EvalScope::Holdout}},
                                             "evaluation.scope");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.anneal.seed = c.tour_seed();
    c.train.seed = c.train_seed();
    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const PipelineConfig& cfg) {
    json j = config_to_json(cfg);
    j.erase("output_dir");
    j.erase("threads");
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

namespace {

ArtifactPaths paths_for(const PipelineConfig& cfg) { return ArtifactPaths{cfg.output_dir}; }

void write_config(const PipelineConfig& cfg) {
    json j = config_to_json(cfg);
    j.erase("output_dir");
    j.erase("threads");
    j["config_hash"] = config_hash(cfg);
    io::write_text(paths_for(cfg).config(), j.dump(2) + "\n");
}

SimulationSetup setup_for(const PipelineConfig& cfg) {
    SimulationSetup s = cfg.simulation;
    s.threads = cfg.threads;
    return s;
}

fs::path dataset_source(const ArtifactPaths& p) {
    if (fs::exists(p.tour_run() / "manifest.json")) return p.tour_run();
    if (fs::exists(p.raster_run() / "manifest.json")) return p.raster_run();
    throw NotFoundError("no simulated run found under " + p.root.string() +
                        " (run `simulate` first)");
}

struct LoadedDataset {
    FeatureSeries series;
    NormStats norm;
    int train_maps = 0;
};

LoadedDataset load_dataset(const PipelineConfig& cfg) {
    const ArtifactPaths p = paths_for(cfg);
    const fs::path manifest = p.dataset_dir() / "manifest.json";
    if (!fs::exists(manifest)) {
        throw NotFoundError("missing dataset: " + manifest.string() + " (run `dataset` first)");
    }
    const json m = json::parse(io::read_text(manifest));
    LoadedDataset d;
    d.series.values = io::load_feature_table(p.dataset_dir() / "features.csv", &d.series.num_maps);
    d.series.mu = m.at("mu").get<int>();
    d.norm.scheme = norm_scheme_from_string(m.at("normalization").at("scheme").get<std::string>());
    d.norm.shift = m.at("normalization").at("shift").get<double>();
    d.norm.scale = m.at("normalization").at("scale").get<double>();
    d.norm.degenerate = m.at("normalization").at("degenerate").get<bool>();
    d.train_maps = m.at("train_maps").get<int>();
    return d;
}

std::string csv_row(int first, std::span<const double> rest) {
    std::string s = std::to_string(first);
    for (double v : rest) {
        s += ',';
        s += io::format_double(v);
    }
    s += '\n';
    return s;
}

}  // namespace

SimulateSummary cmd_simulate(const PipelineConfig& cfg, TourSource source,
                             const std::optional<fs::path>& tour_file) {
    cfg.validate();
    const ArtifactPaths p = paths_for(cfg);
    const StopGrid stops(cfg.stop_grid_side);
    Tour tour;
    fs::path out;
    if (source == TourSource::Raster) {
        tour = raster_tour(stops);
        out = p.raster_run();
    } else {
        const fs::path file = tour_file.value_or(p.tour_dir() / "tour.csv");
        if (!fs::exists(file)) {
            throw NotFoundError("missing tour file: " + file.string());
        }
        tour = io::load_tour(file);
        if (!is_valid_tour(tour, stops.size())) {
            throw ConfigError("tour file " + file.string() + " is not a permutation of the " +
                              std::to_string(stops.size()) + " stops");
        }
        out = p.tour_run();
    }
    write_config(cfg);
    const RunRecord run = simulate_run(setup_for(cfg), stops.points(), tour);
    io::save_run(out, run, config_hash(cfg));

    SimulateSummary summary;
    summary.run_dir = out;
    summary.moves = static_cast<int>(run.snapshots.size());
    summary.objective = objective_J(run.snapshots, cfg.target_temperature);
    return summary;
}

TourSummary cmd_tour(const PipelineConfig& cfg) {
    cfg.validate();
    const ArtifactPaths p = paths_for(cfg);
    const RunRecord prior = io::load_run(p.raster_run());
    const StopGrid stops(cfg.stop_grid_side);
    if (static_cast<int>(prior.stops.size()) != stops.size()) {
        throw ConfigError("prior run stop count does not match the configured stop grid");
    }
    const SubdomainPartition part(prior.grid);
    const std::string hash = config_hash(cfg);

    // stop cost of stop i: statistics of the move that ends at i
    std::vector<double> costs(stops.size(), 0.0);
    std::vector<char> seen(stops.size(), 0);
    for (const MoveSnapshot& snap : prior.snapshots) {
        const StatsTable stats = subdomain_stats(std::span<const MoveSnapshot>(&snap, 1), part,
                                                 cfg.lambda_mode);
        costs[snap.stop_index] = stop_cost(stats, cfg.target_temperature, cfg.psi_norm);
        seen[snap.stop_index] = 1;
    }
    for (int k = 0; k < stops.size(); ++k) {
        if (!seen[k]) {
            throw ConfigError("prior run never visits stop " + std::to_string(k + 1));
        }
    }
    const PenaltyMatrix c = build_penalty_matrix(costs, "run_raster");
    const Tour initial = raster_tour(stops);
    const AnnealResult result =
        anneal_restarts(c, cfg.anneal, initial, cfg.anneal_restarts, cfg.threads);

    std::string cost_csv = io::provenance_line(hash) + "stop,cost\n";
    for (int k = 0; k < stops.size(); ++k) {
        cost_csv += std::to_string(k + 1) + "," + io::format_double(costs[k]) + "\n";
    }
    io::write_text(p.tour_dir() / "stop_costs.csv", cost_csv);
    io::save_penalty_matrix(p.tour_dir() / "penalty_matrix.csv", c, hash);
    io::save_tour(p.tour_dir() / "tour.csv", result.tour, hash);

    TourSummary summary;
    summary.raster_cost = result.initial_cost;
    summary.final_cost = result.cost;
    summary.lower_bound = line_metric_optimum(costs);
    summary.tour = result.tour;

    json s;
    s["config_hash"] = hash;
    s["stops"] = stops.size();
    s["raster_cost"] = summary.raster_cost;
    s["final_cost"] = summary.final_cost;
    s["lower_bound"] = summary.lower_bound;
    s["gap"] = summary.final_cost - summary.lower_bound;
    s["relative_gap"] =
        summary.lower_bound > 0.0 ? (summary.final_cost - summary.lower_bound) / summary.lower_bound
                                  : 0.0;
    s["anneal_seed"] = cfg.anneal.seed;
    io::write_text(p.tour_dir() / "summary.json", s.dump(2) + "\n");
    return summary;
}

DatasetSummary cmd_dataset(const PipelineConfig& cfg) {
    cfg.validate();
    const ArtifactPaths p = paths_for(cfg);
    const fs::path src = dataset_source(p);
    const RunRecord run = io::load_run(src);
    const SubdomainPartition part(run.grid);
    const FeatureSeries series = extract_features(run, part, cfg.mu, cfg.feature);
    const std::vector<double> lambda = extract_lambda(run, part);
    const std::string hash = config_hash(cfg);

    DatasetSummary summary;
    summary.num_maps = series.num_maps;
    summary.train_maps = train_map_count(series.num_maps, cfg.split);
    summary.norm = fit_normalization(series, summary.train_maps, cfg.normalization);
    const WindowPlan plan =
        make_windows(series, cfg.split, cfg.resolved_window_length(), cfg.eval_scope);
    summary.train_windows = static_cast<int>(plan.train.size());

    io::save_feature_table(p.dataset_dir() / "features.csv", series.values, series.num_maps, hash);
    io::save_feature_table(p.dataset_dir() / "lambda.csv", lambda, series.num_maps, hash);
    json m;
    m["config_hash"] = hash;
    m["source_run"] = src.filename().string();
    m["num_maps"] = series.num_maps;
    m["mu"] = series.mu;
    m["nu"] = series.history_length();
    m["split"] = cfg.split;
    m["train_maps"] = summary.train_maps;
    m["window_length"] = cfg.resolved_window_length();
    m["train_windows"] = summary.train_windows;
    m["feature"] = feature_name(cfg.feature);
    m["ordering"] =
        "value (map k, sub-domain l) at index k*16 + l; l = row*4 + col, row along y from y=-1, "
        "col along x from x=-1; maps 1-based in CSV";
    m["normalization"] = {{"scheme", to_string(summary.norm.scheme)},
                          {"shift", summary.norm.shift},
                          {"scale", summary.norm.scale},
                          {"degenerate", summary.norm.degenerate},
                          {"fitted_on_maps", summary.train_maps}};
    io::write_text(p.dataset_dir() / "manifest.json", m.dump(2) + "\n");
    return summary;
}

TrainSummary cmd_train(const PipelineConfig& cfg) {
    cfg.validate();
    const ArtifactPaths p = paths_for(cfg);
    LoadedDataset d = load_dataset(cfg);
    const WindowPlan plan =
        make_windows(d.series, cfg.split, cfg.resolved_window_length(), cfg.eval_scope);
    TrainingData data{apply_normalization(d.series.values, d.norm), plan.train, d.norm};
    if (data.windows.empty()) {
        throw ConfigError("training split is too short for a single window");
    }
    const TrainResult result = train(data, cfg.train);
    const std::string hash = config_hash(cfg);
    io::save_model(p.model_dir(), result.model, cfg.train, hash);

    std::string csv = io::provenance_line(hash) + "epoch,loss,learning_rate\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        csv += std::to_string(e + 1) + "," + io::format_double(result.loss_history[e]) + "," +
               io::format_double(cfg.train.learning_rate_at(static_cast<int>(e))) + "\n";
    }
    io::write_text(p.model_dir() / "loss_history.csv", csv);
    return TrainSummary{result.loss_history};
}

namespace {

ForecastTable forecast_maps(const LstmModel& model, const FeatureSeries& series,
                            const std::vector<int>& maps) {
    const int nu = series.history_length();
    std::vector<std::span<const double>> histories;
    histories.reserve(maps.size());
    for (int zeta : maps) {
        // ground-truth maps zeta-mu .. zeta-1 (1-based)
        const std::size_t start = static_cast<std::size_t>(zeta - 1 - series.mu) * kSubdomains;
        histories.push_back(std::span<const double>(series.values).subspan(start, nu));
    }
    ForecastTable table;
    table.maps = maps;
    table.values = forecast_batch(model, histories, nu, kSubdomains);
    for (const auto& row : table.values) {
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw NumericError("forecast produced a non-finite value");
            }
        }
    }
    return table;
}

}  // namespace

ForecastTable cmd_predict(const PipelineConfig& cfg) {
    cfg.validate();
    const ArtifactPaths p = paths_for(cfg);
    const LstmModel model = io::load_model(p.model_dir());
    const LoadedDataset d = load_dataset(cfg);
    const WindowPlan plan =
        make_windows(d.series, cfg.split, cfg.resolved_window_length(), cfg.eval_scope);
    const ForecastTable table = forecast_maps(model, d.series, plan.eval_maps);

    const std::string hash = config_hash(cfg);
    std::string csv = io::provenance_line(hash) + "move";
    for (int l = 1; l <= kSubdomains; ++l) {
        csv += ",subdomain_" + std::to_string(l);
    }
    csv += "\n";
    for (std::size_t k = 0; k < table.maps.size(); ++k) {
        csv += csv_row(table.maps[k], table.values[k]);
    }
    io::write_text(p.predictions_dir() / "forecasts.csv", csv);
    return table;
}

EvaluateSummary cmd_evaluate(const PipelineConfig& cfg) {
    cfg.validate();
    const ArtifactPaths p = paths_for(cfg);
    const LstmModel model = io::load_model(p.model_dir());
    const LoadedDataset d = load_dataset(cfg);
    const WindowPlan plan =
        make_windows(d.series, cfg.split, cfg.resolved_window_length(), cfg.eval_scope);
    const ForecastTable table = forecast_maps(model, d.series, plan.eval_maps);
    const NormStats& norm = d.norm;

    EvaluateSummary s;
    s.curve_physical.scale = s.baseline_physical.scale = "physical";
    s.curve_normalized.scale = s.baseline_normalized.scale = "normalized";
    for (std::size_t k = 0; k < table.maps.size(); ++k) {
        const int zeta = table.maps[k];
        const auto truth = d.series.map(zeta - 1);
        const std::vector<double> base = persistence_baseline(d.series, zeta);
        const auto& pred = table.values[k];
        const auto truth_n = apply_normalization(truth, norm);
        for (RmseCurve* c : {&s.curve_physical, &s.curve_normalized, &s.baseline_physical,
                             &s.baseline_normalized}) {
            c->maps.push_back(zeta);
        }
        s.curve_physical.values.push_back(rmse_per_map(pred, truth));
        s.curve_normalized.values.push_back(
            rmse_per_map(apply_normalization(pred, norm), truth_n));
        s.baseline_physical.values.push_back(rmse_per_map(base, truth));
        s.baseline_normalized.values.push_back(
            rmse_per_map(apply_normalization(base, norm), truth_n));
    }
    s.report = percentiles(s.curve_normalized);
    const PercentileReport report_physical = percentiles(s.curve_physical);
    s.median_lstm = median(s.curve_normalized.values);
    s.median_baseline = median(s.baseline_normalized.values);

    const std::string hash = config_hash(cfg);
    const fs::path out = p.evaluation_dir();

    std::string curve_csv = io::provenance_line(hash) + "move,rmse_normalized,rmse_physical\n";
    std::string base_csv = io::provenance_line(hash) + "move,rmse_normalized,rmse_physical\n";
    for (std::size_t k = 0; k < table.maps.size(); ++k) {
        curve_csv += std::to_string(table.maps[k]) + "," +
                     io::format_double(s.curve_normalized.values[k]) + "," +
                     io::format_double(s.curve_physical.values[k]) + "\n";
        base_csv += std::to_string(table.maps[k]) + "," +
                    io::format_double(s.baseline_normalized.values[k]) + "," +
                    io::format_double(s.baseline_physical.values[k]) + "\n";
    }
    io::write_text(out / "rmse_curve.csv", curve_csv);
    io::write_text(out / "baseline_curve.csv", base_csv);

    auto picks_json = [](const PercentileReport& r) {
        json a = json::array();
        for (const auto& pk : r.picks) {
            a.push_back({{"percentile", pk.percentile}, {"move", pk.map}, {"rmse", pk.rmse}});
        }
        return a;
    };
    json rep;
    rep["config_hash"] = hash;
    rep["rule"] = s.report.rule;
    rep["scope"] = scope_name(cfg.eval_scope);
    rep["first_move"] = table.maps.empty() ? 0 : table.maps.front();
    rep["normalized"] = picks_json(s.report);
    rep["physical"] = picks_json(report_physical);
    rep["median_rmse_normalized"] = s.median_lstm;
    rep["median_baseline_rmse_normalized"] = s.median_baseline;
    rep["median_rmse_physical"] = median(s.curve_physical.values);
    rep["median_baseline_rmse_physical"] = median(s.baseline_physical.values);
    rep["beats_baseline"] = s.median_lstm < s.median_baseline;
    io::write_text(out / "percentiles.json", rep.dump(2) + "\n");

    // charts
    SvgSeries lstm_line{{}, s.curve_normalized.values, "#1f4e9c", "LSTM forecast", false};
    SvgSeries base_line{{}, s.baseline_normalized.values, "#bbbbbb", "persistence", false};
    for (int m : table.maps) {
        lstm_line.x.push_back(m);
        base_line.x.push_back(m);
    }
    SvgSeries marks{{}, {}, "#c0392b", "percentile picks", true};
    for (const auto& pk : s.report.picks) {
        marks.x.push_back(pk.map);
        marks.y.push_back(pk.rmse);
    }
    io::write_text(out / "rmse_curve.svg",
                   svg_line_chart("RMSE per nozzle move (normalized)", "nozzle move", "RMSE",
                                  {base_line, lstm_line, marks}));

    for (const auto& pk : s.report.picks) {
        const int zeta = pk.map;
        std::size_t row = 0;
        while (table.maps[row] != zeta) ++row;
        const int mu = d.series.mu;
        SvgSeries truth{{}, {}, "#e377c2", "ground truth (history + map)", false};
        for (int k = 0; k < (mu + 1) * kSubdomains; ++k) {
            const std::size_t idx = static_cast<std::size_t>(zeta - 1 - mu) * kSubdomains + k;
            truth.x.push_back(k + 1);
            truth.y.push_back(norm.apply(d.series.values[idx]));
        }
        SvgSeries fc{{}, {}, "#000000", "forecast", false};
        for (int l = 0; l < kSubdomains; ++l) {
            fc.x.push_back(mu * kSubdomains + l + 1);
            fc.y.push_back(norm.apply(table.values[row][l]));
        }
        std::ostringstream title;
        title << pk.percentile << "th percentile: move " << zeta
              << ", RMSE=" << io::format_double(pk.rmse);
        io::write_text(out / ("exemplar_p" + std::to_string(pk.percentile) + ".svg"),
                       svg_line_chart(title.str(), "vectorized feature index",
                                      "gradient feature (normalized)", {truth, fc}));
    }
    return s;
}

PipelineSummary cmd_pipeline(const PipelineConfig& cfg) {
    PipelineSummary s;
    s.raster = cmd_simulate(cfg, TourSource::Raster);
    s.tour = cmd_tour(cfg);
    s.optimized = cmd_simulate(cfg, TourSource::TourFile);
    s.dataset = cmd_dataset(cfg);
    s.train = cmd_train(cfg);
    cmd_predict(cfg);
    s.evaluation = cmd_evaluate(cfg);

    json j;
    j["config_hash"] = config_hash(cfg);
    j["objective_J"] = {{"raster", s.raster.objective}, {"optimized", s.optimized.objective}};
    j["tour"] = {{"raster_cost", s.tour.raster_cost},
                 {"final_cost", s.tour.final_cost},
                 {"lower_bound", s.tour.lower_bound}};
    j["dataset"] = {{"maps", s.dataset.num_maps},
                    {"train_maps", s.dataset.train_maps},
                    {"train_windows", s.dataset.train_windows}};
    j["train"] = {{"epochs", s.train.loss_history.size()},
                  {"final_loss", s.train.loss_history.empty() ? 0.0 : s.train.loss_history.back()}};
    j["evaluation"] = {{"first_move", s.evaluation.curve_normalized.maps.front()},
                       {"median_rmse_normalized", s.evaluation.median_lstm},
                       {"median_baseline_rmse_normalized", s.evaluation.median_baseline}};
    io::write_text(paths_for(cfg).root / "pipeline_summary.json", j.dump(2) + "\n");
    return s;
}

}  // namespace lpbf
