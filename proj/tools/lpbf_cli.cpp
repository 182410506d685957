// Command-line driver for the simulation / tour / forecasting pipeline.
//
// Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lpbf/errors.hpp"
#include "lpbf/io.hpp"
#include "lpbf/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kMissingArtifact = 3,
    kNumericFailure = 4,
};

struct Options {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string tour_file;
    std::string eval_scope;
};

lpbf::PipelineConfig resolve(const Options& o) {
    lpbf::PipelineConfig cfg =
        o.config_path.empty() ? lpbf::config_from_json(nlohmann::json::object())
                              : lpbf::load_config(o.config_path);
    nlohmann::json patch = lpbf::config_to_json(cfg);
    if (!o.out_dir.empty()) patch["output_dir"] = o.out_dir;
    if (o.seed) patch["seed"] = *o.seed;
    if (o.threads) patch["threads"] = *o.threads;
    if (!o.eval_scope.empty()) patch["evaluation"]["scope"] = o.eval_scope;
    return lpbf::config_from_json(patch);
}

void print_tour(const lpbf::TourSummary& t) {
    std::cout << "raster cost " << t.raster_cost << ", annealed cost " << t.final_cost
              << ", lower bound " << t.lower_bound << " (gap " << t.final_cost - t.lower_bound
              << ")\n";
}

void print_eval(const lpbf::EvaluateSummary& e) {
    std::cout << "RMSE curve: moves " << e.curve_normalized.maps.front() << ".."
              << e.curve_normalized.maps.back() << "\n";
    for (const auto& p : e.report.picks) {
        std::cout << "  p" << p.percentile << ": move " << p.map << ", RMSE " << p.rmse << "\n";
    }
    std::cout << "median RMSE (normalized): LSTM " << e.median_lstm << ", persistence "
              << e.median_baseline << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laser powder-bed heat simulation, tour optimization and LSTM forecasting"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "Pipeline config (JSON)");
        sub->add_option("--out", opt.out_dir, "Output directory");
        sub->add_option("--seed", opt.seed, "Master seed");
        sub->add_option("--threads", opt.threads, "Worker threads for simulation and annealing");
    };

    std::string init_path = "config.json";
    auto* init = app.add_subcommand("init", "Write a config file with every default");
    init->add_option("path", init_path, "Where to write the config");

    auto* simulate = app.add_subcommand("simulate", "Simulate a raster or tour-file run");
    add_common(simulate);
    simulate->add_option("--tour-file", opt.tour_file, "Tour CSV; raster order when omitted");

    auto* tour = app.add_subcommand("tour", "Build the penalty matrix and anneal a tour");
    add_common(tour);
    auto* dataset = app.add_subcommand("dataset", "Extract gradient features and normalization");
    add_common(dataset);
    auto* trainc = app.add_subcommand("train", "Train the stacked LSTM");
    add_common(trainc);
    auto* predict = app.add_subcommand("predict", "Closed-loop forecasts per evaluation map");
    add_common(predict);
    predict->add_option("--eval-scope", opt.eval_scope, "all | holdout");
    auto* evaluate = app.add_subcommand("evaluate", "RMSE curve, percentiles, baseline, charts");
    add_common(evaluate);
    evaluate->add_option("--eval-scope", opt.eval_scope, "all | holdout");
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
    add_common(pipeline);
    pipeline->add_option("--eval-scope", opt.eval_scope, "all | holdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) {
            nlohmann::json j = lpbf::config_to_json(lpbf::PipelineConfig{});
            lpbf::io::write_text(init_path, j.dump(2) + "\n");
            std::cout << "wrote " << init_path << "\n";
            return kOk;
        }
        const lpbf::PipelineConfig cfg = resolve(opt);
        if (simulate->parsed()) {
            const auto s = opt.tour_file.empty()
                               ? lpbf::cmd_simulate(cfg, lpbf::TourSource::Raster)
                               : lpbf::cmd_simulate(cfg, lpbf::TourSource::TourFile,
                                                    fs::path(opt.tour_file));
            std::cout << "simulated " << s.moves << " moves into " << s.run_dir.string()
                      << " (J = " << s.objective << ")\n";
        } else if (tour->parsed()) {
            print_tour(lpbf::cmd_tour(cfg));
        } else if (dataset->parsed()) {
            const auto d = lpbf::cmd_dataset(cfg);
            std::cout << d.num_maps << " maps, " << d.train_maps << " in the training split, "
                      << d.train_windows << " training windows\n";
        } else if (trainc->parsed()) {
            const auto t = lpbf::cmd_train(cfg);
            std::cout << "trained " << t.loss_history.size() << " epochs, final loss "
                      << t.loss_history.back() << "\n";
        } else if (predict->parsed()) {
            const auto f = lpbf::cmd_predict(cfg);
            std::cout << "forecast " << f.maps.size() << " maps\n";
        } else if (evaluate->parsed()) {
            print_eval(lpbf::cmd_evaluate(cfg));
        } else if (pipeline->parsed()) {
            const auto s = lpbf::cmd_pipeline(cfg);
            print_tour(s.tour);
            std::cout << "objective J: raster " << s.raster.objective << ", optimized "
                      << s.optimized.objective << "\n";
            print_eval(s.evaluation);
        }
    } catch (const lpbf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const lpbf::NotFoundError& e) {
        std::cerr << "not found: " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const lpbf::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const lpbf::StabilityError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
