// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lpbf/io.hpp"
#include "lpbf/pipeline.hpp"
#include "lpbf/rng.hpp"
#include "test_support.hpp"

using namespace lpbf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("lpbf_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

PipelineConfig desk_config(const fs::path& out) {
    PipelineConfig cfg = load_config(fs::path(LPBF_SOURCE_DIR) / "configs" / "desk.json");
    cfg.output_dir = out.string();
    cfg.threads = 1;
    return cfg;
}

std::vector<double> stop_costs_of(const RunRecord& run) {
    const SubdomainPartition part(run.grid);
    std::vector<double> s(run.stops.size(), 0.0);
    for (const MoveSnapshot& snap : run.snapshots) {
        s[snap.stop_index] = stop_cost(subdomain_stats(std::span(&snap, 1), part), 600.0);
    }
    return s;
}

RunRecord desk_raster_run() {
    SimulationSetup setup;
    setup.grid = {64, 64};
    const StopGrid stops(16);
    return simulate_run(setup, stops.points(), raster_tour(stops));
}

Outcome ac1_convergence() {
    const auto t0 = Clock::now();
    const double t = 1000.0;
    const int sizes[] = {32, 64, 128};
    double err[3];
    for (int k = 0; k < 3; ++k) {
        err[k] = oracle::mode_rms_error(sizes[k], t);
    }
    auto h = [](int n) { return 2.0 / (n - 1); };
    const double p1 = std::log(err[0] / err[1]) / std::log(h(32) / h(64));
    const double p2 = std::log(err[1] / err[2]) / std::log(h(64) / h(128));
    const double secs = seconds_since(t0);
    return {p1 >= 1.85 && p2 >= 1.85 && secs < 30.0,
            "orders " + fmt(p1) + ", " + fmt(p2) + " (errors " + fmt(err[0]) + ", " + fmt(err[1]) +
                ", " + fmt(err[2]) + "), " + fmt(secs) + " s"};
}

Outcome ac2_maximum_principle() {
    Rng rng(2024);
    const MaterialParams m{};
    LaserParams off;
    off.power = 0.0;
    int violations = 0, clamp_errors = 0, steps = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int nx = 16 + static_cast<int>(rng.below(25));
        const int ny = 16 + static_cast<int>(rng.below(25));
        const GridSpec g{nx, ny};
        const double theta0 = rng.uniform(-50.0, 100.0);
        TemperatureField u(g, theta0, theta0);
        for (int j = 1; j < ny - 1; ++j) {
            for (int i = 1; i < nx - 1; ++i) {
                u.at(i, j) = theta0 + rng.uniform(-300.0, 1500.0);
            }
        }
        const double limit = max_stable_dt(g, m);
        for (int s = 0; s < 5; ++s) {
            const double dt = s == 0 ? limit : limit * rng.uniform(0.05, 1.0);
            const TemperatureField next = step(u, off, m, dt);
            ++steps;
            if (next.max() > u.max() || next.min() < u.min()) {
                ++violations;
            }
            for (int j = 0; j < ny; ++j) {
                for (int i = 0; i < nx; ++i) {
                    if (g.is_boundary(i, j) && next.at(i, j) != theta0) {
                        ++clamp_errors;
                    }
                }
            }
            u = next;
        }
    }
    return {violations == 0 && clamp_errors == 0,
            std::to_string(steps) + " steps on 1000 fields, " + std::to_string(violations) +
                " extremum violations, " + std::to_string(clamp_errors) + " boundary mismatches"};
}

Outcome ac3_laser_integral() {
    const GridSpec g{128, 128};
    const LaserParams l = LaserParams::with_waist_cells(g, 4200.0, 35.0);
    double sum = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            sum += gaussian_intensity({g.x(i), g.y(j)}, l);
        }
    }
    const double integral = sum * g.hx() * g.hy();
    const double analytic = std::numbers::pi * l.omega * l.omega / 2.0 * l.peak_intensity();
    const double rel = std::abs(integral - analytic) / analytic;
    return {rel < 0.01, "grid integral " + fmt(integral) + " vs " + fmt(analytic) +
                            " (relative error " + fmt(rel) + ")"};
}

Outcome ac4_penalty_matrix(const std::vector<double>& costs) {
    const PenaltyMatrix c = build_penalty_matrix(costs);
    const int n = c.size();
    bool sym = true, diag = true, tri = true;
    for (int i = 0; i < n; ++i) {
        diag = diag && c(i, i) == 0.0;
        for (int j = 0; j < n; ++j) {
            sym = sym && c(i, j) == c(j, i);
        }
    }
    Rng rng(4);
    long triples = 0;
    for (int subset = 0; subset < 10; ++subset) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx.begin(), idx.end());
        idx.resize(20);
        for (int a : idx) {
            for (int b : idx) {
                for (int d : idx) {
                    tri = tri && c(a, d) <= c(a, b) + c(b, d);
                    ++triples;
                }
            }
        }
    }
    return {sym && diag && tri && n == 256,
            "n=" + std::to_string(n) + ", symmetric " + (sym ? "yes" : "no") + ", zero diagonal " +
                (diag ? "yes" : "no") + ", triangle inequality on " + std::to_string(triples) +
                " triples " + (tri ? "holds" : "fails")};
}

Outcome ac5_annealing(const std::vector<double>& real_costs) {
    const auto t0 = Clock::now();
    int matches = 0;
    for (int inst = 0; inst < 25; ++inst) {
        Rng rng(500 + inst);
        std::vector<double> s(8);
        for (double& v : s) {
            v = rng.uniform(0.0, 1000.0);
        }
        const PenaltyMatrix c = build_penalty_matrix(s);
        AnnealSchedule sched;
        sched.sweeps = 3000;
        sched.proposals_per_sweep = 64;
        sched.seed = 900 + inst;
        const AnnealResult r = simulated_annealing(c, sched, {0, 1, 2, 3, 4, 5, 6, 7});
        if (r.cost == tour_cost(brute_force_tour(c), c)) {
            ++matches;
        }
    }

    std::vector<std::vector<double>> instances{real_costs};
    for (int k = 0; k < 4; ++k) {
        Rng rng(77 + k);
        std::vector<double> s(256);
        for (double& v : s) {
            v = rng.uniform(0.0, 1e6);
        }
        instances.push_back(s);
    }
    const Tour raster = raster_tour(StopGrid(16));
    double worst = 0.0;
    bool below_raster = true;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const PenaltyMatrix c = build_penalty_matrix(instances[k]);
        AnnealSchedule sched;
        sched.seed = derive_seed(42, "tour") + k;
        const AnnealResult r = simulated_annealing(c, sched, raster);
        const double opt = line_metric_optimum(instances[k]);
        worst = std::max(worst, r.cost / opt - 1.0);
        below_raster = below_raster && r.cost <= tour_cost(raster, c);
    }
    const double secs = seconds_since(t0);
    return {matches == 25 && worst <= 0.01 && below_raster && secs < 60.0,
            std::to_string(matches) + "/25 exact at n=8; n=256 worst gap " + fmt(100.0 * worst) +
                "% over " + std::to_string(instances.size()) + " instances, <= raster: " +
                (below_raster ? "yes" : "no") + ", " + fmt(secs) + " s"};
}

Outcome ac6_gradients() {
    double worst = 0.0;
    int params = 0;
    for (std::uint64_t seed = 1; seed <= 24; ++seed) {
        const oracle::GradientCheck g = oracle::lstm_gradient_check(seed, 4, 3, 2);
        worst = std::max(worst, g.max_relative_error);
        params = g.parameters;
    }
    return {worst < 1e-4, "24 configurations, " + std::to_string(params) +
                              " parameters each, max relative error " + fmt(worst)};
}

Outcome ac7_cell_oracle() {
    const int q = 6;
    const LstmLayerParams p = LstmLayerParams::zeros(1, q);
    Rng rng(7);
    Matrix c_prev(3, q), x(3, 1);
    for (Eigen::Index k = 0; k < c_prev.size(); ++k) {
        c_prev(k) = rng.uniform(-3.0, 3.0);
    }
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        x(k) = rng.uniform(-3.0, 3.0);
    }
    const CellOutput o = cell_forward(x, Matrix::Zero(3, q), c_prev, p);
    double err = 0.0;
    for (Eigen::Index k = 0; k < c_prev.size(); ++k) {
        err = std::max({err, std::abs(o.cache.gate_u()(k) - 0.5),
                        std::abs(o.cache.gate_f()(k) - 0.5), std::abs(o.cache.gate_o()(k) - 0.5),
                        std::abs(o.cache.c_tilde()(k)), std::abs(o.c(k) - 0.5 * c_prev(k)),
                        std::abs(o.h(k) - 0.5 * std::tanh(0.5 * c_prev(k)))});
    }
    const CellOutput unit = cell_forward(x, Matrix::Zero(3, q), Matrix::Ones(3, q), p);
    err = std::max(err, std::abs(unit.h(0) - 0.5 * std::tanh(0.5)));
    return {err <= 1e-12, "max deviation " + fmt(err) + ", h(c_prev=1) = " + fmt(unit.h(0))};
}

Outcome ac8_capacity() {
    const auto t0 = Clock::now();
    TrainingData d;
    d.norm.scheme = NormScheme::None;
    for (int k = 0; k < 200; ++k) {
        d.normalized.push_back(std::sin(2.0 * std::numbers::pi * k / 25.0));
    }
    for (int s = 0; s + 50 < 200; s += 5) {
        d.windows.push_back({s, 50});
    }
    TrainConfig c;
    c.hidden = 32;
    c.epochs = 300;
    c.dropout = 0.0;
    c.seed = 3;
    const TrainResult r = train(d, c);
    const double secs = seconds_since(t0);
    const double final_loss = r.loss_history.back();
    return {final_loss < 1e-3 && secs < 120.0,
            "final half-MSE " + fmt(final_loss) + " after 300 epochs, " + fmt(secs) + " s"};
}

Outcome ac9_end_to_end() {
    const auto t0 = Clock::now();
    const fs::path out = scratch("desk");
    const PipelineConfig cfg = desk_config(out);
    const PipelineSummary s = cmd_pipeline(cfg);
    const double secs = seconds_since(t0);
    const EvaluateSummary& e = s.evaluation;
    bool monotone = true;
    for (int k = 1; k < 4; ++k) {
        monotone = monotone && e.report.picks[k - 1].rmse <= e.report.picks[k].rmse;
    }
    const int first = e.curve_normalized.maps.front();
    const bool pass = first == 15 && e.median_lstm < e.median_baseline && monotone && secs < 1200.0;
    std::string picks;
    for (const auto& p : e.report.picks) {
        picks += " p" + std::to_string(p.percentile) + "=" + fmt(p.rmse);
    }
    return {pass, "first move " + std::to_string(first) + ", median RMSE LSTM " +
                      fmt(e.median_lstm) + " vs persistence " + fmt(e.median_baseline) +
                      ", picks" + picks + (monotone ? " (monotone)" : " (not monotone)") + ", " +
                      fmt(secs) + " s; artifacts in " + out.string()};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            files[fs::relative(e.path(), root).string()] = io::read_text(e.path());
        }
    }
    return files;
}

Outcome ac10_determinism() {
    const auto t0 = Clock::now();
    const fs::path out = scratch("determinism");
    PipelineConfig cfg = desk_config(out);
    cfg.train.epochs = 20;
    cmd_pipeline(cfg);
    const auto first = read_tree(out);
    fs::remove_all(out);
    cmd_pipeline(cfg);
    const auto second = read_tree(out);
    int differing = 0;
    for (const auto& [name, bytes] : first) {
        const auto it = second.find(name);
        if (it == second.end() || it->second != bytes) {
            ++differing;
            std::printf("    differs: %s\n", name.c_str());
        }
    }
    const bool pass = differing == 0 && first.size() == second.size() && !first.empty();
    fs::remove_all(out);
    return {pass, std::to_string(first.size()) + " artifacts compared, " +
                      std::to_string(differing) + " differ (desk grid, 20 epochs), " +
                      fmt(seconds_since(t0)) + " s"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    };

    const RunRecord prior = desk_raster_run();
    const std::vector<double> costs = stop_costs_of(prior);

    report("AC1", ac1_convergence);
    report("AC2", ac2_maximum_principle);
    report("AC3", ac3_laser_integral);
    report("AC4", [&] { return ac4_penalty_matrix(costs); });
    report("AC5", [&] { return ac5_annealing(costs); });
    report("AC6", ac6_gradients);
    report("AC7", ac7_cell_oracle);
    report("AC8", ac8_capacity);
    report("AC9", ac9_end_to_end);
    report("AC10", ac10_determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
