#include "lpbf/tour.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "lpbf/rng.hpp"

namespace lpbf {

StopGrid::StopGrid(int side) : side_(side) {
    if (side < 1) {
        throw std::invalid_argument("stop grid side must be positive");
    }
}

Point StopGrid::point(int index) const {
    const int row = index / side_;
    const int col = index % side_;
    const double pitch = 2.0 / side_;
    return {-1.0 + (col + 0.5) * pitch, -1.0 + (row + 0.5) * pitch};
}

std::vector<Point> StopGrid::points() const {
    std::vector<Point> out(size());
    for (int k = 0; k < size(); ++k) {
        out[k] = point(k);
    }
    return out;
}

PenaltyMatrix::PenaltyMatrix(int n, std::vector<double> entries, std::string provenance)
    : n_(n), c_(std::move(entries)), provenance_(std::move(provenance)) {
    if (n < 0 || c_.size() != static_cast<std::size_t>(n) * n) {
        throw std::invalid_argument("penalty matrix: entry count does not match n*n");
    }
}

std::vector<double> quantize_costs(const std::vector<double>& stop_costs) {
    double top = 0.0;
    for (double v : stop_costs) {
        top = std::max(top, std::abs(v));
    }
    if (top == 0.0 || !std::isfinite(top)) {
        return stop_costs;
    }
    const double q = std::ldexp(1.0, std::ilogb(top) + 1 - kCostBits);
    std::vector<double> out(stop_costs.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = std::nearbyint(stop_costs[k] / q) * q;
    }
    return out;
}

PenaltyMatrix build_penalty_matrix(const std::vector<double>& stop_costs, std::string provenance) {
    const int n = static_cast<int>(stop_costs.size());
    if (n < 3) {
        throw std::invalid_argument("penalty matrix needs at least 3 stops");
    }
    for (double s : stop_costs) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("penalty matrix: non-finite stop cost");
        }
        if (s < 0.0) {
            throw std::invalid_argument("penalty matrix: negative stop cost");
        }
    }
    const std::vector<double> s = quantize_costs(stop_costs);
    std::vector<double> c(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            c[static_cast<std::size_t>(i) * n + j] = std::abs(s[i] - s[j]);
        }
    }
    return PenaltyMatrix(n, std::move(c), std::move(provenance));
}

bool is_valid_tour(const Tour& tour, int n) {
    if (static_cast<int>(tour.size()) != n) {
        return false;
    }
    std::vector<char> seen(n, 0);
    for (int v : tour) {
        if (v < 0 || v >= n || seen[v]) {
            return false;
        }
        seen[v] = 1;
    }
    return true;
}

double tour_cost(const Tour& tour, const PenaltyMatrix& c) {
    if (!is_valid_tour(tour, c.size())) {
        throw std::invalid_argument("tour_cost: tour is not a permutation of the matrix indices");
    }
    double sum = 0.0;
    const std::size_t n = tour.size();
    for (std::size_t k = 0; k < n; ++k) {
        sum += c(tour[k], tour[(k + 1) % n]);
    }
    return sum;
}

void AnnealSchedule::validate() const {
    if (!(cooling > 0.0 && cooling < 1.0)) {
        throw std::invalid_argument("anneal schedule: cooling factor must lie in (0, 1)");
    }
    if (sweeps < 1) {
        throw std::invalid_argument("anneal schedule: sweeps must be >= 1");
    }
    if (!std::isfinite(initial_temperature)) {
        throw std::invalid_argument("anneal schedule: non-finite initial temperature");
    }
}

namespace {

double offdiagonal_stddev(const PenaltyMatrix& c) {
    const int n = c.size();
    double sum = 0.0;
    double sq = 0.0;
    const double count = static_cast<double>(n) * (n - 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j) {
                sum += c(i, j);
                sq += c(i, j) * c(i, j);
            }
        }
    }
    const double mean = sum / count;
    return std::sqrt(std::max(0.0, sq / count - mean * mean));
}

}  // namespace

AnnealResult simulated_annealing(const PenaltyMatrix& c, const AnnealSchedule& schedule,
                                 const Tour& initial) {
    schedule.validate();
    const int n = c.size();
    if (!is_valid_tour(initial, n)) {
        throw std::invalid_argument("simulated_annealing: initial tour is invalid");
    }

    AnnealResult result;
    Tour current = initial;
    double cost = tour_cost(current, c);
    result.initial_cost = cost;
    result.tour = current;
    result.cost = cost;
    result.best_trace.reserve(schedule.sweeps);

    if (n < 4) {
        // every cyclic order of <= 3 stops has the same cost
        result.best_trace.assign(schedule.sweeps, cost);
        return result;
    }

    double temperature = schedule.initial_temperature > 0.0 ? schedule.initial_temperature
                                                             : offdiagonal_stddev(c);
    if (!(temperature > 0.0)) {
        temperature = std::numeric_limits<double>::min();
    }
    const int proposals = schedule.proposals_per_sweep > 0 ? schedule.proposals_per_sweep : n;
    Rng rng(schedule.seed);

    for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
        for (int p = 0; p < proposals; ++p) {
            // reverse tour positions a+1..b; removes edges (a, a+1) and (b, b+1)
            int a = static_cast<int>(rng.below(n));
            int b = static_cast<int>(rng.below(n));
            if (a > b) {
                std::swap(a, b);
            }
            if (b - a < 2 || (a == 0 && b == n - 1)) {
                continue;
            }
            const int va = current[a];
            const int va1 = current[a + 1];
            const int vb = current[b];
            const int vb1 = current[(b + 1) % n];
            const double delta = c(va, vb) + c(va1, vb1) - c(va, va1) - c(vb, vb1);
            if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temperature)) {
                std::reverse(current.begin() + a + 1, current.begin() + b + 1);
                cost += delta;
                if (cost < result.cost) {
                    // re-sum to keep drift out of the reported cost
                    cost = tour_cost(current, c);
                    if (cost < result.cost) {
                        result.cost = cost;
                        result.tour = current;
                    }
                }
            }
        }
        result.best_trace.push_back(result.cost);
        temperature *= schedule.cooling;
    }
    return result;
}

AnnealResult anneal_restarts(const PenaltyMatrix& c, const AnnealSchedule& schedule,
                             const Tour& initial, int restarts, int threads) {
    if (restarts < 1) {
        throw std::invalid_argument("anneal_restarts: restarts must be >= 1");
    }
    std::vector<AnnealResult> results(restarts);
    auto run_chain = [&](int r) {
        AnnealSchedule s = schedule;
        s.seed = r == 0 ? schedule.seed : splitmix64(schedule.seed + static_cast<std::uint64_t>(r));
        results[r] = simulated_annealing(c, s, initial);
    };
    const int workers = std::clamp(threads, 1, restarts);
    if (workers == 1) {
        for (int r = 0; r < restarts; ++r) {
            run_chain(r);
        }
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int r = w; r < restarts; r += workers) {
                    run_chain(r);
                }
            });
        }
    }
    std::size_t best = 0;
    for (std::size_t r = 1; r < results.size(); ++r) {
        if (results[r].cost < results[best].cost) {
            best = r;
        }
    }
    return results[best];
}

Tour brute_force_tour(const PenaltyMatrix& c) {
    const int n = c.size();
    if (n > 10) {
        throw std::invalid_argument("brute_force_tour: refusing n > 10");
    }
    if (n < 1) {
        throw std::invalid_argument("brute_force_tour: empty matrix");
    }
    Tour perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Tour best = perm;
    double best_cost = tour_cost(perm, c);
    while (std::next_permutation(perm.begin() + 1, perm.end())) {
        const double cost = tour_cost(perm, c);
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    }
    return best;
}

Tour raster_tour(const StopGrid& grid) {
    const int side = grid.side();
    Tour tour;
    tour.reserve(grid.size());
    for (int row = 0; row < side; ++row) {
        for (int k = 0; k < side; ++k) {
            const int col = row % 2 == 0 ? k : side - 1 - k;
            tour.push_back(row * side + col);
        }
    }
    return tour;
}

double line_metric_optimum(const std::vector<double>& stop_costs) {
    if (stop_costs.empty()) {
        return 0.0;
    }
    const std::vector<double> s = quantize_costs(stop_costs);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    return 2.0 * (*hi - *lo);
}

}  // namespace lpbf
