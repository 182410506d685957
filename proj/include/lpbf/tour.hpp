#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpbf/heatsim.hpp"

namespace lpbf {

/// side x side stopping points on the cell-centered lattice of [-1, 1]^2:
/// stop k = row * side + col sits at (-1 + (col + 1/2) 2/side, -1 + (row + 1/2) 2/side).
class StopGrid {
public:
    explicit StopGrid(int side = 16);

    int side() const { return side_; }
    int size() const { return side_ * side_; }
    Point point(int index) const;
    std::vector<Point> points() const;

private:
    int side_;
};

/// Dense symmetric cost matrix over n stops.
class PenaltyMatrix {
public:
    PenaltyMatrix() = default;
    PenaltyMatrix(int n, std::vector<double> entries, std::string provenance = {});

    int size() const { return n_; }
    double operator()(int i, int j) const { return c_[static_cast<std::size_t>(i) * n_ + j]; }
    const std::vector<double>& entries() const { return c_; }
    const std::string& provenance() const { return provenance_; }

private:
    int n_ = 0;
    std::vector<double> c_;
    std::string provenance_;
};

/// Significant bits kept by quantize_costs.
inline constexpr int kCostBits = 40;

/// Rounds costs to integer multiples of 2^(e - 40), where 2^e just exceeds
/// the largest cost. Every |s_i - s_j| and every sum of two of them is then
/// exact in double precision, so C is a pseudometric without rounding slack.
std::vector<double> quantize_costs(const std::vector<double>& stop_costs);

/// C_ij = |s_i - s_j| on quantized costs.
PenaltyMatrix build_penalty_matrix(const std::vector<double>& stop_costs,
                                   std::string provenance = {});

/// Cyclic visiting order over 0-based stop indices.
using Tour = std::vector<int>;

bool is_valid_tour(const Tour& tour, int n);

/// Sum of C over consecutive pairs, closing edge included.
double tour_cost(const Tour& tour, const PenaltyMatrix& c);

struct AnnealSchedule {
    /// Non-positive selects the standard deviation of the off-diagonal entries.
    double initial_temperature = 0.0;
    double cooling = 0.995;
    int sweeps = 2000;
    /// Non-positive selects n proposals per sweep.
    int proposals_per_sweep = 0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct AnnealResult {
    Tour tour;
    double cost = 0.0;
    double initial_cost = 0.0;
    std::vector<double> best_trace;  // best-so-far cost after each sweep
};

/// 2-opt segment reversal proposals with Metropolis acceptance; returns the
/// best tour seen. Deterministic for a given seed.
AnnealResult simulated_annealing(const PenaltyMatrix& c, const AnnealSchedule& schedule,
                                 const Tour& initial);

/// Runs `restarts` independent chains with seeds derived from schedule.seed,
/// optionally on several threads, and keeps the cheapest (lowest restart index
/// on ties).
AnnealResult anneal_restarts(const PenaltyMatrix& c, const AnnealSchedule& schedule,
                             const Tour& initial, int restarts, int threads = 1);

/// Exact minimum over all cyclic orders with stop 0 fixed first. n <= 10.
Tour brute_force_tour(const PenaltyMatrix& c);

/// Boustrophedon sweep: even rows left to right, odd rows right to left.
Tour raster_tour(const StopGrid& grid);

/// 2 (max s - min s) on quantized costs, the optimal cost of any tour under C_ij = |s_i - s_j|.
double line_metric_optimum(const std::vector<double>& stop_costs);

}  // namespace lpbf
