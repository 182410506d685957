#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lpbf/rng.hpp"
#include "lpbf/tour.hpp"

using namespace lpbf;

namespace {

std::vector<double> random_costs(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> s(n);
    for (double& v : s) {
        v = rng.uniform(0.0, 100.0);
    }
    return s;
}

// Exhaustive minimum with stop 0 first, independent of brute_force_tour.
double enumerate_min(const PenaltyMatrix& c) {
    std::vector<int> rest(c.size() - 1);
    std::iota(rest.begin(), rest.end(), 1);
    double best = 1e300;
    do {
        double cost = c(0, rest.front()) + c(rest.back(), 0);
        for (std::size_t k = 1; k < rest.size(); ++k) {
            cost += c(rest[k - 1], rest[k]);
        }
        best = std::min(best, cost);
    } while (std::next_permutation(rest.begin(), rest.end()));
    return best;
}

AnnealSchedule generous(std::uint64_t seed) {
    AnnealSchedule s;
    s.sweeps = 3000;
    s.proposals_per_sweep = 64;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(PenaltyMatrix, ThreeStops) {
    const PenaltyMatrix c = build_penalty_matrix({1.0, 4.0, 6.0});
    const std::vector<double> expect{0, 3, 5, 3, 0, 2, 5, 2, 0};
    EXPECT_EQ(c.entries(), expect);
    for (const Tour& t : {Tour{0, 1, 2}, Tour{0, 2, 1}, Tour{2, 1, 0}, Tour{1, 0, 2}}) {
        EXPECT_EQ(tour_cost(t, c), 10.0);
    }
    EXPECT_EQ(tour_cost(brute_force_tour(c), c), 10.0);
}

TEST(PenaltyMatrix, EqualCostsGiveZeroMatrix) {
    const PenaltyMatrix c = build_penalty_matrix(std::vector<double>(6, 2.5));
    for (double v : c.entries()) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_EQ(tour_cost({5, 1, 3, 0, 2, 4}, c), 0.0);
    const AnnealResult r = simulated_annealing(c, AnnealSchedule{}, {0, 1, 2, 3, 4, 5});
    EXPECT_EQ(r.cost, 0.0);
}

TEST(PenaltyMatrix, PseudometricExactly) {
    const PenaltyMatrix c = build_penalty_matrix(random_costs(40, 7));
    for (int i = 0; i < 40; ++i) {
        EXPECT_EQ(c(i, i), 0.0);
        for (int j = 0; j < 40; ++j) {
            EXPECT_EQ(c(i, j), c(j, i));
            for (int k = 0; k < 40; ++k) {
                EXPECT_LE(c(i, k), c(i, j) + c(j, k));
            }
        }
    }
}

TEST(PenaltyMatrix, QuantizedCostsStayClose) {
    const std::vector<double> s = random_costs(100, 3);
    const std::vector<double> q = quantize_costs(s);
    for (std::size_t k = 0; k < s.size(); ++k) {
        EXPECT_LE(std::abs(q[k] - s[k]), 1e-11 * 128.0);
    }
    EXPECT_EQ(quantize_costs({1.0, 4.0, 6.0}), (std::vector<double>{1.0, 4.0, 6.0}));
    EXPECT_EQ(quantize_costs({0.0, 0.0}), (std::vector<double>{0.0, 0.0}));
}

TEST(PenaltyMatrix, RejectsBadInput) {
    EXPECT_THROW(build_penalty_matrix({1.0, 2.0}), std::invalid_argument);
    EXPECT_THROW(build_penalty_matrix({1.0, NAN, 2.0}), std::invalid_argument);
    EXPECT_THROW(build_penalty_matrix({1.0, -1.0, 2.0}), std::invalid_argument);
}

TEST(TourCost, SizeMismatchThrows) {
    const PenaltyMatrix c = build_penalty_matrix({1.0, 4.0, 6.0});
    EXPECT_THROW(tour_cost({0, 1}, c), std::invalid_argument);
    EXPECT_THROW(tour_cost({0, 1, 1}, c), std::invalid_argument);
}

TEST(TourCost, SortedOrderIsLineOptimum) {
    for (int n = 3; n <= 8; ++n) {
        const std::vector<double> s = random_costs(n, 100 + n);
        const PenaltyMatrix c = build_penalty_matrix(s);
        Tour sorted(n);
        std::iota(sorted.begin(), sorted.end(), 0);
        std::sort(sorted.begin(), sorted.end(), [&](int a, int b) { return s[a] < s[b]; });
        const double bound = line_metric_optimum(s);
        const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
        EXPECT_NEAR(bound, 2.0 * (*hi - *lo), 1e-9);
        // quantized costs make these sums exact
        EXPECT_EQ(tour_cost(sorted, c), bound);
        EXPECT_EQ(enumerate_min(c), bound);
    }
}

TEST(BruteForce, FiveStopsOnALine) {
    const PenaltyMatrix c = build_penalty_matrix({0, 1, 2, 3, 4});
    const Tour t = brute_force_tour(c);
    EXPECT_TRUE(is_valid_tour(t, 5));
    EXPECT_EQ(t.front(), 0);
    EXPECT_EQ(tour_cost(t, c), 8.0);
}

TEST(BruteForce, RefusesLargeInstances) {
    EXPECT_THROW(brute_force_tour(build_penalty_matrix(random_costs(11, 1))),
                 std::invalid_argument);
}

TEST(Annealing, MatchesBruteForceAtEight) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PenaltyMatrix c = build_penalty_matrix(random_costs(8, seed * 31));
        const double exact = tour_cost(brute_force_tour(c), c);
        EXPECT_EQ(exact, enumerate_min(c));
        const AnnealResult r = simulated_annealing(c, generous(seed), {0, 1, 2, 3, 4, 5, 6, 7});
        EXPECT_TRUE(is_valid_tour(r.tour, 8));
        EXPECT_EQ(r.cost, exact) << "seed " << seed;
    }
}

TEST(Annealing, BestTraceNonIncreasingAndBelowInitial) {
    const std::vector<double> s = random_costs(64, 5);
    const PenaltyMatrix c = build_penalty_matrix(s);
    AnnealSchedule sched;
    sched.sweeps = 300;
    Tour init(64);
    std::iota(init.begin(), init.end(), 0);
    const AnnealResult r = simulated_annealing(c, sched, init);
    EXPECT_EQ(r.best_trace.size(), 300u);
    for (std::size_t k = 1; k < r.best_trace.size(); ++k) {
        EXPECT_LE(r.best_trace[k], r.best_trace[k - 1]);
    }
    EXPECT_LE(r.cost, r.initial_cost);
    EXPECT_DOUBLE_EQ(r.initial_cost, tour_cost(init, c));
    EXPECT_DOUBLE_EQ(r.cost, tour_cost(r.tour, c));
    EXPECT_GE(r.cost, line_metric_optimum(s) - 1e-9);
}

TEST(Annealing, DeterministicForSeed) {
    const PenaltyMatrix c = build_penalty_matrix(random_costs(50, 9));
    AnnealSchedule sched;
    sched.sweeps = 200;
    sched.seed = 77;
    Tour init(50);
    std::iota(init.begin(), init.end(), 0);
    const AnnealResult a = simulated_annealing(c, sched, init);
    const AnnealResult b = simulated_annealing(c, sched, init);
    EXPECT_EQ(a.tour, b.tour);
    EXPECT_EQ(a.best_trace, b.best_trace);
    const AnnealResult p = anneal_restarts(c, sched, init, 3, 1);
    const AnnealResult q = anneal_restarts(c, sched, init, 3, 3);
    EXPECT_EQ(p.tour, q.tour);
}

TEST(Annealing, ScheduleValidation) {
    AnnealSchedule s;
    s.cooling = 1.0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = AnnealSchedule{};
    s.sweeps = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Raster, TwoByTwo) {
    EXPECT_EQ(raster_tour(StopGrid(2)), (Tour{0, 1, 3, 2}));
}

TEST(Raster, SixteenBySixteen) {
    const Tour t = raster_tour(StopGrid(16));
    ASSERT_TRUE(is_valid_tour(t, 256));
    for (int row = 0; row < 16; ++row) {
        for (int k = 0; k < 16; ++k) {
            const int col = row % 2 == 0 ? k : 15 - k;
            EXPECT_EQ(t[row * 16 + k], row * 16 + col);
        }
    }
}

TEST(StopGrid, CellCenteredLattice) {
    const StopGrid g(16);
    EXPECT_DOUBLE_EQ(g.point(0).x, -1.0 + 1.0 / 16.0);
    EXPECT_DOUBLE_EQ(g.point(0).y, -1.0 + 1.0 / 16.0);
    EXPECT_DOUBLE_EQ(g.point(17).x, -1.0 + 3.0 / 16.0);
    EXPECT_DOUBLE_EQ(g.point(17).y, -1.0 + 3.0 / 16.0);
    EXPECT_DOUBLE_EQ(g.point(255).x, 1.0 - 1.0 / 16.0);
}

TEST(TourValidity, Checks) {
    EXPECT_TRUE(is_valid_tour({2, 0, 1}, 3));
    EXPECT_FALSE(is_valid_tour({2, 0, 0}, 3));
    EXPECT_FALSE(is_valid_tour({0, 1, 3}, 3));
    EXPECT_FALSE(is_valid_tour({0, 1}, 3));
}
