#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lpbf/features.hpp"
#include "lpbf/heatsim.hpp"
#include "test_support.hpp"

using namespace lpbf;

namespace {

TemperatureField ramp(const GridSpec& g, double a, double b, double c = 0.0) {
    TemperatureField u(g, 0.0, 0.0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            u.at(i, j) = a * g.x(i) + b * g.y(j) + c;
        }
    }
    return u;
}

MoveSnapshot snap(TemperatureField f, double t0, double t1) {
    MoveSnapshot s;
    s.t_start = t0;
    s.t_end = t1;
    s.field = std::move(f);
    return s;
}

double max_mode_gradient_error(int n) {
    const GridSpec g{n, n};
    const MaterialParams m{};
    const TemperatureField u = analytic_mode_field(g, m, 1, 0.0, 1.0, 20.0);
    const GradientField grad = gradient_field(u);
    const double w = std::numbers::pi / 2.0;
    double err = 0.0;
    for (int j = 1; j < n - 1; ++j) {
        for (int i = 1; i < n - 1; ++i) {
            const double x = g.x(i), y = g.y(j);
            const double gx = w * std::cos(w * (x + 1)) * std::sin(w * (y + 1));
            const double gy = w * std::sin(w * (x + 1)) * std::cos(w * (y + 1));
            const Vec2& d = grad.at(i - 1, j - 1);
            err = std::max({err, std::abs(d[0] - gx), std::abs(d[1] - gy)});
        }
    }
    return err;
}

}  // namespace

TEST(GradientField, ConstantFieldIsZero) {
    const GridSpec g{20, 24};
    const GradientField grad = gradient_field(TemperatureField(g, 37.0, 20.0));
    EXPECT_EQ(grad.width, 18);
    EXPECT_EQ(grad.height, 22);
    for (const Vec2& d : grad.values) {
        EXPECT_EQ(d[0], 0.0);
        EXPECT_EQ(d[1], 0.0);
    }
}

TEST(GradientField, LinearRampIsExact) {
    const GridSpec g{33, 21};
    const GradientField grad = gradient_field(ramp(g, 3.0, -1.5, 7.0));
    for (const Vec2& d : grad.values) {
        EXPECT_NEAR(d[0], 3.0, 1e-12);
        EXPECT_NEAR(d[1], -1.5, 1e-12);
    }
}

TEST(GradientField, ModeGradientIsSecondOrder) {
    const double e1 = max_mode_gradient_error(33);
    const double e2 = max_mode_gradient_error(65);
    EXPECT_LT(e1, 0.01);
    EXPECT_GT(e1 / e2, 3.5);
}

TEST(SubdomainPartition, CoversInteriorOnce) {
    for (int n : {16, 17, 31, 64, 128}) {
        const GridSpec g{n, n + 3};
        const SubdomainPartition part(g);
        int total = 0;
        for (int l = 0; l < kSubdomains; ++l) {
            EXPECT_GT(part.count(l), 0);
            total += part.count(l);
        }
        EXPECT_EQ(total, part.interior_size());
        for (int j = 1; j < g.ny - 1; ++j) {
            for (int i = 1; i < g.nx - 1; ++i) {
                EXPECT_EQ(part.subdomain_of(i, j), oracle::naive_label(g, i, j));
            }
        }
    }
}

TEST(SubdomainPartition, RowRunsAlongY) {
    const GridSpec g{34, 34};
    const SubdomainPartition part(g);
    EXPECT_EQ(part.subdomain_of(1, 1), 0);
    EXPECT_EQ(part.subdomain_of(32, 1), 3);
    EXPECT_EQ(part.subdomain_of(1, 32), 12);
    EXPECT_EQ(part.subdomain_of(32, 32), 15);
}

TEST(SubdomainStats, ConstantField) {
    const GridSpec g{32, 32};
    const SubdomainPartition part(g);
    const std::vector<MoveSnapshot> w{snap(TemperatureField(g, 20.0, 20.0), 0, 1)};
    const StatsTable s = subdomain_stats(w, part);
    for (const auto& st : s) {
        EXPECT_EQ(st.psi[0], 0.0);
        EXPECT_EQ(st.psi[1], 0.0);
        EXPECT_NEAR(st.lambda, 20.0, 1e-12);
    }
}

TEST(SubdomainStats, RampMatchesIndexMapOracle) {
    const GridSpec g{30, 30};
    const SubdomainPartition part(g);
    const std::vector<MoveSnapshot> w{snap(ramp(g, 1.0, 0.0), 0, 1)};
    const StatsTable s = subdomain_stats(w, part);
    std::vector<double> xsum(16, 0.0);
    std::vector<int> cnt(16, 0);
    for (int j = 1; j < g.ny - 1; ++j) {
        for (int i = 1; i < g.nx - 1; ++i) {
            const int l = oracle::naive_label(g, i, j);
            xsum[l] += g.x(i);
            ++cnt[l];
        }
    }
    for (int l = 0; l < kSubdomains; ++l) {
        EXPECT_NEAR(s[l].psi[0], cnt[l], 1e-9);
        EXPECT_NEAR(s[l].psi[1], 0.0, 1e-9);
        EXPECT_NEAR(s[l].lambda, xsum[l] / cnt[l], 1e-12);
    }
}

TEST(SubdomainStats, EqualsDoubleLoopOracleExactly) {
    const GridSpec g{37, 29};
    const SubdomainPartition part(g);
    const MaterialParams m{};
    std::vector<MoveSnapshot> w{snap(analytic_mode_field(g, m, 3, 0.0, 4.0, 20.0), 0, 1),
                                snap(analytic_mode_field(g, m, 2, 0.0, -2.0, 25.0), 1, 2)};
    const StatsTable s = subdomain_stats(w, part);
    std::vector<double> px(16, 0.0), py(16, 0.0), sq(16, 0.0);
    for (const auto& sn : w) {
        for (int j = 1; j < g.ny - 1; ++j) {
            for (int i = 1; i < g.nx - 1; ++i) {
                const int l = oracle::naive_label(g, i, j);
                const Vec2 d = oracle::naive_gradient(sn.field, i, j);
                px[l] += d[0];
                py[l] += d[1];
                sq[l] += d[0] * d[0] + d[1] * d[1];
            }
        }
    }
    for (int l = 0; l < kSubdomains; ++l) {
        EXPECT_EQ(s[l].psi[0], px[l]);
        EXPECT_EQ(s[l].psi[1], py[l]);
        EXPECT_EQ(s[l].grad_sq_sum, sq[l]);
    }
    EXPECT_DOUBLE_EQ(s[0].t_start, 0.0);
    EXPECT_DOUBLE_EQ(s[0].t_end, 2.0);
}

TEST(SubdomainStats, TwoIdenticalSnapshots) {
    const GridSpec g{32, 32};
    const SubdomainPartition part(g);
    const MaterialParams m{};
    const TemperatureField f = analytic_mode_field(g, m, 2, 0.0, 3.0, 20.0);
    const std::vector<MoveSnapshot> one{snap(f, 0, 1)};
    const std::vector<MoveSnapshot> two{snap(f, 0, 1), snap(f, 1, 2)};
    const StatsTable a = subdomain_stats(one, part);
    const StatsTable b = subdomain_stats(two, part);
    const StatsTable lit = subdomain_stats(two, part, LambdaMode::Literal);
    for (int l = 0; l < kSubdomains; ++l) {
        EXPECT_NEAR(b[l].psi[0], 2.0 * a[l].psi[0], 1e-9);
        EXPECT_NEAR(b[l].psi[1], 2.0 * a[l].psi[1], 1e-9);
        EXPECT_NEAR(b[l].lambda, a[l].lambda, 1e-12);
        EXPECT_NEAR(lit[l].lambda, 2.0 * a[l].lambda, 1e-12);
    }
}

TEST(SubdomainStats, EmptyWindowThrows) {
    const SubdomainPartition part(GridSpec{32, 32});
    EXPECT_THROW(subdomain_stats({}, part), std::invalid_argument);
}

TEST(StopCost, HandValues) {
    StatsTable s{};
    for (auto& st : s) {
        st.lambda = 600.0;
    }
    EXPECT_EQ(stop_cost(s, 600.0), 0.0);
    for (auto& st : s) {
        st.lambda = 601.0;
    }
    EXPECT_DOUBLE_EQ(stop_cost(s, 600.0), 16.0);
    s[3].psi = {3.0, 4.0};
    s[3].grad_sq_sum = 7.0;
    EXPECT_DOUBLE_EQ(stop_cost(s, 600.0), 41.0);
    EXPECT_DOUBLE_EQ(stop_cost(s, 600.0, PsiNorm::SumOfSquares), 23.0);
}

TEST(StopCost, SimulatedDwellMatchesFlatLoop) {
    const GridSpec g{64, 64};
    const MaterialParams m{};
    const LaserParams l = LaserParams::with_waist_cells(g, 4200.0, 35.0 * 63.0 / 127.0);
    const TraverseResult r = traverse(TemperatureField(g, 20.0, 20.0), {0.3, -0.4}, {0.3, -0.4},
                                      l, m, 20 * max_stable_dt(g, m), 20);
    const SubdomainPartition part(g);
    const std::vector<MoveSnapshot> w{r.snapshot};
    const double cost = stop_cost(subdomain_stats(w, part), 600.0);
    const double ref = oracle::naive_stop_cost({&r.snapshot.field}, 600.0);
    EXPECT_GT(cost, 0.0);
    EXPECT_NEAR(cost, ref, 1e-10 * ref);
}

TEST(ObjectiveJ, ConstantRuns) {
    const GridSpec g{21, 21};
    std::vector<MoveSnapshot> at_target, above;
    for (int k = 0; k < 5; ++k) {
        at_target.push_back(snap(TemperatureField(g, 600.0, 600.0), k * 2.0, k * 2.0 + 2.0));
        above.push_back(snap(TemperatureField(g, 601.0, 601.0), k * 2.0, k * 2.0 + 2.0));
    }
    EXPECT_EQ(objective_J(at_target, 600.0), 0.0);
    // elapsed time between first and last snapshot is 8
    EXPECT_NEAR(objective_J(above, 600.0), 0.5 * 4.0 * 8.0, 1e-12);
}

TEST(ObjectiveJ, AdditiveAtSharedSnapshot) {
    SimulationSetup s;
    s.grid = {32, 32};
    const std::vector<Point> stops{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}, {0.0, 0.0}};
    const RunRecord run = simulate_run(s, stops, {0, 1, 2, 3, 4, 0, 2});
    const std::span<const MoveSnapshot> all(run.snapshots);
    const double whole = objective_J(all, 600.0);
    const double left = objective_J(all.subspan(0, 4), 600.0);
    const double right = objective_J(all.subspan(3), 600.0);
    EXPECT_GT(whole, 0.0);
    EXPECT_NEAR(left + right, whole, 1e-9 * whole);
}
