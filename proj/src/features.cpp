#include "lpbf/features.hpp"

#include <stdexcept>

namespace lpbf {

namespace {

// Derivative along a line of samples v(k) = u[base + k*stride], k in [lo, hi],
// at position k. Central inside, second-order one-sided at lo and hi.
double line_derivative(const std::vector<double>& u, std::size_t base, std::size_t stride, int k,
                       int lo, int hi, double h) {
    auto v = [&](int kk) { return u[base + static_cast<std::size_t>(kk) * stride]; };
    if (k == lo) {
        return (-3.0 * v(k) + 4.0 * v(k + 1) - v(k + 2)) / (2.0 * h);
    }
    if (k == hi) {
        return (3.0 * v(k) - 4.0 * v(k - 1) + v(k - 2)) / (2.0 * h);
    }
    return (v(k + 1) - v(k - 1)) / (2.0 * h);
}

}  // namespace

GradientField gradient_field(const TemperatureField& field) {
    const GridSpec& g = field.grid();
    const auto& u = field.values();
    GradientField out;
    out.width = g.nx - 2;
    out.height = g.ny - 2;
    out.values.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int j = 1; j < g.ny - 1; ++j) {
        for (int i = 1; i < g.nx - 1; ++i) {
            const double gx = line_derivative(u, g.index(0, j), 1, i, 1, g.nx - 2, g.hx());
            const double gy = line_derivative(u, g.index(i, 0), g.nx, j, 1, g.ny - 2, g.hy());
            out.values[static_cast<std::size_t>(j - 1) * out.width + (i - 1)] = {gx, gy};
        }
    }
    return out;
}

SubdomainPartition::SubdomainPartition(const GridSpec& grid) : grid_(grid) {
    grid_.validate();
    const int w = grid.nx - 2;
    const int h = grid.ny - 2;
    labels_.resize(static_cast<std::size_t>(w) * h);
    auto block = [](int k, int m) {
        // largest b with floor(b m / 4) <= k
        int b = 0;
        while (b + 1 < kSubdomainsPerAxis && (b + 1) * m / kSubdomainsPerAxis <= k) {
            ++b;
        }
        return b;
    };
    for (int jj = 0; jj < h; ++jj) {
        const int row = block(jj, h);
        for (int ii = 0; ii < w; ++ii) {
            const int l = row * kSubdomainsPerAxis + block(ii, w);
            labels_[static_cast<std::size_t>(jj) * w + ii] = l;
            ++counts_[l];
        }
    }
}

StatsTable subdomain_stats(std::span<const MoveSnapshot> window, const SubdomainPartition& part,
                           LambdaMode mode) {
    if (window.empty()) {
        throw std::invalid_argument("subdomain_stats: empty snapshot window");
    }
    const GridSpec& g = part.grid();
    StatsTable stats{};
    std::array<double, kSubdomains> temp_sum{};

    for (const MoveSnapshot& snap : window) {
        if (!(snap.field.grid() == g)) {
            throw std::invalid_argument("subdomain_stats: snapshot grid differs from partition");
        }
        const GradientField grad = gradient_field(snap.field);
        for (int j = 1; j < g.ny - 1; ++j) {
            for (int i = 1; i < g.nx - 1; ++i) {
                const int l = part.subdomain_of(i, j);
                const Vec2& d = grad.at(i - 1, j - 1);
                stats[l].psi[0] += d[0];
                stats[l].psi[1] += d[1];
                stats[l].grad_sq_sum += d[0] * d[0] + d[1] * d[1];
                temp_sum[l] += snap.field.at(i, j);
            }
        }
    }

    const double times = mode == LambdaMode::TimeMean ? static_cast<double>(window.size()) : 1.0;
    for (int l = 0; l < kSubdomains; ++l) {
        stats[l].lambda = temp_sum[l] / part.count(l) / times;
        stats[l].t_start = window.front().t_start;
        stats[l].t_end = window.back().t_end;
    }
    return stats;
}

double psi_energy(const SubdomainStats& s, PsiNorm norm) {
    if (norm == PsiNorm::SumOfSquares) {
        return s.grad_sq_sum;
    }
    return s.psi[0] * s.psi[0] + s.psi[1] * s.psi[1];
}

double stop_cost(const StatsTable& stats, double target, PsiNorm norm) {
    double total = 0.0;
    for (const SubdomainStats& s : stats) {
        const double dev = s.lambda - target;
        total += psi_energy(s, norm) + dev * dev;
    }
    return total;
}

namespace {

double spatial_integral(const TemperatureField& f, double target) {
    const GridSpec& g = f.grid();
    const auto& u = f.values();
    double sum = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        const double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
        for (int i = 0; i < g.nx; ++i) {
            const double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            const double gx = line_derivative(u, g.index(0, j), 1, i, 0, g.nx - 1, g.hx());
            const double gy = line_derivative(u, g.index(i, 0), g.nx, j, 0, g.ny - 1, g.hy());
            const double dev = f.at(i, j) - target;
            sum += wx * wy * (gx * gx + gy * gy + dev * dev);
        }
    }
    return sum * g.hx() * g.hy();
}

}  // namespace

double objective_J(std::span<const MoveSnapshot> snapshots, double target) {
    if (snapshots.empty()) {
        throw std::invalid_argument("objective_J: empty run");
    }
    double total = 0.0;
    double prev = spatial_integral(snapshots.front().field, target);
    for (std::size_t k = 1; k < snapshots.size(); ++k) {
        const double cur = spatial_integral(snapshots[k].field, target);
        total += 0.5 * (prev + cur) * (snapshots[k].t_end - snapshots[k - 1].t_end);
        prev = cur;
    }
    return 0.5 * total;
}

}  // namespace lpbf
