#pragma once

#include <array>
#include <span>
#include <vector>

#include "lpbf/heatsim.hpp"

namespace lpbf {

inline constexpr int kSubdomainsPerAxis = 4;
inline constexpr int kSubdomains = kSubdomainsPerAxis * kSubdomainsPerAxis;

using Vec2 = std::array<double, 2>;

/// Gradient samples on interior nodes (i, j) with 1 <= i <= nx-2,
/// 1 <= j <= ny-2, stored row-major by interior row.
struct GradientField {
    int width = 0;   // nx - 2
    int height = 0;  // ny - 2
    std::vector<Vec2> values;

    const Vec2& at(int ii, int jj) const { return values[static_cast<std::size_t>(jj) * width + ii]; }
};

/// Central differences on interior nodes; on the interior ring next to the
/// boundary, second-order one-sided differences that only use interior nodes.
GradientField gradient_field(const TemperatureField& field);

/// Splits the interior nodes into 4 x 4 blocks. Sub-domain l = row * 4 + col,
/// where row counts along y (from y = -1) and col along x (from x = -1). Block
/// edges along an axis with m interior nodes are at floor(k m / 4).
class SubdomainPartition {
public:
    explicit SubdomainPartition(const GridSpec& grid);

    const GridSpec& grid() const { return grid_; }
    /// Sub-domain of interior node (i, j), both in full-grid coordinates.
    int subdomain_of(int i, int j) const {
        return labels_[static_cast<std::size_t>(j - 1) * (grid_.nx - 2) + (i - 1)];
    }
    int count(int l) const { return counts_[l]; }
    int interior_size() const { return (grid_.nx - 2) * (grid_.ny - 2); }

private:
    GridSpec grid_;
    std::vector<int> labels_;
    std::array<int, kSubdomains> counts_{};
};

enum class LambdaMode {
    TimeMean,  // space mean averaged over the window snapshots (degrees C)
    Literal,   // space mean summed over the window snapshots
};

struct SubdomainStats {
    Vec2 psi{0.0, 0.0};       // summed gradient over cells and window times
    double grad_sq_sum = 0.0;  // summed |grad u|^2 over cells and window times
    double lambda = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
};

using StatsTable = std::array<SubdomainStats, kSubdomains>;

/// Aggregates a window of snapshots per sub-domain. Summation order: snapshots
/// in window order, then interior rows ascending, then columns ascending.
StatsTable subdomain_stats(std::span<const MoveSnapshot> window, const SubdomainPartition& part,
                           LambdaMode mode = LambdaMode::TimeMean);

enum class PsiNorm {
    SummedVector,  // ||sum grad u||^2
    SumOfSquares,  // sum |grad u|^2
};

double psi_energy(const SubdomainStats& s, PsiNorm norm = PsiNorm::SummedVector);

/// sum_l (psi energy + (lambda - u_g)^2).
double stop_cost(const StatsTable& stats, double target, PsiNorm norm = PsiNorm::SummedVector);

/// 1/2 int_t int_Omega |grad u|^2 + (u - u_g)^2. Space: trapezoid weights on
/// the full node grid (boundary gradients one-sided). Time: trapezoid between
/// consecutive snapshot end times, so splitting a run at snapshot m into
/// [0..m] and [m..N] is exactly additive.
double objective_J(std::span<const MoveSnapshot> snapshots, double target);

}  // namespace lpbf
