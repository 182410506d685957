#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpbf {

/// Raised when an explicit time step exceeds the stability limit.
class StabilityError : public std::runtime_error {
public:
    StabilityError(double dt, double max_dt);
    double dt() const { return dt_; }
    double max_dt() const { return max_dt_; }

private:
    double dt_;
    double max_dt_;
};

/// Regular node grid on the square [-1, 1] x [-1, 1]. Node (0, j), (nx-1, j),
/// (i, 0) and (i, ny-1) form the boundary ring.
struct GridSpec {
    int nx = 128;
    int ny = 128;

    double hx() const { return 2.0 / (nx - 1); }
    double hy() const { return 2.0 / (ny - 1); }
    double x(int i) const { return -1.0 + i * hx(); }
    double y(int j) const { return -1.0 + j * hy(); }
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }

    void validate() const;
    bool operator==(const GridSpec&) const = default;
};

struct MaterialParams {
    double kappa = 237.0;   // W/(m K)
    double c_heat = 897.0;  // J/(kg K)
    double rho = 2700.0;    // kg/m^3

    double alpha() const { return kappa / (c_heat * rho); }
    double beta() const { return 1.0 / (c_heat * rho); }
    void validate() const;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Gaussian beam. `omega` is the waist radius in domain units; use
/// `with_waist_cells` to specify it in grid cells. A zero power turns the
/// source off.
struct LaserParams {
    double power = 4200.0;
    double omega = 35.0 * 2.0 / 127.0;
    Point center{};

    double peak_intensity() const;
    void validate() const;
    static LaserParams with_waist_cells(const GridSpec& grid, double power, double omega_cells,
                                        Point center = {});
};

class TemperatureField {
public:
    TemperatureField() = default;
    TemperatureField(GridSpec grid, double initial, double theta0);

    const GridSpec& grid() const { return grid_; }
    double theta0() const { return theta0_; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    double& at(int i, int j) { return values_[grid_.index(i, j)]; }
    double at(int i, int j) const { return values_[grid_.index(i, j)]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double min() const;
    double max() const;
    /// Arithmetic mean over interior nodes.
    double interior_mean() const;

    /// Resets the boundary ring to theta0.
    void clamp_boundary();

    bool operator==(const TemperatureField&) const = default;

private:
    GridSpec grid_{};
    std::vector<double> values_;
    double theta0_ = 20.0;
    double time_ = 0.0;
};

/// I0 * exp(-2 ((x-xc)^2 + (y-yc)^2) / omega^2) with I0 = 2P / (pi omega^2).
double gaussian_intensity(Point p, const LaserParams& laser);

/// Largest dt for which the explicit 5-point scheme keeps non-negative
/// stencil weights: 1 / (2 alpha (1/hx^2 + 1/hy^2)). Equals h^2/(4 alpha) on
/// square cells.
double max_stable_dt(const GridSpec& grid, const MaterialParams& material);

/// One forward-Euler step of u_t = alpha lap(u) + beta I. Interior rows may be
/// split over `threads` workers; the result does not depend on the split.
TemperatureField step(const TemperatureField& field, const LaserParams& laser,
                      const MaterialParams& material, double dt, int threads = 1);

/// theta0 + amplitude exp(-alpha k^2 pi^2 t / 2) sin(k pi (x+1)/2) sin(k pi (y+1)/2).
TemperatureField analytic_mode_field(const GridSpec& grid, const MaterialParams& material, int k,
                                     double t, double amplitude, double theta0);

struct MoveSnapshot {
    int move = 0;        // 0-based move number
    int stop_index = 0;  // 0-based stop the move ends at
    double t_start = 0.0;
    double t_end = 0.0;
    TemperatureField field;
};

struct RunRecord {
    GridSpec grid{};
    MaterialParams material{};
    LaserParams laser{};  // center is irrelevant here; power and waist are used
    double theta0 = 20.0;
    double initial_temperature = 20.0;
    double tau = 0.0;
    int substeps = 0;
    std::vector<int> trajectory;  // 0-based stop indices
    std::vector<Point> stops;     // stop coordinates indexed by stop index
    std::vector<MoveSnapshot> snapshots;
};

struct TraverseResult {
    TemperatureField field;
    MoveSnapshot snapshot;
};

/// Moves the beam along the straight segment from `from` to `to` in `substeps`
/// equal steps of tau/substeps. The beam center during step s is the
/// segment point at fraction (s+1)/substeps.
TraverseResult traverse(const TemperatureField& field, Point from, Point to,
                        const LaserParams& laser, const MaterialParams& material, double tau,
                        int substeps, int threads = 1);

struct SimulationSetup {
    GridSpec grid{};
    MaterialParams material{};
    double power = 4200.0;
    double omega_cells = 35.0;
    double theta0 = 20.0;
    double initial_temperature = 20.0;
    int substeps = 20;
    /// Move duration; non-positive selects substeps * max_stable_dt.
    double tau = 0.0;
    int threads = 1;

    double move_duration() const;
};

/// Simulates a whole tour. The first move dwells on trajectory[0]; every later
/// move travels from the previous stop. One snapshot per move.
RunRecord simulate_run(const SimulationSetup& setup, const std::vector<Point>& stops,
                       const std::vector<int>& trajectory);

}  // namespace lpbf
