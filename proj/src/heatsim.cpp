#include "lpbf/heatsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace lpbf {

namespace {

std::string stability_message(double dt, double max_dt) {
    std::ostringstream os;
    os.precision(17);
    os << "time step " << dt << " exceeds the explicit stability limit; maximum admissible dt is "
       << max_dt;
    return os.str();
}

// Relative slack on the stability bound so that tau/substeps computed from
// substeps * max_dt is not rejected for the last ulp.
constexpr double kStabilitySlack = 1e-12;

}  // namespace

StabilityError::StabilityError(double dt, double max_dt)
    : std::runtime_error(stability_message(dt, max_dt)), dt_(dt), max_dt_(max_dt) {}

void GridSpec::validate() const {
    if (nx < 16 || ny < 16) {
        throw std::invalid_argument("grid needs at least 16 nodes per axis");
    }
}

void MaterialParams::validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!ok(kappa) || !ok(c_heat) || !ok(rho)) {
        throw std::invalid_argument("material parameters must be finite and strictly positive");
    }
}

double LaserParams::peak_intensity() const {
    return 2.0 * power / (std::numbers::pi * omega * omega);
}

void LaserParams::validate() const {
    if (!std::isfinite(power) || power < 0.0) {
        throw std::invalid_argument("laser power must be finite and non-negative");
    }
    if (!std::isfinite(omega) || omega <= 0.0) {
        throw std::invalid_argument("laser waist must be finite and positive");
    }
    if (!std::isfinite(center.x) || !std::isfinite(center.y) || std::abs(center.x) >= 1.0 ||
        std::abs(center.y) >= 1.0) {
        throw std::invalid_argument("laser center must lie strictly inside the domain");
    }
}

LaserParams LaserParams::with_waist_cells(const GridSpec& grid, double power, double omega_cells,
                                          Point center) {
    return LaserParams{power, omega_cells * grid.hx(), center};
}

TemperatureField::TemperatureField(GridSpec grid, double initial, double theta0)
    : grid_(grid), values_(grid.size(), initial), theta0_(theta0) {
    grid_.validate();
}

double TemperatureField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double TemperatureField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double TemperatureField::interior_mean() const {
    double sum = 0.0;
    for (int j = 1; j < grid_.ny - 1; ++j) {
        for (int i = 1; i < grid_.nx - 1; ++i) {
            sum += at(i, j);
        }
    }
    return sum / (static_cast<double>(grid_.nx - 2) * (grid_.ny - 2));
}

void TemperatureField::clamp_boundary() {
    for (int i = 0; i < grid_.nx; ++i) {
        at(i, 0) = theta0_;
        at(i, grid_.ny - 1) = theta0_;
    }
    for (int j = 0; j < grid_.ny; ++j) {
        at(0, j) = theta0_;
        at(grid_.nx - 1, j) = theta0_;
    }
}

double gaussian_intensity(Point p, const LaserParams& laser) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument("gaussian_intensity: non-finite coordinates");
    }
    const double dx = (p.x - laser.center.x) / laser.omega;
    const double dy = (p.y - laser.center.y) / laser.omega;
    return laser.peak_intensity() * std::exp(-2.0 * (dx * dx + dy * dy));
}

double max_stable_dt(const GridSpec& grid, const MaterialParams& material) {
    const double ix = 1.0 / (grid.hx() * grid.hx());
    const double iy = 1.0 / (grid.hy() * grid.hy());
    return 1.0 / (2.0 * material.alpha() * (ix + iy));
}

TemperatureField step(const TemperatureField& field, const LaserParams& laser,
                      const MaterialParams& material, double dt, int threads) {
    const GridSpec& g = field.grid();
    const double limit = max_stable_dt(g, material);
    if (!(dt > 0.0) || dt > limit * (1.0 + kStabilitySlack)) {
        throw StabilityError(dt, limit);
    }

    const double alpha = material.alpha();
    const double beta = material.beta();
    const double ix = 1.0 / (g.hx() * g.hx());
    const double iy = 1.0 / (g.hy() * g.hy());
    const bool source_on = laser.power > 0.0;

    TemperatureField next = field;
    const auto& u = field.values();
    auto& out = next.values();

    auto update_rows = [&](int j_begin, int j_end) {
        for (int j = j_begin; j < j_end; ++j) {
            const double y = g.y(j);
            for (int i = 1; i < g.nx - 1; ++i) {
                const std::size_t c = g.index(i, j);
                const double lap = (u[c - 1] - 2.0 * u[c] + u[c + 1]) * ix +
                                   (u[c - g.nx] - 2.0 * u[c] + u[c + g.nx]) * iy;
                double rhs = alpha * lap;
                if (source_on) {
                    rhs += beta * gaussian_intensity({g.x(i), y}, laser);
                }
                out[c] = u[c] + dt * rhs;
            }
        }
    };

    const int rows = g.ny - 2;
    const int workers = std::clamp(threads, 1, rows);
    if (workers == 1) {
        update_rows(1, g.ny - 1);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            const int b = 1 + rows * w / workers;
            const int e = 1 + rows * (w + 1) / workers;
            pool.emplace_back(update_rows, b, e);
        }
    }

    next.clamp_boundary();
    next.set_time(field.time() + dt);
    return next;
}

TemperatureField analytic_mode_field(const GridSpec& grid, const MaterialParams& material, int k,
                                     double t, double amplitude, double theta0) {
    if (k < 1) {
        throw std::invalid_argument("mode index must be >= 1");
    }
    constexpr double pi = std::numbers::pi;
    const double decay = std::exp(-material.alpha() * k * k * pi * pi / 2.0 * t);
    TemperatureField f(grid, theta0, theta0);
    for (int j = 0; j < grid.ny; ++j) {
        const double sy = std::sin(k * pi * (grid.y(j) + 1.0) / 2.0);
        for (int i = 0; i < grid.nx; ++i) {
            const double sx = std::sin(k * pi * (grid.x(i) + 1.0) / 2.0);
            f.at(i, j) = theta0 + amplitude * decay * sx * sy;
        }
    }
    f.clamp_boundary();
    f.set_time(t);
    return f;
}

TraverseResult traverse(const TemperatureField& field, Point from, Point to,
                        const LaserParams& laser, const MaterialParams& material, double tau,
                        int substeps, int threads) {
    if (substeps < 1) {
        throw std::invalid_argument("traverse: substeps must be >= 1");
    }
    if (!(tau > 0.0)) {
        throw std::invalid_argument("traverse: move duration must be positive");
    }
    const double dt = tau / substeps;
    const double limit = max_stable_dt(field.grid(), material);
    if (dt > limit * (1.0 + kStabilitySlack)) {
        throw StabilityError(dt, limit);
    }

    LaserParams beam = laser;
    beam.center = to;
    beam.validate();
    beam.center = from;
    beam.validate();

    TraverseResult result{field, {}};
    const double t0 = field.time();
    for (int s = 0; s < substeps; ++s) {
        const double frac = static_cast<double>(s + 1) / substeps;
        beam.center = {from.x + frac * (to.x - from.x), from.y + frac * (to.y - from.y)};
        result.field = step(result.field, beam, material, dt, threads);
    }
    result.snapshot.t_start = t0;
    result.snapshot.t_end = result.field.time();
    result.snapshot.field = result.field;
    return result;
}

double SimulationSetup::move_duration() const {
    if (tau > 0.0) {
        return tau;
    }
    return substeps * max_stable_dt(grid, material);
}

RunRecord simulate_run(const SimulationSetup& setup, const std::vector<Point>& stops,
                       const std::vector<int>& trajectory) {
    setup.grid.validate();
    setup.material.validate();
    if (trajectory.empty()) {
        throw std::invalid_argument("simulate_run: empty trajectory");
    }
    for (int s : trajectory) {
        if (s < 0 || static_cast<std::size_t>(s) >= stops.size()) {
            throw std::invalid_argument("simulate_run: trajectory references an unknown stop");
        }
    }

    RunRecord run;
    run.grid = setup.grid;
    run.material = setup.material;
    run.laser = LaserParams::with_waist_cells(setup.grid, setup.power, setup.omega_cells);
    run.theta0 = setup.theta0;
    run.initial_temperature = setup.initial_temperature;
    run.tau = setup.move_duration();
    run.substeps = setup.substeps;
    run.trajectory = trajectory;
    run.stops = stops;
    run.snapshots.reserve(trajectory.size());

    TemperatureField field(setup.grid, setup.initial_temperature, setup.theta0);
    Point prev = stops[trajectory.front()];
    for (std::size_t m = 0; m < trajectory.size(); ++m) {
        const Point next = stops[trajectory[m]];
        auto moved = traverse(field, prev, next, run.laser, setup.material, run.tau,
                              setup.substeps, setup.threads);
        moved.snapshot.move = static_cast<int>(m);
        moved.snapshot.stop_index = trajectory[m];
        run.snapshots.push_back(std::move(moved.snapshot));
        field = std::move(moved.field);
        prev = next;
    }
    return run;
}

}  // namespace lpbf
