/*
   Copyright 2026 The slowfast Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "slowfast/monte_carlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "slowfast/errors.hpp"

namespace slowfast {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Welford running moments; exact for constant samples.
struct Moments {
    double m = 0.0;
    double m2 = 0.0;
    std::uint32_t n = 0;

    void add(double x)
    {
        ++n;
        double const d = x - m;
        m += d / n;
        m2 += d * (x - m);
    }
    double mean() const { return n ? m : kNaN; }
    double se() const
    {
        if (n < 2) return n ? 0.0 : kNaN;
        return std::sqrt(std::max(0.0, m2 / (n - 1)) / n);
    }
};

void run_cell(GridSpec const& grid, ParticleParams const& p, StudyOptions const& opt,
              bool settling, CellStats& cell)
{
    IntegratorConfig cfg;
    cfg.dt = opt.dt;
    cfg.t_max = grid.threshold;
    cfg.scheme = opt.scheme;
    cfg.record = false;
    cfg.stop_at_exit = true;

    auto const cell_id = static_cast<std::uint32_t>(grid.index(cell.i, cell.j));
    Moments exit_times;
    Moments settle_times;
    bool side_exit_seen = false;
    ReducedInput input{opt.mode, std::nullopt};
    for (std::uint32_t path = 0; path < grid.paths; ++path) {
        NoiseRealization const noise = particle_noise(grid.seed, {cell_id, path}, cfg);
        try {
            Trajectory const tr = integrate_reduced(cell.point, p, noise, cfg, input);
            if (tr.exit) {
                ++cell.side_counts[static_cast<std::size_t>(tr.exit->side)];
                exit_times.add(tr.exit->time);
                if (tr.exit->side == Side::bottom) {
                    settle_times.add(tr.exit->time);
                } else {
                    side_exit_seen = true;
                }
            } else {
                ++cell.censored;
                exit_times.add(grid.threshold);
                side_exit_seen = true;
            }
        } catch (IntegrationError const&) {
            ++cell.failures;
        }
    }
    cell.exit_time_mean = exit_times.mean();
    cell.exit_time_se = exit_times.se();

    if (!settling) return;
    ParticleParams det = p;
    det.sigma = 0.0;
    NoiseRealization const quiet = particle_noise(grid.seed, {cell_id, 0}, cfg);
    Trajectory const tr = integrate_reduced(cell.point, det, quiet, cfg);
    if (tr.exit) {
        cell.det_side = tr.exit->side;
        cell.det_settled = tr.exit->side == Side::bottom;
        cell.det_time = tr.exit->time;
    } else {
        cell.det_time = grid.threshold;
    }
    cell.sto_settled = settle_times.n;
    cell.sto_mean = settle_times.mean();
    cell.sto_se = settle_times.se();
    if (!cell.det_settled || settle_times.n == 0) {
        cell.diff = kNaN;
        cell.diff_se = kNaN;
    } else if (opt.side_exit == SideExitPolicy::infinite && side_exit_seen) {
        cell.diff = -std::numeric_limits<double>::infinity();
        cell.diff_se = kNaN;
    } else {
        cell.diff = cell.det_time - cell.sto_mean;
        cell.diff_se = cell.sto_se;
    }
}

}  // namespace

void GridSpec::validate() const
{
    require(n1 >= 2 && n2 >= 2, "lattice needs at least 2 points per axis");
    require(paths >= 1, "paths per point must be at least 1");
    require(threshold > 0.0 && std::isfinite(threshold), "threshold T must be positive");
}

Vec2 GridSpec::point(int i, int j) const
{
    constexpr double pi = std::numbers::pi;
    // Exact endpoints keep boundary lattice points on the boundary.
    double const x = i == n1 - 1 ? pi : pi * i / (n1 - 1);
    double const y = j == n2 - 1 ? pi : pi * j / (n2 - 1);
    return {x, y};
}

std::string_view to_string(SideExitPolicy policy)
{
    return policy == SideExitPolicy::exclude ? "exclude" : "infinite";
}

SideExitPolicy parse_side_exit_policy(std::string_view name)
{
    if (name == "exclude") return SideExitPolicy::exclude;
    if (name == "infinite") return SideExitPolicy::infinite;
    throw ValidationError("unknown side-exit policy '" + std::string(name) + "'");
}

std::string_view to_string(StudyKind kind)
{
    switch (kind) {
    case StudyKind::exit_time: return "exit-time";
    case StudyKind::escape_probability: return "escape-probability";
    case StudyKind::settling_difference: return "settling-difference";
    }
    return "?";
}

double GridStudyResult::value(CellStats const& c) const
{
    switch (kind) {
    case StudyKind::exit_time: return c.exit_time_mean;
    case StudyKind::escape_probability:
        return static_cast<double>(c.side_counts[static_cast<std::size_t>(side.value_or(Side::left))])
               / grid.paths;
    case StudyKind::settling_difference: return c.diff;
    }
    return kNaN;
}

double GridStudyResult::standard_error(CellStats const& c) const
{
    switch (kind) {
    case StudyKind::exit_time: return c.exit_time_se;
    case StudyKind::escape_probability: {
        double const q = value(c);
        return std::sqrt(q * (1.0 - q) / grid.paths);
    }
    case StudyKind::settling_difference: return c.diff_se;
    }
    return kNaN;
}

GridStudyResult simulate_grid(GridSpec const& grid, ParticleParams const& p,
                              StudyOptions const& opt, bool settling)
{
    grid.validate();
    p.validate();
    require(opt.dt > 0.0, "dt must be positive");
    require(opt.mode == NoiseMode::frozen || p.epsilon > 0.0,
            "evolving noise mode needs epsilon > 0");
    auto const start = std::chrono::steady_clock::now();

    GridStudyResult r;
    r.grid = grid;
    r.params = p;
    r.options = opt;
    r.cells.resize(grid.cells());
    for (int j = 0; j < grid.n2; ++j) {
        for (int i = 0; i < grid.n1; ++i) {
            CellStats& c = r.cells[grid.index(i, j)];
            c.i = i;
            c.j = j;
            c.point = grid.point(i, j);
            c.boundary = grid.on_boundary(i, j);
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t const k = next.fetch_add(1);
            if (k >= r.cells.size()) return;
            try {
                run_cell(grid, p, opt, settling, r.cells[k]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next = r.cells.size();
                return;
            }
            std::size_t const finished = ++done;
            if (opt.progress) opt.progress(finished);
        }
    };
    unsigned const workers = std::max(1u, opt.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

GridStudyResult first_exit_time_map(GridSpec const& grid, ParticleParams const& p,
                                    StudyOptions const& opt)
{
    GridStudyResult r = simulate_grid(grid, p, opt);
    r.kind = StudyKind::exit_time;
    return r;
}

GridStudyResult escape_probability_map(GridSpec const& grid, ParticleParams const& p,
                                       StudyOptions const& opt, Side side)
{
    GridStudyResult r = simulate_grid(grid, p, opt);
    r.kind = StudyKind::escape_probability;
    r.side = side;
    return r;
}

GridStudyResult settling_time_difference_map(GridSpec const& grid, ParticleParams const& p,
                                             double sigma, StudyOptions const& opt)
{
    require(p.epsilon > 0.0 && p.V > 0.0, "settling study needs epsilon > 0 and V > 0");
    require(sigma >= 0.0, "sigma must be nonnegative");
    ParticleParams noisy = p;
    noisy.sigma = sigma;
    GridStudyResult r = simulate_grid(grid, noisy, opt, true);
    r.kind = StudyKind::settling_difference;
    r.sigma_compared = sigma;
    return r;
}

GridStudyResult with_side(GridStudyResult result, Side side)
{
    result.kind = StudyKind::escape_probability;
    result.side = side;
    return result;
}

CellAverage average_over_cell(GridStudyResult const& result)
{
    CellAverage a;
    double sum = 0.0;
    double var = 0.0;
    for (auto const& c : result.cells) {
        if (c.boundary) continue;
        double const v = result.value(c);
        if (!std::isfinite(v)) {
            ++a.excluded;
            continue;
        }
        sum += v;
        double const se = result.standard_error(c);
        if (std::isfinite(se)) var += se * se;
        ++a.cells;
    }
    require(a.cells > 0, "no interior cell with a finite value to average");
    a.mean = sum / static_cast<double>(a.cells);
    a.se = std::sqrt(var) / static_cast<double>(a.cells);
    return a;
}

CorrelationReport manifold_correlation(GridStudyResult const& escape, Polyline const& curve,
                                       double threshold, double d0)
{
    require(escape.kind == StudyKind::escape_probability, "correlation needs an escape map");
    CorrelationReport r;
    r.threshold = threshold;
    r.d0 = d0;
    for (auto const& c : escape.cells) {
        if (c.boundary || !(escape.value(c) > threshold)) continue;
        double const d = distance_to_polyline(c.point, curve);
        r.distances.push_back(d);
        ++r.support;
        if (d <= d0) ++r.within;
    }
    r.fraction = r.support ? static_cast<double>(r.within) / static_cast<double>(r.support) : 0.0;
    return r;
}

}  // namespace slowfast
