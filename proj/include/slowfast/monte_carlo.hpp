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

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slowfast/integrators.hpp"

namespace slowfast {

/// n1 x n2 lattice over the closed cell [0, pi]^2, boundary included.
struct GridSpec {
    int n1 = 64;
    int n2 = 64;
    std::uint32_t paths = 1000;
    double threshold = 1000.0;
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t cells() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(i); }
    Vec2 point(int i, int j) const;
    bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1; }
};

enum class SideExitPolicy { exclude, infinite };

std::string_view to_string(SideExitPolicy policy);
SideExitPolicy parse_side_exit_policy(std::string_view name);

struct StudyOptions {
    double dt = 1e-3;
    Scheme scheme = Scheme::rk4_deterministic;
    NoiseMode mode = NoiseMode::frozen;
    SideExitPolicy side_exit = SideExitPolicy::exclude;
    unsigned workers = 1;
    /// Called with the number of finished cells (from worker threads).
    std::function<void(std::size_t)> progress;
};

struct CellStats {
    int i = 0;
    int j = 0;
    Vec2 point = Vec2::Zero();
    bool boundary = false;
    std::array<std::uint32_t, 4> side_counts{};  ///< indexed by Side
    std::uint32_t censored = 0;
    std::uint32_t failures = 0;
    double exit_time_mean = 0.0;  ///< censored paths count as the threshold
    double exit_time_se = 0.0;
    // Settling study only.
    bool det_settled = false;
    double det_time = 0.0;
    std::optional<Side> det_side;
    std::uint32_t sto_settled = 0;
    double sto_mean = 0.0;
    double sto_se = 0.0;
    double diff = 0.0;
    double diff_se = 0.0;
};

enum class StudyKind { exit_time, escape_probability, settling_difference };

std::string_view to_string(StudyKind kind);

struct GridStudyResult {
    StudyKind kind = StudyKind::exit_time;
    GridSpec grid;
    ParticleParams params;
    StudyOptions options;
    std::optional<Side> side;  ///< escape study
    double sigma_compared = 0.0;  ///< settling study: the noisy sigma
    std::vector<CellStats> cells;
    double wall_seconds = 0.0;

    /// Per-cell headline value and its standard error.
    double value(CellStats const& c) const;
    double standard_error(CellStats const& c) const;
};

/// All per-cell statistics in one pass (counts, exit times, optional settling).
GridStudyResult simulate_grid(GridSpec const& grid, ParticleParams const& p,
                              StudyOptions const& opt, bool settling = false);

GridStudyResult first_exit_time_map(GridSpec const& grid, ParticleParams const& p,
                                    StudyOptions const& opt);
GridStudyResult escape_probability_map(GridSpec const& grid, ParticleParams const& p,
                                       StudyOptions const& opt, Side side);
/// p.sigma is ignored; the deterministic run uses 0, the noisy one `sigma`.
GridStudyResult settling_time_difference_map(GridSpec const& grid, ParticleParams const& p,
                                             double sigma, StudyOptions const& opt);

/// Same lattice re-read for another side.
GridStudyResult with_side(GridStudyResult result, Side side);

struct CellAverage {
    double mean = 0.0;
    double se = 0.0;
    std::size_t cells = 0;     ///< interior cells averaged
    std::size_t excluded = 0;  ///< interior cells without a finite value
};

/// Mean over interior lattice cells of the headline value.
CellAverage average_over_cell(GridStudyResult const& result);

struct CorrelationReport {
    double threshold = 0.5;
    double d0 = 0.3;
    std::size_t support = 0;
    std::size_t within = 0;
    double fraction = 0.0;
    std::vector<double> distances;
};

/// Distances from interior cells with P > threshold to the curve.
CorrelationReport manifold_correlation(GridStudyResult const& escape, Polyline const& curve,
                                       double threshold = 0.5, double d0 = 0.3);

}  // namespace slowfast
