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

#include <optional>
#include <string_view>
#include <vector>

#include "slowfast/manifold.hpp"
#include "slowfast/particle.hpp"

namespace slowfast {

enum class Scheme { exponential_em, euler_maruyama, rk4_deterministic };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

struct IntegratorConfig {
    double dt = 1e-3;
    double t_max = 1000.0;
    Scheme scheme = Scheme::exponential_em;
    bool stop_at_exit = true;
    bool record = true;
    std::size_t record_every = 1;

    void validate() const;
};

struct ExitEvent {
    double time = 0.0;
    Side side = Side::left;
    Vec2 point = Vec2::Zero();
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::optional<ExitEvent> exit;
    Vector final_state;
    double final_time = 0.0;
};

/// Boundary crossing of the cell along the segment x0 -> x1 (linear in t).
/// A start on or outside the boundary exits at t0. Ties go left, top,
/// right, bottom in that order.
std::optional<ExitEvent> detect_exit(double t0, Vec2 const& x0, double t1, Vec2 const& x1);

/**
 * Full 4-D particle SDE from (y, v) at t = 0 on [0, t_max]. The noise
 * realization is read in original time with step cfg.dt.
 *
 * exponential_em integrates the random ODE for w = v - sigma eta^eps with
 * exact relaxation and the exact step integral of eta^eps; euler_maruyama
 * steps the SDE directly (needs dt < eps/2); rk4_deterministic needs sigma = 0.
 */
Trajectory integrate_full(Vec4 const& init, ParticleParams const& p,
                          NoiseRealization const& noise, IntegratorConfig const& cfg);

/// Noise input of the reduced system.
struct ReducedInput {
    NoiseMode mode = NoiseMode::frozen;
    /// Frozen constants (or the evolving start); drawn from the noise if empty.
    std::optional<FrozenIntegrals> integrals;
};

/**
 * Reduced 2-D random ODE. rk4_deterministic uses RK4 (auxiliary processes
 * interpolated linearly across a step in evolving mode); euler_maruyama
 * is forward Euler. Evolving mode advances (rho, zeta) in fast time t/eps.
 */
Trajectory integrate_reduced(Vec2 const& init, ParticleParams const& p,
                             NoiseRealization const& noise, IntegratorConfig const& cfg,
                             ReducedInput const& input = {});

struct DeviationReport {
    double sup_slow_deviation = 0.0;   ///< sup |y_full - xi_reduced| on common nodes
    double sup_graph_distance = 0.0;   ///< sup |v_full - h_eps(y_full)| (sigma = 0 only)
    double horizon = 0.0;
    Trajectory full;
    Trajectory reduced;
};

/**
 * Full system started on the graph of h_eps over xi and reduced system from
 * xi, on one realization. The frozen integrals are read off the fast-time
 * OU path on [-T_trunc, 0] of the same noise.
 */
DeviationReport compare_full_reduced(Vec2 const& xi, ParticleParams const& p,
                                     NoiseRealization const& noise, IntegratorConfig const& cfg,
                                     NoiseMode mode = NoiseMode::frozen,
                                     QuadratureParams const& quad = {});

/// Realization with the grid integrate_full / integrate_reduced expect.
NoiseRealization particle_noise(std::uint64_t seed, StreamId stream, IntegratorConfig const& cfg,
                                double t_min = 0.0);

}  // namespace slowfast
