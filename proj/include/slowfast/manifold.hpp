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

#include <memory>
#include <optional>

#include "slowfast/particle.hpp"
#include "slowfast/system_spec.hpp"

namespace slowfast {

struct QuadratureParams {
    double T_trunc = 23.0;
    double dtau = 1e-3;
    double tol = 1e-9;

    /// Node count of the truncated window (even, for Simpson).
    std::size_t intervals() const;
    /// Throws unless the grid is even and e^{-beta T} < tol.
    void validate(double beta) const;
};

enum class NoiseMode { frozen, evolving };
enum class ManifoldMode { quadrature, analytic_particle };

std::string_view to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view name);

/// Columns hold the nodes s_k = -T + k dtau, k = 0..N, and their midpoints.
struct Trajectory0 {
    double t0 = 0.0;
    double h = 0.0;
    Matrix nodes;
    Matrix midpoints;
    double error_estimate = 0.0;
};

/// The OU input eta(theta_s psi_eps omega) on the fast-time grid.
struct FastNoise {
    OUPath const* path = nullptr;  ///< unit OU dy = B y ds + dW, step dtau
    std::size_t origin = 0;        ///< path node of s = 0
};

/// Y0' = B Y0 + g(xi, Y0 + sigma eta) from Y0(-T) = 0.
Trajectory0 solve_Y0(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                     QuadratureParams const& quad);

/// int_0^{s} f(xi, Y0 + sigma eta) dr at the nodes, one column each (zero at s = 0).
Matrix inner_integral(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                      Trajectory0 const& Y0);

/// Y1' = [B + g_y] Y1 + g_x [A s xi + int_0^s f] from Y1(-T) = 0.
Trajectory0 solve_Y1(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                     Trajectory0 const& Y0, QuadratureParams const& quad);

Vector compute_h0(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                  QuadratureParams const& quad);
Vector compute_h1(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                  QuadratureParams const& quad);

struct ManifoldTerms {
    Vector h0;
    Vector h1;
    Vector Y0_at_zero;
    Vector Y1_at_zero;
    double error_estimate = 0.0;
};

/// h0 and h1 from a single pair of trajectory solves.
ManifoldTerms compute_terms(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                            QuadratureParams const& quad);

/**
 * Unit OU path in fast time covering [-T_trunc, tau_max] for the manifold;
 * `noise` is the original-time realization with dt = eps dtau, read through
 * its psi_eps view. Weight rate 1 is recorded when B = -I so the frozen
 * integrals can be read off the same path.
 */
OUPath manifold_noise_path(SlowFastSpec const& spec, NoiseRealization const& noise,
                           QuadratureParams const& quad, double tau_max = 0.0);

/// Original-time realization matching manifold_noise_path's grid.
NoiseRealization manifold_noise(std::uint64_t seed, StreamId stream, int dimension,
                                double epsilon, QuadratureParams const& quad,
                                double t_max = 0.0);

/**
 * h_eps(xi, theta_t omega) = h0 + eps h1 and the reduced field
 * A xi + f(xi, sigma eta(theta_t psi_eps omega) + h_eps). Immutable once built.
 * In frozen mode every t reads the noise at t = 0.
 */
class ManifoldApproximation {
public:
    static ManifoldApproximation quadrature(SlowFastSpec spec, std::shared_ptr<OUPath const> path,
                                            QuadratureParams quad, NoiseMode mode);
    static ManifoldApproximation analytic_particle(ParticleParams p,
                                                   std::shared_ptr<OUPath const> path,
                                                   NoiseMode mode);
    /// Frozen analytic mode from directly sampled integrals.
    static ManifoldApproximation analytic_particle(ParticleParams p, FrozenIntegrals integrals);

    ManifoldMode mode() const { return mode_; }
    NoiseMode noise_mode() const { return noise_mode_; }
    SlowFastSpec const& spec() const { return spec_; }
    double epsilon() const { return spec_.epsilon; }

    ManifoldTerms terms(Vector const& xi, double t = 0.0) const;
    Vector h0(Vector const& xi, double t = 0.0) const { return terms(xi, t).h0; }
    Vector h1(Vector const& xi, double t = 0.0) const { return terms(xi, t).h1; }
    Vector h_eps(Vector const& xi, double t = 0.0) const;
    /// eta(theta_t psi_eps omega).
    Vector eta(double t = 0.0) const;
    Vector reduced_rhs(Vector const& xi, double t = 0.0) const;

private:
    ManifoldApproximation() = default;
    std::size_t origin_at(double t) const;

    SlowFastSpec spec_;
    QuadratureParams quad_;
    ManifoldMode mode_ = ManifoldMode::quadrature;
    NoiseMode noise_mode_ = NoiseMode::frozen;
    std::shared_ptr<OUPath const> path_;
    std::size_t origin_ = 0;
    std::optional<ParticleParams> particle_;
    std::optional<FrozenIntegrals> frozen_;
    std::vector<std::array<Vector, 2>> auxiliary_;
};

}  // namespace slowfast
