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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace slowfast {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Independent substream selector: one per (lattice cell, path).
struct StreamId {
    std::uint32_t cell = 0;
    std::uint32_t path = 0;

    friend bool operator==(StreamId const&, StreamId const&) = default;
};

/// Reserved auxiliary lanes of a stream (draws not tied to a time step).
enum class AuxLane : std::uint8_t {
    frozen_integrals = 0x10,
    stationary_start = 0x11,
};

/**
 * A two-sided discretized Wiener path, realized lazily.
 *
 * Step k of the view covers [k dt, (k+1) dt]. Its four standard normals are
 * drawn from Philox keyed by (master seed, stream, component, step), so any
 * increment can be regenerated in isolation. The first normal drives the
 * Wiener increment dW = sqrt(dt) n0; the others are reserved for exact
 * sub-step functionals (OU transitions and their integrals).
 *
 * shifted(t) implements the Wiener shift omega(. + t) - omega(t), and
 * rescaled(eps) the Brownian rescaling W_{t eps} / sqrt(eps). Both are pure
 * index/scale views over the same underlying normals.
 */
class NoiseRealization {
public:
    NoiseRealization(std::uint64_t master_seed, StreamId stream, int dimension,
                     double dt, double t_min, double t_max);

    std::uint64_t master_seed() const { return seed_; }
    StreamId stream() const { return stream_; }
    int dimension() const { return dimension_; }
    double dt() const { return dt_; }
    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }

    /// First step index (covering [t_min, t_min + dt]).
    std::int64_t first_step() const;
    /// One past the last step index.
    std::int64_t end_step() const;
    /// Index of the grid node at time t; throws if t is off-grid or outside.
    std::int64_t node_index(double t) const;
    double time_of(std::int64_t step) const { return static_cast<double>(step) * dt_; }

    std::array<double, 4> step_normals(int component, std::int64_t step) const;
    double increment(int component, std::int64_t step) const;
    std::array<double, 4> auxiliary_normals(AuxLane lane, int component,
                                            std::int64_t index = 0) const;

    /// theta_t view: increments after re-basing read omega(. + t) - omega(t).
    NoiseRealization shifted(double t) const;
    /// psi_eps view: W_t(psi_eps omega) = W_{t eps}(omega) / sqrt(eps).
    NoiseRealization rescaled(double epsilon) const;

private:
    std::array<double, 2> block(std::uint8_t lane, int component, std::int64_t step) const;

    std::uint64_t seed_;
    StreamId stream_;
    int dimension_;
    double dt_;
    double t_min_;
    double t_max_;
    std::int64_t offset_ = 0;
};

/**
 * Exact discrete transition of the linear SDE d eta = D eta dt + s dW over a
 * fixed step h. Besides the new state it returns the exact step integral
 * of eta and, optionally, the weighted integral of e^{w u} eta over the
 * step (u measured from the step start), all jointly Gaussian with the
 * Wiener increment of the same step.
 */
class OUStepper {
public:
    OUStepper(Matrix drift, double diffusion_scale, double dt,
              std::optional<double> weight_rate = std::nullopt);

    int dimension() const { return static_cast<int>(drift_.rows()); }
    double dt() const { return dt_; }
    Matrix const& drift() const { return drift_; }
    Matrix const& stationary_covariance() const { return stationary_cov_; }
    Matrix const& transition() const { return transition_; }
    bool has_weight() const { return weight_rate_.has_value(); }
    double weight_rate() const { return weight_rate_.value_or(0.0); }

    struct Step {
        Vector value;      ///< eta at the end of the step
        Vector integral;   ///< exact integral of eta over the step
        Vector weighted;   ///< exact integral of e^{w u} eta(u) du (if enabled)
        Vector increment;  ///< Wiener increment dW of the step
    };

    void advance(Vector const& current, NoiseRealization const& noise,
                 std::int64_t step, Step& out) const;
    Vector stationary_sample(NoiseRealization const& noise, std::int64_t index) const;

private:
    Matrix drift_;
    double diffusion_;
    double dt_;
    std::optional<double> weight_rate_;
    Matrix transition_;      // e^{D h}
    Matrix integral_mean_;   // int_0^h e^{D u} du
    Matrix weighted_mean_;   // int_0^h e^{w u} e^{D u} du
    Matrix chol_;            // lower factor of the joint (dW, Z1, Z2, Z3) covariance
    Matrix stationary_cov_;
    Matrix stationary_chol_;
};

/// Stationary covariance of dy = D y dt + s dW (continuous Lyapunov equation).
Matrix stationary_covariance(Matrix const& drift, double diffusion_scale);

/// Sampled OU path on a uniform grid of the noise's own time.
struct OUPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Vector> values;     ///< nodes t0 + k dt, size steps + 1
    std::vector<Vector> integrals;  ///< per-step exact integral of eta
    std::vector<Vector> weighted;   ///< per-step weighted integral (may be empty)
    std::vector<Vector> increments; ///< per-step Wiener increments
    std::optional<double> weight_rate;
    std::vector<std::string> warnings;

    std::size_t steps() const { return integrals.size(); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    std::size_t node_at(double t) const;
};

/**
 * Stationary OU path of dy = (B/eps) y dt + (sigma/sqrt(eps)) dW on [t0, t1],
 * in the time of the given noise view. The state is drawn from the
 * stationary law at noise.t_min() and propagated by exact transitions, so
 * values at a given time do not depend on t0.
 */
OUPath simulate_ou(Matrix const& B, double epsilon, double sigma,
                   NoiseRealization const& noise, double t0, double t1,
                   std::optional<double> weight_rate = std::nullopt);

/// Samples of int_{-inf}^0 e^s dW_s and int_{-inf}^0 s e^s dW_s per component.
struct FrozenIntegrals {
    Vector exp_integral;       ///< I_e
    Vector weighted_integral;  ///< I_se
};

/// Exact joint Gaussian draw (Var 1/2, Var 1/4, Cov -1/4 per component).
FrozenIntegrals sample_frozen_integrals(NoiseRealization const& noise);

/// The same functionals read off a unit-diffusion B = -I path ending at 0,
/// generated with weight rate 1 (truncated at the path start).
FrozenIntegrals frozen_integrals_from_path(OUPath const& path, std::size_t origin);

/// rho(t) = int_{-inf}^t e^{s-t} dW_s and zeta(t) = int_{-inf}^t (s-t) e^{s-t} dW_s.
struct AuxiliaryState {
    double rho = 0.0;
    double zeta = 0.0;
};

/// One step: exact-in-law exponential update for rho, trapezoidal for zeta.
AuxiliaryState evolve_auxiliary_integrals(AuxiliaryState state, double dW, double dt);

/// rho and zeta at every node of a B = -I, weight-rate-1 path.
std::vector<std::array<Vector, 2>> auxiliary_from_path(OUPath const& path);

}  // namespace slowfast
