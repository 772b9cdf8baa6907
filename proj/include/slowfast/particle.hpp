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

#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slowfast/system_spec.hpp"

namespace slowfast {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;

/// Cellular-flow inertial particle parameters.
struct ParticleParams {
    double a = 0.7;
    double V = 0.0;
    double epsilon = 0.05;
    double sigma = 0.0;

    void validate() const;
};

enum class Side { left = 0, right = 1, top = 2, bottom = 3 };

inline constexpr Side kSides[] = {Side::left, Side::right, Side::top, Side::bottom};

std::string_view to_string(Side side);
Side parse_side(std::string_view name);

/// The cell (0, pi) x (0, pi); xi2 grows in the direction of gravity, so
/// xi2 = pi is the bottom.
struct CellDomain {
    static constexpr double lo = 0.0;
    static constexpr double hi = std::numbers::pi;

    static bool contains(Vec2 const& xi)
    {
        return xi(0) > lo && xi(0) < hi && xi(1) > lo && xi(1) < hi;
    }
};

/// u(xi) = (a sin xi1 cos xi2, V - a cos xi1 sin xi2).
Vec2 flow_velocity(Vec2 const& xi, ParticleParams const& p);
Mat2 flow_gradient(Vec2 const& xi, ParticleParams const& p);

/// State (y1, y2, v1, v2).
Vec4 full_drift(Vec4 const& state, ParticleParams const& p);
Eigen::Matrix<double, 4, 2> full_diffusion(ParticleParams const& p);

Vec2 analytic_h0(Vec2 const& xi, ParticleParams const& p);
/// weighted_integral stands for int_{-inf}^0 s e^s dW_s (per component).
Vec2 analytic_h1(Vec2 const& xi, ParticleParams const& p, Vec2 const& weighted_integral);

/// Noise entering the reduced system: rho replaces int e^s dW_s and zeta
/// replaces int s e^s dW_s (constants in frozen mode, processes otherwise).
struct ReducedNoise {
    Vec2 rho = Vec2::Zero();
    Vec2 zeta = Vec2::Zero();
};

/// sigma rho + h0(xi) + eps h1(xi, zeta).
Vec2 reduced_drift(Vec2 const& xi, ParticleParams const& p, ReducedNoise const& noise = {});
Mat2 reduced_jacobian(Vec2 const& xi, ParticleParams const& p, ReducedNoise const& noise = {});

/// Psi = a sin xi1 sin xi2 - V xi1.
double stream_function(Vec2 const& xi, ParticleParams const& p);

enum class EquilibriumKind {
    saddle,
    center,
    stable_node,
    unstable_node,
    stable_spiral,
    unstable_spiral,
    degenerate,
};

std::string_view to_string(EquilibriumKind kind);

struct Equilibrium {
    std::string label;
    Vec2 point;
    Mat2 jacobian;
    std::complex<double> eigenvalues[2];
    EquilibriumKind kind = EquilibriumKind::degenerate;
};

struct EquilibriaResult {
    std::vector<Equilibrium> points;  ///< upper wall saddle, lower wall saddle, interior point
    std::string status;
};

inline constexpr double kMarginalThreshold = 1e-9;

/// Equilibria of the deterministic reduced field.
EquilibriaResult equilibria(ParticleParams const& p);

struct TraceOptions {
    double delta = 1e-6;
    double dt = 1e-3;
    double box_lo = -std::numbers::pi;
    double box_hi = 2.0 * std::numbers::pi;
    double max_time = 100.0;
    double stop_radius = 1e-3;
};

struct Polyline {
    std::vector<Vec2> vertices;
    std::size_t saddle_index = 0;  ///< vertex holding the saddle itself
    std::string stop_reason[2];    ///< per branch (before, after the saddle)
};

struct ManifoldCurves {
    Polyline stable;    ///< W^s of the lower saddle (0, pi - asin(V/a))
    Polyline unstable;  ///< W^u of the upper saddle (0, asin(V/a))
};

ManifoldCurves trace_manifolds(ParticleParams const& p, TraceOptions const& opt = {});

/// Euclidean distance from a point to a polyline.
double distance_to_polyline(Vec2 const& q, Polyline const& curve);

/// Symmetric Hausdorff distance, vertices of each curve against the other's segments.
double hausdorff_distance(Polyline const& a, Polyline const& b);

/// The model as a general slow-fast spec: x = position, y = velocity.
SlowFastSpec particle_system(ParticleParams const& p);

/// Declared constants of the model: K = 1, alpha = 0, beta = 1, L_f = 1,
/// L_g = sqrt(2) a (sup of the Frobenius norm of grad u).
AssumptionConstants particle_constants(ParticleParams const& p);

}  // namespace slowfast
