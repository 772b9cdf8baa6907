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

#include "slowfast/particle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "slowfast/errors.hpp"

namespace slowfast {
namespace {

constexpr double kPi = std::numbers::pi;

// Hessians of the two flow components.
std::array<Mat2, 2> flow_hessians(Vec2 const& xi, ParticleParams const& p)
{
    double const s1 = std::sin(xi(0)), c1 = std::cos(xi(0));
    double const s2 = std::sin(xi(1)), c2 = std::cos(xi(1));
    Mat2 H1;
    H1 << -p.a * s1 * c2, -p.a * c1 * s2,
          -p.a * c1 * s2, -p.a * s1 * c2;
    Mat2 H2;
    H2 << p.a * c1 * s2, p.a * s1 * c2,
          p.a * s1 * c2, p.a * c1 * s2;
    return {H1, H2};
}

EquilibriumKind classify(std::complex<double> const (&ev)[2])
{
    double const re0 = ev[0].real(), re1 = ev[1].real();
    bool const complex_pair = std::abs(ev[0].imag()) > kMarginalThreshold;
    bool const zero0 = std::abs(re0) < kMarginalThreshold;
    bool const zero1 = std::abs(re1) < kMarginalThreshold;
    if (complex_pair) {
        if (zero0 && zero1) return EquilibriumKind::center;
        return re0 > 0.0 ? EquilibriumKind::unstable_spiral : EquilibriumKind::stable_spiral;
    }
    if (zero0 || zero1) return EquilibriumKind::degenerate;
    if (re0 * re1 < 0.0) return EquilibriumKind::saddle;
    return re0 > 0.0 ? EquilibriumKind::unstable_node : EquilibriumKind::stable_node;
}

Equilibrium make_equilibrium(std::string label, Vec2 const& point, ParticleParams const& p)
{
    Equilibrium e;
    e.label = std::move(label);
    e.point = point;
    e.jacobian = reduced_jacobian(point, p);
    Eigen::EigenSolver<Mat2> es(e.jacobian, false);
    e.eigenvalues[0] = es.eigenvalues()(0);
    e.eigenvalues[1] = es.eigenvalues()(1);
    e.kind = classify(e.eigenvalues);
    return e;
}

Vec2 rk4_step(std::function<Vec2(Vec2 const&)> const& F, Vec2 const& x, double h)
{
    Vec2 const k1 = F(x);
    Vec2 const k2 = F(x + 0.5 * h * k1);
    Vec2 const k3 = F(x + 0.5 * h * k2);
    Vec2 const k4 = F(x + h * k3);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double segment_distance(Vec2 const& q, Vec2 const& a, Vec2 const& b)
{
    Vec2 const ab = b - a;
    double const len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (q - (a + t * ab)).norm();
}

}  // namespace

void ParticleParams::validate() const
{
    require(a > 0.0 && std::isfinite(a), "a must be positive");
    require(V >= 0.0 && std::isfinite(V), "V must be nonnegative");
    require(epsilon >= 0.0 && std::isfinite(epsilon), "epsilon must be nonnegative");
    require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be nonnegative");
}

std::string_view to_string(Side side)
{
    switch (side) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::top: return "top";
    case Side::bottom: return "bottom";
    }
    return "?";
}

Side parse_side(std::string_view name)
{
    for (Side s : kSides) {
        if (to_string(s) == name) return s;
    }
    throw ValidationError("unknown side '" + std::string(name)
                          + "' (expected left, right, top or bottom)");
}

Vec2 flow_velocity(Vec2 const& xi, ParticleParams const& p)
{
    return {p.a * std::sin(xi(0)) * std::cos(xi(1)),
            p.V - p.a * std::cos(xi(0)) * std::sin(xi(1))};
}

Mat2 flow_gradient(Vec2 const& xi, ParticleParams const& p)
{
    double const s1 = std::sin(xi(0)), c1 = std::cos(xi(0));
    double const s2 = std::sin(xi(1)), c2 = std::cos(xi(1));
    Mat2 G;
    G << p.a * c1 * c2, -p.a * s1 * s2,
         p.a * s1 * s2, -p.a * c1 * c2;
    return G;
}

Vec4 full_drift(Vec4 const& state, ParticleParams const& p)
{
    require(p.epsilon > 0.0, "the full system needs epsilon > 0");
    Vec2 const u = flow_velocity(state.head<2>(), p);
    Vec4 d;
    d << state(2), state(3), (u(0) - state(2)) / p.epsilon, (u(1) - state(3)) / p.epsilon;
    return d;
}

Eigen::Matrix<double, 4, 2> full_diffusion(ParticleParams const& p)
{
    require(p.epsilon > 0.0, "the full system needs epsilon > 0");
    Eigen::Matrix<double, 4, 2> S = Eigen::Matrix<double, 4, 2>::Zero();
    S(2, 0) = S(3, 1) = p.sigma / std::sqrt(p.epsilon);
    return S;
}

Vec2 analytic_h0(Vec2 const& xi, ParticleParams const& p)
{
    return flow_velocity(xi, p);
}

Vec2 analytic_h1(Vec2 const& xi, ParticleParams const& p, Vec2 const& weighted_integral)
{
    Mat2 const G = flow_gradient(xi, p);
    return G * (p.sigma * weighted_integral - flow_velocity(xi, p));
}

Vec2 reduced_drift(Vec2 const& xi, ParticleParams const& p, ReducedNoise const& noise)
{
    double const s1 = std::sin(xi(0)), c1 = std::cos(xi(0));
    double const s2 = std::sin(xi(1)), c2 = std::cos(xi(1));
    double const a = p.a;
    Vec2 const u{a * s1 * c2, p.V - a * c1 * s2};
    Vec2 const w = p.sigma * noise.zeta - u;
    Vec2 const h1{a * c1 * c2 * w(0) - a * s1 * s2 * w(1),
                  a * s1 * s2 * w(0) - a * c1 * c2 * w(1)};
    return p.sigma * noise.rho + u + p.epsilon * h1;
}

Mat2 reduced_jacobian(Vec2 const& xi, ParticleParams const& p, ReducedNoise const& noise)
{
    Mat2 const G = flow_gradient(xi, p);
    auto const H = flow_hessians(xi, p);
    Vec2 const w = p.sigma * noise.zeta - flow_velocity(xi, p);
    Mat2 dh1 = -G * G;
    for (int i = 0; i < 2; ++i) {
        dh1.row(i) += w.transpose() * H[static_cast<std::size_t>(i)];
    }
    return G + p.epsilon * dh1;
}

double stream_function(Vec2 const& xi, ParticleParams const& p)
{
    return p.a * std::sin(xi(0)) * std::sin(xi(1)) - p.V * xi(0);
}

std::string_view to_string(EquilibriumKind kind)
{
    switch (kind) {
    case EquilibriumKind::saddle: return "saddle";
    case EquilibriumKind::center: return "center";
    case EquilibriumKind::stable_node: return "stable node";
    case EquilibriumKind::unstable_node: return "unstable node";
    case EquilibriumKind::stable_spiral: return "stable spiral";
    case EquilibriumKind::unstable_spiral: return "unstable spiral";
    case EquilibriumKind::degenerate: return "degenerate";
    }
    return "?";
}

EquilibriaResult equilibria(ParticleParams const& p)
{
    p.validate();
    EquilibriaResult r;
    if (p.V >= p.a) {
        r.status = "no equilibria: V >= a leaves asin(V/a) undefined or degenerate";
        return r;
    }
    double const ratio = p.V / p.a;
    double const s = std::asin(ratio);
    r.points.push_back(make_equilibrium("upper wall", {0.0, s}, p));
    r.points.push_back(make_equilibrium("lower wall", {0.0, kPi - s}, p));
    r.points.push_back(make_equilibrium("interior", {std::acos(ratio), kPi / 2.0}, p));
    r.status = "ok";
    return r;
}

ManifoldCurves trace_manifolds(ParticleParams const& p, TraceOptions const& opt)
{
    p.validate();
    require(p.epsilon > 0.0, "manifold tracing needs epsilon > 0");
    require(p.V > 0.0 && p.V < p.a, "manifold tracing needs 0 < V < a");
    require(opt.delta > 0.0 && opt.dt > 0.0 && opt.max_time > 0.0, "invalid trace options");

    ParticleParams det = p;
    det.sigma = 0.0;
    auto const eq = equilibria(det);

    auto trace = [&](std::size_t which, bool stable) {
        Equilibrium const& e = eq.points[which];
        if (e.kind != EquilibriumKind::saddle) {
            throw ValidationError("equilibrium '" + e.label + "' is not a saddle");
        }
        Eigen::EigenSolver<Mat2> es(e.jacobian);
        Eigen::Index const pick =
            (es.eigenvalues()(0).real() < 0.0) == stable ? 0 : 1;
        Vec2 dir = es.eigenvectors().col(pick).real().normalized();
        if (dir(0) < 0.0) dir = -dir;  // first branch heads into the cell

        double const sign = stable ? -1.0 : 1.0;
        auto F = [&](Vec2 const& x) { return Vec2(sign * reduced_drift(x, det)); };
        std::array<std::vector<Vec2>, 2> branches;
        std::array<std::string, 2> reasons;
        constexpr int kRecordEvery = 10;
        for (int b = 0; b < 2; ++b) {
            Vec2 x = e.point + (b == 0 ? 1.0 : -1.0) * opt.delta * dir;
            auto& pts = branches[static_cast<std::size_t>(b)];
            pts.push_back(x);
            auto const n_steps = static_cast<long>(std::ceil(opt.max_time / opt.dt));
            reasons[static_cast<std::size_t>(b)] = "max_time";
            for (long k = 1; k <= n_steps; ++k) {
                x = rk4_step(F, x, opt.dt);
                bool const outside = (x.array() < opt.box_lo).any() || (x.array() > opt.box_hi).any();
                bool near_other = false;
                for (std::size_t o = 0; o < eq.points.size(); ++o) {
                    if (o != which && (x - eq.points[o].point).norm() < opt.stop_radius) near_other = true;
                }
                if (!x.allFinite()) {
                    reasons[static_cast<std::size_t>(b)] = "non_finite";
                    break;
                }
                if (outside || near_other || k % kRecordEvery == 0 || k == n_steps) {
                    pts.push_back(x);
                }
                if (outside) {
                    reasons[static_cast<std::size_t>(b)] = "box_exit";
                    break;
                }
                if (near_other) {
                    reasons[static_cast<std::size_t>(b)] = "equilibrium";
                    break;
                }
            }
        }
        Polyline line;
        line.vertices.assign(branches[1].rbegin(), branches[1].rend());
        line.saddle_index = line.vertices.size();
        line.vertices.push_back(e.point);
        line.vertices.insert(line.vertices.end(), branches[0].begin(), branches[0].end());
        line.stop_reason[0] = reasons[1];
        line.stop_reason[1] = reasons[0];
        return line;
    };

    ManifoldCurves out;
    out.stable = trace(1, true);
    out.unstable = trace(0, false);
    return out;
}

double distance_to_polyline(Vec2 const& q, Polyline const& curve)
{
    require(!curve.vertices.empty(), "empty polyline");
    auto const& v = curve.vertices;
    if (v.size() == 1) return (q - v[0]).norm();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        best = std::min(best, segment_distance(q, v[i], v[i + 1]));
    }
    return best;
}

double hausdorff_distance(Polyline const& a, Polyline const& b)
{
    double d = 0.0;
    for (auto const& q : a.vertices) d = std::max(d, distance_to_polyline(q, b));
    for (auto const& q : b.vertices) d = std::max(d, distance_to_polyline(q, a));
    return d;
}

SlowFastSpec particle_system(ParticleParams const& p)
{
    p.validate();
    SlowFastSpec s;
    s.name = "cellular-flow";
    s.n = 2;
    s.m = 2;
    s.A = Matrix::Zero(2, 2);
    s.B = -Matrix::Identity(2, 2);
    s.f = [](Vector const&, Vector const& y) { return Vector(y); };
    s.g = [p](Vector const& x, Vector const&) {
        return Vector(flow_velocity(Vec2(x(0), x(1)), p));
    };
    s.f_x = [](Vector const&, Vector const&) { return Matrix(Matrix::Zero(2, 2)); };
    s.f_y = [](Vector const&, Vector const&) { return Matrix(Matrix::Identity(2, 2)); };
    s.g_x = [p](Vector const& x, Vector const&) {
        return Matrix(flow_gradient(Vec2(x(0), x(1)), p));
    };
    s.g_y = [](Vector const&, Vector const&) { return Matrix(Matrix::Zero(2, 2)); };
    s.epsilon = p.epsilon;
    s.sigma = p.sigma;
    return s;
}

AssumptionConstants particle_constants(ParticleParams const& p)
{
    return {1.0, 0.0, 1.0, 1.0, std::sqrt(2.0) * p.a};
}

}  // namespace slowfast
