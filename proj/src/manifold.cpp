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

#include "slowfast/manifold.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "slowfast/errors.hpp"

namespace slowfast {
namespace {

struct Window {
    std::size_t base;  // path node of s = -T
    std::size_t N;
    double h;
};

Window window(FastNoise const& noise, QuadratureParams const& quad)
{
    require(noise.path != nullptr, "manifold evaluation needs a fast-time OU path");
    std::size_t const N = quad.intervals();
    require(std::abs(noise.path->dt - quad.dtau) <= 1e-9 * quad.dtau,
            "OU path step must equal the quadrature step dtau");
    require(noise.origin >= N && noise.origin <= noise.path->steps(),
            "OU path does not cover the truncation window");
    return {noise.origin - N, N, quad.dtau};
}

Vector const& eta_node(FastNoise const& noise, Window const& w, std::size_t k)
{
    return noise.path->values[w.base + k];
}

double simpson_weight(std::size_t k, std::size_t N)
{
    if (k == 0 || k == N) return 1.0 / 3.0;
    return k % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0;
}

}  // namespace

std::size_t QuadratureParams::intervals() const
{
    double const q = T_trunc / dtau;
    auto const N = static_cast<std::size_t>(std::llround(q));
    require(std::abs(q - static_cast<double>(N)) < 1e-6 * q,
            "T_trunc must be an integer multiple of dtau");
    return N;
}

void QuadratureParams::validate(double beta) const
{
    require(T_trunc > 0.0 && dtau > 0.0 && tol > 0.0, "quadrature parameters must be positive");
    require(dtau < T_trunc, "dtau must be smaller than T_trunc");
    require(intervals() % 2 == 0, "T_trunc / dtau must be even for Simpson quadrature");
    require(beta > 0.0, "quadrature needs a stable B");
    require(std::exp(-beta * T_trunc) < tol,
            "truncation bound exp(-beta T_trunc) must be below tol; increase T_trunc");
}

std::string_view to_string(NoiseMode mode)
{
    return mode == NoiseMode::frozen ? "frozen" : "evolving";
}

NoiseMode parse_noise_mode(std::string_view name)
{
    if (name == "frozen") return NoiseMode::frozen;
    if (name == "evolving") return NoiseMode::evolving;
    throw ValidationError("unknown noise mode '" + std::string(name)
                          + "' (expected frozen or evolving)");
}

//---------------------------------------------------------------------------//

namespace {

// g at the nodes is kept for the quadrature of h0.
Trajectory0 solve_Y0_with(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                          QuadratureParams const& quad, Matrix* g_nodes)
{
    require(xi.size() == spec.n && xi.allFinite(), "xi must be a finite vector of size n");
    Window const w = window(noise, quad);
    double const h = w.h;
    double const sigma = spec.sigma;
    auto const m = spec.m;

    Vector z(m);
    auto F = [&](Vector const& Y, Vector const& e, Vector& out) {
        z.noalias() = Y + sigma * e;
        out.noalias() = spec.B * Y;
        out += spec.g(xi, z);
    };

    Trajectory0 out;
    out.t0 = -quad.T_trunc;
    out.h = h;
    out.nodes.resize(m, static_cast<Eigen::Index>(w.N + 1));
    out.midpoints.resize(m, static_cast<Eigen::Index>(w.N));
    Matrix slope(m, static_cast<Eigen::Index>(w.N + 1));

    Vector Y = Vector::Zero(m);
    Vector Yc = Y;
    Vector k1(m), k2(m), k3(m), k4(m), tmp(m), em(m);
    out.nodes.col(0) = Y;
    for (std::size_t k = 0; k < w.N; ++k) {
        auto const ki = static_cast<Eigen::Index>(k);
        Vector const& e0 = eta_node(noise, w, k);
        Vector const& e1 = eta_node(noise, w, k + 1);
        em.noalias() = 0.5 * (e0 + e1);
        F(Y, e0, k1);
        slope.col(ki) = k1;
        tmp.noalias() = Y + 0.5 * h * k1;
        F(tmp, em, k2);
        tmp.noalias() = Y + 0.5 * h * k2;
        F(tmp, em, k3);
        tmp.noalias() = Y + h * k3;
        F(tmp, e1, k4);
        Y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.nodes.col(ki + 1) = Y;
        if (k % 2 == 1) {
            // Coarse companion step over [k-1, k+1] for the error estimate.
            double const H = 2.0 * h;
            F(Yc, eta_node(noise, w, k - 1), k1);
            tmp.noalias() = Yc + 0.5 * H * k1;
            F(tmp, e0, k2);
            tmp.noalias() = Yc + 0.5 * H * k2;
            F(tmp, e0, k3);
            tmp.noalias() = Yc + H * k3;
            F(tmp, e1, k4);
            Yc += H / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            out.error_estimate = std::max(out.error_estimate, (Y - Yc).cwiseAbs().maxCoeff() / 15.0);
        }
    }
    F(Y, eta_node(noise, w, w.N), k1);
    slope.col(static_cast<Eigen::Index>(w.N)) = k1;
    out.midpoints = 0.5 * (out.nodes.leftCols(w.N) + out.nodes.rightCols(w.N))
                    + h / 8.0 * (slope.leftCols(w.N) - slope.rightCols(w.N));
    if (g_nodes) {
        *g_nodes = slope - spec.B * out.nodes;
    }
    if (!(out.error_estimate <= quad.tol)) {
        throw QuadratureError("Y0 step error estimate " + std::to_string(out.error_estimate)
                              + " exceeds tol");
    }
    return out;
}

Matrix inner_integral_with(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                           Trajectory0 const& Y0, Matrix* f_nodes)
{
    QuadratureParams q;
    q.T_trunc = -Y0.t0;
    q.dtau = Y0.h;
    Window const w = window(noise, q);
    double const h = w.h;
    double const sigma = spec.sigma;
    auto const N = static_cast<Eigen::Index>(w.N);

    Matrix F(spec.n, N + 1);
    Matrix fn(spec.n, N + 1);
    F.col(N).setZero();
    Vector z(spec.m), zm(spec.m), delta(spec.n);
    z.noalias() = Y0.nodes.col(N) + sigma * eta_node(noise, w, w.N);
    fn.col(N) = spec.f(xi, z);
    for (Eigen::Index k = N; k-- > 0;) {
        auto const ku = static_cast<std::size_t>(k);
        Vector const& e0 = eta_node(noise, w, ku);
        Vector const& e1 = eta_node(noise, w, ku + 1);
        z.noalias() = Y0.nodes.col(k) + sigma * e0;
        fn.col(k) = spec.f(xi, z);
        zm.noalias() = Y0.midpoints.col(k) + 0.5 * sigma * (e0 + e1);
        delta.noalias() = h / 6.0 * (fn.col(k) + fn.col(k + 1));
        delta += (4.0 * h / 6.0) * spec.f(xi, zm);
        if (spec.f_y && sigma != 0.0) {
            // Exact step integral of eta fixes the linear-in-eta part.
            Vector const& A_k = noise.path->integrals[w.base + ku];
            delta += sigma * spec.f_y(xi, zm) * (A_k - 0.5 * h * (e0 + e1));
        }
        F.col(k) = F.col(k + 1) - delta;
    }
    if (f_nodes) *f_nodes = std::move(fn);
    return F;
}

struct NodeJacobians {
    std::vector<Matrix> g_x;
    std::vector<Matrix> g_y;
};

NodeJacobians node_jacobians(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                             Trajectory0 const& Y0, Window const& w)
{
    NodeJacobians J;
    J.g_x.resize(w.N + 1);
    J.g_y.resize(w.N + 1);
    Vector z(spec.m);
    for (std::size_t k = 0; k <= w.N; ++k) {
        z.noalias() = Y0.nodes.col(static_cast<Eigen::Index>(k)) + spec.sigma * eta_node(noise, w, k);
        J.g_x[k] = spec.g_x(xi, z);
        J.g_y[k] = spec.g_y(xi, z);
    }
    return J;
}

Trajectory0 solve_Y1_with(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                          Trajectory0 const& Y0, QuadratureParams const& quad,
                          Matrix const& F, Matrix const& fnode, NodeJacobians const& J)
{
    Window const w = window(noise, quad);
    double const h = w.h;
    double const sigma = spec.sigma;
    auto const m = spec.m;
    Vector const Axi = spec.A * xi;

    // Y1' = M Y1 + c with M = B + g_y, c = g_x [A s xi + F], at nodes and midpoints.
    struct Coeff {
        Matrix M;
        Vector c;
    };
    auto node_coeff = [&](std::size_t k, Coeff& out) {
        auto const ki = static_cast<Eigen::Index>(k);
        double const s = Y0.t0 + static_cast<double>(k) * h;
        out.M.noalias() = spec.B + J.g_y[k];
        out.c.noalias() = J.g_x[k] * (s * Axi + F.col(ki));
    };
    Vector zm(m), Fm(spec.n);
    auto mid_coeff = [&](std::size_t k, Coeff& out) {
        auto const ki = static_cast<Eigen::Index>(k);
        double const s = Y0.t0 + (static_cast<double>(k) + 0.5) * h;
        zm.noalias() = Y0.midpoints.col(ki)
                       + 0.5 * sigma * (eta_node(noise, w, k) + eta_node(noise, w, k + 1));
        Fm.noalias() = 0.5 * (F.col(ki) + F.col(ki + 1)) + h / 8.0 * (fnode.col(ki) - fnode.col(ki + 1));
        out.M.noalias() = spec.B + spec.g_y(xi, zm);
        out.c.noalias() = spec.g_x(xi, zm) * (s * Axi + Fm);
    };
    auto rhs = [](Coeff const& c, Vector const& Y, Vector& out) {
        out.noalias() = c.M * Y;
        out += c.c;
    };

    Trajectory0 out;
    out.t0 = Y0.t0;
    out.h = h;
    out.nodes.resize(m, static_cast<Eigen::Index>(w.N + 1));
    Vector Y = Vector::Zero(m);
    Vector Yc = Y;
    Vector k1(m), k2(m), k3(m), k4(m), tmp(m);
    out.nodes.col(0) = Y;
    Coeff c0{Matrix(m, m), Vector(m)}, cm = c0, c1 = c0, prev = c0;
    node_coeff(0, c0);
    prev = c0;
    for (std::size_t k = 0; k < w.N; ++k) {
        mid_coeff(k, cm);
        node_coeff(k + 1, c1);
        rhs(c0, Y, k1);
        tmp.noalias() = Y + 0.5 * h * k1;
        rhs(cm, tmp, k2);
        tmp.noalias() = Y + 0.5 * h * k2;
        rhs(cm, tmp, k3);
        tmp.noalias() = Y + h * k3;
        rhs(c1, tmp, k4);
        Y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.nodes.col(static_cast<Eigen::Index>(k + 1)) = Y;
        if (k % 2 == 1) {
            double const H = 2.0 * h;
            rhs(prev, Yc, k1);
            tmp.noalias() = Yc + 0.5 * H * k1;
            rhs(c0, tmp, k2);
            tmp.noalias() = Yc + 0.5 * H * k2;
            rhs(c0, tmp, k3);
            tmp.noalias() = Yc + H * k3;
            rhs(c1, tmp, k4);
            Yc += H / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            out.error_estimate = std::max(out.error_estimate, (Y - Yc).cwiseAbs().maxCoeff() / 15.0);
            prev = c1;
        }
        std::swap(c0, c1);
    }
    if (!(out.error_estimate <= quad.tol)) {
        throw QuadratureError("Y1 step error estimate " + std::to_string(out.error_estimate)
                              + " exceeds tol");
    }
    return out;
}

}  // namespace

Trajectory0 solve_Y0(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                     QuadratureParams const& quad)
{
    return solve_Y0_with(spec, xi, noise, quad, nullptr);
}

Matrix inner_integral(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                      Trajectory0 const& Y0)
{
    return inner_integral_with(spec, xi, noise, Y0, nullptr);
}

Trajectory0 solve_Y1(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                     Trajectory0 const& Y0, QuadratureParams const& quad)
{
    require(static_cast<bool>(spec.g_x) && static_cast<bool>(spec.g_y),
            "first-order term needs the Jacobians g_x and g_y");
    Matrix fnode;
    Matrix const F = inner_integral_with(spec, xi, noise, Y0, &fnode);
    return solve_Y1_with(spec, xi, noise, Y0, quad, F, fnode,
                         node_jacobians(spec, xi, noise, Y0, window(noise, quad)));
}

ManifoldTerms compute_terms(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                            QuadratureParams const& quad)
{
    Window const w = window(noise, quad);
    double const h = w.h;
    Matrix g_nodes;
    Trajectory0 const Y0 = solve_Y0_with(spec, xi, noise, quad, &g_nodes);

    ManifoldTerms t;
    t.Y0_at_zero = Y0.nodes.rightCols(1);
    t.error_estimate = Y0.error_estimate;
    t.h0 = Vector::Zero(spec.m);
    t.h1 = Vector::Zero(spec.m);

    bool const first_order = spec.g_x && spec.g_y;
    Matrix F;
    Matrix fnode;
    NodeJacobians J;
    Trajectory0 Y1;
    if (first_order) {
        F = inner_integral_with(spec, xi, noise, Y0, &fnode);
        J = node_jacobians(spec, xi, noise, Y0, w);
        Y1 = solve_Y1_with(spec, xi, noise, Y0, quad, F, fnode, J);
        t.Y1_at_zero = Y1.nodes.rightCols(1);
        t.error_estimate = std::max(t.error_estimate, Y1.error_estimate);
    }

    Matrix const step = (spec.B * h).exp();
    Matrix E = Matrix::Identity(spec.m, spec.m);  // e^{-B s_k}, walking back from s = 0
    Matrix E_next(spec.m, spec.m);
    Vector const Axi = spec.A * xi;
    Vector integrand(spec.m);
    for (std::size_t k = w.N + 1; k-- > 0;) {
        auto const ki = static_cast<Eigen::Index>(k);
        double const wk = h * simpson_weight(k, w.N);
        t.h0.noalias() += wk * (E * g_nodes.col(ki));
        if (first_order) {
            double const s = Y0.t0 + static_cast<double>(k) * h;
            integrand.noalias() = J.g_x[k] * (s * Axi + F.col(ki));
            integrand.noalias() += J.g_y[k] * Y1.nodes.col(ki);
            t.h1.noalias() += wk * (E * integrand);
        }
        E_next.noalias() = E * step;
        E.swap(E_next);
    }
    return t;
}

Vector compute_h0(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                  QuadratureParams const& quad)
{
    SlowFastSpec zero_order = spec;
    zero_order.g_x = nullptr;
    zero_order.g_y = nullptr;
    return compute_terms(zero_order, xi, noise, quad).h0;
}

Vector compute_h1(SlowFastSpec const& spec, Vector const& xi, FastNoise const& noise,
                  QuadratureParams const& quad)
{
    require(static_cast<bool>(spec.g_x) && static_cast<bool>(spec.g_y),
            "first-order term needs the Jacobians g_x and g_y");
    return compute_terms(spec, xi, noise, quad).h1;
}

//---------------------------------------------------------------------------//

OUPath manifold_noise_path(SlowFastSpec const& spec, NoiseRealization const& noise,
                           QuadratureParams const& quad, double tau_max)
{
    spec.validate();
    NoiseRealization const fast = noise.rescaled(spec.epsilon);
    require(std::abs(fast.dt() - quad.dtau) <= 1e-9 * quad.dtau,
            "noise dt must equal epsilon * dtau for the manifold path");
    bool const unit_decay = spec.B.isApprox(-Matrix::Identity(spec.m, spec.m), 0.0);
    std::optional<double> weight;
    if (unit_decay) weight = 1.0;
    return simulate_ou(spec.B, 1.0, 1.0, fast, -quad.T_trunc, std::max(tau_max, 0.0), weight);
}

NoiseRealization manifold_noise(std::uint64_t seed, StreamId stream, int dimension,
                                double epsilon, QuadratureParams const& quad, double t_max)
{
    require(epsilon > 0.0, "epsilon must be positive");
    double const dt = epsilon * quad.dtau;
    return NoiseRealization(seed, stream, dimension, dt, -epsilon * quad.T_trunc,
                            std::max(t_max, dt));
}

ManifoldApproximation ManifoldApproximation::quadrature(SlowFastSpec spec,
                                                        std::shared_ptr<OUPath const> path,
                                                        QuadratureParams quad, NoiseMode mode)
{
    spec.validate();
    Eigen::EigenSolver<Matrix> es(spec.B, false);
    quad.validate(-es.eigenvalues().real().maxCoeff());
    require(path != nullptr, "quadrature mode needs an OU path");
    ManifoldApproximation m;
    m.spec_ = std::move(spec);
    m.quad_ = quad;
    m.mode_ = ManifoldMode::quadrature;
    m.noise_mode_ = mode;
    m.path_ = std::move(path);
    m.origin_ = m.path_->node_at(0.0);
    require(m.origin_ >= quad.intervals(), "OU path must start at or before -T_trunc");
    return m;
}

ManifoldApproximation ManifoldApproximation::analytic_particle(ParticleParams p,
                                                               std::shared_ptr<OUPath const> path,
                                                               NoiseMode mode)
{
    require(path != nullptr, "analytic mode from a path needs the path");
    ManifoldApproximation m;
    m.spec_ = particle_system(p);
    m.mode_ = ManifoldMode::analytic_particle;
    m.noise_mode_ = mode;
    m.particle_ = p;
    m.path_ = std::move(path);
    m.origin_ = m.path_->node_at(0.0);
    if (mode == NoiseMode::frozen) {
        m.frozen_ = frozen_integrals_from_path(*m.path_, m.origin_);
    } else {
        m.auxiliary_ = auxiliary_from_path(*m.path_);
    }
    return m;
}

ManifoldApproximation ManifoldApproximation::analytic_particle(ParticleParams p,
                                                               FrozenIntegrals integrals)
{
    require(integrals.exp_integral.size() == 2 && integrals.weighted_integral.size() == 2,
            "particle frozen integrals must be two-dimensional");
    ManifoldApproximation m;
    m.spec_ = particle_system(p);
    m.mode_ = ManifoldMode::analytic_particle;
    m.noise_mode_ = NoiseMode::frozen;
    m.particle_ = p;
    m.frozen_ = std::move(integrals);
    return m;
}

std::size_t ManifoldApproximation::origin_at(double t) const
{
    if (noise_mode_ == NoiseMode::frozen || t == 0.0) return origin_;
    require(path_ != nullptr, "evolving mode needs an OU path");
    double const q = t / (spec_.epsilon * path_->dt);
    double const k = std::round(q);
    require(std::abs(q - k) <= 1e-6 * std::max(1.0, std::abs(q)),
            "evolving-mode time must lie on the fast-time grid");
    auto const node = static_cast<long long>(origin_) + static_cast<long long>(k);
    require(node >= 0 && node <= static_cast<long long>(path_->steps()),
            "time outside the OU path");
    return static_cast<std::size_t>(node);
}

ManifoldTerms ManifoldApproximation::terms(Vector const& xi, double t) const
{
    std::size_t const o = origin_at(t);
    if (mode_ == ManifoldMode::quadrature) {
        return compute_terms(spec_, xi, FastNoise{path_.get(), o}, quad_);
    }
    require(xi.size() == 2, "particle model has a two-dimensional slow variable");
    Vec2 const x(xi(0), xi(1));
    Vector const zeta = frozen_ ? frozen_->weighted_integral : auxiliary_[o][1];
    ManifoldTerms r;
    r.h0 = Vector(analytic_h0(x, *particle_));
    r.h1 = Vector(analytic_h1(x, *particle_, Vec2(zeta(0), zeta(1))));
    r.Y0_at_zero = r.h0;
    r.Y1_at_zero = r.h1;
    return r;
}

Vector ManifoldApproximation::h_eps(Vector const& xi, double t) const
{
    ManifoldTerms const r = terms(xi, t);
    return r.h0 + spec_.epsilon * r.h1;
}

Vector ManifoldApproximation::eta(double t) const
{
    if (frozen_ && mode_ == ManifoldMode::analytic_particle) return frozen_->exp_integral;
    return path_->values[origin_at(t)];
}

Vector ManifoldApproximation::reduced_rhs(Vector const& xi, double t) const
{
    return spec_.A * xi + spec_.f(xi, spec_.sigma * eta(t) + h_eps(xi, t));
}

}  // namespace slowfast
