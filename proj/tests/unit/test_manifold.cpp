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


#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <doctest.h>

#include "slowfast/errors.hpp"
#include "slowfast/manifold.hpp"
#include "slowfast/particle.hpp"

using namespace slowfast;

namespace {

constexpr double kPi = std::numbers::pi;

// Two-by-two linear test system: f = 0, g(x, y) = C x.
SlowFastSpec linear_spec(Matrix const& C, Matrix const& B)
{
    SlowFastSpec s;
    s.name = "linear";
    s.n = 2;
    s.m = 2;
    s.A = Matrix::Zero(2, 2);
    s.B = B;
    s.f = [](Vector const&, Vector const&) { return Vector::Zero(2).eval(); };
    s.f_x = [](Vector const&, Vector const&) { return Matrix::Zero(2, 2).eval(); };
    s.f_y = s.f_x;
    s.g = [C](Vector const& x, Vector const&) { return (C * x).eval(); };
    s.g_x = [C](Vector const&, Vector const&) { return C; };
    s.g_y = s.f_x;
    s.epsilon = 0.05;
    s.sigma = 0.0;
    return s;
}

struct Fixture {
    SlowFastSpec spec;
    QuadratureParams quad;
    NoiseRealization noise;
    OUPath path;
    FastNoise fast;

    Fixture(SlowFastSpec s, QuadratureParams q = {}, std::uint64_t seed = 1)
        : spec(std::move(s)), quad(q),
          noise(manifold_noise(seed, {0, 0}, spec.m, spec.epsilon, quad)),
          path(manifold_noise_path(spec, noise, quad)),
          fast{&path, path.node_at(0.0)}
    {}
};

}  // namespace

TEST_SUITE("manifold-approx") {

TEST_CASE("quadrature parameters")
{
    QuadratureParams q;
    CHECK_NOTHROW(q.validate(1.0));
    CHECK(q.intervals() == 23000);
    QuadratureParams shortT{10.0, 1e-3, 1e-9};
    CHECK_THROWS_AS(shortT.validate(1.0), ValidationError);
    QuadratureParams odd{23.001, 1e-3, 1e-9};
    CHECK_THROWS_AS(odd.validate(1.0), ValidationError);
    CHECK(parse_noise_mode("evolving") == NoiseMode::evolving);
    CHECK_THROWS_AS(parse_noise_mode("thawed"), ValidationError);
}

TEST_CASE("g = 0 gives a flat manifold")
{
    Fixture fx(linear_spec(Matrix::Zero(2, 2), -Matrix::Identity(2, 2)));
    Vector xi(2);
    xi << 0.3, -1.2;
    Trajectory0 const Y0 = solve_Y0(fx.spec, xi, fx.fast, fx.quad);
    CHECK(Y0.nodes.cwiseAbs().maxCoeff() == 0.0);
    CHECK(compute_h0(fx.spec, xi, fx.fast, fx.quad).norm() == 0.0);
    CHECK(compute_h1(fx.spec, xi, fx.fast, fx.quad).norm() == 0.0);
}

TEST_CASE("g = x relaxes Y0 to xi")
{
    Fixture fx(linear_spec(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)));
    Vector xi(2);
    xi << 0.7, -0.4;
    Trajectory0 const Y0 = solve_Y0(fx.spec, xi, fx.fast, fx.quad);
    CHECK((Y0.nodes.col(Y0.nodes.cols() - 1) - xi).norm() < fx.quad.tol);
    // Y0(s) = xi (1 - e^{-(s + T)}) along the way.
    Eigen::Index const k = Y0.nodes.cols() / 2;
    double const s = -fx.quad.T_trunc + static_cast<double>(k) * fx.quad.dtau;
    CHECK((Y0.nodes.col(k) - xi * (1.0 - std::exp(-(s + fx.quad.T_trunc)))).norm() < 1e-10);
}

TEST_CASE("linear fast drive: h0 = -B^{-1} C xi and h1 = 0")
{
    Matrix C(2, 2), B(2, 2);
    C << 1.0, 2.0, -0.5, 0.3;
    B << -1.0, 0.4, 0.0, -1.5;
    Fixture fx(linear_spec(C, B));
    Vector xi(2);
    xi << 0.9, -0.2;
    Vector const h0 = compute_h0(fx.spec, xi, fx.fast, fx.quad);
    Vector const expect = -B.inverse() * C * xi;
    CHECK((h0 - expect).cwiseAbs().maxCoeff() < 2 * fx.quad.tol);
    // f = 0 and A = 0 remove the Y1 forcing.
    CHECK(compute_h1(fx.spec, xi, fx.fast, fx.quad).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("particle model: deterministic quadrature reproduces the closed forms")
{
    ParticleParams const p{0.7, 0.3, 0.05, 0.0};
    Fixture fx(particle_system(p));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, kPi);
    for (int k = 0; k < 5; ++k) {
        Vector xi(2);
        xi << U(rng), U(rng);
        ManifoldTerms const t = compute_terms(fx.spec, xi, fx.fast, fx.quad);
        Vec2 const x = xi;
        CHECK((t.h0 - analytic_h0(x, p)).cwiseAbs().maxCoeff() < 2 * fx.quad.tol);
        CHECK((t.h1 - analytic_h1(x, p, Vec2::Zero())).cwiseAbs().maxCoeff() < 4 * fx.quad.tol);
    }
    Vector c(2);
    c << kPi / 2, kPi / 2;
    Trajectory0 const Y0 = solve_Y0(fx.spec, c, fx.fast, fx.quad);
    Vector const end = Y0.nodes.col(Y0.nodes.cols() - 1);
    CHECK(std::abs(end(0)) < fx.quad.tol);
    CHECK(std::abs(end(1) - 0.3) < fx.quad.tol);
}

TEST_CASE("quadrature and analytic modes agree on the same noise")
{
    ParticleParams const p{0.7, 0.1, 0.05, 0.01};
    SlowFastSpec const spec = particle_system(p);
    QuadratureParams const quad;
    auto noise = manifold_noise(21, {4, 0}, 2, p.epsilon, quad);
    auto path = std::make_shared<OUPath const>(manifold_noise_path(spec, noise, quad));
    auto const q = ManifoldApproximation::quadrature(spec, path, quad, NoiseMode::frozen);
    auto const a = ManifoldApproximation::analytic_particle(p, path, NoiseMode::frozen);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, kPi);
    for (int k = 0; k < 5; ++k) {
        Vector xi(2);
        xi << U(rng), U(rng);
        CHECK((q.h0(xi) - a.h0(xi)).cwiseAbs().maxCoeff() < 5 * quad.tol);
        CHECK((q.h1(xi) - a.h1(xi)).cwiseAbs().maxCoeff() < 5 * quad.tol);
        CHECK((q.reduced_rhs(xi) - a.reduced_rhs(xi)).cwiseAbs().maxCoeff() < 5 * quad.tol);
    }
}

TEST_CASE("analytic reduced field equals the particle reduced drift")
{
    ParticleParams const p{0.7, 0.1, 0.05, 0.01};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, kPi);
    for (std::uint32_t k = 0; k < 100; ++k) {
        FrozenIntegrals const f = sample_frozen_integrals(NoiseRealization(6, {0, k}, 2, 1.0, 0.0, 1.0));
        auto const m = ManifoldApproximation::analytic_particle(p, f);
        Vector xi(2);
        xi << U(rng), U(rng);
        ReducedNoise n;
        n.rho = f.exp_integral;
        n.zeta = f.weighted_integral;
        CHECK((m.reduced_rhs(xi) - reduced_drift(xi, p, n)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("truncation convergence")
{
    ParticleParams const p{0.7, 0.1, 0.05, 0.01};
    SlowFastSpec const spec = particle_system(p);
    QuadratureParams const q23;
    QuadratureParams const q46{46.0, 1e-3, 1e-9};
    auto n23 = manifold_noise(31, {0, 0}, 2, p.epsilon, q23);
    auto n46 = manifold_noise(31, {0, 0}, 2, p.epsilon, q46);
    OUPath const p23 = manifold_noise_path(spec, n23, q23);
    OUPath const p46 = manifold_noise_path(spec, n46, q46);
    // Same increments on [-23, 0]; the differing starts are forgotten like e^{-23}.
    CHECK((p23.values[p23.node_at(0.0)] - p46.values[p46.node_at(0.0)]).norm() < 10 * std::exp(-23.0));
    Vector xi(2);
    xi << 1.1, 2.3;
    ManifoldTerms const a = compute_terms(spec, xi, {&p23, p23.node_at(0.0)}, q23);
    ManifoldTerms const b = compute_terms(spec, xi, {&p46, p46.node_at(0.0)}, q46);
    CHECK((a.h0 - b.h0).cwiseAbs().maxCoeff() < q23.tol);
    // h1 carries s-weighted terms, truncated like T e^{-T}: its budget is 4 tol.
    CHECK((a.h1 - b.h1).cwiseAbs().maxCoeff() < 4 * q23.tol);
}

TEST_CASE("frozen mode reads the noise at t = 0; evolving mode moves with t")
{
    ParticleParams const p{0.7, 0.1, 0.05, 0.01};
    SlowFastSpec const spec = particle_system(p);
    QuadratureParams const quad;
    auto noise = manifold_noise(41, {0, 0}, 2, p.epsilon, quad, 1.0);
    auto path = std::make_shared<OUPath const>(manifold_noise_path(spec, noise, quad, 1.0 / p.epsilon));
    auto const fr = ManifoldApproximation::analytic_particle(p, path, NoiseMode::frozen);
    auto const ev = ManifoldApproximation::analytic_particle(p, path, NoiseMode::evolving);
    Vector xi(2);
    xi << 1.0, 1.0;
    CHECK((fr.eta(0.5) - fr.eta(0.0)).norm() == 0.0);
    CHECK((ev.eta(0.0) - fr.eta(0.0)).norm() == 0.0);
    CHECK((ev.eta(0.5) - ev.eta(0.0)).norm() > 0.0);
    CHECK((ev.h1(xi, 0.5) - fr.h1(xi, 0.5)).norm() > 0.0);
}

TEST_CASE("f = 0 and A = 0 reduce to A xi")
{
    Fixture fx(linear_spec(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)));
    auto path = std::make_shared<OUPath const>(fx.path);
    auto const m = ManifoldApproximation::quadrature(fx.spec, path, fx.quad, NoiseMode::frozen);
    Vector xi(2);
    xi << 0.2, 0.5;
    CHECK(m.reduced_rhs(xi).norm() == 0.0);
}

}
