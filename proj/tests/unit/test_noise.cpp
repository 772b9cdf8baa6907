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
#include <numbers>

#include <doctest.h>

#include "slowfast/errors.hpp"
#include "slowfast/noise.hpp"
#include "slowfast/philox.hpp"
#include "support.hpp"

using namespace slowfast;

TEST_SUITE("noise") {

TEST_CASE("philox known answers")
{
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) ==
          C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::generate(C{~0u, ~0u, ~0u, ~0u}, K{~0u, ~0u}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                               K{0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform_open stays inside (0, 1)")
{
    CHECK(uniform_open(0, 0) > 0.0);
    CHECK(uniform_open(~0u, ~0u) < 1.0);
    CHECK(uniform_open(~0u, ~0u) == 1.0 - 0x1.0p-53);
    CHECK(uniform_open(0, 0) == 0x1.0p-53);
}

TEST_CASE("same seed and stream give identical draws")
{
    NoiseRealization const a(5, {3, 4}, 2, 0.01, -1.0, 1.0);
    NoiseRealization const b(5, {3, 4}, 2, 0.01, -1.0, 1.0);
    NoiseRealization const c(5, {3, 5}, 2, 0.01, -1.0, 1.0);
    for (std::int64_t k = a.first_step(); k < a.end_step(); k += 17) {
        CHECK(a.step_normals(1, k) == b.step_normals(1, k));
        CHECK(a.step_normals(1, k) != c.step_normals(1, k));
    }
    CHECK(a.auxiliary_normals(AuxLane::frozen_integrals, 0) ==
          b.auxiliary_normals(AuxLane::frozen_integrals, 0));
}

TEST_CASE("grid bookkeeping")
{
    NoiseRealization const n(1, {}, 1, 0.01, -1.0, 2.0);
    CHECK(n.first_step() == -100);
    CHECK(n.end_step() == 200);
    CHECK(n.node_index(0.5) == 50);
    CHECK_THROWS_AS(n.node_index(0.505), ValidationError);
    CHECK_THROWS_AS(n.node_index(3.0), ValidationError);
    CHECK_THROWS_AS(NoiseRealization(1, {}, 0, 0.01, 0.0, 1.0), ValidationError);
}

TEST_CASE("shift re-bases the increments")
{
    NoiseRealization const n(2, {1, 1}, 1, 0.01, -1.0, 2.0);
    NoiseRealization const s = n.shifted(0.5);
    for (std::int64_t k = 0; k < 50; ++k) {
        CHECK(s.increment(0, k) == n.increment(0, k + 50));
    }
    // Shifting twice composes.
    NoiseRealization const ss = s.shifted(0.25);
    CHECK(ss.increment(0, 3) == n.increment(0, 78));
}

TEST_CASE("rescaling is Brownian scaling of the same increments")
{
    double const eps = 0.05;
    NoiseRealization const n(2, {1, 1}, 1, 0.01, -1.0, 2.0);
    NoiseRealization const r = n.rescaled(eps);
    CHECK(r.dt() == doctest::Approx(0.01 / eps));
    CHECK(r.t_max() == doctest::Approx(2.0 / eps));
    for (std::int64_t k = 0; k < 20; ++k) {
        CHECK(r.increment(0, k) == doctest::Approx(n.increment(0, k) / std::sqrt(eps)).epsilon(1e-14));
    }
}

TEST_CASE("distinct streams are uncorrelated")
{
    NoiseRealization const a(3, {0, 0}, 1, 1.0, 0.0, 100000.0);
    NoiseRealization const b(3, {0, 1}, 1, 1.0, 0.0, 100000.0);
    Sample prod;
    for (std::int64_t k = 0; k < 100000; ++k) {
        prod.add(a.increment(0, k) * b.increment(0, k));
    }
    CHECK(prod.z(0.0) < 5.0);
}

TEST_CASE("stationary covariance solves the Lyapunov equation")
{
    Matrix D(2, 2);
    D << -1.0, 0.4, -0.3, -2.0;
    Matrix const S = stationary_covariance(D, 0.7);
    Matrix const R = D * S + S * D.transpose() + 0.49 * Matrix::Identity(2, 2);
    CHECK(R.norm() < 1e-12);
    CHECK((S - S.transpose()).norm() < 1e-14);
    CHECK(stationary_covariance(-Matrix::Identity(1, 1), 1.0)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("OU step functionals have the exact means")
{
    double const h = 0.3;
    OUStepper const st(-Matrix::Identity(1, 1), 0.0, h, 1.0);
    NoiseRealization const n(1, {}, 1, h, 0.0, 3.0);
    Vector x(1);
    x << 2.0;
    OUStepper::Step out;
    st.advance(x, n, 0, out);
    CHECK(out.value(0) == doctest::Approx(2.0 * std::exp(-h)).epsilon(1e-14));
    CHECK(out.integral(0) == doctest::Approx(2.0 * (1.0 - std::exp(-h))).epsilon(1e-13));
    // int_0^h e^{u} 2 e^{-u} du = 2h
    CHECK(out.weighted(0) == doctest::Approx(2.0 * h).epsilon(1e-13));
}

TEST_CASE("simulate_ou: zero noise, instability and coarse-step warning")
{
    Matrix const B = -Matrix::Identity(2, 2);
    NoiseRealization const n(1, {}, 2, 0.01, 0.0, 1.0);
    OUPath const p = simulate_ou(B, 1.0, 0.0, n, 0.0, 1.0);
    for (auto const& v : p.values) CHECK(v.norm() == 0.0);
    CHECK(p.steps() == 100);

    CHECK_THROWS_AS(simulate_ou(Matrix::Identity(2, 2), 1.0, 1.0, n, 0.0, 1.0), ValidationError);

    NoiseRealization const coarse(1, {}, 2, 0.1, 0.0, 1.0);
    OUPath const w = simulate_ou(B, 0.05, 1.0, coarse, 0.0, 1.0);
    CHECK_FALSE(w.warnings.empty());
}

TEST_CASE("OU stationary variance and lag-1 autocorrelation")
{
    Matrix const B = -Matrix::Identity(1, 1);
    Sample var;
    Sample lag;
    for (std::uint32_t k = 0; k < 20000; ++k) {
        NoiseRealization const n(4, {0, k}, 1, 0.05, 0.0, 1.0);
        OUPath const p = simulate_ou(B, 1.0, 1.0, n, 0.0, 1.0);
        double const x0 = p.values.front()(0);
        double const x1 = p.values.back()(0);
        var.add(x0 * x0);
        lag.add(x0 * x1);
    }
    CHECK(var.z(0.5) < 5.0);
    CHECK(lag.z(0.5 * std::exp(-1.0)) < 5.0);
}

TEST_CASE("OU in original time has variance sigma^2 / 2")
{
    Matrix const B = -Matrix::Identity(1, 1);
    double const sigma = 0.01;
    Sample var;
    for (std::uint32_t k = 0; k < 20000; ++k) {
        NoiseRealization const n(6, {1, k}, 1, 0.001, 0.0, 0.2);
        OUPath const p = simulate_ou(B, 0.05, sigma, n, 0.1, 0.2);
        var.add(p.values.back()(0) * p.values.back()(0));
    }
    CHECK(var.z(sigma * sigma / 2.0) < 5.0);
}

TEST_CASE("frozen integrals: determinism and moments")
{
    NoiseRealization const n(8, {2, 2}, 2, 0.01, 0.0, 1.0);
    FrozenIntegrals const a = sample_frozen_integrals(n);
    FrozenIntegrals const b = sample_frozen_integrals(n);
    CHECK(a.exp_integral == b.exp_integral);
    CHECK(a.weighted_integral == b.weighted_integral);
    CHECK(a.exp_integral(0) != a.exp_integral(1));

    Sample ve, vs, cv;
    for (std::uint32_t k = 0; k < 200000; ++k) {
        FrozenIntegrals const f = sample_frozen_integrals(NoiseRealization(8, {0, k}, 1, 1.0, 0.0, 1.0));
        ve.add(f.exp_integral(0) * f.exp_integral(0));
        vs.add(f.weighted_integral(0) * f.weighted_integral(0));
        cv.add(f.exp_integral(0) * f.weighted_integral(0));
    }
    CHECK(ve.z(0.5) < 5.0);
    CHECK(vs.z(0.25) < 5.0);
    CHECK(cv.z(-0.25) < 5.0);
}

TEST_CASE("auxiliary integrals")
{
    AuxiliaryState s;
    for (int k = 0; k < 100; ++k) s = evolve_auxiliary_integrals(s, 0.0, 0.01);
    CHECK(s.rho == 0.0);
    CHECK(s.zeta == 0.0);
    CHECK_THROWS_AS(evolve_auxiliary_integrals(s, 0.0, 0.0), ValidationError);

    // Long run from rest: Var(rho) -> 1/2, Var(zeta) -> 1/4, Cov -> -1/4.
    double const dt = 0.01;
    Sample vr, vz, cv;
    for (std::uint32_t k = 0; k < 4000; ++k) {
        NoiseRealization const n(9, {5, k}, 1, dt, 0.0, 20.0);
        AuxiliaryState a;
        for (std::int64_t j = 0; j < 2000; ++j) a = evolve_auxiliary_integrals(a, n.increment(0, j), dt);
        vr.add(a.rho * a.rho);
        vz.add(a.zeta * a.zeta);
        cv.add(a.rho * a.zeta);
    }
    CHECK(vr.z(0.5) < 5.0);
    CHECK(vz.z(0.25) < 5.0);
    CHECK(cv.z(-0.25) < 5.0);
}

TEST_CASE("frozen integrals read off a path agree with the recursion")
{
    NoiseRealization const n(12, {1, 0}, 1, 0.001, -30.0, 0.0);
    OUPath const p = simulate_ou(-Matrix::Identity(1, 1), 1.0, 1.0, n, -30.0, 0.0, 1.0);
    std::size_t const origin = p.node_at(0.0);
    FrozenIntegrals const f = frozen_integrals_from_path(p, origin);
    auto const aux = auxiliary_from_path(p);
    CHECK(f.exp_integral(0) == doctest::Approx(aux[origin][0](0)).epsilon(1e-3));
    CHECK(f.weighted_integral(0) == doctest::Approx(aux[origin][1](0)).epsilon(1e-3));
}

}
