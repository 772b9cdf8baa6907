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

#include "slowfast/integrators.hpp"

#include <cmath>

#include "slowfast/errors.hpp"

namespace slowfast {
namespace {

constexpr double kPi = std::numbers::pi;

std::size_t step_count(IntegratorConfig const& cfg)
{
    return static_cast<std::size_t>(std::llround(std::ceil(cfg.t_max / cfg.dt - 1e-9)));
}

// Entry side for a point already on or outside the closed cell.
std::optional<Side> boundary_side(Vec2 const& x)
{
    if (x(0) <= 0.0) return Side::left;
    if (x(1) <= 0.0) return Side::top;
    if (x(0) >= kPi) return Side::right;
    if (x(1) >= kPi) return Side::bottom;
    return std::nullopt;
}

class Recorder {
public:
    Recorder(IntegratorConfig const& cfg, Trajectory& traj) : cfg_(cfg), traj_(traj) {}

    template <class State>
    void push(std::size_t step, double t, State const& state, bool force = false)
    {
        if (cfg_.record && (force || step % cfg_.record_every == 0)) {
            if (traj_.times.empty() || t > traj_.times.back()) {
                traj_.times.push_back(t);
                traj_.states.emplace_back(state);
            }
        }
    }

private:
    IntegratorConfig const& cfg_;
    Trajectory& traj_;
};

void check_noise_extent(NoiseRealization const& noise, double dt, std::size_t steps, int dim)
{
    require(noise.dimension() == dim, "noise dimension must be 2 for the particle model");
    require(std::abs(noise.dt() - dt) <= 1e-12 * dt, "noise dt must equal the integrator dt");
    std::int64_t const k0 = noise.node_index(0.0);
    require(k0 + static_cast<std::int64_t>(steps) <= noise.end_step(),
            "noise realization shorter than the integration horizon");
}

}  // namespace

std::string_view to_string(Scheme scheme)
{
    switch (scheme) {
    case Scheme::exponential_em: return "exponential-em";
    case Scheme::euler_maruyama: return "euler-maruyama";
    case Scheme::rk4_deterministic: return "rk4-deterministic";
    }
    return "?";
}

Scheme parse_scheme(std::string_view name)
{
    for (Scheme s : {Scheme::exponential_em, Scheme::euler_maruyama, Scheme::rk4_deterministic}) {
        if (to_string(s) == name) return s;
    }
    throw ValidationError("unknown scheme '" + std::string(name) + "'");
}

void IntegratorConfig::validate() const
{
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(t_max > 0.0 && std::isfinite(t_max), "t_max must be positive");
    require(record_every >= 1, "record_every must be at least 1");
}

std::optional<ExitEvent> detect_exit(double t0, Vec2 const& x0, double t1, Vec2 const& x1)
{
    if (auto side = boundary_side(x0)) {
        return ExitEvent{t0, *side, x0};
    }
    // Candidate fractions in priority order: left, top, right, bottom.
    struct Candidate {
        Side side;
        double frac;
    };
    Candidate best{Side::left, 2.0};
    auto consider = [&](Side side, bool crossed, double a, double b, double level) {
        if (!crossed) return;
        double const frac = std::clamp((level - a) / (b - a), 0.0, 1.0);
        if (frac < best.frac) best = {side, frac};
    };
    consider(Side::left, x1(0) <= 0.0, x0(0), x1(0), 0.0);
    consider(Side::top, x1(1) <= 0.0, x0(1), x1(1), 0.0);
    consider(Side::right, x1(0) >= kPi, x0(0), x1(0), kPi);
    consider(Side::bottom, x1(1) >= kPi, x0(1), x1(1), kPi);
    if (best.frac > 1.0) return std::nullopt;
    ExitEvent e;
    e.side = best.side;
    e.time = t0 + best.frac * (t1 - t0);
    e.point = x0 + best.frac * (x1 - x0);
    // Pin the crossed coordinate onto the side exactly.
    switch (best.side) {
    case Side::left: e.point(0) = 0.0; break;
    case Side::right: e.point(0) = kPi; break;
    case Side::top: e.point(1) = 0.0; break;
    case Side::bottom: e.point(1) = kPi; break;
    }
    return e;
}

//---------------------------------------------------------------------------//

Trajectory integrate_full(Vec4 const& init, ParticleParams const& p,
                          NoiseRealization const& noise, IntegratorConfig const& cfg)
{
    p.validate();
    cfg.validate();
    require(p.epsilon > 0.0, "the full system needs epsilon > 0");
    require(init.allFinite(), "initial state must be finite");
    std::size_t const steps = step_count(cfg);
    double const h = cfg.dt;
    double const eps = p.epsilon;
    bool const noisy = p.sigma > 0.0;
    if (cfg.scheme == Scheme::euler_maruyama) {
        require(h < eps / 2.0, "euler-maruyama on the full system needs dt < epsilon/2");
    }
    if (cfg.scheme == Scheme::rk4_deterministic) {
        require(!noisy, "rk4-deterministic requires sigma = 0");
    }
    if (noisy) check_noise_extent(noise, h, steps, 2);
    std::int64_t const k0 = noisy ? noise.node_index(0.0) : 0;

    Trajectory traj;
    Recorder rec(cfg, traj);
    Vec4 x = init;
    rec.push(0, 0.0, x, true);
    if (auto e = detect_exit(0.0, x.head<2>(), 0.0, x.head<2>()); e && cfg.stop_at_exit) {
        traj.exit = e;
        traj.final_state = x;
        return traj;
    }

    std::optional<OUStepper> ou;
    Vector eta = Vector::Zero(2);
    OUStepper::Step ou_step;
    if (noisy && cfg.scheme == Scheme::exponential_em) {
        ou.emplace(-Matrix::Identity(2, 2) / eps, 1.0 / std::sqrt(eps), h);
        std::int64_t const k_min = noise.first_step();
        eta = ou->stationary_sample(noise, k_min);
        for (std::int64_t k = k_min; k < k0; ++k) {
            ou->advance(eta, noise, k, ou_step);
            eta = ou_step.value;
        }
    }

    double const lam = h / eps;
    double const decay = std::exp(-lam);
    double const phi = -std::expm1(-lam);
    Vec2 w = x.tail<2>() - p.sigma * Vec2(eta(0), eta(1));
    double t = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        Vec4 next;
        Vec2 const y = x.head<2>();
        switch (cfg.scheme) {
        case Scheme::exponential_em: {
            Vec2 const u = flow_velocity(y, p);
            Vec2 shift = eps * phi * w + (h - eps * phi) * u;
            w = decay * w + phi * u;
            Vec2 eta_next = Vec2::Zero();
            if (ou) {
                ou->advance(eta, noise, k0 + static_cast<std::int64_t>(n), ou_step);
                eta = ou_step.value;
                eta_next = Vec2(eta(0), eta(1));
                shift += p.sigma * Vec2(ou_step.integral(0), ou_step.integral(1));
            }
            next << y + shift, w + p.sigma * eta_next;
            break;
        }
        case Scheme::euler_maruyama: {
            Vec4 const d = full_drift(x, p);
            next = x + h * d;
            if (noisy) {
                double const scale = p.sigma / std::sqrt(eps);
                auto const k = k0 + static_cast<std::int64_t>(n);
                next(2) += scale * noise.increment(0, k);
                next(3) += scale * noise.increment(1, k);
            }
            break;
        }
        case Scheme::rk4_deterministic: {
            Vec4 const k1 = full_drift(x, p);
            Vec4 const k2 = full_drift(x + 0.5 * h * k1, p);
            Vec4 const k3 = full_drift(x + 0.5 * h * k2, p);
            Vec4 const k4 = full_drift(x + h * k3, p);
            next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            break;
        }
        }
        double const t_next = static_cast<double>(n + 1) * h;
        if (!next.allFinite()) {
            throw IntegrationError("full system left the finite range", t);
        }
        auto e = detect_exit(t, x.head<2>(), t_next, next.head<2>());
        x = next;
        t = t_next;
        if (e && !traj.exit) {
            traj.exit = e;
            if (cfg.stop_at_exit) {
                rec.push(n + 1, t, x, true);
                break;
            }
        }
        rec.push(n + 1, t, x, n + 1 == steps);
    }
    traj.final_state = x;
    traj.final_time = t;
    return traj;
}

Trajectory integrate_reduced(Vec2 const& init, ParticleParams const& p,
                             NoiseRealization const& noise, IntegratorConfig const& cfg,
                             ReducedInput const& input)
{
    p.validate();
    cfg.validate();
    require(init.allFinite(), "initial state must be finite");
    require(cfg.scheme != Scheme::exponential_em,
            "the reduced system is a random ODE: use rk4-deterministic or euler-maruyama");
    std::size_t const steps = step_count(cfg);
    double const h = cfg.dt;
    bool const noisy = p.sigma > 0.0;
    bool const evolving = noisy && input.mode == NoiseMode::evolving;
    if (evolving) {
        require(p.epsilon > 0.0, "evolving noise mode needs epsilon > 0");
        check_noise_extent(noise, h, steps, 2);
    }

    ReducedNoise rn;
    if (noisy) {
        FrozenIntegrals const I = input.integrals ? *input.integrals : sample_frozen_integrals(noise);
        require(I.exp_integral.size() == 2 && I.weighted_integral.size() == 2,
                "particle integrals must be two-dimensional");
        rn.rho = Vec2(I.exp_integral(0), I.exp_integral(1));
        rn.zeta = Vec2(I.weighted_integral(0), I.weighted_integral(1));
    }
    std::optional<NoiseRealization> fast;
    std::int64_t k0 = 0;
    double dtau = 0.0;
    if (evolving) {
        fast = noise.rescaled(p.epsilon);
        k0 = noise.node_index(0.0);
        dtau = h / p.epsilon;
    }

    Trajectory traj;
    Recorder rec(cfg, traj);
    Vec2 x = init;
    rec.push(0, 0.0, x, true);
    if (auto e = detect_exit(0.0, x, 0.0, x); e && cfg.stop_at_exit) {
        traj.exit = e;
        traj.final_state = x;
        return traj;
    }

    bool const rk4 = cfg.scheme == Scheme::rk4_deterministic;
    double t = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        ReducedNoise rn_next = rn;
        if (evolving) {
            auto const k = k0 + static_cast<std::int64_t>(n);
            for (int c = 0; c < 2; ++c) {
                AuxiliaryState const s = evolve_auxiliary_integrals({rn.rho(c), rn.zeta(c)},
                                                                    fast->increment(c, k), dtau);
                rn_next.rho(c) = s.rho;
                rn_next.zeta(c) = s.zeta;
            }
        }
        Vec2 next;
        if (rk4) {
            ReducedNoise const mid{0.5 * (rn.rho + rn_next.rho), 0.5 * (rn.zeta + rn_next.zeta)};
            Vec2 const k1 = reduced_drift(x, p, rn);
            Vec2 const k2 = reduced_drift(x + 0.5 * h * k1, p, mid);
            Vec2 const k3 = reduced_drift(x + 0.5 * h * k2, p, mid);
            Vec2 const k4 = reduced_drift(x + h * k3, p, rn_next);
            next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } else {
            next = x + h * reduced_drift(x, p, rn);
        }
        double const t_next = static_cast<double>(n + 1) * h;
        if (!next.allFinite()) {
            throw IntegrationError("reduced system left the finite range", t);
        }
        auto e = detect_exit(t, x, t_next, next);
        x = next;
        t = t_next;
        rn = rn_next;
        if (e && !traj.exit) {
            traj.exit = e;
            if (cfg.stop_at_exit) {
                rec.push(n + 1, t, x, true);
                break;
            }
        }
        rec.push(n + 1, t, x, n + 1 == steps);
    }
    traj.final_state = x;
    traj.final_time = t;
    return traj;
}

//---------------------------------------------------------------------------//

NoiseRealization particle_noise(std::uint64_t seed, StreamId stream, IntegratorConfig const& cfg,
                                double t_min)
{
    cfg.validate();
    require(t_min <= 0.0, "t_min must not be positive");
    return NoiseRealization(seed, stream, 2, cfg.dt, t_min, cfg.t_max + 2.0 * cfg.dt);
}

DeviationReport compare_full_reduced(Vec2 const& xi, ParticleParams const& p,
                                     NoiseRealization const& noise, IntegratorConfig const& cfg,
                                     NoiseMode mode, QuadratureParams const& quad)
{
    p.validate();
    cfg.validate();
    require(p.epsilon > 0.0, "comparison needs epsilon > 0");

    FrozenIntegrals I{Vector::Zero(2), Vector::Zero(2)};
    if (p.sigma > 0.0) {
        require(noise.t_min() <= -p.epsilon * quad.T_trunc + 1e-9 * cfg.dt,
                "noise must extend back to -epsilon * T_trunc");
        OUPath const path = simulate_ou(-Matrix::Identity(2, 2), 1.0, 1.0,
                                        noise.rescaled(p.epsilon), -quad.T_trunc, 0.0, 1.0);
        I = frozen_integrals_from_path(path, path.steps());
    }
    Vec2 const zeta(I.weighted_integral(0), I.weighted_integral(1));
    Vec2 const eta0(I.exp_integral(0), I.exp_integral(1));
    Vec2 const h_eps = analytic_h0(xi, p) + p.epsilon * analytic_h1(xi, p, zeta);

    IntegratorConfig full_cfg = cfg;
    full_cfg.stop_at_exit = false;
    full_cfg.record = true;
    Vec4 init;
    init << xi, h_eps + p.sigma * eta0;

    IntegratorConfig red_cfg = full_cfg;
    red_cfg.scheme = Scheme::rk4_deterministic;

    DeviationReport r;
    r.full = integrate_full(init, p, noise, full_cfg);
    r.reduced = integrate_reduced(xi, p, noise, red_cfg, ReducedInput{mode, I});
    r.horizon = cfg.t_max;
    std::size_t const n = std::min(r.full.times.size(), r.reduced.times.size());
    for (std::size_t k = 0; k < n; ++k) {
        Vec2 const yf(r.full.states[k](0), r.full.states[k](1));
        Vec2 const vf(r.full.states[k](2), r.full.states[k](3));
        Vec2 const yr(r.reduced.states[k](0), r.reduced.states[k](1));
        r.sup_slow_deviation = std::max(r.sup_slow_deviation, (yf - yr).norm());
        if (p.sigma == 0.0) {
            Vec2 const graph = analytic_h0(yf, p) + p.epsilon * analytic_h1(yf, p, zeta);
            r.sup_graph_distance = std::max(r.sup_graph_distance, (vf - graph).norm());
        }
    }
    return r;
}

}  // namespace slowfast
