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

#include "slowfast/noise.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "slowfast/errors.hpp"
#include "slowfast/philox.hpp"

namespace slowfast {
namespace {

constexpr std::int64_t kStepBias = std::int64_t{1} << 47;
constexpr double kGridTol = 1e-6;

std::int64_t grid_index(double t, double dt)
{
    double const q = t / dt;
    double const k = std::round(q);
    require(std::abs(q - k) <= kGridTol * std::max(1.0, std::abs(q)),
            "time " + std::to_string(t) + " is not on the noise grid");
    return static_cast<std::int64_t>(k);
}

// [e^{D r}, int_0^r e^{D u} du] via the exponential of an augmented matrix.
std::pair<Matrix, Matrix> exp_and_integral(Matrix const& D, double r)
{
    auto const m = D.rows();
    Matrix aug = Matrix::Zero(2 * m, 2 * m);
    aug.topLeftCorner(m, m) = D * r;
    aug.topRightCorner(m, m) = Matrix::Identity(m, m) * r;
    Matrix const e = aug.exp();
    return {e.topLeftCorner(m, m), e.topRightCorner(m, m)};
}

// Lower factor of a positive semidefinite matrix; columns whose residual
// pivot falls to roundoff level are dropped.
Matrix semidefinite_cholesky(Matrix const& C)
{
    auto const n = C.rows();
    Matrix L = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = C(j, j) - L.row(j).head(j).squaredNorm();
        if (d <= 1e-14 * std::max(C(j, j), 0.0) || d <= 0.0) {
            continue;
        }
        L(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            L(i, j) = (C(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
        }
    }
    return L;
}

double max_real_eigenvalue(Matrix const& M)
{
    Eigen::EigenSolver<Matrix> es(M, false);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace

//---------------------------------------------------------------------------//

NoiseRealization::NoiseRealization(std::uint64_t master_seed, StreamId stream,
                                   int dimension, double dt, double t_min,
                                   double t_max)
    : seed_(master_seed), stream_(stream), dimension_(dimension), dt_(dt),
      t_min_(t_min), t_max_(t_max)
{
    require(dimension >= 1 && dimension <= 255, "noise dimension must be in [1, 255]");
    require(dt > 0.0 && std::isfinite(dt), "noise dt must be positive");
    require(t_min < t_max, "noise extent needs t_min < t_max");
    require(std::abs(t_min / dt) < 1e14 && std::abs(t_max / dt) < 1e14,
            "noise extent too long for the step counter");
}

std::int64_t NoiseRealization::first_step() const
{
    return static_cast<std::int64_t>(std::ceil(t_min_ / dt_ - kGridTol));
}

std::int64_t NoiseRealization::end_step() const
{
    return static_cast<std::int64_t>(std::floor(t_max_ / dt_ + kGridTol));
}

std::int64_t NoiseRealization::node_index(double t) const
{
    require(t >= t_min_ - kGridTol * dt_ && t <= t_max_ + kGridTol * dt_,
            "time " + std::to_string(t) + " outside the noise extent");
    return grid_index(t, dt_);
}

std::array<double, 2>
NoiseRealization::block(std::uint8_t lane, int component, std::int64_t step) const
{
    require(component >= 0 && component < dimension_, "noise component out of range");
    auto const biased = static_cast<std::uint64_t>(step + offset_ + kStepBias);
    Philox4x32::Counter const ctr{
        static_cast<std::uint32_t>(biased),
        static_cast<std::uint32_t>((biased >> 32) & 0xffffu)
            | static_cast<std::uint32_t>(component) << 16
            | static_cast<std::uint32_t>(lane) << 24,
        stream_.path,
        stream_.cell};
    Philox4x32::Key const key{static_cast<std::uint32_t>(seed_),
                              static_cast<std::uint32_t>(seed_ >> 32)};
    return box_muller(Philox4x32::generate(ctr, key));
}

std::array<double, 4> NoiseRealization::step_normals(int component, std::int64_t step) const
{
    auto const a = block(0, component, step);
    auto const b = block(1, component, step);
    return {a[0], a[1], b[0], b[1]};
}

double NoiseRealization::increment(int component, std::int64_t step) const
{
    return std::sqrt(dt_) * block(0, component, step)[0];
}

std::array<double, 4>
NoiseRealization::auxiliary_normals(AuxLane lane, int component, std::int64_t index) const
{
    auto const l = static_cast<std::uint8_t>(lane);
    auto const a = block(l, component, index);
    auto const b = block(static_cast<std::uint8_t>(l + 0x20), component, index);
    return {a[0], a[1], b[0], b[1]};
}

NoiseRealization NoiseRealization::shifted(double t) const
{
    NoiseRealization view = *this;
    std::int64_t const k = grid_index(t, dt_);
    view.offset_ += k;
    view.t_min_ -= static_cast<double>(k) * dt_;
    view.t_max_ -= static_cast<double>(k) * dt_;
    return view;
}

NoiseRealization NoiseRealization::rescaled(double epsilon) const
{
    require(epsilon > 0.0, "rescaling needs epsilon > 0");
    NoiseRealization view = *this;
    view.dt_ /= epsilon;
    view.t_min_ /= epsilon;
    view.t_max_ /= epsilon;
    return view;
}

//---------------------------------------------------------------------------//

Matrix stationary_covariance(Matrix const& drift, double diffusion_scale)
{
    auto const m = drift.rows();
    if (diffusion_scale == 0.0) {
        return Matrix::Zero(m, m);
    }
    Matrix const I = Matrix::Identity(m, m);
    Matrix lyap = Matrix::Zero(m * m, m * m);
    // vec(D S + S D^T) = (I (x) D + D (x) I) vec(S), column-major vec.
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            lyap.block(i * m, j * m, m, m) += I(i, j) * drift + drift(i, j) * I;
        }
    }
    Matrix rhs = -diffusion_scale * diffusion_scale * I;
    Vector const vecS = lyap.fullPivLu().solve(rhs.reshaped());
    Matrix S = vecS.reshaped(m, m);
    return 0.5 * (S + S.transpose());
}

OUStepper::OUStepper(Matrix drift, double diffusion_scale, double dt,
                     std::optional<double> weight_rate)
    : drift_(std::move(drift)), diffusion_(diffusion_scale), dt_(dt),
      weight_rate_(weight_rate)
{
    require(drift_.rows() == drift_.cols() && drift_.rows() >= 1, "OU drift must be square");
    require(dt > 0.0, "OU step must be positive");
    require(diffusion_scale >= 0.0, "OU diffusion scale must be nonnegative");
    require(max_real_eigenvalue(drift_) < 0.0, "OU drift matrix must be stable");

    auto const m = drift_.rows();
    Matrix const I = Matrix::Identity(m, m);
    Matrix const shifted_drift = drift_ + weight_rate_.value_or(0.0) * I;

    std::tie(transition_, integral_mean_) = exp_and_integral(drift_, dt_);
    weighted_mean_ = exp_and_integral(shifted_drift, dt_).second;

    int const blocks = has_weight() ? 4 : 3;
    Matrix cov = Matrix::Zero(blocks * m, blocks * m);
    Matrix kernel(blocks * m, m);
    using Rule = boost::math::quadrature::gauss<double, 20>;
    auto const& x = Rule::abscissa();
    auto const& w = Rule::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
            double const v = 0.5 * dt_ * (1.0 + sign * x[i]);
            auto const [e, k2] = exp_and_integral(drift_, dt_ - v);
            kernel.block(0, 0, m, m) = I;
            kernel.block(m, 0, m, m) = e;
            kernel.block(2 * m, 0, m, m) = k2;
            if (has_weight()) {
                kernel.block(3 * m, 0, m, m) =
                    std::exp(*weight_rate_ * v) * exp_and_integral(shifted_drift, dt_ - v).second;
            }
            cov.noalias() += (0.5 * dt_ * w[i]) * kernel * kernel.transpose();
        }
    }
    cov = 0.5 * (cov + cov.transpose());
    chol_ = semidefinite_cholesky(cov);

    stationary_cov_ = slowfast::stationary_covariance(drift_, diffusion_);
    stationary_chol_ = semidefinite_cholesky(stationary_cov_);
}

void OUStepper::advance(Vector const& current, NoiseRealization const& noise,
                        std::int64_t step, Step& out) const
{
    auto const m = drift_.rows();
    require(noise.dimension() == m, "noise dimension does not match OU dimension");
    auto const blocks = chol_.rows() / m;
    Vector normals(blocks * m);
    for (Eigen::Index c = 0; c < m; ++c) {
        auto const n = noise.step_normals(static_cast<int>(c), step);
        for (Eigen::Index b = 0; b < blocks; ++b) {
            normals(b * m + c) = n[static_cast<std::size_t>(b)];
        }
    }
    Vector const z = chol_.triangularView<Eigen::Lower>() * normals;
    out.increment = z.segment(0, m);
    out.value = transition_ * current + diffusion_ * z.segment(m, m);
    out.integral = integral_mean_ * current + diffusion_ * z.segment(2 * m, m);
    if (has_weight()) {
        out.weighted = weighted_mean_ * current + diffusion_ * z.segment(3 * m, m);
    }
}

Vector OUStepper::stationary_sample(NoiseRealization const& noise, std::int64_t index) const
{
    auto const m = drift_.rows();
    Vector n(m);
    for (Eigen::Index c = 0; c < m; ++c) {
        n(c) = noise.auxiliary_normals(AuxLane::stationary_start, static_cast<int>(c), index)[0];
    }
    return stationary_chol_.triangularView<Eigen::Lower>() * n;
}

//---------------------------------------------------------------------------//

std::size_t OUPath::node_at(double t) const
{
    double const q = (t - t0) / dt;
    double const k = std::round(q);
    require(std::abs(q - k) <= kGridTol * std::max(1.0, std::abs(q)) && k >= 0
                && k <= static_cast<double>(steps()),
            "time " + std::to_string(t) + " is not a node of the OU path");
    return static_cast<std::size_t>(k);
}

OUPath simulate_ou(Matrix const& B, double epsilon, double sigma,
                   NoiseRealization const& noise, double t0, double t1,
                   std::optional<double> weight_rate)
{
    require(epsilon > 0.0, "epsilon must be positive");
    require(sigma >= 0.0, "sigma must be nonnegative");
    require(B.rows() == noise.dimension() && B.cols() == noise.dimension(),
            "B must match the noise dimension");
    double const beta = -max_real_eigenvalue(B);
    require(beta > 0.0, "simulate_ou needs a stable B (all eigenvalues with negative real part)");

    double const h = noise.dt();
    std::int64_t const k_min = noise.first_step();
    std::int64_t const k0 = noise.node_index(t0);
    std::int64_t const k1 = noise.node_index(t1);
    require(k0 < k1, "simulate_ou needs t0 < t1");
    require(k0 >= k_min && k1 <= noise.end_step(), "OU window outside the noise extent");

    OUStepper const stepper(B / epsilon, sigma / std::sqrt(epsilon), h, weight_rate);

    OUPath path;
    path.t0 = noise.time_of(k0);
    path.dt = h;
    path.weight_rate = weight_rate;
    if (h >= epsilon / beta) {
        path.warnings.push_back("dt >= epsilon/beta: step exceeds the OU relaxation time "
                                "(exact transitions remain valid)");
    }

    auto const n_steps = static_cast<std::size_t>(k1 - k0);
    path.values.reserve(n_steps + 1);
    path.integrals.reserve(n_steps);
    path.increments.reserve(n_steps);
    if (weight_rate) {
        path.weighted.reserve(n_steps);
    }

    Vector eta = stepper.stationary_sample(noise, k_min);
    OUStepper::Step step;
    for (std::int64_t k = k_min; k < k0; ++k) {
        stepper.advance(eta, noise, k, step);
        eta = step.value;
    }
    path.values.push_back(eta);
    for (std::int64_t k = k0; k < k1; ++k) {
        stepper.advance(eta, noise, k, step);
        eta = step.value;
        path.values.push_back(eta);
        path.integrals.push_back(step.integral);
        path.increments.push_back(step.increment);
        if (weight_rate) {
            path.weighted.push_back(step.weighted);
        }
    }
    return path;
}

//---------------------------------------------------------------------------//

FrozenIntegrals sample_frozen_integrals(NoiseRealization const& noise)
{
    auto const m = noise.dimension();
    FrozenIntegrals out{Vector(m), Vector(m)};
    double const sd_e = std::sqrt(0.5);
    double const sd_cond = std::sqrt(0.125);  // Var(I_se | I_e) = 1/4 - (1/4)^2 / (1/2)
    for (int c = 0; c < m; ++c) {
        auto const n = noise.auxiliary_normals(AuxLane::frozen_integrals, c);
        out.exp_integral(c) = sd_e * n[0];
        out.weighted_integral(c) = -0.5 * out.exp_integral(c) + sd_cond * n[1];
    }
    return out;
}

FrozenIntegrals frozen_integrals_from_path(OUPath const& path, std::size_t origin)
{
    require(path.weight_rate && *path.weight_rate == 1.0,
            "frozen integrals need a path generated with weight rate 1");
    require(origin <= path.steps(), "origin outside the path");
    // int s e^s dW_s = -int e^s eta_s ds when eta solves d eta = -eta ds + dW.
    Vector sum = Vector::Zero(path.values.front().size());
    for (std::size_t k = 0; k < origin; ++k) {
        double const s = static_cast<double>(k) * path.dt - static_cast<double>(origin) * path.dt;
        sum += std::exp(s) * path.weighted[k];
    }
    return {path.values[origin], -sum};
}

AuxiliaryState evolve_auxiliary_integrals(AuxiliaryState state, double dW, double dt)
{
    require(dt > 0.0, "auxiliary step must be positive");
    double const decay = std::exp(-dt);
    double const gain = std::sqrt(-std::expm1(-2.0 * dt) / (2.0 * dt));
    double const rho = decay * state.rho + gain * dW;
    double const zeta =
        (state.zeta * (1.0 - 0.5 * dt) - 0.5 * dt * (state.rho + rho)) / (1.0 + 0.5 * dt);
    return {rho, zeta};
}

std::vector<std::array<Vector, 2>> auxiliary_from_path(OUPath const& path)
{
    require(path.weight_rate && *path.weight_rate == 1.0,
            "auxiliary integrals need a path generated with weight rate 1");
    std::vector<std::array<Vector, 2>> out;
    out.reserve(path.values.size());
    double const decay = std::exp(-path.dt);
    Vector S = Vector::Zero(path.values.front().size());
    out.push_back({path.values[0], -S});
    for (std::size_t k = 0; k < path.steps(); ++k) {
        S = decay * (S + path.weighted[k]);
        out.push_back({path.values[k + 1], -S});
    }
    return out;
}

}  // namespace slowfast
