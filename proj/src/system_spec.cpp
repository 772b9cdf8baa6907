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

#include "slowfast/system_spec.hpp"

#include <cmath>
#include <random>

#include "slowfast/errors.hpp"

namespace slowfast {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eigenvector_condition(Matrix const& M)
{
    Eigen::EigenSolver<Matrix> es(M);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
    auto const& s = svd.singularValues();
    double const smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : kInf;
}

Vector uniform_point(Box const& box, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector p(box.lo.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        p(i) = box.lo(i) + u(rng) * (box.hi(i) - box.lo(i));
    }
    return p;
}

void require_box(Box const& box)
{
    require(box.lo.size() > 0 && box.lo.size() == box.hi.size(), "box bounds must have equal size");
    require(((box.hi - box.lo).array() > 0.0).all() && box.lo.allFinite() && box.hi.allFinite(),
            "box is degenerate");
}

// Central-difference Jacobian of F with respect to one argument block.
template <class F>
Matrix fd_jacobian(F const& F_of, Vector const& at, Eigen::Index rows, double step)
{
    Matrix J(rows, at.size());
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        double const h = step * std::max(1.0, std::abs(at(j)));
        Vector p = at;
        Vector q = at;
        p(j) += h;
        q(j) -= h;
        J.col(j) = (F_of(p) - F_of(q)) / (2.0 * h);
    }
    return J;
}

double relative_gap(Matrix const& exact, Matrix const& approx)
{
    double const scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
    return (exact - approx).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

void SlowFastSpec::validate() const
{
    require(n >= 1 && m >= 1, "dimensions n, m must be positive");
    require(A.rows() == n && A.cols() == n, "A must be n x n");
    require(B.rows() == m && B.cols() == m, "B must be m x m");
    require(static_cast<bool>(f) && static_cast<bool>(g), "f and g must be provided");
    require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
    require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be nonnegative");
    Vector const x = Vector::Zero(n);
    Vector const y = Vector::Zero(m);
    require(f(x, y).size() == n, "f must return a vector of size n");
    require(g(x, y).size() == m, "g must return a vector of size m");
    auto check = [&](JacobianField const& J, int rows, int cols, char const* what) {
        if (J) {
            Matrix const v = J(x, y);
            require(v.rows() == rows && v.cols() == cols, std::string(what) + " has the wrong shape");
        }
    };
    check(f_x, n, n, "f_x");
    check(f_y, n, m, "f_y");
    check(g_x, m, n, "g_x");
    check(g_y, m, m, "g_y");
}

H1Constants estimate_h1_constants(Matrix const& A, Matrix const& B)
{
    require(A.rows() == A.cols() && B.rows() == B.cols(), "A and B must be square");
    H1Constants c;
    Eigen::EigenSolver<Matrix> ea(A, false);
    Eigen::EigenSolver<Matrix> eb(B, false);
    c.alpha = std::max(0.0, ea.eigenvalues().real().maxCoeff());
    c.beta = -eb.eigenvalues().real().maxCoeff();
    c.K = std::max({1.0, eigenvector_condition(A), eigenvector_condition(B)});
    return c;
}

double contraction_rho(double K, double alpha, double beta, double L_f, double L_g,
                       double epsilon)
{
    double const gap = beta - K * L_g;
    if (gap <= 0.0) {
        return kInf;
    }
    return 2.0 * K * L_f * epsilon / (2.0 * epsilon * alpha + gap)
           + 2.0 * K * L_g / (K * L_g + beta);
}

double epsilon_star(double K, double alpha, double beta, double L_f, double L_g)
{
    if (beta - K * L_g <= 0.0) {
        return 0.0;
    }
    double const base = 2.0 * K * L_g / (K * L_g + beta);
    if (L_f == 0.0) {
        return kInf;
    }
    // rho increases in eps towards base + K L_f / alpha.
    if (alpha > 0.0 && base + K * L_f / alpha <= 1.0) {
        return kInf;
    }
    auto rho = [&](double e) { return contraction_rho(K, alpha, beta, L_f, L_g, e); };
    double lo = 0.0;
    double hi = 1.0;
    while (rho(hi) < 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) {
            return kInf;
        }
    }
    while (hi - lo > 1e-12 * std::max(1.0, lo)) {
        double const mid = 0.5 * (lo + hi);
        (rho(mid) < 1.0 ? lo : hi) = mid;
    }
    return lo;
}

AssumptionReport check_assumptions(SlowFastSpec const& spec, AssumptionConstants const& given,
                                   Box const* lipschitz_box)
{
    spec.validate();
    AssumptionReport r;
    r.epsilon = spec.epsilon;

    if (!given.K || !given.alpha || !given.beta) {
        H1Constants const est = estimate_h1_constants(spec.A, spec.B);
        r.h1_estimated = true;
        r.notes.push_back("H1 constants not supplied: using spectral fallback");
        r.K = given.K.value_or(est.K);
        r.alpha = given.alpha.value_or(est.alpha);
        r.beta = given.beta.value_or(est.beta);
    } else {
        r.K = *given.K;
        r.alpha = *given.alpha;
        r.beta = *given.beta;
    }

    if (given.L_f && given.L_g) {
        r.L_f = *given.L_f;
        r.L_g = *given.L_g;
    } else {
        require(lipschitz_box != nullptr,
                "Lipschitz constants missing and no box given for estimation");
        require(lipschitz_box->lo.size() == spec.n + spec.m,
                "Lipschitz box must cover (x, y) in R^(n+m)");
        auto split = [&](VectorField const& F) {
            return [&spec, &F](Vector const& z) { return F(z.head(spec.n), z.tail(spec.m)); };
        };
        r.lipschitz_estimated = true;
        r.L_f = given.L_f.value_or(estimate_lipschitz(split(spec.f), *lipschitz_box, 4096).value);
        r.L_g = given.L_g.value_or(estimate_lipschitz(split(spec.g), *lipschitz_box, 4096).value);
        r.notes.push_back("Lipschitz constants estimated by sampling: lower bounds, H2 verdict is advisory");
    }

    require(std::isfinite(r.K) && r.K > 0.0, "K must be positive");
    require(std::isfinite(r.beta) && r.beta > 0.0, "beta must be positive");
    require(std::isfinite(r.alpha) && r.alpha >= 0.0, "alpha must be nonnegative");
    require(std::isfinite(r.L_f) && r.L_f >= 0.0, "L_f must be nonnegative");
    require(std::isfinite(r.L_g) && r.L_g >= 0.0, "L_g must be nonnegative");

    r.h2_satisfied = r.beta > r.K * r.L_g;
    r.contraction_rho = contraction_rho(r.K, r.alpha, r.beta, r.L_f, r.L_g, r.epsilon);
    r.lambda_star = (r.beta - r.K * r.L_g) / (2.0 * r.epsilon);
    r.epsilon_star = epsilon_star(r.K, r.alpha, r.beta, r.L_f, r.L_g);
    if (!r.h2_satisfied) {
        r.notes.push_back("H2 fails: beta <= K L_g");
    }
    return r;
}

LipschitzEstimate estimate_lipschitz(std::function<Vector(Vector const&)> const& map,
                                     Box const& box, std::size_t samples, std::uint64_t seed)
{
    require(samples >= 2, "need at least two samples");
    require_box(box);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector const width = box.hi - box.lo;

    LipschitzEstimate est;
    auto consider = [&](Vector const& u, Vector const& fu, Vector const& v) {
        double const d = (u - v).norm();
        if (d > 0.0) {
            est.value = std::max(est.value, (fu - map(v)).norm() / d);
            ++est.pairs;
        }
    };
    Vector prev = uniform_point(box, rng);
    for (std::size_t i = 1; i < samples; ++i) {
        Vector const u = uniform_point(box, rng);
        Vector const fu = map(u);
        consider(u, fu, prev);
        // Nearby partner resolves the local slope.
        Vector dir(u.size());
        for (Eigen::Index k = 0; k < dir.size(); ++k) {
            dir(k) = normal(rng);
        }
        Vector v = u + 1e-4 * width.cwiseProduct(dir.normalized());
        v = v.cwiseMax(box.lo).cwiseMin(box.hi);
        consider(u, fu, v);
        prev = u;
    }
    return est;
}

double jacobian_fd_error(SlowFastSpec const& spec, Box const& box, std::size_t probes,
                         std::uint64_t seed, double step)
{
    spec.validate();
    require_box(box);
    require(box.lo.size() == spec.n + spec.m, "probe box must cover (x, y)");
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (std::size_t i = 0; i < probes; ++i) {
        Vector const z = uniform_point(box, rng);
        Vector const x = z.head(spec.n);
        Vector const y = z.tail(spec.m);
        auto in_x = [&](VectorField const& F) { return [&](Vector const& p) { return F(p, y); }; };
        auto in_y = [&](VectorField const& F) { return [&](Vector const& p) { return F(x, p); }; };
        if (spec.f_x) worst = std::max(worst, relative_gap(spec.f_x(x, y), fd_jacobian(in_x(spec.f), x, spec.n, step)));
        if (spec.f_y) worst = std::max(worst, relative_gap(spec.f_y(x, y), fd_jacobian(in_y(spec.f), y, spec.n, step)));
        if (spec.g_x) worst = std::max(worst, relative_gap(spec.g_x(x, y), fd_jacobian(in_x(spec.g), x, spec.m, step)));
        if (spec.g_y) worst = std::max(worst, relative_gap(spec.g_y(x, y), fd_jacobian(in_y(spec.g), y, spec.m, step)));
    }
    return worst;
}

}  // namespace slowfast
