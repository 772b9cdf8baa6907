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

// Python bindings: the particle model, integrators and grid studies with
// NumPy arrays at the boundary.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "slowfast/errors.hpp"
#include "slowfast/integrators.hpp"
#include "slowfast/io.hpp"
#include "slowfast/manifold.hpp"
#include "slowfast/monte_carlo.hpp"
#include "slowfast/particle.hpp"
#include "slowfast/system_spec.hpp"
#include "slowfast/version.hpp"

namespace py = pybind11;
using namespace slowfast;

namespace {

Eigen::MatrixXd stack(std::vector<Vector> const& rows, int cols)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
    return m;
}

Eigen::MatrixXd polyline(Polyline const& c)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(c.vertices.size()), 2);
    for (std::size_t k = 0; k < c.vertices.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = c.vertices[k].transpose();
    return m;
}

py::dict trajectory(Trajectory const& tr, int dim)
{
    py::dict d;
    d["t"] = Eigen::VectorXd::Map(tr.times.data(), static_cast<Eigen::Index>(tr.times.size())).eval();
    d["states"] = stack(tr.states, dim);
    d["final_time"] = tr.final_time;
    d["final_state"] = tr.final_state;
    if (tr.exit) {
        d["exit_time"] = tr.exit->time;
        d["exit_side"] = std::string(to_string(tr.exit->side));
        d["exit_point"] = Vector(tr.exit->point);
    } else {
        d["exit_time"] = py::none();
        d["exit_side"] = py::none();
        d["exit_point"] = py::none();
    }
    return d;
}

// Per-cell arrays shaped (n2, n1): row j is xi2, column i is xi1.
py::dict study(GridStudyResult const& r)
{
    auto const n1 = r.grid.n1;
    auto const n2 = r.grid.n2;
    Eigen::MatrixXd value(n2, n1), se(n2, n1), tmean(n2, n1);
    Eigen::MatrixXi censored(n2, n1), boundary(n2, n1);
    std::array<Eigen::MatrixXi, 4> counts;
    for (auto& c : counts) c.resize(n2, n1);
    for (auto const& c : r.cells) {
        value(c.j, c.i) = r.value(c);
        se(c.j, c.i) = r.standard_error(c);
        tmean(c.j, c.i) = c.exit_time_mean;
        censored(c.j, c.i) = static_cast<int>(c.censored);
        boundary(c.j, c.i) = c.boundary;
        for (int s = 0; s < 4; ++s) counts[s](c.j, c.i) = static_cast<int>(c.side_counts[s]);
    }
    py::dict d;
    d["kind"] = std::string(to_string(r.kind));
    d["value"] = value;
    d["se"] = se;
    d["exit_time_mean"] = tmean;
    d["censored"] = censored;
    d["boundary"] = boundary;
    py::dict sides;
    for (Side s : kSides) sides[py::str(std::string(to_string(s)))] = counts[static_cast<int>(s)];
    d["side_counts"] = sides;
    try {
        CellAverage const a = average_over_cell(r);
        d["cell_average"] = a.mean;
        d["cell_average_se"] = a.se;
    } catch (ValidationError const&) {
        d["cell_average"] = py::none();
        d["cell_average_se"] = py::none();
    }
    d["metadata"] = py::module_::import("json").attr("loads")(grid_metadata(r).dump());
    return d;
}

GridSpec grid_of(int n1, int n2, std::uint32_t paths, double threshold, std::uint64_t seed)
{
    GridSpec g;
    g.n1 = n1;
    g.n2 = n2;
    g.paths = paths;
    g.threshold = threshold;
    g.seed = seed;
    return g;
}

StudyOptions options_of(double dt, std::string const& scheme, std::string const& mode,
                        std::string const& side_exit, unsigned workers)
{
    StudyOptions s;
    s.dt = dt;
    s.scheme = parse_scheme(scheme);
    s.mode = parse_noise_mode(mode);
    s.side_exit = parse_side_exit_policy(side_exit);
    s.workers = workers;
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Random slow manifolds and the cellular-flow inertial particle model";
    m.attr("__version__") = std::string(kVersion);

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);
    py::register_exception<QuadratureError>(m, "QuadratureError", PyExc_RuntimeError);

    py::class_<ParticleParams>(m, "ParticleParams")
        .def(py::init([](double a, double V, double epsilon, double sigma) {
                 ParticleParams p{a, V, epsilon, sigma};
                 p.validate();
                 return p;
             }),
             py::arg("a") = 0.7, py::arg("V") = 0.0, py::arg("epsilon") = 0.05, py::arg("sigma") = 0.0)
        .def_readwrite("a", &ParticleParams::a)
        .def_readwrite("V", &ParticleParams::V)
        .def_readwrite("epsilon", &ParticleParams::epsilon)
        .def_readwrite("sigma", &ParticleParams::sigma)
        .def("__repr__", [](ParticleParams const& p) {
            return "ParticleParams(a=" + format_double(p.a) + ", V=" + format_double(p.V) +
                   ", epsilon=" + format_double(p.epsilon) + ", sigma=" + format_double(p.sigma) + ")";
        });

    m.def("flow_velocity", [](Vec2 const& x, ParticleParams const& p) { return flow_velocity(x, p); });
    m.def("analytic_h0", [](Vec2 const& x, ParticleParams const& p) { return analytic_h0(x, p); });
    m.def("analytic_h1",
          [](Vec2 const& x, ParticleParams const& p, Vec2 const& I_se) { return analytic_h1(x, p, I_se); },
          py::arg("xi"), py::arg("p"), py::arg("weighted_integral") = Vec2::Zero().eval());
    m.def("reduced_drift",
          [](Vec2 const& x, ParticleParams const& p, Vec2 const& rho, Vec2 const& zeta) {
              return reduced_drift(x, p, ReducedNoise{rho, zeta});
          },
          py::arg("xi"), py::arg("p"), py::arg("rho") = Vec2::Zero().eval(),
          py::arg("zeta") = Vec2::Zero().eval());
    m.def("stream_function", [](Vec2 const& x, ParticleParams const& p) { return stream_function(x, p); });

    m.def("equilibria", [](ParticleParams const& p) {
        EquilibriaResult const r = equilibria(p);
        py::list out;
        for (auto const& e : r.points) {
            py::dict d;
            d["label"] = e.label;
            d["point"] = Vector(e.point);
            d["kind"] = std::string(to_string(e.kind));
            d["eigenvalues"] = std::vector<std::complex<double>>{e.eigenvalues[0], e.eigenvalues[1]};
            out.append(d);
        }
        return py::make_tuple(out, r.status);
    });

    m.def("trace_manifolds",
          [](ParticleParams const& p, double delta, double max_time) {
              TraceOptions t;
              t.delta = delta;
              t.max_time = max_time;
              ManifoldCurves const c = trace_manifolds(p, t);
              return py::make_tuple(polyline(c.stable), polyline(c.unstable));
          },
          py::arg("p"), py::arg("delta") = 1e-6, py::arg("max_time") = 100.0,
          "Stable manifold of the lower wall saddle and unstable manifold of the upper one.");

    m.def("check_assumptions", [](ParticleParams const& p) {
        AssumptionReport const r = check_assumptions(particle_system(p), particle_constants(p));
        py::dict d;
        d["K"] = r.K;
        d["alpha"] = r.alpha;
        d["beta"] = r.beta;
        d["L_f"] = r.L_f;
        d["L_g"] = r.L_g;
        d["h2_satisfied"] = r.h2_satisfied;
        d["contraction_rho"] = r.contraction_rho;
        d["lambda_star"] = r.lambda_star;
        d["epsilon_star"] = r.epsilon_star;
        return d;
    });

    m.def("sample_frozen_integrals", [](std::uint64_t seed, std::uint32_t cell, std::uint32_t path) {
        FrozenIntegrals const f = sample_frozen_integrals(NoiseRealization(seed, {cell, path}, 2, 1.0, 0.0, 1.0));
        return py::make_tuple(f.exp_integral, f.weighted_integral);
    });

    m.def("manifold_terms",
          [](ParticleParams const& p, std::vector<Vec2> const& points, std::uint64_t seed,
             bool quadrature, double T_trunc, double dtau, double tol) {
              QuadratureParams const q{T_trunc, dtau, tol};
              SlowFastSpec const spec = particle_system(p);
              auto const noise = manifold_noise(seed, {}, 2, p.epsilon, q);
              auto path = std::make_shared<OUPath const>(manifold_noise_path(spec, noise, q));
              auto const approx = quadrature
                  ? ManifoldApproximation::quadrature(spec, path, q, NoiseMode::frozen)
                  : ManifoldApproximation::analytic_particle(p, path, NoiseMode::frozen);
              Eigen::MatrixXd h0(static_cast<Eigen::Index>(points.size()), 2);
              Eigen::MatrixXd h1(static_cast<Eigen::Index>(points.size()), 2);
              py::gil_scoped_release release;
              for (std::size_t k = 0; k < points.size(); ++k) {
                  ManifoldTerms const t = approx.terms(Vector(points[k]));
                  h0.row(static_cast<Eigen::Index>(k)) = t.h0.transpose();
                  h1.row(static_cast<Eigen::Index>(k)) = t.h1.transpose();
              }
              return std::make_pair(h0, h1);
          },
          py::arg("p"), py::arg("points"), py::arg("seed") = 1, py::arg("quadrature") = true,
          py::arg("T_trunc") = 23.0, py::arg("dtau") = 1e-3, py::arg("tol") = 1e-9,
          "h0 and h1 at the given points on one frozen noise realization.");

    m.def("integrate_reduced",
          [](Vec2 const& init, ParticleParams const& p, double dt, double t_max, std::uint64_t seed,
             std::uint32_t cell, std::uint32_t path, std::string const& mode, std::string const& scheme,
             bool stop_at_exit, std::size_t record_every) {
              IntegratorConfig cfg;
              cfg.dt = dt;
              cfg.t_max = t_max;
              cfg.scheme = parse_scheme(scheme);
              cfg.stop_at_exit = stop_at_exit;
              cfg.record_every = record_every;
              NoiseRealization const n = particle_noise(seed, {cell, path}, cfg);
              Trajectory tr;
              {
                  py::gil_scoped_release release;
                  tr = integrate_reduced(init, p, n, cfg, ReducedInput{parse_noise_mode(mode), std::nullopt});
              }
              return trajectory(tr, 2);
          },
          py::arg("init"), py::arg("p"), py::arg("dt") = 1e-3, py::arg("t_max") = 1000.0,
          py::arg("seed") = 1, py::arg("cell") = 0, py::arg("path") = 0, py::arg("mode") = "frozen",
          py::arg("scheme") = "rk4-deterministic", py::arg("stop_at_exit") = true,
          py::arg("record_every") = 1);

    m.def("integrate_full",
          [](Eigen::Vector4d const& init, ParticleParams const& p, double dt, double t_max,
             std::uint64_t seed, std::uint32_t cell, std::uint32_t path, std::string const& scheme,
             bool stop_at_exit, std::size_t record_every) {
              IntegratorConfig cfg;
              cfg.dt = dt;
              cfg.t_max = t_max;
              cfg.scheme = parse_scheme(scheme);
              cfg.stop_at_exit = stop_at_exit;
              cfg.record_every = record_every;
              NoiseRealization const n = particle_noise(seed, {cell, path}, cfg);
              Trajectory tr;
              {
                  py::gil_scoped_release release;
                  tr = integrate_full(init, p, n, cfg);
              }
              return trajectory(tr, 4);
          },
          py::arg("init"), py::arg("p"), py::arg("dt") = 1e-3, py::arg("t_max") = 1000.0,
          py::arg("seed") = 1, py::arg("cell") = 0, py::arg("path") = 0,
          py::arg("scheme") = "exponential-em", py::arg("stop_at_exit") = true,
          py::arg("record_every") = 1);

    auto grid_study = [&](char const* name, auto run, char const* doc) {
        m.def(name, run, py::arg("p"), py::arg("n1") = 64, py::arg("n2") = 64, py::arg("paths") = 1000,
              py::arg("threshold") = 1000.0, py::arg("seed") = 1, py::arg("dt") = 1e-3,
              py::arg("scheme") = "rk4-deterministic", py::arg("mode") = "frozen",
              py::arg("side_exit") = "exclude", py::arg("workers") = 1, doc);
    };
    grid_study("first_exit_time_map",
               [](ParticleParams const& p, int n1, int n2, std::uint32_t paths, double T, std::uint64_t seed,
                  double dt, std::string const& scheme, std::string const& mode, std::string const& side_exit,
                  unsigned workers) {
                   GridSpec const g = grid_of(n1, n2, paths, T, seed);
                   StudyOptions const o = options_of(dt, scheme, mode, side_exit, workers);
                   GridStudyResult r;
                   {
                       py::gil_scoped_release release;
                       r = first_exit_time_map(g, p, o);
                   }
                   return study(r);
               },
               "Mean first exit time per lattice point (censored at the threshold).");
    grid_study("escape_probability_map",
               [](ParticleParams const& p, int n1, int n2, std::uint32_t paths, double T, std::uint64_t seed,
                  double dt, std::string const& scheme, std::string const& mode, std::string const& side_exit,
                  unsigned workers) {
                   GridSpec const g = grid_of(n1, n2, paths, T, seed);
                   StudyOptions const o = options_of(dt, scheme, mode, side_exit, workers);
                   GridStudyResult r;
                   {
                       py::gil_scoped_release release;
                       r = escape_probability_map(g, p, o, Side::bottom);
                   }
                   py::dict out;
                   for (Side s : kSides) out[py::str(std::string(to_string(s)))] = study(with_side(r, s));
                   return out;
               },
               "Escape probability maps for all four sides.");
    grid_study("settling_time_difference_map",
               [](ParticleParams const& p, int n1, int n2, std::uint32_t paths, double T, std::uint64_t seed,
                  double dt, std::string const& scheme, std::string const& mode, std::string const& side_exit,
                  unsigned workers) {
                   GridSpec const g = grid_of(n1, n2, paths, T, seed);
                   StudyOptions const o = options_of(dt, scheme, mode, side_exit, workers);
                   GridStudyResult r;
                   {
                       py::gil_scoped_release release;
                       r = settling_time_difference_map(g, p, p.sigma, o);
                   }
                   return study(r);
               },
               "Deterministic minus mean noisy settling time; p.sigma is the noisy intensity.");
}
