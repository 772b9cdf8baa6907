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

// slowfast command-line tool: assumption check, trajectories, grid studies
// and manifold tracing for the cellular-flow particle model.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "slowfast/errors.hpp"
#include "slowfast/integrators.hpp"
#include "slowfast/io.hpp"
#include "slowfast/manifold.hpp"
#include "slowfast/monte_carlo.hpp"
#include "slowfast/particle.hpp"
#include "slowfast/system_spec.hpp"
#include "slowfast/version.hpp"

namespace fs = std::filesystem;
using namespace slowfast;

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 3;

char const* const kFormats = R"(Outputs (see docs/FORMATS.md):
  grid CSV   i,j,xi1,xi2,boundary,value,se,n_left,n_right,n_top,n_bottom,
             censored,failures,exit_time_mean,exit_time_se,det_time,det_side,
             sto_mean,sto_se,sto_settled,non_settling_fraction
  curve CSV  index,xi1,xi2,saddle
  trajectory CSV  t,<state columns>
  Each grid CSV has a JSON sidecar; every run writes manifest.json and
  config.ini (re-run with --config <out>/config.ini).)";

struct Options {
    std::string model = "cellular-flow";
    double a = 0.7;
    double V = 0.0;
    double epsilon = 0.05;
    double sigma = 0.0;
    std::uint64_t seed = 1;
    double dt = 1e-3;
    std::string grid = "64";
    std::uint32_t paths = 1000;
    double threshold = 1000.0;
    std::string mode = "frozen";
    std::string scheme;
    std::string side = "all";
    std::string side_exit = "exclude";
    std::string out = "out";
    unsigned workers = 1;
    // simulate
    std::string system = "reduced";
    std::vector<std::string> init;
    double t_max = 0.0;
    std::size_t record_every = 1;
    // manifolds
    double delta = 1e-6;
    double trace_max_time = 100.0;
    // check
    std::optional<double> K;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> L_f;
    std::optional<double> L_g;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ParticleParams params_of(Options const& o)
{
    if (o.model != "cellular-flow") {
        throw UsageError("unknown model '" + o.model + "' (built-in: cellular-flow)");
    }
    ParticleParams p{o.a, o.V, o.epsilon, o.sigma};
    p.validate();
    return p;
}

std::pair<int, int> parse_grid(std::string const& s)
{
    auto const x = s.find('x');
    try {
        if (x == std::string::npos) {
            int const n = std::stoi(s);
            return {n, n};
        }
        return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    } catch (std::exception const&) {
        throw UsageError("--grid expects N or N1xN2, got '" + s + "'");
    }
}

GridSpec grid_of(Options const& o)
{
    auto const [n1, n2] = parse_grid(o.grid);
    GridSpec g;
    g.n1 = n1;
    g.n2 = n2;
    g.paths = o.paths;
    g.threshold = o.threshold;
    g.seed = o.seed;
    g.validate();
    return g;
}

StudyOptions study_of(Options const& o)
{
    StudyOptions s;
    s.dt = o.dt;
    s.scheme = o.scheme.empty() ? Scheme::rk4_deterministic : parse_scheme(o.scheme);
    s.mode = parse_noise_mode(o.mode);
    s.side_exit = parse_side_exit_policy(o.side_exit);
    s.workers = o.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : o.workers;
    return s;
}

Json resolved(Options const& o)
{
    return {{"model", o.model}, {"a", o.a}, {"V", o.V}, {"epsilon", o.epsilon}, {"sigma", o.sigma},
            {"seed", o.seed}, {"dt", o.dt}, {"grid", o.grid}, {"paths", o.paths},
            {"threshold", o.threshold}, {"mode", o.mode}, {"scheme", o.scheme}, {"side", o.side},
            {"side_exit", o.side_exit}, {"workers", o.workers}};
}

class Run {
public:
    Run(CLI::App const& app, std::string command, Options const& o)
        : app_(app), command_(std::move(command)), dir_(o.out), resolved_(resolved(o)),
          start_(std::chrono::steady_clock::now())
    {
        ensure_directory(dir_);
    }

    fs::path file(std::string const& name)
    {
        outputs_.push_back(name);
        return dir_ / name;
    }

    void finish(Json summary = {})
    {
        // Only options that were actually given (flags or --config); the
        // resolved values of everything else go into the manifest.
        std::string const echo = app_.config_to_str(false, false);
        {
            std::ofstream cfg(dir_ / "config.ini", std::ios::binary | std::ios::trunc);
            cfg << "# slowfast " << command_ << " configuration echo\n" << echo;
            if (!cfg) throw std::runtime_error("cannot write config.ini");
        }
        Json m;
        m["tool"] = "slowfast";
        m["version"] = kVersion;
        m["command"] = command_;
        m["config_file"] = "config.ini";
        m["config"] = echo;
        m["resolved"] = resolved_;
        m["outputs"] = outputs_;
        m["summary"] = std::move(summary);
        m["build"] = {{"compiler", __VERSION__}, {"eigen", kEigenVersion}};
        m["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_json(dir_ / "manifest.json", m);
    }

private:
    CLI::App const& app_;
    std::string command_;
    fs::path dir_;
    Json resolved_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

void print_average(std::string const& label, GridStudyResult const& r)
{
    try {
        CellAverage const a = average_over_cell(r);
        std::printf("%s: cell average %.6g (se %.3g) over %zu interior cells, %zu excluded\n",
                    label.c_str(), a.mean, a.se, a.cells, a.excluded);
    } catch (ValidationError const&) {
        std::printf("%s: no interior cell with a finite value\n", label.c_str());
    }
}

Json average_json(GridStudyResult const& r)
{
    try {
        CellAverage const a = average_over_cell(r);
        return {{"mean", std::isfinite(a.mean) ? Json(a.mean) : Json(nullptr)},
                {"se", a.se}, {"cells", a.cells}, {"excluded", a.excluded}};
    } catch (ValidationError const&) {
        return nullptr;
    }
}

void write_study(Run& run, std::string const& stem, GridStudyResult const& r)
{
    write_grid_csv(run.file(stem + ".csv"), r);
    write_json(run.file(stem + ".json"), grid_metadata(r));
}

//---------------------------------------------------------------------------//

int cmd_check(CLI::App const& app, Options const& o, bool write)
{
    ParticleParams p = params_of(o);
    if (p.epsilon <= 0.0) throw UsageError("check needs --epsilon > 0");
    SlowFastSpec const spec = particle_system(p);
    AssumptionConstants c = particle_constants(p);
    if (o.K) c.K = o.K;
    if (o.alpha) c.alpha = o.alpha;
    if (o.beta) c.beta = o.beta;
    if (o.L_f) c.L_f = o.L_f;
    if (o.L_g) c.L_g = o.L_g;
    AssumptionReport const r = check_assumptions(spec, c);

    Box box{Vector::Zero(4), Vector::Zero(4)};
    box.lo << 0.0, 0.0, -1.0, -1.0;
    box.hi << std::numbers::pi, std::numbers::pi, 1.0, 1.0;
    double const sampled = estimate_lipschitz(
        [&](Vector const& z) { return spec.g(z.head(2), z.tail(2)); }, box, 20000).value;

    std::printf("model            cellular-flow (a=%g, V=%g, epsilon=%g, sigma=%g)\n", p.a, p.V,
                p.epsilon, p.sigma);
    std::printf("K, alpha, beta   %g, %g, %g\n", r.K, r.alpha, r.beta);
    std::printf("L_f, L_g         %g, %.6g (declared; sampled lower bound for L_g: %.6g)\n",
                r.L_f, r.L_g, sampled);
    std::printf("H2 beta > K L_g  %s\n", r.h2_satisfied ? "satisfied" : "violated");
    std::printf("contraction rho  %.6g\n", r.contraction_rho);
    std::printf("lambda*          %.6g\n", r.lambda_star);
    std::printf("epsilon*         %.6g\n", r.epsilon_star);
    std::printf("warning: L_g = sqrt(2) a is the sup of the Frobenius norm of grad u; the H2 "
                "verdict is advisory\n");

    if (write) {
        Run run(app, "check", o);
        Json j = {{"K", r.K}, {"alpha", r.alpha}, {"beta", r.beta}, {"L_f", r.L_f},
                  {"L_g", r.L_g}, {"L_g_sampled_lower_bound", sampled},
                  {"h2_satisfied", r.h2_satisfied},
                  {"contraction_rho", std::isfinite(r.contraction_rho) ? Json(r.contraction_rho) : Json(nullptr)},
                  {"lambda_star", r.lambda_star},
                  {"epsilon_star", std::isfinite(r.epsilon_star) ? Json(r.epsilon_star) : Json("inf")}};
        write_json(run.file("check.json"), j);
        run.finish(j);
    }
    return r.h2_satisfied ? 0 : 1;
}

std::vector<double> parse_state(std::string const& text)
{
    std::vector<double> v;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (std::exception const&) {
            throw UsageError("--init expects comma-separated numbers, got '" + text + "'");
        }
    }
    return v;
}

int cmd_simulate(CLI::App const& app, Options const& o)
{
    ParticleParams const p = params_of(o);
    IntegratorConfig cfg;
    cfg.dt = o.dt;
    cfg.t_max = o.t_max > 0.0 ? o.t_max : o.threshold;
    cfg.record_every = o.record_every;
    cfg.stop_at_exit = true;
    bool const reduced = o.system == "reduced";
    if (!reduced && o.system != "full") throw UsageError("--system must be reduced or full");
    if (o.scheme.empty()) {
        cfg.scheme = reduced ? Scheme::rk4_deterministic : Scheme::exponential_em;
    } else {
        cfg.scheme = parse_scheme(o.scheme);
    }
    std::vector<std::vector<double>> inits;
    for (auto const& text : o.init) {
        inits.push_back(parse_state(text));
        std::size_t const n = inits.back().size();
        if (reduced ? n != 2 : n != 2 && n != 4) {
            throw UsageError(reduced ? "--init needs xi1,xi2 for the reduced system"
                                     : "--init needs y1,y2 or y1,y2,v1,v2 for the full system");
        }
    }
    std::vector<std::string> const cols =
        reduced ? std::vector<std::string>{"xi1", "xi2"} : std::vector<std::string>{"y1", "y2", "v1", "v2"};

    Run run(app, "simulate", o);
    Json list = Json::array();
    for (std::size_t k = 0; k < inits.size(); ++k) {
        auto const& x = inits[k];
        // Each orbit has its own substream.
        NoiseRealization const noise = particle_noise(o.seed, {0, static_cast<std::uint32_t>(k)}, cfg);
        Trajectory tr;
        if (reduced) {
            tr = integrate_reduced(Vec2(x[0], x[1]), p, noise, cfg,
                                   ReducedInput{parse_noise_mode(o.mode), std::nullopt});
        } else {
            Vec4 init;
            Vec2 const y(x[0], x[1]);
            if (x.size() == 2) {
                // Start on the deterministic slow manifold.
                init << y, analytic_h0(y, p) + p.epsilon * analytic_h1(y, p, Vec2::Zero());
            } else {
                init << y, x[2], x[3];
            }
            tr = integrate_full(init, p, noise, cfg);
        }
        char name[48];
        std::snprintf(name, sizeof name, "trajectory_%03zu.csv", k);
        write_trajectory_csv(run.file(name), tr, cols);
        Json meta = trajectory_metadata(tr);
        meta["file"] = name;
        meta["init"] = x;
        list.push_back(meta);
        if (tr.exit) {
            std::printf("[%zu] exit via %s at t = %.6g\n", k, std::string(to_string(tr.exit->side)).c_str(),
                        tr.exit->time);
        } else {
            std::printf("[%zu] no exit before t = %.6g\n", k, tr.final_time);
        }
    }
    Json j;
    j["format"] = "slowfast-trajectories/1";
    j["system"] = o.system;
    j["scheme"] = std::string(to_string(cfg.scheme));
    j["params"] = {{"a", p.a}, {"V", p.V}, {"epsilon", p.epsilon}, {"sigma", p.sigma}};
    j["dt"] = cfg.dt;
    j["t_max"] = cfg.t_max;
    j["trajectories"] = list;
    write_json(run.file("trajectories.json"), j);
    run.finish({{"trajectories", inits.size()}});
    return 0;
}

int cmd_exit_times(CLI::App const& app, Options const& o)
{
    ParticleParams const p = params_of(o);
    GridSpec const g = grid_of(o);
    StudyOptions const s = study_of(o);
    Run run(app, "exit-times", o);
    GridStudyResult const r = first_exit_time_map(g, p, s);
    write_study(run, "exit_times", r);
    std::size_t censored = 0;
    for (auto const& c : r.cells) censored += c.censored;
    print_average("first exit time", r);
    std::printf("censored paths: %zu\n", censored);
    run.finish({{"cell_average", average_json(r)}, {"censored", censored}});
    return 0;
}

int cmd_escape_prob(CLI::App const& app, Options const& o)
{
    ParticleParams const p = params_of(o);
    GridSpec const g = grid_of(o);
    StudyOptions const s = study_of(o);
    std::vector<Side> sides;
    if (o.side == "all") {
        sides.assign(std::begin(kSides), std::end(kSides));
    } else {
        sides.push_back(parse_side(o.side));
    }
    Run run(app, "escape-prob", o);
    GridStudyResult const base = escape_probability_map(g, p, s, sides.front());
    Json summary;
    for (Side side : sides) {
        GridStudyResult const r = with_side(base, side);
        std::string const name(to_string(side));
        write_study(run, "escape_" + name, r);
        print_average("P_" + name, r);
        summary[name] = average_json(r);
    }
    run.finish(summary);
    return 0;
}

int cmd_settle_diff(CLI::App const& app, Options const& o)
{
    ParticleParams const p = params_of(o);
    GridSpec const g = grid_of(o);
    StudyOptions const s = study_of(o);
    Run run(app, "settle-diff", o);
    GridStudyResult const r = settling_time_difference_map(g, p, p.sigma, s);
    write_study(run, "settle_diff", r);
    print_average("t_det - mean t_sto", r);
    run.finish({{"cell_average", average_json(r)}});
    return 0;
}

int cmd_manifolds(CLI::App const& app, Options const& o)
{
    ParticleParams p = params_of(o);
    p.sigma = 0.0;
    TraceOptions t;
    t.delta = o.delta;
    t.max_time = o.trace_max_time;
    Run run(app, "manifolds", o);
    EquilibriaResult const eq = equilibria(p);
    write_equilibria_csv(run.file("equilibria.csv"), eq);
    ManifoldCurves const m = trace_manifolds(p, t);
    write_polyline_csv(run.file("stable_manifold.csv"), m.stable);
    write_polyline_csv(run.file("unstable_manifold.csv"), m.unstable);
    Json j;
    j["format"] = "slowfast-manifolds/1";
    j["params"] = {{"a", p.a}, {"V", p.V}, {"epsilon", p.epsilon}};
    j["trace"] = {{"delta", t.delta}, {"dt", t.dt}, {"box", {t.box_lo, t.box_hi}},
                  {"max_time", t.max_time}, {"stop_radius", t.stop_radius}};
    auto curve = [](Polyline const& c, std::string const& file) {
        return Json{{"file", file}, {"vertices", c.vertices.size()}, {"saddle_index", c.saddle_index},
                    {"stop", {c.stop_reason[0], c.stop_reason[1]}}};
    };
    j["stable"] = curve(m.stable, "stable_manifold.csv");
    j["unstable"] = curve(m.unstable, "unstable_manifold.csv");
    write_json(run.file("manifolds.json"), j);
    for (auto const& e : eq.points) {
        std::printf("%-10s (%.6f, %.6f)  %s\n", e.label.c_str(), e.point(0), e.point(1),
                    std::string(to_string(e.kind)).c_str());
    }
    std::printf("stable manifold %zu vertices, unstable manifold %zu vertices\n",
                m.stable.vertices.size(), m.unstable.vertices.size());
    run.finish(j);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random slow manifolds and the cellular-flow inertial particle study"};
    app.footer(kFormats);
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value configuration file (flags override it)");
    app.set_version_flag("--version", std::string(kVersion));

    Options o;
    app.add_option("--model", o.model, "Built-in model")->capture_default_str();
    auto* opt_a = app.add_option("--a", o.a, "Flow velocity scale a");
    auto* opt_V = app.add_option("--V", o.V, "Settling velocity V");
    auto* opt_eps = app.add_option("--epsilon", o.epsilon, "Inertial response time epsilon");
    auto* opt_sigma = app.add_option("--sigma", o.sigma, "Noise intensity sigma");
    app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
    app.add_option("--dt", o.dt, "Time step")->capture_default_str();
    app.add_option("--grid", o.grid, "Lattice size N or N1xN2 (boundary included)")->capture_default_str();
    app.add_option("--paths", o.paths, "Paths per lattice point")->capture_default_str();
    app.add_option("--threshold", o.threshold, "Threshold time T (censoring)")->capture_default_str();
    app.add_option("--mode", o.mode, "Noise mode: frozen or evolving")->capture_default_str();
    app.add_option("--scheme", o.scheme, "exponential-em, euler-maruyama or rk4-deterministic");
    app.add_option("--side", o.side, "Escape side: left, right, top, bottom or all")->capture_default_str();
    app.add_option("--side-exit", o.side_exit, "Settling paths leaving sideways: exclude or infinite")
        ->capture_default_str();
    app.add_option("--out", o.out, "Output directory")->capture_default_str();
    app.add_option("--workers", o.workers, "Worker threads (0 = all cores)")->capture_default_str();

    auto* check = app.add_subcommand("check", "Check H1/H2 and the contraction bound (exit 0 iff H2 holds)");
    check->add_option("--K", o.K, "H1 constant K");
    check->add_option("--alpha", o.alpha, "H1 constant alpha");
    check->add_option("--beta", o.beta, "H1 constant beta");
    check->add_option("--L-f", o.L_f, "Lipschitz constant of f");
    check->add_option("--L-g", o.L_g, "Lipschitz constant of g");
    bool check_write = false;
    check->add_flag("--write", check_write, "Also write check.json and a manifest to --out");

    auto* simulate = app.add_subcommand("simulate", "Integrate one or more trajectories");
    simulate->add_option("--system", o.system, "reduced or full")->capture_default_str();
    simulate->add_option("--init", o.init, "Initial state xi1,xi2 (full: optionally v1,v2); repeatable")
        ->required();
    simulate->add_option("--t-max", o.t_max, "Horizon (defaults to --threshold)");
    simulate->add_option("--record-every", o.record_every, "Record every k-th step")->capture_default_str();

    auto* exit_times = app.add_subcommand("exit-times", "First exit time map");
    auto* escape = app.add_subcommand("escape-prob", "Escape probability maps");
    auto* settle = app.add_subcommand("settle-diff", "Settling time difference map (t_det - mean t_sto)");
    auto* manifolds = app.add_subcommand("manifolds", "Equilibria and traced stable/unstable manifolds");
    manifolds->add_option("--delta", o.delta, "Eigenvector offset")->capture_default_str();
    manifolds->add_option("--trace-time", o.trace_max_time, "Maximum trace time per branch")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (CLI::CallForHelp const& e) {
        return app.exit(e);
    } catch (CLI::CallForAllHelp const& e) {
        return app.exit(e);
    } catch (CLI::CallForVersion const& e) {
        return app.exit(e);
    } catch (CLI::ParseError const& e) {
        app.exit(e);
        return kUsage;
    }

    auto missing = [&](std::initializer_list<CLI::Option*> required) {
        std::string names;
        for (auto* opt : required) {
            if (opt->count() == 0) names += " " + opt->get_name();
        }
        return names;
    };

    try {
        std::string absent;
        if (check->parsed()) {
            absent = missing({opt_a});
        } else if (manifolds->parsed()) {
            absent = missing({opt_a, opt_V, opt_eps});
        } else {
            absent = missing({opt_a, opt_V, opt_eps, opt_sigma});
        }
        if (!absent.empty()) {
            std::cerr << "error: missing model parameters:" << absent
                      << " (give them as flags or in --config)\n";
            return kUsage;
        }
        if (check->parsed()) return cmd_check(app, o, check_write);
        if (simulate->parsed()) return cmd_simulate(app, o);
        if (exit_times->parsed()) return cmd_exit_times(app, o);
        if (escape->parsed()) return cmd_escape_prob(app, o);
        if (settle->parsed()) return cmd_settle_diff(app, o);
        if (manifolds->parsed()) return cmd_manifolds(app, o);
    } catch (UsageError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (ValidationError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
