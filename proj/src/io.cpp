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

#include "slowfast/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "slowfast/errors.hpp"

namespace slowfast {
namespace {

std::ofstream open_out(std::filesystem::path const& file)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + file.string());
    }
    return out;
}

void write_row(std::ostream& out, std::vector<std::string> const& fields)
{
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out << ',';
        out << fields[k];
    }
    out << '\n';
}

Json params_json(ParticleParams const& p)
{
    return {{"a", p.a}, {"V", p.V}, {"epsilon", p.epsilon}, {"sigma", p.sigma}};
}

Json number_or_null(double x)
{
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

}  // namespace

std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto const res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::vector<std::string> const& grid_csv_columns()
{
    static std::vector<std::string> const cols{
        "i", "j", "xi1", "xi2", "boundary", "value", "se",
        "n_left", "n_right", "n_top", "n_bottom", "censored", "failures",
        "exit_time_mean", "exit_time_se",
        "det_time", "det_side", "sto_mean", "sto_se", "sto_settled", "non_settling_fraction"};
    return cols;
}

void write_grid_csv(std::filesystem::path const& file, GridStudyResult const& r)
{
    auto out = open_out(file);
    write_row(out, grid_csv_columns());
    bool const settle = r.kind == StudyKind::settling_difference;
    for (auto const& c : r.cells) {
        auto count = [&](Side s) { return std::to_string(c.side_counts[static_cast<std::size_t>(s)]); };
        double const n_eff = static_cast<double>(r.grid.paths - c.failures);
        write_row(out, {
            std::to_string(c.i), std::to_string(c.j),
            format_double(c.point(0)), format_double(c.point(1)),
            c.boundary ? "1" : "0",
            format_double(r.value(c)), format_double(r.standard_error(c)),
            count(Side::left), count(Side::right), count(Side::top), count(Side::bottom),
            std::to_string(c.censored), std::to_string(c.failures),
            format_double(c.exit_time_mean), format_double(c.exit_time_se),
            settle ? format_double(c.det_time) : "",
            settle ? std::string(c.det_side ? to_string(*c.det_side) : "none") : "",
            settle ? format_double(c.sto_mean) : "",
            settle ? format_double(c.sto_se) : "",
            settle ? std::to_string(c.sto_settled) : "",
            settle && n_eff > 0 ? format_double(1.0 - c.sto_settled / n_eff) : "",
        });
    }
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

Json grid_metadata(GridStudyResult const& r)
{
    Json j;
    j["format"] = "slowfast-grid/1";
    j["kind"] = std::string(to_string(r.kind));
    if (r.side) j["side"] = std::string(to_string(*r.side));
    j["model"] = "cellular-flow";
    j["params"] = params_json(r.params);
    if (r.kind == StudyKind::settling_difference) {
        j["sigma_compared"] = r.sigma_compared;
        j["difference"] = "t_det - mean(t_sto)";
    }
    j["grid"] = {{"n1", r.grid.n1}, {"n2", r.grid.n2}, {"paths", r.grid.paths},
                 {"threshold", r.grid.threshold}, {"seed", r.grid.seed}};
    j["options"] = {{"dt", r.options.dt},
                    {"scheme", std::string(to_string(r.options.scheme))},
                    {"mode", std::string(to_string(r.options.mode))},
                    {"side_exit", std::string(to_string(r.options.side_exit))}};
    j["columns"] = grid_csv_columns();
    std::size_t failures = 0;
    std::size_t censored = 0;
    for (auto const& c : r.cells) {
        failures += c.failures;
        censored += c.censored;
    }
    j["totals"] = {{"censored", censored}, {"failures", failures}};
    try {
        CellAverage const a = average_over_cell(r);
        j["cell_average"] = {{"mean", number_or_null(a.mean)}, {"se", number_or_null(a.se)},
                             {"cells", a.cells}, {"excluded", a.excluded}};
    } catch (ValidationError const&) {
        j["cell_average"] = nullptr;
    }
    return j;
}

void write_trajectory_csv(std::filesystem::path const& file, Trajectory const& traj,
                          std::vector<std::string> const& state_columns)
{
    auto out = open_out(file);
    std::vector<std::string> header{"t"};
    header.insert(header.end(), state_columns.begin(), state_columns.end());
    write_row(out, header);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        require(static_cast<std::size_t>(traj.states[k].size()) == state_columns.size(),
                "trajectory state size does not match the column list");
        std::vector<std::string> row{format_double(traj.times[k])};
        for (Eigen::Index c = 0; c < traj.states[k].size(); ++c) {
            row.push_back(format_double(traj.states[k](c)));
        }
        write_row(out, row);
    }
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

Json trajectory_metadata(Trajectory const& traj)
{
    Json j;
    j["format"] = "slowfast-trajectory/1";
    j["samples"] = traj.times.size();
    j["final_time"] = traj.final_time;
    if (traj.exit) {
        j["exit"] = {{"time", traj.exit->time},
                     {"side", std::string(to_string(traj.exit->side))},
                     {"xi1", traj.exit->point(0)},
                     {"xi2", traj.exit->point(1)}};
    } else {
        j["exit"] = nullptr;
    }
    return j;
}

void write_polyline_csv(std::filesystem::path const& file, Polyline const& curve)
{
    auto out = open_out(file);
    write_row(out, {"index", "xi1", "xi2", "saddle"});
    for (std::size_t k = 0; k < curve.vertices.size(); ++k) {
        write_row(out, {std::to_string(k), format_double(curve.vertices[k](0)),
                        format_double(curve.vertices[k](1)), k == curve.saddle_index ? "1" : "0"});
    }
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

void write_equilibria_csv(std::filesystem::path const& file, EquilibriaResult const& eq)
{
    auto out = open_out(file);
    write_row(out, {"label", "xi1", "xi2", "kind", "re1", "im1", "re2", "im2"});
    for (auto const& e : eq.points) {
        write_row(out, {e.label, format_double(e.point(0)), format_double(e.point(1)),
                        std::string(to_string(e.kind)),
                        format_double(e.eigenvalues[0].real()), format_double(e.eigenvalues[0].imag()),
                        format_double(e.eigenvalues[1].real()), format_double(e.eigenvalues[1].imag())});
    }
}

void write_json(std::filesystem::path const& file, Json const& doc)
{
    auto out = open_out(file);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

void ensure_directory(std::filesystem::path const& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string()
                                 + (ec ? ": " + ec.message() : ""));
    }
}

}  // namespace slowfast
