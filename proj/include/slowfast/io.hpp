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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "slowfast/monte_carlo.hpp"
#include "slowfast/particle.hpp"

namespace slowfast {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite).
std::string format_double(double x);

/// Header of the grid CSV layout.
std::vector<std::string> const& grid_csv_columns();

void write_grid_csv(std::filesystem::path const& file, GridStudyResult const& result);
/// Params, lattice, options and the cell average; no wall-clock fields.
Json grid_metadata(GridStudyResult const& result);

void write_trajectory_csv(std::filesystem::path const& file, Trajectory const& traj,
                          std::vector<std::string> const& state_columns);
Json trajectory_metadata(Trajectory const& traj);

void write_polyline_csv(std::filesystem::path const& file, Polyline const& curve);
void write_equilibria_csv(std::filesystem::path const& file, EquilibriaResult const& eq);

void write_json(std::filesystem::path const& file, Json const& doc);

/// Creates the directory (and parents) or throws with a clear message.
void ensure_directory(std::filesystem::path const& dir);

}  // namespace slowfast
