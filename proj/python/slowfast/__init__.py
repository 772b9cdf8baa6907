# Copyright 2026 The slowfast Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Random slow manifolds and the cellular-flow inertial particle model.

Thin wrapper over the compiled ``_core`` extension. Lattice arrays are
shaped (n2, n1): row j holds xi2 = j pi / (n2 - 1), column i holds xi1.
"""

from ._core import (
    IntegrationError,
    ParticleParams,
    QuadratureError,
    ValidationError,
    __version__,
    analytic_h0,
    analytic_h1,
    check_assumptions,
    equilibria,
    escape_probability_map,
    first_exit_time_map,
    flow_velocity,
    integrate_full,
    integrate_reduced,
    manifold_terms,
    reduced_drift,
    sample_frozen_integrals,
    settling_time_difference_map,
    stream_function,
    trace_manifolds,
)

__all__ = [
    "IntegrationError",
    "ParticleParams",
    "QuadratureError",
    "ValidationError",
    "__version__",
    "analytic_h0",
    "analytic_h1",
    "check_assumptions",
    "equilibria",
    "escape_probability_map",
    "first_exit_time_map",
    "flow_velocity",
    "integrate_full",
    "integrate_reduced",
    "manifold_terms",
    "reduced_drift",
    "sample_frozen_integrals",
    "settling_time_difference_map",
    "stream_function",
    "trace_manifolds",
]
