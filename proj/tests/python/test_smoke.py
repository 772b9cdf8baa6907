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
"""Smoke tests of the extension module."""

import math

import numpy as np
import pytest

import slowfast as sf


def test_params_and_validation():
    p = sf.ParticleParams(a=0.7, V=0.1, epsilon=0.05, sigma=0.01)
    assert p.V == 0.1
    assert "epsilon=0.05" in repr(p)
    with pytest.raises(ValueError):
        sf.ParticleParams(a=-1.0)


def test_closed_forms():
    p = sf.ParticleParams(a=0.7, V=0.3, epsilon=0.05)
    c = np.array([math.pi / 2, math.pi / 2])
    np.testing.assert_allclose(sf.analytic_h0(c, p), [0.0, 0.3], atol=1e-15)
    np.testing.assert_allclose(sf.analytic_h1(c, p), [0.21, 0.0], atol=1e-15)
    q = sf.ParticleParams(a=0.7, V=0.1, epsilon=0.05)
    np.testing.assert_allclose(sf.reduced_drift(c, q), [0.0035, 0.1], atol=1e-15)
    assert sf.stream_function(c, q) == pytest.approx(0.7 - 0.1 * math.pi / 2)


def test_equilibria_and_manifolds():
    p = sf.ParticleParams(a=0.7, V=0.1, epsilon=0.05)
    points, status = sf.equilibria(p)
    assert [e["kind"] for e in points] == ["saddle", "saddle", "unstable spiral"]
    assert points[0]["point"][1] == pytest.approx(math.asin(1 / 7))
    ws, wu = sf.trace_manifolds(p)
    assert ws.shape[1] == 2 and len(ws) > 100
    assert wu[:, 1].max() > math.pi


def test_assumptions():
    r = sf.check_assumptions(sf.ParticleParams(a=0.7))
    assert r["h2_satisfied"]
    assert r["L_g"] == pytest.approx(math.sqrt(2) * 0.7)


def test_manifold_quadrature_matches_analytic():
    p = sf.ParticleParams(a=0.7, V=0.1, epsilon=0.05, sigma=0.01)
    pts = [np.array([1.0, 2.0]), np.array([0.3, 0.4])]
    q0, q1 = sf.manifold_terms(p, pts, seed=3, quadrature=True)
    a0, a1 = sf.manifold_terms(p, pts, seed=3, quadrature=False)
    np.testing.assert_allclose(q0, a0, atol=1e-8)
    np.testing.assert_allclose(q1, a1, atol=1e-8)


def test_trajectories():
    p = sf.ParticleParams(a=0.7, V=0.3, epsilon=0.05)
    tr = sf.integrate_reduced(np.array([0.6, 1.2]), p, dt=0.01)
    assert tr["exit_side"] == "bottom"
    assert tr["states"].shape == (len(tr["t"]), 2)
    full = sf.integrate_full(np.array([1.0, 1.0, 0.0, 0.0]), p, dt=1e-3, t_max=1.0,
                             stop_at_exit=False, record_every=100)
    assert full["states"].shape == (11, 4)
    assert np.isfinite(full["final_state"]).all()


def test_grid_studies_reproducible():
    p = sf.ParticleParams(a=0.7, V=0.1, epsilon=0.05, sigma=0.01)
    kw = dict(n1=6, n2=5, paths=3, threshold=200.0, dt=0.02, seed=4)
    a = sf.escape_probability_map(p, workers=1, **kw)
    b = sf.escape_probability_map(p, workers=3, **kw)
    for side in ("left", "right", "top", "bottom"):
        np.testing.assert_array_equal(a[side]["value"], b[side]["value"])
    total = sum(a["left"]["side_counts"][s] for s in ("left", "right", "top", "bottom"))
    np.testing.assert_array_equal(total + a["left"]["censored"], 3)
    assert a["left"]["value"].shape == (5, 6)
    assert np.all(a["left"]["value"][:, 0] == 1.0)

    t = sf.first_exit_time_map(p, **kw)
    assert t["metadata"]["format"] == "slowfast-grid/1"
    assert np.all(t["exit_time_mean"][0, :] == 0.0)

    d = sf.settling_time_difference_map(sf.ParticleParams(a=0.7, V=0.1, epsilon=0.05, sigma=0.0), **kw)
    interior = d["value"][1:-1, 1:-1]
    assert np.all(interior[np.isfinite(interior)] == 0.0)
