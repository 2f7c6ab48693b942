from __future__ import annotations

import math

import numpy as np
import pytest

from hjrare.errors import ConfigError
from hjrare.model import WorkingDomain, quadratic_hamiltonian
from hjrare.oracle import (GridSpec, duality_check, grid_value_function, mather_action,
                           mather_profile)
from hjrare.potential import mane
from hjrare.subsolution import minmax

DW_GRID = GridSpec(0.91, 1.51, 401, 0.5, 200, 8.0)


class TestGridSpec:
    @pytest.mark.parametrize("kw", [dict(nx=2), dict(nt=1), dict(v_max=0.0), dict(x_lo=2.0)])
    def test_invalid(self, kw):
        base = dict(x_lo=0.0, x_hi=1.0, nx=11, t_hi=1.0, nt=10, v_max=1.0)
        base.update(kw)
        with pytest.raises(ConfigError):
            GridSpec(**base)

    def test_refined_nests(self):
        g = GridSpec(0.0, 1.0, 11, 1.0, 10, 2.0)
        f = g.refined()
        assert f.dx == pytest.approx(g.dx / 2) and f.dt == pytest.approx(g.dt / 2)
        np.testing.assert_allclose(f.nodes()[::2], g.nodes())


class TestMatherAction:
    def test_rest_at_equilibrium(self, dw):
        assert mather_action(dw, DW_GRID, 1.0, 1.0, 0.25) == 0.0

    def test_straight_line(self):
        m = quadratic_hamiltonian(0.0, 1.0)
        g = GridSpec(-1.0, 2.0, 301, 1.0, 100, 4.0)
        assert mather_action(m, g, 0.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-9)
        assert mather_action(m, g, 0.0, 1.0, 0.5) == pytest.approx(1.0, abs=1e-9)

    def test_unreachable(self, dw):
        assert mather_action(dw, GridSpec(0.0, 2.0, 101, 1.0, 100, 1.0), 0.2, 1.9, 0.5) == math.inf

    def test_time_must_be_grid_multiple(self, dw):
        with pytest.raises(ConfigError):
            mather_action(dw, DW_GRID, 1.0, 1.42, 0.2501)

    def test_double_well_within_five_percent(self, dw):
        from hjrare.subsolution import optimize_c
        _, sup_c = optimize_c(dw, 1.0, 1.42, 0.5, c_crit=0.0)
        assert mather_action(dw, DW_GRID, 1.0, 1.42, 0.5) == pytest.approx(sup_c, rel=0.05)

    def test_refinement_decreases(self, dw):
        g = GridSpec(0.91, 1.51, 101, 0.5, 50, 8.0)
        prev = None
        for _ in range(3):
            cur = mather_action(dw, g, 1.0, 1.42, 0.5)
            if prev is not None:
                assert cur <= prev + 1e-9
            prev, g = cur, g.refined()

    def test_profile_starts_at_zero(self, dw):
        prof = mather_profile(dw, DW_GRID, 1.0, 1.0, 10)
        assert prof[0] == 0.0 and np.all(prof >= 0.0)


class TestDuality:
    def test_quadratic_analytic(self):
        m = quadratic_hamiltonian(0.0, 1.0)
        ts = np.linspace(1e-3, 20.0, 200001)
        for c in (0.1, 0.5, 2.0):
            assert mane(m, c, 0.0, 1.0) == pytest.approx(math.sqrt(2 * c), abs=1e-12)
            inf_t = float(np.min(1.0 / (2 * ts) + c * ts))
            assert inf_t == pytest.approx(math.sqrt(2 * c), abs=1e-6)

    def test_double_well_report(self, dw):
        rep = duality_check(dw, 1.0, 1.42, [0.25, 0.5], [0.5, 1.0], DW_GRID, c_crit=0.0)
        assert rep.passed
        assert len(rep.t_rows) == 2 and len(rep.c_rows) == 2
        assert "empirical" in rep.note

    def test_residual_shrinks_under_refinement(self, dw):
        g = GridSpec(0.91, 1.51, 201, 0.5, 100, 8.0)
        r0 = duality_check(dw, 1.0, 1.42, [0.5], [], g, c_crit=0.0).max_t_residual()
        r1 = duality_check(dw, 1.0, 1.42, [0.5], [], g.refined(), c_crit=0.0).max_t_residual()
        assert r1 <= 0.75 * r0

    def test_long_horizon_near_critical(self, dw):
        g = GridSpec(0.91, 1.51, 201, 4.0, 400, 8.0)
        rep = duality_check(dw, 1.0, 1.42, [2.0, 4.0], [0.05], g, c_crit=0.0)
        assert rep.passed
        assert all(row[4] < 1e-3 for row in rep.t_rows)  # optimal level close to c_H = 0

    def test_same_point(self, dw):
        rep = duality_check(dw, 1.0, 1.0, [0.25], [0.3], DW_GRID, c_crit=0.0)
        assert rep.c_rows[0][1] == 0.0 and rep.c_rows[0][2] == 0.0
        assert rep.t_rows[0][2] == 0.0


@pytest.fixture(scope="module")
def tables():
    from hjrare.model import double_well
    m = double_well()
    d = WorkingDomain(-1.42, 1.42, 1.0, 0.25)
    g = GridSpec(-1.42, 1.42, 401, 0.25, 200, 8.0)
    return d, grid_value_function(m, d, 0.25, g, exit=True), grid_value_function(m, d, 0.25, g, exit=False)


class TestValueFunction:

    def test_boundary_is_free(self, tables):
        _, w, _ = tables
        assert np.all(w.values[:, 0] == 0.0) and np.all(w.values[:, -1] == 0.0)

    def test_exit_below_terminal(self, tables):
        _, w, v = tables
        ok = np.isfinite(v.values)
        assert np.all(w.values[ok] <= v.values[ok] + 1e-9)

    def test_close_to_minmax(self, tables, dw):
        d, w, _ = tables
        assert w.at(0.0, 1.0) == pytest.approx(minmax(dw, d).value, rel=0.05)

    def test_grid_must_cover(self, dw):
        d = WorkingDomain(-1.42, 1.42, 1.0, 0.25)
        with pytest.raises(ConfigError):
            grid_value_function(dw, d, 0.25, GridSpec(-1.0, 1.42, 101, 0.25, 50, 8.0))
