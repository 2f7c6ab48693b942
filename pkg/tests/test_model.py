from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import N_CASES, rng_for
from hjrare.errors import ConfigError, WrongModel
from hjrare.model import (Kind, WorkingDomain, birth_death, constant_rates, critical_value,
                          diffusion, double_well, exponential_hamiltonian, hamiltonian,
                          inf_p_hamiltonian, lagrangian, lagrangian_array, lagrangian_numeric,
                          model_from_spec, ornstein_uhlenbeck, pure_birth,
                          quadratic_hamiltonian, sis, state_independent, validate)


def test_double_well_hamiltonian_at_equilibrium(dw):
    assert hamiltonian(dw, 1.0, 2.0) == pytest.approx(2.0, abs=1e-12)


def test_constant_rates_hamiltonian_zero_momentum():
    assert hamiltonian(constant_rates(1.0, 1.0), 0.3, 0.0) == 0.0


def test_state_independent_ignores_x():
    m = quadratic_hamiltonian(1.0, 1.0)
    assert hamiltonian(m, -5.0, 1.0) == pytest.approx(1.5)
    assert hamiltonian(m, 7.0, 1.0) == pytest.approx(1.5)
    g = state_independent(lambda p: p + 0.5 * p * p)
    assert hamiltonian(g, 0.0, 1.0) == pytest.approx(1.5)


def test_lagrangian_closed_forms():
    flat = diffusion([0.0], [1.0])
    assert lagrangian(flat, 0.0, 2.0) == pytest.approx(2.0)
    assert lagrangian(quadratic_hamiltonian(0.0, 1.0), 0.0, 1.0) == pytest.approx(0.5)


def test_lagrangian_birth_death_numeric():
    m = constant_rates(1.0, 1.0)
    assert abs(lagrangian(m, 0.2, 0.0)) < 1e-9


def test_lagrangian_rejects_bad_radius(dw):
    with pytest.raises(ValueError):
        lagrangian(dw, 0.0, 1.0, search_radius=0.0)


def test_pure_birth_has_no_lagrangian():
    with pytest.raises(WrongModel):
        lagrangian(pure_birth([1.0, 2.0]), np.zeros(2), 1.0)


def test_exponential_lagrangian_matches_entropy():
    # L(v) = v log(v/r) - v + r for H = r (e^p - 1)
    m = exponential_hamiltonian(2.0)
    for v in (0.5, 2.0, 5.0):
        assert lagrangian(m, 0.0, v) == pytest.approx(v * math.log(v / 2.0) - v + 2.0, abs=1e-8)


class TestCriticalValue:
    def test_double_well(self, dw, dw_domain):
        assert abs(critical_value(dw, dw_domain)) < 1e-12

    def test_sis(self, sis_model, sis_domain):
        assert abs(critical_value(sis_model, sis_domain)) < 1e-12

    def test_quadratic(self):
        m = quadratic_hamiltonian(1.0, 1.0)
        assert critical_value(m, WorkingDomain(-1, 1, 0)) == pytest.approx(-0.5, abs=1e-12)

    def test_exponential_is_minus_rate(self):
        m = exponential_hamiltonian(1.5)
        assert critical_value(m, WorkingDomain(-1, 1, 0)) == pytest.approx(-1.5, abs=1e-9)

    def test_drifted_brownian(self):
        m = diffusion([0.0, -2.0], [1.0])  # b = 2
        assert critical_value(m, WorkingDomain(-1, 1, 0)) == pytest.approx(-2.0, abs=1e-12)

    def test_grid_n_validated(self, dw, dw_domain):
        with pytest.raises(ValueError):
            critical_value(dw, dw_domain, grid_n=1)

    def test_pure_birth_vertex(self):
        m = pure_birth([1.0, 0.5], [[1.0, 0.0], [0.0, 2.0]])
        d = WorkingDomain(0.1, 2.0, 1.0)
        # sum of rates is minimised at x = (0.1, 0.1)
        assert critical_value(m, d) == pytest.approx(-(1.5 + 0.1 + 0.2))


class TestDomainAndSpec:
    def test_domain_order(self):
        with pytest.raises(ConfigError):
            WorkingDomain(0.0, 1.0, 2.0)
        with pytest.raises(ConfigError):
            WorkingDomain(0.0, 1.0, 0.5, T=0.0)

    def test_boundary_cost(self):
        d = WorkingDomain(0.0, 1.0, 0.5, g_a=1.0, g_b=2.0)
        assert d.g(0.0) == 1.0 and d.g(1.0) == 2.0
        with pytest.raises(ValueError):
            d.g(0.5)

    def test_validate_rejects_vanishing_rates(self):
        with pytest.raises(ConfigError):
            validate(sis(), WorkingDomain(-0.5, 0.9, 0.5))
        validate(sis(), WorkingDomain(0.5, 5 / 6, 2 / 3))

    def test_validate_sigma(self):
        with pytest.raises(ConfigError):
            validate(diffusion([0.0], [0.0, 1.0]), WorkingDomain(-1, 1, 0.5))

    @pytest.mark.parametrize("spec", [
        {"builtin": "double_well", "sigma": 1.0},
        {"builtin": "sis", "rho": 3.0},
        {"kind": "diffusion", "phi": [0.0, 1.0, 2.0], "sigma": [1.0]},
        {"kind": "birth_death", "lam": [1.0], "mu": [2.0]},
        {"builtin": "quadratic", "drift": 1.0, "scale": 1.0},
    ])
    def test_spec_round_trip(self, spec):
        m = model_from_spec(spec)
        again = model_from_spec(m.spec)
        for x, p in [(0.3, 0.7), (0.6, -1.1)]:
            assert hamiltonian(again, x, p) == pytest.approx(hamiltonian(m, x, p))

    @pytest.mark.parametrize("spec", [
        {"builtin": "nope"},
        {"kind": "diffusion", "phi": [0.0], "extra": 1},
        {"kind": "mystery"},
        {"builtin": "sis", "kind": "diffusion"},
        {"kind": "birth_death", "lam": [1.0]},
    ])
    def test_spec_rejections(self, spec):
        with pytest.raises(ConfigError):
            model_from_spec(spec)

    def test_sis_rates(self):
        m = sis()
        assert m.kind is Kind.BIRTH_DEATH
        assert float(m.lam(2 / 3)) == pytest.approx(2 / 3)
        assert float(m.mu(2 / 3)) == pytest.approx(2 / 3)


# -- properties ------------------------------------------------------------------------

MODELS = {
    "double_well": double_well(),
    "ou": ornstein_uhlenbeck(2.0, 0.7),
    "variable_sigma": diffusion([0.0, 0.3, -0.5, 0.0, 0.25], [1.0, 0.2]),
    "sis": sis(),
    "linear_bd": birth_death([0.5, 1.0], [0.2, 2.0]),
    "quadratic": quadratic_hamiltonian(1.0, 1.0),
    "exponential": exponential_hamiltonian(1.3),
}
X_RANGE = {"sis": (0.05, 0.95), "linear_bd": (0.05, 2.0)}


@pytest.mark.parametrize("name", list(MODELS))
def test_midpoint_convexity(name):
    m = MODELS[name]
    rng = rng_for("convex", name)
    lo, hi = X_RANGE.get(name, (-1.5, 1.5))
    for _ in range(N_CASES):
        x = rng.uniform(lo, hi)
        p1, p2 = rng.uniform(-4, 4, size=2)
        mid = hamiltonian(m, x, 0.5 * (p1 + p2))
        assert mid <= 0.5 * (hamiltonian(m, x, p1) + hamiltonian(m, x, p2)) + 1e-9


@pytest.mark.parametrize("name", ["double_well", "ou", "variable_sigma", "quadratic"])
def test_legendre_closed_form_vs_numeric(name):
    m = MODELS[name]
    rng = rng_for("legendre", name)
    for _ in range(N_CASES):
        x, v = rng.uniform(-1.4, 1.4), rng.uniform(-3, 3)
        assert lagrangian(m, x, v) == pytest.approx(lagrangian_numeric(m, x, v), abs=1e-6)


@pytest.mark.parametrize("name", ["sis", "linear_bd"])
def test_birth_death_vectorised_lagrangian(name):
    m = MODELS[name]
    rng = rng_for("bd-lagr", name)
    xs = rng.uniform(*X_RANGE[name], size=N_CASES)
    vs = rng.uniform(-2, 2, size=N_CASES)
    got = lagrangian_array(m, xs, vs)
    want = [lagrangian_numeric(m, x, v) for x, v in zip(xs, vs)]
    np.testing.assert_allclose(got, want, atol=1e-6)


@pytest.mark.parametrize("name", ["double_well", "ou", "variable_sigma", "sis", "linear_bd",
                                  "quadratic", "exponential"])
def test_critical_value_bounds_pointwise_infimum(name):
    m = MODELS[name]
    lo, hi = X_RANGE.get(name, (-1.4, 1.4))
    c = critical_value(m, WorkingDomain(lo, hi, 0.5 * (lo + hi)))
    rng = rng_for("crit", name)
    for x in rng.uniform(lo, hi, size=N_CASES):
        assert float(inf_p_hamiltonian(m, x)) <= c + 1e-9


def test_pure_birth_subsolution_witness():
    rng = rng_for("pure-birth")
    done = 0
    while done < N_CASES:
        n = int(rng.integers(1, 4))
        base = rng.uniform(0.1, 2.0, size=n)
        slope = rng.uniform(0.0, 1.0, size=(n, n))
        m = pure_birth(base, slope)
        d = WorkingDomain(0.0, 1.0, 0.5)
        lam_star = -critical_value(m, d)
        c = rng.uniform(-lam_star, 0.0)
        alpha = math.log1p(c / lam_star)
        for _ in range(5):
            x = rng.uniform(0.0, 1.0, size=n)
            assert hamiltonian(m, x, np.full(n, alpha)) <= c + 1e-9
            done += 1
