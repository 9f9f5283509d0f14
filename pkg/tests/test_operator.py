"""Flux fields: gradient consistency, homogeneity, the four axioms,
and the coefficient-expression grammar."""

import numpy as np
import pytest

from plab.exprgrammar import compile_expr
from plab.fluxop import (AxiomReport, FluxField, MetricField, check_axioms,
                         energy_density, flux_eval)

RNG = np.random.default_rng(11)

DIAG = MetricField.diagonal(["1 + 0.5*x1**2", "1 + 0.5*x2**2"], 2)
CONF = MetricField.conformal("1 + 0.25*(x1**2 + x2**2)", 2)


def fd_gradient(A, x, v, delta=1e-6):
    g = np.zeros_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = delta
        g[i] = (energy_density(A, x, v + e) - energy_density(A, x, v - e)) / (2 * delta)
    return g


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
@pytest.mark.parametrize("metric", [None, DIAG, CONF])
def test_flux_is_density_gradient(p, metric):
    """A(x, v) = d/dv of the energy density, to 1e-6 relative, on 1000
    samples per exponent (the p < 2 flux is singular at v = 0, so samples
    keep |v| >= 0.1)."""
    A = FluxField(p, metric)
    n_samples = 1000
    worst = 0.0
    for _ in range(n_samples):
        x = RNG.uniform(-1, 1, 2)
        v = RNG.uniform(-1, 1, 2)
        nv = np.linalg.norm(v)
        if nv < 0.1:
            v = v / (nv + 1e-300) * 0.5
        Av = flux_eval(A, x, v)
        g = fd_gradient(A, x, v)
        worst = max(worst, np.linalg.norm(Av - g) / (np.linalg.norm(Av) + 1e-300))
    assert worst <= 1e-6


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("metric", [None, DIAG])
def test_flux_homogeneity(p, metric):
    A = FluxField(p, metric)
    for _ in range(100):
        x = RNG.uniform(-1, 1, 2)
        v = RNG.uniform(-1, 1, 2)
        lam = RNG.uniform(-3, 3)
        if abs(lam) < 0.05 or np.linalg.norm(v) < 1e-3:
            continue
        lhs = flux_eval(A, x, lam * v)
        rhs = lam * abs(lam) ** (p - 2) * flux_eval(A, x, v)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


def test_flux_zero_gradient_convention():
    for p in [1.5, 2.0, 3.0]:
        assert np.all(flux_eval(FluxField(p), [0.0, 0.0], [0.0, 0.0]) == 0.0)


def test_flux_rejects_nan():
    with pytest.raises(ValueError):
        flux_eval(FluxField(2.0), [0.0, 0.0], [np.nan, 1.0])


def axiom_samples(n, count=200, seed=5):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x = rng.uniform(-1, 1, n)
        v = rng.uniform(-1, 1, n)
        w = rng.uniform(-1, 1, n)
        lam = rng.uniform(-2, 2)
        if np.allclose(v, w) or abs(lam) < 0.1:
            continue
        out.append((x, v, w, lam))
    return out


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_axioms_euclidean(p):
    rep = check_axioms(FluxField(p), axiom_samples(2))
    assert isinstance(rep, AxiomReport)
    assert rep.passed
    assert rep.alpha == 1.0 and rep.beta_ell == 1.0


@pytest.mark.parametrize("metric", [DIAG, CONF])
@pytest.mark.parametrize("p", [2.0, 3.0])
def test_axioms_metric(metric, p):
    rep = check_axioms(FluxField(p, metric), axiom_samples(2))
    assert rep.passed
    assert 0 < rep.alpha <= rep.beta_ell


def test_axioms_fail_for_indefinite_metric():
    # an indefinite "metric" violates monotonicity; a failed report, not a crash
    bad = MetricField(lambda X: np.tile(np.diag([1.0, -1.0]), (len(X), 1, 1)), 2)
    rep = check_axioms(FluxField(2.0, bad), axiom_samples(2))
    assert not rep.passed
    assert rep.monotonicity_margin <= 0.0


def test_metric_tensors_validated():
    bad = MetricField(lambda X: np.tile(np.diag([1.0, -1.0]), (len(X), 1, 1)), 2)
    with pytest.raises(ValueError):
        bad.tensors(np.zeros((1, 2)))


def test_identity_metric_matches_euclidean_flux():
    A_id = FluxField(3.0, MetricField.identity(2))
    A_eu = FluxField(3.0)
    for _ in range(50):
        x = RNG.uniform(-1, 1, 2)
        v = RNG.uniform(-1, 1, 2)
        assert np.allclose(flux_eval(A_id, x, v), flux_eval(A_eu, x, v),
                           rtol=1e-14, atol=1e-15)


def test_expr_grammar_accepts_polynomials():
    f = compile_expr("1 + 0.5*x1**2 - x2", 2)
    X = np.array([[2.0, 1.0], [0.0, 0.0]])
    assert np.allclose(f(X), [2.0, 1.0])


def test_expr_grammar_rejects_calls_and_names():
    for src in ["__import__('os')", "x3", "abs(x1)", "x1 / x2", "lambda: 1"]:
        with pytest.raises(ValueError):
            compile_expr(src, 2)
