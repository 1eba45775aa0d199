"""Smoothing exponents, decay fits and convergence to the mean."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracpme import (
    DecayWindowError,
    Field,
    FracParams,
    PMEConfig,
    Trajectory,
    convergence_to_mean,
    evolve,
    fit_decay,
    make_torus,
    random_field,
    smoothing_bound_check,
    smoothing_exponents_closed,
    smoothing_exponents_noncompact,
)


# -- exponent formulas ----------------------------------------------------------


def test_noncompact_exponents_reference_values():
    alpha, gamma = smoothing_exponents_noncompact(2.0, 0.5, 2.0, 3)
    assert abs(alpha - 0.6) <= 1e-15
    assert abs(gamma - 0.4) <= 1e-15


def test_closed_exponent_reference_value():
    assert abs(smoothing_exponents_closed(2.0, 0.5, 2.0, 3) - 8 / 27) <= 1e-15


@pytest.mark.parametrize("p,sigma,m,n", [(2, 0.25, 3, 1), (4, 0.75, 1.5, 2), (3, 0.5, 5, 3)])
def test_exponents_match_rational_arithmetic(p, sigma, m, n):
    P, S, M = Fraction(p), Fraction(sigma), Fraction(m)
    denom = 2 * S * P + n * (M - 1)
    alpha, gamma = smoothing_exponents_noncompact(p, sigma, m, n)
    assert alpha == pytest.approx(float(n / denom), rel=1e-15)
    assert gamma == pytest.approx(float(2 * S * P / denom), rel=1e-15)


@given(st.floats(2.0, 20.0), st.floats(0.01, 0.99), st.floats(1.001, 10.0), st.integers(1, 3))
def test_scaling_identity(p, sigma, m, n):
    alpha, gamma = smoothing_exponents_noncompact(p, sigma, m, n)
    assert abs(alpha * (m - 1) + gamma - 1) <= 1e-14
    assert 0 < alpha and 0 < gamma < 1
    g = smoothing_exponents_closed(p, sigma, m, n)
    assert 0 < g < 1


def test_exponent_limits():
    # m -> 1+: alpha -> n/(2 sigma p), gamma -> 1
    alpha, gamma = smoothing_exponents_noncompact(2.0, 0.5, 1 + 1e-12, 3)
    assert alpha == pytest.approx(1.5, rel=1e-9) and gamma == pytest.approx(1.0, rel=1e-9)
    # p -> inf in the closed form: gamma -> 1
    assert smoothing_exponents_closed(1e12, 0.5, 2.0, 3) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("args", [(2.0, 0.5, 1.0, 3), (1.5, 0.5, 2.0, 3), (2.0, 1.0, 2.0, 3), (2.0, 0.5, 2.0, 0)])
def test_exponents_reject_outside_domain(args):
    with pytest.raises(ValueError):
        smoothing_exponents_noncompact(*args)
    with pytest.raises(ValueError):
        smoothing_exponents_closed(*args)


# -- decay fits on synthetic trajectories ------------------------------------------------


@pytest.fixture
def spec3():
    return make_torus(3, grid=8)


def test_fit_recovers_power_law(spec3):
    t = np.concatenate([[0.0], np.geomspace(0.01, 100.0, 400)])
    v = np.where(t > 0, 3.0 * np.maximum(t, 1e-300) ** -0.6, 10.0)
    tr = Trajectory.from_norms(spec3, t, linf=v)
    rep = fit_decay(tr, "linf", window=(1.0, 100.0), m=2.0, predicted=-0.6)
    assert abs(rep.fitted + 0.6) <= 1e-10
    # the interval width goes through 1 - r^2, so it is only resolved to ~sqrt(machine eps)
    assert rep.width <= 1e-7
    assert rep.regime_reached and rep.relative_error <= 1e-10


def test_fit_exact_zero_mean_profile(spec3):
    # ||u(t)|| = (B t + 1/v0)^(-1) is the extremal profile for m = 2
    B, v0 = 0.7, 2.0
    t = np.linspace(0.0, 500.0, 5001)
    v = 1.0 / (B * t + 1.0 / v0)
    tr = Trajectory.from_norms(spec3, t, linf=v, l2=v)
    rep = fit_decay(tr, "linf", window=(100.0, 500.0), m=2.0)
    assert rep.predicted == -1.0
    assert rep.B_fit == pytest.approx(B, rel=1e-12)
    assert rep.bound_holds and rep.passed
    assert abs(rep.fitted + 1.0) < 0.05
    assert set(rep.eps_bounds) == {"0.1", "0.5", "0.9"}
    for b in rep.eps_bounds.values():
        assert b["decay_exponent"] < 0 and b["C_fit"] > 0
    no_l2 = fit_decay(Trajectory.from_norms(spec3, t, linf=v), "linf", window=(100.0, 500.0), m=2.0)
    assert no_l2.eps_bounds == {} and no_l2.passed
    d = json.loads(rep.to_json())
    assert d["passed"] is True and d["B_fit"] == pytest.approx(B)
    assert rep.to_csv().splitlines()[0].startswith("t,")


def test_fit_flags_wrong_regime(spec3):
    t = np.concatenate([[0.0], np.geomspace(0.1, 10.0, 100)])
    v = np.exp(-t)
    rep = fit_decay(Trajectory.from_norms(spec3, t, linf=v), window=(1.0, 10.0), m=2.0)
    assert not rep.regime_reached and not rep.passed


def test_fit_window_errors(spec3):
    t = np.linspace(0.0, 10.0, 101)
    tr = Trajectory.from_norms(spec3, t, linf=1.0 / (1.0 + t))
    with pytest.raises(DecayWindowError):
        fit_decay(tr, window=(20.0, 30.0), m=2.0)
    with pytest.raises(DecayWindowError):
        fit_decay(tr, window=(5.0, 5.5), m=2.0)  # too few samples
    with pytest.raises(DecayWindowError):
        fit_decay(tr, window=(0.0, 5.0), m=2.0)
    with pytest.raises(ValueError):
        fit_decay(tr, norm="l7", m=2.0)
    with pytest.raises(ValueError):
        fit_decay(tr)  # no config, no m
    underflow = Trajectory.from_norms(spec3, t, linf=np.exp(-10 * t))
    with pytest.raises(DecayWindowError, match="round-off"):
        fit_decay(underflow, window=(1.0, 10.0), m=2.0)


def test_fit_linear_requires_explicit_prediction(spec3):
    t = np.linspace(0.0, 10.0, 101)
    tr = Trajectory.from_norms(spec3, t, linf=np.exp(-t))
    with pytest.raises(ValueError):
        fit_decay(tr, window=(1.0, 10.0), m=1.0)


def test_from_norms_alignment(spec3):
    with pytest.raises(ValueError):
        Trajectory.from_norms(spec3, [0.0, 1.0], linf=[1.0])


# -- solver-backed checks -------------------------------------------------------------


@pytest.fixture(scope="module")
def mean_run():
    spec = make_torus(3, grid=8)
    u0 = random_field(spec, 51, band=3, amplitude=0.5, offset=1.0)
    cfg = PMEConfig(2.0, FracParams(0.5), horizon=10.0, steps=100)
    return evolve(u0, cfg)


def test_convergence_to_mean(mean_run):
    rep = convergence_to_mean(mean_run, q=1.0, tolerance=1e-3)
    assert rep.monotone and rep.mean_drift <= 1e-12
    assert rep.mean0 == pytest.approx(1.0, abs=0.2)
    assert rep.final_ratio < 1e-3 and rep.passed
    assert convergence_to_mean(mean_run, q=2.0).monotone
    d = rep.to_dict()
    assert len(d["distances"]) == len(d["times"]) == len(mean_run.fields)


def test_convergence_to_mean_strict_tolerance_fails(mean_run):
    assert not convergence_to_mean(mean_run, tolerance=1e-30).passed


def test_convergence_to_mean_validation(mean_run):
    with pytest.raises(ValueError):
        convergence_to_mean(mean_run, q=0.5)
    with pytest.raises(ValueError):
        convergence_to_mean(Trajectory.from_norms(make_torus(1, grid=8), [0.0], linf=[1.0]))


def test_smoothing_bound_reports(mean_run):
    rep = smoothing_bound_check(mean_run, p=2.0)
    assert rep.finite and rep.sup_ratio > 0
    assert (rep.alpha, rep.gamma) == pytest.approx(smoothing_exponents_noncompact(2.0, 0.5, 2.0, 3))
    assert "proxy" in rep.note
    closed = smoothing_bound_check(mean_run, p=2.0, form="closed", E=0.5)
    assert closed.finite and closed.sup_ratio <= rep.sup_ratio
    assert np.all(closed.ratios <= rep.ratios)
    with pytest.raises(ValueError):
        smoothing_bound_check(mean_run, form="open")


def test_smoothing_bound_zero_data():
    spec = make_torus(1, grid=16)
    tr = evolve(Field.constant(spec, 0.0), PMEConfig(2.0, FracParams(0.5), steps=4))
    assert smoothing_bound_check(tr).sup_ratio == 0.0


def test_fit_on_solver_trajectory_uses_config():
    spec = make_torus(1, grid=32)
    u0 = random_field(spec, 3, band=2, amplitude=2.0)
    tr = evolve(u0, PMEConfig(2.0, FracParams(0.5), horizon=20.0, steps=200))
    rep = fit_decay(tr, "linf", window=(2.0, 20.0))
    assert rep.predicted == -1.0 and math.isfinite(rep.fitted)
    assert rep.B_fit > 0 and rep.bound_holds
