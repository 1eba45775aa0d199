"""Decay exponents and long-time behaviour of fractional porous medium flows.

Predicted exponents (m > 1, p >= 2, dimension n):

* non-compact smoothing:  alpha = n/(2 sigma p + n(m-1)),  gamma = 2 sigma p/(2 sigma p + n(m-1)),
* closed manifold:        gamma = (p/(p+m-1))^(n/(2 sigma)),
* zero-mean data on a closed manifold: ||u(t)||_p <= (B t + ||u0||_p^(-(m-1)))^(-1/(m-1)),
  i.e. algebraic decay with exponent -1/(m-1).

Observed exponents are least-squares slopes of ln(norm) against ln(t).
Prefactors (B, C, e^R) are not known in closed form and are fitted.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import stats

from .solver import Trajectory
from .torus import lp_norm

__all__ = [
    "smoothing_exponents_noncompact",
    "smoothing_exponents_closed",
    "DecayFitReport",
    "DecayWindowError",
    "fit_decay",
    "SmoothingBoundReport",
    "smoothing_bound_check",
    "ConvergenceReport",
    "convergence_to_mean",
    "EPS_GRID",
]

EPS_GRID = (0.1, 0.5, 0.9)

_NORM_KEYS = {
    "linf": "linf", "inf": "linf", "l1": "l1", "l2": "l2", "lmplus1": "lmplus1",
    "c_l1": "c_l1", "c_l2": "c_l2", "c_linf": "c_linf",
}


def _check_exponent_args(p: float, sigma: float, m: float, n: int) -> None:
    if not m > 1:
        raise ValueError("smoothing exponents require m > 1")
    if not p >= 2:
        raise ValueError("smoothing exponents require p >= 2")
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if not n >= 1:
        raise ValueError("dimension must be positive")


def smoothing_exponents_noncompact(p: float, sigma: float, m: float, n: int) -> tuple[float, float]:
    """(alpha, gamma) of the L_p -> L_inf smoothing estimate; alpha (m-1) + gamma = 1."""
    _check_exponent_args(p, sigma, m, n)
    den = 2.0 * sigma * p + n * (m - 1.0)
    return n / den, 2.0 * sigma * p / den


def smoothing_exponents_closed(p: float, sigma: float, m: float, n: int) -> float:
    """gamma = (p/(p+m-1))^(n/(2 sigma)) for the closed-manifold estimate."""
    _check_exponent_args(p, sigma, m, n)
    return (p / (p + m - 1.0)) ** (n / (2.0 * sigma))


class DecayWindowError(ValueError):
    """Fit window contains non-positive (converged) norms or too few samples."""


@dataclass
class DecayFitReport:
    """Power-law fit of a norm against time.

    ``regime_reached``: relative exponent error within ``tolerance``.
    ``bound_holds``: the one-sided zero-mean bound with the fitted B holds at
    every sample of the window (B > 0 required).  A fit decaying faster than
    predicted can satisfy the bound while failing ``regime_reached``.
    """

    norm: str
    window: tuple[float, float]
    fitted: float
    width: float
    predicted: float
    predicted_form: str
    tolerance: float
    regime_reached: bool
    bound_holds: bool
    B_fit: float
    table: np.ndarray
    eps_bounds: dict = dc_field(default_factory=dict)
    note: str = ""

    @property
    def relative_error(self) -> float:
        return abs(self.fitted - self.predicted) / abs(self.predicted)

    @property
    def passed(self) -> bool:
        return self.regime_reached and self.bound_holds

    def to_dict(self) -> dict:
        return {
            "norm": self.norm,
            "window": list(self.window),
            "fitted_exponent": self.fitted,
            "confidence_width": self.width,
            "predicted_exponent": self.predicted,
            "predicted_form": self.predicted_form,
            "relative_error": self.relative_error,
            "tolerance": self.tolerance,
            "regime_reached": self.regime_reached,
            "bound_holds": self.bound_holds,
            "B_fit": self.B_fit,
            "eps_bounds": self.eps_bounds,
            "passed": self.passed,
            "note": self.note,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "norm"])
        for t, v in self.table:
            wr.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()


def _select(times: np.ndarray, window: tuple[float, float], max_samples: int) -> np.ndarray:
    t0, t1 = window
    inside = np.flatnonzero((times >= t0 * (1 - 1e-12)) & (times <= t1 * (1 + 1e-12)) & (times > 0))
    if len(inside) <= max_samples:
        return inside
    targets = np.geomspace(times[inside[0]], times[inside[-1]], max_samples)
    pick = np.unique([inside[np.argmin(np.abs(times[inside] - tt))] for tt in targets])
    return pick


def fit_decay(
    traj: Trajectory,
    norm: str = "linf",
    window: tuple[float, float] | None = None,
    m: float | None = None,
    predicted: float | None = None,
    tolerance: float = 0.2,
    max_samples: int = 32,
    gamma: float | None = None,
    floor: float = 1e-13,
) -> DecayFitReport:
    """Fit ln(norm) = a + s ln(t) over ``window`` (default [T/10, T]).

    The default prediction is the zero-mean rate -1/(m-1).  ``B_fit`` is
    the largest B for which norm(t) <= (B t + norm(0)^(-(m-1)))^(-1/(m-1))
    at every sample in the window.  ``gamma`` (default: closed-manifold gamma
    for p = 2) sets the exponents of the eps-weighted bounds in
    ``eps_bounds``, reported for eps in {0.1, 0.5, 0.9} with fitted prefactors.
    """
    key = _NORM_KEYS.get(norm)
    if key is None:
        raise ValueError(f"unknown norm selector {norm!r}")
    times = np.asarray(traj.times, dtype=float)
    vals = np.asarray(traj.diagnostics[key], dtype=float)
    if m is None:
        if traj.config is None:
            raise ValueError("m required for trajectories without a config")
        m = traj.config.m
    if window is None:
        T = times[-1]
        window = (T / 10.0, T)
    window = (float(window[0]), float(window[1]))
    if not 0 < window[0] < window[1] or window[0] > times[-1]:
        raise DecayWindowError(f"window {window} outside trajectory range (0, {times[-1]}]")
    idx = _select(times, window, max_samples)
    if len(idx) < 8:
        raise DecayWindowError(f"need >= 8 samples in window {window}, found {len(idx)}")
    tt, vv = times[idx], vals[idx]
    if np.any(vv <= floor * max(vals[0], 1e-300)):
        ok = tt[vv > floor * max(vals[0], 1e-300)]
        hint = f"; shrink the window to end before t = {ok[-1]:g}" if len(ok) else ""
        raise DecayWindowError(f"norm {norm!r} reaches round-off inside the window{hint}")
    if m == 1:
        pred_default, form = math.nan, "exponential (no algebraic prediction for m = 1)"
    else:
        pred_default, form = -1.0 / (m - 1.0), "(B t + ||u0||^-(m-1))^(-1/(m-1))"
    pred = pred_default if predicted is None else float(predicted)
    if not math.isfinite(pred):
        raise ValueError("an explicit prediction is required for m = 1")
    lt, lv = np.log(tt), np.log(vv)
    if np.ptp(lv) == 0 and np.allclose(lv, lv[0]):
        fitted, width = 0.0, 0.0
    else:
        res = stats.linregress(lt, lv)
        fitted = float(res.slope)
        width = float(stats.t.ppf(0.975, len(tt) - 2) * res.stderr)
    regime = abs(fitted - pred) <= tolerance * abs(pred)
    # one-sided bound with the largest admissible B
    B_fit, bound_ok = math.nan, False
    eps_bounds: dict = {}
    if m > 1:
        v0 = vals[0]
        cand = (vv ** (-(m - 1)) - v0 ** (-(m - 1))) / tt
        B_fit = float(cand.min())
        if B_fit > 0:
            bound = (B_fit * tt + v0 ** (-(m - 1))) ** (-1.0 / (m - 1))
            bound_ok = bool(np.all(vv <= bound * (1 + 1e-12)))
            if gamma is None and traj.spec is not None:
                gamma = (2.0 / (1.0 + m)) ** (traj.spec.dim / (2.0 * _sigma_of(traj)))
            u0p = _initial_norm(traj, 2.0)
            if gamma is not None and u0p is not None:
                for eps in EPS_GRID:
                    rate = gamma * (1 - eps) / (m - 1)
                    later = tt > 1.0
                    if not later.any():
                        continue
                    C = float(np.max(vv[later] * (B_fit * (tt[later] - 1.0)) ** rate / u0p ** (eps * gamma)))
                    eps_bounds[str(eps)] = {"decay_exponent": -rate, "C_fit": C}
    return DecayFitReport(
        norm, window, fitted, width, pred, form, tolerance, bool(regime), bound_ok, B_fit,
        np.column_stack([tt, vv]), eps_bounds,
    )


def _sigma_of(traj: Trajectory) -> float:
    return traj.config.frac.sigma if traj.config is not None else 0.5


def _initial_norm(traj: Trajectory, p: float) -> float | None:
    """||u0||_p from the first recorded field or the diagnostics; None if unavailable."""
    if traj.fields:
        return lp_norm(traj.fields[0], p)
    key = {1.0: "l1", 2.0: "l2"}.get(float(p))
    if key is None or key not in traj.diagnostics:
        return None
    return float(traj.diagnostics[key][0])


@dataclass
class SmoothingBoundReport:
    form: str
    p: float
    alpha: float
    gamma: float
    E: float
    times: np.ndarray
    ratios: np.ndarray
    note: str = ""

    @property
    def sup_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios)))

    def to_dict(self) -> dict:
        return {"form": self.form, "p": self.p, "alpha": self.alpha, "gamma": self.gamma, "E": self.E,
                "sup_ratio": self.sup_ratio, "finite": self.finite, "note": self.note}


def smoothing_bound_check(
    traj: Trajectory,
    p: float = 2.0,
    exponents: tuple[float, float] | None = None,
    form: str = "noncompact",
    E: float = 0.0,
) -> SmoothingBoundReport:
    """sup_t ||u(t)||_inf t^alpha / ||u0||_p^gamma (noncompact form).

    The closed form divides additionally by exp(E ||u0||_{m0}^(m-1) t),
    m0 = max(m-1, 1), with E = 4 m M1/M0 supplied by the caller.  Default
    exponents are the non-compact (alpha, gamma); on a torus this is a
    heuristic proxy and is labelled as such.
    """
    cfg = traj.config
    if cfg is None:
        raise ValueError("trajectory without config")
    if cfg.frac.omega != 0:
        raise ValueError("smoothing bounds apply to omega = 0 runs")
    if form not in ("noncompact", "closed"):
        raise ValueError("form must be 'noncompact' or 'closed'")
    m, n = cfg.m, traj.spec.dim
    if exponents is None:
        exponents = smoothing_exponents_noncompact(p, cfg.frac.sigma, m, n)
    alpha, gamma = exponents
    t = np.asarray(traj.times)
    sel = t > 0
    t = t[sel]
    linf = np.asarray(traj.diagnostics["linf"])[sel]
    u0p = lp_norm(traj.fields[0], p)
    if u0p == 0:
        return SmoothingBoundReport(form, p, alpha, gamma, E, t, np.zeros_like(t))
    ratios = linf * t**alpha / u0p**gamma
    note = "non-compact exponents evaluated on a torus (heuristic proxy)" if form == "noncompact" else ""
    if form == "closed":
        m0 = max(m - 1.0, 1.0)
        ratios = ratios * np.exp(-E * lp_norm(traj.fields[0], m0) ** (m - 1) * t)
    return SmoothingBoundReport(form, p, alpha, gamma, E, t, ratios, note)


@dataclass
class ConvergenceReport:
    q: float
    mean0: float
    times: np.ndarray
    distances: np.ndarray
    mean_drift: float
    monotone: bool
    final_ratio: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.monotone and self.final_ratio <= self.tolerance and self.mean_drift <= 1e-9

    def to_dict(self) -> dict:
        return {"q": self.q, "mean0": self.mean0, "final_ratio": self.final_ratio, "tolerance": self.tolerance,
                "monotone": self.monotone, "mean_drift": self.mean_drift, "passed": self.passed,
                "distances": self.distances.tolist(), "times": self.times.tolist()}


def convergence_to_mean(traj: Trajectory, q: float = 1.0, tolerance: float = 1e-3) -> ConvergenceReport:
    """||u(t) - mean(u0)||_q at the recorded times.

    Passes when the distance is non-increasing, the final distance is at most
    ``tolerance`` times the initial one, and the mean is conserved.
    """
    if not 1 <= q < math.inf:
        raise ValueError("q must lie in [1, inf)")
    if traj.config is not None and traj.config.frac.omega != 0:
        raise ValueError("convergence to the mean applies to omega = 0 runs")
    if not traj.fields:
        raise ValueError("trajectory has no recorded fields")
    c = float(traj.fields[0].values.mean())
    d = np.array([lp_norm(f.values - c, q, traj.spec) for f in traj.fields])
    drift = float(max(abs(f.values.mean() - c) for f in traj.fields))
    mono = bool(np.all(np.diff(d) <= 1e-12 * max(d[0], 1e-300)))
    ratio = 0.0 if d[0] == 0 else float(d[-1] / d[0])
    return ConvergenceReport(float(q), c, np.asarray(traj.record_times), d, drift, mono, ratio, tolerance)
