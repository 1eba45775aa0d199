"""Named experiment configurations, one per acceptance criterion."""

from __future__ import annotations

import copy
import math

__all__ = ["PRESETS", "get_preset", "list_presets"]

TWO_PI = 2 * math.pi

_T1 = {"dim": 1, "periods": [TWO_PI], "grid": [64]}
_T3 = {"dim": 3, "periods": [TWO_PI] * 3, "grid": [16] * 3}


def _pde(m, sigma=0.5, horizon=1.0, steps=100, **kw):
    return {"m": m, "sigma": sigma, "omega": 0.0, "horizon": horizon, "steps": steps} | kw


def _random(seed, **kw):
    return {"recipe": "random", "seed": seed, "band": 4, "decay": 2.0, "amplitude": 1.0} | kw


def _matrix(ms_t1, ms_t3, sigmas_t3):
    cases = [{"manifold": _T1, "pde": {"m": m}} for m in ms_t1]
    cases += [{"manifold": _T3, "pde": {"m": m, "sigma": s}} for m in ms_t3 for s in sigmas_t3]
    return cases


PRESETS: dict[str, dict] = {
    "linear-exactness": {
        "description": "m = 1, sigma = 1/2, u0 = cos x on the circle: implicit Euler vs the exact "
                       "semigroup at T = 1 with 1024 steps, plus first-order error halving under step doubling.",
        "kind": "evolve",
        "manifold": _T1,
        "initial": {"recipe": "single-mode", "mode": [1], "amplitude": 1.0},
        "pde": _pde(1.0, 0.5, 1.0, 1024, record_times=[1.0]),
        "checks": {"linear_exactness": {"tolerance": 1e-4, "ratio_tolerance": 0.1}},
    },
    "subordination-oracle": {
        "description": "Stable-1/2 subordinator quadrature vs exp(-t|k|) for k = 1..8, t in {0.1, 1, 10}; "
                       "density mass 1.",
        "kind": "oracle-crosscheck",
        "manifold": _T1,
        "checks": {"subordination": {"max_mode": 8, "times": [0.1, 1.0, 10.0],
                                     "tolerance": 1e-6, "mass_tolerance": 1e-8}},
    },
    "operator-oracles": {
        "description": "Spectral multiplier vs Balakrishnan vs Phillips quadrature for sigma in "
                       "{0.25, 0.5, 0.75} on band-limited circle fields (default quadrature).",
        "kind": "oracle-crosscheck",
        "manifold": _T1,
        "checks": {"operators": {"sigmas": [0.25, 0.5, 0.75], "fields": 10, "band": 8, "seed": 11,
                                 "tolerance": 1e-4}},
    },
    "mass-conservation": {
        "description": "omega = 0 runs on T1 and T3, m in {1.5, 2, 3}, 1000 steps: zero-mode drift "
                       "<= 1e-12 per step and <= 1e-9 in total.",
        "kind": "evolve",
        "manifold": _T1,
        "initial": _random(21, offset=0.5),
        "pde": _pde(2.0, 0.5, 10.0, 1000),
        "matrix": _matrix([1.5, 2.0, 3.0], [1.5, 2.0, 3.0], [0.5]),
        "checks": {"mass": {"per_step": 1e-12, "total": 1e-9}},
    },
    "thm1.3-contraction": {
        "description": "L_p norms (p = 1, 2, m+1, inf) non-increasing along every trajectory of the "
                       "test matrix (T1 and T3, slow and fast diffusion, several sigma).",
        "kind": "evolve",
        "manifold": _T1,
        "initial": _random(31, offset=0.2),
        "pde": _pde(2.0, 0.5, 2.0, 100),
        "matrix": _matrix([0.5, 1.5, 2.0, 3.0], [1.5, 2.0, 3.0], [0.25, 0.75]),
        "checks": {"contraction": {"slack": 1e-8}},
    },
    "comparison-principle": {
        "description": "20 ordered pairs u0 <= v0 of random data, m = 2, T3 at 16^3: ordering "
                       "preserved at every record time.",
        "kind": "evolve",
        "manifold": _T3,
        "initial": _random(41),
        "pde": _pde(2.0, 0.5, 1.0, 50),
        "checks": {"comparison": {"pairs": 20, "seed": 41, "slack": 1e-8, "gap_amplitude": 0.5}},
    },
    "sec7.4-zero-mean-decay": {
        "description": "Zero-mean data on T3 at 16^3, m = 2, sigma = 1/2: log-log slope of "
                       "||u(t)||_inf over t in [5, 50] within 20% of -1/(m-1); one-sided bound with fitted B.",
        "kind": "decay-fit",
        "manifold": _T3,
        "initial": _random(3, band=2, amplitude=5.0),
        "pde": _pde(2.0, 0.5, 50.0, 1000),
        "checks": {"decay": {"norm": "linf", "window": [5.0, 50.0], "tolerance": 0.2}},
    },
    "thm1.5-mean-convergence": {
        "description": "u0 = 1 + perturbation, m = 2 on T3: ||u(T) - 1||_1 <= 1e-3 ||u0 - 1||_1 at T = 10, "
                       "monotone distance, conserved mean.",
        "kind": "evolve",
        "manifold": _T3,
        "initial": _random(51, amplitude=0.5, offset=1.0),
        "pde": _pde(2.0, 0.5, 10.0, 200),
        "checks": {"convergence_to_mean": {"q": 1.0, "tolerance": 1e-3}},
    },
    "inequality-suite": {
        "description": "Nash, Sobolev-Poincare, super-Poincare, log-Sobolev and Stroock-Varopoulos on "
                       "volume-normalized T3, sigma = 1/2, 1000 seeded fields; constants stable under "
                       "ensemble doubling.",
        "kind": "inequality-suite",
        "manifold": _T3 | {"volume_normalized": True},
        "checks": {"inequalities": {
            "sigma": 0.5,
            "ensemble": {"count": 1000, "seed": 7, "band": 4, "decay": 2.0, "mean_scale": 0.5},
            "stability_tolerance": 0.15,
            "fresh_seed": 8,
            "fresh_violation_rate": 0.01,
            "ultracontractivity": {"times": [0.05, 0.1, 0.3, 1.0, 3.0, 10.0], "ps": [1.0, 2.0],
                                   "ensemble": {"count": 200, "seed": 9, "band": 4, "decay": 2.0, "mean_scale": 0.5}},
        }},
    },
    "exponent-formulas": {
        "description": "Smoothing exponents (0.6, 0.4) and 8/27 exact to 1e-15; alpha(m-1) + gamma = 1 "
                       "over a 100-tuple random sweep.",
        "kind": "oracle-crosscheck",
        "manifold": _T1,
        "checks": {"exponents": {"tolerance": 1e-15, "sweep": 100, "seed": 5}},
    },
    "omega-limit": {
        "description": "omegas = [0.1, 0.05, 0.01], m = 2 on T1: sup_t ||u_h(t) - u_l(t)||_1 below "
                       "(omega_h - omega_l) ||u0||_m^m + 1e-6 (horizon T = 1).",
        "kind": "omega-limit",
        "manifold": _T1,
        "initial": _random(61, offset=0.5),
        "pde": _pde(2.0, 0.5, 1.0, 100),
        "checks": {"omega_limit": {"omegas": [0.1, 0.05, 0.01], "slack": 1e-6}},
    },
    "energy-dissipation": {
        "description": "int |u|^(m+1) non-increasing on every trajectory of the test matrix.",
        "kind": "evolve",
        "manifold": _T1,
        "initial": _random(71, offset=0.2),
        "pde": _pde(2.0, 0.5, 2.0, 100),
        "matrix": _matrix([0.5, 1.5, 2.0, 3.0], [1.5, 2.0, 3.0], [0.25, 0.75]),
        "checks": {"energy": {"slack": 1e-8}},
    },
}

for _name, _cfg in PRESETS.items():
    _cfg["name"] = _name


def get_preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def list_presets() -> list[tuple[str, str]]:
    return [(k, v["description"]) for k, v in PRESETS.items()]
