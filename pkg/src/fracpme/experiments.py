"""Experiment runners behind the command line.

An experiment configuration is a JSON-compatible dict (schema in
``config.schema.json``) with a ``kind`` selecting one of:

``evolve``            solver runs over a case matrix with conservation / contraction /
                      comparison / exactness / convergence checks
``decay-fit``         one long run followed by a power-law fit of a norm
``inequality-suite``  ensemble calibration of the functional-inequality constants
``oracle-crosscheck`` operator, subordination and exponent-formula oracles
``omega-limit``       distances between penalized solutions for a sequence of omegas

``run_experiment`` returns an ExperimentResult holding the check outcomes,
a JSON-ready report and the CSV artifacts; writing files is left to the caller.
"""

from __future__ import annotations

import copy
import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .asymptotics import (
    convergence_to_mean,
    fit_decay,
    smoothing_bound_check,
    smoothing_exponents_closed,
    smoothing_exponents_noncompact,
)
from .checkpoint import checkpoint_bytes
from .inequalities import (
    EnsembleSpec,
    _jsonable,
    calibrate_constants,
    check_constants,
    ultracontractivity_fit,
)
from .operators import (
    DEFAULT_QUADRATURE,
    SUBORDINATION_QUADRATURE,
    FracParams,
    QuadratureSpec,
    apply_frac_laplacian,
    apply_frac_laplacian_balakrishnan,
    apply_phillips,
    semigroup_apply,
    stable_half_density,
    subordinated_symbol,
)
from .solver import PMEConfig, evolve, omega_limit_study
from .torus import Field, ManifoldSpec, lp_norm, make_torus, random_field

__all__ = [
    "EXPERIMENT_KINDS",
    "CheckOutcome",
    "ExperimentResult",
    "run_experiment",
    "build_manifold",
    "build_initial",
    "build_pde",
    "expand_cases",
    "apply_seed_override",
]

EXPERIMENT_KINDS = ("evolve", "decay-fit", "inequality-suite", "oracle-crosscheck", "omega-limit")


@dataclass
class CheckOutcome:
    name: str
    passed: bool | None
    details: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": _jsonable(self.details)}


@dataclass
class ExperimentResult:
    name: str
    kind: str
    config: dict
    checks: list[CheckOutcome]
    artifacts: dict[str, str | bytes] = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def report(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "config": self.config,
            "artifacts": sorted(self.artifacts),
        }


# -- config helpers ---------------------------------------------------------


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def expand_cases(cfg: dict) -> list[dict]:
    """Base config merged with each ``matrix`` entry (or the base alone)."""
    base = {k: v for k, v in cfg.items() if k != "matrix"}
    matrix = cfg.get("matrix") or [{}]
    return [_merge(base, o) for o in matrix]


def apply_seed_override(cfg: dict, seed: int) -> dict:
    """Replace every ``seed`` entry (at any depth) by ``seed``."""

    def walk(x):
        if isinstance(x, dict):
            return {k: (seed if k == "seed" else walk(v)) for k, v in x.items()}
        if isinstance(x, list):
            return [walk(v) for v in x]
        return x

    return walk(cfg)


def build_manifold(d: dict) -> ManifoldSpec:
    return make_torus(
        int(d["dim"]),
        d.get("periods", 2 * math.pi),
        d.get("grid", 32),
        bool(d.get("volume_normalized", False)),
        d.get("laplacian", "spectral"),
    )


def build_initial(spec: ManifoldSpec, d: dict) -> Field:
    recipe = d["recipe"]
    if recipe == "constant":
        return Field.constant(spec, float(d["value"]))
    if recipe == "single-mode":
        mode = list(d["mode"]) + [0] * (spec.dim - len(d["mode"]))
        phase = sum(2 * math.pi * n / L * x for n, L, x in zip(mode, spec.periods, spec.coordinates))
        vals = float(d.get("offset", 0.0)) + float(d.get("amplitude", 1.0)) * np.cos(phase)
        return Field(spec, np.broadcast_to(vals, spec.shape))
    if recipe == "random":
        return random_field(
            spec,
            np.random.default_rng(int(d["seed"])),
            band=d.get("band"),
            decay=float(d.get("decay", 2.0)),
            amplitude=float(d.get("amplitude", 1.0)),
            offset=float(d.get("offset", 0.0)),
            zero_mean=bool(d.get("zero_mean", True)),
        )
    raise ValueError(f"unknown initial-data recipe {recipe!r}")


def build_pde(d: dict) -> PMEConfig:
    return PMEConfig.from_dict(d)


# -- evolve -----------------------------------------------------------------


def _case_label(case: dict, i: int) -> str:
    man, pde = case["manifold"], case["pde"]
    return f"case{i:02d}-T{man['dim']}-m{pde['m']:g}-s{pde['sigma']:g}"


def _evolve_case(case: dict, i: int, threads: int) -> tuple[list[CheckOutcome], dict[str, str]]:
    spec = build_manifold(case["manifold"])
    pde = build_pde(case["pde"])
    u0 = build_initial(spec, case["initial"])
    checks_cfg = case.get("checks", {})
    label = _case_label(case, i)
    traj = evolve(u0, pde)
    d = traj.diagnostics
    out: list[CheckOutcome] = []
    arts: dict[str, str | bytes] = {f"trajectory_{label}.csv": traj.csv_text()}
    if case.get("output", {}).get("checkpoint"):
        arts[f"final_{label}.ckpt"] = checkpoint_bytes(traj.final, float(traj.record_times[-1]), pde)
    out.append(_time_derivative_diagnostic(label, traj, pde))
    if "mass" in checks_cfg:
        c = checks_cfg["mass"]
        step = np.abs(np.diff(d["mean"]))
        total = float(np.max(np.abs(d["mean"] - d["mean"][0])))
        ok = step.max(initial=0.0) <= c.get("per_step", 1e-12) and total <= c.get("total", 1e-9)
        out.append(CheckOutcome(f"{label}:mass", bool(ok), {
            "max_step_drift": float(step.max(initial=0.0)), "total_drift": total, "steps": pde.steps}))
    if "contraction" in checks_cfg:
        c = checks_cfg["contraction"]
        slack = c.get("slack", 1e-8)
        inc = {k: float(np.max(np.diff(d[k]), initial=-math.inf)) for k in ("l1", "l2", "lmplus1", "linf")}
        out.append(CheckOutcome(f"{label}:contraction", all(v <= slack for v in inc.values()),
                                {"max_increase": inc, "slack": slack}))
    if "energy" in checks_cfg:
        slack = checks_cfg["energy"].get("slack", 1e-8)
        inc = float(np.max(np.diff(d["energy"]), initial=-math.inf))
        out.append(CheckOutcome(f"{label}:energy", inc <= slack, {"max_increase": inc, "slack": slack}))
    if "convergence_to_mean" in checks_cfg:
        c = checks_cfg["convergence_to_mean"]
        rep = convergence_to_mean(traj, float(c.get("q", 1.0)), float(c.get("tolerance", 1e-3)))
        out.append(CheckOutcome(f"{label}:convergence-to-mean", rep.passed, rep.to_dict()))
    if "linear_exactness" in checks_cfg:
        out.append(_linear_exactness(label, u0, pde, checks_cfg["linear_exactness"], traj))
    if "comparison" in checks_cfg:
        chk, art = _comparison(label, spec, pde, case["initial"], checks_cfg["comparison"], threads)
        out.append(chk)
        arts[f"comparison_{label}.csv"] = art
    return out, arts


def _time_derivative_diagnostic(label: str, traj, pde: PMEConfig) -> CheckOutcome:
    """Finite-difference surrogate of the time-regularity estimate, reported without pass/fail.

    sup_k t_k ||(u_k - u_(k-1))/dT||_1 against (2/|m-1|) ||u0||_1 (m != 1).
    """
    d = traj.diagnostics
    sup = float(np.max(traj.times * d["dudt_l1"]))
    details = {"sup_t_dudt_l1": sup}
    if pde.m != 1 and d["l1"][0] > 0:
        ref = 2.0 / abs(pde.m - 1.0) * float(d["l1"][0])
        details |= {"reference": ref, "ratio": sup / ref}
    return CheckOutcome(f"{label}:time-derivative", None, details)


def _linear_exactness(label, u0, pde: PMEConfig, c: dict, traj) -> CheckOutcome:
    if pde.m != 1:
        return CheckOutcome(f"{label}:linear-exactness", False, {"error": "requires m = 1"})
    exact = semigroup_apply(u0, pde.horizon, pde.frac)
    e1 = lp_norm(traj.final.values - exact.values, math.inf, u0.spec)
    fine = PMEConfig(pde.m, pde.frac, pde.horizon, 2 * pde.steps, pde.newton_tol, pde.newton_max_iter, [pde.horizon])
    e2 = lp_norm(evolve(u0, fine).final.values - exact.values, math.inf, u0.spec)
    ratio = e1 / e2 if e2 > 0 else math.inf
    tol, rtol = float(c.get("tolerance", 1e-4)), float(c.get("ratio_tolerance", 0.1))
    ok_err = e1 <= tol
    ok_rate = abs(ratio - 2.0) <= rtol * 2.0
    return CheckOutcome(f"{label}:linear-exactness", bool(ok_err and ok_rate), {
        "steps": pde.steps, "error": e1, "error_doubled_steps": e2, "ratio": ratio,
        "tolerance": tol, "error_within_tolerance": bool(ok_err), "first_order": bool(ok_rate),
        "leading_error_model": math.exp(-pde.horizon) * pde.horizon**2 / (2 * pde.steps),
    })


def _comparison(label, spec, pde: PMEConfig, init: dict, c: dict, threads: int):
    pairs, seed = int(c.get("pairs", 20)), int(c.get("seed", 0))
    slack, gap = float(c.get("slack", 1e-8)), float(c.get("gap_amplitude", 0.5))

    def one(i):
        d_lo = dict(init, recipe="random", seed=seed + 2 * i)
        d_gap = dict(init, recipe="random", seed=seed + 2 * i + 1, amplitude=gap, offset=0.0)
        u0 = build_initial(spec, d_lo)
        v0 = Field(spec, u0.values + np.abs(build_initial(spec, d_gap).values))
        a, b = evolve(u0, pde), evolve(v0, pde)
        viol = max(float(np.max(x.values - y.values)) for x, y in zip(a.fields, b.fields))
        return viol, len(a.fields)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        res = list(pool.map(one, range(pairs)))
    worst = max(r[0] for r in res)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["pair", "max_u_minus_v", "record_times"])
    for i, (v, n) in enumerate(res):
        wr.writerow([i, repr(v), n])
    return CheckOutcome(f"{label}:comparison", worst <= slack,
                        {"pairs": pairs, "worst_violation": worst, "slack": slack}), buf.getvalue()


def _run_evolve(cfg: dict, threads: int) -> tuple[list[CheckOutcome], dict[str, str]]:
    cases = expand_cases(cfg)
    checks: list[CheckOutcome] = []
    arts: dict[str, str] = {}
    inner_threads = threads if len(cases) == 1 else 1
    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(cases)))) as pool:
        results = list(pool.map(lambda ic: _evolve_case(ic[1], ic[0], inner_threads), enumerate(cases)))
    for c, a in results:
        checks.extend(c)
        arts.update(a)
    return checks, arts


# -- decay fit ----------------------------------------------------------------


def _run_decay(cfg: dict, threads: int):
    spec = build_manifold(cfg["manifold"])
    pde = build_pde(cfg["pde"])
    u0 = build_initial(spec, cfg["initial"])
    c = cfg.get("checks", {}).get("decay", {})
    traj = evolve(u0, pde)
    window = tuple(c["window"]) if "window" in c else None
    rep = fit_decay(traj, c.get("norm", "linf"), window, tolerance=float(c.get("tolerance", 0.2)))
    details = rep.to_dict()
    if pde.m > 1 and pde.frac.omega == 0:
        sb = smoothing_bound_check(traj, 2.0)
        details["smoothing_bound"] = sb.to_dict()
    checks = [CheckOutcome("decay-fit", rep.passed, details)]
    arts = {"trajectory.csv": traj.csv_text(), "decay_fit.csv": rep.to_csv()}
    return checks, arts


# -- inequality suite ----------------------------------------------------------


def _ensemble(spec: ManifoldSpec, e: dict) -> EnsembleSpec:
    return EnsembleSpec(spec, int(e.get("count", 1000)), int(e["seed"]), e.get("band", 4),
                        float(e.get("decay", 2.0)), float(e.get("mean_scale", 0.0)), bool(e.get("positive", False)))


def _rel_change(a, b) -> float:
    a, b = np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float))
    mask = (np.abs(a) > 0) & np.isfinite(a) & np.isfinite(b)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(b[mask] - a[mask]) / np.abs(a[mask])))


def _run_inequalities(cfg: dict, threads: int):
    spec = build_manifold(cfg["manifold"])
    c = cfg["checks"]["inequalities"]
    sigma = float(c["sigma"])
    ens = _ensemble(spec, c["ensemble"])
    stab_tol = float(c.get("stability_tolerance", 0.15))
    reps = calibrate_constants(ens, sigma, M1=float(c.get("M1", 1.0)), threads=threads)
    reps2 = calibrate_constants(ens.doubled(), sigma, M1=float(c.get("M1", 1.0)), threads=threads)
    checks: list[CheckOutcome] = []
    arts: dict[str, str] = {}
    fresh_seed = int(c.get("fresh_seed", ens.seed + 1))
    consts = {}
    for kind, r in reps.items():
        arts[f"inequality_{kind}.csv"] = r.to_csv()
        if r.disabled:
            checks.append(CheckOutcome(kind, None, r.to_dict()))
            continue
        if kind == "super-poincare":
            consts[kind] = r.extra["beta"]
            change = _rel_change(r.extra["beta"], reps2[kind].extra["beta"])
        elif kind == "stroock-varopoulos":
            change = 0.0
        else:
            consts[kind] = r.constant
            change = _rel_change(r.constant, reps2[kind].constant)
        details = r.to_dict() | {"doubled_constant_change": change, "stability_tolerance": stab_tol}
        ok = r.passed
        if ok is not None:
            ok = bool(ok and change <= stab_tol)
        if kind == "super-poincare" and ok is not None:
            ok = ok and bool(r.extra["beta_nonincreasing"])
        if kind == "stroock-varopoulos":
            per_p = r.extra["per_p"]
            eq = per_p.get("2.0", {}).get("max_equality_defect", 0.0)
            sv_ok = all(v["min_relative_slack"] >= -1e-8 for v in per_p.values()) and eq <= 1e-10
            ok = bool(ok and sv_ok)
        checks.append(CheckOutcome(kind, ok, details))
    fresh_max = float(c.get("fresh_violation_rate", 0.01))
    fresh = check_constants(ens.fresh(fresh_seed), sigma, consts, M1=float(c.get("M1", 1.0)), threads=threads)
    rates = {k: r.violation_rate for k, r in fresh.items()}
    within = all(r.within_hypotheses for r in fresh.values())
    checks.append(CheckOutcome("fresh-ensemble", (max(rates.values(), default=0.0) <= fresh_max) if within else None,
                               {"seed": fresh_seed, "violation_rates": rates, "max_rate": fresh_max}))
    if "ultracontractivity" in c:
        u = c["ultracontractivity"]
        fp = FracParams(sigma)
        uens = _ensemble(spec, u.get("ensemble", c["ensemble"]))
        r1 = ultracontractivity_fit(fp, uens, u["times"], u.get("ps", [1.0]), threads)
        r2 = ultracontractivity_fit(fp, uens.doubled(), u["times"], u.get("ps", [1.0]), threads)
        change = _rel_change(r1.constant, r2.constant)
        checks.append(CheckOutcome("ultracontractivity", bool(math.isfinite(r1.constant) and change <= stab_tol),
                                   r1.to_dict() | {"doubled_constant_change": change}))
    return checks, arts


# -- oracle crosscheck ------------------------------------------------------------


def _run_oracles(cfg: dict, threads: int):
    checks: list[CheckOutcome] = []
    arts: dict[str, str] = {}
    c = cfg["checks"]
    if "operators" in c:
        o = c["operators"]
        spec = build_manifold(cfg["manifold"])
        q = QuadratureSpec(**o["quadrature"]) if "quadrature" in o else DEFAULT_QUADRATURE
        tol = float(o.get("tolerance", 1e-4))
        rows = []
        worst = 0.0
        for sigma in o["sigmas"]:
            fp = FracParams(float(sigma))
            for i in range(int(o.get("fields", 10))):
                f = random_field(spec, np.random.default_rng([int(o.get("seed", 0)), i]), band=o.get("band", 8))
                a = apply_frac_laplacian(f, fp).values
                b = apply_frac_laplacian_balakrishnan(f, fp, q).values
                p = apply_phillips(f, fp, q).values
                nrm = np.sqrt(np.mean(a * a))
                errs = [float(np.sqrt(np.mean((x - y) ** 2)) / nrm) for x, y in ((a, b), (a, p), (b, p))]
                worst = max(worst, *errs)
                rows.append([sigma, i, *errs])
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["sigma", "field", "multiplier_vs_balakrishnan", "multiplier_vs_phillips", "balakrishnan_vs_phillips"])
        for r in rows:
            wr.writerow([repr(float(r[0])), r[1]] + [repr(x) for x in r[2:]])
        arts["operator_oracles.csv"] = buf.getvalue()
        checks.append(CheckOutcome("operator-oracles", worst <= tol,
                                   {"worst_relative_error": worst, "tolerance": tol, "quadrature": q.__dict__}))
    if "subordination" in c:
        s = c["subordination"]
        q = QuadratureSpec(**s["quadrature"]) if "quadrature" in s else SUBORDINATION_QUADRATURE
        ks = np.arange(1, int(s.get("max_mode", 8)) + 1, dtype=float)
        tol, mtol = float(s.get("tolerance", 1e-6)), float(s.get("mass_tolerance", 1e-8))
        r, w = q.rule()
        worst, worst_mass = 0.0, 0.0
        rows = []
        for t in s.get("times", [0.1, 1.0, 10.0]):
            vals, _ = subordinated_symbol(ks**2, float(t), q)
            rel = np.abs(vals - np.exp(-t * ks)) / np.exp(-t * ks)
            mass = float(np.sum(stable_half_density(r, float(t)) * r * w))
            worst = max(worst, float(rel.max()))
            worst_mass = max(worst_mass, abs(mass - 1.0))
            rows.extend([[t, int(k), float(e)] for k, e in zip(ks, rel)])
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "k", "relative_error"])
        for row in rows:
            wr.writerow([repr(float(row[0])), row[1], repr(row[2])])
        arts["subordination.csv"] = buf.getvalue()
        checks.append(CheckOutcome("subordination", worst <= tol and worst_mass <= mtol,
                                   {"worst_relative_error": worst, "worst_mass_error": worst_mass,
                                    "tolerance": tol, "mass_tolerance": mtol}))
    if "exponents" in c:
        e = c["exponents"]
        a, g = smoothing_exponents_noncompact(2, 0.5, 2, 3)
        gc = smoothing_exponents_closed(2, 0.5, 2, 3)
        tol = float(e.get("tolerance", 1e-15))
        exact_ok = abs(a - 0.6) <= tol and abs(g - 0.4) <= tol and abs(gc - 8 / 27) <= tol
        rng = np.random.default_rng(int(e.get("seed", 0)))
        worst_id = 0.0
        for _ in range(int(e.get("sweep", 100))):
            p, sig, m, n = rng.uniform(2, 10), rng.uniform(0.01, 0.99), rng.uniform(1.001, 5), int(rng.integers(1, 4))
            al, ga = smoothing_exponents_noncompact(p, sig, m, n)
            worst_id = max(worst_id, abs(al * (m - 1) + ga - 1))
        checks.append(CheckOutcome("exponent-formulas", bool(exact_ok and worst_id <= 1e-12), {
            "alpha": a, "gamma": g, "gamma_closed": gc, "identity_max_defect": worst_id, "tolerance": tol}))
    return checks, arts


# -- omega limit --------------------------------------------------------------


def _run_omega(cfg: dict, threads: int):
    spec = build_manifold(cfg["manifold"])
    pde = build_pde(cfg["pde"])
    u0 = build_initial(spec, cfg["initial"])
    c = cfg["checks"]["omega_limit"]
    rep = omega_limit_study(u0, pde, c["omegas"], float(c.get("slack", 1e-6)), threads)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["omega_h", "omega_l", "sup_distance", "bound"])
    for p in rep.pairs:
        wr.writerow([repr(p["omega_h"]), repr(p["omega_l"]), repr(p["sup_distance"]), repr(p["bound"])])
    return [CheckOutcome("omega-limit", rep.passed, rep.to_dict())], {"omega_limit.csv": buf.getvalue()}


_RUNNERS = {
    "evolve": _run_evolve,
    "decay-fit": _run_decay,
    "inequality-suite": _run_inequalities,
    "oracle-crosscheck": _run_oracles,
    "omega-limit": _run_omega,
}


def run_experiment(cfg: dict, threads: int = 1) -> ExperimentResult:
    """Run a validated experiment configuration."""
    kind = cfg["kind"]
    if kind not in _RUNNERS:
        raise ValueError(f"unknown experiment kind {kind!r}")
    checks, arts = _RUNNERS[kind](cfg, max(1, int(threads)))
    return ExperimentResult(cfg.get("name", kind), kind, cfg, checks, arts)
