"""Functional inequalities of fractional Sobolev type as computable checks.

All quantities are evaluated on the grid measure of the torus:

* ``D(u) = ||(-Delta)^(sigma/2) u||_2^2`` via the (spectral or lattice) symbol,
* Sobolev-Poincare ratio ``||u - ubar||_q / D^(1/2)`` with ``q = 2n/(n - 2 sigma)``,
* Nash ratio ``||w||_2^(1+2sigma/n) / (D^(1/2) ||w||_1^(2sigma/n))``, ``w = u - ubar``,
* super-Poincare ``||w||_2^2 <= r ||w||_1^2 + beta(r) D``,
* log-Sobolev ``int |u|^2 ln(|u|^2/||u||_2^2) <= (n/2sigma)(||u||_2^2 ln(1/eps) + M0 eps D + M1 eps ubar^2)``,
* Stroock-Varopoulos ``4(p-1)/p^2 ||(-Delta)^(sigma/2)(|u|^((p-2)/2) u)||_2^2 <= int |u|^(p-2) u (-Delta)^sigma u``.

The unknown constants are estimated as suprema over seeded ensembles of
band-limited Gaussian fields (``calibrate_constants``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .operators import FracParams, apply_multiplier, frac_symbol, semigroup_apply
from .torus import Field, ManifoldSpec, integrate, lp_norm, mean, random_field

__all__ = [
    "UndefinedRatioError",
    "CheckResult",
    "EnsembleSpec",
    "InequalityReport",
    "INEQUALITY_KINDS",
    "dirichlet_form",
    "sobolev_exponent",
    "sobolev_poincare_ratio",
    "nash_ratio",
    "log_sobolev_check",
    "log_sobolev_required_m0",
    "super_poincare_check",
    "beta_from_nash",
    "stroock_varopoulos_check",
    "young_functional",
    "ultracontractivity_fit",
    "make_ensemble",
    "calibrate_constants",
    "check_constants",
]

INEQUALITY_KINDS = ("sobolev-poincare", "nash", "super-poincare", "log-sobolev", "stroock-varopoulos")


class UndefinedRatioError(ValueError):
    """The ratio has a vanishing denominator (e.g. a constant field)."""


@dataclass(frozen=True)
class CheckResult:
    """Both sides of an inequality ``lhs <= rhs``.

    ``slack`` follows the sign convention of the individual check (documented
    there); ``margin = rhs - lhs`` is positive whenever the inequality holds.
    """

    lhs: float
    rhs: float
    slack: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def __bool__(self) -> bool:
        return self.passed


# -- building blocks ------------------------------------------------------


def dirichlet_form(u: Field, sigma: float) -> float:
    """D(u) = ||(-Delta)^(sigma/2) u||_2^2 = vol * sum_k lambda_k^sigma |c_k|^2."""
    c = np.fft.rfftn(u.values) / u.spec.npoints
    w = np.full(c.shape, 2.0)
    w[..., 0] = 1.0
    n_last = u.spec.shape[-1]
    w[..., n_last // 2] = 1.0
    return float(u.spec.volume * np.sum(w * frac_symbol(u.spec, sigma) * np.abs(c) ** 2))


def sobolev_exponent(n: int, sigma: float) -> float:
    """q = 2n/(n - 2 sigma); requires n > 2 sigma."""
    if not n > 2 * sigma:
        raise ValueError(f"Sobolev exponent requires n > 2 sigma (n={n}, sigma={sigma})")
    return 2.0 * n / (n - 2.0 * sigma)


def _denominator(u: Field, sigma: float) -> float:
    d = dirichlet_form(u, sigma)
    scale = float(np.mean(u.values**2)) * u.spec.volume
    if not d > 1e-24 * max(scale, 1e-300):
        raise UndefinedRatioError("ratio undefined: (-Delta)^(sigma/2) u vanishes (constant field)")
    return d


def _centered(u: Field, centered: bool) -> np.ndarray:
    return u.values - u.values.mean() if centered else u.values


def sobolev_poincare_ratio(u: Field, sigma: float, centered: bool = True) -> float:
    """||u - ubar||_q / ||(-Delta)^(sigma/2) u||_2 with q = 2n/(n - 2 sigma).

    ``centered=False`` gives the variant without mean subtraction.
    """
    q = sobolev_exponent(u.spec.dim, sigma)
    d = _denominator(u, sigma)
    return lp_norm(_centered(u, centered), q, u.spec) / math.sqrt(d)


def nash_ratio(u: Field, sigma: float, centered: bool = True) -> float:
    """||w||_2^(1+2sigma/n) / (||(-Delta)^(sigma/2) u||_2 ||w||_1^(2sigma/n)), w = u - ubar."""
    n = u.spec.dim
    d = _denominator(u, sigma)
    w = _centered(u, centered)
    a = 2.0 * sigma / n
    return lp_norm(w, 2, u.spec) ** (1 + a) / (math.sqrt(d) * lp_norm(w, 1, u.spec) ** a)


def _log_sobolev_lhs(u: Field) -> tuple[float, float]:
    x = u.values
    b = lp_norm(x, 2, u.spec) ** 2
    if b == 0:
        raise ValueError("log-Sobolev check undefined for the zero field")
    s = x * x / b
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(s > 0, s * np.log(s), 0.0)
    return float(b * integrand.mean() * u.spec.volume), b


def log_sobolev_check(u: Field, sigma: float, eps: float, M0: float, M1: float, tol: float = 1e-12) -> CheckResult:
    """Log-Sobolev inequality at one eps; ``slack = lhs - rhs`` (negative = holds).

    x^2 ln x^2 is extended by 0 at x = 0.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = u.spec.dim
    lhs, b = _log_sobolev_lhs(u)
    d = dirichlet_form(u, sigma)
    ubar = mean(u)
    rhs = (n / (2.0 * sigma)) * (b * math.log(1.0 / eps) + M0 * eps * d + M1 * eps * ubar**2)
    slack = lhs - rhs
    scale = max(abs(lhs), abs(rhs), b)
    return CheckResult(lhs, rhs, slack, bool(slack <= tol * scale))


def log_sobolev_required_m0(u: Field, sigma: float, M1: float) -> float:
    """Smallest M0 >= 0 such that the log-Sobolev check holds for every eps > 0.

    With a = (2sigma/n) lhs, b = ||u||_2^2 and K = M0 D + M1 ubar^2, the worst
    eps is b/K and the condition reduces to K >= b exp(a/b - 1).
    Returns inf when D = 0 and the mean term alone is insufficient.
    """
    n = u.spec.dim
    lhs, b = _log_sobolev_lhs(u)
    a = (2.0 * sigma / n) * lhs
    need = b * math.exp(a / b - 1.0) - M1 * mean(u) ** 2
    if need <= 0:
        return 0.0
    d = dirichlet_form(u, sigma)
    if d <= 1e-24 * b:
        return math.inf
    return need / d


def super_poincare_check(u: Field, sigma: float, r: float, beta_r: float, tol: float = 1e-12) -> CheckResult:
    """||w||_2^2 <= r ||w||_1^2 + beta(r) D(u); ``slack = rhs - lhs``."""
    if not r > 0 or not beta_r > 0:
        raise ValueError("r and beta(r) must be positive")
    w = u.values - u.values.mean()
    lhs = lp_norm(w, 2, u.spec) ** 2
    rhs = r * lp_norm(w, 1, u.spec) ** 2 + beta_r * dirichlet_form(u, sigma)
    slack = rhs - lhs
    return CheckResult(lhs, rhs, slack, bool(slack >= -tol * max(lhs, rhs)))


def beta_from_nash(r, nash_constant: float, n: int, sigma: float):
    """beta(r) = theta C^2 ((1 - theta)/r)^(2sigma/n), theta = n/(n + 2sigma).

    Weighted Young splitting of the squared Nash inequality; with C at least the
    Nash ratio of u, the super-Poincare check of u holds for every r > 0.
    """
    theta = n / (n + 2.0 * sigma)
    r = np.asarray(r, dtype=float)
    out = theta * nash_constant**2 * ((1 - theta) / r) ** (2.0 * sigma / n)
    return float(out) if out.ndim == 0 else out


def stroock_varopoulos_check(u: Field, p: float, sigma: float, tol: float = 1e-8) -> CheckResult:
    """4(p-1)/p^2 ||(-Delta)^(sigma/2)(|u|^((p-2)/2) u)||^2 <= int |u|^(p-2) u (-Delta)^sigma u.

    ``slack = rhs - lhs``; passes when slack >= -tol * max(|lhs|, |rhs|).
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    x = u.values
    g = np.sign(x) * np.abs(x) ** (p / 2.0)
    lhs = 4.0 * (p - 1.0) / p**2 * dirichlet_form(Field(u.spec, g), sigma)
    lu = apply_multiplier(u, frac_symbol(u.spec, sigma)).values
    rhs = float(np.mean(np.sign(x) * np.abs(x) ** (p - 1.0) * lu) * u.spec.volume)
    slack = rhs - lhs
    return CheckResult(lhs, rhs, slack, bool(slack >= -tol * max(abs(lhs), abs(rhs))))


def young_functional(u: Field | np.ndarray, r: float, spec: ManifoldSpec | None = None) -> float:
    """J(r, u) = int ln(|u|/||u||_r) |u|^r / ||u||_r^r (0 ln 0 := 0)."""
    if not r >= 1:
        raise ValueError("r must be >= 1")
    if isinstance(u, Field):
        spec, x = u.spec, u.values
    else:
        x = np.asarray(u, dtype=float)
    if spec is None:
        raise ValueError("spec required for raw arrays")
    nr = lp_norm(x, r, spec)
    if nr == 0:
        raise ValueError("Young functional undefined for the zero field")
    s = np.abs(x) / nr
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(s > 0, np.log(s) * s**r, 0.0)
    return float(integrand.mean() * spec.volume)


# -- ensembles and reports ------------------------------------------------


@dataclass(frozen=True)
class EnsembleSpec:
    """Seeded ensemble of band-limited Gaussian fields.

    Member i is drawn from ``default_rng([seed, i])`` so members are
    reproducible individually and independent of ensemble size.
    ``mean_scale`` > 0 adds a N(0, mean_scale^2) constant to each member;
    ``positive`` replaces members by their absolute value.
    """

    spec: ManifoldSpec
    count: int = 1000
    seed: int = 0
    band: int | None = 4
    decay: float = 2.0
    mean_scale: float = 0.0
    positive: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("ensemble count must be >= 1")

    def member(self, i: int) -> Field:
        rng = np.random.default_rng([self.seed, i])
        f = random_field(self.spec, rng, band=self.band, decay=self.decay)
        off = self.mean_scale * rng.standard_normal() if self.mean_scale > 0 else 0.0
        vals = f.values + off
        if self.positive:
            vals = np.abs(vals)
        return Field(self.spec, vals)

    def doubled(self) -> "EnsembleSpec":
        return EnsembleSpec(self.spec, 2 * self.count, self.seed, self.band, self.decay, self.mean_scale, self.positive)

    def fresh(self, seed: int) -> "EnsembleSpec":
        return EnsembleSpec(self.spec, self.count, seed, self.band, self.decay, self.mean_scale, self.positive)

    def describe(self) -> dict:
        return {
            "count": self.count,
            "seed": self.seed,
            "band": self.band,
            "decay": self.decay,
            "mean_scale": self.mean_scale,
            "positive": self.positive,
            "manifold": self.spec.to_dict(),
        }


def make_ensemble(spec: ManifoldSpec, count: int, seed: int, **kw) -> list[Field]:
    ens = EnsembleSpec(spec, count, seed, **kw)
    return [ens.member(i) for i in range(count)]


@dataclass
class InequalityReport:
    """Outcome of evaluating one inequality over an ensemble.

    ``ratios`` holds one value per member (ordered by member index, which is
    also the seed order); for every kind a value <= ``constant`` means the
    member satisfies the inequality with the reported constant.
    ``passed`` is None when the check lies outside the hypotheses of the
    underlying estimate (dimension <= 2) or is disabled.
    """

    kind: str
    ensemble: dict
    sigma: float
    constant: float
    worst_ratio: float
    ratios: np.ndarray
    violations: list[int] = dc_field(default_factory=list)
    within_hypotheses: bool = True
    disabled: bool = False
    note: str = ""
    extra: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        if self.disabled or not self.within_hypotheses:
            return None
        return len(self.violations) == 0

    @property
    def violation_rate(self) -> float:
        return len(self.violations) / max(len(self.ratios), 1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "ensemble": self.ensemble,
            "constant": _jsonable(self.constant),
            "worst_ratio": _jsonable(self.worst_ratio),
            "violations": list(self.violations),
            "violation_rate": self.violation_rate,
            "passed": self.passed,
            "within_hypotheses": self.within_hypotheses,
            "disabled": self.disabled,
            "note": self.note,
            "extra": {k: _jsonable(v) for k, v in self.extra.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["member", "ratio", "violation"])
        bad = set(self.violations)
        for i, r in enumerate(self.ratios):
            wr.writerow([i, repr(float(r)), int(i in bad)])
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


DEFAULT_R_GRID = tuple(np.geomspace(1e-3, 10.0, 17))
DEFAULT_EPS_GRID = tuple(np.geomspace(1e-6, 1.0, 25))
SV_EXPONENTS = (1.5, 2.0, 3.0, 4.0)


def _member_quantities(f: Field, sigma: float, kinds: Sequence[str], M1: float, r_grid, p_list) -> dict:
    out: dict = {}
    n = f.spec.dim
    w = f.values - f.values.mean()
    d = dirichlet_form(f, sigma)
    degenerate = d <= 1e-24 * max(float(np.mean(f.values**2)) * f.spec.volume, 1e-300)
    if "sobolev-poincare" in kinds and n > 2 * sigma:
        out["sobolev-poincare"] = math.nan if degenerate else sobolev_poincare_ratio(f, sigma)
    if "nash" in kinds:
        out["nash"] = math.nan if degenerate else nash_ratio(f, sigma)
    if "super-poincare" in kinds:
        l2 = lp_norm(w, 2, f.spec) ** 2
        l1 = lp_norm(w, 1, f.spec) ** 2
        r = np.asarray(r_grid)
        out["super-poincare"] = np.full(r.shape, math.nan) if degenerate else np.maximum(l2 - r * l1, 0.0) / d
    if "log-sobolev" in kinds:
        out["log-sobolev"] = log_sobolev_required_m0(f, sigma, M1)
    if "stroock-varopoulos" in kinds:
        res = [stroock_varopoulos_check(f, p, sigma) for p in p_list]
        out["stroock-varopoulos"] = res
    return out


def _evaluate(ens: EnsembleSpec, sigma: float, kinds, M1, r_grid, p_list, threads: int) -> list[dict]:
    def work(i):
        return _member_quantities(ens.member(i), sigma, kinds, M1, r_grid, p_list)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(ens.count)))
    return [work(i) for i in range(ens.count)]


def _hypotheses(spec: ManifoldSpec, sigma: float) -> tuple[bool, bool, str]:
    """(within_hypotheses, sobolev_disabled, note)."""
    n = spec.dim
    disabled = not n > 2 * sigma
    if n > 2:
        return True, disabled, ""
    note = (f"dimension {n} <= 2: ratios evaluated but the closed-manifold estimates assume n > 2; "
            "reported without pass/fail")
    if disabled:
        note += f"; Sobolev exponent undefined for n = {n}, sigma = {sigma} (needs n > 2 sigma)"
    return False, disabled, note


def _build_reports(ens, sigma, kinds, rows, constants, M1, r_grid, p_list, calibrated: bool) -> dict[str, InequalityReport]:
    within, sob_disabled, note = _hypotheses(ens.spec, sigma)
    desc = ens.describe()
    reports: dict[str, InequalityReport] = {}
    idx = np.arange(ens.count)
    for kind in kinds:
        if kind == "sobolev-poincare" and sob_disabled:
            reports[kind] = InequalityReport(kind, desc, sigma, math.nan, math.nan, np.array([]),
                                             within_hypotheses=within, disabled=True,
                                             note=note or "Sobolev exponent undefined (n <= 2 sigma)")
            continue
        if kind in ("sobolev-poincare", "nash"):
            vals = np.array([r[kind] for r in rows], dtype=float)
            ok = np.isfinite(vals)
            if not ok.any():
                raise ValueError("degenerate ensemble: every member is constant")
            const = float(np.nanmax(vals)) if calibrated else float(constants[kind])
            viol = [int(i) for i in idx[ok & (vals > const * (1 + 1e-12))]]
            reports[kind] = InequalityReport(kind, desc, sigma, const, float(np.nanmax(vals)), vals, viol,
                                             within, note=note)
        elif kind == "super-poincare":
            req = np.array([r[kind] for r in rows], dtype=float)  # members x r-grid
            if not np.isfinite(req).any():
                raise ValueError("degenerate ensemble: every member is constant")
            beta_cal = np.nanmax(req, axis=0)
            beta = beta_cal if calibrated else np.asarray(constants[kind], dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(beta > 0, req / beta, np.where(req > 0, np.inf, 0.0))
            per_member = np.nanmax(rel, axis=1)
            viol = [int(i) for i in idx[np.isfinite(per_member) & (per_member > 1 + 1e-12)]]
            nonincreasing = bool(np.all(np.diff(beta_cal) <= 1e-15 * np.abs(beta_cal[:-1])))
            nash_vals = np.array([r["nash"] for r in rows], dtype=float) if "nash" in rows[0] else None
            extra = {"r_grid": list(r_grid), "beta": list(beta), "beta_nonincreasing": nonincreasing}
            if nash_vals is not None:
                cn = float(np.nanmax(nash_vals))
                extra["beta_from_nash"] = list(beta_from_nash(np.asarray(r_grid), cn, ens.spec.dim, sigma))
            reports[kind] = InequalityReport(kind, desc, sigma, float(beta[0]), float(np.nanmax(per_member)),
                                             per_member, viol, within, note=note, extra=extra)
        elif kind == "log-sobolev":
            vals = np.array([r[kind] for r in rows], dtype=float)
            const = float(np.max(vals)) if calibrated else float(constants[kind])
            viol = [int(i) for i in idx[vals > const * (1 + 1e-12) + 1e-300]]
            reports[kind] = InequalityReport(kind, desc, sigma, const, float(np.max(vals)), vals, viol, within,
                                             note=note, extra={"M1": M1, "constant_name": "M0"})
        elif kind == "stroock-varopoulos":
            per_p = {}
            worst = np.full(ens.count, -np.inf)
            viol_set = set()
            for j, p in enumerate(p_list):
                lhs = np.array([r[kind][j].lhs for r in rows])
                rhs = np.array([r[kind][j].rhs for r in rows])
                slack = rhs - lhs
                scale = np.maximum(np.abs(lhs), np.abs(rhs))
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
                worst = np.maximum(worst, ratio)
                bad = idx[~np.array([r[kind][j].passed for r in rows])]
                viol_set.update(int(i) for i in bad)
                per_p[str(p)] = {
                    "min_relative_slack": float(np.min(slack / np.where(scale > 0, scale, 1.0))),
                    "max_ratio": float(np.max(ratio)),
                    "max_equality_defect": float(np.max(np.abs(slack) / np.where(scale > 0, scale, 1.0))),
                }
            reports[kind] = InequalityReport(kind, desc, sigma, 1.0, float(worst.max()), worst,
                                             sorted(viol_set), True, note="", extra={"per_p": per_p})
    return reports


def calibrate_constants(
    ens: EnsembleSpec,
    sigma: float,
    kinds: Iterable[str] = INEQUALITY_KINDS,
    M1: float = 1.0,
    r_grid: Sequence[float] = DEFAULT_R_GRID,
    p_list: Sequence[float] = SV_EXPONENTS,
    threads: int = 1,
    min_count: int = 100,
) -> dict[str, InequalityReport]:
    """Estimate the inequality constants as ensemble suprema.

    Returns one InequalityReport per kind; constants are chosen so that every
    member passes.  Stroock-Varopoulos has no free constant and is reported
    as a direct check (ratio lhs/rhs <= 1).
    """
    kinds = tuple(kinds)
    unknown = set(kinds) - set(INEQUALITY_KINDS)
    if unknown:
        raise ValueError(f"unknown inequality kinds: {sorted(unknown)}")
    if ens.count < min_count:
        raise ValueError(f"calibration needs at least {min_count} fields (got {ens.count})")
    need = set(kinds) | ({"nash"} if "super-poincare" in kinds else set())
    rows = _evaluate(ens, sigma, tuple(need), M1, r_grid, p_list, threads)
    reports = _build_reports(ens, sigma, kinds, rows, None, M1, r_grid, p_list, calibrated=True)
    return reports


def check_constants(
    ens: EnsembleSpec,
    sigma: float,
    constants: dict,
    M1: float = 1.0,
    r_grid: Sequence[float] = DEFAULT_R_GRID,
    p_list: Sequence[float] = SV_EXPONENTS,
    threads: int = 1,
) -> dict[str, InequalityReport]:
    """Check supplied constants (e.g. from a previous calibration) on an ensemble.

    ``constants`` maps kind -> constant (super-Poincare: beta values on r_grid).
    """
    kinds = tuple(k for k in constants if k in INEQUALITY_KINDS)
    need = set(kinds)
    rows = _evaluate(ens, sigma, tuple(need), M1, r_grid, p_list, threads)
    return _build_reports(ens, sigma, kinds, rows, constants, M1, r_grid, p_list, calibrated=False)


# -- ultracontractivity -----------------------------------------------------


def ultracontractivity_fit(
    fp: FracParams,
    ens: EnsembleSpec,
    times: Sequence[float],
    ps: Sequence[float] = (1.0, 2.0),
    threads: int = 1,
) -> InequalityReport:
    """Empirical C in ||e^{-tA} u||_inf <= C max{1, t^(-n/(2 p sigma))} ||u||_p.

    Ratios are maximized over (t, p) per member; the constant is the ensemble
    maximum.  ``extra["by_sample"]`` holds the maxima per (t, p).
    """
    times = [float(t) for t in times]
    if not times or not ps:
        raise ValueError("sample set must be nonempty")
    n = ens.spec.dim

    def work(i):
        f = ens.member(i)
        grid = np.empty((len(times), len(ps)))
        for a, t in enumerate(times):
            out = lp_norm(semigroup_apply(f, t, fp), np.inf)
            for b, p in enumerate(ps):
                env = max(1.0, t ** (-n / (2.0 * p * fp.sigma)))
                grid[a, b] = out / (env * lp_norm(f, p))
        return grid

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            grids = list(pool.map(work, range(ens.count)))
    else:
        grids = [work(i) for i in range(ens.count)]
    stack = np.array(grids)
    per_member = stack.reshape(ens.count, -1).max(axis=1)
    C = float(per_member.max())
    return InequalityReport(
        "ultracontractivity", ens.describe(), fp.sigma, C, C, per_member, [], True,
        extra={"times": times, "ps": list(ps), "by_sample": stack.max(axis=0).tolist(), "finite": math.isfinite(C)},
    )
