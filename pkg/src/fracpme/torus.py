"""Flat torus backend: geometry, Laplacian eigenbasis, transforms and quadrature.

Every other module computes through this one.  Fields live on a uniform
periodic grid; coefficients are normalized so that

    f(x) = sum_k c_k exp(i k . x)      c_k = mean_grid(f exp(-i k . x))

with k_j = 2 pi n_j / L_j.  The measure is the flat volume, optionally
rescaled to total mass one (the metric, and hence the spectrum, is left
untouched by the rescaling).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ManifoldSpec",
    "Field",
    "SpectralField",
    "make_torus",
    "forward_transform",
    "inverse_transform",
    "integrate",
    "lp_norm",
    "mean",
    "inner",
    "random_field",
]

LAPLACIANS = ("spectral", "lattice")


@dataclass(frozen=True)
class ManifoldSpec:
    """Geometry of a flat torus T^n = prod_j [0, L_j) sampled on an N_1 x ... x N_n grid.

    ``laplacian`` selects the discrete Laplacian whose spectrum drives every
    operator: ``"spectral"`` uses the exact eigenvalues sum_j (2 pi n_j / L_j)^2,
    ``"lattice"`` the symbol of the second-order difference Laplacian,
    sum_j (2/h_j)^2 sin^2(pi n_j / N_j).  The lattice operator generates a
    Markov semigroup on the grid, so its fractional powers (obtained by
    subordination) keep positivity and the comparison principle exactly.
    """

    dim: int
    periods: tuple[float, ...]
    grid: tuple[int, ...]
    volume_normalized: bool = False
    laplacian: str = "spectral"

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        object.__setattr__(self, "grid", tuple(int(n) for n in self.grid))
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.periods) != self.dim or len(self.grid) != self.dim:
            raise ValueError("periods and grid must have one entry per dimension")
        if any(not np.isfinite(p) or p <= 0 for p in self.periods):
            raise ValueError(f"periods must be positive, got {self.periods}")
        if any(n < 4 or n % 2 for n in self.grid):
            raise ValueError(f"grid sizes must be even and >= 4, got {self.grid}")
        if self.laplacian not in LAPLACIANS:
            raise ValueError(f"laplacian must be one of {LAPLACIANS}, got {self.laplacian!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid

    @property
    def npoints(self) -> int:
        return int(np.prod(self.grid))

    @property
    def flat_volume(self) -> float:
        return float(np.prod(self.periods))

    @property
    def volume(self) -> float:
        """Total measure of the torus (1 when normalized)."""
        return 1.0 if self.volume_normalized else self.flat_volume

    @property
    def cell_measure(self) -> float:
        return self.volume / self.npoints

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.periods, self.grid))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer frequencies n_j per axis in FFT order (Nyquist stored as -N/2)."""
        return tuple(np.fft.fftfreq(n, 1.0 / n) for n in self.grid)

    def _symbol(self, freqs: Sequence[np.ndarray]) -> np.ndarray:
        axes = np.meshgrid(*freqs, indexing="ij", sparse=True)
        lam = 0.0
        for nj, L, N in zip(axes, self.periods, self.grid):
            if self.laplacian == "spectral":
                lam = lam + (2.0 * np.pi * nj / L) ** 2
            else:
                h = L / N
                lam = lam + (2.0 / h * np.sin(np.pi * nj / N)) ** 2
        return np.broadcast_to(lam, tuple(len(f) for f in freqs)).copy()

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Laplacian eigenvalue for every coefficient of the full FFT layout."""
        lam = self._symbol(self.wavenumbers)
        lam.setflags(write=False)
        return lam

    @cached_property
    def eigenvalues_r(self) -> np.ndarray:
        """Eigenvalues in the half-spectrum layout used by ``numpy.fft.rfftn``."""
        freqs = list(self.wavenumbers)
        freqs[-1] = np.arange(self.grid[-1] // 2 + 1, dtype=float)
        lam = self._symbol(freqs)
        lam.setflags(write=False)
        return lam

    def eigenvalue(self, k: Sequence[int]) -> float:
        """Eigenvalue attached to the integer frequency vector ``k``."""
        k = np.asarray(k, dtype=float).reshape(self.dim)
        return float(self._symbol([np.array([kj]) for kj in k]).ravel()[0])

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Grid coordinates, one broadcastable array per axis."""
        axes = [L * np.arange(n) / n for L, n in zip(self.periods, self.grid)]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "periods": list(self.periods),
            "grid": list(self.grid),
            "volume_normalized": self.volume_normalized,
            "laplacian": self.laplacian,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifoldSpec":
        return cls(
            dim=int(d["dim"]),
            periods=tuple(d["periods"]),
            grid=tuple(d["grid"]),
            volume_normalized=bool(d.get("volume_normalized", False)),
            laplacian=d.get("laplacian", "spectral"),
        )


def make_torus(
    dim: int,
    periods: Sequence[float] | float = 2 * np.pi,
    grid: Sequence[int] | int = 32,
    volume_normalized: bool = False,
    laplacian: str = "spectral",
) -> ManifoldSpec:
    """Build a validated torus spec; scalar ``periods``/``grid`` are broadcast to every axis."""
    if np.isscalar(periods):
        periods = (periods,) * dim
    if np.isscalar(grid):
        grid = (grid,) * dim
    return ManifoldSpec(dim, tuple(periods), tuple(grid), volume_normalized, laplacian)


@dataclass(frozen=True, eq=False)
class Field:
    """Real scalar function sampled on the torus grid (immutable)."""

    spec: ManifoldSpec
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.size == self.spec.npoints and vals.shape != self.spec.shape:
            vals = vals.reshape(self.spec.shape)
        if vals.shape != self.spec.shape:
            raise ValueError(f"field shape {vals.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, spec: ManifoldSpec, func: Callable[..., np.ndarray]) -> "Field":
        vals = np.broadcast_to(func(*spec.coordinates), spec.shape)
        return cls(spec, vals)

    @classmethod
    def constant(cls, spec: ManifoldSpec, c: float) -> "Field":
        return cls(spec, np.full(spec.shape, float(c)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.spec, values)

    def _other(self, other):
        if isinstance(other, Field):
            if other.spec != self.spec:
                raise ValueError("fields live on different manifolds")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __rsub__(self, other):
        return self.with_values(self._other(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / self._other(other))

    def __neg__(self):
        return self.with_values(-self.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a field in full ``fftn`` layout.

    ``coeffs[idx]`` is the coefficient of the frequency vector
    ``tuple(spec.wavenumbers[j][idx[j]])``.
    """

    spec: ManifoldSpec
    coeffs: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex, copy=True)
        if c.shape != self.spec.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.spec.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def coefficient(self, k: Sequence[int]) -> complex:
        idx = tuple(int(kj) % n for kj, n in zip(k, self.spec.grid))
        return complex(self.coeffs[idx])

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        mirrored = _mirror(self.coeffs)
        scale = max(np.abs(self.coeffs).max(), 1e-300)
        return bool(np.abs(self.coeffs - np.conj(mirrored)).max() <= tol * scale)


def _mirror(c: np.ndarray) -> np.ndarray:
    """Array whose entry at k is the input entry at -k (FFT index arithmetic)."""
    out = c
    for ax in range(c.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def forward_transform(f: Field) -> SpectralField:
    """Coefficients of ``f`` in the Laplacian eigenbasis.

    The output is symmetrized to exact Hermitian symmetry, which in
    particular makes every self-conjugate (Nyquist) coefficient real.
    """
    vals = np.asarray(f.values)
    if vals.shape != f.spec.shape:
        raise ValueError("shape mismatch with spec")
    c = np.fft.fftn(vals) / f.spec.npoints
    c = 0.5 * (c + np.conj(_mirror(c)))
    return SpectralField(f.spec, c)


def inverse_transform(c: SpectralField) -> Field:
    vals = np.fft.ifftn(np.asarray(c.coeffs)) * c.spec.npoints
    return Field(c.spec, vals.real)


def integrate(f: Field) -> float:
    """Periodic trapezoid rule: grid mean times total measure."""
    return float(np.mean(f.values) * f.spec.volume)


def mean(f: Field) -> float:
    return float(np.mean(f.values))


def lp_norm(f: Field | np.ndarray, p: float, spec: ManifoldSpec | None = None) -> float:
    """L_p norm with respect to the torus measure; ``p = inf`` gives the max norm.

    Accepts a bare grid array when ``spec`` is given.
    """
    if isinstance(f, Field):
        spec, vals = f.spec, f.values
    else:
        vals = np.asarray(f)
        if spec is None:
            raise TypeError("spec is required for raw arrays")
    if not p >= 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    a = np.abs(vals)
    top = float(a.max()) if a.size else 0.0
    if np.isinf(p):
        return top
    if top == 0.0:
        return 0.0
    return top * float(np.mean((a / top) ** p) * spec.volume) ** (1.0 / p)


def inner(f: Field, g: Field) -> float:
    return float(np.mean(f.values * g.values) * f.spec.volume)


def random_field(
    spec: ManifoldSpec,
    rng: np.random.Generator | int | None = None,
    band: int | None = None,
    decay: float = 2.0,
    amplitude: float = 1.0,
    offset: float = 0.0,
    zero_mean: bool = True,
) -> Field:
    """Band-limited Gaussian random field.

    Coefficients are complex normals damped by (1 + lambda_k)^(-decay/2) and
    cut to max_j |n_j| <= band.  The fluctuating part is scaled to sup-norm
    ``amplitude``; ``offset`` is then added (the random mean is kept only when
    ``zero_mean`` is False).
    """
    rng = np.random.default_rng(rng)
    lam = sum(
        (2.0 * np.pi * nj / L) ** 2
        for nj, L in zip(np.meshgrid(*spec.wavenumbers, indexing="ij", sparse=True), spec.periods)
    )
    c = (rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape)) * (1.0 + lam) ** (-decay / 2.0)
    if band is not None:
        mask = np.ones(spec.shape, dtype=bool)
        for nj in np.meshgrid(*spec.wavenumbers, indexing="ij", sparse=True):
            mask &= np.abs(np.broadcast_to(nj, spec.shape)) <= band
        c = np.where(mask, c, 0.0)
    vals = np.fft.ifftn(c).real
    m0 = vals.mean()
    vals = vals - m0
    top = np.abs(vals).max()
    if top > 0:
        vals = vals * (amplitude / top)
    if not zero_mean:
        vals = vals + m0 * (amplitude / top if top > 0 else 1.0)
    return Field(spec, vals + offset)
