"""Finite-rate-of-innovation signal models and their exact Fourier samples.

All off-grid spectra are evaluated in closed form; no discretized signal is
ever transformed. Frequencies run over ``k = 0 .. n-1`` unless ``centered``
is requested.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._jsonio import (
    check_keys,
    decode_complex,
    decode_scalar,
    encode_complex,
    encode_scalar,
)
from .weighting import (
    WhiteningSpec,
    bspline_filter,
    frequency_grid,
    spectral_nulls,
    weight_spectrum,
)

__all__ = [
    "ModelKind",
    "Spike",
    "FriModel",
    "AnnihilatingFilter",
    "spectrum",
    "weighted_spectrum",
    "rect_spectrum",
    "annihilating_filter",
    "filter_from_roots",
    "annihilation_residual",
    "confluent_vandermonde",
    "min_separation",
    "numerical_rank",
    "discrete_innovation",
    "model_weight",
]


class ModelKind(str, enum.Enum):
    DIRACS = "diracs"
    DIFFERENTIATED_DIRACS = "differentiated_diracs"
    NONUNIFORM_SPLINE = "nonuniform_spline"
    PIECEWISE_POLYNOMIAL = "piecewise_polynomial"
    CARDINAL_SPLINE = "cardinal_spline"


@dataclass(frozen=True)
class Spike:
    """A location in ``[0, 1)`` with amplitudes ``a_0 .. a_{l-1}``.

    ``amplitudes[l]`` multiplies the ``l``-th derivative of the Dirac.
    """

    t: float
    amplitudes: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "amplitudes", tuple(complex(a) for a in np.atleast_1d(self.amplitudes)))
        if not 0.0 <= self.t < 1.0:
            raise ValueError(f"spike location {self.t} outside [0, 1)")
        if not self.amplitudes:
            raise ValueError("spike needs at least one amplitude")
        if self.amplitudes[-1] == 0:
            raise ValueError(f"leading amplitude of spike at t={self.t} is zero")

    @property
    def order(self) -> int:
        return len(self.amplitudes)

    @property
    def pole(self) -> complex:
        return complex(np.exp(-2j * np.pi * self.t))


@dataclass(frozen=True)
class FriModel:
    """Continuous-domain FRI signal.

    Parameters
    ----------
    kind
        Signal class.
    spikes
        Innovation locations and amplitudes. For piecewise polynomials the
        amplitudes describe the ``(degree+1)``-th derivative; for cardinal
        splines they are the innovation ``a[p]`` on the grid ``t = p / grid``.
    whitening
        Continuous whitening operator of a non-uniform spline.
    degree, order, grid
        Polynomial degree ``q``, cardinal spline order ``m`` and grid size.
    dc
        Spectrum value at frequencies where the whitening response vanishes
        (the signal mean times the period).
    """

    kind: ModelKind
    spikes: tuple[Spike, ...]
    whitening: WhiteningSpec | None = None
    degree: int | None = None
    order: int | None = None
    grid: int | None = None
    dc: complex = 0.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "spikes", tuple(self.spikes))
        object.__setattr__(self, "dc", complex(self.dc))
        if not self.spikes:
            raise ValueError("model needs at least one spike")
        locs = [s.t for s in self.spikes]
        if len(set(locs)) != len(locs):
            raise ValueError("spike locations must be distinct")
        kind = self.kind
        if kind in (ModelKind.DIRACS, ModelKind.NONUNIFORM_SPLINE, ModelKind.CARDINAL_SPLINE):
            if any(s.order != 1 for s in self.spikes):
                raise ValueError(f"{kind.value} spikes carry exactly one amplitude")
        if kind is ModelKind.NONUNIFORM_SPLINE:
            if self.whitening is None or self.whitening.is_discrete:
                raise ValueError("non-uniform spline needs a continuous whitening operator")
        if kind is ModelKind.PIECEWISE_POLYNOMIAL:
            if self.degree is None or self.degree < 0:
                raise ValueError("piecewise polynomial needs a nonnegative degree")
            if any(s.order != self.degree + 1 for s in self.spikes):
                raise ValueError("piecewise polynomial spikes carry degree+1 amplitudes")
        if kind is ModelKind.CARDINAL_SPLINE:
            if self.order is None or self.order < 0 or self.grid is None or self.grid < 1:
                raise ValueError("cardinal spline needs order >= 0 and a positive grid")
            for s in self.spikes:
                p = s.t * self.grid
                if abs(p - round(p)) > 1e-9:
                    raise ValueError(f"cardinal knot t={s.t} is not on the 1/{self.grid} grid")

    @property
    def locations(self) -> np.ndarray:
        return np.array([s.t for s in self.spikes])

    @property
    def multiplicities(self) -> list[int]:
        return [s.order for s in self.spikes]

    @property
    def total_order(self) -> int:
        """Length of the minimum annihilating filter minus one."""
        if self.kind is ModelKind.CARDINAL_SPLINE:
            return int(np.count_nonzero(discrete_innovation(self)))
        return sum(self.multiplicities)

    @property
    def poles(self) -> list[tuple[complex, int]]:
        return [(s.pole, s.order) for s in self.spikes]

    @property
    def grid_indices(self) -> np.ndarray:
        if self.grid is None:
            raise ValueError("model has no grid")
        return np.rint(self.locations * self.grid).astype(int)

    def with_spikes(self, spikes) -> "FriModel":
        return FriModel(self.kind, tuple(spikes), self.whitening, self.degree, self.order, self.grid, self.dc)

    def to_dict(self) -> dict:
        doc = {
            "kind": self.kind.value,
            "spikes": [{"t": s.t, "amplitudes": encode_complex(s.amplitudes)} for s in self.spikes],
        }
        if self.whitening is not None:
            doc["whitening"] = self.whitening.to_dict()
        if self.degree is not None:
            doc["degree"] = self.degree
        if self.order is not None:
            doc["order"] = self.order
        if self.grid is not None:
            doc["grid"] = self.grid
        if self.dc != 0:
            doc["dc"] = encode_scalar(self.dc)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "FriModel":
        check_keys(
            doc,
            required={"kind", "spikes"},
            optional={"whitening", "degree", "order", "grid", "dc"},
            where="model",
        )
        spikes = []
        for i, s in enumerate(doc["spikes"]):
            check_keys(s, required={"t", "amplitudes"}, where=f"model.spikes[{i}]")
            spikes.append(Spike(float(s["t"]), tuple(decode_complex(s["amplitudes"]))))
        whitening = doc.get("whitening")
        return cls(
            ModelKind(doc["kind"]),
            tuple(spikes),
            WhiteningSpec.from_dict(whitening) if whitening is not None else None,
            doc.get("degree"),
            doc.get("order"),
            doc.get("grid"),
            decode_scalar(doc.get("dc", 0.0)),
        )


def _derivative_dirac_spectrum(spikes, k: np.ndarray) -> np.ndarray:
    s = 2j * np.pi * k
    out = np.zeros(k.shape, dtype=complex)
    for spike in spikes:
        phase = np.exp(-2j * np.pi * k * spike.t)
        poly = np.zeros(k.shape, dtype=complex)
        for a in reversed(spike.amplitudes):
            poly = poly * s + a
        out += poly * phase
    return out


def discrete_innovation(model: FriModel) -> np.ndarray:
    """Sparse sequence ``u_d = a * b_L`` (circular) of a cardinal spline."""
    if model.kind is not ModelKind.CARDINAL_SPLINE:
        raise ValueError("discrete innovation is defined for cardinal splines only")
    cached = model._cache.get("innovation")
    if cached is not None:
        return cached
    n = model.grid
    a = np.zeros(n, dtype=complex)
    for p, spike in zip(model.grid_indices, model.spikes):
        a[p % n] += spike.amplitudes[0]
    taps, offset = bspline_filter(model.order)
    u = np.zeros(n, dtype=complex)
    for j, v in enumerate(taps):
        u += v * np.roll(a, offset + j)
    u[np.abs(u) < 1e-14 * np.abs(u).max(initial=0.0)] = 0
    model._cache["innovation"] = u
    return u


def weighted_spectrum(model: FriModel, n: int, centered: bool = False) -> np.ndarray:
    """Annihilable spectrum ``l_hat * x_hat`` of a model.

    For Diracs and differentiated Diracs this is the plain spectrum.
    """
    k = frequency_grid(n, centered)
    kind = model.kind
    if kind is ModelKind.CARDINAL_SPLINE:
        if n != model.grid:
            raise ValueError(f"cardinal spline on grid {model.grid} sampled with n={n}")
        u = discrete_innovation(model)
        return np.fft.fft(u) if not centered else np.fft.fft(u)[k % n]
    return _derivative_dirac_spectrum(model.spikes, k)


def model_weight(model: FriModel, n: int, centered: bool = False) -> np.ndarray | None:
    """Whitening response matching the model class, or None for Dirac kinds."""
    kind = model.kind
    if kind is ModelKind.NONUNIFORM_SPLINE:
        return weight_spectrum(model.whitening, n, centered)
    if kind is ModelKind.PIECEWISE_POLYNOMIAL:
        return weight_spectrum(WhiteningSpec.derivative(model.degree + 1), n, centered)
    if kind is ModelKind.CARDINAL_SPLINE:
        return weight_spectrum(WhiteningSpec.difference(model.order), n, centered)
    return None


def spectrum(model: FriModel, n: int, centered: bool = False) -> np.ndarray:
    """Exact Fourier samples ``x_hat[k]`` of a model (unweighted).

    For cardinal splines this is the DFT of the integer-grid samples.
    Spectral nulls of the whitening response take the value ``model.dc``.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    z = weighted_spectrum(model, n, centered)
    l_hat = model_weight(model, n, centered)
    if l_hat is None:
        return z
    nulls = spectral_nulls(l_hat)
    k = frequency_grid(n, centered)
    for j in nulls:
        if k[j] != 0:
            raise ValueError(f"whitening response vanishes at nonzero frequency {k[j]}")
        if abs(z[j]) > 1e-9 * max(1.0, np.abs(z).max()):
            raise ValueError(
                "innovation is inconsistent with a periodic signal: "
                f"weighted spectrum is {z[j]:.3g} at the spectral null"
            )
    out = np.empty_like(z)
    ok = np.ones(n, dtype=bool)
    ok[nulls] = False
    out[ok] = z[ok] / l_hat[ok]
    out[nulls] = model.dc
    return out


def rect_spectrum(edges, f) -> np.ndarray:
    """Closed-form Fourier transform of a sum of rectangles on ``[0, 1]``.

    Parameters
    ----------
    edges
        Iterable of ``(a, b, height)`` with ``0 <= a < b <= 1``.
    f
        Integer frequencies.
    """
    f = np.asarray(f, dtype=float)
    out = np.zeros(f.shape, dtype=complex)
    nz = f != 0
    s = 2j * np.pi * f[nz]
    for a, b, h in edges:
        if not 0.0 <= a < b <= 1.0:
            if a == b:
                raise ValueError(f"degenerate rectangle [{a}, {b}]")
            raise ValueError(f"rectangle [{a}, {b}] must satisfy 0 <= a < b <= 1")
        h = complex(h)
        out[nz] += h * (np.exp(-s * a) - np.exp(-s * b)) / s
        out[~nz] += h * (b - a)
    return out


@dataclass(frozen=True)
class AnnihilatingFilter:
    """Filter ``prod_j (1 - u_j z^-1)^(l_j)`` with ``coefficients[0] == 1``."""

    coefficients: np.ndarray
    roots: tuple[tuple[complex, int], ...]

    @property
    def length(self) -> int:
        return int(self.coefficients.size)


def filter_from_roots(roots) -> AnnihilatingFilter:
    h = np.ones(1, dtype=complex)
    for u, mult in roots:
        for _ in range(int(mult)):
            h = np.convolve(h, [1.0, -complex(u)])
    return AnnihilatingFilter(h, tuple((complex(u), int(mult)) for u, mult in roots))


def annihilating_filter(model: FriModel) -> AnnihilatingFilter:
    """Minimum-length filter annihilating the model's weighted spectrum."""
    if model.kind is ModelKind.CARDINAL_SPLINE:
        n = model.grid
        support = np.flatnonzero(discrete_innovation(model))
        return filter_from_roots([(np.exp(-2j * np.pi * p / n), 1) for p in support])
    return filter_from_roots(model.poles)


def annihilation_residual(x_hat, h) -> float:
    """Largest fully-overlapping convolution output relative to ``max|x_hat|``."""
    x_hat = np.asarray(x_hat, dtype=complex)
    coeffs = h.coefficients if isinstance(h, AnnihilatingFilter) else np.asarray(h, dtype=complex)
    if x_hat.size <= coeffs.size:
        raise ValueError(f"vector of length {x_hat.size} is not longer than the filter ({coeffs.size})")
    scale = np.abs(x_hat).max()
    if scale == 0:
        return 0.0
    return float(np.abs(np.convolve(x_hat, coeffs, mode="valid")).max() / scale)


def confluent_vandermonde(poles, N: int) -> np.ndarray:
    """Confluent Vandermonde matrix with ``N`` rows.

    A pole ``lam`` of multiplicity ``l`` contributes ``l`` columns; column
    ``c`` holds the ``c``-th derivative of ``lam**k`` with respect to
    ``lam``, i.e. ``k! / (k - c)! * lam**(k - c)`` for ``k >= c``.
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    k = np.arange(N)
    cols = []
    for lam, mult in poles:
        lam = complex(lam)
        if lam == 0:
            raise ValueError("confluent Vandermonde pole must be nonzero")
        for c in range(int(mult)):
            col = np.zeros(N, dtype=complex)
            ok = k >= c
            kk = k[ok]
            falling = np.ones(kk.size)
            for j in range(c):
                falling *= kk - j
            col[ok] = falling * lam ** (kk - c)
            cols.append(col)
    return np.stack(cols, axis=1) if cols else np.zeros((N, 0), dtype=complex)


def min_separation(locations) -> float:
    """Smallest pairwise distance on the unit circle."""
    t = np.sort(np.mod(np.asarray(locations, dtype=float), 1.0))
    if t.size < 2:
        raise ValueError("minimum separation needs at least two locations")
    gaps = np.diff(np.concatenate([t, [t[0] + 1.0]]))
    return float(gaps.min())


def numerical_rank(M, eps: float = 1e-8) -> int:
    """Count singular values above ``eps * sigma_1``."""
    s = np.linalg.svd(np.asarray(M), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > eps * s[0]))

