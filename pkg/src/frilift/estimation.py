"""Pole, amplitude and time-domain recovery from a completed spectrum."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist

from ._jsonio import encode_complex
from .signals import FriModel, ModelKind, confluent_vandermonde, discrete_innovation, min_separation
from .structured import StructuredLift, lift
from .weighting import SpectralNullError, WhiteningSpec, bspline_spectrum, unweight, weight_spectrum

__all__ = [
    "PencilError",
    "PoleEstimate",
    "IncoherenceReport",
    "matrix_pencil",
    "amplitudes",
    "reconstruct_cardinal",
    "incoherence",
    "moitra_bound",
]


class PencilError(ValueError):
    """The pencil or amplitude problem is not solvable as posed."""


@dataclass(frozen=True)
class PoleEstimate:
    """Clustered eigenvalues of the shift operator.

    ``poles`` pairs each cluster centre with its size; ``t`` holds the
    matching locations ``(-arg(lam) / 2 pi) mod 1``.
    """

    poles: tuple[tuple[complex, int], ...]
    rank: int

    @property
    def t(self) -> np.ndarray:
        lam = np.array([p for p, _ in self.poles], dtype=complex)
        return np.mod(-np.angle(lam) / (2 * np.pi), 1.0)

    @property
    def multiplicities(self) -> list[int]:
        return [m for _, m in self.poles]

    def to_dict(self) -> dict:
        return {
            "poles": encode_complex([p for p, _ in self.poles]),
            "multiplicities": self.multiplicities,
            "t": [float(v) for v in self.t],
            "rank": self.rank,
        }


def _cluster(eigs: np.ndarray, radius: float) -> list[tuple[complex, int]]:
    if eigs.size == 1:
        return [(complex(eigs[0]), 1)]
    pts = np.column_stack([eigs.real, eigs.imag])
    labels = fcluster(linkage(pdist(pts), method="single"), t=radius, criterion="distance")
    out = []
    for lab in np.unique(labels):
        members = eigs[labels == lab]
        out.append((complex(members.mean()), int(members.size)))
    out.sort(key=lambda p: float(np.mod(-np.angle(p[0]) / (2 * np.pi), 1.0)))
    return out


def matrix_pencil(
    spectrum,
    lift_: StructuredLift,
    r: int,
    cluster_radius: float = 1e-4,
    project_to_circle: bool = False,
    max_cond: float = 1e12,
) -> PoleEstimate:
    """Estimate ``r`` poles from the column space of the lifted spectrum.

    ``W`` holds the top-``r`` left singular vectors; the shift operator
    ``Phi`` solves ``W[:-1] Phi = W[1:]`` in least squares and its
    eigenvalues are the poles. Eigenvalues closer than ``cluster_radius``
    are merged into one pole whose multiplicity is the cluster size.

    Raises
    ------
    PencilError
        If ``r`` is not below both lifted dimensions or ``W[:-1]`` is
        numerically rank deficient.
    """
    n1, n2 = lift_.shape
    if r < 1:
        raise PencilError(f"rank must be positive, got {r}")
    if r >= min(n1, n2):
        raise PencilError(f"rank {r} violates the pencil bound min{lift_.shape} > r")
    H = lift(spectrum, lift_)
    U, _, _ = np.linalg.svd(H, full_matrices=False)
    W = U[:, :r]
    down, up = W[:-1], W[1:]
    sv = np.linalg.svd(down, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > max_cond:
        raise PencilError(f"shifted signal subspace is rank deficient (condition number {cond:.3g})")
    Phi, *_ = np.linalg.lstsq(down, up, rcond=None)
    eigs = np.linalg.eigvals(Phi)
    if project_to_circle:
        eigs = np.exp(1j * np.angle(eigs))
    return PoleEstimate(tuple(_cluster(eigs, cluster_radius)), r)


def _design(poles, n: int, basis: str, first_frequency: int) -> np.ndarray:
    k = np.arange(n) + first_frequency
    if basis == "confluent":
        if first_frequency != 0:
            raise ValueError("confluent basis assumes frequencies starting at 0")
        return confluent_vandermonde(poles, n)
    if basis != "derivative":
        raise ValueError(f"unknown amplitude basis {basis!r}")
    s = 2j * np.pi * k
    cols = []
    for lam, mult in poles:
        base = complex(lam) ** k
        for ell in range(int(mult)):
            cols.append(s**ell * base)
    return np.stack(cols, axis=1)


def amplitudes(
    poles,
    spectrum,
    basis: str = "derivative",
    first_frequency: int = 0,
    max_cond: float = 1e12,
) -> list[np.ndarray]:
    """Least-squares amplitudes of each pole.

    With ``basis="derivative"`` the model is ``sum_l a_l (i 2 pi k)^l lam^k``
    (the spectrum of Dirac derivatives); ``basis="confluent"`` uses the
    confluent Vandermonde columns instead.

    Returns
    -------
    list of arrays
        One array per pole, of length its multiplicity.
    """
    if isinstance(poles, PoleEstimate):
        poles = poles.poles
    spectrum = np.asarray(spectrum, dtype=complex)
    A = _design(poles, spectrum.size, basis, first_frequency)
    sv = np.linalg.svd(A, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > max_cond:
        raise PencilError(f"amplitude system is ill conditioned (condition number {cond:.3g})")
    coef, *_ = np.linalg.lstsq(A, spectrum, rcond=None)
    out, pos = [], 0
    for _, mult in poles:
        out.append(coef[pos: pos + int(mult)])
        pos += int(mult)
    return out


def reconstruct_cardinal(g, spec: WhiteningSpec, n: int, null_values: dict[int, complex] | None = None):
    """Time samples and spline coefficients from a completed weighted DFT.

    Parameters
    ----------
    g
        Completed ``l_d * x_d`` in DFT order.
    spec
        Discrete difference operator of order ``m``.
    null_values
        Measured ``x_d`` values at the spectral nulls (the DC bin).

    Returns
    -------
    x_d, c
        Integer-grid samples and the coefficients with ``x_d = c * b_L``.
    """
    if not spec.is_discrete:
        raise ValueError("cardinal reconstruction needs a discrete difference operator")
    g = np.asarray(g, dtype=complex)
    if g.shape != (n,):
        raise ValueError(f"expected a vector of length {n}, got shape {g.shape}")
    x_hat = unweight(g, weight_spectrum(spec, n), null_values)
    x_d = np.fft.ifft(x_hat)
    if spec.order == 0:
        return x_d, x_d.copy()
    b_hat = bspline_spectrum(spec.order, n)
    if np.abs(b_hat).min() < 1e-12 * np.abs(b_hat).max():
        raise SpectralNullError(f"B-spline filter of order {spec.order} vanishes on the n={n} grid")
    return x_d, np.fft.ifft(x_hat / b_hat)


def moitra_bound(n: int, delta: float) -> tuple[float | None, str | None]:
    """``(n/2) / (n/2 - 1/delta - 1)`` or ``(None, reason)`` outside its regime."""
    half = n / 2
    if not delta > 0:
        return None, "separation must be positive"
    if not half > 1 / delta + 1:
        return None, f"requires n/2 > 1/separation + 1, got n/2={half:g} and 1/separation+1={1 / delta + 1:g}"
    return half / (half - 1 / delta - 1), None


@dataclass(frozen=True)
class IncoherenceReport:
    mu_empirical: float
    mu_bound_vandermonde: float | None = None
    mu_bound_moitra: float | None = None
    moitra_reason: str | None = None
    zeta_values: tuple[float, float] | None = None
    separation: float | None = None

    def to_dict(self) -> dict:
        return {
            "mu_empirical": self.mu_empirical,
            "mu_bound_vandermonde": self.mu_bound_vandermonde,
            "mu_bound_moitra": self.mu_bound_moitra,
            "moitra_reason": self.moitra_reason,
            "zeta_values": list(self.zeta_values) if self.zeta_values is not None else None,
            "separation": self.separation,
        }


def _zeta(N: int, l_max: int) -> float:
    return N * float(math.perm(N - 1, l_max - 1)) ** 2


def _model_poles(model: FriModel, n: int):
    if model.kind is ModelKind.CARDINAL_SPLINE:
        support = np.flatnonzero(discrete_innovation(model))
        return [(np.exp(-2j * np.pi * p / n), 1) for p in support], support / n
    return model.poles, model.locations


def incoherence(spectrum, lift_: StructuredLift, r: int, model: FriModel | None = None) -> IncoherenceReport:
    """Standard incoherence of the rank-``r`` lifted spectrum and its bounds.

    The bounds need the model's poles. The Vandermonde bound uses
    numerically computed least singular values of the confluent Gram
    matrices; the closed-form separation bound only covers simple poles.
    """
    n1, n2 = lift_.shape
    if not 1 <= r <= min(n1, n2):
        raise ValueError(f"rank {r} outside [1, {min(n1, n2)}]")
    H = lift(spectrum, lift_)
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    if s[r - 1] <= 1e-10 * s[0]:
        raise ValueError(f"rank {r} exceeds the numerical rank of the lifted matrix")
    row_u = np.sum(np.abs(U[:, :r]) ** 2, axis=1).max()
    row_v = np.sum(np.abs(Vh[:r]) ** 2, axis=0).max()
    mu = max(n1 * row_u / r, n2 * row_v / r)
    if model is None:
        return IncoherenceReport(float(mu))

    poles, locs = _model_poles(model, lift_.n)
    l_max = max(m for _, m in poles)
    zetas, bounds = [], []
    for N in (n1, n2):
        V = confluent_vandermonde(poles, N)
        smin = np.linalg.svd(V.conj().T @ V, compute_uv=False)[-1]
        z = _zeta(N, l_max)
        zetas.append(z)
        bounds.append(z / smin if smin > 0 else np.inf)
    delta = min_separation(locs) if len(locs) > 1 else 1.0
    if l_max > 1:
        moitra, reason = None, "closed-form bound covers simple poles only"
    else:
        moitra, reason = moitra_bound(lift_.n, delta)
    return IncoherenceReport(
        float(mu),
        float(max(bounds)),
        moitra,
        reason,
        (float(zetas[0]), float(zetas[1])),
        float(delta),
    )
