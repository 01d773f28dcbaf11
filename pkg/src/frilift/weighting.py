"""Spectral weights of whitening operators.

A whitening operator turns a spline into a sparse innovation. In the
Fourier domain it acts by element-wise multiplication, so a weighted
spectrum ``l_hat * x_hat`` is annihilable even when ``x_hat`` is not.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._jsonio import check_keys, decode_complex, encode_complex

__all__ = [
    "WhiteningKind",
    "WhiteningSpec",
    "SpectralNullError",
    "frequency_grid",
    "weight_spectrum",
    "apply_weight",
    "unweight",
    "spectral_nulls",
    "bspline_filter",
    "bspline_spectrum",
]


class SpectralNullError(ValueError):
    """A spectral null of the weight has no measured value."""


class WhiteningKind(str, enum.Enum):
    CONTINUOUS_DIFFERENTIAL = "continuous_differential"
    DISCRETE_DIFFERENCE = "discrete_difference"
    POWER_OF_DERIVATIVE = "power_of_derivative"


@dataclass(frozen=True)
class WhiteningSpec:
    """Whitening operator description.

    ``coeffs`` holds ``b_0 .. b_K`` of ``sum_k b_k d^k/dt^k`` for the
    continuous differential kind; ``order`` is the spline order ``m`` of the
    discrete difference ``(1 - e^{-iw})^(m+1)``; ``power`` is ``p`` in
    ``(i 2 pi f)^p``.
    """

    kind: WhiteningKind
    coeffs: tuple[complex, ...] = ()
    order: int = 0
    power: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", WhiteningKind(self.kind))
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if self.kind is WhiteningKind.CONTINUOUS_DIFFERENTIAL:
            if not self.coeffs or self.coeffs[-1] == 0:
                raise ValueError("continuous differential operator needs a nonzero leading coefficient")
        elif self.kind is WhiteningKind.DISCRETE_DIFFERENCE:
            if self.order < 0:
                raise ValueError(f"spline order must be nonnegative, got {self.order}")
        elif self.power < 1:
            raise ValueError(f"derivative power must be positive, got {self.power}")

    @classmethod
    def derivative(cls, power: int = 1) -> "WhiteningSpec":
        return cls(WhiteningKind.POWER_OF_DERIVATIVE, power=power)

    @classmethod
    def difference(cls, order: int = 0) -> "WhiteningSpec":
        return cls(WhiteningKind.DISCRETE_DIFFERENCE, order=order)

    @classmethod
    def differential(cls, coeffs) -> "WhiteningSpec":
        return cls(WhiteningKind.CONTINUOUS_DIFFERENTIAL, coeffs=tuple(coeffs))

    @property
    def is_discrete(self) -> bool:
        return self.kind is WhiteningKind.DISCRETE_DIFFERENCE

    def to_dict(self) -> dict:
        if self.kind is WhiteningKind.CONTINUOUS_DIFFERENTIAL:
            return {"kind": self.kind.value, "coeffs": encode_complex(self.coeffs)}
        if self.kind is WhiteningKind.DISCRETE_DIFFERENCE:
            return {"kind": self.kind.value, "order": self.order}
        return {"kind": self.kind.value, "power": self.power}

    @classmethod
    def from_dict(cls, doc: dict) -> "WhiteningSpec":
        check_keys(doc, required={"kind"}, optional={"coeffs", "order", "power"}, where="weight")
        kind = WhiteningKind(doc["kind"])
        if kind is WhiteningKind.CONTINUOUS_DIFFERENTIAL:
            check_keys(doc, required={"kind", "coeffs"}, where="weight")
            return cls.differential(decode_complex(doc["coeffs"]))
        if kind is WhiteningKind.DISCRETE_DIFFERENCE:
            check_keys(doc, required={"kind", "order"}, where="weight")
            return cls.difference(int(doc["order"]))
        check_keys(doc, required={"kind", "power"}, where="weight")
        return cls.derivative(int(doc["power"]))


def frequency_grid(n: int, centered: bool = False) -> np.ndarray:
    """Integer frequencies ``0..n-1``, or ``-n//2 .. n - n//2 - 1`` if centered."""
    k = np.arange(n)
    return k - n // 2 if centered else k


def weight_spectrum(spec: WhiteningSpec, n: int, centered: bool = False) -> np.ndarray:
    """Sample the operator's frequency response on the length-``n`` grid.

    Continuous kinds are evaluated at integer frequencies ``f = k``; the
    discrete difference is evaluated at ``w = 2 pi k / n`` (DFT order).
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    k = frequency_grid(n, centered)
    if spec.kind is WhiteningKind.DISCRETE_DIFFERENCE:
        return (1 - np.exp(-2j * np.pi * k / n)) ** (spec.order + 1)
    s = 2j * np.pi * k
    if spec.kind is WhiteningKind.POWER_OF_DERIVATIVE:
        return s ** spec.power
    # Horner in s = i 2 pi f
    out = np.zeros(n, dtype=complex)
    for b in reversed(spec.coeffs):
        out = out * s + b
    return out


def apply_weight(x_hat, l_hat) -> np.ndarray:
    x_hat = np.asarray(x_hat, dtype=complex)
    l_hat = np.asarray(l_hat, dtype=complex)
    if x_hat.shape != l_hat.shape:
        raise ValueError(f"length mismatch: spectrum {x_hat.shape} vs weight {l_hat.shape}")
    return x_hat * l_hat


def spectral_nulls(l_hat, tol: float | None = None) -> np.ndarray:
    """Indices where the weight vanishes (relative tolerance ``1e-12``)."""
    l_hat = np.asarray(l_hat, dtype=complex)
    mag = np.abs(l_hat)
    if tol is None:
        tol = 1e-12 * mag.max(initial=0.0)
    return np.flatnonzero((mag <= tol) | (l_hat == 0))


def unweight(z_hat, l_hat, null_values: dict[int, complex] | None = None, tol: float | None = None) -> np.ndarray:
    """Divide out the weight, filling spectral nulls from ``null_values``.

    Raises
    ------
    SpectralNullError
        If a null of ``l_hat`` has no entry in ``null_values``.
    """
    z_hat = np.asarray(z_hat, dtype=complex)
    l_hat = np.asarray(l_hat, dtype=complex)
    if z_hat.shape != l_hat.shape:
        raise ValueError(f"length mismatch: spectrum {z_hat.shape} vs weight {l_hat.shape}")
    null_values = dict(null_values or {})
    nulls = spectral_nulls(l_hat, tol)
    for k in nulls:
        if int(k) not in null_values:
            raise SpectralNullError(f"unmeasured spectral null at k={int(k)}")
    out = np.empty_like(z_hat)
    ok = np.ones(z_hat.shape, dtype=bool)
    ok[nulls] = False
    out[ok] = z_hat[ok] / l_hat[ok]
    for k in nulls:
        out[k] = null_values[int(k)]
    return out


def bspline_filter(m: int) -> tuple[np.ndarray, int]:
    """Integer samples of the causal B-spline of degree ``m``.

    Returns the nonzero taps and the index of the first one, so that
    ``b_L[offset + p] = taps[p]``.

    Examples
    --------
    >>> bspline_filter(2)
    (array([0.5, 0.5]), 1)
    """
    if m < 0:
        raise ValueError(f"spline order must be nonnegative, got {m}")
    t = np.arange(m + 2, dtype=float)
    vals = np.zeros_like(t)
    for k in range(m + 2):
        shifted = t - k
        if m == 0:
            ramp = (shifted >= 0).astype(float)
        else:
            ramp = np.where(shifted > 0, shifted, 0.0) ** m
        vals += (-1) ** k * math.comb(m + 1, k) * ramp
    vals /= math.factorial(m)
    vals[np.abs(vals) < 1e-12] = 0.0
    nz = np.flatnonzero(vals)
    return vals[nz[0]: nz[-1] + 1].copy(), int(nz[0])


def bspline_spectrum(m: int, n: int) -> np.ndarray:
    """Length-``n`` DFT of the periodized sample filter ``b_L``."""
    taps, offset = bspline_filter(m)
    b = np.zeros(n)
    for p, v in enumerate(taps):
        b[(offset + p) % n] += v
    return np.fft.fft(b)
