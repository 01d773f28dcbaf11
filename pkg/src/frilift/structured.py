"""Hankel and wrap-around Hankel liftings of vectors.

A lifting maps a length-``n`` vector to a structured matrix whose
anti-diagonals carry the vector entries. Everything here is a pure function
of its inputs; index tables are cached per ``(kind, n, d)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "LiftKind",
    "StructuredLift",
    "SampleSet",
    "ProjectMode",
    "lift",
    "adjoint",
    "pseudo_inverse",
    "multiplicity",
    "multiplicities",
    "basis_element",
    "project",
    "sampled_mask",
]


class LiftKind(str, enum.Enum):
    STANDARD = "standard"
    WRAPAROUND = "wraparound"


@dataclass(frozen=True)
class StructuredLift:
    """Descriptor of a lifting: kind, ambient length ``n`` and pencil ``d``."""

    kind: LiftKind
    n: int
    d: int

    def __post_init__(self):
        object.__setattr__(self, "kind", LiftKind(self.kind))
        if self.n < 1 or self.d < 1:
            raise ValueError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if self.d > self.n:
            raise ValueError(f"pencil parameter d={self.d} exceeds n={self.n}")

    @classmethod
    def standard(cls, n: int, d: int) -> "StructuredLift":
        return cls(LiftKind.STANDARD, n, d)

    @classmethod
    def wraparound(cls, n: int, d: int) -> "StructuredLift":
        return cls(LiftKind.WRAPAROUND, n, d)

    @property
    def shape(self) -> tuple[int, int]:
        if self.kind is LiftKind.STANDARD:
            return (self.n - self.d + 1, self.d)
        return (self.n, self.d)

    @property
    def oversampling(self) -> float:
        """``c_s = max(n / n1, n / n2)`` for this lifting."""
        n1, n2 = self.shape
        return max(self.n / n1, self.n / n2)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "n": self.n, "d": self.d}

    @classmethod
    def from_dict(cls, doc: dict) -> "StructuredLift":
        from ._jsonio import check_keys

        check_keys(doc, required={"kind", "n", "d"}, where="lift")
        return cls(LiftKind(doc["kind"]), int(doc["n"]), int(doc["d"]))


@lru_cache(maxsize=64)
def _index_table(kind: LiftKind, n: int, d: int) -> np.ndarray:
    n1 = n - d + 1 if kind is LiftKind.STANDARD else n
    idx = np.arange(n1)[:, None] + np.arange(d)[None, :]
    if kind is LiftKind.WRAPAROUND:
        idx %= n
    idx.setflags(write=False)
    return idx


def _table(lift_: StructuredLift) -> np.ndarray:
    return _index_table(lift_.kind, lift_.n, lift_.d)


@lru_cache(maxsize=64)
def _counts(kind: LiftKind, n: int, d: int) -> np.ndarray:
    counts = np.bincount(_index_table(kind, n, d).ravel(), minlength=n)
    counts.setflags(write=False)
    return counts


def lift(x, lift_: StructuredLift) -> np.ndarray:
    """Build the structured matrix whose ``(i, j)`` entry is ``x[i + j]``.

    For the wrap-around kind the index is taken modulo ``n``.

    Examples
    --------
    >>> lift([1, 2, 3, 4], StructuredLift.standard(4, 2)).real
    array([[1., 2.],
           [2., 3.],
           [3., 4.]])
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (lift_.n,):
        raise ValueError(f"expected a vector of length {lift_.n}, got shape {x.shape}")
    return x[_table(lift_)]


def _check_matrix(M, lift_: StructuredLift) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.shape != lift_.shape:
        raise ValueError(f"expected a matrix of shape {lift_.shape}, got {M.shape}")
    return M


def adjoint(M, lift_: StructuredLift) -> np.ndarray:
    """Adjoint of :func:`lift`: sums each anti-diagonal class."""
    M = _check_matrix(M, lift_)
    idx = _table(lift_).ravel()
    flat = M.ravel()
    re = np.bincount(idx, weights=flat.real, minlength=lift_.n)
    im = np.bincount(idx, weights=flat.imag, minlength=lift_.n)
    return re + 1j * im


def multiplicities(lift_: StructuredLift) -> np.ndarray:
    """Number of matrix cells fed by each vector entry, for all entries."""
    return _counts(lift_.kind, lift_.n, lift_.d)


def multiplicity(k: int, lift_: StructuredLift) -> int:
    if not 0 <= k < lift_.n:
        raise IndexError(f"index {k} out of range for n={lift_.n}")
    return int(multiplicities(lift_)[k])


def pseudo_inverse(M, lift_: StructuredLift) -> np.ndarray:
    """Moore-Penrose inverse of the lifting: the anti-diagonal averages.

    The normal operator ``adjoint(lift(.))`` is diagonal with the
    multiplicities on its diagonal, so averaging is exact least squares.
    """
    return adjoint(M, lift_) / multiplicities(lift_)


def basis_element(k: int, lift_: StructuredLift) -> np.ndarray:
    """Unit-norm basis matrix ``lift(e_k) / sqrt(multiplicity(k))``."""
    count = multiplicity(k, lift_)
    A = (_table(lift_) == k).astype(complex)
    return A / np.sqrt(count)


@dataclass(frozen=True)
class SampleSet:
    """Multiset of observed frequency indices with their values.

    ``values[i]`` is the observation attached to ``indices[i]``. Repeated
    indices are allowed; constraints only see the distinct support.
    """

    n: int
    indices: np.ndarray
    values: np.ndarray
    dc_forced: bool = False
    _support: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=complex).ravel()
        if indices.shape != values.shape:
            raise ValueError(
                f"{indices.size} indices but {values.size} values in sample set"
            )
        if indices.size and (indices.min() < 0 or indices.max() >= self.n):
            raise ValueError(f"sample index outside [0, {self.n})")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_support", np.unique(indices))

    @classmethod
    def from_vector(cls, x, indices, dc_forced: bool = False) -> "SampleSet":
        x = np.asarray(x, dtype=complex)
        indices = np.asarray(indices, dtype=np.int64)
        return cls(x.size, indices, x[indices], dc_forced)

    @property
    def m(self) -> int:
        return int(self.indices.size)

    @property
    def support(self) -> np.ndarray:
        return self._support

    def distinct(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distinct indices, mean observed value and draw count per index."""
        support, inverse, counts = np.unique(
            self.indices, return_inverse=True, return_counts=True
        )
        re = np.bincount(inverse, weights=self.values.real, minlength=support.size)
        im = np.bincount(inverse, weights=self.values.imag, minlength=support.size)
        return support, (re + 1j * im) / counts, counts

    def zero_filled(self) -> np.ndarray:
        support, means, _ = self.distinct()
        x = np.zeros(self.n, dtype=complex)
        x[support] = means
        return x

    def with_values(self, values) -> "SampleSet":
        return SampleSet(self.n, self.indices, values, self.dc_forced)

    def to_dict(self) -> dict:
        from ._jsonio import encode_complex

        return {
            "n": self.n,
            "indices": [int(i) for i in self.indices],
            "values": encode_complex(self.values),
            "dc_forced": bool(self.dc_forced),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SampleSet":
        from ._jsonio import check_keys, decode_complex

        check_keys(
            doc,
            required={"n", "indices", "values"},
            optional={"dc_forced", "schema_version"},
            where="samples",
        )
        return cls(
            int(doc["n"]),
            np.asarray(doc["indices"], dtype=np.int64),
            decode_complex(doc["values"]),
            bool(doc.get("dc_forced", False)),
        )


class ProjectMode(str, enum.Enum):
    KEEP_SAMPLED = "keep_sampled"
    KEEP_COMPLEMENT = "keep_complement"


def project(x, samples: SampleSet, mode: ProjectMode = ProjectMode.KEEP_SAMPLED) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (samples.n,):
        raise ValueError(f"expected a vector of length {samples.n}, got shape {x.shape}")
    out = np.zeros_like(x)
    support = samples.support
    if ProjectMode(mode) is ProjectMode.KEEP_SAMPLED:
        out[support] = x[support]
    else:
        out[:] = x
        out[support] = 0
    return out


def sampled_mask(samples: SampleSet, lift_: StructuredLift) -> np.ndarray:
    """Boolean mask of matrix cells whose vector entry was observed."""
    if samples.n != lift_.n:
        raise ValueError(f"sample set has n={samples.n}, lift has n={lift_.n}")
    known = np.zeros(lift_.n, dtype=bool)
    known[samples.support] = True
    return known[_table(lift_)]
