"""Structured low-rank completion by ADMM over a factorized nuclear norm.

The nuclear norm is replaced by ``min 1/2 (|U|_F^2 + |V|_F^2)`` over
factorizations ``UV^H`` of the lifted matrix, and the resulting problem is
split with a scaled dual variable ``Lambda``. Factors are warm-started by an
LMaFit-style alternating least-squares fit of the partially known lifted
matrix.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import scipy.linalg as sla

from ._jsonio import check_keys
from .structured import (
    SampleSet,
    StructuredLift,
    lift,
    multiplicities,
    pseudo_inverse,
    sampled_mask,
)

__all__ = [
    "SolverParams",
    "CompletionResult",
    "lmafit_init",
    "complete_noiseless",
    "complete_noisy",
    "complete",
]


@dataclass(frozen=True)
class SolverParams:
    """Hyper-parameters of the completion solvers.

    ``penalty`` is the ADMM penalty, ``data_weight`` the data-fit weight of
    the noisy variant, ``tol`` the relative change of the completed vector
    at which ADMM stops, and ``init_tol`` / ``init_max_iter`` drive the
    LMaFit warm start. ``rank_cap=None`` means a quarter of the smaller
    matrix dimension.
    """

    penalty: float = 1e3
    data_weight: float = 1e5
    rank_cap: int | None = None
    max_iter: int = 500
    tol: float = 1e-9
    init_tol: float = 1e-4
    init_max_iter: int = 200
    relaxation: float = 0.5
    rank_decay_ratio: float = 10.0
    seed: int = 0

    def __post_init__(self):
        for name in ("penalty", "data_weight", "tol", "init_tol", "rank_decay_ratio"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1 or self.init_max_iter < 1:
            raise ValueError("iteration budgets must be positive")
        if self.rank_cap is not None and self.rank_cap < 1:
            raise ValueError("rank_cap must be positive")
        if not 0 < self.relaxation <= 1:
            raise ValueError("relaxation must lie in (0, 1]")

    def resolved_rank(self, lift_: StructuredLift) -> int:
        n1, n2 = lift_.shape
        if self.rank_cap is None:
            return max(1, min(n1, n2) // 4)
        if self.rank_cap > min(n1, n2):
            raise ValueError(f"rank_cap={self.rank_cap} exceeds the lifted matrix size {lift_.shape}")
        return self.rank_cap

    def replace(self, **changes) -> "SolverParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "SolverParams":
        names = {f.name for f in fields(cls)}
        check_keys(doc, optional=names, where="solver")
        return cls(**doc)


@dataclass(frozen=True)
class CompletionResult:
    g: np.ndarray
    iterations: int
    final_residual: float
    factor_rank: int
    converged: bool = False
    init_sweeps: int = 0


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def lmafit_init(
    samples: SampleSet,
    lift_: StructuredLift,
    rank_cap: int,
    init_tol: float = 1e-4,
    max_iter: int = 200,
    relaxation: float = 0.5,
    decay_ratio: float = 10.0,
    rng=None,
):
    """Alternating least-squares factors of the partially observed lift.

    The unknown cells start at zero. Each sweep fits ``U`` (orthonormalized
    by QR) and then ``V = Z^H U``, re-imposes the known cells and relaxes the
    unknown ones towards the previous iterate. The working rank shrinks at
    a sharp drop in the pivoted-QR diagonal and grows back by one when the
    fit stalls without such a drop.

    Returns
    -------
    U, V, sweeps
        ``U`` has orthonormal columns and ``U @ V.conj().T`` approximates
        the completed lift.
    """
    n1, n2 = lift_.shape
    if rank_cap > min(n1, n2):
        raise ValueError(f"rank_cap={rank_cap} exceeds the lifted matrix size {lift_.shape}")
    rng = np.random.default_rng(rng)
    known = sampled_mask(samples, lift_)
    Zk = lift(samples.zero_filled(), lift_)
    norm_known = np.linalg.norm(Zk[known])
    if norm_known == 0:
        return np.zeros((n1, rank_cap), complex), np.zeros((n2, rank_cap), complex), 1

    k = rank_cap
    Z = Zk.copy()
    V = _crandn(rng, (n2, k))
    prev_res = np.inf
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        Q, R, _ = sla.qr(Z @ V, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        if k > 1:
            ratios = diag[:-1] / np.maximum(diag[1:], np.finfo(float).tiny)
            j = int(np.argmax(ratios))
            if ratios[j] > decay_ratio:
                k = j + 1
                Q = Q[:, :k]
        U = Q
        V = Z.conj().T @ U
        fit = (U, V)
        X = U @ V.conj().T
        res = np.linalg.norm((X - Zk)[known]) / norm_known
        Z_new = np.where(known, Zk, X)
        Z = np.where(known, Zk, (1 - relaxation) * Z + relaxation * Z_new)
        if res < init_tol:
            break
        if k < rank_cap and res > 0.99 * prev_res:
            V = np.hstack([V, _crandn(rng, (n2, 1)) * np.linalg.norm(V) / np.sqrt(n2 * k)])
            k += 1
        prev_res = res
    return fit[0], fit[1], sweeps


def _balance(U, V):
    """Rescale ``U V^H`` so both factors carry the same singular values."""
    Q, s, Wh = np.linalg.svd(V, full_matrices=False)
    root = np.sqrt(s)
    return (U @ Wh.conj().T) * root, Q * root


def _solve_right(A, G):
    # A @ inv(G) for Hermitian positive definite G
    return sla.solve(G, A.conj().T, assume_a="pos").conj().T


def _admm(samples, lift_, params, data_update):
    n1, n2 = lift_.shape
    rank = params.resolved_rank(lift_)
    rng = np.random.default_rng(params.seed)
    U, V, sweeps = lmafit_init(
        samples,
        lift_,
        rank,
        params.init_tol,
        params.init_max_iter,
        params.relaxation,
        params.rank_decay_ratio,
        rng,
    )
    U, V = _balance(U, V)
    mu = params.penalty
    g = samples.zero_filled()
    Y = lift(g, lift_)
    Lam = np.zeros((n1, n2), complex)
    eye = np.eye(U.shape[1])
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        g_new = data_update(U @ V.conj().T - Lam)
        Y = lift(g_new, lift_)
        YL = Y + Lam
        U = _solve_right(mu * (YL @ V), eye + mu * (V.conj().T @ V))
        V = _solve_right(mu * (YL.conj().T @ U), eye + mu * (U.conj().T @ U))
        Lam = YL - U @ V.conj().T
        change = np.linalg.norm(g_new - g) / max(np.linalg.norm(g), np.finfo(float).tiny)
        g = g_new
        # the first update only re-reads the warm start, so it cannot signal convergence
        if it > 1 and change < params.tol:
            converged = True
            break
    ynorm = np.linalg.norm(Y)
    residual = np.linalg.norm(Y - U @ V.conj().T) / ynorm if ynorm > 0 else 0.0
    return CompletionResult(g, it, float(residual), int(U.shape[1]), converged, sweeps)


def complete_noiseless(samples: SampleSet, lift_: StructuredLift, params: SolverParams | None = None) -> CompletionResult:
    """Complete ``samples`` so the lifted matrix has minimal nuclear norm.

    Observed entries are imposed exactly at every iterate; the rest are the
    anti-diagonal averages of ``U V^H - Lambda``.
    """
    params = params or SolverParams()
    _check(samples, lift_)
    support, observed, _ = samples.distinct()

    def data_update(M):
        g = pseudo_inverse(M, lift_)
        g[support] = observed
        return g

    return _admm(samples, lift_, params, data_update)


def complete_noisy(samples: SampleSet, lift_: StructuredLift, params: SolverParams | None = None) -> CompletionResult:
    """Noisy completion: observed entries are blended with the lifted model.

    On the sampled support the update is
    ``(lam * c * y + mu * H^*(M)) / (lam * c + mu * mult)`` where ``c`` counts
    repeated draws of an index and ``mult`` is its lifting multiplicity.
    """
    params = params or SolverParams()
    _check(samples, lift_)
    support, observed, counts = samples.distinct()
    lam, mu = params.data_weight, params.penalty
    mult = multiplicities(lift_)[support]

    def data_update(M):
        adj_avg = pseudo_inverse(M, lift_)
        g = adj_avg.copy()
        adj = adj_avg[support] * mult
        g[support] = (lam * counts * observed + mu * adj) / (lam * counts + mu * mult)
        return g

    return _admm(samples, lift_, params, data_update)


def complete(samples: SampleSet, lift_: StructuredLift, params: SolverParams | None = None, noisy: bool = False) -> CompletionResult:
    solver = complete_noisy if noisy else complete_noiseless
    return solver(samples, lift_, params)


def _check(samples, lift_):
    if samples.n != lift_.n:
        raise ValueError(f"sample set has n={samples.n}, lift has n={lift_.n}")
    if samples.m < 1:
        raise ValueError("at least one sample is required")
