"""Monte Carlo harness for recovery experiments and phase transitions.

Each trial draws a model, a sampling pattern and optional noise from a
generator seeded by its grid position ``(seed, s, m, trial)``, so results
do not depend on execution order or worker count.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._jsonio import SCHEMA_VERSION, SchemaError, check_keys
from .estimation import matrix_pencil
from .signals import FriModel, ModelKind, Spike, rect_spectrum, weighted_spectrum
from .solvers import SolverParams, complete
from .structured import LiftKind, SampleSet, StructuredLift
from .weighting import WhiteningSpec, unweight, weight_spectrum

__all__ = [
    "Scenario",
    "SamplingMode",
    "ExperimentConfig",
    "Instance",
    "TrialRecord",
    "PhaseTransitionResult",
    "sample_omega",
    "add_noise",
    "nmse",
    "make_instance",
    "run_trial",
    "run_phase_transition",
]


class Scenario(str, enum.Enum):
    DIRACS = "diracs"
    PIECEWISE_CONSTANT = "piecewise_constant"
    PIECEWISE_CONSTANT_PLUS_DIRACS = "piecewise_constant_plus_diracs"
    OFF_GRID_PIECEWISE_CONSTANT = "off_grid_piecewise_constant"
    CARDINAL_SPLINE = "cardinal_spline"


class SamplingMode(str, enum.Enum):
    IID_WITH_REPLACEMENT = "iid_with_replacement"
    WITHOUT_REPLACEMENT_FORCE_DC = "without_replacement_force_dc"


_DEFAULT_THRESHOLD = {Scenario.DIRACS: 1e-3}
_DEFAULT_LIFT = {
    Scenario.PIECEWISE_CONSTANT: LiftKind.WRAPAROUND,
    Scenario.PIECEWISE_CONSTANT_PLUS_DIRACS: LiftKind.WRAPAROUND,
    Scenario.CARDINAL_SPLINE: LiftKind.WRAPAROUND,
}


def _parse_range(value, name: str) -> tuple[int, ...]:
    if isinstance(value, dict):
        check_keys(value, required={"start", "stop"}, optional={"step"}, where=name)
        step = int(value.get("step", 1))
        if step < 1:
            raise SchemaError(f"{name}: step must be positive")
        return tuple(range(int(value["start"]), int(value["stop"]) + 1, step))
    if isinstance(value, int):
        return (value,)
    return tuple(int(v) for v in value)


@dataclass(frozen=True)
class ExperimentConfig:
    """One phase-transition experiment.

    ``s_range`` and ``m_range`` accept a list of integers or an inclusive
    ``{"start", "stop", "step"}`` range. ``lift_kind`` and
    ``success_threshold`` default per scenario (wrap-around lift for
    on-grid splines, threshold ``1e-3`` for Diracs and ``1e-2`` otherwise).
    When ``solver.rank_cap`` is unset, each trial caps the factor rank at
    the true lifted rank plus two.
    """

    scenario: Scenario
    n: int
    d: int
    s_range: tuple[int, ...]
    m_range: tuple[int, ...]
    trials: int = 1
    success_threshold: float | None = None
    snr_db: float | None = None
    sampling_mode: SamplingMode = SamplingMode.WITHOUT_REPLACEMENT_FORCE_DC
    solver: SolverParams = field(default_factory=SolverParams)
    seed: int = 0
    lift_kind: LiftKind | None = None
    spline_order: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "sampling_mode", SamplingMode(self.sampling_mode))
        object.__setattr__(self, "s_range", _parse_range(self.s_range, "s_range"))
        object.__setattr__(self, "m_range", _parse_range(self.m_range, "m_range"))
        if self.lift_kind is None:
            object.__setattr__(self, "lift_kind", _DEFAULT_LIFT.get(self.scenario, LiftKind.STANDARD))
        object.__setattr__(self, "lift_kind", LiftKind(self.lift_kind))
        if self.success_threshold is None:
            object.__setattr__(self, "success_threshold", _DEFAULT_THRESHOLD.get(self.scenario, 1e-2))
        StructuredLift(self.lift_kind, self.n, self.d)
        if not self.success_threshold > 0:
            raise ValueError("success_threshold must be positive")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not self.s_range or not self.m_range:
            raise ValueError("s_range and m_range must be nonempty")
        for name, values in (("s_range", self.s_range), ("m_range", self.m_range)):
            if min(values) < 1 or max(values) > self.n:
                raise ValueError(f"{name} must lie within [1, {self.n}]")
            if len(set(values)) != len(values):
                raise ValueError(f"{name} has repeated values")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.spline_order < 0:
            raise ValueError("spline_order must be nonnegative")

    @property
    def lift(self) -> StructuredLift:
        return StructuredLift(self.lift_kind, self.n, self.d)

    def replace(self, **changes) -> "ExperimentConfig":
        doc = self.to_dict()
        doc.pop("schema_version")
        if "solver" in changes and isinstance(changes["solver"], SolverParams):
            changes["solver"] = changes["solver"].to_dict()
        doc.update(changes)
        return ExperimentConfig.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario.value,
            "n": self.n,
            "d": self.d,
            "s_range": list(self.s_range),
            "m_range": list(self.m_range),
            "trials": self.trials,
            "success_threshold": self.success_threshold,
            "snr_db": self.snr_db,
            "sampling_mode": self.sampling_mode.value,
            "solver": self.solver.to_dict(),
            "seed": self.seed,
            "lift_kind": self.lift_kind.value,
            "spline_order": self.spline_order,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {"scenario", "n", "d", "s_range", "m_range"}
        optional = {
            "schema_version", "trials", "success_threshold", "snr_db", "sampling_mode",
            "solver", "seed", "lift_kind", "spline_order",
        }
        check_keys(doc, required=names, optional=optional, where="experiment")
        kwargs = {k: v for k, v in doc.items() if k != "schema_version"}
        if "solver" in kwargs:
            kwargs["solver"] = SolverParams.from_dict(kwargs["solver"])
        return cls(**kwargs)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def sample_omega(n: int, m: int, mode: SamplingMode, rng) -> np.ndarray:
    """Draw ``m`` frequency indices from ``0 .. n-1``.

    The i.i.d. mode returns a true multiset; the other mode returns ``m``
    distinct indices that always include the DC bin.
    """
    rng = np.random.default_rng(rng)
    mode = SamplingMode(mode)
    if m < 1:
        raise ValueError(f"need at least one sample, got m={m}")
    if mode is SamplingMode.IID_WITH_REPLACEMENT:
        return np.sort(rng.integers(0, n, size=m))
    if m > n:
        raise ValueError(f"cannot draw m={m} distinct indices from n={n}")
    rest = rng.choice(np.arange(1, n), size=m - 1, replace=False)
    return np.sort(np.concatenate([[0], rest]).astype(np.int64))


def add_noise(values, snr_db: float, rng) -> np.ndarray:
    """Add circular complex Gaussian noise at the requested SNR.

    The per-sample variance is ``|values|^2 / (m 10^(snr/10))``, split evenly
    between real and imaginary parts.
    """
    values = np.asarray(values, dtype=complex)
    energy = float(np.vdot(values, values).real)
    if energy == 0:
        raise ValueError("cannot set an SNR for a zero signal")
    if math.isinf(snr_db) and snr_db > 0:
        return values.copy()
    rng = np.random.default_rng(rng)
    var = energy / (values.size * 10 ** (snr_db / 10))
    noise = rng.standard_normal(values.shape) + 1j * rng.standard_normal(values.shape)
    return values + np.sqrt(var / 2) * noise


def nmse(estimate, truth) -> float:
    estimate = np.asarray(estimate, dtype=complex)
    truth = np.asarray(truth, dtype=complex)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    ref = float(np.vdot(truth, truth).real)
    if ref == 0:
        raise ValueError("NMSE undefined for a zero reference")
    diff = estimate - truth
    return float(np.vdot(diff, diff).real) / ref


@dataclass(frozen=True)
class Instance:
    """A generated ground truth.

    ``x_hat`` is the unweighted spectrum on ``k = 0 .. n-1``; ``weight`` is
    the whitening response applied before completion (None for Diracs);
    ``rank`` is the rank of the lifted weighted spectrum; ``locations`` are
    the singularities a pencil should return.
    """

    x_hat: np.ndarray
    weight: np.ndarray | None
    rank: int
    locations: np.ndarray
    model: FriModel | None = None


def _amps(rng, size):
    return rng.uniform(0.5, 1.5, size) * np.exp(2j * np.pi * rng.random(size))


def _zero_sum(rng, size):
    # the closing jump is redrawn until it is comparable to the others
    for _ in range(100):
        a = _amps(rng, size)
        a[-1] = -a[:-1].sum()
        if abs(a[-1]) >= 0.5:
            break
    return a


def _interior(rng, n, count):
    if count > n - 2:
        raise ValueError(f"cannot place {count} knots in the interior of a length-{n} grid")
    return np.sort(rng.choice(np.arange(1, n - 1), size=count, replace=False))


def _cardinal(rng, n, s, order):
    if s < 2:
        raise ValueError("a periodic spline needs at least two jumps")
    idx = _interior(rng, n, s)
    a = _zero_sum(rng, s)
    model = FriModel(
        ModelKind.CARDINAL_SPLINE,
        tuple(Spike(p / n, v) for p, v in zip(idx, a)),
        order=order,
        grid=n,
    )
    z = weighted_spectrum(model, n)
    l_hat = weight_spectrum(WhiteningSpec.difference(order), n)
    x_hat = np.zeros(n, complex)
    x_hat[1:] = z[1:] / l_hat[1:]
    # pick the free constant so the signal starts at zero
    x0 = np.fft.ifft(x_hat)[0]
    x_hat[0] = -n * x0
    return Instance(x_hat, l_hat, model.total_order, idx / n, model)


def _pc_plus_diracs(rng, n, s):
    steps = math.ceil(s / 2)
    diracs = s - steps
    if steps < 2:
        raise ValueError("piecewise constant plus Diracs needs s >= 3")
    idx = _interior(rng, n, s)
    perm = rng.permutation(idx)
    jumps, spikes = np.sort(perm[:steps]), np.sort(perm[steps:])
    x = np.zeros(n, complex)
    x[jumps] = _zero_sum(rng, steps)
    x = np.cumsum(x)
    x[spikes] += _amps(rng, diracs)
    u = x - np.roll(x, 1)
    support = np.flatnonzero(np.abs(u) > 1e-12)
    l_hat = weight_spectrum(WhiteningSpec.difference(0), n)
    return Instance(np.fft.fft(x), l_hat, int(support.size), support / n)


def _off_grid(rng, n, s):
    count = 2 * s
    if count > n // 2:
        raise ValueError(f"too many rectangles ({s}) for n={n}")
    for _ in range(1000):
        edges = np.sort(rng.uniform(1 / n, 1 - 1 / n, size=count))
        if np.diff(edges).min() >= 2 / n:
            break
    else:
        raise RuntimeError("could not place separated edges")
    heights = _amps(rng, s)
    rects = [(edges[2 * i], edges[2 * i + 1], heights[i]) for i in range(s)]
    x_hat = rect_spectrum(rects, np.arange(n))
    l_hat = weight_spectrum(WhiteningSpec.derivative(1), n)
    return Instance(x_hat, l_hat, count, edges)


def make_instance(config: ExperimentConfig, s: int, rng) -> Instance:
    """Generate the ground truth of one trial."""
    rng = np.random.default_rng(rng)
    n = config.n
    scen = config.scenario
    if scen is Scenario.DIRACS:
        idx = _interior(rng, n, s)
        model = FriModel(ModelKind.DIRACS, tuple(Spike(p / n, a) for p, a in zip(idx, _amps(rng, s))))
        return Instance(weighted_spectrum(model, n), None, s, idx / n, model)
    if scen is Scenario.PIECEWISE_CONSTANT:
        return _cardinal(rng, n, s, 0)
    if scen is Scenario.CARDINAL_SPLINE:
        return _cardinal(rng, n, s, config.spline_order)
    if scen is Scenario.PIECEWISE_CONSTANT_PLUS_DIRACS:
        return _pc_plus_diracs(rng, n, s)
    return _off_grid(rng, n, s)


@dataclass(frozen=True)
class TrialRecord:
    config_digest: str
    trial_seed: int
    s: int
    m: int
    trial: int
    nmse: float
    success: bool
    iterations: int
    elapsed_ms: float
    location_error: float = math.nan
    error: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def trial_seed(seed: int, s: int, m: int, trial: int) -> int:
    """Seed derived from a trial's grid position."""
    return int(np.random.SeedSequence([seed, s, m, trial]).generate_state(1, np.uint64)[0])


def _location_error(estimate, truth) -> float:
    est = np.sort(np.mod(estimate, 1.0))
    ref = np.sort(np.mod(truth, 1.0))
    if est.size != ref.size:
        return math.inf
    diff = np.abs(est - ref)
    return float(np.minimum(diff, 1 - diff).max())


def run_trial(config: ExperimentConfig, s: int, m: int, trial: int) -> TrialRecord:
    """Run one trial; solver and precondition errors become failed records."""
    seed = trial_seed(config.seed, s, m, trial)
    digest = config.digest()[:16]
    start = time.perf_counter()
    iterations = 0
    try:
        rng = np.random.default_rng(seed)
        inst = make_instance(config, s, rng)
        omega = sample_omega(config.n, m, config.sampling_mode, rng)
        y = inst.x_hat[omega]
        if config.snr_db is not None:
            y = add_noise(y, config.snr_db, rng)
        z = y if inst.weight is None else y * inst.weight[omega]
        samples = SampleSet(config.n, omega, z, dc_forced=0 in omega)
        lift_ = config.lift
        params = config.solver.replace(seed=seed)
        if params.rank_cap is None:
            params = params.replace(rank_cap=min(inst.rank + 2, min(lift_.shape)))
        result = complete(samples, lift_, params, noisy=config.snr_db is not None)
        iterations = result.iterations
        if inst.weight is None:
            estimate = result.g
        else:
            raw = SampleSet(config.n, omega, y)
            support, means, _ = raw.distinct()
            estimate = unweight(result.g, inst.weight, dict(zip(support.tolist(), means)))
        err = nmse(estimate, inst.x_hat)
        loc = math.nan
        if config.scenario is Scenario.OFF_GRID_PIECEWISE_CONSTANT:
            try:
                pe = matrix_pencil(result.g, lift_, inst.rank)
                loc = _location_error(pe.t, inst.locations)
            except ValueError:
                loc = math.inf
        return TrialRecord(
            digest, seed, s, m, trial, err, bool(err < config.success_threshold),
            iterations, (time.perf_counter() - start) * 1e3, loc,
        )
    except (ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
        return TrialRecord(
            digest, seed, s, m, trial, math.nan, False, iterations,
            (time.perf_counter() - start) * 1e3, math.nan, f"{type(exc).__name__}: {exc}",
        )


@dataclass(frozen=True)
class PhaseTransitionResult:
    """Success ratios (rows follow ``s_values``, columns ``m_values``)."""

    s_values: tuple[int, ...]
    m_values: tuple[int, ...]
    grid: np.ndarray
    records: tuple[TrialRecord, ...]


def run_phase_transition(config: ExperimentConfig, workers: int = 1, progress=None) -> PhaseTransitionResult:
    """Sweep ``(s, m)`` and report the fraction of successful trials.

    Parameters
    ----------
    workers
        Thread count. The result is identical for any value.
    progress
        Optional callable receiving each finished :class:`TrialRecord`.
    """
    if workers < 1:
        raise ValueError("workers must be positive")
    jobs = [
        (s, m, t)
        for s in config.s_range
        for m in config.m_range
        for t in range(config.trials)
    ]

    def job(args):
        rec = run_trial(config, *args)
        if progress is not None:
            progress(rec)
        return rec

    if workers == 1:
        records = [job(a) for a in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(job, jobs))
    s_values, m_values = tuple(config.s_range), tuple(config.m_range)
    grid = np.zeros((len(s_values), len(m_values)))
    for rec in records:
        grid[s_values.index(rec.s), m_values.index(rec.m)] += rec.success
    grid /= config.trials
    return PhaseTransitionResult(s_values, m_values, grid, tuple(records))
