"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``criterion N [PASS|FAIL]`` line; the lines are also
collected in the terminal summary.
"""
import time

import numpy as np

from frilift.bench import ExperimentConfig, nmse, run_phase_transition, run_trial
from frilift.estimation import amplitudes, incoherence, matrix_pencil, moitra_bound
from frilift.signals import FriModel, ModelKind, Spike, min_separation, model_weight, spectrum, weighted_spectrum
from frilift.solvers import SolverParams, complete
from frilift.structured import LiftKind, SampleSet, StructuredLift, basis_element, lift
from frilift.weighting import WhiteningSpec
from oracles import svt_complete


def _amps(rng, k):
    return rng.uniform(0.5, 1.5, k) * np.exp(2j * np.pi * rng.random(k))


def _locations(rng, s, delta):
    while True:
        t = np.sort(rng.random(s))
        if s == 1 or min_separation(t) >= delta:
            return t


def _rank_models(cls, rng, n):
    """Random model of a class, its weighted spectrum and expected rank."""
    delta = 2 / n
    if cls == "diracs":
        s = int(rng.integers(1, 11))
        m = FriModel(ModelKind.DIRACS, tuple(Spike(t, a) for t, a in zip(_locations(rng, s, delta), _amps(rng, s))))
        return weighted_spectrum(m, n), s
    if cls == "differentiated diracs":
        s = int(rng.integers(1, 6))
        orders = rng.integers(1, 4, s)
        spikes = tuple(Spike(t, tuple(_amps(rng, l))) for t, l in zip(_locations(rng, s, delta), orders))
        return weighted_spectrum(FriModel(ModelKind.DIFFERENTIATED_DIRACS, spikes), n), int(orders.sum())
    if cls == "derivative-weighted splines":
        s = int(rng.integers(2, 11))
        a = _amps(rng, s)
        a[-1] = -a[:-1].sum()
        spec = WhiteningSpec.derivative(int(rng.integers(1, 4)))
        m = FriModel(ModelKind.NONUNIFORM_SPLINE, tuple(Spike(t, v) for t, v in zip(_locations(rng, s, delta), a)), whitening=spec)
        return spectrum(m, n) * model_weight(m, n), s
    q = int(rng.integers(0, 3))
    s = int(rng.integers(2, 6))
    A = _amps(rng, s * (q + 1)).reshape(s, q + 1)
    A[-1, 0] = -A[:-1, 0].sum()
    m = FriModel(ModelKind.PIECEWISE_POLYNOMIAL, tuple(Spike(t, tuple(a)) for t, a in zip(_locations(rng, s, delta), A)), degree=q)
    return spectrum(m, n) * model_weight(m, n), s * (q + 1)


def test_rank_duality(report):
    n, d = 64, 32
    L = StructuredLift.standard(n, d)
    start = time.perf_counter()
    failures, worst = [], np.inf
    for cls in ("diracs", "differentiated diracs", "derivative-weighted splines", "piecewise polynomials"):
        rng = np.random.default_rng(0)
        for i in range(100):
            z, r = _rank_models(cls, rng, n)
            sv = np.linalg.svd(lift(z, L), compute_uv=False)
            gap = sv[r - 1] / sv[r] if r < sv.size else np.inf
            rank = int(np.count_nonzero(sv > 1e-8 * sv[0]))
            worst = min(worst, gap)
            if rank != r or not gap > 1e6:
                failures.append(f"{cls}#{i}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30
    report(1, "rank duality", ok, f"400 models, smallest gap {worst:.3g}, {elapsed:.2f}s, failures {failures or 'none'}")
    assert ok


def test_basis_properties(report):
    worst = 0.0
    for n in range(1, 65):
        for d in range(1, n + 1):
            for kind in LiftKind:
                L = StructuredLift(kind, n, d)
                A = np.stack([basis_element(k, L) for k in range(n)])
                flat = A.reshape(n, -1)
                worst = max(worst, np.abs(flat @ flat.conj().T - np.eye(n)).max())
                nnz = np.count_nonzero(flat, axis=1)
                worst = max(worst, np.abs(np.where(flat != 0, np.abs(flat) - 1 / np.sqrt(nnz)[:, None], 0)).max())
                mags = np.abs(A)
                col = (mags.sum(axis=1) ** 2).sum(axis=1)
                row = (mags.sum(axis=2) ** 2).sum(axis=1)
                worst = max(worst, np.abs(col - 1).max(), np.abs(row - 1).max())
                if kind is LiftKind.WRAPAROUND:
                    assert np.all(nnz == d)
    ok = worst <= 1e-12
    report(2, "basis properties", ok, f"n<=64, all d, both kinds, max deviation {worst:.2e}")
    assert ok


def test_noiseless_dirac_recovery(report):
    cfg = ExperimentConfig(
        "diracs", 100, 51, [3], [40], trials=50,
        solver=SolverParams(penalty=1e3, max_iter=500, init_tol=1e-4),
    )
    start = time.perf_counter()
    ratio = run_phase_transition(cfg).grid[0, 0]
    elapsed = time.perf_counter() - start
    ok = ratio >= 0.9 and elapsed < 300
    report(3, "noiseless Dirac recovery", ok, f"success ratio {ratio:.2f} over 50 trials, {elapsed:.1f}s")
    assert ok


def test_piecewise_constant_single_instance(report):
    cfg = ExperimentConfig("piecewise_constant", 100, 51, [19], [40], seed=0)
    start = time.perf_counter()
    rec = run_trial(cfg, 19, 40, 0)
    elapsed = time.perf_counter() - start
    ok = rec.nmse < 1e-2 and elapsed < 30
    report(4, "piecewise constant s=19 m=40", ok, f"NMSE {rec.nmse:.2e} ({cfg.lift_kind.value} lift, seed 0), {elapsed:.1f}s")
    assert ok


def test_noisy_trend(report):
    medians = []
    for snr in (20, 30, 40, 50, 60):
        cfg = ExperimentConfig("piecewise_constant", 100, 51, [10], [50], trials=20, snr_db=snr, solver=SolverParams(data_weight=1e5))
        medians.append(float(np.median([r.nmse for r in run_phase_transition(cfg).records])))
    ok = all(a > b for a, b in zip(medians, medians[1:]))
    report(5, "noisy trend", ok, "median NMSE " + ", ".join(f"{m:.2e}" for m in medians) + " at 20..60 dB")
    assert ok


def test_off_grid_pipeline(report):
    cfg = ExperimentConfig(
        "off_grid_piecewise_constant", 100, 51, [3], [36], trials=10,
        solver=SolverParams(init_tol=1e-1, max_iter=300, penalty=1e3),
    )
    recs = run_phase_transition(cfg).records
    good = sum(r.nmse < 1e-2 and r.location_error < 1 / (2 * cfg.n) for r in recs)
    ok = good >= 8
    worst = max(r.location_error for r in recs)
    report(6, "off-grid pipeline", ok, f"{good}/10 trials with NMSE<1e-2 and edges within 1/(2n), worst edge error {worst:.2e}")
    assert ok


def test_incoherence_optimality(report):
    n = 64
    rng = np.random.default_rng(0)
    idx = np.sort(rng.choice(np.arange(1, n - 1), 6, replace=False))
    a = _amps(rng, 6)
    a[-1] = -a[:-1].sum()
    card = FriModel(ModelKind.CARDINAL_SPLINE, tuple(Spike(p / n, v) for p, v in zip(idx, a)), order=0, grid=n)
    mu_card = incoherence(weighted_spectrum(card, n), StructuredLift.wraparound(n, n), 6, card).mu_empirical

    bound, _ = moitra_bound(100, 0.1)
    L = StructuredLift.standard(100, 50)
    worst_margin = np.inf
    for _ in range(50):
        s = int(rng.integers(2, 9))
        t = _locations(rng, s, 0.1)
        m = FriModel(ModelKind.DIRACS, tuple(Spike(x, v) for x, v in zip(t, _amps(rng, s))))
        rep = incoherence(spectrum(m, 100), L, s, m)
        worst_margin = min(worst_margin, rep.mu_bound_moitra - rep.mu_empirical)
    ok = abs(mu_card - 1) <= 1e-10 and abs(bound - 50 / 39) < 1e-12 and worst_margin >= 0
    report(7, "incoherence optimality", ok, f"cardinal mu-1 = {mu_card - 1:.1e}, bound {bound:.6f}, smallest margin {worst_margin:.3g} over 50 models")
    assert ok


def test_matrix_pencil_exactness(report):
    rng = np.random.default_rng(0)
    n = 100
    L = StructuredLift.standard(n, 51)
    loc_err = amp_err = scale_err = 0.0
    for _ in range(100):
        r = int(rng.integers(1, 11))
        t = _locations(rng, r, 2 / n)
        a = _amps(rng, r)
        x = spectrum(FriModel(ModelKind.DIRACS, tuple(Spike(u, v) for u, v in zip(t, a))), n)
        est = matrix_pencil(x, L, r)
        order = np.argsort(est.t)
        d = np.abs(est.t[order] - t)
        loc_err = max(loc_err, np.minimum(d, 1 - d).max())
        got = np.array([v[0] for v in amplitudes(est, x)])[order]
        amp_err = max(amp_err, np.abs(got - a).max())
        c = rng.uniform(0.1, 10) * np.exp(2j * np.pi * rng.random())
        scaled = matrix_pencil(c * x, L, r)
        scale_err = max(scale_err, np.abs(np.array([p for p, _ in scaled.poles]) - np.array([p for p, _ in est.poles])).max())
    ok = loc_err < 1e-8 and amp_err < 1e-7 and scale_err < 1e-10
    report(8, "matrix pencil exactness", ok, f"location {loc_err:.1e}, amplitude {amp_err:.1e}, pole shift under scaling {scale_err:.1e}")
    assert ok


def test_solver_matches_svt_reference(report):
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 13))
        d = int(rng.integers(3, min(6, n - 2) + 1))
        wrap = seed % 2 == 1
        L = StructuredLift(LiftKind.WRAPAROUND if wrap else LiftKind.STANDARD, n, d)
        # wrap-around lifts of a single pole are rank one only on the grid
        t = rng.integers(n) / n if wrap else rng.random()
        x = _amps(rng, 1)[0] * np.exp(-2j * np.pi * np.arange(n) * t)
        m = int(rng.integers(n // 2 + 1, n))
        idx = np.sort(rng.choice(n, m, replace=False))
        ref = svt_complete(n, d, wrap, idx, x[idx])
        res = complete(SampleSet.from_vector(x, idx), L, SolverParams(rank_cap=2, max_iter=2000, tol=1e-12))
        worst = max(worst, nmse(res.g, ref))
    ok = worst <= 1e-6
    report(9, "solver vs SVT reference", ok, f"20 instances, worst NMSE {worst:.1e}")
    assert ok
