import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as P

from frilift.signals import (
    FriModel,
    ModelKind,
    Spike,
    annihilating_filter,
    annihilation_residual,
    confluent_vandermonde,
    discrete_innovation,
    filter_from_roots,
    min_separation,
    numerical_rank,
    rect_spectrum,
    spectrum,
    weighted_spectrum,
)
from frilift.structured import StructuredLift, lift
from frilift.weighting import WhiteningSpec, weight_spectrum
from oracles import rect_fourier_quad


def diracs(ts, amps):
    return FriModel(ModelKind.DIRACS, tuple(Spike(t, a) for t, a in zip(ts, amps)))


def test_dirac_spectrum_direct_sum():
    m = diracs([0.1, 0.55], [2.0, -1j])
    k = np.arange(10)
    expected = 2.0 * np.exp(-2j * np.pi * k * 0.1) - 1j * np.exp(-2j * np.pi * k * 0.55)
    np.testing.assert_allclose(spectrum(m, 10), expected, atol=1e-13)


def test_single_dirac_at_origin_is_flat():
    np.testing.assert_allclose(spectrum(diracs([0.0], [3.0]), 8), 3.0)


def test_centered_frequencies():
    m = diracs([0.3], [1.0])
    k = np.arange(-4, 4)
    np.testing.assert_allclose(spectrum(m, 8, centered=True), np.exp(-2j * np.pi * k * 0.3), atol=1e-13)


def test_differentiated_dirac_spectrum():
    m = FriModel(ModelKind.DIFFERENTIATED_DIRACS, (Spike(0.25, (1.0, 0.5)),))
    k = np.arange(6)
    expected = (1.0 + 0.5 * 2j * np.pi * k) * np.exp(-2j * np.pi * k * 0.25)
    np.testing.assert_allclose(spectrum(m, 6), expected, atol=1e-12)


@pytest.mark.parametrize("k", [0, 1, 3, 17])
def test_rect_spectrum_matches_quadrature(k):
    edges = [(0.1234, 0.4321, 1.5), (0.61, 0.93, -0.5 + 0.2j)]
    got = rect_spectrum(edges, [k])[0]
    ref = sum(rect_fourier_quad(a, b, h, k) for a, b, h in edges)
    assert abs(got - ref) < 1e-10


def test_rect_spectrum_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        rect_spectrum([(0.3, 0.3, 1.0)], [1])


def test_piecewise_constant_model_matches_rectangles():
    a, b, h = 0.21, 0.67, 1.3
    model = FriModel(
        ModelKind.PIECEWISE_POLYNOMIAL,
        (Spike(a, h), Spike(b, -h)),
        degree=0,
        dc=h * (b - a),
    )
    np.testing.assert_allclose(spectrum(model, 32), rect_spectrum([(a, b, h)], np.arange(32)), atol=1e-12)


def test_inconsistent_innovation_rejected():
    model = FriModel(ModelKind.PIECEWISE_POLYNOMIAL, (Spike(0.2, 1.0),), degree=0)
    with pytest.raises(ValueError, match="inconsistent"):
        spectrum(model, 16)


def test_cardinal_piecewise_constant_matches_dft_of_samples():
    n = 32
    idx = [3, 10, 20]
    a = np.array([1.0, -2.5, 1.5])
    x = np.zeros(n)
    x[idx] = a
    x = np.cumsum(x)
    model = FriModel(
        ModelKind.CARDINAL_SPLINE,
        tuple(Spike(p / n, v) for p, v in zip(idx, a)),
        order=0,
        grid=n,
        dc=x.sum(),
    )
    np.testing.assert_allclose(spectrum(model, n), np.fft.fft(x), atol=1e-12)


def test_cardinal_innovation_support_counts_taps():
    n = 40
    model = FriModel(ModelKind.CARDINAL_SPLINE, (Spike(5 / n, 1.0), Spike(20 / n, -1.0)), order=2, grid=n)
    u = discrete_innovation(model)
    np.testing.assert_array_equal(np.flatnonzero(u), [6, 7, 21, 22])
    assert model.total_order == 4


def test_cardinal_knots_must_be_on_grid():
    with pytest.raises(ValueError):
        FriModel(ModelKind.CARDINAL_SPLINE, (Spike(0.123, 1.0),), order=0, grid=10)


def test_model_validation():
    with pytest.raises(ValueError):
        Spike(1.0, 1.0)
    with pytest.raises(ValueError):
        Spike(0.5, (1.0, 0.0))
    with pytest.raises(ValueError):
        diracs([0.1, 0.1], [1, 1])
    with pytest.raises(ValueError):
        FriModel(ModelKind.DIRACS, (Spike(0.1, (1, 2)),))
    with pytest.raises(ValueError):
        FriModel(ModelKind.NONUNIFORM_SPLINE, (Spike(0.1, 1),), whitening=WhiteningSpec.difference(0))


def test_model_json_roundtrip():
    m = FriModel(
        ModelKind.NONUNIFORM_SPLINE,
        (Spike(0.1, 1 + 1j), Spike(0.7, -2.0)),
        whitening=WhiteningSpec.differential([1.0, 1.0]),
    )
    back = FriModel.from_dict(m.to_dict())
    assert back == m
    with pytest.raises(ValueError):
        FriModel.from_dict({**m.to_dict(), "surplus": 1})


def test_nonuniform_spline_weighting():
    spec = WhiteningSpec.differential([1.0, 1.0])
    m = FriModel(ModelKind.NONUNIFORM_SPLINE, (Spike(0.1, 1.0), Spike(0.6, 0.5)), whitening=spec)
    n = 16
    np.testing.assert_allclose(spectrum(m, n) * weight_spectrum(spec, n), weighted_spectrum(m, n), atol=1e-12)


@pytest.mark.parametrize("poles", [[(0.8 + 0.6j, 1)], [(1j, 3)], [(np.exp(0.3j), 2), (np.exp(-1.1j), 1)]])
def test_confluent_vandermonde_matches_polynomial_derivatives(poles):
    N = 7
    V = confluent_vandermonde(poles, N)
    col = 0
    for lam, mult in poles:
        for c in range(mult):
            ref = [P.polyval(lam, P.polyder(np.eye(N)[k], c)) if k >= c else 0 for k in range(N)]
            np.testing.assert_allclose(V[:, col], ref, atol=1e-12)
            col += 1
    assert V.shape == (N, sum(m for _, m in poles))


def test_lifted_spectrum_lies_in_confluent_column_space():
    m = FriModel(ModelKind.DIFFERENTIATED_DIRACS, (Spike(0.2, (1.0, 0.3)), Spike(0.7, (2.0, 0.0, 0.1))))
    n, d = 40, 20
    H = lift(spectrum(m, n), StructuredLift.standard(n, d))
    V = confluent_vandermonde(m.poles, n - d + 1)
    Q, _ = np.linalg.qr(V)
    assert np.linalg.norm(H - Q @ (Q.conj().T @ H)) < 1e-9 * np.linalg.norm(H)


def test_annihilating_filter_kills_spectrum():
    m = FriModel(ModelKind.DIFFERENTIATED_DIRACS, (Spike(0.15, (1.0, 0.2)), Spike(0.6, 1.0)))
    h = annihilating_filter(m)
    assert h.length == 4
    assert h.coefficients[0] == 1
    assert annihilation_residual(spectrum(m, 30), h) < 1e-10
    # a filter missing one root does not annihilate
    short = filter_from_roots([(m.spikes[0].pole, 2)])
    assert annihilation_residual(spectrum(m, 30), short) > 1e-3


def test_cardinal_annihilation():
    n = 24
    model = FriModel(ModelKind.CARDINAL_SPLINE, tuple(Spike(p / n, v) for p, v in [(2, 1.0), (9, -0.4), (15, -0.6)]), order=1, grid=n)
    assert annihilation_residual(weighted_spectrum(model, n), annihilating_filter(model)) < 1e-12


def test_min_separation_wraps():
    assert min_separation([0.05, 0.5, 0.97]) == pytest.approx(0.08)
    with pytest.raises(ValueError):
        min_separation([0.3])


def test_numerical_rank():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.outer([1, 2, 3], [1, 1])) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_dirac_lift_rank_equals_count(s, seed):
    rng = np.random.default_rng(seed)
    n, d = 40, 20
    t = np.sort(rng.choice(np.arange(n), size=s, replace=False)) / n
    m = diracs(t, rng.uniform(0.5, 1.5, s))
    assert numerical_rank(lift(spectrum(m, n), StructuredLift.standard(n, d))) == s
