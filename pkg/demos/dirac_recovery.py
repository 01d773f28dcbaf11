"""Recover three Diracs from 40 of 100 Fourier samples.

The lifted Hankel matrix of a Dirac stream has rank equal to the number of
spikes, so the missing samples follow from a low-rank completion. The
matrix pencil then reads the locations off the completed spectrum.
"""
import numpy as np

from frilift.bench import SamplingMode, nmse, sample_omega
from frilift.estimation import amplitudes, matrix_pencil
from frilift.signals import FriModel, ModelKind, Spike, spectrum
from frilift.solvers import SolverParams, complete
from frilift.structured import SampleSet, StructuredLift

n, d, m = 100, 51, 40
rng = np.random.default_rng(7)

model = FriModel(ModelKind.DIRACS, (Spike(0.137, 1.0), Spike(0.52, 0.8 - 0.4j), Spike(0.861, 1.3)))
x_hat = spectrum(model, n)

omega = sample_omega(n, m, SamplingMode.WITHOUT_REPLACEMENT_FORCE_DC, rng)
samples = SampleSet.from_vector(x_hat, omega)
lift_ = StructuredLift.standard(n, d)

# a small rank cap keeps the factorized solver close to the true rank
result = complete(samples, lift_, SolverParams(rank_cap=5, seed=1))
print(f"completion: {result.iterations} iterations, NMSE {nmse(result.g, x_hat):.2e}")

est = matrix_pencil(result.g, lift_, 3)
amps = amplitudes(est, result.g)
for t, a in zip(est.t, amps):
    print(f"  spike at t={t:.6f}, amplitude {complex(a[0]):.4f}")
print("truth:", model.locations)
