"""Structured low-rank interpolation of sparse Fourier samples of FRI signals."""
from .bench import ExperimentConfig, SamplingMode, Scenario, run_phase_transition
from .estimation import PencilError, PoleEstimate, amplitudes, incoherence, matrix_pencil, reconstruct_cardinal
from .signals import FriModel, ModelKind, Spike, spectrum, weighted_spectrum
from .solvers import CompletionResult, SolverParams, complete
from .structured import LiftKind, SampleSet, StructuredLift, lift, pseudo_inverse
from .weighting import WhiteningSpec, weight_spectrum

__all__ = [
    "ExperimentConfig",
    "SamplingMode",
    "Scenario",
    "run_phase_transition",
    "PencilError",
    "PoleEstimate",
    "amplitudes",
    "incoherence",
    "matrix_pencil",
    "reconstruct_cardinal",
    "FriModel",
    "ModelKind",
    "Spike",
    "spectrum",
    "weighted_spectrum",
    "CompletionResult",
    "SolverParams",
    "complete",
    "LiftKind",
    "SampleSet",
    "StructuredLift",
    "lift",
    "pseudo_inverse",
    "WhiteningSpec",
    "weight_spectrum",
]

__version__ = "0.1.0"
