"""Heralded W and Dicke state distribution over lossy star networks.

Submodules:

``fock_core``       occupation vectors, sparse pure states, Dicke targets
``linear_optics``   interferometers, permanents, photon loss
``protocol``        the heralding protocol with single-photon sources
``gaussian_cv``     the same protocol driven by two-mode squeezed vacuum
``fock_engine``     truncated-Fock cross-check of ``gaussian_cv``
``benchmarks``      direct transmission and the squashed-entanglement bound
``cli``             distance sweeps and figure presets
"""

from ._errors import (
    DomainError,
    FidelityCeilingError,
    UninformativeHeraldError,
    UnsupportedPatternError,
)
from .fock_core import DickeSpec, OccupationVector, PureFockState, dicke_state
from .kernels import BACKEND
from .linear_optics import InterferometerMatrix, LossChannel, fiber_transmittance, hadamard_tree, permanent
from .protocol import ProtocolParams, herald, herald_probability_exact, rate_at_fixed_fidelity
from .gaussian_cv import DetectorModel, SqueezingSpec, rate_and_fidelity, solve_squeezing_for_fidelity
from .benchmarks import direct_rate, squashed_bound_w3

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DetectorModel",
    "DickeSpec",
    "DomainError",
    "FidelityCeilingError",
    "InterferometerMatrix",
    "LossChannel",
    "OccupationVector",
    "ProtocolParams",
    "PureFockState",
    "SqueezingSpec",
    "UninformativeHeraldError",
    "UnsupportedPatternError",
    "dicke_state",
    "direct_rate",
    "fiber_transmittance",
    "hadamard_tree",
    "herald",
    "herald_probability_exact",
    "permanent",
    "rate_and_fidelity",
    "rate_at_fixed_fidelity",
    "solve_squeezing_for_fidelity",
    "squashed_bound_w3",
]
