"""Passive linear optics on Fock states.

Convention: an interferometer matrix ``U`` sends a photon entering mode ``k``
to output mode ``s`` with amplitude ``U[s, k]``, i.e. ``U`` acts on
single-photon kets as an ordinary matrix and ``<s|U|f_k> = U[s, k]``.
Multi-photon amplitudes are permanents of submatrices of ``U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from . import kernels
from ._errors import DomainError
from .fock_core import PureFockState, enumerate_detection_patterns

UNITARITY_TOL = 1e-12

BEAM_SPLITTER = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class InterferometerMatrix:
    """Unitary mode transformation, checked on construction."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"interferometer must be square, got shape {m.shape}")
        err = np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))) if m.size else 0.0
        if err > UNITARITY_TOL:
            raise DomainError(f"matrix is not unitary (max deviation {err:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class LossChannel:
    """Pure-loss channel with power transmittance ``transmittance``."""

    transmittance: float
    distance_km: float | None = None
    gamma_db_per_km: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.transmittance <= 1.0:
            raise DomainError(f"transmittance must lie in [0, 1], got {self.transmittance}")

    @classmethod
    def from_distance(cls, distance_km: float, gamma_db_per_km: float = 0.2) -> "LossChannel":
        if distance_km < 0 or gamma_db_per_km < 0:
            raise DomainError("distance and loss coefficient must be non-negative")
        return cls(fiber_transmittance(distance_km, gamma_db_per_km), distance_km, gamma_db_per_km)

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.transmittance)


def fiber_transmittance(distance_km, gamma_db_per_km=0.2):
    """Power transmittance ``10**(-gamma*d/10)`` of a fibre span."""
    if np.any(np.asarray(distance_km) < 0) or gamma_db_per_km < 0:
        raise DomainError("distance and loss coefficient must be non-negative")
    if np.ndim(distance_km):
        return 10.0 ** (-np.asarray(distance_km, dtype=float) * gamma_db_per_km / 10.0)
    return 10.0 ** (-float(distance_km) * gamma_db_per_km / 10.0)


def _power_of_two_exponent(n_modes: int) -> int:
    if n_modes < 1 or n_modes & (n_modes - 1):
        raise DomainError(f"Hadamard tree needs a power-of-two mode count, got {n_modes}")
    return n_modes.bit_length() - 1


def beam_splitter_layers(n_modes: int) -> list[np.ndarray]:
    """The individual 50:50 layers of the tree, ``1_j (x) u (x) 1_{n-1-j}`` for ``j = 0..n-1``."""
    n = _power_of_two_exponent(n_modes)
    eye2 = np.eye(2)
    layers = []
    for j in range(n):
        factors = [eye2] * j + [BEAM_SPLITTER] + [eye2] * (n - 1 - j)
        layers.append(reduce(np.kron, factors, np.eye(1)))
    return layers


def hadamard_tree(n_modes: int) -> InterferometerMatrix:
    """``u^{(x) n}`` for ``n_modes = 2**n``; all entries are ``+-1/sqrt(n_modes)``."""
    n = _power_of_two_exponent(n_modes)
    return InterferometerMatrix(reduce(np.kron, [BEAM_SPLITTER] * n, np.eye(1)))


def tree_for_parties(n_parties: int) -> InterferometerMatrix:
    """Smallest Hadamard tree with at least ``n_parties`` input ports (extra ports get vacuum)."""
    if n_parties < 1:
        raise DomainError("need at least one party")
    width = 1 << (n_parties - 1).bit_length()
    return hadamard_tree(width)


def permanent(m) -> complex:
    """Matrix permanent by Ryser's formula in Gray-code order."""
    m = np.ascontiguousarray(np.asarray(m, dtype=np.complex128))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"permanent needs a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        return 1.0 + 0.0j
    if m.shape[0] == 1:
        return complex(m[0, 0])
    return complex(kernels.ryser_permanent(m))


def _repeat_indices(occupation: Sequence[int]) -> list[int]:
    return [mode for mode, count in enumerate(occupation) for _ in range(count)]


def _factorial_norm(occupation: Sequence[int]) -> float:
    return math.prod(math.factorial(c) for c in occupation)


def transition_amplitude(u, input: Sequence[int], output: Sequence[int]) -> complex:
    """``<output| U |input>`` for Fock states of the interferometer's modes."""
    mat = np.asarray(u, dtype=complex)
    if len(input) != mat.shape[0] or len(output) != mat.shape[0]:
        raise DomainError("occupation vectors must match the interferometer size")
    if sum(input) != sum(output):
        raise DomainError(f"photon number mismatch: {sum(input)} in, {sum(output)} out")
    rows = _repeat_indices(output)
    cols = _repeat_indices(input)
    sub = mat[np.ix_(rows, cols)]
    return permanent(sub) / math.sqrt(_factorial_norm(input) * _factorial_norm(output))


def output_distribution(u, input: Sequence[int]) -> dict[tuple, complex]:
    """Amplitudes of every output pattern for one input pattern (zeros omitted)."""
    mat = np.asarray(u, dtype=complex)
    out = {}
    for pattern in enumerate_detection_patterns(mat.shape[0], sum(input)):
        amp = transition_amplitude(mat, input, pattern)
        if amp != 0:
            out[tuple(pattern)] = amp
    return out


def apply_interferometer(u, state: PureFockState, register: str) -> PureFockState:
    """Exact multi-photon action of ``u`` on the modes of ``register``."""
    mat = np.asarray(u, dtype=complex)
    sl = state.register_slice(register)
    if sl.stop - sl.start != mat.shape[0]:
        raise DomainError(
            f"register {register!r} has {sl.stop - sl.start} modes, interferometer has {mat.shape[0]}"
        )
    cache: dict[tuple, dict[tuple, complex]] = {}
    amps: dict[tuple, complex] = {}
    for key, value in state.items():
        pattern = key[sl]
        if pattern not in cache:
            cache[pattern] = output_distribution(mat, pattern)
        head, tail = key[: sl.start], key[sl.stop :]
        for out, amp in cache[pattern].items():
            new = head + out + tail
            amps[new] = amps.get(new, 0j) + value * amp
    return PureFockState(amps, state.registers)


def apply_loss(channel: LossChannel | float, state: PureFockState, mode: int, environment_mode: int) -> PureFockState:
    """Beam splitter between ``mode`` and a vacuum ``environment_mode``.

    ``n`` photons become ``sum_k sqrt(C(n,k)) t^k r^(n-k) |k>|n-k>`` with
    ``t = sqrt(T)`` and ``r = sqrt(1-T)``.
    """
    transmittance = channel.transmittance if isinstance(channel, LossChannel) else float(channel)
    if not 0.0 <= transmittance <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {transmittance}")
    if mode == environment_mode:
        raise DomainError("signal and environment modes must differ")
    t, r = math.sqrt(transmittance), math.sqrt(1.0 - transmittance)
    amps: dict[tuple, complex] = {}
    for key, value in state.items():
        if key[environment_mode] != 0:
            raise DomainError(f"environment mode {environment_mode} is not in vacuum in term {key}")
        n = key[mode]
        new = list(key)
        for kept in range(n + 1):
            coeff = math.sqrt(math.comb(n, kept)) * t**kept * r ** (n - kept)
            if coeff == 0.0:
                continue
            new[mode] = kept
            new[environment_mode] = n - kept
            k = tuple(new)
            amps[k] = amps.get(k, 0j) + value * coeff
    return PureFockState(amps, state.registers)
