"""Occupation-number combinatorics and sparse pure states over multimode Fock space.

States are stored as a mapping from occupation tuples to complex amplitudes,
together with an ordered list of named, contiguous mode registers (for
example ``X``, ``X'`` and ``E`` for the retained, transmitted and environment
modes of a network). All objects are treated as immutable.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._errors import DomainError

PRUNE_THRESHOLD = 1e-15


class OccupationVector(tuple):
    """Photon counts per mode.

    A thin ``tuple`` subclass, so it hashes and compares equal to the plain
    tuple with the same entries. Concatenation with ``+`` returns another
    ``OccupationVector``.
    """

    def __new__(cls, counts: Iterable[int] = ()):
        counts = tuple(int(c) for c in counts)
        if any(c < 0 for c in counts):
            raise DomainError(f"negative photon number in {counts}")
        return super().__new__(cls, counts)

    @property
    def n_modes(self) -> int:
        return len(self)

    def total(self) -> int:
        return sum(self)

    def __add__(self, other):
        return OccupationVector(tuple(self) + tuple(other))

    def __repr__(self):
        return f"OccupationVector({tuple(self)})"


@dataclass(frozen=True)
class DickeSpec:
    """Generalised Dicke state with ``n_photons`` spread over ``n_modes``.

    ``phases`` holds one phase per single-occupancy basis vector, in the
    order of :func:`enumerate_single_occupancy`. ``None`` means all zero.
    """

    n_modes: int
    n_photons: int
    phases: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError("n_modes must be positive")
        if not 0 <= self.n_photons <= self.n_modes:
            raise DomainError(f"need 0 <= n_photons <= n_modes, got {self.n_photons}, {self.n_modes}")
        if self.phases is not None:
            object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
            if len(self.phases) != self.n_terms:
                raise DomainError(f"expected {self.n_terms} phases, got {len(self.phases)}")

    @property
    def n_terms(self) -> int:
        return math.comb(self.n_modes, self.n_photons)

    def phase_list(self) -> tuple[float, ...]:
        return self.phases if self.phases is not None else (0.0,) * self.n_terms


def enumerate_single_occupancy(n_modes: int, n_photons: int) -> list[OccupationVector]:
    """All vectors with ``n_photons`` ones in ``n_modes`` slots.

    Descending lexicographic order, so ``(4, 2)`` starts ``1100, 1010, 1001``.
    """
    if n_modes < 0 or not 0 <= n_photons <= n_modes:
        raise DomainError(f"need 0 <= n_photons <= n_modes, got {n_photons}, {n_modes}")
    out = [OccupationVector(v) for v in itertools.product((1, 0), repeat=n_modes) if sum(v) == n_photons]
    return out


def enumerate_detection_patterns(n_modes: int, n_photons: int) -> list[OccupationVector]:
    """All weak compositions of ``n_photons`` into ``n_modes`` parts.

    Ordered with the first mode's count descending, e.g. ``(2,0), (1,1), (0,2)``.
    """
    if n_photons < 0 or n_modes < 0:
        raise DomainError("n_modes and n_photons must be non-negative")
    return [OccupationVector(v) for v in _compositions(n_modes, n_photons)]


def _compositions(n_modes: int, n_photons: int):
    if n_modes == 0:
        if n_photons == 0:
            yield ()
        return
    if n_modes == 1:
        yield (n_photons,)
        return
    for first in range(n_photons, -1, -1):
        for rest in _compositions(n_modes - 1, n_photons - first):
            yield (first,) + rest


def single_occupancy_index(vector: Sequence[int]) -> int:
    """Position of a 0/1 vector in :func:`enumerate_single_occupancy` order."""
    vector = tuple(vector)
    if any(c not in (0, 1) for c in vector):
        raise DomainError(f"{vector} is not a single-occupancy vector")
    n, k = len(vector), sum(vector)
    rank = 0
    for pos, c in enumerate(vector):
        if c == 1:
            k -= 1
        elif k > 0:
            # same prefix with a 1 here sorts first
            rank += math.comb(n - pos - 1, k - 1)
    return rank


class PureFockState:
    """Sparse (possibly sub-normalised) pure state.

    Parameters
    ----------
    amplitudes
        Mapping from occupation tuples to complex amplitudes. Duplicate keys
        are not possible; entries below ``prune`` in magnitude are dropped.
    registers
        Ordered ``(name, width)`` pairs covering all modes left to right.
    """

    __slots__ = ("_amps", "_registers", "_n_modes")

    def __init__(
        self,
        amplitudes: Mapping[tuple, complex],
        registers: Sequence[tuple[str, int]],
        prune: float = PRUNE_THRESHOLD,
    ):
        regs = []
        start = 0
        for name, width in registers:
            if width < 0:
                raise DomainError(f"register {name!r} has negative width")
            regs.append((name, start, start + width))
            start += width
        names = [r[0] for r in regs]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate register names {names}")
        self._registers = tuple(regs)
        self._n_modes = start
        amps = {}
        for key, value in amplitudes.items():
            key = tuple(key)
            if len(key) != start:
                raise DomainError(f"occupation {key} does not match {start} modes")
            value = complex(value)
            if abs(value) > prune:
                amps[key] = value
        self._amps = amps

    @property
    def n_modes(self) -> int:
        return self._n_modes

    @property
    def registers(self) -> tuple[tuple[str, int], ...]:
        return tuple((name, stop - start) for name, start, stop in self._registers)

    @property
    def register_names(self) -> tuple[str, ...]:
        return tuple(r[0] for r in self._registers)

    def register_slice(self, name: str) -> slice:
        for reg, start, stop in self._registers:
            if reg == name:
                return slice(start, stop)
        raise DomainError(f"no register named {name!r}; have {self.register_names}")

    def items(self):
        return self._amps.items()

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return self._amps.get(tuple(occupation), 0.0j)

    def norm2(self) -> float:
        return math.fsum(abs(v) ** 2 for v in self._amps.values())

    def __len__(self):
        return len(self._amps)

    def __repr__(self):
        regs = ", ".join(f"{n}:{w}" for n, w in self.registers)
        return f"PureFockState({len(self)} terms, registers [{regs}], norm2={self.norm2():.6g})"


def basis_state(occupation: Sequence[int], registers: Sequence[tuple[str, int]] | None = None) -> PureFockState:
    occupation = tuple(occupation)
    if registers is None:
        registers = [("modes", len(occupation))]
    return PureFockState({occupation: 1.0}, registers)


def dicke_state(spec: DickeSpec, register: str = "X") -> PureFockState:
    """Normalised superposition of all single-occupancy vectors with the phases carried by ``spec``."""
    vectors = enumerate_single_occupancy(spec.n_modes, spec.n_photons)
    norm = 1.0 / math.sqrt(len(vectors))
    amps = {tuple(v): norm * cmath.exp(1j * phi) for v, phi in zip(vectors, spec.phase_list())}
    return PureFockState(amps, [(register, spec.n_modes)])


def tensor(a: PureFockState, b: PureFockState) -> PureFockState:
    overlap = set(a.register_names) & set(b.register_names)
    if overlap:
        raise DomainError(f"register names collide: {sorted(overlap)}")
    amps = {ka + kb: va * vb for ka, va in a.items() for kb, vb in b.items()}
    return PureFockState(amps, a.registers + b.registers)


def inner(a: PureFockState, b: PureFockState) -> complex:
    """``<a|b>``."""
    if a.registers != b.registers:
        raise DomainError(f"register layouts differ: {a.registers} vs {b.registers}")
    if len(a) > len(b):
        return sum((va.conjugate() * b.amplitude(k) for k, va in a.items()), 0j)
    return sum((a.amplitude(k).conjugate() * vb for k, vb in b.items()), 0j)


def normalize(a: PureFockState) -> PureFockState:
    n2 = a.norm2()
    if n2 == 0.0:
        raise DomainError("cannot normalise the zero vector")
    scale = 1.0 / math.sqrt(n2)
    return PureFockState({k: v * scale for k, v in a.items()}, a.registers)


def scale(a: PureFockState, factor: complex) -> PureFockState:
    return PureFockState({k: v * factor for k, v in a.items()}, a.registers)


def partial_projection(state: PureFockState, register: str, pattern: Sequence[int]) -> PureFockState:
    """Project ``register`` onto ``pattern`` and drop it.

    The result lives on the remaining registers and is left unnormalised: its
    squared norm is the probability of the outcome.
    """
    sl = state.register_slice(register)
    pattern = tuple(pattern)
    if len(pattern) != sl.stop - sl.start:
        raise DomainError(f"pattern {pattern} does not fit register {register!r} of width {sl.stop - sl.start}")
    amps = {}
    for key, value in state.items():
        if key[sl] == pattern:
            rest = key[: sl.start] + key[sl.stop :]
            amps[rest] = value
    regs = [(n, w) for n, w in state.registers if n != register]
    return PureFockState(amps, regs)


def outcome_probabilities(state: PureFockState, register: str) -> dict[OccupationVector, float]:
    """Squared-norm weight of every occupation pattern that appears on ``register``."""
    sl = state.register_slice(register)
    probs: dict[tuple, list] = defaultdict(list)
    for key, value in state.items():
        probs[key[sl]].append(abs(value) ** 2)
    return {OccupationVector(k): math.fsum(v) for k, v in probs.items()}


def photon_number_sector(state: PureFockState, register: str, n_photons: int) -> PureFockState:
    """Keep only terms carrying exactly ``n_photons`` in ``register``."""
    sl = state.register_slice(register)
    return PureFockState({k: v for k, v in state.items() if sum(k[sl]) == n_photons}, state.registers)


def apply_phases(state: PureFockState, register: str, phases: Sequence[float]) -> PureFockState:
    """Phase shift ``exp(i*phi_j*n_j)`` on every mode ``j`` of ``register``."""
    sl = state.register_slice(register)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (sl.stop - sl.start,):
        raise DomainError(f"need {sl.stop - sl.start} phases for register {register!r}")
    amps = {k: v * cmath.exp(1j * float(np.dot(phases, k[sl]))) for k, v in state.items()}
    return PureFockState(amps, state.registers)


def reduced_density_matrix(
    state: PureFockState, keep: str | Sequence[str]
) -> tuple[list[OccupationVector], np.ndarray]:
    """Trace out every register not in ``keep``.

    Returns the occupation basis that appears on the kept registers (sorted)
    and the density matrix in that basis.
    """
    keep = [keep] if isinstance(keep, str) else list(keep)
    slices = [state.register_slice(name) for name in keep]

    def kept(key):
        return sum((key[s] for s in slices), ())

    def traced(key):
        mask = np.ones(state.n_modes, dtype=bool)
        for s in slices:
            mask[s] = False
        return tuple(c for c, m in zip(key, mask) if m)

    groups: dict[tuple, dict[tuple, complex]] = defaultdict(dict)
    basis_set = set()
    for key, value in state.items():
        k = kept(key)
        groups[traced(key)][k] = value
        basis_set.add(k)
    basis = sorted(basis_set, reverse=True)
    index = {b: i for i, b in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for branch in groups.values():
        idx = np.array([index[k] for k in branch])
        vec = np.array(list(branch.values()))
        rho[np.ix_(idx, idx)] += np.outer(vec, vec.conj())
    return [OccupationVector(b) for b in basis], rho


def fidelity_with_pure(state: PureFockState, target: PureFockState, register: str) -> float:
    """``<t|rho|t>`` where ``rho`` is ``state`` reduced to ``register``.

    ``state`` may carry other registers (e.g. an environment purification);
    they are traced out. ``target`` must be a single-register state of the
    same width. The result is not divided by ``state.norm2()``.
    """
    sl = state.register_slice(register)
    if target.n_modes != sl.stop - sl.start:
        raise DomainError("target width does not match register")
    branches: dict[tuple, complex] = defaultdict(complex)
    for key, value in state.items():
        t = target.amplitude(key[sl])
        if t:
            rest = key[: sl.start] + key[sl.stop :]
            branches[rest] += t.conjugate() * value
    return math.fsum(abs(v) ** 2 for v in branches.values())
