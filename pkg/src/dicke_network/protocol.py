"""Heralded W/Dicke state distribution over a lossy star network.

Every party ``i`` prepares ``a|00> + b|11>`` on a retained mode ``X_i`` and a
transmitted mode ``X'_i``. The transmitted modes cross identical lossy arms
(loss is purified into environment modes ``E_i``), are mixed by a Hadamard
beam-splitter tree at the central station and detected. Conditioning on a
detection pattern ``s`` with ``M`` photons projects the retained modes close
to the Dicke state with ``M`` excitations.

Two routes are provided for the herald statistics: closed-form sums over
permanents (``herald_probability_exact`` and friends) and a brute-force
simulation of the whole network state (``simulate_heralds``/``herald``).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ._errors import DomainError, UninformativeHeraldError, UnsupportedPatternError
from .fock_core import (
    DickeSpec,
    OccupationVector,
    PureFockState,
    enumerate_detection_patterns,
    enumerate_single_occupancy,
    normalize,
    outcome_probabilities,
    partial_projection,
    photon_number_sector,
)
from .linear_optics import (
    InterferometerMatrix,
    LossChannel,
    apply_interferometer,
    apply_loss,
    transition_amplitude,
    tree_for_parties,
)

SMALL_B_WARNING = 0.5  # b**2 above this voids the small-b closed forms


@dataclass(frozen=True)
class ProtocolParams:
    """Network size, herald photon number, source amplitude ``b`` and arm channel.

    ``a`` is derived as ``sqrt(1 - b**2)``. The interferometer defaults to
    the smallest Hadamard tree with at least ``n_parties`` ports; spare
    ports receive vacuum.
    """

    n_parties: int
    herald_photons: int
    b: float
    channel: LossChannel
    interferometer: InterferometerMatrix | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_parties < 1:
            raise DomainError("need at least one party")
        if not 0 <= self.herald_photons <= self.n_parties:
            raise DomainError(f"need 0 <= M <= N, got M={self.herald_photons}, N={self.n_parties}")
        if not 0.0 <= self.b <= 1.0:
            raise DomainError(f"b must lie in [0, 1], got {self.b}")
        if self.b**2 > SMALL_B_WARNING:
            warnings.warn(
                f"b^2 = {self.b**2:.3g} > {SMALL_B_WARNING}: leading-order formulas are unreliable",
                stacklevel=3,
            )
        if self.interferometer is None:
            object.__setattr__(self, "interferometer", tree_for_parties(self.n_parties))
        elif self.interferometer.dim < self.n_parties:
            raise DomainError("interferometer has fewer ports than parties")

    @property
    def a(self) -> float:
        return math.sqrt(1.0 - self.b**2)

    @property
    def source_amplitudes(self) -> tuple[float, float]:
        return self.a, self.b

    @property
    def transmittance(self) -> float:
        return self.channel.transmittance

    @property
    def width(self) -> int:
        """Number of interferometer ports (and detectors)."""
        return self.interferometer.dim

    def with_herald_photons(self, m: int) -> "ProtocolParams":
        return ProtocolParams(self.n_parties, m, self.b, self.channel, self.interferometer)

    @cached_property
    def _amplitude_cache(self) -> dict:
        return {}


@dataclass(frozen=True)
class HeraldOutcome:
    """Result of conditioning on one detection pattern.

    ``conditional_state`` is the normalised post-measurement state on the
    retained register ``X`` together with its environment purification
    ``E``; tracing ``E`` gives the (generally mixed) state of the parties.
    """

    pattern: OccupationVector
    probability: float
    conditional_state: PureFockState | None
    fidelity_to_dicke: float


def _pad(vector: Sequence[int], width: int) -> tuple:
    return tuple(vector) + (0,) * (width - len(vector))


def _check_pattern(params: ProtocolParams, pattern: Sequence[int]) -> tuple:
    pattern = tuple(OccupationVector(pattern))
    if len(pattern) != params.width:
        raise DomainError(f"pattern {pattern} must have {params.width} entries (one per detector)")
    if sum(pattern) != params.herald_photons:
        raise DomainError(f"pattern {pattern} carries {sum(pattern)} photons, expected M={params.herald_photons}")
    return pattern


def _amplitude(params: ProtocolParams, source: tuple, pattern: tuple) -> complex:
    """``<s|U|g>`` for ``g`` a 0/1 vector over the parties, cached per params."""
    cache = params._amplitude_cache
    key = (source, pattern)
    if key not in cache:
        cache[key] = transition_amplitude(params.interferometer, _pad(source, params.width), pattern)
    return cache[key]


def build_network_state(params: ProtocolParams) -> PureFockState:
    """Joint pure state of retained, transmitted and environment modes after the arms.

    Registers are ``X`` (one mode per party), ``X'`` (one mode per
    interferometer port) and ``E`` (one environment mode per arm).
    """
    n, w = params.n_parties, params.width
    a, b = params.source_amplitudes
    amps = {}
    # product of a|00> + b|11> over parties
    for occ in itertools.product((0, 1), repeat=n):
        k = sum(occ)
        amp = a ** (n - k) * b**k
        if amp:
            amps[occ + _pad(occ, w) + (0,) * n] = amp
    state = PureFockState(amps, [("X", n), ("X'", w), ("E", n)])
    for i in range(n):
        state = apply_loss(params.channel, state, n + i, n + w + i)
    return state


def simulate_heralds(params: ProtocolParams) -> dict[OccupationVector, float]:
    """Brute-force probability of every ``M``-photon detection pattern.

    Builds the full network state, keeps the sector with ``M`` photons at
    the station (the interferometer conserves photon number), applies the
    interferometer and sums squared amplitudes over ``X`` and ``E``.
    """
    state = photon_number_sector(build_network_state(params), "X'", params.herald_photons)
    evolved = apply_interferometer(params.interferometer, state, "X'")
    probs = outcome_probabilities(evolved, "X'")
    return {p: probs.get(p, 0.0) for p in enumerate_detection_patterns(params.width, params.herald_photons)}


def herald(params: ProtocolParams, pattern: Sequence[int]) -> HeraldOutcome:
    """Simulate the network and condition on ``pattern``."""
    pattern = _check_pattern(params, pattern)
    state = photon_number_sector(build_network_state(params), "X'", params.herald_photons)
    evolved = apply_interferometer(params.interferometer, state, "X'")
    remainder = partial_projection(evolved, "X'", pattern)
    prob = remainder.norm2()
    if prob == 0.0 or params.herald_photons == 0:
        return HeraldOutcome(OccupationVector(pattern), prob, normalize(remainder) if prob else None, float("nan"))
    return HeraldOutcome(
        OccupationVector(pattern), prob, normalize(remainder), conditional_fidelity(params, pattern)
    )


def _sector_weight(params: ProtocolParams, k: int) -> float:
    """``(a^(N-K) b^K)^2 T^M (1-T)^(K-M)``."""
    a, b = params.source_amplitudes
    n, m, t = params.n_parties, params.herald_photons, params.transmittance
    return (a ** (n - k) * b**k) ** 2 * t**m * (1.0 - t) ** (k - m)


def herald_probability_exact(params: ProtocolParams, pattern: Sequence[int]) -> float:
    """Closed-form probability that the detectors register ``pattern``.

    Sums over the number ``K >= M`` of photons emitted, the ``C(N,K)``
    emitting subsets and the ``C(K,M)`` ways ``M`` of them survive, each
    weighted by the squared permanent amplitude ``|<s|U|g>|^2``.
    """
    pattern = _check_pattern(params, pattern)
    n, m = params.n_parties, params.herald_photons
    total = 0.0
    for k in range(m, n + 1):
        weight = _sector_weight(params, k)
        if weight == 0.0:
            continue
        inner_sum = 0.0
        for emitted in itertools.combinations(range(n), k):
            for survived in itertools.combinations(emitted, m):
                g = tuple(1 if i in survived else 0 for i in range(n))
                inner_sum += abs(_amplitude(params, g, pattern)) ** 2
        total += weight * inner_sum
    return total


def herald_probability_polynomial(params: ProtocolParams, pattern: Sequence[int]) -> np.polynomial.Polynomial:
    """The exact herald probability as a polynomial in the arm transmittance ``T``."""
    pattern = _check_pattern(params, pattern)
    a, b = params.source_amplitudes
    n, m = params.n_parties, params.herald_photons
    base = np.polynomial.Polynomial([0.0, 1.0]) ** m
    one_minus_t = np.polynomial.Polynomial([1.0, -1.0])
    amp2 = {
        g: abs(_amplitude(params, g, pattern)) ** 2
        for g in (tuple(v) for v in enumerate_single_occupancy(n, m))
    }
    poly = np.polynomial.Polynomial([0.0])
    for k in range(m, n + 1):
        # each M-subset g sits inside C(N-M, K-M) emitting K-subsets
        inner_sum = math.comb(n - m, k - m) * sum(amp2.values())
        poly = poly + (a ** (n - k) * b**k) ** 2 * inner_sum * base * one_minus_t ** (k - m)
    return poly


def herald_probability_leading(params: ProtocolParams) -> float:
    """Small-``T`` rate of one single-detector herald: ``T^M b^2M C(N,M) M! / W^M``.

    ``W`` is the interferometer width, which equals ``N`` for power-of-two
    networks.
    """
    n, m = params.n_parties, params.herald_photons
    return params.transmittance**m * params.b ** (2 * m) * math.comb(n, m) * math.factorial(m) / params.width**m


def arrival_probability(params: ProtocolParams) -> float:
    """Probability that exactly ``M`` photons reach the central station."""
    a, b = params.source_amplitudes
    n, m, t = params.n_parties, params.herald_photons, params.transmittance
    return math.fsum(
        (a ** (n - k) * b**k * math.sqrt(t) ** m * math.sqrt(1.0 - t) ** (k - m)) ** 2 * math.comb(n, k) * math.comb(k, m)
        for k in range(m, n + 1)
    )


def binomial_collapse(n: int, m: int, b: float) -> float:
    """``sum_{K=M}^{N} a^(2(N-K)) b^(2(K-M)) C(N-M, K-M)``, identically 1 when ``a^2 + b^2 = 1``."""
    a2 = 1.0 - b**2
    return math.fsum(a2 ** (n - k) * b ** (2 * (k - m)) * math.comb(n - m, k - m) for k in range(m, n + 1))


def conditional_fidelity(
    params: ProtocolParams, pattern: Sequence[int], target: DickeSpec | None = None
) -> float:
    """Fidelity of the heralded retained state with a Dicke state of ``M`` excitations.

    Only the lossless ``K = M`` branch overlaps an ``M``-photon target, so
    the result is exact. With ``target=None`` (or a target without phases)
    the target phases are chosen to match the heralded ones, which is the
    fidelity reached after ideal feed-forward. A target with explicit
    phases is used as given.
    """
    pattern = _check_pattern(params, pattern)
    n, m = params.n_parties, params.herald_photons
    if m == 0:
        raise UninformativeHeraldError("a vacuum pattern heralds nothing")
    if target is None:
        target = DickeSpec(n, m)
    if target.n_modes != n or target.n_photons != m:
        raise DomainError(f"target must be a Dicke state on {n} modes with {m} excitations")
    p_s = herald_probability_exact(params, pattern)
    if p_s == 0.0:
        raise UninformativeHeraldError(f"pattern {pattern} has zero probability; conditional state undefined")
    vectors = [tuple(v) for v in enumerate_single_occupancy(n, m)]
    amps = np.array([_amplitude(params, v, pattern) for v in vectors])
    if target.phases is None:
        overlap = np.sum(np.abs(amps))
    else:
        overlap = abs(np.sum(np.exp(-1j * np.asarray(target.phases)) * amps))
    weight = params.a ** (2 * (n - m)) * params.b ** (2 * m) * params.transmittance**m
    return float(min(1.0, weight * overlap**2 / len(vectors) / p_s))


def b_for_fidelity(n_parties: int, fidelity: float, herald_photons: int = 1) -> float:
    """Source amplitude whose small-``T`` single-detector fidelity ``a^(2(N-M))`` equals ``fidelity``."""
    if not 0.0 < fidelity < 1.0:
        raise DomainError(f"fidelity must lie in (0, 1), got {fidelity}")
    if n_parties - herald_photons < 1:
        raise DomainError("need N > M for a fidelity below 1")
    return math.sqrt(1.0 - fidelity ** (1.0 / (n_parties - herald_photons)))


def rate_at_fixed_fidelity(n_parties: int, fidelity: float, channel: LossChannel | float) -> float:
    """``N (1 - F^(1/(N-1))) T``: W-state rate summed over all ``N`` detectors at fidelity ``F``."""
    if n_parties < 2:
        raise DomainError("need at least two parties")
    if not 0.0 < fidelity < 1.0:
        raise DomainError(f"fidelity must lie in (0, 1), got {fidelity}")
    t = channel.transmittance if isinstance(channel, LossChannel) else float(channel)
    return n_parties * (1.0 - fidelity ** (1.0 / (n_parties - 1))) * t


def rate_asymptote(fidelity: float, channel: LossChannel | float) -> float:
    """Large-``N`` limit ``T ln(1/F)`` of :func:`rate_at_fixed_fidelity`."""
    t = channel.transmittance if isinstance(channel, LossChannel) else float(channel)
    return t * math.log(1.0 / fidelity)


def dicke_rate_at_fixed_fidelity(
    n_parties: int, herald_photons: int, fidelity: float, channel: LossChannel | float
) -> float:
    """Leading-order single-detector Dicke rate summed over detectors, with ``b`` set by ``fidelity``."""
    t = channel.transmittance if isinstance(channel, LossChannel) else float(channel)
    b = b_for_fidelity(n_parties, fidelity, herald_photons)
    params = ProtocolParams(n_parties, herald_photons, b, LossChannel(t))
    return params.width * herald_probability_leading(params)


def single_detector_patterns(width: int, herald_photons: int) -> list[OccupationVector]:
    """Patterns with all ``M`` photons in one detector."""
    return [OccupationVector(herald_photons if j == i else 0 for j in range(width)) for i in range(width)]


def feedforward_correction(n_parties: int, pattern: Sequence[int]) -> tuple[float, ...]:
    """Per-party phase (0 or pi) that maps the heralded W state to the all-positive one.

    Party ``k`` flips its photon's phase iff ``<s|U|f_k>`` is negative.
    """
    pattern = tuple(OccupationVector(pattern))
    if sum(pattern) != 1:
        raise UnsupportedPatternError("feed-forward table is defined for single-photon heralds only")
    u = np.asarray(tree_for_parties(n_parties))
    if len(pattern) != u.shape[0]:
        raise DomainError(f"pattern must have {u.shape[0]} entries")
    s = pattern.index(1)
    return tuple(math.pi if u[s, k].real < 0 else 0.0 for k in range(n_parties))
