"""Truncated-Fock reference engine for the Gaussian-source W protocol.

Independent of the covariance formalism: sources are truncated TMSV state
vectors and every optical element acts on sparse Fock amplitudes.

Two strategies are available:

``"supermode"``
    The product of TMSVs is invariant under ``a' -> R a'``, ``a -> R a`` for
    any real orthogonal ``R``. Choosing ``R`` with first row along the
    monitored detector's input combination leaves a single TMSV pair that
    reaches the detector (through the arm loss, the dilution by unused
    interferometer ports and the detector inefficiency) while the other
    pairs only contribute thermal retained modes. Cheap, so the per-source
    cutoff can be generous.
``"brute"``
    Full network simulation: all sources, all arm losses, the
    interferometer, the detector loss. Exponential in the cutoff; meant for
    small cutoffs only, to validate the supermode reduction.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ._errors import DomainError
from .fock_core import (
    OccupationVector,
    PureFockState,
    enumerate_detection_patterns,
    reduced_density_matrix,
)
from .gaussian_cv import DetectorModel, SqueezingSpec, default_cutoff
from .linear_optics import apply_interferometer, apply_loss, transition_amplitude, tree_for_parties


def truncated_tmsv(squeezing: SqueezingSpec, cutoff: int) -> dict[tuple, float]:
    """Amplitudes ``sqrt(1-lam^2) lam^n`` of ``|n n>`` for ``n <= cutoff`` (not renormalised)."""
    lam = squeezing.lam
    head = math.sqrt(1.0 - lam**2)
    return {(n, n): head * lam**n for n in range(cutoff + 1)}


def supermode_rotation(v: np.ndarray) -> np.ndarray:
    """Real orthogonal matrix whose first row is ``v / |v|`` (a Householder reflection)."""
    v = np.asarray(v, dtype=float)
    unit = v / np.linalg.norm(v)
    e1 = np.zeros_like(unit)
    e1[0] = 1.0
    w = e1 - unit
    if np.linalg.norm(w) < 1e-15:
        return np.eye(len(unit))
    return np.eye(len(unit)) - 2.0 * np.outer(w, w) / np.dot(w, w)


def _split_on_mode(state: PureFockState, mode: int) -> tuple[PureFockState, PureFockState]:
    """Terms with the mode empty, and with at least one photon in it."""
    empty, full = {}, {}
    for key, value in state.items():
        (empty if key[mode] == 0 else full)[key] = value
    return PureFockState(empty, state.registers), PureFockState(full, state.registers)


class FockReference:
    """Click statistics and conditional retained-state elements from truncated Fock vectors.

    Parameters mirror :func:`dicke_network.gaussian_cv.rate_and_fidelity`;
    detector 1 (the first interferometer output) is monitored. ``cutoff``
    is the per-source photon cutoff.
    """

    def __init__(
        self,
        n_parties: int,
        squeezing: SqueezingSpec,
        transmittance: float,
        detector: DetectorModel,
        cutoff: int | None = None,
        method: str = "supermode",
    ):
        if method not in ("supermode", "brute"):
            raise DomainError(f"unknown method {method!r}")
        self.n_parties = n_parties
        self.squeezing = squeezing
        self.transmittance = transmittance
        self.detector = detector
        self.cutoff = default_cutoff(squeezing) if cutoff is None else int(cutoff)
        self.method = method
        self._u = np.asarray(tree_for_parties(n_parties)).real
        if method == "supermode":
            self._build_supermode()
        else:
            self._build_brute()

    # -- construction -------------------------------------------------------

    def _build_supermode(self):
        n = self.n_parties
        v = self._u[0, :n]
        self._rotation = supermode_rotation(v)
        dilution = float(np.dot(v, v))  # power of the detected combination reaching port 1
        pair = PureFockState(
            {k + (0, 0): a for k, a in truncated_tmsv(self.squeezing, self.cutoff).items()},
            [("X", 1), ("X'", 1), ("E", 2)],
        )
        pair = apply_loss(self.transmittance, pair, 1, 2)
        pair = apply_loss(dilution * self.detector.efficiency, pair, 1, 3)
        vac, click = _split_on_mode(pair, 1)
        self.p_no_click = vac.norm2()
        self.p_signal = click.norm2()
        self._click_first = self._diag(click)
        self._total_first = self._diag(pair)
        idle = PureFockState({k: a for k, a in truncated_tmsv(self.squeezing, self.cutoff).items()}, [("X", 1), ("X'", 1)])
        self._idle = self._diag(idle)

    @staticmethod
    def _diag(state: PureFockState) -> dict[int, float]:
        basis, rho = reduced_density_matrix(state, "X")
        off = rho - np.diag(np.diag(rho))
        if off.size and np.max(np.abs(off)) > 1e-14:
            raise DomainError("retained supermode state is not diagonal")
        return {b[0]: float(rho[i, i].real) for i, b in enumerate(basis)}

    def _build_brute(self):
        n, w = self.n_parties, self._u.shape[0]
        tm = truncated_tmsv(self.squeezing, self.cutoff)
        # X (n), X' (w), arm environments (n), detector environment (1)
        amps = {(): 1.0}
        for _ in range(n):
            amps = {k + (p[0],): a * b for k, a in amps.items() for p, b in tm.items()}
        full = {}
        for k, a in amps.items():
            full[k + k + (0,) * (w - n) + (0,) * (n + 1)] = a
        state = PureFockState(full, [("X", n), ("X'", w), ("E", n), ("D", 1)])
        for i in range(n):
            state = apply_loss(self.transmittance, state, n + i, n + w + i)
        state = apply_interferometer(self._u, state, "X'")
        state = apply_loss(self.detector.efficiency, state, n, n + w + n)
        vac, click = _split_on_mode(state, n)
        self.p_no_click = vac.norm2()
        self.p_signal = click.norm2()
        self._brute_total = reduced_density_matrix(state, "X")
        self._brute_click = reduced_density_matrix(click, "X")

    # -- observables ----------------------------------------------------------

    def no_click_probability(self) -> float:
        return self.p_no_click

    def click_probability(self) -> float:
        """``1 - p0 + p_dc`` with ``1 - p0`` summed from the click branch directly."""
        return self.p_signal + self.detector.dark_count_prob

    def _supermode_element(self, first: dict[int, float], bra, ket) -> complex:
        if sum(bra) != sum(ket):
            return 0.0j
        n = self.n_parties
        a = self._rotation.T  # photon in supermode k -> mode j with amplitude R[k, j]
        total = 0.0j
        for sup in enumerate_detection_patterns(n, sum(bra)):
            weight = first.get(sup[0], 0.0) * math.prod(self._idle.get(c, 0.0) for c in sup[1:])
            if weight == 0.0:
                continue
            total += transition_amplitude(a, sup, bra) * weight * np.conj(transition_amplitude(a, sup, ket))
        return total

    @staticmethod
    def _brute_element(reduced, bra, ket) -> complex:
        basis, rho = reduced
        index = {tuple(b): i for i, b in enumerate(basis)}
        i, j = index.get(tuple(bra)), index.get(tuple(ket))
        return 0.0j if i is None or j is None else rho[i, j]

    def _elements(self, which: str, bras, kets) -> np.ndarray:
        if self.method == "supermode":
            first = self._click_first if which == "click" else self._total_first
            return np.array([[self._supermode_element(first, b, k) for k in kets] for b in bras])
        reduced = self._brute_click if which == "click" else self._brute_total
        return np.array([[self._brute_element(reduced, b, k) for k in kets] for b in bras])

    def conditional_state_fock_elements(self, bras: Sequence[Sequence[int]], kets: Sequence[Sequence[int]]) -> np.ndarray:
        """Same quantity as the covariance engine, rearranged as ``[p_dc rho_X + Tr(rho (1 - |0><0|))] / N``."""
        for v in list(bras) + list(kets):
            if any(c > self.cutoff for c in v):
                raise DomainError(f"occupation {tuple(v)} exceeds the Fock cutoff {self.cutoff}")
        dark = self.detector.dark_count_prob
        total = self._elements("total", bras, kets)
        click = self._elements("click", bras, kets)
        return (dark * total + click) / (dark + self.p_signal)

    def w_fidelity(self) -> float:
        n = self.n_parties
        ones = [OccupationVector(1 if j == k else 0 for j in range(n)) for k in range(n)]
        return float(np.sum(self.conditional_state_fock_elements(ones, ones)).real / n)
