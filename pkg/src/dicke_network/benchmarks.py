"""Baselines without a repeater node.

* Direct transmission: the central station emits an ``N``-photon entangled
  state and every photon must survive its arm, so the success probability
  is ``eta**N``.
* Squashed-entanglement bound on distilling tripartite W states from
  directly transmitted ``|W_3>`` photons, with the environment squashed by a
  fixed 50:50 beam splitter (not optimised, so only an upper bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._errors import DomainError
from .fock_core import DickeSpec, PureFockState, dicke_state, reduced_density_matrix, tensor

ENTROPY_TOL = 1e-12


@dataclass(frozen=True)
class StarChannel:
    """``n_arms`` identical arms of transmittance ``arm_transmittance``."""

    arm_transmittance: float
    n_arms: int = 3

    def __post_init__(self):
        if not 0.0 <= self.arm_transmittance <= 1.0:
            raise DomainError(f"arm transmittance must lie in [0, 1], got {self.arm_transmittance}")
        if self.n_arms < 1:
            raise DomainError("need at least one arm")


def direct_rate(n_parties: int, channel: StarChannel | float) -> float:
    if n_parties < 1:
        raise DomainError("need at least one party")
    eta = channel.arm_transmittance if isinstance(channel, StarChannel) else float(channel)
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {eta}")
    return eta**n_parties


def binary_entropy(x: float) -> float:
    if not -ENTROPY_TOL <= x <= 1.0 + ENTROPY_TOL:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    x = min(max(x, 0.0), 1.0)
    return von_neumann_entropy([x, 1.0 - x])


def von_neumann_entropy(eigenvalues: Iterable[float]) -> float:
    """Base-2 entropy of a spectrum; ``0 log 0 = 0``."""
    eig = np.asarray(list(eigenvalues), dtype=float)
    if np.any(eig < -ENTROPY_TOL) or eig.sum() > 1.0 + ENTROPY_TOL:
        raise DomainError("eigenvalues must be non-negative and sum to at most 1")
    eig = eig[eig > 0]
    return float(-np.sum(eig * np.log2(eig)))


def _check_eta(eta: float):
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {eta}")


def w3_entropies(eta: float) -> dict[str, float]:
    """Entropies of ``rho_{A_i E}``, ``rho_E`` and ``rho_SE`` from their two-point spectra."""
    _check_eta(eta)
    h_ae = von_neumann_entropy([(3.0 - eta) / 6.0, (3.0 + eta) / 6.0])
    h_e = von_neumann_entropy([(1.0 - eta) / 2.0, (1.0 + eta) / 2.0])
    # rho_SE is the complement of the squashing output E' in a pure state, and
    # rho_E' has the same spectrum as rho_E
    return {"A_iE": h_ae, "E": h_e, "SE": h_e}


def squashed_bound_w3(eta: float) -> float:
    """Upper bound on the W_3 distillation rate after direct transmission over arms of transmittance ``eta``."""
    h = w3_entropies(eta)
    return (3.0 * h["A_iE"] - 2.0 * h["E"] - h["SE"]) / (3.0 * binary_entropy(1.0 / 3.0))


def squashed_bound_general(m: int, e_sq: float) -> float:
    """``2 E_sq / (m h2(1/m))``: W-state rate bound from a squashed-entanglement value."""
    if m < 2:
        raise DomainError("need at least two parties")
    if e_sq < 0:
        raise DomainError("squashed entanglement is non-negative")
    return 2.0 * e_sq / (m * binary_entropy(1.0 / m))


def w3_squashed_state(eta: float) -> PureFockState:
    """``|Psi''>`` on receivers ``S``, environment ``E`` and squashing output ``E'``."""
    _check_eta(eta)
    w = dicke_state(DickeSpec(3, 1))
    vac = PureFockState({(0, 0, 0): 1.0}, [("X", 3)])

    def triple(s, e, ep, coeff):
        st = tensor(tensor(_rename(s, "S"), _rename(e, "E")), _rename(ep, "E'"))
        return {k: coeff * v for k, v in st.items()}

    amps: dict[tuple, complex] = {}
    for part in (
        triple(w, vac, vac, math.sqrt(eta)),
        triple(vac, w, vac, math.sqrt((1.0 - eta) / 2.0)),
        triple(vac, vac, w, math.sqrt((1.0 - eta) / 2.0)),
    ):
        for k, v in part.items():
            amps[k] = amps.get(k, 0j) + v
    return PureFockState(amps, [("S", 3), ("E", 3), ("E'", 3)])


def _rename(state: PureFockState, name: str) -> PureFockState:
    return PureFockState(dict(state.items()), [(name, state.n_modes)])


def w3_reduced_spectrum(eta: float, keep: str | list[str]) -> np.ndarray:
    """Eigenvalues (descending) of a reduced state of :func:`w3_squashed_state`.

    ``keep`` names registers, or ``"A1E"`` for the first receiver mode with
    the environment.
    """
    state = w3_squashed_state(eta)
    if keep == "A1E":
        # split S into the first receiver and the other two
        amps = {k: v for k, v in state.items()}
        state = PureFockState(amps, [("A1", 1), ("A23", 2), ("E", 3), ("E'", 3)])
        keep = ["A1", "E"]
    _, rho = reduced_density_matrix(state, keep)
    return np.sort(np.linalg.eigvalsh(rho))[::-1]
