"""W-state heralding from two-mode squeezed vacuum sources, covariance-matrix engine.

Quadrature ordering is ``(x_1, p_1, ..., x_n, p_n)`` with ``x = a + a^dag``
and ``p = -i(a - a^dag)``, so the vacuum covariance is the identity and
``[x, p] = 2i``. All states here have zero mean.

Fock matrix elements of the reduced states on the retained modes are
obtained from their (phase-insensitive) normal-ordered moments: such a state
equals ``Gamma(P) / det(1 + M)`` with ``P = M (1 + M)^-1``, and the
matrix elements of the second-quantised operator ``Gamma(P)`` are
permanents of ``P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from ._errors import DomainError, FidelityCeilingError
from .fock_core import OccupationVector, enumerate_detection_patterns
from .linear_optics import InterferometerMatrix, permanent, tree_for_parties

BONA_FIDE_TOL = 1e-10
PHASE_INSENSITIVE_TOL = 1e-9
FOCK_TAIL = 1e-10
LN10 = math.log(10.0)


@dataclass(frozen=True)
class SqueezingSpec:
    """Squeezing parameter ``r`` with its decibel and ``lambda = tanh r`` forms."""

    r: float

    def __post_init__(self):
        if not self.r >= 0.0:
            raise DomainError(f"squeezing parameter must be non-negative, got {self.r}")

    @classmethod
    def from_db(cls, db: float) -> "SqueezingSpec":
        return cls(db * LN10 / 20.0)

    @classmethod
    def from_lambda(cls, lam: float) -> "SqueezingSpec":
        if not 0.0 <= lam < 1.0:
            raise DomainError("lambda must lie in [0, 1)")
        return cls(math.atanh(lam))

    @property
    def db(self) -> float:
        return 20.0 * self.r / LN10

    @property
    def lam(self) -> float:
        return math.tanh(self.r)


@dataclass(frozen=True)
class DetectorModel:
    """Threshold detector with dark-count probability per gate and efficiency."""

    dark_count_prob: float = 1e-7
    efficiency: float = 0.8
    photon_number_resolving: bool = False

    def __post_init__(self):
        if not 0.0 <= self.dark_count_prob <= 1.0:
            raise DomainError(f"dark-count probability must lie in [0, 1], got {self.dark_count_prob}")
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if self.photon_number_resolving:
            raise DomainError("only threshold (non photon-number-resolving) detectors are modelled")


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Zero-mean Gaussian state over named, contiguous mode registers."""

    covariance: np.ndarray
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        regs = tuple((str(n), int(w)) for n, w in self.registers)
        n = sum(w for _, w in regs)
        if cov.shape != (2 * n, 2 * n):
            raise DomainError(f"covariance shape {cov.shape} does not match {n} modes")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise DomainError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "registers", regs)

    @property
    def n_modes(self) -> int:
        return self.covariance.shape[0] // 2

    @property
    def mean(self) -> np.ndarray:
        return np.zeros(2 * self.n_modes)

    def register_modes(self, name: str) -> list[int]:
        start = 0
        for reg, width in self.registers:
            if reg == name:
                return list(range(start, start + width))
            start += width
        raise DomainError(f"no register named {name!r}; have {[r for r, _ in self.registers]}")

    def mode(self, register: str, index: int) -> int:
        modes = self.register_modes(register)
        if not 0 <= index < len(modes):
            raise DomainError(f"register {register!r} has no mode {index}")
        return modes[index]

    def is_bona_fide(self, tol: float = BONA_FIDE_TOL) -> bool:
        eig = np.linalg.eigvalsh(self.covariance + 1j * symplectic_form(self.n_modes))
        return bool(eig.min() >= -tol)


def _quad_indices(modes: Sequence[int]) -> list[int]:
    return [q for m in modes for q in (2 * m, 2 * m + 1)]


def vacuum_state(registers: Sequence[tuple[str, int]]) -> GaussianState:
    n = sum(w for _, w in registers)
    return GaussianState(np.eye(2 * n), tuple(registers))


def tmsv_covariance(r: float) -> np.ndarray:
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    return np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])


def tmsv(spec: SqueezingSpec, registers: Sequence[tuple[str, int]] = (("X", 1), ("X'", 1))) -> GaussianState:
    """Two-mode squeezed vacuum ``sqrt(1-lam^2) sum lam^n |n n>``."""
    if spec.r < 0:
        raise DomainError("squeezing must be non-negative")
    return GaussianState(tmsv_covariance(spec.r), tuple(registers))


def epr_variance(state: GaussianState, mode_a: int, mode_b: int) -> float:
    """``[Var(x_a - x_b) + Var(p_a + p_b)] / 4``: 1 for vacuum, ``exp(-2r)`` for a TMSV."""
    cov = state.covariance
    xa, pa, xb, pb = 2 * mode_a, 2 * mode_a + 1, 2 * mode_b, 2 * mode_b + 1
    var_x = cov[xa, xa] + cov[xb, xb] - 2 * cov[xa, xb]
    var_p = cov[pa, pa] + cov[pb, pb] + 2 * cov[pa, pb]
    return 0.25 * (var_x + var_p)


def gaussian_loss(state: GaussianState, mode: int, transmittance: float) -> GaussianState:
    """Pure loss on one mode: ``sigma -> X sigma X^T + (1 - X X^T)`` with ``X = sqrt(T)`` there."""
    if not 0.0 <= transmittance <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {transmittance}")
    if not 0 <= mode < state.n_modes:
        raise DomainError(f"mode {mode} out of range")
    x = np.ones(2 * state.n_modes)
    x[2 * mode : 2 * mode + 2] = math.sqrt(transmittance)
    cov = state.covariance * np.outer(x, x)
    cov[2 * mode, 2 * mode] += 1.0 - transmittance
    cov[2 * mode + 1, 2 * mode + 1] += 1.0 - transmittance
    return GaussianState(cov, state.registers)


def passive_symplectic(u) -> np.ndarray:
    """Symplectic matrix (xpxp ordering) of ``b_s = sum_k U[s, k] a_k``."""
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    s = np.zeros((2 * n, 2 * n))
    s[0::2, 0::2] = u.real
    s[0::2, 1::2] = -u.imag
    s[1::2, 0::2] = u.imag
    s[1::2, 1::2] = u.real
    return s


def gaussian_unitary(state: GaussianState, u, register: str) -> GaussianState:
    """Apply a passive interferometer to the modes of ``register``."""
    modes = state.register_modes(register)
    mat = np.asarray(u, dtype=complex)
    if mat.shape != (len(modes), len(modes)):
        raise DomainError(f"register {register!r} has {len(modes)} modes, interferometer is {mat.shape}")
    full = np.eye(2 * state.n_modes)
    idx = _quad_indices(modes)
    full[np.ix_(idx, idx)] = passive_symplectic(mat)
    return GaussianState(full @ state.covariance @ full.T, state.registers)


def marginal_covariance(state: GaussianState, modes: Sequence[int]) -> np.ndarray:
    idx = _quad_indices(modes)
    return state.covariance[np.ix_(idx, idx)]


def _vacuum_overlap_terms(cov_b: np.ndarray) -> tuple[float, float]:
    """``(p0, 1 - p0)`` for projecting the given marginal onto vacuum, without cancellation."""
    # p0 = 1 / sqrt(det(1 + (sigma - 1)/2))
    eig = np.linalg.eigvalsh(0.5 * (cov_b - np.eye(cov_b.shape[0])))
    if eig.min() <= -1.0 + 1e-14:
        raise DomainError("marginal covariance is not physical")
    log_p0 = -0.5 * float(np.sum(np.log1p(eig)))
    return math.exp(log_p0), -math.expm1(log_p0)


def _detected(state: GaussianState, mode: int, detector: DetectorModel) -> GaussianState:
    return gaussian_loss(state, mode, detector.efficiency)


def no_click_probability(state: GaussianState, mode: int, detector: DetectorModel) -> float:
    """Vacuum probability of ``mode`` after the detector's inefficiency loss."""
    cov_b = marginal_covariance(_detected(state, mode, detector), [mode])
    return _vacuum_overlap_terms(cov_b)[0]


def click_probability(state: GaussianState, mode: int, detector: DetectorModel) -> float:
    """Phenomenological click probability ``1 - p0 + p_dc``."""
    cov_b = marginal_covariance(_detected(state, mode, detector), [mode])
    return _vacuum_overlap_terms(cov_b)[1] + detector.dark_count_prob


def condition_on_vacuum(state: GaussianState, mode: int, keep: Sequence[int]) -> tuple[float, np.ndarray]:
    """Project ``mode`` onto vacuum; return the probability and the covariance of ``keep``."""
    a = _quad_indices(keep)
    b = _quad_indices([mode])
    cov = state.covariance
    s_aa, s_ab, s_bb = cov[np.ix_(a, a)], cov[np.ix_(a, b)], cov[np.ix_(b, b)]
    conditioned = s_aa - s_ab @ np.linalg.solve(s_bb + np.eye(2), s_ab.T)
    p0, _ = _vacuum_overlap_terms(s_bb)
    return p0, conditioned


def normal_ordered_moments(cov: np.ndarray) -> np.ndarray:
    """``M[i, j] = <a_j^dag a_i>`` of a phase-insensitive state; raises if anomalous moments are present."""
    n = cov.shape[0] // 2
    sxx, spp = cov[0::2, 0::2], cov[1::2, 1::2]
    sxp, spx = cov[0::2, 1::2], cov[1::2, 0::2]
    anomalous = 0.25 * (sxx - spp + 1j * (sxp + spx))
    if np.max(np.abs(anomalous), initial=0.0) > PHASE_INSENSITIVE_TOL * max(1.0, np.max(np.abs(cov))):
        raise DomainError("state has anomalous (phase-sensitive) moments")
    n_adag_a = 0.25 * (sxx + spp - 2 * np.eye(n) + 1j * (sxp - spx))
    return n_adag_a.T


def _gamma_generator(cov: np.ndarray) -> tuple[np.ndarray, float]:
    m = normal_ordered_moments(cov)
    eye = np.eye(m.shape[0])
    p = m @ np.linalg.inv(eye + m)
    prefactor = 1.0 / np.linalg.det(eye + m).real
    return p, prefactor


def _gamma_element(p: np.ndarray, bra: Sequence[int], ket: Sequence[int]) -> complex:
    if sum(bra) != sum(ket):
        return 0.0j
    rows = [i for i, c in enumerate(bra) for _ in range(c)]
    cols = [j for j, c in enumerate(ket) for _ in range(c)]
    norm = math.sqrt(math.prod(math.factorial(c) for c in bra) * math.prod(math.factorial(c) for c in ket))
    return permanent(p[np.ix_(rows, cols)]) / norm


def fock_elements(cov: np.ndarray, bras, kets) -> np.ndarray:
    """``<bra|rho|ket>`` for a phase-insensitive zero-mean Gaussian state."""
    p, pref = _gamma_generator(cov)
    return np.array([[pref * _gamma_element(p, br, kt) for kt in kets] for br in bras])


def gamma_blocks(p: np.ndarray, max_photons: int):
    """Blocks of ``Gamma(P)`` for total photon number ``0..max_photons``.

    Yields ``(basis, block)`` per photon number, built recursively by
    expanding the permanent along the first occupied row.
    """
    n = p.shape[0]
    basis_prev = [(0,) * n]
    block_prev = np.ones((1, 1), dtype=complex)
    yield [OccupationVector(b) for b in basis_prev], block_prev
    for k in range(1, max_photons + 1):
        basis = [tuple(v) for v in enumerate_detection_patterns(n, k)]
        index_prev = {b: i for i, b in enumerate(basis_prev)}
        first = np.array([next(i for i, c in enumerate(b) if c) for b in basis])
        parent_row = np.array([index_prev[b[:i] + (b[i] - 1,) + b[i + 1 :]] for b, i in zip(basis, first)])
        occ_first = np.array([b[i] for b, i in zip(basis, first)], dtype=float)
        block = np.zeros((len(basis), len(basis)), dtype=complex)
        rows_prev = block_prev[parent_row]
        for j in range(n):
            has = np.array([b[j] > 0 for b in basis])
            if not has.any():
                continue
            cols = np.flatnonzero(has)
            parent_col = np.array([index_prev[basis[c][:j] + (basis[c][j] - 1,) + basis[c][j + 1 :]] for c in cols])
            sqrt_nj = np.sqrt([basis[c][j] for c in cols])
            block[:, cols] += p[first, j][:, None] * rows_prev[:, parent_col] * sqrt_nj[None, :]
        block /= np.sqrt(occ_first)[:, None]
        yield [OccupationVector(b) for b in basis], block
        basis_prev, block_prev = basis, block


def w_network_state(
    n_parties: int,
    squeezing: SqueezingSpec,
    transmittance: float,
    interferometer: InterferometerMatrix | None = None,
) -> GaussianState:
    """Retained modes ``X`` and detected modes ``X'`` after loss and the mixing circuit.

    Party ``i`` holds a TMSV on ``(X_i, X'_i)``; spare interferometer ports
    get vacuum.
    """
    if interferometer is None:
        interferometer = tree_for_parties(n_parties)
    width = interferometer.dim
    if width < n_parties:
        raise DomainError("interferometer has fewer ports than parties")
    n_modes = n_parties + width
    cov = np.eye(2 * n_modes)
    block = tmsv_covariance(squeezing.r)
    for i in range(n_parties):
        idx = _quad_indices([i, n_parties + i])
        cov[np.ix_(idx, idx)] = block
    state = GaussianState(cov, (("X", n_parties), ("X'", width)))
    for i in range(n_parties):
        state = gaussian_loss(state, n_parties + i, transmittance)
    return gaussian_unitary(state, interferometer, "X'")


@dataclass(frozen=True)
class _Heralding:
    p0: float
    p_signal: float  # 1 - p0
    dark: float
    rho_cov: np.ndarray
    cond_cov: np.ndarray

    @property
    def normalization(self) -> float:
        return self.dark + self.p_signal


def _heralding(state: GaussianState, click_mode: int, detector: DetectorModel) -> _Heralding:
    x_modes = state.register_modes("X")
    mode = state.mode("X'", click_mode)
    detected = _detected(state, mode, detector)
    p0, cond = condition_on_vacuum(detected, mode, x_modes)
    _, p_signal = _vacuum_overlap_terms(marginal_covariance(detected, [mode]))
    return _Heralding(p0, p_signal, detector.dark_count_prob, marginal_covariance(detected, x_modes), cond)


def conditional_state_fock_elements(
    state: GaussianState,
    click_mode: int,
    detector: DetectorModel,
    bras: Sequence[Sequence[int]],
    kets: Sequence[Sequence[int]],
    max_photons: int = 16,
) -> np.ndarray:
    """Matrix elements of the retained state after a click on detector ``click_mode`` of ``X'``.

    ``sigma = [(p_dc + 1) rho_X - Tr_X'(rho |0><0|)] / (p_dc + 1 - p0)``,
    where the vacuum projector acts on the clicking mode after the
    detector's inefficiency loss and all other detected modes are ignored.
    """
    for v in list(bras) + list(kets):
        if sum(v) > max_photons:
            raise DomainError(f"occupation {tuple(v)} exceeds the photon cutoff {max_photons}")
    h = _heralding(state, click_mode, detector)
    rho = fock_elements(h.rho_cov, bras, kets)
    cond = fock_elements(h.cond_cov, bras, kets)
    return ((h.dark + 1.0) * rho - h.p0 * cond) / h.normalization


def conditional_state_blocks(
    state: GaussianState,
    click_mode: int,
    detector: DetectorModel,
    max_photons: int = 40,
    trace_tol: float = 1e-10,
):
    """Photon-number blocks of the conditional retained state.

    The state is block diagonal in total photon number. Blocks are produced
    until the missing trace drops below ``trace_tol`` or ``max_photons`` is
    reached. Returns a list of ``(basis, block)``.
    """
    h = _heralding(state, click_mode, detector)
    p_rho, pref_rho = _gamma_generator(h.rho_cov)
    p_cond, pref_cond = _gamma_generator(h.cond_cov)
    blocks = []
    trace = 0.0
    for (basis, g_rho), (_, g_cond) in zip(gamma_blocks(p_rho, max_photons), gamma_blocks(p_cond, max_photons)):
        block = ((h.dark + 1.0) * pref_rho * g_rho - h.p0 * pref_cond * g_cond) / h.normalization
        blocks.append((basis, block))
        trace += block.trace().real
        if 1.0 - trace < trace_tol:
            break
    return blocks


def w_fidelity(state: GaussianState, click_mode: int, detector: DetectorModel, n_parties: int) -> float:
    """Fidelity of the conditional retained state with the zero-phase ``W_N``."""
    ones = [tuple(1 if j == k else 0 for j in range(n_parties)) for k in range(n_parties)]
    if len(state.register_modes("X")) != n_parties:
        raise DomainError("retained register size differs from n_parties")
    elems = conditional_state_fock_elements(state, click_mode, detector, ones, ones)
    return float(np.sum(elems).real / n_parties)


def rate_and_fidelity(
    n_parties: int, squeezing: SqueezingSpec, transmittance: float, detector: DetectorModel
) -> tuple[float, float]:
    """Click probability of detector 1 and the heralded W fidelity."""
    state = w_network_state(n_parties, squeezing, transmittance)
    return click_probability(state, state.mode("X'", 0), detector), w_fidelity(state, 0, detector, n_parties)


def default_cutoff(squeezing: SqueezingSpec, tail: float = FOCK_TAIL) -> int:
    """Smallest per-source photon cutoff whose TMSV tail mass ``lam^(2(c+1))`` is below ``tail``."""
    lam2 = squeezing.lam**2
    if lam2 == 0.0:
        return 1
    return max(1, math.ceil(math.log(tail) / math.log(lam2)) - 1)


def solve_squeezing_for_fidelity(
    n_parties: int,
    target_fidelity: float,
    transmittance: float,
    detector: DetectorModel,
    r_min: float = 1e-4,
    r_max: float = 2.0,
    tol: float = 1e-6,
) -> SqueezingSpec:
    """Squeezing giving ``target_fidelity``, choosing the higher-rate (larger ``r``) root.

    The fidelity rises from the dark-count-dominated regime at small ``r``
    and falls again as multi-photon terms grow, so a reachable target has
    up to two roots.
    """
    if not 0.0 < target_fidelity < 1.0:
        raise DomainError("target fidelity must lie in (0, 1)")

    def fid(r):
        return rate_and_fidelity(n_parties, SqueezingSpec(r), transmittance, detector)[1]

    grid = np.geomspace(r_min, r_max, 97)
    values = np.array([fid(r) for r in grid])
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda r: -fid(r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    r_peak, f_peak = (res.x, -res.fun) if -res.fun >= values[i] else (grid[i], values[i])
    if f_peak < target_fidelity:
        raise FidelityCeilingError(target_fidelity, f_peak, r_peak)
    if fid(r_max) >= target_fidelity:
        raise DomainError(f"fidelity still above target at r={r_max}; widen the search range")
    root = optimize.brentq(lambda r: fid(r) - target_fidelity, r_peak, r_max, xtol=1e-14, rtol=1e-14, maxiter=200)
    if abs(fid(root) - target_fidelity) > tol:
        raise DomainError("root refinement did not reach the requested tolerance")
    return SqueezingSpec(root)
