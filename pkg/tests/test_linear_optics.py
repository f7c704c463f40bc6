import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from dicke_network import DomainError
from dicke_network.fock_core import PureFockState, basis_state, enumerate_detection_patterns, outcome_probabilities
from dicke_network.linear_optics import (
    BEAM_SPLITTER,
    InterferometerMatrix,
    LossChannel,
    apply_interferometer,
    apply_loss,
    beam_splitter_layers,
    fiber_transmittance,
    hadamard_tree,
    output_distribution,
    permanent,
    transition_amplitude,
    tree_for_parties,
)


def naive_permanent(a):
    n = a.shape[0]
    return sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def test_permanent_known_values():
    assert permanent(np.zeros((0, 0))) == 1
    assert permanent(np.array([[3.0]])) == 3
    assert permanent(np.array([[1, 2], [3, 4]])) == pytest.approx(10)
    for n in range(1, 7):
        assert permanent(np.ones((n, n))) == pytest.approx(math.factorial(n))


@settings(max_examples=60)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_permanent_matches_permutation_sum(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert permanent(a) == pytest.approx(naive_permanent(a), rel=1e-10, abs=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_permanent_is_invariant_under_transpose_and_permutation(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(5, 5))
    perm = rng.permutation(5)
    assert permanent(a.T) == pytest.approx(permanent(a))
    assert permanent(a[perm]) == pytest.approx(permanent(a))


def test_fiber_transmittance():
    assert fiber_transmittance(0.0) == 1.0
    assert fiber_transmittance(50.0) == pytest.approx(0.1, rel=1e-15)
    assert fiber_transmittance(100.0, 0.1) == pytest.approx(0.1, rel=1e-15)
    assert LossChannel.from_distance(50.0).amplitude == pytest.approx(math.sqrt(0.1))
    with pytest.raises(DomainError):
        fiber_transmittance(-1.0)
    with pytest.raises(DomainError):
        LossChannel(1.5)


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16])
def test_hadamard_tree_is_kron_power_and_layer_product(n):
    tree = np.asarray(hadamard_tree(n))
    expected = np.array([[1.0]])
    for _ in range(int(math.log2(n))):
        expected = np.kron(expected, BEAM_SPLITTER)
    assert np.allclose(tree, expected, atol=1e-15)
    prod = np.eye(n)
    for layer in beam_splitter_layers(n):
        prod = layer @ prod
    assert np.allclose(prod, tree, atol=1e-14)
    assert np.allclose(np.abs(tree) ** 2, 1.0 / n)


def test_tree_rejects_non_power_of_two_and_pads_parties():
    with pytest.raises(DomainError):
        hadamard_tree(3)
    assert tree_for_parties(3).dim == 4
    assert tree_for_parties(5).dim == 8
    assert tree_for_parties(4).dim == 4


def test_interferometer_checks_unitarity():
    with pytest.raises(DomainError):
        InterferometerMatrix(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(DomainError):
        InterferometerMatrix(np.ones((2, 3)))


def test_single_photon_amplitude_is_matrix_entry():
    u = unitary_group.rvs(4, random_state=3)
    for s in range(4):
        for k in range(4):
            inp = tuple(int(i == k) for i in range(4))
            out = tuple(int(i == s) for i in range(4))
            assert transition_amplitude(u, inp, out) == pytest.approx(u[s, k])


def test_hong_ou_mandel_dip():
    bs = np.asarray(hadamard_tree(2))
    assert abs(transition_amplitude(bs, (1, 1), (1, 1))) < 1e-15
    dist = output_distribution(bs, (1, 1))
    assert abs(dist[(2, 0)]) ** 2 == pytest.approx(0.5)
    assert abs(dist[(0, 2)]) ** 2 == pytest.approx(0.5)


def test_photon_number_mismatch_is_rejected():
    with pytest.raises(DomainError):
        transition_amplitude(np.eye(2), (1, 0), (1, 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_output_distribution_is_normalised(n, photons, seed):
    u = unitary_group.rvs(n, random_state=seed % (2**31))
    rng = np.random.default_rng(seed)
    inp = tuple(rng.multinomial(photons, np.ones(n) / n))
    dist = output_distribution(u, inp)
    assert sum(abs(a) ** 2 for a in dist.values()) == pytest.approx(1.0, abs=1e-12)
    assert set(dist) <= set(enumerate_detection_patterns(n, photons))


def test_apply_interferometer_preserves_norm_and_composes():
    u1 = unitary_group.rvs(3, random_state=1)
    u2 = unitary_group.rvs(3, random_state=2)
    state = PureFockState({(2, 1, 0): 0.6, (0, 1, 1): 0.8j}, [("X", 3)])
    once = apply_interferometer(u2 @ u1, state, "X")
    twice = apply_interferometer(u2, apply_interferometer(u1, state, "X"), "X")
    assert once.norm2() == pytest.approx(1.0)
    for key, amp in once.items():
        assert twice.amplitude(key) == pytest.approx(amp, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5])
@pytest.mark.parametrize("t", [0.0, 0.3, 1.0])
def test_loss_gives_binomial_statistics(n, t):
    state = basis_state((n, 0), [("S", 1), ("E", 1)])
    probs = outcome_probabilities(apply_loss(t, state, 0, 1), "S")
    for k in range(n + 1):
        expected = math.comb(n, k) * t**k * (1 - t) ** (n - k)
        assert probs.get((k,), 0.0) == pytest.approx(expected, abs=1e-14)


def test_loss_requires_vacuum_environment():
    with pytest.raises(DomainError):
        apply_loss(0.5, basis_state((1, 1)), 0, 1)
    with pytest.raises(DomainError):
        apply_loss(0.5, basis_state((1, 0)), 0, 0)


@pytest.mark.parametrize("n,m", [(2, 2), (4, 2), (4, 3), (8, 2), (8, 4)])
def test_bunched_output_amplitude_magnitude(n, m):
    tree = hadamard_tree(n)
    for inp in ((1,) * m + (0,) * (n - m), (0,) * (n - m) + (1,) * m):
        for s in range(n):
            out = tuple(m if j == s else 0 for j in range(n))
            assert abs(transition_amplitude(tree, inp, out)) == pytest.approx(
                math.sqrt(math.factorial(m)) / math.sqrt(n) ** m, rel=1e-12
            )


def test_small_examples():
    assert np.allclose(np.asarray(hadamard_tree(2)), np.array([[1, 1], [-1, 1]]) / math.sqrt(2))
    assert transition_amplitude(hadamard_tree(2), (1, 0), (1, 0)) == pytest.approx(1 / math.sqrt(2))
    spread = output_distribution(hadamard_tree(4), (1, 0, 0, 0))
    assert len(spread) == 4 and all(abs(abs(a) - 0.5) < 1e-15 for a in spread.values())
    vac = PureFockState({(0, 0, 0, 0): 1.0}, [("X", 4)])
    assert dict(apply_interferometer(hadamard_tree(4), vac, "X").items()) == {(0, 0, 0, 0): 1.0}
    kept = apply_loss(1.0, basis_state((1, 0)), 0, 1)
    assert dict(kept.items()) == {(1, 0): 1.0}
    quarter = apply_loss(0.25, basis_state((1, 0)), 0, 1)
    assert quarter.amplitude((1, 0)) == pytest.approx(0.5)
    assert quarter.amplitude((0, 1)) == pytest.approx(math.sqrt(0.75))
