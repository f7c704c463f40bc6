import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from dicke_network import DomainError, UninformativeHeraldError, UnsupportedPatternError
from dicke_network.fock_core import DickeSpec, dicke_state, enumerate_detection_patterns, fidelity_with_pure, apply_phases
from dicke_network.linear_optics import LossChannel
from dicke_network.protocol import (
    ProtocolParams,
    arrival_probability,
    b_for_fidelity,
    binomial_collapse,
    conditional_fidelity,
    dicke_rate_at_fixed_fidelity,
    feedforward_correction,
    herald,
    herald_probability_exact,
    herald_probability_leading,
    herald_probability_polynomial,
    rate_asymptote,
    rate_at_fixed_fidelity,
    simulate_heralds,
    single_detector_patterns,
)


def params(n, m, b, t):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ProtocolParams(n, m, b, LossChannel(t))


@pytest.mark.parametrize("n,m", [(2, 1), (3, 1), (3, 2), (4, 2)])
def test_closed_form_matches_network_simulation(n, m):
    p = params(n, m, 0.3, 0.4)
    for pattern, prob in simulate_heralds(p).items():
        assert herald_probability_exact(p, pattern) == pytest.approx(prob, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.data(), st.floats(0.0, 0.7), st.floats(0.0, 1.0))
def test_patterns_exhaust_arrival_probability(n, data, b, t):
    m = data.draw(st.integers(0, n))
    p = params(n, m, b, t)
    total = math.fsum(herald_probability_exact(p, s) for s in enumerate_detection_patterns(p.width, m))
    assert total == pytest.approx(arrival_probability(p), abs=1e-13)


@given(st.integers(1, 10), st.data(), st.floats(0.0, 1.0))
def test_binomial_collapse_is_one(n, data, b):
    m = data.draw(st.integers(0, n))
    assert binomial_collapse(n, m, b) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(2, 1), (4, 1), (4, 2), (3, 2)]), st.floats(0.01, 0.7), st.floats(0.0, 1.0))
def test_polynomial_matches_exact(nm, b, t):
    n, m = nm
    p = params(n, m, b, t)
    for s in single_detector_patterns(p.width, m):
        assert herald_probability_polynomial(p, s)(t) == pytest.approx(herald_probability_exact(p, s), abs=1e-14)


def _reference_poly(a, b, lead, mid, tail):
    t = Polynomial([0, 1])
    return lead * a**4 * b**4 * t**2 + mid * a**2 * b**6 * t**2 * (1 - t) + tail * b**8 * t**2 * (1 - t) ** 2


@pytest.mark.parametrize("b", [0.1, 0.3])
def test_four_mode_two_photon_polynomials(b):
    p = params(4, 2, b, 0.5)
    a = p.a
    distinct = herald_probability_polynomial(p, (1, 1, 0, 0))
    same = herald_probability_polynomial(p, (2, 0, 0, 0))
    for got, want in ((distinct, _reference_poly(a, b, 0.5, 1.0, 0.5)), (same, _reference_poly(a, b, 0.75, 1.5, 0.75))):
        diff = got - want
        assert np.max(np.abs(diff.coef)) < 1e-12


def test_all_distinct_pairs_are_equivalent():
    p = params(4, 2, 0.2, 1e-6)
    pairs = [s for s in enumerate_detection_patterns(4, 2) if max(s) == 1]
    fids = [conditional_fidelity(p, s) for s in pairs]
    assert np.allclose(fids, p.a**4 / 3, atol=1e-5)


@pytest.mark.parametrize("n,m", [(2, 1), (3, 1), (4, 1), (4, 2), (5, 2), (8, 1)])
def test_small_transmittance_fidelity_limit(n, m):
    p = params(n, m, 0.2, 1e-7)
    for s in single_detector_patterns(p.width, m):
        assert conditional_fidelity(p, s) == pytest.approx(p.a ** (2 * (n - m)), abs=1e-5)


@pytest.mark.parametrize("n,detector", [(2, 0), (2, 1), (3, 2), (4, 3)])
def test_brute_force_state_agrees_with_closed_fidelity(n, detector):
    p = params(n, 1, 0.3, 0.2)
    pattern = tuple(int(j == detector) for j in range(p.width))
    outcome = herald(p, pattern)
    corrected = apply_phases(outcome.conditional_state, "X", [-x for x in feedforward_correction(n, pattern)])
    brute = fidelity_with_pure(corrected, dicke_state(DickeSpec(n, 1)), "X")
    assert brute == pytest.approx(outcome.fidelity_to_dicke, abs=1e-12)
    assert outcome.probability == pytest.approx(herald_probability_exact(p, pattern), abs=1e-15)


def test_feedforward_examples():
    assert feedforward_correction(2, (1, 0)) == (0.0, 0.0)
    assert feedforward_correction(2, (0, 1)) == (math.pi, 0.0)
    with pytest.raises(UnsupportedPatternError):
        feedforward_correction(2, (1, 1))


def test_explicit_target_phases():
    p = params(4, 1, 0.2, 1e-6)
    pattern = (0, 0, 0, 1)
    right = DickeSpec(4, 1, feedforward_correction(4, pattern))
    assert conditional_fidelity(p, pattern, right) == pytest.approx(conditional_fidelity(p, pattern), abs=1e-12)
    assert conditional_fidelity(p, pattern, DickeSpec(4, 1, (0.0,) * 4)) < 0.01


def test_leading_order_gap_shrinks_linearly():
    def gap(t):
        p = params(4, 2, 0.2, t)
        s = (2, 0, 0, 0)
        return abs(herald_probability_exact(p, s) / herald_probability_leading(p) - 1)

    assert 5 <= gap(1e-3) / gap(1e-4) <= 20


def test_fixed_fidelity_rate():
    assert rate_at_fixed_fidelity(3, 0.95, 0.01) == 3 * (1 - 0.95 ** 0.5) * 0.01
    rates = [rate_at_fixed_fidelity(n, 0.95, 0.1) for n in range(2, 65)]
    assert all(x > y for x, y in zip(rates, rates[1:]))
    assert rates[-1] == pytest.approx(rate_asymptote(0.95, 0.1), rel=0.02)
    assert all(r > rate_asymptote(0.95, 0.1) for r in rates)


@given(st.integers(2, 20), st.floats(0.5, 0.999))
def test_b_for_fidelity_inverts_limit(n, f):
    b = b_for_fidelity(n, f)
    assert (1 - b**2) ** (n - 1) == pytest.approx(f, rel=1e-12)


def test_dicke_rate_leading_order():
    got = dicke_rate_at_fixed_fidelity(4, 2, 0.95, 1e-3)
    b2 = 1 - 0.95 ** 0.5
    assert got == pytest.approx(4 * 1e-6 * b2**2 * 6 * 2 / 16, rel=1e-12)


def test_errors():
    p = params(4, 1, 0.2, 0.5)
    with pytest.raises(DomainError):
        herald_probability_exact(p, (1, 1, 0, 0))
    with pytest.raises(DomainError):
        herald_probability_exact(p, (1, 0, 0))
    with pytest.raises(UninformativeHeraldError):
        conditional_fidelity(p.with_herald_photons(0), (0, 0, 0, 0))
    with pytest.raises(UninformativeHeraldError):
        conditional_fidelity(params(2, 1, 0.2, 0.0), (1, 0))
    with pytest.raises(DomainError):
        ProtocolParams(2, 3, 0.1, LossChannel(0.5))
    with pytest.raises(DomainError):
        b_for_fidelity(2, 1.0)
    with pytest.warns(UserWarning):
        ProtocolParams(2, 1, 0.8, LossChannel(0.5))


def test_network_state_examples():
    from dicke_network.protocol import build_network_state
    from dicke_network.fock_core import photon_number_sector

    vac = build_network_state(params(1, 0, 0.0, 0.3))
    assert dict(vac.items()) == {(0, 0, 0): 1.0}
    full = build_network_state(params(2, 2, 1.0, 1.0))
    assert full.amplitude((1, 1, 1, 1, 0, 0)) == pytest.approx(1.0)
    assert full.norm2() == pytest.approx(1.0)
    p = params(3, 1, 0.1, 0.5)
    sector = photon_number_sector(build_network_state(p), "X'", 1)
    assert sector.norm2() == pytest.approx(arrival_probability(p), abs=1e-15)
    assert sector.norm2() > 3 * p.a**4 * 0.01 * 0.5


def test_herald_probability_examples():
    p = params(2, 1, 0.1, 1.0)
    assert herald_probability_exact(p, (1, 0)) == pytest.approx((p.a * 0.1) ** 2, rel=1e-14)
    assert herald_probability_exact(params(4, 2, 0.3, 0.0), (1, 0, 1, 0)) == 0.0
    a = math.sqrt(1 - 0.01)
    want = 0.75 * a**4 * 1e-4 * 0.01 + 1.5 * a**2 * 1e-6 * 0.01 * 0.9 + 0.75 * 1e-8 * 0.01 * 0.81
    assert herald_probability_exact(params(4, 2, 0.1, 0.1), (2, 0, 0, 0)) == pytest.approx(want, rel=1e-12)


def test_leading_order_examples():
    assert herald_probability_leading(params(2, 1, 0.1, 0.3)) == pytest.approx(0.3 * 0.01)
    assert herald_probability_leading(params(5, 0, 0.1, 0.3)) == 1.0
    assert herald_probability_leading(params(4, 2, 0.1, 0.3)) == pytest.approx(0.75 * 0.09 * 1e-4)


def test_two_party_fidelity_limit_value():
    assert conditional_fidelity(params(2, 1, 0.1, 1e-6), (1, 0)) == pytest.approx(0.99, abs=1e-6)


def test_rate_example():
    assert rate_at_fixed_fidelity(2, 0.95, 0.01) == pytest.approx(1.0e-3, rel=1e-12)
    assert rate_at_fixed_fidelity(5, 1 - 1e-12, 0.5) < 1e-11


def test_arrival_examples():
    assert arrival_probability(params(3, 0, 0.0, 0.4)) == 1.0
    assert arrival_probability(params(2, 1, 0.1, 1.0)) == pytest.approx(2 * 0.99 * 0.01, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_total_probability_over_all_patterns(n):
    p = params(n, 0, 0.4, 0.35)
    total = math.fsum(
        herald_probability_exact(p.with_herald_photons(m), s)
        for m in range(n + 1)
        for s in enumerate_detection_patterns(p.width, m)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_feedforward_restores_fidelity_for_every_detector(n):
    p = params(n, 1, 0.2, 0.3)
    target = dicke_state(DickeSpec(n, 1))
    assert feedforward_correction(n, tuple(int(j == 0) for j in range(n))) == (0.0,) * n
    for s in single_detector_patterns(n, 1):
        outcome = herald(p, s)
        corrected = apply_phases(outcome.conditional_state, "X", feedforward_correction(n, s))
        assert fidelity_with_pure(corrected, target, "X") == pytest.approx(conditional_fidelity(p, s), abs=1e-12)
