import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covqec.qstate import (DensityOperator, PureState, StateError, fidelity,
                           outer_trace_norm, partial_trace, psd_sqrt, purified_distance,
                           reduce_diagonal, trace_norm)

from conftest import random_density, random_pure


def test_fidelity_identity_and_orthogonal(rng):
    rho = random_density(rng, 4)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    zero, one = PureState.basis("0"), PureState.basis("1")
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)
    assert purified_distance(zero, one) == pytest.approx(1.0, abs=1e-12)
    assert purified_distance(rho, rho) == pytest.approx(0.0, abs=1e-4)


def test_fidelity_diagonal_pair():
    # oracle: sqrt(1/8) + sqrt(3/8) = 0.9659258262890683
    p, q = np.diag([0.5, 0.5]), np.diag([0.25, 0.75])
    assert fidelity(p, q) == pytest.approx(0.965926, abs=1e-6)
    assert fidelity(p, q) == pytest.approx(math.sqrt(1 / 8) + math.sqrt(3 / 8), abs=1e-12)
    assert purified_distance(p, q) == pytest.approx(0.258819, abs=1e-6)


def test_fidelity_commuting_states_match_classical(rng):
    u = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    rho, sigma = u @ np.diag(p) @ u.conj().T, u @ np.diag(q) @ u.conj().T
    assert fidelity(rho, sigma) == pytest.approx(np.sum(np.sqrt(p * q)), abs=1e-9)


def test_fidelity_symmetric(rng):
    rho, sigma = random_density(rng, 8), random_density(rng, 8, rank=2)
    assert fidelity(rho, sigma) == pytest.approx(fidelity(sigma, rho), abs=1e-9)


def test_fidelity_rejects_bad_input(rng):
    with pytest.raises(StateError):
        fidelity(np.eye(2) / 2, np.eye(4) / 4)
    with pytest.raises(StateError):
        fidelity(np.diag([1.5, -0.5]), np.eye(2) / 2)


def test_trace_norm_examples(rng):
    assert trace_norm(np.eye(2)) == pytest.approx(2.0)
    rho = random_density(rng, 4)
    assert trace_norm(rho - rho) == pytest.approx(0.0)
    assert trace_norm(np.diag([0.5, -0.5])) == pytest.approx(1.0)


def test_outer_trace_norm_matches_dense(rng):
    left = rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2))
    right = rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2))
    assert outer_trace_norm(left, right) == pytest.approx(
        trace_norm(left @ right.conj().T), rel=1e-10)


def test_psd_sqrt_squares_back(rng):
    rho = random_density(rng, 4, rank=2)
    r = psd_sqrt(rho)
    assert np.allclose(r @ r, rho, atol=1e-10)


def test_partial_trace_examples(rng):
    prod = PureState.basis("01")
    assert np.allclose(partial_trace(prod, [0]), np.diag([1, 0]))
    epr = PureState.from_amplitudes([1, 0, 0, 1], normalize=True)
    assert np.allclose(partial_trace(epr, [1]), np.eye(2) / 2)
    psi = PureState.from_amplitudes(random_pure(rng, 8))
    assert np.trace(partial_trace(psi, [0, 1])).real == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_pure_and_mixed_paths_agree(rng):
    psi = PureState.from_amplitudes(random_pure(rng, 16))
    for keep in ([0], [2], [1, 3], [0, 2, 3]):
        assert np.allclose(partial_trace(psi, keep), partial_trace(psi.density(), keep),
                           atol=1e-12)


def test_partial_trace_composes(rng):
    rho = random_density(rng, 16)
    # drop qubit 3 (0-based), then the qubit now at position 2
    step = partial_trace(partial_trace(rho, [0, 1, 2]), [0, 1])
    assert np.allclose(step, partial_trace(rho, [0, 1]), atol=1e-12)


def test_partial_trace_out_of_range(rng):
    with pytest.raises(StateError):
        partial_trace(random_density(rng, 4), [2])


def test_reduce_diagonal_matches_partial_trace(rng):
    d = rng.dirichlet(np.ones(8))
    assert np.allclose(np.diag(partial_trace(np.diag(d), [0, 2])), reduce_diagonal(d, [0, 2]))


def test_state_validation():
    with pytest.raises(StateError):
        PureState(np.array([1.0, 1.0]), 1)
    with pytest.raises(StateError):
        PureState(np.array([1.0, 0.0, 0.0]), 1)
    with pytest.raises(StateError):
        DensityOperator.from_matrix(np.array([[0.5, 0.5j], [0.0, 0.5]]))
    sub = DensityOperator.from_matrix(np.diag([0.2, 0.1]), subnormalized=True)
    assert sub.subnormalized


def test_tensor_orders_first_factor_high():
    s = PureState.basis("1").tensor(PureState.basis("0"))
    assert np.argmax(np.abs(s.amplitudes)) == 0b10


_seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


@settings(max_examples=60, deadline=None)
@given(seed=_seeds, dim=st.sampled_from([2, 4, 8]), rank=st.integers(1, 8))
def test_distance_sandwich(seed, dim, rank):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, dim, min(rank, dim))
    sigma = random_density(rng, dim, min(rank, dim))
    d1 = trace_norm(rho - sigma)
    p = purified_distance(rho, sigma)
    assert 0.5 * d1 <= p + 1e-9
    assert p <= math.sqrt(2 * d1) + 1e-9


def test_triangle_inequality_100_triples():
    rng = np.random.default_rng(7)
    for _ in range(100):
        a, b, c = (random_density(rng, 4, rank=int(rng.integers(1, 5))) for _ in range(3))
        assert purified_distance(a, c) <= purified_distance(a, b) + purified_distance(b, c) + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=_seeds)
def test_fidelity_unitarily_invariant(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(rng, 4), random_density(rng, 4, rank=1)
    u = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
    assert fidelity(u @ rho @ u.conj().T, u @ sigma @ u.conj().T) == pytest.approx(
        fidelity(rho, sigma), abs=1e-8)
