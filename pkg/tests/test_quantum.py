import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfrep import classical as cl
from selfrep import quantum as qm
from selfrep.errors import DimensionMismatchError, InvalidStateError

from oracles import partial_trace_loops, pure_fidelity

KET0 = np.array([1, 0])
KET1 = np.array([0, 1])
PLUS = np.array([1, 1]) / np.sqrt(2)


def test_fidelity_examples():
    rho = qm.pure(KET0)
    assert qm.uhlmann_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert qm.uhlmann_fidelity(rho, qm.pure(KET1)) == pytest.approx(0.0, abs=1e-12)
    # |<0|+>| = 1/sqrt(2)
    assert qm.uhlmann_fidelity(rho, qm.pure(PLUS)) == pytest.approx(0.7071067811865476, abs=1e-12)


def test_fidelity_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        qm.uhlmann_fidelity(qm.pure(KET0), qm.random_density(3, 0))


@pytest.mark.parametrize(
    "entries",
    [
        [[1, 0.5], [0, 0]],                # not Hermitian
        [[0.6, 0], [0, 0.6]],              # trace 1.2
        [[1.5, 0], [0, -0.5]],             # negative eigenvalue
        [[1, 0, 0], [0, 0, 0]],            # not square
        [[np.inf, 0], [0, 0]],
    ],
)
def test_density_rejects_invalid(entries):
    with pytest.raises(InvalidStateError):
        qm.DensityMatrix(entries)


def test_density_clamps_eigen_dust():
    rho = qm.DensityMatrix([[1 + 1e-10, 0], [0, -1e-10]])
    assert rho.eigenvalues().min() >= 0.0
    assert np.trace(rho.entries).real == pytest.approx(1.0, abs=1e-15)


def test_kraus_completeness_checked():
    with pytest.raises(InvalidStateError):
        qm.KrausChannel((np.eye(2) * 1.01,))
    amp = 0.3
    k0 = np.array([[1, 0], [0, np.sqrt(1 - amp)]])
    k1 = np.array([[0, np.sqrt(amp)], [0, 0]])
    ch = qm.KrausChannel((k0, k1))
    assert not ch.is_unitary()
    assert qm.KrausChannel((qm.random_unitary(3, 0),)).is_unitary()


@pytest.mark.parametrize("da,db", [(2, 2), (2, 3), (3, 2)])
def test_partial_trace_matches_loop_oracle(da, db):
    rho = qm.random_density(da * db, 11)
    for keep, ref in ((0, partial_trace_loops(rho.entries, da, db, 0)), (1, partial_trace_loops(rho.entries, da, db, 1))):
        np.testing.assert_allclose(qm.partial_trace(rho, [da, db], keep).entries, ref, atol=1e-14)


def test_partial_trace_three_parties():
    a, b, c = qm.random_density(2, 1), qm.random_density(3, 2), qm.random_density(2, 3)
    abc = qm.tensor(qm.tensor(a, b), c)
    np.testing.assert_allclose(qm.partial_trace(abc, [2, 3, 2], 1).entries, b.entries, atol=1e-13)
    ac = qm.partial_trace(abc, [2, 3, 2], [0, 2])
    np.testing.assert_allclose(ac.entries, qm.tensor(a, c).entries, atol=1e-13)
    with pytest.raises(DimensionMismatchError):
        qm.partial_trace(abc, [2, 2, 2], 0)


def test_pure_state_fidelity_oracle():
    g = np.random.default_rng(3)
    for _ in range(20):
        psi = g.standard_normal(3) + 1j * g.standard_normal(3)
        phi = g.standard_normal(3) + 1j * g.standard_normal(3)
        psi /= np.linalg.norm(psi)
        phi /= np.linalg.norm(phi)
        assert qm.uhlmann_fidelity(qm.pure(psi), qm.pure(phi)) == pytest.approx(pure_fidelity(psi, phi), abs=1e-7)


def test_diag_embed_matches_bhattacharyya():
    for seed in range(20):
        p, q = cl.random_state(4, seed), cl.random_state(4, seed + 100)
        f = qm.uhlmann_fidelity(qm.diag_embed(p), qm.diag_embed(q))
        assert abs(f - cl.bhattacharyya(p, q)) <= 1e-10


def test_diag_embed_rejects_non_unitary_basis():
    with pytest.raises(InvalidStateError):
        qm.diag_embed(cl.ProbVec([0.5, 0.5]), basis=[[1, 1], [0, 1]])


def test_unitary_channel_preserves_fidelity():
    u = qm.KrausChannel((qm.random_unitary(3, 4),))
    rho, sigma = qm.random_density(3, 1), qm.random_density(3, 2)
    before = qm.uhlmann_fidelity(rho, sigma)
    after = qm.uhlmann_fidelity(qm.apply_kraus(u, rho), qm.apply_kraus(u, sigma))
    assert after == pytest.approx(before, abs=1e-10)


def test_random_cptp_is_trace_preserving():
    ch = qm.random_cptp(3, 2, 3, 0)
    out = qm.apply_kraus(ch, qm.random_density(3, 5))
    assert np.trace(out.entries).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidStateError):
        qm.random_cptp(4, 1, 2, 0)


def test_commuting_family_diagonalized():
    u = qm.random_unitary(3, 8)
    states = [qm.diag_embed(cl.random_state(3, s), u) for s in range(3)]
    assert qm.commute_check(states)
    basis, dists = qm.simultaneous_diagonalization(states)
    for s, d in zip(states, dists):
        np.testing.assert_allclose((basis * d.weights) @ basis.conj().T, s.entries, atol=1e-10)


def test_degenerate_family_diagonalized():
    # first state is maximally mixed: every basis diagonalizes it
    u = qm.random_unitary(2, 1)
    states = [qm.DensityMatrix(np.eye(2) / 2), qm.diag_embed(cl.ProbVec([0.3, 0.7]), u)]
    basis, dists = qm.simultaneous_diagonalization(states)
    np.testing.assert_allclose(sorted(dists[1].weights), [0.3, 0.7], atol=1e-10)


def test_diagonal_family_keeps_identity_basis():
    states = [qm.diag_embed(cl.ProbVec([0.2, 0.8])), qm.diag_embed(cl.ProbVec([0.6, 0.4]))]
    basis, dists = qm.simultaneous_diagonalization(states)
    np.testing.assert_allclose(np.abs(basis), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(dists[0].weights, [0.2, 0.8], atol=1e-12)


def test_non_commuting_pair_rejected():
    with pytest.raises(InvalidStateError, match="commute"):
        qm.simultaneous_diagonalization([qm.pure(KET0), qm.pure(PLUS)])


def test_json_round_trip():
    rho = qm.random_density(3, 0)
    back = qm.DensityMatrix.from_json(json.loads(json.dumps(rho.to_json())))
    np.testing.assert_array_equal(back.entries, rho.entries)
    ch = qm.random_cptp(2, 2, 2, 1)
    back = qm.KrausChannel.from_json(json.loads(json.dumps(ch.to_json())))
    for a, b in zip(back.kraus_ops, ch.kraus_ops):
        np.testing.assert_array_equal(a, b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_channels_never_reduce_fidelity(seed, d):
    ch = qm.random_cptp(d, d, 2, seed)
    rho, sigma = qm.random_density(d, seed + 1), qm.random_density(d, seed + 2)
    before = qm.uhlmann_fidelity(rho, sigma)
    assert qm.uhlmann_fidelity(qm.apply_kraus(ch, rho), qm.apply_kraus(ch, sigma)) >= before - 1e-8


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fidelity_symmetric(seed):
    rho, sigma = qm.random_density(3, seed), qm.random_density(3, seed + 1)
    assert qm.uhlmann_fidelity(rho, sigma) == pytest.approx(qm.uhlmann_fidelity(sigma, rho), abs=1e-9)
