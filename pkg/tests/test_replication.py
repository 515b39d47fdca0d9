import json

import numpy as np
import pytest

from selfrep import classical as cl
from selfrep import quantum as qm
from selfrep.errors import DimensionMismatchError, InvalidStateError
from selfrep.replication import (
    FAIL,
    NA,
    PASS,
    BroadcastSetup,
    broadcast,
    commuting_broadcaster,
    constant_offspring_setup,
    diag_broadcaster,
    env_copy_setup,
    verify_broadcast_inequalities,
    verify_wigner_clone,
)

KET0 = np.array([1, 0])
PLUS = np.array([1, 1]) / np.sqrt(2)


def trivial_env():
    return cl.ProbVec([1.0])


def test_diag_broadcaster_copies_distribution():
    setup = BroadcastSetup.from_channel(diag_broadcaster(3), trivial_env(), 3)
    p = cl.ProbVec([0.2, 0.3, 0.5])
    out = broadcast(setup, p)
    np.testing.assert_allclose(out.joint.matrix(), np.diag(p.weights), atol=1e-15)
    np.testing.assert_allclose(out.parent_marginal.weights, p.weights, atol=1e-15)
    np.testing.assert_allclose(out.offspring_marginal.weights, p.weights, atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_diag_broadcaster_joint_overlap_equals_parent_overlap(d):
    setup = BroadcastSetup.from_channel(diag_broadcaster(d), trivial_env(), d)
    for seed in range(20):
        p, q = cl.random_state(d, seed), cl.random_state(d, seed + 50)
        joint = cl.bhattacharyya(broadcast(setup, p).joint, broadcast(setup, q).joint)
        assert abs(joint - cl.bhattacharyya(p, q)) <= 1e-12


def test_setup_shape_checks():
    with pytest.raises(DimensionMismatchError):
        BroadcastSetup.from_channel(diag_broadcaster(2), trivial_env(), 3)
    with pytest.raises(DimensionMismatchError):
        BroadcastSetup(diag_broadcaster(2), cl.ProbVec([0.5, 0.5]), 2, 2, 1)
    setup = BroadcastSetup.from_channel(diag_broadcaster(2), trivial_env(), 2)
    with pytest.raises(DimensionMismatchError):
        broadcast(setup, cl.random_state(3, 0))


def test_system_channel_passes_environment_through():
    env = cl.ProbVec([0.25, 0.75])
    setup = BroadcastSetup.from_system_channel(diag_broadcaster(2), env)
    assert setup.dims == {"d": 2, "e": 2, "r": 2}
    out = broadcast(setup, cl.ProbVec([0.4, 0.6]))
    np.testing.assert_allclose(out.env_remainder.weights, env.weights, atol=1e-15)


def test_commuting_broadcaster_is_perfect_on_family():
    g = np.random.default_rng(2)
    rho = qm.random_density(2, 5)
    family = [rho]
    for _ in range(2):
        c = g.random(3)
        m = c[0] * np.eye(2) + c[1] * rho.entries + c[2] * rho.entries @ rho.entries
        family.append(qm.DensityMatrix(m / np.trace(m).real))
    ch = commuting_broadcaster(family)
    setup = BroadcastSetup.from_channel(ch, qm.DensityMatrix([[1.0]]), 2)
    for s in family:
        out = broadcast(setup, s)
        assert qm.uhlmann_fidelity(out.parent_marginal, s) >= 1 - 1e-9
        assert qm.uhlmann_fidelity(out.offspring_marginal, s) >= 1 - 1e-9


def test_commuting_broadcaster_rejects_non_commuting_pair():
    with pytest.raises(InvalidStateError):
        commuting_broadcaster([qm.pure(KET0), qm.pure(PLUS)])


def test_wigner_clone_of_disjoint_pair():
    setup = BroadcastSetup.from_channel(diag_broadcaster(2), trivial_env(), 2)
    v = verify_wigner_clone(setup, cl.ProbVec([1, 0]), cl.ProbVec([0, 1]))
    assert v.cloned == (True, True)
    assert v.dichotomy == PASS and v.passed
    assert v.chain["input_le_joint_times_env"] and v.chain["joint_times_env_le_squared"]
    json.dumps(v.to_json())


def test_wigner_clone_not_applicable_for_overlapping_pair():
    # the diag broadcaster correlates rather than clones a mixed state
    setup = BroadcastSetup.from_channel(diag_broadcaster(2), trivial_env(), 2)
    v = verify_wigner_clone(setup, cl.ProbVec([0.5, 0.5]), cl.ProbVec([1, 0]))
    assert v.cloned == (False, True)
    assert v.dichotomy == NA and v.passed


def test_broadcast_inequalities_diag():
    setup = BroadcastSetup.from_channel(diag_broadcaster(3), trivial_env(), 3)
    v = verify_broadcast_inequalities(setup, cl.random_state(3, 0), cl.random_state(3, 1))
    assert v.shared_env and v.parents_preserved
    assert set(v.checks.values()) == {PASS}
    assert v.values["joint_overlap"] == pytest.approx(v.values["initial_overlap"], abs=1e-12)


def test_broadcast_inequalities_random_setups():
    for seed in range(60):
        g = np.random.default_rng(seed)
        d, e, r = (int(x) for x in g.integers(1, 4, 3))
        d = max(d, 2)
        setup = BroadcastSetup(cl.random_channel(d * e, d * d * r, seed), cl.random_state(e, seed + 1), d, e, r)
        v = verify_broadcast_inequalities(setup, cl.random_state(d, seed + 2), cl.random_state(d, seed + 3))
        vals = v.values
        assert FAIL not in v.checks.values()
        assert min(vals["parent_overlap"], vals["offspring_overlap"]) - vals["joint_overlap"] >= -1e-8
        assert vals["joint_overlap"] - vals["initial_overlap"] >= -1e-8


def test_different_environments_are_not_applicable():
    env0, env1 = cl.ProbVec([1, 0]), cl.ProbVec([0, 1])
    s0 = env_copy_setup(env0)
    s1 = BroadcastSetup.from_channel(s0.channel, env1, 2)
    v = verify_broadcast_inequalities(s0, cl.ProbVec([0.5, 0.5]), cl.ProbVec([0.5, 0.5]), s1)
    assert not v.shared_env
    assert set(v.checks.values()) == {NA}
    assert v.values["offspring_overlap"] == 0.0


def test_constant_offspring_setup():
    sigma = cl.ProbVec([0.1, 0.9])
    env = cl.ProbVec([0.5, 0.5])
    setup = constant_offspring_setup(sigma, env)
    p = cl.ProbVec([0.7, 0.3])
    out = broadcast(setup, p)
    np.testing.assert_allclose(out.parent_marginal.weights, p.weights, atol=1e-15)
    np.testing.assert_allclose(out.offspring_marginal.weights, sigma.weights, atol=1e-15)
    np.testing.assert_allclose(out.env_remainder.weights, env.weights, atol=1e-15)
    v = verify_broadcast_inequalities(setup, p, cl.ProbVec([0.2, 0.8]))
    assert v.checks["offspring_ge_initial"] == PASS


def test_constant_offspring_quantum():
    sigma = qm.random_density(2, 3)
    setup = constant_offspring_setup(sigma, qm.DensityMatrix([[1.0]]))
    rho = qm.random_density(2, 4)
    out = broadcast(setup, rho)
    np.testing.assert_allclose(out.offspring_marginal.entries, sigma.entries, atol=1e-12)
    np.testing.assert_allclose(out.parent_marginal.entries, rho.entries, atol=1e-12)


def test_env_copy_setup_quantum_matches_classical():
    env = cl.ProbVec([0.3, 0.7])
    qenv = qm.diag_embed(env)
    p = cl.ProbVec([0.6, 0.4])
    c = broadcast(env_copy_setup(env), p).joint
    q = broadcast(env_copy_setup(qenv), qm.diag_embed(p)).joint
    np.testing.assert_allclose(np.diag(q.entries).real, c.weights, atol=1e-14)
