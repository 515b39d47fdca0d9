"""Cloning and broadcasting processes on system (x) environment.

A process takes the parent state ``phi`` of dimension ``d`` together with a
fixed environment state ``omega`` of dimension ``e`` and produces a state on
``d x d x r``: parent, offspring and what is left of the environment.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend as bk
from . import classical as cl
from . import quantum as qm
from .errors import DimensionMismatchError, InvalidStateError
from .tolerances import DEFAULT

PASS, FAIL, NA = "pass", "fail", "n/a"


@dataclass(frozen=True, eq=False)
class BroadcastSetup:
    """Channel on system (x) environment plus the fixed environment state."""

    channel: object
    env_state: object
    d: int
    e: int
    r: int

    def __post_init__(self):
        b = bk.same_backend(self.channel, self.env_state)
        if min(self.d, self.e, self.r) < 1:
            raise InvalidStateError("d, e, r must be >= 1")
        if self.env_state.dim != self.e:
            raise DimensionMismatchError(f"environment dim {self.env_state.dim} != e={self.e}")
        if self.channel.in_dim != self.d * self.e:
            raise DimensionMismatchError(f"channel input dim {self.channel.in_dim} != d*e={self.d * self.e}")
        if self.channel.out_dim != self.d * self.d * self.r:
            raise DimensionMismatchError(
                f"channel output dim {self.channel.out_dim} != d*d*r={self.d * self.d * self.r}"
            )
        object.__setattr__(self, "backend", b)

    @classmethod
    def from_channel(cls, channel, env_state, d):
        """Infer ``e`` from the environment and ``r`` from the channel output size."""
        e = env_state.dim
        r, rem = divmod(channel.out_dim, d * d)
        if rem:
            raise DimensionMismatchError(f"channel output dim {channel.out_dim} not divisible by d*d={d * d}")
        return cls(channel, env_state, d, e, r)

    @classmethod
    def from_system_channel(cls, channel, env_state):
        """``channel`` maps ``d -> d*d`` and the environment passes through unchanged (``r = e``)."""
        d = channel.in_dim
        if channel.out_dim != d * d:
            raise DimensionMismatchError(f"system channel must map {d} -> {d * d}")
        e = env_state.dim
        ch = bk.channel_tensor(channel, bk.identity_channel(bk.backend_of(channel), e))
        return cls(ch, env_state, d, e, e)

    @property
    def dims(self):
        return {"d": self.d, "e": self.e, "r": self.r}


@dataclass(frozen=True, eq=False)
class BroadcastOutcome:
    joint: object
    parent_marginal: object
    offspring_marginal: object
    env_remainder: object
    output: object = field(default=None, repr=False)


def broadcast(setup, phi):
    """Run the process on ``phi (x) omega`` and split the result."""
    bk.same_backend(setup.channel, phi)
    if phi.dim != setup.d:
        raise DimensionMismatchError(f"state dim {phi.dim} != d={setup.d}")
    out_dims = [setup.d, setup.d, setup.r]
    out = bk.as_state(bk.apply(setup.channel, bk.tensor(phi, setup.env_state)), out_dims)
    joint = bk.reduce(out, out_dims, [0, 1])
    return BroadcastOutcome(
        joint=joint,
        parent_marginal=bk.reduce(out, out_dims, 0),
        offspring_marginal=bk.reduce(out, out_dims, 1),
        env_remainder=bk.reduce(out, out_dims, 2),
        output=out,
    )


# -- reference processes ---------------------------------------------------


def diag_broadcaster(d):
    """Deterministic classical channel ``i -> (i, i)``, i.e. ``p(i) -> p(i) delta_ij``."""
    if d < 1:
        raise InvalidStateError("d must be >= 1")
    return cl.StochasticChannel.from_map(d, d * d, lambda i: i * d + i)


def _preparation(state):
    """Channel from a one-dimensional input that outputs ``state``."""
    if bk.backend_of(state) == "classical":
        return cl.StochasticChannel(state.weights.reshape(-1, 1))
    vals, vecs = np.linalg.eigh(state.entries)
    vals = np.clip(vals, 0, None)
    ops = tuple(np.sqrt(v) * vecs[:, [m]] for m, v in enumerate(vals) if v > 0)
    return qm.KrausChannel(ops)


def constant_offspring_setup(offspring_state, env_state, d=None):
    """Parent kept, offspring replaced by a fixed state, environment passed on as remainder."""
    b = bk.same_backend(offspring_state, env_state)
    d = offspring_state.dim if d is None else d
    if offspring_state.dim != d:
        raise DimensionMismatchError("offspring state must have the system dimension")
    e = env_state.dim
    ch = bk.channel_tensor(
        bk.channel_tensor(bk.identity_channel(b, d), _preparation(offspring_state)),
        bk.identity_channel(b, e),
    )
    return BroadcastSetup(ch, env_state, d, e, e)


def env_copy_setup(env_state):
    """Parent kept, offspring set to a copy of the environment's basis value.

    Requires ``e == d``; basis state ``(i, k)`` goes to ``(i, k, k)``.
    """
    d = e = env_state.dim
    target = lambda idx: (idx // e) * d * e + (idx % e) * e + (idx % e)
    if bk.backend_of(env_state) == "classical":
        ch = cl.StochasticChannel.from_map(d * e, d * d * e, target)
    else:
        v = np.zeros((d * d * e, d * e), complex)
        for idx in range(d * e):
            v[target(idx), idx] = 1.0
        ch = qm.KrausChannel((v,))
    return BroadcastSetup(ch, env_state, d, e, e)


def commuting_broadcaster(states, tol=None):
    """Perfect broadcaster ``d -> d*d`` for a pairwise commuting family.

    Rotates into the common eigenbasis, copies the diagonal index, and
    rotates both output factors back: ``K_k = (u_k (x) u_k) u_k^dagger``.
    """
    u, _ = qm.simultaneous_diagonalization(states, tol=tol)
    ops = tuple(np.outer(np.kron(u[:, k], u[:, k]), u[:, k].conj()) for k in range(u.shape[1]))
    return qm.KrausChannel(ops)


# -- verdicts --------------------------------------------------------------


@dataclass
class WignerVerdict:
    cloned: tuple
    clone_residuals: tuple
    overlap: float
    dichotomy: str
    chain: dict
    passed: bool

    def to_json(self):
        return {
            "cloned": list(self.cloned),
            "clone_residuals": list(self.clone_residuals),
            "overlap": self.overlap,
            "dichotomy": self.dichotomy,
            "chain": self.chain,
            "passed": self.passed,
        }


def verify_wigner_clone(setup, phi, phi2, tol=None):
    """Check whether both states are cloned and, if so, that they are equal or disjoint.

    A state counts as cloned when the parent-offspring joint state is within
    ``tol`` (L1 / trace norm) of ``phi (x) phi``. The chain
    ``(phi|phi') <= (Phi|Phi')(sigma|sigma') <= (phi|phi')^2`` is evaluated
    and reported link by link; it is only guaranteed when both states clone.
    """
    tol = DEFAULT.clone if tol is None else tol
    outs = [broadcast(setup, s) for s in (phi, phi2)]
    residuals = tuple(bk.distance(o.joint, bk.tensor(s, s)) for o, s in zip(outs, (phi, phi2)))
    cloned = tuple(bool(r <= tol) for r in residuals)
    ov = bk.overlap(phi, phi2)
    out_ov = bk.overlap(outs[0].output, outs[1].output)
    joint_ov = bk.overlap(outs[0].joint, outs[1].joint)
    env_ov = bk.overlap(outs[0].env_remainder, outs[1].env_remainder)
    middle = joint_ov * env_ov
    chain = {
        "input_overlap": ov,
        "output_overlap": out_ov,
        "joint_overlap": joint_ov,
        "env_overlap": env_ov,
        "joint_times_env": middle,
        "overlap_squared": ov * ov,
        "input_le_joint_times_env": ov <= middle + tol,
        "joint_times_env_le_squared": middle <= ov * ov + tol,
    }
    if all(cloned):
        ok = ov >= 1 - 10 * tol or ov <= 10 * tol
        dichotomy = PASS if ok else FAIL
    else:
        dichotomy = NA
    return WignerVerdict(cloned, residuals, ov, dichotomy, chain, dichotomy != FAIL)


@dataclass
class BroadcastVerdict:
    values: dict
    checks: dict
    shared_env: bool
    parents_preserved: bool

    @property
    def passed(self):
        return FAIL not in self.checks.values()

    def to_json(self):
        return {
            "values": self.values,
            "checks": self.checks,
            "shared_env": self.shared_env,
            "parents_preserved": self.parents_preserved,
            "passed": self.passed,
        }


def _same_channel(a, b):
    if a is b:
        return True
    if bk.backend_of(a) != bk.backend_of(b):
        return False
    if bk.backend_of(a) == "classical":
        return a.matrix.shape == b.matrix.shape and np.array_equal(a.matrix, b.matrix)
    return len(a.kraus_ops) == len(b.kraus_ops) and all(
        x.shape == y.shape and np.array_equal(x, y) for x, y in zip(a.kraus_ops, b.kraus_ops)
    )


def verify_broadcast_inequalities(setup, phi, phi2, setup2=None, tol=DEFAULT):
    """Overlap inequalities of one broadcasting step applied to two parents.

    With a shared channel and environment: each marginal pair overlaps at
    least as much as the joint pair, which overlaps at least as much as the
    parents. If moreover the parents come out unchanged (within
    ``tol.parent_preserved``), the offspring overlap is at least the parent
    overlap and the joint overlap equals it. ``setup2`` (default ``setup``)
    is used for ``phi2``; a different environment makes the shared-env
    checks ``"n/a"``.
    """
    setup2 = setup if setup2 is None else setup2
    a, b = broadcast(setup, phi), broadcast(setup2, phi2)
    shared = _same_channel(setup.channel, setup2.channel) and (
        setup.env_state is setup2.env_state
        or (
            setup.env_state.dim == setup2.env_state.dim
            and bk.distance(setup.env_state, setup2.env_state) <= tol.negative_dust
        )
    )
    initial = bk.overlap(phi, phi2)
    joint = bk.overlap(a.joint, b.joint)
    parent = bk.overlap(a.parent_marginal, b.parent_marginal)
    offspring = bk.overlap(a.offspring_marginal, b.offspring_marginal)
    preserved = (
        bk.distance(a.parent_marginal, phi) <= tol.parent_preserved
        and bk.distance(b.parent_marginal, phi2) <= tol.parent_preserved
    )
    slack = tol.a4

    def chk(cond, applies=True):
        return (PASS if cond else FAIL) if applies else NA

    checks = {
        "parent_ge_joint": chk(parent >= joint - slack, shared),
        "offspring_ge_joint": chk(offspring >= joint - slack, shared),
        "joint_ge_initial": chk(joint >= initial - slack, shared),
        "offspring_ge_initial": chk(offspring >= initial - slack, shared and preserved),
        "joint_eq_initial": chk(abs(joint - initial) <= tol.par1_equality, shared and preserved),
    }
    values = {
        "initial_overlap": initial,
        "joint_overlap": joint,
        "parent_overlap": parent,
        "offspring_overlap": offspring,
    }
    return BroadcastVerdict(values, checks, bool(shared), bool(preserved))
