"""Finite probability distributions, Bhattacharyya overlap and stochastic channels.

Composite distributions are stored flat in row-major order: the leftmost
subsystem index varies slowest, matching ``numpy.kron`` and ``reshape``.
"""

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .errors import DimensionMismatchError, InvalidStateError
from .seeding import as_rng
from .tolerances import DEFAULT

__all__ = [
    "ProbVec",
    "JointProb",
    "StochasticChannel",
    "bhattacharyya",
    "shannon_entropy",
    "tensor",
    "marginal",
    "apply_channel",
    "channel_tensor",
    "l1_distance",
    "random_state",
    "random_joint",
    "random_channel",
]


def _clean_simplex(w, what, tol=DEFAULT):
    w = np.array(w, dtype=float).ravel()
    if w.size == 0:
        raise InvalidStateError(f"{what}: empty weight vector")
    if not np.all(np.isfinite(w)):
        raise InvalidStateError(f"{what}: non-finite weight")
    if w.min() < -tol.negative_dust:
        raise InvalidStateError(f"{what}: negative weight {w.min():.3e}")
    w[w < 0] = 0.0
    s = w.sum()
    if abs(s - 1.0) > tol.construction:
        raise InvalidStateError(f"{what}: weights sum to {s!r}, not 1")
    return w / s


@dataclass(frozen=True, eq=False)
class ProbVec:
    """Finite probability distribution.

    ``dims`` records the subsystem structure; a plain distribution has a
    single subsystem.
    """

    weights: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        w = _clean_simplex(self.weights, type(self).__name__)
        dims = (w.size,) if self.dims is None else tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims) or prod(dims) != w.size:
            raise InvalidStateError(f"dims {dims} do not factor {w.size} weights")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.weights.size

    @property
    def subsystem_dims(self):
        return list(self.dims)

    def to_json(self):
        return {"kind": "prob", "dims": list(self.dims), "weights": [float(x) for x in self.weights]}

    @classmethod
    def from_json(cls, obj):
        if obj.get("kind") != "prob":
            raise InvalidStateError(f"expected kind 'prob', got {obj.get('kind')!r}")
        dims = obj.get("dims")
        if dims is not None and len(dims) > 1:
            return JointProb(obj["weights"], dims)
        return ProbVec(obj["weights"], dims)

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self.weights, precision=4)}, dims={self.dims})"


class JointProb(ProbVec):
    """Distribution over a composite system; ``dims`` is required."""

    def __init__(self, weights, dims):
        super().__init__(weights, dims)

    def matrix(self):
        """Weights as a ``dims[0] x prod(dims[1:])`` array."""
        return self.weights.reshape(self.dims[0], -1)


@dataclass(frozen=True, eq=False)
class StochasticChannel:
    """Column-stochastic matrix of shape ``(out_dim, in_dim)``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or 0 in m.shape:
            raise InvalidStateError(f"channel matrix must be 2-d and non-empty, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidStateError("channel matrix has non-finite entries")
        if m.min() < -DEFAULT.negative_dust:
            raise InvalidStateError(f"channel matrix has negative entry {m.min():.3e}")
        m[m < 0] = 0.0
        sums = m.sum(axis=0)
        bad = np.abs(sums - 1.0) > DEFAULT.construction
        if bad.any():
            col = int(np.argmax(bad))
            raise InvalidStateError(f"channel column {col} sums to {sums[col]!r}, not 1")
        m = m / sums
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def in_dim(self):
        return self.matrix.shape[1]

    @property
    def out_dim(self):
        return self.matrix.shape[0]

    def to_json(self):
        return {"kind": "stochastic", "matrix": self.matrix.tolist()}

    @classmethod
    def from_json(cls, obj):
        if obj.get("kind") != "stochastic":
            raise InvalidStateError(f"expected kind 'stochastic', got {obj.get('kind')!r}")
        return cls(obj["matrix"])

    @classmethod
    def from_map(cls, in_dim, out_dim, target):
        """Deterministic channel sending input index ``i`` to output index ``target(i)``."""
        m = np.zeros((out_dim, in_dim))
        for i in range(in_dim):
            m[target(i), i] = 1.0
        return cls(m)


def _check_same_dim(p, q):
    if p.dim != q.dim:
        raise DimensionMismatchError(f"dimension mismatch: {p.dim} vs {q.dim}")


def bhattacharyya(p, q):
    """Overlap ``sum_i sqrt(p_i q_i)``, clamped to [0, 1]."""
    _check_same_dim(p, q)
    return float(np.clip(np.sum(np.sqrt(p.weights * q.weights)), 0.0, 1.0))


def shannon_entropy(p):
    """Entropy in nats, with 0 log 0 = 0."""
    w = p.weights[p.weights > 0]
    return float(max(-np.sum(w * np.log(w)), 0.0))


def l1_distance(p, q):
    _check_same_dim(p, q)
    return float(np.abs(p.weights - q.weights).sum())


def tensor(p, q):
    """Product distribution; subsystem lists are concatenated."""
    return JointProb(np.kron(p.weights, q.weights), p.dims + q.dims)


def marginal(P, keep):
    """Sum out every subsystem not listed in ``keep``.

    ``keep`` is a subsystem index or a sequence of them. A single index
    returns a :class:`ProbVec`; several return a :class:`JointProb` with the
    kept subsystems in ascending order.
    """
    single = np.ndim(keep) == 0
    keep = [int(keep)] if single else sorted(int(k) for k in keep)
    n = len(P.dims)
    if not keep or any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise DimensionMismatchError(f"keep={keep} invalid for {n} subsystems")
    drop = tuple(i for i in range(n) if i not in keep)
    w = P.weights.reshape(P.dims).sum(axis=drop).ravel()
    if single:
        return ProbVec(w)
    return JointProb(w, [P.dims[k] for k in keep])


def apply_channel(M, p):
    """Push a distribution through a stochastic channel.

    The output keeps no subsystem structure; callers that know the output
    factorization rebuild it with :class:`JointProb`.
    """
    if M.in_dim != p.dim:
        raise DimensionMismatchError(f"channel input dim {M.in_dim} vs state dim {p.dim}")
    return ProbVec(M.matrix @ p.weights)


def channel_tensor(A, B):
    """Channel acting independently on two subsystems."""
    return StochasticChannel(np.kron(A.matrix, B.matrix))


def random_state(dim, seed):
    """Flat-Dirichlet sample."""
    if dim < 1:
        raise InvalidStateError("dim must be >= 1")
    return ProbVec(as_rng(seed).dirichlet(np.ones(dim)))


def random_joint(dims, seed):
    """Flat-Dirichlet sample over a composite system."""
    return JointProb(as_rng(seed).dirichlet(np.ones(prod(dims))), dims)


def random_channel(in_dim, out_dim, seed):
    """Channel whose columns are independent flat-Dirichlet samples."""
    if in_dim < 1 or out_dim < 1:
        raise InvalidStateError("dims must be >= 1")
    cols = as_rng(seed).dirichlet(np.ones(out_dim), size=in_dim)
    return StochasticChannel(cols.T)
