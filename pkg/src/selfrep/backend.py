"""Backend-agnostic operations on states and channels.

Classical states are :class:`~selfrep.classical.ProbVec` (or ``JointProb``),
quantum states are :class:`~selfrep.quantum.DensityMatrix`. Mixing the two in
one call raises :class:`~selfrep.errors.DimensionMismatchError`.
"""

import json

import numpy as np

from . import classical as cl
from . import quantum as qm
from .errors import DimensionMismatchError, InvalidStateError


def backend_of(obj):
    if isinstance(obj, (cl.ProbVec, cl.StochasticChannel)):
        return "classical"
    if isinstance(obj, (qm.DensityMatrix, qm.KrausChannel)):
        return "quantum"
    raise InvalidStateError(f"not a state or channel: {type(obj).__name__}")


def same_backend(*objs):
    kinds = {backend_of(o) for o in objs}
    if len(kinds) != 1:
        raise DimensionMismatchError(f"mixed backends: {sorted(kinds)}")
    return kinds.pop()


def overlap(a, b):
    """Bhattacharyya coefficient or Uhlmann fidelity, whichever applies."""
    if same_backend(a, b) == "classical":
        return cl.bhattacharyya(a, b)
    return qm.uhlmann_fidelity(a, b)


def distance(a, b):
    """L1 distance (classical) or trace norm (quantum)."""
    if same_backend(a, b) == "classical":
        return cl.l1_distance(a, b)
    return qm.trace_distance(a, b)


def tensor(a, b):
    if same_backend(a, b) == "classical":
        return cl.tensor(a, b)
    return qm.tensor(a, b)


def reduce(state, dims, keep):
    """Marginal / partial trace onto ``keep`` for a state with subsystem ``dims``."""
    if backend_of(state) == "classical":
        return cl.marginal(cl.JointProb(state.weights, dims), keep)
    return qm.partial_trace(state, dims, keep)


def apply(channel, state):
    if same_backend(channel, state) == "classical":
        return cl.apply_channel(channel, state)
    return qm.apply_kraus(channel, state)


def channel_tensor(a, b):
    if same_backend(a, b) == "classical":
        return cl.channel_tensor(a, b)
    return qm.channel_tensor(a, b)


def channel_dims(channel):
    return channel.in_dim, channel.out_dim


def as_state(obj, dims=None):
    """Rebuild ``obj`` with a subsystem structure."""
    if backend_of(obj) == "classical":
        return cl.JointProb(obj.weights, dims) if dims and len(dims) > 1 else cl.ProbVec(obj.weights, dims)
    return qm.DensityMatrix(obj.entries, dims)


def to_json(obj):
    return obj.to_json()


def from_json(obj):
    """Decode any state or channel object by its ``kind`` field."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidStateError("expected a JSON object with a 'kind' field")
    decoders = {
        "prob": cl.ProbVec.from_json,
        "density": qm.DensityMatrix.from_json,
        "stochastic": cl.StochasticChannel.from_json,
        "kraus": qm.KrausChannel.from_json,
    }
    try:
        decode = decoders[obj["kind"]]
    except KeyError:
        raise InvalidStateError(f"unknown kind {obj['kind']!r}") from None
    try:
        return decode(obj)
    except (KeyError, TypeError) as exc:
        raise InvalidStateError(f"malformed {obj['kind']} object: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, InvalidStateError):
            raise
        raise InvalidStateError(f"malformed {obj['kind']} object: {exc}") from exc


def dumps(obj):
    return json.dumps(obj.to_json())


def loads(text):
    return from_json(json.loads(text))


def random_state(backend, dim, seed):
    if backend == "classical":
        return cl.random_state(dim, seed)
    return qm.random_density(dim, seed)


def identity_channel(backend, dim):
    if backend == "classical":
        return cl.StochasticChannel(np.eye(dim))
    return qm.KrausChannel((np.eye(dim),))
