"""Numerical search for the best approximate cloner of a finite set of states.

The objective of a channel is the worst clone fidelity over the targets,
``min_phi (Phi | phi (x) phi)`` where ``Phi`` is the parent-offspring state it
produces. Classical channels are parameterized by column-wise softmax of a
logit matrix; quantum channels (qubits only) by a Stinespring isometry
obtained from QR of an unconstrained complex matrix. Both are searched by
multi-start Nelder-Mead.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import softmax

from . import backend as bk
from . import classical as cl
from . import quantum as qm
from .errors import DimensionMismatchError, InvalidStateError
from .replication import BroadcastSetup, broadcast
from .seeding import derive_seed

log = logging.getLogger(__name__)


@dataclass
class SearchConfig:
    restarts: int = 20
    max_evals: int = 2000
    polish_rounds: int = 5
    logit_scale: float = 4.0
    init_spread: float = 1.0
    xatol: float = 1e-10
    fatol: float = 1e-13
    quantum: bool = False
    kraus_count: int = 2


@dataclass
class CloneSearchResult:
    best_channel: object
    objective: float
    trace: list = field(default_factory=list)
    converged: bool = False
    evaluations: int = 0

    def to_json(self):
        return {
            "objective": self.objective,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "trace": [[int(i), float(v)] for i, v in self.trace],
            "best_channel": self.best_channel.to_json(),
        }


def clone_objective(channel, targets, env, remainder_dim=None):
    """Worst clone fidelity of ``channel`` over ``targets``, via the generic broadcast path."""
    d = targets[0].dim
    setup = (
        BroadcastSetup.from_channel(channel, env, d)
        if remainder_dim is None
        else BroadcastSetup(channel, env, d, env.dim, remainder_dim)
    )
    return min(bk.overlap(broadcast(setup, t).joint, bk.tensor(t, t)) for t in targets)


class _Classical:
    def __init__(self, targets, env, r, cfg):
        self.d, self.e, self.r = targets[0].dim, env.dim, r
        self.shape = (self.d * self.d * r, self.d * self.e)
        self.scale = cfg.logit_scale
        # fold the fixed environment into an effective d -> d*d*r map
        self.env_embed = np.kron(np.eye(self.d), env.weights.reshape(-1, 1))
        self.t = np.array([t.weights for t in targets])
        self.tt = np.array([np.kron(w, w) for w in self.t])
        self.size = self.shape[0] * self.shape[1]

    def matrix(self, x):
        return softmax(self.scale * x.reshape(self.shape), axis=0)

    def value(self, x):
        eff = self.matrix(x) @ self.env_embed
        out = (eff @ self.t.T).T.reshape(len(self.t), self.d * self.d, self.r).sum(axis=2)
        return float(np.min(np.sum(np.sqrt(np.clip(out, 0, None) * self.tt), axis=1)))

    def channel(self, x):
        return cl.StochasticChannel(self.matrix(x))


class _Quantum:
    def __init__(self, targets, env, r, cfg):
        self.d, self.e, self.r = targets[0].dim, env.dim, r
        if self.d != 2:
            raise InvalidStateError("quantum clone search is restricted to qubits (d=2)")
        self.k = cfg.kraus_count
        self.out = self.d * self.d * r
        self.shape = (self.k * self.out, self.d * self.e)
        self.size = 2 * self.shape[0] * self.shape[1]
        self.targets, self.env = targets, env
        self.tt = [np.kron(t.entries, t.entries) for t in targets]
        self.rho_in = [np.kron(t.entries, env.entries) for t in targets]

    def ops(self, x):
        half = self.size // 2
        z = (x[:half] + 1j * x[half:]).reshape(self.shape)
        v, rr = np.linalg.qr(z)
        v = v * (np.diag(rr) / np.where(np.abs(np.diag(rr)) > 0, np.abs(np.diag(rr)), 1.0))
        return [v[j * self.out:(j + 1) * self.out] for j in range(self.k)]

    def value(self, x):
        ops = self.ops(x)
        worst = 1.0
        for rho, tt in zip(self.rho_in, self.tt):
            out = sum(k @ rho @ k.conj().T for k in ops)
            joint = np.einsum("iaja->ij", out.reshape(self.d * self.d, self.r, self.d * self.d, self.r))
            worst = min(worst, _fidelity(joint, tt))
        return worst

    def channel(self, x):
        return qm.KrausChannel(tuple(self.ops(x)))


def _fidelity(a, b):
    vals, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    s = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
    m = s @ b @ s
    return float(np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(0.5 * (m + m.conj().T)), 0, None))))


def clone_search(targets, env=None, remainder_dim=None, config=None, seed=0):
    """Maximize the worst clone fidelity over channels on system (x) environment.

    Parameters
    ----------
    targets : list of states
        At least two states of a common dimension ``d`` and backend.
    env : state, optional
        Fixed environment state; a trivial one-dimensional environment by
        default.
    remainder_dim : int, optional
        Dimension of the environment remainder; defaults to ``env.dim``.
    config : SearchConfig, optional
    seed : int
        Master seed; restart ``i`` uses a stream derived from ``(seed, i)``.

    Returns
    -------
    CloneSearchResult
        ``objective`` is re-evaluated on ``best_channel`` through the generic
        broadcast path. ``converged`` is False when the best restart stopped
        on its evaluation budget rather than its tolerances.
    """
    cfg = config or SearchConfig()
    targets = list(targets)
    if len(targets) < 1:
        raise InvalidStateError("at least one target is required")
    backend = bk.same_backend(*targets)
    if len({t.dim for t in targets}) != 1:
        raise DimensionMismatchError("targets must share one dimension")
    if env is None:
        env = cl.ProbVec([1.0]) if backend == "classical" else qm.DensityMatrix([[1.0]])
    bk.same_backend(env, targets[0])
    r = env.dim if remainder_dim is None else int(remainder_dim)
    if backend == "quantum" and not cfg.quantum:
        raise InvalidStateError("quantum clone search is disabled; set SearchConfig(quantum=True)")
    prob = (_Classical if backend == "classical" else _Quantum)(targets, env, r, cfg)

    evals = 0
    best_val, best_x = -np.inf, None
    trace = []

    def run(x0):
        def f(x):
            nonlocal evals, best_val, best_x
            evals += 1
            v = prob.value(x)
            if v > best_val:
                best_val, best_x = v, x.copy()
                trace.append((evals, v))
            return -v

        return minimize(
            f, x0, method="Nelder-Mead",
            options={"maxfev": cfg.max_evals, "xatol": cfg.xatol, "fatol": cfg.fatol, "adaptive": prob.size > 10},
        )

    results = []
    for i in range(cfg.restarts):
        g = np.random.default_rng(derive_seed(seed, "clone-restart", i))
        res = run(cfg.init_spread * g.standard_normal(prob.size))
        results.append((-res.fun, bool(res.success), res.x))
    top = max(results, key=lambda t: t[0])
    best_ok = top[1]
    for _ in range(cfg.polish_rounds):
        before = best_val
        res = run(best_x.copy())
        best_ok = bool(res.success)
        if best_val - before <= cfg.fatol:
            break

    channel = prob.channel(best_x)
    objective = clone_objective(channel, targets, env, r)
    log.debug("clone search: %d evaluations, objective %.12f", evals, objective)
    return CloneSearchResult(channel, objective, trace, best_ok, evals)
