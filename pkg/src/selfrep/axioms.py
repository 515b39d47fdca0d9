"""Checks of the four overlap axioms on concrete states, and a seeded Monte Carlo runner.

Each check returns an :class:`AxiomReport` whose ``worst_violation`` is a
signed margin: non-negative means the inequality holds, negative values
measure how badly it fails.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import backend as bk
from . import classical as cl
from . import quantum as qm
from .errors import InvalidStateError
from .seeding import derive_seed
from .tolerances import DEFAULT

AXIOMS = ("A1", "A2", "A3", "A4")
DEFAULT_DIMS = {"classical": (2, 4), "quantum": (2, 3)}


@dataclass
class AxiomReport:
    axiom: str
    trials: int
    worst_violation: float
    witness: dict
    passed: bool
    backend: str = "classical"
    tolerance: float = field(default=0.0)

    def to_json(self):
        return {
            "axiom": self.axiom,
            "backend": self.backend,
            "trials": self.trials,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "witness": self.witness,
        }

    def to_jsonl(self):
        return json.dumps(self.to_json())


def _report(axiom, margin, witness, backend, tol):
    return AxiomReport(
        axiom=axiom,
        trials=1,
        worst_violation=float(margin),
        witness=witness,
        passed=bool(margin >= -tol),
        backend=backend,
        tolerance=tol,
    )


def _w(**states):
    return {k: v.to_json() for k, v in states.items()}


def check_a1(phi, psi, tol=DEFAULT):
    """Overlap lies in [0, 1] and equals 1 exactly for equal states.

    Equality is L1 (classical) or trace-norm (quantum) distance at most
    ``tol.state_equality``. For distinct states an overlap that rounds to 1
    is charged the distance between them as its violation.
    """
    backend = bk.same_backend(phi, psi)
    ov = bk.overlap(phi, psi)
    dist = bk.distance(phi, psi)
    if dist <= tol.state_equality:
        margin = min(ov, ov - 1.0)
    else:
        margin = min(ov, 1.0 - ov) if ov < 1.0 else -dist
    rep = _report("A1", margin, _w(phi=phi, psi=psi), backend, tol.a1)
    rep.witness["overlap"] = ov
    return rep


def check_a2(phi, psi, phi2, psi2, tol=DEFAULT):
    """Overlap of product states factorizes."""
    backend = bk.same_backend(phi, psi, phi2, psi2)
    joint = bk.overlap(bk.tensor(phi, psi), bk.tensor(phi2, psi2))
    factored = bk.overlap(phi, phi2) * bk.overlap(psi, psi2)
    rep = _report("A2", -abs(joint - factored), _w(phi=phi, psi=psi, phi2=phi2, psi2=psi2), backend, tol.a2)
    rep.witness.update(joint=joint, factored=factored)
    return rep


def check_a3(channel, phi, psi, tol=DEFAULT):
    """A channel never lowers the overlap of two states."""
    backend = bk.same_backend(channel, phi, psi)
    before = bk.overlap(phi, psi)
    after = bk.overlap(bk.apply(channel, phi), bk.apply(channel, psi))
    rep = _report("A3", after - before, _w(channel=channel, phi=phi, psi=psi), backend, tol.a3)
    rep.witness.update(before=before, after=after)
    return rep


def check_a4(Phi, Psi, dims=None, tol=DEFAULT):
    """Every reduced pair overlaps at least as much as the joint pair.

    ``dims`` defaults to the subsystem structure stored on ``Phi``.
    """
    backend = bk.same_backend(Phi, Psi)
    dims = list(dims if dims is not None else Phi.dims)
    other = list(Psi.dims) if len(Psi.dims) > 1 else dims
    if len(dims) < 2 or other != dims:
        raise InvalidStateError(f"joint states need a shared composite structure, got {dims} / {other}")
    joint = bk.overlap(Phi, Psi)
    marginals = [bk.overlap(bk.reduce(Phi, dims, k), bk.reduce(Psi, dims, k)) for k in range(len(dims))]
    rep = _report("A4", min(marginals) - joint, _w(Phi=Phi, Psi=Psi), backend, tol.a4)
    rep.witness.update(joint=joint, marginals=marginals, dims=dims)
    return rep


# -- Monte Carlo -----------------------------------------------------------


def _dim(g, lo, hi):
    return int(g.integers(lo, hi + 1))


def _orthogonal_pair(backend, d, g):
    if backend == "classical":
        cut = int(g.integers(1, d))
        a, b = np.zeros(d), np.zeros(d)
        a[:cut] = g.dirichlet(np.ones(cut))
        b[cut:] = g.dirichlet(np.ones(d - cut))
        return cl.ProbVec(a), cl.ProbVec(b)
    u = qm.random_unitary(d, g)
    return qm.pure(u[:, 0]), qm.pure(u[:, 1])


def _trial(axiom, backend, g, lo, hi, tol):
    if axiom == "A1":
        d = _dim(g, lo, hi)
        kind = int(g.integers(0, 4))
        phi = bk.random_state(backend, d, g)
        if kind == 0:
            psi = bk.loads(bk.dumps(phi))
        elif kind == 1:
            phi, psi = _orthogonal_pair(backend, d, g)
        else:
            psi = bk.random_state(backend, d, g)
        return check_a1(phi, psi, tol)
    if axiom == "A2":
        d1, d2 = _dim(g, lo, hi), _dim(g, lo, hi)
        s = [bk.random_state(backend, d, g) for d in (d1, d2, d1, d2)]
        return check_a2(s[0], s[1], s[2], s[3], tol)
    if axiom == "A3":
        d_in, d_out = _dim(g, lo, hi), _dim(g, lo, hi)
        if backend == "classical":
            ch = cl.random_channel(d_in, d_out, g)
        else:
            env = max(int(g.integers(1, 4)), -(-d_in // d_out))
            ch = qm.random_cptp(d_in, d_out, env, g)
        return check_a3(ch, bk.random_state(backend, d_in, g), bk.random_state(backend, d_in, g), tol)
    dims = [_dim(g, lo, hi), _dim(g, lo, hi)]
    n = dims[0] * dims[1]
    a, b = bk.random_state(backend, n, g), bk.random_state(backend, n, g)
    return check_a4(bk.as_state(a, dims), bk.as_state(b, dims), dims, tol)


def run_trials(axiom, backend, trials, seed, dims=None, tol=DEFAULT):
    """Worst case over ``trials`` independent seeded trials of one axiom.

    Trial ``i`` draws from its own stream derived from ``(seed, axiom,
    backend, i)``, so trials can be evaluated in any order; ties keep the
    lowest trial index.
    """
    lo, hi = dims or DEFAULT_DIMS[backend]
    worst = None
    for i in range(trials):
        g = np.random.default_rng(derive_seed(seed, "axiom", axiom, backend, i))
        rep = _trial(axiom, backend, g, lo, hi, tol)
        if worst is None or rep.worst_violation < worst.worst_violation:
            worst = rep
            worst.witness["trial"] = i
    worst.trials = trials
    return worst


def run_axiom_suite(backend="both", dims=None, trials=1000, seed=0, tol=DEFAULT, channels=()):
    """Run all four axioms on one or both backends.

    Parameters
    ----------
    backend : {"classical", "quantum", "both"}
    dims : dict, optional
        Inclusive ``(lo, hi)`` dimension range per backend; composite states
        draw each factor from this range.
    trials : int
        Trials per axiom per backend, at least 1.
    channels : sequence
        Extra user-supplied channels; each adds an A3 report over ``trials``
        random state pairs in its input dimension.

    Returns
    -------
    list of AxiomReport
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    backends = ["classical", "quantum"] if backend == "both" else [backend]
    for b in backends:
        if b not in DEFAULT_DIMS:
            raise ValueError(f"unknown backend {b!r}")
    dims = {**DEFAULT_DIMS, **(dims or {})}
    reports = [run_trials(ax, b, trials, seed, dims[b], tol) for b in backends for ax in AXIOMS]
    for idx, ch in enumerate(channels):
        b = bk.backend_of(ch)
        worst = None
        for i in range(trials):
            g = np.random.default_rng(derive_seed(seed, "channel", idx, i))
            rep = check_a3(ch, bk.random_state(b, ch.in_dim, g), bk.random_state(b, ch.in_dim, g), tol)
            if worst is None or rep.worst_violation < worst.worst_violation:
                worst = rep
                worst.witness["trial"] = i
        worst.trials = trials
        worst.witness["channel_index"] = idx
        reports.append(worst)
    return reports
