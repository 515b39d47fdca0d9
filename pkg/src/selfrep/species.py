"""Multi-generation broadcasting of a family of species states.

Each generation every species is broadcast with its environment state and
its offspring marginal becomes the next generation's parent. Parents do not
persist past their generation.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import backend as bk
from .errors import DimensionMismatchError, InvalidStateError
from .replication import BroadcastSetup, broadcast


@dataclass(frozen=True, eq=False)
class SpeciesScenario:
    """Initial species, shared channel and environment policy.

    ``envs`` holds one state (homogeneous environment) or one state per
    species (non-homogeneous environment).
    """

    species: tuple
    channel: object
    envs: tuple
    generations: int

    def __post_init__(self):
        species, envs = tuple(self.species), tuple(self.envs)
        if self.generations < 1:
            raise InvalidStateError("generations must be >= 1")
        if not species:
            raise InvalidStateError("at least one species is required")
        if len(envs) not in (1, len(species)):
            raise DimensionMismatchError(f"{len(envs)} environments for {len(species)} species")
        bk.same_backend(self.channel, *species, *envs)
        d = species[0].dim
        if any(s.dim != d for s in species) or any(w.dim != envs[0].dim for w in envs):
            raise DimensionMismatchError("species (and environments) must share one dimension")
        # validates channel shape against d, e
        setups = tuple(BroadcastSetup.from_channel(self.channel, w, d) for w in envs)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "envs", envs)
        object.__setattr__(self, "setups", setups)

    @property
    def homogeneous(self):
        return len(self.envs) == 1

    def setup_for(self, i):
        return self.setups[0] if self.homogeneous else self.setups[i]


def _pairwise(states):
    n = len(states)
    m = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = m[j, i] = bk.overlap(states[i], states[j])
    return m


@dataclass
class Trajectory:
    overlaps: np.ndarray          # (generations + 1, n, n); index 0 is the initial family
    correlation: np.ndarray       # (generations, n): (Phi | parent (x) offspring)
    states: list = field(repr=False, default_factory=list)
    seed: int = 0

    def overlap_rows(self):
        g, n, _ = self.overlaps.shape
        for t in range(g):
            for i in range(n):
                for j in range(i + 1, n):
                    yield t, i, j, float(self.overlaps[t, i, j])

    def correlation_rows(self):
        for t in range(self.correlation.shape[0]):
            for s in range(self.correlation.shape[1]):
                yield t + 1, s, float(self.correlation[t, s])

    def overlaps_csv(self):
        return _csv(["generation", "i", "j", "overlap"], self.overlap_rows())

    def joint_csv(self):
        return _csv(["generation", "species", "joint_product_overlap"], self.correlation_rows())

    def to_json(self):
        return {
            "seed": self.seed,
            "overlaps": [list(r) for r in self.overlap_rows()],
            "joint_product_overlap": [list(r) for r in self.correlation_rows()],
        }


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def species_simulate(scenario, seed=0):
    """Iterate the scenario; the dynamics are deterministic, ``seed`` is carried into the output.

    ``correlation[t, s]`` is the overlap between the parent-offspring state of
    species ``s`` in generation ``t + 1`` and the product of its marginals;
    values below 1 measure parent-offspring correlation.
    """
    current = list(scenario.species)
    overlaps = [_pairwise(current)]
    corr = []
    history = [current]
    for _ in range(scenario.generations):
        nxt, row = [], []
        for i, phi in enumerate(current):
            out = broadcast(scenario.setup_for(i), phi)
            nxt.append(out.offspring_marginal)
            row.append(bk.overlap(out.joint, bk.tensor(out.parent_marginal, out.offspring_marginal)))
        current = nxt
        history.append(current)
        overlaps.append(_pairwise(current))
        corr.append(row)
    return Trajectory(np.array(overlaps), np.array(corr), history, seed)
