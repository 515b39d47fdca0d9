"""Central tolerance record.

Every threshold used by the toolkit lives here so that reports can embed the
exact set that produced them.
"""

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    construction: float = 1e-9      # normalization and column sums
    negative_dust: float = 1e-12    # negative weights clamped to zero
    hermitian: float = 1e-10        # entrywise
    eigen_clamp: float = 1e-9       # eigenvalues in [-tol, 0) clamped
    unitary: float = 1e-9
    state_equality: float = 1e-9    # L1 / trace norm
    a1: float = 1e-9
    a2: float = 1e-10
    a3: float = 1e-8
    a4: float = 1e-8
    commute: float = 1e-8           # spectral norm of commutators
    parent_preserved: float = 1e-6
    par1_equality: float = 1e-6
    clone: float = 1e-6
    entropy: float = 1e-12          # membership and witness margins
    purity: float = 1e-9
    certify: float = 1e-6           # separable decomposition residual

    def as_dict(self):
        return asdict(self)

    def override(self, **changes):
        known = {f.name for f in fields(self)}
        unknown = set(changes) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in changes.items()})


DEFAULT = Tolerances()
