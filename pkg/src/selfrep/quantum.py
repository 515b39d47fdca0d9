"""Density matrices, Uhlmann fidelity, partial traces and Kraus channels.

Composite systems use the same row-major convention as the classical core:
``kron(A, B)`` puts subsystem A on the slow index.
"""

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .classical import ProbVec
from .errors import DimensionMismatchError, InvalidStateError, NumericalError
from .seeding import as_rng
from .tolerances import DEFAULT

__all__ = [
    "DensityMatrix",
    "KrausChannel",
    "uhlmann_fidelity",
    "trace_distance",
    "diag_embed",
    "partial_trace",
    "apply_kraus",
    "tensor",
    "channel_tensor",
    "commutator_norm",
    "commute_check",
    "simultaneous_diagonalization",
    "random_density",
    "random_cptp",
    "random_unitary",
    "pure",
]

MAX_SUBSYSTEM_DIM = 64
MAX_TOTAL_DIM = 4096


def _eigh(a, what):
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition of {what} failed (shape {a.shape}, "
            f"max |entry| {np.abs(a).max():.3e}): {exc}"
        ) from exc


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    entries: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        tol = DEFAULT
        r = np.array(self.entries, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] == 0:
            raise InvalidStateError(f"density matrix must be square, got shape {r.shape}")
        n = r.shape[0]
        if n > MAX_TOTAL_DIM:
            raise InvalidStateError(f"dimension {n} exceeds supported maximum {MAX_TOTAL_DIM}")
        if not np.all(np.isfinite(r)):
            raise InvalidStateError("density matrix has non-finite entries")
        herm = np.abs(r - r.conj().T).max()
        if herm > tol.hermitian:
            raise InvalidStateError(f"not Hermitian (max deviation {herm:.3e})")
        r = 0.5 * (r + r.conj().T)
        tr = np.trace(r).real
        if abs(tr - 1.0) > tol.construction:
            raise InvalidStateError(f"trace {tr!r} is not 1")
        vals, vecs = _eigh(r, "density matrix")
        if vals[0] < -tol.eigen_clamp:
            raise InvalidStateError(f"negative eigenvalue {vals[0]:.3e}")
        if vals[0] < 0:
            vals = np.clip(vals, 0, None)
            r = (vecs * vals) @ vecs.conj().T
            tr = vals.sum()
        r = r / tr
        dims = (n,) if self.dims is None else tuple(int(d) for d in self.dims)
        if prod(dims) != n or any(d < 1 for d in dims):
            raise InvalidStateError(f"dims {dims} do not factor dimension {n}")
        if any(d > MAX_SUBSYSTEM_DIM for d in dims) and len(dims) > 1:
            raise InvalidStateError(f"subsystem dimension above {MAX_SUBSYSTEM_DIM}")
        r.setflags(write=False)
        object.__setattr__(self, "entries", r)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.entries.shape[0]

    def eigenvalues(self):
        return np.clip(np.linalg.eigvalsh(self.entries), 0, None)

    def to_json(self):
        return {
            "kind": "density",
            "dim": self.dim,
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj):
        if obj.get("kind") != "density":
            raise InvalidStateError(f"expected kind 'density', got {obj.get('kind')!r}")
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise InvalidStateError("re and im parts differ in shape")
        rho = cls(re + 1j * im)
        if "dim" in obj and int(obj["dim"]) != rho.dim:
            raise InvalidStateError(f"declared dim {obj['dim']} does not match matrix size {rho.dim}")
        return rho

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, dims={self.dims})"


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    kraus_ops: tuple

    def __post_init__(self):
        ops = [np.array(k, dtype=complex) for k in self.kraus_ops]
        if not ops:
            raise InvalidStateError("at least one Kraus operator is required")
        shape = ops[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ops):
            raise InvalidStateError("Kraus operators must be 2-d and share one shape")
        completeness = sum(k.conj().T @ k for k in ops)
        err = np.linalg.norm(completeness - np.eye(shape[1]))
        if err > DEFAULT.construction:
            raise InvalidStateError(f"Kraus completeness violated (Frobenius error {err:.3e})")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", tuple(ops))

    @property
    def in_dim(self):
        return self.kraus_ops[0].shape[1]

    @property
    def out_dim(self):
        return self.kraus_ops[0].shape[0]

    def is_unitary(self, tol=1e-9):
        k = self.kraus_ops
        return (
            len(k) == 1
            and k[0].shape[0] == k[0].shape[1]
            and np.linalg.norm(k[0] @ k[0].conj().T - np.eye(k[0].shape[0])) <= tol
        )

    def to_json(self):
        return {
            "kind": "kraus",
            "ops": [{"re": k.real.tolist(), "im": k.imag.tolist()} for k in self.kraus_ops],
        }

    @classmethod
    def from_json(cls, obj):
        if obj.get("kind") != "kraus":
            raise InvalidStateError(f"expected kind 'kraus', got {obj.get('kind')!r}")
        ops = []
        for op in obj["ops"]:
            re = np.asarray(op["re"], dtype=float)
            ops.append(re + 1j * np.asarray(op.get("im", np.zeros_like(re)), dtype=float))
        return cls(tuple(ops))


def _check_same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _psd_sqrt(a, what):
    vals, vecs = _eigh(a, what)
    vals = np.clip(vals, 0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def uhlmann_fidelity(rho, sigma):
    """``Tr sqrt(sqrt(rho) sigma sqrt(rho))``, clamped to [0, 1].

    Both square roots come from Hermitian eigendecompositions with negative
    eigenvalue dust set to zero.
    """
    _check_same_dim(rho, sigma)
    s = _psd_sqrt(rho.entries, "rho")
    m = s @ sigma.entries @ s
    m = 0.5 * (m + m.conj().T)
    try:
        vals = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalues of sqrt(rho) sigma sqrt(rho) failed: {exc}") from exc
    return float(np.clip(np.sum(np.sqrt(np.clip(vals, 0, None))), 0.0, 1.0))


def trace_distance(rho, sigma):
    """Trace norm ``||rho - sigma||_1`` (no factor 1/2, comparable to classical L1)."""
    _check_same_dim(rho, sigma)
    return float(np.abs(np.linalg.eigvalsh(rho.entries - sigma.entries)).sum())


def pure(ket):
    """Projector onto a (normalized on the fly) ket."""
    v = np.asarray(ket, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def diag_embed(p, basis=None):
    """``U diag(p) U^dagger``; identity basis when ``basis`` is None."""
    d = np.diag(p.weights).astype(complex)
    if basis is None:
        return DensityMatrix(d, p.dims)
    u = np.asarray(basis, dtype=complex)
    if u.shape != (p.dim, p.dim):
        raise DimensionMismatchError(f"basis shape {u.shape} vs state dim {p.dim}")
    err = np.abs(u.conj().T @ u - np.eye(p.dim)).max()
    if err > DEFAULT.unitary:
        raise InvalidStateError(f"basis is not unitary (deviation {err:.3e})")
    return DensityMatrix(u @ d @ u.conj().T, p.dims)


def partial_trace(rho, subsystem_dims, keep):
    """Trace out all subsystems except ``keep`` (an index or a sequence of indices)."""
    dims = [int(d) for d in subsystem_dims]
    if prod(dims) != rho.dim:
        raise DimensionMismatchError(f"subsystem dims {dims} do not factor dimension {rho.dim}")
    keep = [int(keep)] if np.ndim(keep) == 0 else sorted(int(k) for k in keep)
    n = len(dims)
    if not keep or any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise DimensionMismatchError(f"keep={keep} invalid for {n} subsystems")
    t = rho.entries.reshape(dims + dims)
    # contract row/column indices of discarded subsystems, highest first
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    kd = [dims[k] for k in keep]
    return DensityMatrix(t.reshape(prod(kd), prod(kd)), kd if len(kd) > 1 else None)


def apply_kraus(T, rho):
    """``sum_i K_i rho K_i^dagger``."""
    if T.in_dim != rho.dim:
        raise DimensionMismatchError(f"channel input dim {T.in_dim} vs state dim {rho.dim}")
    out = sum(k @ rho.entries @ k.conj().T for k in T.kraus_ops)
    return DensityMatrix(out)


def tensor(rho, sigma):
    return DensityMatrix(np.kron(rho.entries, sigma.entries), rho.dims + sigma.dims)


def channel_tensor(A, B):
    """Kraus set of ``A (x) B``."""
    return KrausChannel(tuple(np.kron(a, b) for a in A.kraus_ops for b in B.kraus_ops))


def commutator_norm(a, b):
    """Spectral norm of ``[a, b]``."""
    x, y = a.entries, b.entries
    return float(np.linalg.norm(x @ y - y @ x, 2))


def _worst_commutator(states):
    worst, pair = 0.0, None
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            c = commutator_norm(states[i], states[j])
            if c > worst:
                worst, pair = c, (i, j)
    return worst, pair


def commute_check(states, tol=None):
    """True iff every pair of states commutes up to ``tol`` in spectral norm."""
    tol = DEFAULT.commute if tol is None else tol
    if len({s.dim for s in states}) > 1:
        raise DimensionMismatchError("states have different dimensions")
    return _worst_commutator(states)[0] <= tol


def _canonical_basis(u):
    # fix each column's phase and order columns by dominant component so that
    # already-diagonal families come back with the identity basis
    lead = np.argmax(np.abs(u), axis=0)
    phases = u[lead, np.arange(u.shape[1])]
    u = u * (np.abs(phases) / phases)
    order = np.lexsort((np.arange(u.shape[1]), lead))
    return u[:, order]


def simultaneous_diagonalization(states, tol=None, seed=0):
    """Common eigenbasis of a commuting family.

    A random real combination of the family is diagonalized first; clusters
    of (near-)degenerate eigenvalues are then re-split with fresh random
    combinations of the family restricted to the cluster.

    Returns
    -------
    basis : ndarray
        Unitary whose columns are common eigenvectors.
    dists : list of ProbVec
        Eigenvalue distribution of each state in that basis.
    """
    tol = DEFAULT.commute if tol is None else tol
    if not states:
        raise InvalidStateError("empty family")
    if len({s.dim for s in states}) > 1:
        raise DimensionMismatchError("states have different dimensions")
    worst, pair = _worst_commutator(states)
    if worst > tol:
        raise InvalidStateError(f"states {pair} do not commute (commutator norm {worst:.3e})")
    gen = np.random.default_rng(seed)
    mats = [s.entries for s in states]
    n = mats[0].shape[0]

    def split(cols, depth):
        sub = [cols.conj().T @ m @ cols for m in mats]
        c = gen.standard_normal(len(sub))
        vals, vecs = _eigh(sum(ci * m for ci, m in zip(c, sub)), "random combination")
        cols = cols @ vecs
        if depth > 3:
            return cols
        blocks, start = [], 0
        scale = max(1.0, np.abs(vals).max())
        for i in range(1, len(vals) + 1):
            if i == len(vals) or vals[i] - vals[i - 1] > 1e-7 * scale:
                blocks.append((start, i))
                start = i
        if len(blocks) == 1:
            return cols
        return np.hstack([split(cols[:, a:b], depth + 1) if b - a > 1 else cols[:, a:b] for a, b in blocks])

    u = _canonical_basis(split(np.eye(n, dtype=complex), 0))
    dists = []
    for s, m in zip(states, mats):
        d = np.real(np.diag(u.conj().T @ m @ u))
        err = np.abs((u * d) @ u.conj().T - m).max()
        if err > tol:
            raise NumericalError(f"reconstruction error {err:.3e} exceeds {tol:.1e}")
        d = np.clip(d, 0, None)
        dists.append(ProbVec(d / d.sum()))
    return u, dists


def random_unitary(dim, seed):
    """Haar unitary via QR of a complex Ginibre matrix with phase correction."""
    g = as_rng(seed)
    z = (g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim, seed):
    """``G G^dagger / Tr(G G^dagger)`` with complex Gaussian ``G``."""
    if dim < 1:
        raise InvalidStateError("dim must be >= 1")
    g = as_rng(seed)
    z = g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))
    r = z @ z.conj().T
    return DensityMatrix(r / np.trace(r).real)


def random_cptp(in_dim, out_dim, env_dim, seed):
    """Random channel from a Gaussian isometry ``in_dim -> env_dim * out_dim``.

    The isometry's row blocks of height ``out_dim`` are the Kraus operators.
    """
    if min(in_dim, out_dim, env_dim) < 1:
        raise InvalidStateError("dims must be >= 1")
    if out_dim * env_dim < in_dim:
        raise InvalidStateError(
            f"out_dim*env_dim = {out_dim * env_dim} cannot host an isometry from dim {in_dim}"
        )
    g = as_rng(seed)
    z = g.standard_normal((env_dim * out_dim, in_dim)) + 1j * g.standard_normal((env_dim * out_dim, in_dim))
    v, r = np.linalg.qr(z)
    v = v * (np.diag(r) / np.abs(np.diag(r)))
    return KrausChannel(tuple(v[k * out_dim:(k + 1) * out_dim] for k in range(env_dim)))
