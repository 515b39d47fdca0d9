"""Classical state spaces with a universal entropy floor.

States of every system are distributions with Shannon entropy at least
``epsilon`` (nats). Extreme points sit on the ``S = epsilon`` surface and
generally overlap. For two systems, convex mixtures of products of allowed
states have entropy at least ``2 epsilon``; any joint state with entropy in
``[epsilon, 2 epsilon)`` is therefore not separable. That entropy test is the
only certificate of non-separability offered here. The decomposition search
certifies separability constructively and is otherwise only evidence.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, nnls

from .classical import JointProb, ProbVec, shannon_entropy
from .errors import DimensionMismatchError, InvalidStateError
from .seeding import as_rng, rng
from .tolerances import DEFAULT


@dataclass(frozen=True)
class ToyStateSpace:
    epsilon: float = math.log(2)
    purity_tol: float = DEFAULT.purity
    log_base: str = "e"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidStateError(f"epsilon must be positive, got {self.epsilon}")

    def check_dim(self, n):
        """Warn when a dimension-``n`` system has no (or a single) allowed state."""
        if self.epsilon > math.log(n) + self.purity_tol:
            warnings.warn(f"epsilon={self.epsilon:.6g} exceeds ln({n}); the state set is empty", stacklevel=2)
            return False
        return True

    def to_json(self):
        return {"epsilon": self.epsilon, "purity_tol": self.purity_tol, "log_base": self.log_base}


def membership(p, space):
    return shannon_entropy(p) >= space.epsilon - DEFAULT.entropy


def is_pure(p, space):
    """Extreme point test: entropy equal to epsilon within ``purity_tol``."""
    if not membership(p, space):
        raise InvalidStateError(f"entropy {shannon_entropy(p):.6g} is below epsilon={space.epsilon:.6g}")
    return abs(shannon_entropy(p) - space.epsilon) <= space.purity_tol


def _entropy(w):
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def sample_pure(dim, space, seed):
    """Random distribution with entropy ``epsilon``.

    Picks a random vertex ``v`` and a random interior point ``u`` whose
    entropy exceeds epsilon, then bisects on the segment ``(1 - t) v + t u``.
    When epsilon equals ``ln dim`` (within ``purity_tol``) the uniform state
    is the only pure state and is returned.
    """
    log_n = math.log(dim)
    if space.epsilon > log_n + space.purity_tol or dim < 2:
        raise InvalidStateError(f"no pure states: epsilon={space.epsilon:.6g} vs ln({dim})={log_n:.6g}")
    if space.epsilon >= log_n - space.purity_tol:
        return ProbVec(np.full(dim, 1.0 / dim))
    g = as_rng(seed)
    v = np.zeros(dim)
    v[g.integers(dim)] = 1.0
    u = g.dirichlet(np.ones(dim))
    if _entropy(u) <= space.epsilon:
        # pull u toward uniform until it clears epsilon with margin
        u = _mix_uniform(u, 0.5 * (space.epsilon + log_n))
    # invariant: entropy at hi is >= epsilon, so the result never leaves the space
    lo, hi = 0.0, 1.0
    p = u
    for _ in range(200):
        t = 0.5 * (lo + hi)
        q = (1 - t) * v + t * u
        s = _entropy(q)
        if s < space.epsilon:
            lo = t
        else:
            hi, p = t, q
            if s - space.epsilon <= 0.01 * space.purity_tol:
                break
    return ProbVec(p)


def _mix_uniform(a, eps):
    """Smallest mixture ``(1 - s) a + s uniform`` with entropy >= eps (bisection on s)."""
    if _entropy(a) >= eps:
        return a
    u = np.full(a.size, 1.0 / a.size)
    lo, hi = 0.0, 1.0
    for _ in range(100):
        m = 0.5 * (lo + hi)
        if _entropy((1 - m) * a + m * u) >= eps:
            hi = m
        else:
            lo = m
    return (1 - hi) * a + hi * u


def project(p, space):
    """Entropy-constraint projection by mixing toward uniform."""
    return ProbVec(_mix_uniform(np.asarray(p.weights, float), space.epsilon))


@dataclass
class SeparabilityVerdict:
    witness_fired: bool
    entropy: float
    epsilon: float
    search_residual: float = None
    components: dict = field(default=None)

    @property
    def certified_separable(self):
        return self.search_residual is not None and self.search_residual <= DEFAULT.certify

    def to_json(self):
        return {
            "witness_fired": self.witness_fired,
            "entropy": self.entropy,
            "epsilon": self.epsilon,
            "search_residual": self.search_residual,
            "components": self.components,
        }


def _bipartite(P):
    if len(P.dims) != 2:
        raise DimensionMismatchError(f"expected a two-subsystem joint state, got dims {P.dims}")


def entropy_witness(P, space):
    """Fires when ``S(P) < 2 epsilon``, which rules out every separable decomposition."""
    _bipartite(P)
    s = shannon_entropy(P)
    if s < space.epsilon - DEFAULT.entropy:
        raise InvalidStateError(f"joint state is not in the state space (entropy {s:.6g} < {space.epsilon:.6g})")
    return SeparabilityVerdict(bool(s < 2 * space.epsilon - DEFAULT.entropy), s, space.epsilon)


def separable_state(weights, factors_a, factors_b):
    """``sum_j weights[j] a_j (x) b_j`` as a :class:`JointProb`."""
    a = np.column_stack([f.weights for f in factors_a])
    b = np.column_stack([f.weights for f in factors_b])
    lam = np.asarray(weights, float)
    return JointProb(((a * lam) @ b.T).ravel(), [a.shape[0], b.shape[0]])


def _nmf(m, k, iters, g):
    """Multiplicative-update nonnegative factorization ``m ~ w @ h`` (Lee-Seung, Frobenius loss)."""
    da, db = m.shape
    w = g.random((da, k)) + 0.1
    h = g.random((k, db)) + 0.1
    for _ in range(iters):
        h *= (w.T @ m) / (w.T @ w @ h + 1e-300)
        w *= (m @ h.T) / (w @ h @ h.T + 1e-300)
    return w, h


def _normalize_factors(w, h):
    cw = w.sum(axis=0)
    ch = h.sum(axis=1)
    lam = cw * ch
    a = w / np.where(cw > 0, cw, 1.0)
    b = (h / np.where(ch > 0, ch, 1.0)[:, None]).T
    a[:, cw <= 0] = 1.0 / w.shape[0]
    b[:, ch <= 0] = 1.0 / h.shape[1]
    return lam / lam.sum(), a, b


def _project_cols(a, eps):
    return np.column_stack([_mix_uniform(a[:, j], eps) for j in range(a.shape[1])])


def _gibbs(x, eps, beta0=None):
    """Map direction columns to distributions on the ``S = eps`` surface.

    Column ``j`` becomes ``softmax(beta_j u_j)`` where ``u_j`` is the centred,
    normalised direction and ``beta_j >= 0`` is fixed by the entropy
    condition (safeguarded Newton, warm-started from ``beta0``). Returns
    ``(p, state)``; pass ``state`` to :func:`_gibbs_jacobian` for derivatives.
    """
    d, k = x.shape
    if eps >= math.log(d) - 1e-15:
        return np.full((d, k), 1.0 / d), None
    c = x - x.mean(axis=0)
    nrm = np.linalg.norm(c, axis=0)
    flat = ~(nrm > 1e-300)
    if flat.any():
        c[:, flat] = np.eye(d)[:, [0]] - 1.0 / d
        nrm = np.linalg.norm(c, axis=0)
    u = c / nrm
    b = np.ones(k) if beta0 is None else np.maximum(beta0, 1e-3)
    lo = np.zeros(k)
    hi = np.full(k, np.inf)
    for _ in range(200):
        z = b * u
        z -= z.max(axis=0)
        p = np.exp(z)
        zsum = p.sum(axis=0)
        p /= zsum
        logp = z - np.log(zsum)
        f = -(p * logp).sum(axis=0) - eps
        if np.abs(f).max() <= 1e-14:
            break
        mu = (p * u).sum(axis=0)
        var = (p * u * u).sum(axis=0) - mu * mu
        lo = np.where(f > 0, b, lo)
        hi = np.where(f > 0, hi, b)
        # dS/dbeta = -beta * var
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            bn = b + f / (b * var)
        ok = np.isfinite(bn) & (bn > lo) & (bn < hi)
        if not ok.all():
            bn = np.where(ok, bn, np.where(np.isinf(hi), 2.0 * b, 0.5 * (lo + hi)))
        if np.abs(bn - b).max() <= 1e-15 * b.max():
            b = bn
            z = b * u
            z -= z.max(axis=0)
            p = np.exp(z)
            p /= p.sum(axis=0)
            break
        b = bn
    return p, (u, nrm, b)


def _gibbs_jacobian(p, state):
    """``jac[j] = dp_j / dx_j`` for the map of :func:`_gibbs`, shape (k, d, d)."""
    d, k = p.shape
    if state is None:
        return np.zeros((k, d, d))
    u, nrm, b = state
    mu = (p * u).sum(axis=0)
    var = (p * (u - mu) ** 2).sum(axis=0)
    eye = np.eye(d)
    centre = eye - 1.0 / d
    du = (eye[None] - np.einsum("ik,jk->kij", u, u)) @ centre / nrm[:, None, None]
    cov = p * (u - mu)
    # beta moves to keep S fixed: dz = beta (du - u cov(u, du) / var(u))
    dz = b[:, None, None] * (eye[None] - np.einsum("ik,jk->kij", u, cov) / var[:, None, None]) @ du
    dp = np.einsum("ik,ij->kij", p, eye) - np.einsum("ik,jk->kij", p, p)
    return dp @ dz


def _charts(x):
    """Unit centred directions and orthonormal tangent bases (d, d-2) for each column."""
    d, k = x.shape
    q, _ = np.linalg.qr(np.column_stack([np.ones(d), np.eye(d)[:, : d - 1]]))
    v = q[:, 1:]
    e = x - x.mean(axis=0)
    nrm = np.linalg.norm(e, axis=0)
    flat = ~(nrm > 1e-300)
    e[:, flat] = np.eye(d)[:, [0]] - 1.0 / d
    e /= np.linalg.norm(e, axis=0)
    tangents = []
    for j in range(k):
        full, _ = np.linalg.qr(np.column_stack([v.T @ e[:, j], np.eye(d - 1)]))
        tangents.append(v @ full[:, 1 : d - 1])
    return e, np.stack(tangents)


class _SurfaceFit:
    """Least squares over pure factors in local charts; weights by NNLS (variable projection)."""

    def __init__(self, m, eps, xa, xb, beta=None):
        self.m = m
        self.eps = eps
        self.k = xa.shape[1]
        self.ea, self.ta = _charts(xa)
        self.eb, self.tb = _charts(xb)
        self.na = self.ta.shape[2] * self.k
        self.beta = beta if beta is not None else (None, None)
        self._key = None

    def directions(self, y):
        ya = y[: self.na].reshape(self.k, -1)
        yb = y[self.na :].reshape(self.k, -1)
        xa = self.ea + np.einsum("kdt,kt->dk", self.ta, ya)
        xb = self.eb + np.einsum("kdt,kt->dk", self.tb, yb)
        return xa, xb

    def evaluate(self, y):
        key = y.tobytes()
        if key == self._key:
            return self._val
        xa, xb = self.directions(y)
        a, sa = _gibbs(xa, self.eps, self.beta[0])
        b, sb = _gibbs(xb, self.eps, self.beta[1])
        self.beta = (None if sa is None else sa[2], None if sb is None else sb[2])
        kr = np.einsum("ik,jk->ijk", a, b).reshape(-1, self.k)
        lam, _ = nnls(kr, self.m.ravel(), maxiter=50 * self.k)
        self._key, self._val = key, (lam, a, b, sa, sb, kr, kr @ lam - self.m.ravel())
        return self._val

    def residual(self, y):
        return self.evaluate(y)[6]

    def jacobian(self, y):
        lam, a, b, sa, sb, kr, _ = self.evaluate(y)
        ja, jb = _gibbs_jacobian(a, sa), _gibbs_jacobian(b, sb)
        da, db = self.m.shape
        ga = np.einsum("k,kit,jk->ijkt", lam, ja @ self.ta, b).reshape(da * db, -1)
        gb = np.einsum("k,ik,kjt->ijkt", lam, a, jb @ self.tb).reshape(da * db, -1)
        jac = np.hstack([ga, gb])
        active = kr[:, lam > 0]
        if active.shape[1]:
            q, _ = np.linalg.qr(active)
            jac = jac - q @ (q.T @ jac)
        return jac


def _surface_refine(m, eps, xa, xb, rounds=40, nfev=30):
    """Re-charted Levenberg-Marquardt polish; returns ``(residual, lam, a, b)``."""
    best = (np.inf, None, None, None)
    beta = None
    stall = 0
    for _ in range(rounds):
        fit = _SurfaceFit(m, eps, xa, xb, beta)
        n = fit.na + fit.tb.shape[2] * fit.k
        y = np.zeros(n)
        status = 2
        if n:
            method = "lm" if m.size >= n else "trf"
            res = least_squares(fit.residual, y, jac=fit.jacobian, method=method,
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=nfev)
            y, status = res.x, res.status
        lam, a, b = fit.evaluate(y)[:3]
        beta = fit.beta
        xa, xb = fit.directions(y)
        r = float(np.abs((a * lam) @ b.T - m).sum())
        if r < best[0] * (1 - 1e-3):
            stall = 0
        else:
            stall += 1
        if r < best[0]:
            best = (r, lam, a, b)
        if r <= 1e-14 or stall >= 3 or (status in (2, 3, 4) and np.linalg.norm(y) < 1e-8):
            break
    return best


def separability_search(P, space, k=None, iters=500, seed=0, restarts=300, target=1e-9):
    """Search for ``P = sum_j lam_j a_j (x) b_j`` with every factor in the state space.

    Each restart runs multiplicative nonnegative factorization of the weight
    matrix followed by entropy projection of the factors. That candidate then
    seeds a local polish over pure factors: each factor is kept on the
    ``S = epsilon`` surface through a Gibbs parameterization, weights come
    from NNLS and the L1 fit is driven down by Levenberg-Marquardt. Odd
    restarts start the polish from random directions instead. The best
    projected decomposition over all restarts is reported.

    A residual at or below ``certify`` tolerance is a constructive
    separability certificate. A larger residual proves nothing.
    """
    _bipartite(P)
    witness = entropy_witness(P, space)
    m = P.matrix()
    da, db = m.shape
    k = da * db if k is None else int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    eps = space.epsilon
    if eps > math.log(min(da, db)) + space.purity_tol:
        return witness
    best = (np.inf, None, None, None)
    for r in range(restarts):
        g = rng(seed, "separability-restart", r)
        w, h = _nmf(m, k, iters, g)
        lam, a, b = _normalize_factors(w, h)
        a = _project_cols(a, eps)
        b = _project_cols(b, eps)
        res = float(np.abs((a * lam) @ b.T - m).sum())
        if res < best[0]:
            best = (res, lam, a, b)
        if r % 2:
            xa, xb = g.standard_normal((da, k)), g.standard_normal((db, k))
        else:
            xa, xb = np.log(np.clip(a, 1e-12, None)), np.log(np.clip(b, 1e-12, None))
        cand = _surface_refine(m, eps, xa, xb)
        if cand[0] < best[0]:
            lam, a, b = cand[1:]
            lam = lam / lam.sum()
            a = _project_cols(a, eps)
            b = _project_cols(b, eps)
            best = (float(np.abs((a * lam) @ b.T - m).sum()), lam, a, b)
        if best[0] <= target:
            break
    res, lam, a, b = best
    witness.search_residual = res
    witness.components = {
        "weights": lam.tolist(),
        "factors_a": a.T.tolist(),
        "factors_b": b.T.tolist(),
    }
    return witness


def entangled_fraction(dims, space, samples, seed=0):
    """Monte Carlo fraction of uniformly sampled joint states (within the space) that fire the witness.

    Joint states are Dirichlet(1) draws on the product simplex, kept only when
    their entropy is at least epsilon. No target value is implied.
    """
    g = rng(seed, "entangled-fraction")
    n = int(np.prod(dims))
    fired = kept = 0
    while kept < samples:
        q = g.dirichlet(np.ones(n))
        s = _entropy(q)
        if s < space.epsilon - DEFAULT.entropy:
            continue
        kept += 1
        fired += s < 2 * space.epsilon - DEFAULT.entropy
    return fired / samples
