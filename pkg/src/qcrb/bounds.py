"""Cramer-Rao type bounds and covariance frontiers.

Three scalar bounds on ``tr(G V)`` over locally unbiased covariances ``V``
are computed here:

* ``C``: the single-copy attainable bound (qubit families:
  ``(tr sqrt(J^-1/2 G J^-1/2))^2``),
* ``C_A``: the asymptotic bound for collective measurements on many copies,
* ``C_R``: the RLD bound, the maximum of ``tr(inv(Jt) G')`` over Hermitian
  ``G' >= 0`` whose real part is ``G``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import families, infogeo
from .errors import (
    ConvergenceError,
    OracleFailure,
    ParameterError,
    SingularMatrixError,
    SingularStateError,
    UnsupportedFamilyError,
)
from .matcore import check_hermitian, eig_hermitian, hermitize, mat_func, trace_abs

CLOSED_FORM = "closed-form"
ORACLE = "oracle"
PAPER_CLAIM = "paper-claim"
NOT_AVAILABLE = "not-available"

ORDER_TOL = 1e-9
# above this Bloch radius the RLD path is not used for the r-fixed family
RLD_MAX_R = 1 - 1e-6

RFIXED_SINGLE = "r-fixed-single"
RFIXED_ASYMPTOTIC = "r-fixed-asymptotic"
FULL_ASYMPTOTIC = "full-asymptotic"
FULL_SINGLE_W = "full-single-w"
FRONTIER_KINDS = (RFIXED_SINGLE, RFIXED_ASYMPTOTIC, FULL_ASYMPTOTIC, FULL_SINGLE_W)


# ---------------------------------------------------------------------------
# weight matrices


def weight_matrix(values, d=None):
    """Build a weight matrix.

    ``values`` is either a square array, a flat row-major list of ``d*d``
    entries, or, for ``d == 2``, the triple ``(g1, g2, g3)`` meaning
    ``[[g1 + g2, g3], [g3, g1 - g2]]``.
    """
    g = np.asarray(values, dtype=float)
    if g.ndim == 1:
        if g.size == 3 and d in (None, 2):
            g1, g2, g3 = g
            g = np.array([[g1 + g2, g3], [g3, g1 - g2]])
        else:
            side = int(round(np.sqrt(g.size)))
            if side * side != g.size:
                raise ParameterError(f"cannot shape {g.size} weight entries into a square")
            g = g.reshape(side, side)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ParameterError(f"weight matrix must be square, got shape {g.shape}")
    if d is not None and g.shape[0] != d:
        raise ParameterError(f"weight matrix is {g.shape[0]}x{g.shape[0]}, family needs {d}x{d}")
    if np.max(np.abs(g - g.T)) > 1e-12:
        raise ParameterError("weight matrix must be symmetric")
    g = 0.5 * (g + g.T)
    if np.linalg.eigvalsh(g).min() < -1e-12:
        raise ParameterError("weight matrix must be positive semidefinite")
    return g


def g_coords(G):
    """(g1, g2, g3) coordinates of a 2x2 weight matrix."""
    G = np.asarray(G, dtype=float)
    return 0.5 * (G[0, 0] + G[1, 1]), 0.5 * (G[0, 0] - G[1, 1]), G[0, 1]


def _g_det_root(g1, g2, g3):
    return np.sqrt(max(g1 * g1 - g2 * g2 - g3 * g3, 0.0))


# ---------------------------------------------------------------------------
# RLD bound


def _inverse_parts(Jt):
    jt = check_hermitian(np.asarray(Jt), tol=1e-10)
    inv = mat_func(jt, "inv")
    return inv.real, inv.imag


def rld_bound_closed(Jt, G):
    """``tr(Re(inv(Jt)) G) + || sqrt(G) Im(inv(Jt)) sqrt(G) ||_1``."""
    G = np.asarray(G, dtype=float)
    re, im = _inverse_parts(Jt)
    root = mat_func(G, "sqrt").real
    return float(np.trace(re @ G) + trace_abs(1j * (root @ im @ root)))


def _antisym_basis(k):
    basis = []
    for a in range(k):
        for b in range(a + 1, k):
            e = np.zeros((k, k))
            e[a, b], e[b, a] = 1.0, -1.0
            basis.append(e)
    return basis


def rld_bound_oracle(Jt, G, starts=3, seed=0, mu_final=1e-12, max_iter=2000):
    """Maximize ``tr(inv(Jt) (G + iA))`` over real antisymmetric ``A`` with
    ``G + iA >= 0`` by a log-barrier interior-point ascent.

    The objective is linear in ``A`` and the feasible set is convex, so every
    start converges to the same value; several seeded interior starts are run
    and the best feasible value is returned.
    """
    G = np.asarray(G, dtype=float)
    re, im = _inverse_parts(Jt)
    base = float(np.trace(re @ G))
    w, u = np.linalg.eigh(G)
    rng_mask = w > 1e-12 * max(w.max(), 0.0) if w.size and w.max() > 0 else np.zeros(0, bool)
    q = u[:, rng_mask]
    k = q.shape[1]
    if k < 2:
        return base
    # constraint forces A to live on the range of G
    g_r = q.T @ G @ q
    s_r = q.T @ im @ q
    basis = _antisym_basis(k)
    c = np.array([-np.trace(s_r @ e) for e in basis])

    def herm(x):
        return g_r + 1j * sum(xi * e for xi, e in zip(x, basis))

    def barrier(x, mu):
        ev = np.linalg.eigvalsh(herm(x))
        if ev.min() <= 0:
            return -np.inf
        return c @ x + mu * np.sum(np.log(ev))

    rng = np.random.default_rng(seed)
    best, best_x = -np.inf, None
    for start in range(starts):
        x = np.zeros(len(basis))
        if start:
            # random strictly feasible point: shrink a random direction into the interior
            direction = rng.standard_normal(len(basis))
            t = 1.0
            while barrier(t * direction, 1.0) == -np.inf:
                t *= 0.5
            x = 0.5 * t * direction
        mu = 1.0 * max(1.0, np.abs(c).max())
        it = 0
        while True:
            for _ in range(100):
                it += 1
                h_inv = np.linalg.inv(herm(x))
                grad = c + mu * np.array([np.real(np.trace(h_inv @ (1j * e))) for e in basis])
                hess = mu * np.array(
                    [[np.real(np.trace(h_inv @ ea @ h_inv @ eb)) for eb in basis] for ea in basis]
                )
                step = -np.linalg.solve(hess, grad)
                decrement = float(grad @ step)
                if decrement < 1e-14:
                    break
                f0, t = barrier(x, mu), 1.0
                while barrier(x + t * step, mu) < f0 + 0.25 * t * decrement:
                    t *= 0.5
                    if t < 1e-14:
                        break
                x = x + t * step
            if mu * k < mu_final or it > max_iter:
                break
            mu *= 0.1
        value = base + float(c @ x)
        if it > max_iter:
            raise OracleFailure(
                f"RLD oracle did not converge within {max_iter} Newton steps", best=value
            )
        if value > best:
            best, best_x = value, x
    return best


# ---------------------------------------------------------------------------
# attainable and asymptotic bounds


class AttainableBound(NamedTuple):
    value: float
    W: np.ndarray


def qubit_attainable_C(J, G):
    """``(tr sqrt(B))^2`` with ``B = J^-1/2 G J^-1/2``, and the optimal
    frontier weight ``W* = sqrt(B) / tr sqrt(B)``."""
    j_isqrt = mat_func(np.asarray(J, dtype=float), "inv_sqrt").real
    b = j_isqrt @ np.asarray(G, dtype=float) @ j_isqrt
    root = mat_func(b, "sqrt").real
    tr = float(np.trace(root))
    w = root / tr if tr > 0 else np.full_like(root, np.nan)
    return AttainableBound(tr * tr, w)


def rfixed_closed_forms(r0, G):
    """Closed-form (C, C_A) for the fixed-radius qubit subfamily written in an
    orthonormal angular frame (the paper's point theta = pi/2)."""
    g1, g2, g3 = g_coords(G)
    root = _g_det_root(g1, g2, g3)
    return 2 / r0**2 * (g1 + root), 2 / r0**2 * (g1 + r0 * root)


def _rfixed_frame_weight(theta, G):
    # phi coordinate is stretched by |sin(theta)| relative to an orthonormal frame
    s = abs(np.sin(theta))
    if s < 1e-12:
        raise SingularMatrixError("phi is not identifiable at sin(theta) = 0", eigenvalue=0.0)
    scale = np.diag([1.0, 1.0 / s])
    return scale @ np.asarray(G, dtype=float) @ scale


def asymptotic_C_A(family, J, Jt, G, theta=None):
    """Asymptotic bound and its provenance for ``family`` at a point.

    Returns ``(value, provenance)``; value is ``None`` when the quantity it
    is built from is unavailable.
    """
    J = np.asarray(J, dtype=float)
    G = np.asarray(G, dtype=float)
    if J.shape == (1, 1):
        return float(G[0, 0] / J[0, 0]), CLOSED_FORM
    kind = getattr(family, "kind", family)
    if kind == families.QUBIT_R_FIXED:
        th = 0.5 * np.pi if theta is None else float(np.ravel(theta)[0])
        return float(rfixed_closed_forms(family.r0, _rfixed_frame_weight(th, G))[1]), CLOSED_FORM
    if kind == families.QUBIT_PHI_ZERO:
        return float(np.trace(mat_func(J, "inv").real @ G)), PAPER_CLAIM
    if kind in (families.QUBIT_FULL, families.DISPLACED_THERMAL):
        if Jt is None:
            return None, NOT_AVAILABLE
        return rld_bound_closed(Jt, G), PAPER_CLAIM
    raise UnsupportedFamilyError(f"no asymptotic bound rule for family {kind!r}")


@dataclass
class BoundReport:
    family: str
    theta: list
    G: np.ndarray
    J: infogeo.FisherMatrix
    Jt: infogeo.FisherMatrix | None
    C: float | None
    C_A: float | None
    C_R: float | None
    ordering_ok: bool
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "family": self.family,
            "theta": [float(t) for t in self.theta],
            "G": np.asarray(self.G).tolist(),
            "J": self.J.to_dict(),
            "Jt": self.Jt.to_dict() if self.Jt is not None else None,
            "C": self.C,
            "C_A": self.C_A,
            "C_R": self.C_R,
            "ordering_ok": self.ordering_ok,
            "notes": dict(self.notes),
        }


def check_ordering(C, C_A, C_R, tol=ORDER_TOL):
    present = [v for v in (C, C_A, C_R) if v is not None]
    scale = max([1.0] + [abs(v) for v in present])
    ok = True
    if C is not None and C_A is not None:
        ok &= C >= C_A - tol * scale
    if C_A is not None and C_R is not None:
        ok &= C_A >= C_R - tol * scale
    if C is not None and C_R is not None:
        ok &= C >= C_R - tol * scale
    return bool(ok)


def compute_bounds(family, theta, G):
    """All bounds for one (family, point, weight) query."""
    G = weight_matrix(G, family.param_dim)
    fp = families.eval_derivs(family, theta)
    J = infogeo.sld_fisher_at(fp)
    notes = {}

    Jt = None
    if family.kind == families.QUBIT_R_FIXED and family.r0 > RLD_MAX_R:
        notes["Jt"] = "pure state: RLD undefined"
    else:
        try:
            Jt = infogeo.rld_fisher_at(fp)
        except SingularStateError as exc:
            notes["Jt"] = str(exc)

    C_R = rld_bound_closed(Jt.entries, G) if Jt is not None else None
    notes["C_R"] = CLOSED_FORM if C_R is not None else NOT_AVAILABLE

    C_A, notes["C_A"] = asymptotic_C_A(family, J.entries, None if Jt is None else Jt.entries, G, fp.theta)

    if family.is_qubit:
        C = qubit_attainable_C(J.entries, G).value
        notes["C"] = CLOSED_FORM
    else:
        C = C_R
        notes["C"] = PAPER_CLAIM if C is not None else NOT_AVAILABLE
    if fp.tail_mass:
        notes["tail_mass"] = fp.tail_mass

    return BoundReport(
        family=family.spec(),
        theta=list(fp.theta),
        G=G,
        J=J,
        Jt=Jt,
        C=C,
        C_A=C_A,
        C_R=C_R,
        ordering_ok=check_ordering(C, C_A, C_R),
        notes=notes,
    )


# ---------------------------------------------------------------------------
# covariance frontiers


@dataclass
class FrontierPoint:
    kind: str
    V: np.ndarray
    coords: tuple | None = None
    x: float | None = None
    W: np.ndarray | None = None

    def to_dict(self):
        out = {"kind": self.kind, "V": np.asarray(self.V).tolist()}
        if self.coords is not None:
            out["y"], out["z"] = (float(c) for c in self.coords)
            out["x"] = self.x
        if self.W is not None:
            out["W"] = np.asarray(self.W).tolist()
        return out


def _check_radius(r):
    if not 0 < r <= 1:
        raise ParameterError(f"radius must lie in (0, 1], got {r}")


def _frontier_offset(kind, r):
    return 1.0 if kind == RFIXED_SINGLE else r * r


def frontier_x(kind, r, y, z):
    c = _frontier_offset(kind, r)
    return (1 + np.sqrt(r**4 * (y * y + z * z) + c)) / r**2


def frontier_point(kind, r=None, y=0.0, z=0.0, W=None, J=None):
    """One point of a covariance frontier.

    ``r-fixed-single`` / ``r-fixed-asymptotic`` give ``[[x+y, z], [z, x-y]]``;
    ``full-asymptotic`` borders that block with the radial entry ``1 - r^2``;
    ``full-single-w`` gives ``J^-1/2 inv(W) J^-1/2`` for ``tr W = 1``.
    """
    if kind == FULL_SINGLE_W:
        if W is None or J is None:
            raise ParameterError("full-single-w frontier needs W and J")
        W = np.asarray(W, dtype=float)
        if np.max(np.abs(W - W.T)) > 1e-12 or np.linalg.eigvalsh(W).min() <= 0:
            raise ParameterError("W must be symmetric positive definite")
        if abs(np.trace(W) - 1) > 1e-10:
            raise ParameterError(f"W must have unit trace, got {np.trace(W)}")
        j_isqrt = mat_func(np.asarray(J, dtype=float), "inv_sqrt").real
        v = j_isqrt @ np.linalg.inv(W) @ j_isqrt
        return FrontierPoint(kind, 0.5 * (v + v.T), W=W)
    if kind not in FRONTIER_KINDS:
        raise ParameterError(f"unknown frontier kind {kind!r}")
    _check_radius(r)
    x = float(frontier_x(kind, r, y, z))
    block = np.array([[x + y, z], [z, x - y]])
    if kind == FULL_ASYMPTOTIC:
        v = np.zeros((3, 3))
        v[0, 0] = 1 - r * r
        v[1:, 1:] = block
    else:
        v = block
    return FrontierPoint(kind, v, coords=(float(y), float(z)), x=x)


def _newton_frontier(kind, r, g1, g2, g3, max_iter=200):
    c = _frontier_offset(kind, r)
    r2, r4 = r * r, r**4
    lin = np.array([2 * g2, 2 * g3])

    def f(p):
        return 2 * g1 * (1 + np.sqrt(r4 * (p @ p) + c)) / r2 + lin @ p

    p = np.zeros(2)
    trace = []
    for _ in range(max_iter):
        s = np.sqrt(r4 * (p @ p) + c)
        grad = 2 * g1 * r2 * p / s + lin
        hess = 2 * g1 * r2 * (np.eye(2) / s - r4 * np.outer(p, p) / s**3)
        step = -np.linalg.solve(hess, grad)
        decrement = float(-grad @ step)
        f0 = f(p)
        trace.append(decrement)
        if decrement <= 1e-18 * max(1.0, abs(f0)):
            return f0, p
        t = 1.0
        while f(p + t * step) > f0 - 1e-4 * t * decrement:
            t *= 0.5
            if t < 1e-12:
                # no representable descent left
                if decrement <= 1e-14 * max(1.0, abs(f0)):
                    return f0, p
                raise ConvergenceError("frontier line search stalled", trace=trace)
        p = p + t * step
    raise ConvergenceError("frontier minimization did not converge", trace=trace)


def frontier_min(kind, G, r=None, J=None):
    """Minimum of ``tr(G V)`` over a frontier and the minimizing point."""
    G = np.asarray(G, dtype=float)
    if np.linalg.eigvalsh(G).min() <= 0:
        raise ParameterError("frontier minimization needs a positive definite G")
    if kind == FULL_SINGLE_W:
        bound = qubit_attainable_C(J, G)
        return bound.value, frontier_point(kind, W=bound.W, J=J)
    if kind == FULL_ASYMPTOTIC:
        radial, block = G[0, 0] * (1 - r * r), G[1:, 1:]
    else:
        radial, block = 0.0, G
    _check_radius(r)
    value, p = _newton_frontier(kind, r, *g_coords(block))
    return float(value + radial), frontier_point(kind, r=r, y=p[0], z=p[1])
