"""Logarithmic derivatives and Fisher information matrices."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import families
from .errors import DegenerateOutcomeError, SingularStateError, SupportMismatchError
from .matcore import check_hermitian, eig_hermitian, hermitize, singular_floor

SLD = "SLD"
RLD = "RLD"
CLASSICAL = "Classical"

PROB_FLOOR = 1e-12
SUPPORT_TOL = 1e-9
# drho weight tolerated on Fock levels that carry numerically zero population
TAIL_LEAK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    kind: str
    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @property
    def dim(self):
        return self.entries.shape[0]

    def inv(self):
        return np.linalg.inv(self.entries)

    def to_dict(self):
        e = np.asarray(self.entries)
        out = {"kind": self.kind, "real": e.real.tolist()}
        if self.kind == RLD:
            out["imag"] = e.imag.tolist()
        return out


def _support_split(rho):
    w, u = eig_hermitian(rho)
    return w, u, w > singular_floor(w)


def solve_sld(rho, drho):
    """Symmetric logarithmic derivative of ``drho`` at ``rho``.

    Solved in the eigenbasis of ``rho`` as ``2 D_jk / (l_j + l_k)``. On rank
    deficient states the kernel block is left at zero, which is the minimal
    norm solution, provided ``drho`` has no weight there.
    """
    drho = check_hermitian(drho, tol=1e-10)
    w, u, supp = _support_split(rho)
    d = u.conj().T @ drho @ u
    ker = ~supp
    if ker.any():
        leak = np.max(np.abs(d[np.ix_(ker, ker)]))
        if leak > SUPPORT_TOL:
            raise SupportMismatchError(
                f"derivative has weight {leak:.3e} outside the support of rho; SLD undefined"
            )
    denom = w[:, None] + w[None, :]
    mask = denom > singular_floor(w)
    ell = np.zeros_like(d)
    ell[mask] = 2 * d[mask] / denom[mask]
    return hermitize(u @ ell @ u.conj().T)


def solve_rld(rho, drho):
    """Right logarithmic derivative ``drho @ inv(rho)``; requires a faithful state."""
    drho = check_hermitian(drho, tol=1e-10)
    w, u = eig_hermitian(rho)
    if w[0] <= singular_floor(w):
        raise SingularStateError(
            f"RLD requires faithful state (smallest eigenvalue {w[0]:.3e})",
            eigenvalue=float(w[0]),
        )
    rho_inv = (u / w) @ u.conj().T
    return drho @ rho_inv


def sld_fisher(rho, slds):
    n = len(slds)
    j = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            j[a, b] = j[b, a] = np.real(np.trace(rho @ slds[a] @ slds[b]))
    return FisherMatrix(SLD, j)


def rld_fisher(rho, rlds):
    n = len(rlds)
    j = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            j[a, b] = np.trace(rlds[a].conj().T @ rlds[b] @ rho)
    return FisherMatrix(RLD, hermitize(j))


def outcome_statistics(povm, fp):
    """Outcome probabilities ``p_k`` and derivative table ``dp[i, k]``."""
    elements = np.asarray(getattr(povm, "elements", povm))
    # tr(M rho) = sum_ij M_ij rho_ji
    p = np.real(np.einsum("kij,ji->k", elements, fp.rho))
    dp = np.array([np.real(np.einsum("kij,ji->k", elements, d)) for d in fp.derivs])
    return p, dp


def classical_fisher(povm, fp):
    """Fisher matrix of the outcome distribution of ``povm`` on ``fp``."""
    p, dp = outcome_statistics(povm, fp)
    live = p >= PROB_FLOOR
    dead_score = np.abs(dp[:, ~live])
    if dead_score.size and dead_score.max() > 1e-9:
        raise DegenerateOutcomeError(
            "an outcome with vanishing probability has nonzero derivative"
        )
    s = dp[:, live]
    j = (s / p[live]) @ s.T
    return FisherMatrix(CLASSICAL, 0.5 * (j + j.T))


def slds(fp):
    return [solve_sld(fp.rho, d) for d in fp.derivs]


def rlds(fp):
    return [solve_rld(fp.rho, d) for d in fp.derivs]


def restrict_to_support(fp, leak_tol=TAIL_LEAK_TOL):
    """Compress ``fp`` onto the numerically nonzero eigenspace of rho.

    Meant for truncated Fock representations, whose highest levels carry
    populations far below the singular floor. Raises if the derivatives
    reach into the discarded space by more than ``leak_tol``.
    """
    w, u, supp = _support_split(fp.rho)
    if supp.all():
        return fp
    keep = u[:, supp]
    drop = u[:, ~supp]
    derivs = []
    for d in fp.derivs:
        leak = np.max(np.abs(drop.conj().T @ d @ u))
        if leak > leak_tol:
            raise SupportMismatchError(
                f"derivative weight {leak:.3e} on the discarded subspace"
            )
        derivs.append(hermitize(keep.conj().T @ d @ keep))
    return families.FamilyAtPoint(
        np.diag(w[supp]).astype(complex),
        derivs,
        fp.family,
        fp.theta,
        copies=fp.copies,
        tail_mass=fp.tail_mass,
        extra={"dropped_mass": float(np.sum(w[~supp]))},
    )


def sld_fisher_at(fp):
    return sld_fisher(fp.rho, slds(fp))


def rld_fisher_at(fp):
    if fp.family is not None and fp.family.kind == families.DISPLACED_THERMAL:
        fp = restrict_to_support(fp)
    return rld_fisher(fp.rho, rlds(fp))


@lru_cache(maxsize=1024)
def _cached(family, theta, copies, kind):
    fp = families.extend_iid(families.eval_derivs(family, theta), copies)
    return sld_fisher_at(fp) if kind == SLD else rld_fisher_at(fp)


def fisher_for(family, theta, kind=SLD, copies=1):
    """Cached Fisher matrix keyed by the value of (family, point, copies)."""
    key = tuple(float(x) for x in np.asarray(theta, dtype=float).ravel())
    return _cached(family, key, int(copies), kind)
