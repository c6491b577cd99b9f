"""Dense complex linear algebra for small Hermitian matrices."""

from functools import reduce
from typing import NamedTuple

import numpy as np

from .errors import HermiticityError, ParameterError, SingularMatrixError

HERMITIAN_TOL = 1e-12
PSD_CLAMP = 1e-12
# relative to the largest |eigenvalue|
SINGULAR_FLOOR = 1e-10


class EigDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def as_matrix(a):
    """Return ``a`` as a square complex array with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError("matrix has non-finite entries")
    return m


def check_hermitian(a, tol=HERMITIAN_TOL):
    m = as_matrix(a)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise HermiticityError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return m


def hermitize(a):
    m = np.asarray(a, dtype=complex)
    return 0.5 * (m + m.conj().T)


def eig_hermitian(a, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = check_hermitian(a, tol)
    w, v = np.linalg.eigh(hermitize(m))
    return EigDecomposition(w, v)


def singular_floor(eigenvalues):
    scale = np.max(np.abs(eigenvalues)) if len(eigenvalues) else 0.0
    return SINGULAR_FLOOR * scale


def _psd_clamped(w):
    if np.any(w < -PSD_CLAMP):
        raise ParameterError(f"matrix is not PSD (eigenvalue {w.min():.3e})")
    return np.clip(w, 0.0, None)


def _invertible(w):
    floor = singular_floor(w)
    bad = w[w <= floor] if floor > 0 else w
    if len(bad) or not len(w):
        lam = float(bad[0]) if len(bad) else 0.0
        raise SingularMatrixError(
            f"matrix is singular: eigenvalue {lam:.3e} below floor {floor:.3e}",
            eigenvalue=lam,
        )
    return w


_FUNCS = {
    "sqrt": lambda w: np.sqrt(_psd_clamped(w)),
    "abs": np.abs,
    "inv": lambda w: 1.0 / _invertible(w),
    "inv_sqrt": lambda w: 1.0 / np.sqrt(_invertible(w)),
}


def mat_func(a, f):
    """Apply a scalar function to a Hermitian matrix through its eigenbasis.

    Parameters
    ----------
    a : array_like
        Hermitian matrix.
    f : {'sqrt', 'inv_sqrt', 'inv', 'abs'}
        ``sqrt`` requires PSD input; eigenvalues in ``[-1e-12, 0)`` are
        clamped to zero. ``inv`` and ``inv_sqrt`` refuse any eigenvalue at or
        below ``1e-10`` times the largest magnitude eigenvalue.

    Returns
    -------
    numpy.ndarray
        Hermitian result, exactly symmetrized.
    """
    try:
        func = _FUNCS[f]
    except KeyError:
        raise ParameterError(f"unknown matrix function {f!r}") from None
    w, u = eig_hermitian(a)
    return hermitize((u * func(w)) @ u.conj().T)


def kron(*mats):
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in mats])


def trace_abs(a):
    """Trace norm of a Hermitian matrix: the sum of absolute eigenvalues."""
    w, _ = eig_hermitian(a)
    return float(np.sum(np.abs(w)))


def is_psd(a, tol=1e-10):
    w = np.linalg.eigvalsh(hermitize(a))
    return bool(w.min() >= -tol) if len(w) else True


def max_abs(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0
