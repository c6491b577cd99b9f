"""Brute-force search over finite-outcome POVMs.

For a fixed POVM the best locally unbiased estimator is explicit: the
minimum of ``tr(G V)`` equals ``tr(G inv(J_M))`` with ``J_M`` the classical
Fisher matrix of the outcome distribution. The outer search perturbs the
rank-one generating vectors of the POVM and keeps improvements.
"""

from dataclasses import dataclass, field

import numpy as np

from . import families, infogeo
from .errors import InfeasiblePovmError, ParameterError, SearchFailure, SingularMatrixError
from .matcore import hermitize, mat_func

POVM_PSD_TOL = 1e-10
POVM_SUM_TOL = 1e-9
MAX_QUBITS = 6
SCALE_START = 0.3
SCALE_DECAY = 0.9


@dataclass(eq=False)
class Povm:
    elements: np.ndarray

    def __post_init__(self):
        self.elements = np.asarray(self.elements, dtype=complex)
        if self.elements.ndim != 3 or self.elements.shape[1] != self.elements.shape[2]:
            raise ParameterError(f"POVM elements must be stacked square matrices, got {self.elements.shape}")

    @property
    def dim(self):
        return self.elements.shape[1]

    def __len__(self):
        return self.elements.shape[0]

    def validate(self):
        total = self.elements.sum(axis=0)
        dev = np.max(np.abs(total - np.eye(self.dim)))
        if dev > POVM_SUM_TOL:
            raise ParameterError(f"POVM elements sum to identity only within {dev:.3e}")
        for k, m in enumerate(self.elements):
            if np.max(np.abs(m - m.conj().T)) > 1e-12:
                raise ParameterError(f"POVM element {k} is not Hermitian")
            low = np.linalg.eigvalsh(hermitize(m)).min()
            if low < -POVM_PSD_TOL:
                raise ParameterError(f"POVM element {k} has eigenvalue {low:.3e}")
        return self

    def tensor(self, other):
        """Product measurement with every pair of outcomes."""
        e = np.einsum("aij,bkl->abikjl", self.elements, other.elements)
        m, d = len(self) * len(other), self.dim * other.dim
        return Povm(e.reshape(m, d, d))

    def to_dict(self):
        return {
            "real": self.elements.real.tolist(),
            "imag": self.elements.imag.tolist(),
        }


def povm_from_vectors(vectors):
    """Rank-one POVM ``S^-1/2 v v^dag S^-1/2`` with ``S = sum v v^dag``."""
    v = np.asarray(vectors, dtype=complex)
    s = v.T @ v.conj()
    root = mat_func(s, "inv_sqrt")
    w = v @ root.T
    return Povm(np.einsum("ki,kj->kij", w, w.conj()))


def _random_vectors(rng, m, dim):
    return rng.standard_normal((m, dim)) + 1j * rng.standard_normal((m, dim))


def random_povm(dim, m, seed=None):
    """Random rank-one POVM with ``m`` outcomes on a ``dim``-dimensional space."""
    if m < dim:
        raise ParameterError(f"need at least {dim} outcomes to span dimension {dim}, got {m}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(10):
        try:
            return povm_from_vectors(_random_vectors(rng, m, dim))
        except SingularMatrixError:
            continue
    raise SearchFailure("could not draw a non-degenerate POVM in 10 attempts")


def heterodyne_povm(N, fock_dim, sigmas=6.0, spacing=0.25, center=0j):
    """Discretized coherent-state measurement ``(1/pi)|a><a| dx dy`` on a
    square grid, plus one remainder element completing the identity.

    The grid covers ``sigmas`` standard deviations of the heterodyne outcome
    distribution of a thermal state with mean photon number ``N``. If the grid
    sum overshoots the identity anywhere, grid elements are scaled down so the
    remainder stays positive.
    """
    half = sigmas * np.sqrt((N + 1) / 2)
    n = int(np.ceil(half / spacing))
    axis = spacing * np.arange(-n, n + 1)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    alphas = center + (xx + 1j * yy).ravel()
    vecs = families.coherent_vectors(alphas, fock_dim) * np.sqrt(spacing**2 / np.pi)
    elements = np.einsum("ki,kj->kij", vecs, vecs.conj())
    total = vecs.T @ vecs.conj()
    top = np.linalg.eigvalsh(hermitize(total)).max()
    if top > 1:
        elements /= top
        total /= top
    rest = hermitize(np.eye(fock_dim) - total)
    povm = Povm(np.concatenate([elements, rest[None]], axis=0))
    return povm


@dataclass
class LocallyUnbiasedEstimator:
    povm: Povm
    values: np.ndarray
    theta0: np.ndarray

    def mean(self, fp):
        p, _ = infogeo.outcome_statistics(self.povm, fp)
        return self.values.T @ p

    def jacobian(self, fp):
        # [i, j] = sum_k values[k, i] * tr(M_k d_j rho)
        _, dp = infogeo.outcome_statistics(self.povm, fp)
        return self.values.T @ dp.T

    def covariance(self, fp):
        p, _ = infogeo.outcome_statistics(self.povm, fp)
        dev = self.values - self.theta0
        return (dev * p[:, None]).T @ dev


def _fisher_inverse(povm, fp):
    jm = infogeo.classical_fisher(povm, fp).entries
    w = np.linalg.eigvalsh(jm)
    if w.size == 0 or w.min() <= 1e-10 * max(w.max(), 1e-300):
        raise InfeasiblePovmError("classical Fisher matrix of the POVM is singular")
    return np.linalg.inv(jm)


def inner_value(povm, fp, G):
    """Smallest ``tr(G V)`` over locally unbiased estimators built on ``povm``."""
    return float(np.trace(np.asarray(G, dtype=float) @ _fisher_inverse(povm, fp)))


def recover_estimator(povm, fp, G, theta0):
    """Estimator values ``theta0 + inv(J_M) s_k`` attaining :func:`inner_value`."""
    jm_inv = _fisher_inverse(povm, fp)
    p, dp = infogeo.outcome_statistics(povm, fp)
    theta0 = np.asarray(theta0, dtype=float)
    scores = np.zeros((len(p), len(theta0)))
    live = p >= infogeo.PROB_FLOOR
    scores[live] = (dp[:, live] / p[live]).T
    return LocallyUnbiasedEstimator(povm, theta0 + scores @ jm_inv, theta0)


@dataclass
class SearchResult:
    best_value: float
    best_povm: Povm
    estimator: LocallyUnbiasedEstimator
    restarts_used: int
    iterations: int
    seed: int
    copies: int
    outcomes: int
    restart_values: list = field(default_factory=list)
    schedule: str = f"{SCALE_START}*{SCALE_DECAY}^sweep"

    def to_dict(self):
        return {
            "best_value": self.best_value,
            "restarts_used": self.restarts_used,
            "iterations": self.iterations,
            "seed": self.seed,
            "copies": self.copies,
            "outcomes": self.outcomes,
            "restart_values": list(self.restart_values),
            "schedule": self.schedule,
            "estimator_values": self.estimator.values.tolist(),
            "best_povm": self.best_povm.to_dict(),
        }


def default_outcomes(param_dim, dim, copies):
    return 2 * param_dim + 2 if copies == 1 else 2 * dim + 2


def _objective(vectors, fp, G, copies):
    try:
        return copies * inner_value(povm_from_vectors(vectors), fp, G)
    except (InfeasiblePovmError, SingularMatrixError):
        return np.inf


def refine(vectors, fp, G, copies, iters, rng):
    """Coordinate-wise random refinement of the generating vectors.

    Sweep ``s`` perturbs each vector in turn by complex Gaussian noise of
    relative size ``0.3 * 0.9**s`` and keeps strict improvements only, so the
    returned history is non-increasing.
    """
    value = _objective(vectors, fp, G, copies)
    history = [value]
    m, dim = vectors.shape
    for sweep in range(iters):
        scale = SCALE_START * SCALE_DECAY**sweep
        for k in range(m):
            trial = vectors.copy()
            norm = np.linalg.norm(trial[k]) or 1.0
            trial[k] = trial[k] + scale * norm * (
                rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            ) / np.sqrt(2 * dim)
            new = _objective(trial, fp, G, copies)
            if new < value:
                vectors, value = trial, new
        history.append(value)
    return vectors, value, history


def optimize(fp, G, n_copies=1, m=None, restarts=16, iters=120, seed=0):
    """Search POVMs on ``n_copies`` i.i.d. copies minimizing ``n tr(G V)``.

    Every restart owns the generator seeded by ``(seed, restart)`` so results
    do not depend on evaluation order; ties go to the lowest restart index.
    """
    n_copies = int(n_copies)
    if n_copies < 1 or restarts < 1 or iters < 0:
        raise ParameterError("copies and restarts must be positive, iters non-negative")
    if n_copies * np.log2(fp.dim) > MAX_QUBITS + 1e-9:
        raise ParameterError(
            f"{n_copies} copies of dimension {fp.dim} exceed the {MAX_QUBITS}-qubit search cap"
        )
    G = np.asarray(G, dtype=float)
    fpn = families.extend_iid(fp, n_copies)
    if m is None:
        m = default_outcomes(fp.param_dim, fpn.dim, n_copies)
    if m < fpn.dim:
        raise ParameterError(f"need at least {fpn.dim} outcomes, got {m}")

    best = (np.inf, None, None)
    values = []
    for r in range(restarts):
        rng = np.random.default_rng([int(seed), r])
        vectors = _random_vectors(rng, m, fpn.dim)
        vectors, value, _ = refine(vectors, fpn, G, n_copies, iters, rng)
        values.append(float(value))
        if value < best[0]:
            best = (value, vectors, r)
    if not np.isfinite(best[0]):
        raise SearchFailure(f"all {restarts} restarts produced infeasible POVMs")

    povm = povm_from_vectors(best[1])
    theta0 = fp.theta if fp.theta is not None else np.zeros(fp.param_dim)
    estimator = recover_estimator(povm, fpn, G, theta0)
    return SearchResult(
        best_value=float(best[0]),
        best_povm=povm,
        estimator=estimator,
        restarts_used=restarts,
        iterations=iters,
        seed=int(seed),
        copies=n_copies,
        outcomes=int(m),
        restart_values=values,
    )
