"""Parameterized state families and their n-copy extensions.

Qubit families use the Bloch form

    rho(r, theta, phi) = 1/2 [[1 + r cos(theta), r sin(theta) e^{i phi}],
                              [r sin(theta) e^{-i phi}, 1 - r cos(theta)]]

with analytic derivatives. The displaced thermal family lives in a truncated
Fock space, parameterized by the real and imaginary parts of the displacement.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError, TruncationError
from .matcore import hermitize, kron

QUBIT_FULL = "full"
QUBIT_R_FIXED = "r-fixed"
QUBIT_PHI_ZERO = "phi-zero"
DISPLACED_THERMAL = "thermal"

QUBIT_KINDS = (QUBIT_FULL, QUBIT_R_FIXED, QUBIT_PHI_ZERO)

TAIL_LIMIT = 1e-6
MAX_IID_DIM = 64
TWO_PI = 2 * np.pi
_ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class StateFamily:
    kind: str
    r0: float | None = None
    N: float | None = None
    fock_dim: int | None = None

    def __post_init__(self):
        if self.kind == QUBIT_R_FIXED:
            if self.r0 is None or not 0 < self.r0 <= 1:
                raise ParameterError(f"r0 must lie in (0, 1], got {self.r0}")
        elif self.kind == DISPLACED_THERMAL:
            if self.N is None or not self.N > 0:
                raise ParameterError(f"thermal photon number must be > 0, got {self.N}")
            if self.fock_dim is None or int(self.fock_dim) < 2:
                raise ParameterError(f"fock_dim must be >= 2, got {self.fock_dim}")
        elif self.kind not in QUBIT_KINDS:
            raise ParameterError(f"unknown family kind {self.kind!r}")

    @property
    def param_dim(self):
        return 3 if self.kind == QUBIT_FULL else 2

    @property
    def hilbert_dim(self):
        return int(self.fock_dim) if self.kind == DISPLACED_THERMAL else 2

    @property
    def param_names(self):
        return {
            QUBIT_FULL: ("r", "theta", "phi"),
            QUBIT_R_FIXED: ("theta", "phi"),
            QUBIT_PHI_ZERO: ("r", "theta"),
            DISPLACED_THERMAL: ("re", "im"),
        }[self.kind]

    @property
    def is_qubit(self):
        return self.kind in QUBIT_KINDS

    @classmethod
    def parse(cls, text):
        """Build a family from ``full``, ``r-fixed:<r0>``, ``phi-zero`` or
        ``thermal:<N>:<fock_dim>``."""
        parts = text.strip().split(":")
        head = parts[0]
        try:
            if head in (QUBIT_FULL, QUBIT_PHI_ZERO) and len(parts) == 1:
                return cls(head)
            if head == QUBIT_R_FIXED and len(parts) == 2:
                return cls(head, r0=float(parts[1]))
            if head == DISPLACED_THERMAL and len(parts) == 3:
                return cls(head, N=float(parts[1]), fock_dim=int(parts[2]))
        except ValueError:
            pass
        raise ParameterError(f"cannot parse family spec {text!r}")

    def spec(self):
        if self.kind == QUBIT_R_FIXED:
            return f"{self.kind}:{self.r0!r}"
        if self.kind == DISPLACED_THERMAL:
            return f"{self.kind}:{self.N!r}:{self.fock_dim}"
        return self.kind

    def bloch_coords(self, theta):
        """Map a parameter point to the full (r, theta, phi) coordinates."""
        t = self.check_point(theta)
        if self.kind == QUBIT_FULL:
            return tuple(t)
        if self.kind == QUBIT_R_FIXED:
            return (self.r0, t[0], t[1])
        if self.kind == QUBIT_PHI_ZERO:
            return (t[0], t[1], 0.0)
        raise ParameterError("not a qubit family")

    def check_point(self, theta):
        t = np.asarray(theta, dtype=float).ravel()
        if t.shape != (self.param_dim,):
            raise ParameterError(
                f"{self.kind} expects {self.param_dim} parameters, got {t.size}"
            )
        if not np.all(np.isfinite(t)):
            raise ParameterError("parameter point has non-finite entries")
        if self.kind == DISPLACED_THERMAL:
            return t
        names = self.param_names
        for name, value in zip(names, t):
            if name == "r" and not 0 <= value <= 1:
                raise ParameterError(f"r must lie in [0, 1], got {value}")
            if name in ("theta", "phi") and not -_ANGLE_SLACK <= value <= TWO_PI + _ANGLE_SLACK:
                raise ParameterError(f"{name} must lie in [0, 2pi], got {value}")
        return t


@dataclass
class FamilyAtPoint:
    rho: np.ndarray
    derivs: list
    family: StateFamily | None = None
    theta: np.ndarray | None = None
    copies: int = 1
    tail_mass: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.rho.shape[0]

    @property
    def param_dim(self):
        return len(self.derivs)


def bloch_state(r, theta, phi):
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    return 0.5 * np.array(
        [[1 + r * c, r * s * e], [r * s * np.conj(e), 1 - r * c]], dtype=complex
    )


def bloch_derivs(r, theta, phi):
    """Analytic derivatives with respect to (r, theta, phi)."""
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    d_r = 0.5 * np.array([[c, s * e], [s * np.conj(e), -c]], dtype=complex)
    d_theta = 0.5 * r * np.array([[-s, c * e], [c * np.conj(e), s]], dtype=complex)
    d_phi = 0.5 * r * s * np.array([[0, 1j * e], [-1j * np.conj(e), 0]], dtype=complex)
    return d_r, d_theta, d_phi


# ---------------------------------------------------------------------------
# truncated Fock space


def _pad_dim(fock_dim):
    return 2 * fock_dim + 20


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def displacement(alpha, dim):
    """Displacement operator on the first ``dim`` Fock levels.

    Exponentiates the truncated anti-Hermitian generator exactly through the
    eigendecomposition of ``i * (alpha a^dag - conj(alpha) a)``.
    """
    a = annihilation(dim)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    w, u = np.linalg.eigh(hermitize(1j * gen))
    return (u * np.exp(-1j * w)) @ u.conj().T


def thermal_weights(N, dim):
    k = np.arange(dim)
    return (N / (N + 1)) ** k / (N + 1)


def coherent_vectors(alphas, dim):
    """Rows are truncated coherent states |alpha> in the Fock basis."""
    alphas = np.asarray(alphas, dtype=complex).ravel()
    k = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(k, 1)))
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.abs(alphas)[:, None]
        logamp = -0.5 * mag**2 + k * np.log(np.where(mag > 0, mag, 1.0)) - 0.5 * log_fact
        amp = np.exp(logamp) * np.exp(1j * k * np.angle(alphas)[:, None])
    amp[np.abs(alphas) == 0, 1:] = 0.0
    return amp


def _thermal_state(family, t):
    dim = family.hilbert_dim
    big = _pad_dim(dim)
    rho0 = np.diag(thermal_weights(family.N, big)).astype(complex)
    alpha = complex(t[0], t[1])
    if alpha != 0:
        d = displacement(alpha, big)
        rho0 = d @ rho0 @ d.conj().T
    rho = hermitize(rho0[:dim, :dim])
    kept = float(np.real(np.trace(rho)))
    # summed directly so the value does not cancel against 1
    tail = float(np.sum(np.real(np.diag(rho0))[dim:])) + (family.N / (family.N + 1)) ** big
    if tail > TAIL_LIMIT:
        raise TruncationError(
            f"fock_dim={dim} discards probability {tail:.3e} (> {TAIL_LIMIT:g})"
        )
    return rho / kept, tail


def eval_state(family, theta):
    """Density operator of ``family`` at parameter point ``theta``."""
    if family.kind == DISPLACED_THERMAL:
        return _thermal_state(family, family.check_point(theta))[0]
    return bloch_state(*family.bloch_coords(theta))


def tail_mass(family, theta):
    if family.kind != DISPLACED_THERMAL:
        return 0.0
    return _thermal_state(family, family.check_point(theta))[1]


def _thermal_derivs(family, t, h=1e-3):
    # central differences refined by one Richardson step
    def central(i, step):
        e = np.zeros_like(t)
        e[i] = step
        plus = _thermal_state(family, t + e)[0]
        minus = _thermal_state(family, t - e)[0]
        return (plus - minus) / (2 * step)

    out = []
    for i in range(len(t)):
        coarse, fine = central(i, h), central(i, h / 2)
        d = hermitize((4 * fine - coarse) / 3)
        d -= np.trace(d) / d.shape[0] * np.eye(d.shape[0])
        out.append(d)
    return out


def eval_derivs(family, theta):
    """State and parameter derivatives at ``theta``."""
    t = family.check_point(theta)
    if family.kind == DISPLACED_THERMAL:
        rho, tail = _thermal_state(family, t)
        return FamilyAtPoint(rho, _thermal_derivs(family, t), family, t, tail_mass=tail)
    r, th, ph = family.bloch_coords(t)
    d_r, d_theta, d_phi = bloch_derivs(r, th, ph)
    derivs = {
        QUBIT_FULL: [d_r, d_theta, d_phi],
        QUBIT_R_FIXED: [d_theta, d_phi],
        QUBIT_PHI_ZERO: [d_r, d_theta],
    }[family.kind]
    return FamilyAtPoint(bloch_state(r, th, ph), derivs, family, t)


def extend_iid(fp, n):
    """n-fold tensor power of the state with product-rule derivatives."""
    n = int(n)
    if n < 1:
        raise ParameterError(f"copy count must be >= 1, got {n}")
    if fp.dim**n > MAX_IID_DIM:
        raise CapacityError(f"{n} copies of dimension {fp.dim} exceed {MAX_IID_DIM}")
    if n == 1:
        return fp
    rho_n = kron(*[fp.rho] * n)
    derivs = []
    for d in fp.derivs:
        total = np.zeros_like(rho_n)
        for slot in range(n):
            factors = [fp.rho] * n
            factors[slot] = d
            total += kron(*factors)
        derivs.append(total)
    return FamilyAtPoint(
        rho_n, derivs, fp.family, fp.theta, copies=fp.copies * n, tail_mass=fp.tail_mass
    )
