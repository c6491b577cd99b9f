import numpy as np
import pytest

from qcrb import families as F
from qcrb import infogeo, povmopt
from qcrb.errors import (
    DegenerateOutcomeError,
    HermiticityError,
    SingularStateError,
    SupportMismatchError,
)

from conftest import HALF_PI, random_qubit_point

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def paper_point(r0):
    return F.eval_derivs(F.StateFamily(F.QUBIT_R_FIXED, r0=r0), [HALF_PI, 0])


def test_sld_maximally_mixed():
    c = 0.3
    d = c * SX
    np.testing.assert_allclose(infogeo.solve_sld(0.5 * np.eye(2), d), 2 * d)


@pytest.mark.parametrize("r0", [0.3, 0.5, 0.9, 1.0])
def test_sld_paper_values(r0):
    fp = paper_point(r0)
    L_theta, L_phi = infogeo.slds(fp)
    np.testing.assert_allclose(L_theta, r0 * np.diag([-1, 1]), atol=1e-12)
    np.testing.assert_allclose(L_phi, r0 * np.array([[0, 1j], [-1j, 0]]), atol=1e-12)


def test_sld_rejects_non_hermitian():
    with pytest.raises(HermiticityError):
        infogeo.solve_sld(0.5 * np.eye(2), np.array([[0, 1], [0, 0]]))


def test_sld_support_mismatch_at_pure_radial_derivative():
    fp = F.eval_derivs(F.StateFamily(F.QUBIT_FULL), [1.0, 0.7, 0.2])
    with pytest.raises(SupportMismatchError):
        infogeo.slds(fp)


def test_lyapunov_and_rld_residuals(rng):
    kinds = [
        F.StateFamily(F.QUBIT_FULL),
        F.StateFamily(F.QUBIT_R_FIXED, r0=0.4),
        F.StateFamily(F.QUBIT_R_FIXED, r0=0.95),
        F.StateFamily(F.QUBIT_PHI_ZERO),
    ]
    for i in range(100):
        fam = kinds[i % len(kinds)]
        fp = F.eval_derivs(fam, random_qubit_point(rng, fam.kind))
        if i % 5 == 0:
            fp = F.extend_iid(fp, 2)
        for d, L, Lt in zip(fp.derivs, infogeo.slds(fp), infogeo.rlds(fp)):
            assert np.max(np.abs(L - L.conj().T)) < 1e-12
            assert np.max(np.abs(0.5 * (L @ fp.rho + fp.rho @ L) - d)) <= 1e-9
            assert np.max(np.abs(Lt @ fp.rho - d)) <= 1e-9


def test_lyapunov_on_thermal_support():
    fp = F.eval_derivs(F.StateFamily(F.DISPLACED_THERMAL, N=0.5, fock_dim=30), [0.2, 0.1])
    w, u = np.linalg.eigh(fp.rho)
    keep = u[:, w > 1e-10 * w.max()]
    for d, L in zip(fp.derivs, infogeo.slds(fp)):
        res = 0.5 * (L @ fp.rho + fp.rho @ L) - d
        assert np.max(np.abs(keep.conj().T @ res @ keep)) <= 1e-9


def test_rld_examples():
    D = 0.2 * SX
    np.testing.assert_allclose(infogeo.solve_rld(0.5 * np.eye(2), D), 2 * D)
    Lt = infogeo.solve_rld(np.diag([0.75, 0.25]), np.diag([0.25, -0.25]))
    np.testing.assert_allclose(Lt, np.diag([1 / 3, -1]), atol=1e-15)
    with pytest.raises(SingularStateError):
        infogeo.solve_rld(np.diag([1.0, 0.0]), 0.5 * SZ)


def test_sld_fisher_paper_point():
    r0 = 0.5
    fp = paper_point(r0)
    J = infogeo.sld_fisher(fp.rho, infogeo.slds(fp))
    np.testing.assert_allclose(J.entries, r0**2 * np.eye(2), atol=1e-15)
    assert J.kind == infogeo.SLD


def test_sld_fisher_single_parameter():
    D = 0.5 * SX
    J = infogeo.sld_fisher(0.5 * np.eye(2), [2 * D])
    assert J.entries[0, 0] == pytest.approx(1)


def test_rld_equals_sld_when_commuting():
    rho = np.diag([0.7, 0.3]).astype(complex)
    d = np.diag([0.2, -0.2]).astype(complex)
    J = infogeo.sld_fisher(rho, [infogeo.solve_sld(rho, d)])
    Jt = infogeo.rld_fisher(rho, [infogeo.solve_rld(rho, d)])
    assert Jt.entries[0, 0] == pytest.approx(J.entries[0, 0])


def test_rld_fisher_pauli_cross_terms():
    # tr(sx sy rho) = i tr(sz rho): zero at the center, i r along z
    Jt = infogeo.rld_fisher(0.5 * np.eye(2), [SX, SY])
    assert abs(Jt.entries[0, 1]) < 1e-15
    r = 0.4
    Jt = infogeo.rld_fisher(0.5 * (np.eye(2) + r * SZ), [SX, SY])
    assert Jt.entries[0, 1] == pytest.approx(1j * r)
    assert Jt.entries[1, 0] == pytest.approx(-1j * r)


def test_rld_fisher_hermitian(rng):
    fam = F.StateFamily(F.QUBIT_FULL)
    for _ in range(20):
        fp = F.eval_derivs(fam, random_qubit_point(rng, F.QUBIT_FULL))
        Jt = infogeo.rld_fisher_at(fp).entries
        assert np.max(np.abs(Jt - Jt.conj().T)) <= 1e-12
        assert np.linalg.eigvalsh(Jt).min() > 0


def test_classical_fisher_sz_projectors():
    r0 = 0.5
    fp = paper_point(r0)
    fp_theta = F.FamilyAtPoint(fp.rho, fp.derivs[:1])
    povm = povmopt.povm_from_vectors(np.eye(2))
    Jm = infogeo.classical_fisher(povm, fp_theta)
    assert Jm.entries[0, 0] == pytest.approx(r0**2, abs=1e-14)


def test_classical_fisher_trivial_povm():
    fp = paper_point(0.5)
    Jm = infogeo.classical_fisher(povmopt.Povm(np.eye(2)[None]), fp)
    np.testing.assert_allclose(Jm.entries, 0, atol=1e-16)


def test_classical_fisher_degenerate_outcome():
    fp = F.eval_derivs(F.StateFamily(F.QUBIT_FULL), [1.0, 0.0, 0.0])
    # outcome |1><1| never occurs yet the radial derivative moves weight onto it
    with pytest.raises(DegenerateOutcomeError):
        infogeo.classical_fisher(povmopt.povm_from_vectors(np.eye(2)), fp)


def test_classical_fisher_bounded_by_sld(rng):
    fam = F.StateFamily(F.QUBIT_FULL)
    for i in range(200):
        fp = F.eval_derivs(fam, random_qubit_point(rng, F.QUBIT_FULL))
        povm = povmopt.random_povm(2, 2 + i % 5, seed=rng)
        Jm = infogeo.classical_fisher(povm, fp).entries
        J = infogeo.sld_fisher_at(fp).entries
        assert np.allclose(Jm, Jm.T)
        assert np.linalg.eigvalsh(J - Jm).min() >= -1e-9


def test_reparameterization_scales_rows_and_columns():
    fam = F.StateFamily(F.QUBIT_R_FIXED, r0=0.6)
    fp = F.eval_derivs(fam, [1.1, 0.4])
    J = infogeo.sld_fisher_at(fp).entries
    c = 2.5
    scaled = F.FamilyAtPoint(fp.rho, [fp.derivs[0], c * fp.derivs[1]])
    Js = infogeo.sld_fisher_at(scaled).entries
    np.testing.assert_allclose(Js, np.diag([1, c]) @ J @ np.diag([1, c]), rtol=1e-12, atol=1e-14)
    # the fixed-radius family is the angular block of the full family
    full = F.eval_derivs(F.StateFamily(F.QUBIT_FULL), [0.6, 1.1, 0.4])
    Jf = infogeo.sld_fisher_at(full).entries
    np.testing.assert_allclose(Jf[1:, 1:], J, atol=1e-14)


def test_rfixed_fisher_in_bloch_frame():
    # J = r^2 diag(1, sin^2 theta) on the sphere of radius r
    r0, th = 0.6, 1.1
    J = infogeo.sld_fisher_at(F.eval_derivs(F.StateFamily(F.QUBIT_R_FIXED, r0=r0), [th, 0.4])).entries
    np.testing.assert_allclose(J, r0**2 * np.diag([1, np.sin(th) ** 2]), atol=1e-14)


def test_thermal_fisher_matrices():
    fp = F.eval_derivs(F.StateFamily(F.DISPLACED_THERMAL, N=0.5, fock_dim=40), [0.0, 0.0])
    J = infogeo.sld_fisher_at(fp).entries
    Jt = infogeo.rld_fisher_at(fp).entries
    assert np.max(np.abs(J - J.T)) < 1e-12
    assert np.max(np.abs(Jt - Jt.conj().T)) < 1e-12
    # Gaussian displacement model: SLD 4/(2N+1) per quadrature, RLD inverse N+1 in trace
    np.testing.assert_allclose(J, 4 / 2.0 * np.eye(2), atol=1e-6)
    assert np.trace(np.linalg.inv(Jt)).real == pytest.approx(1.0, abs=1e-6)


def test_thermal_rld_needs_support_restriction():
    fp = F.eval_derivs(F.StateFamily(F.DISPLACED_THERMAL, N=0.5, fock_dim=40), [0.0, 0.0])
    with pytest.raises(SingularStateError):
        infogeo.rlds(fp)
    small = infogeo.restrict_to_support(fp)
    assert small.dim < fp.dim
    assert small.extra["dropped_mass"] < 1e-9


def test_fisher_cache_by_value():
    fam = F.StateFamily(F.QUBIT_R_FIXED, r0=0.5)
    a = infogeo.fisher_for(fam, [HALF_PI, 0.0])
    b = infogeo.fisher_for(F.StateFamily(F.QUBIT_R_FIXED, r0=0.5), np.array([HALF_PI, 0.0]))
    assert a is b
    c = infogeo.fisher_for(fam, [HALF_PI, 0.0], copies=2)
    np.testing.assert_allclose(c.entries, 2 * a.entries, atol=1e-14)
