import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trefftz_poly.material import PLANE_STRAIN, PLANE_STRESS, Material, kolosov_constants
from trefftz_poly.trefftz import (
    TrefftzModeSet,
    default_ordering,
    eval_modes,
    traction_operator,
    verify_mode_set,
)


class KappaInS3(TrefftzModeSet):
    """Negative control: S_3k built with the Kolosov constant instead of k."""

    def _complex_parts(self, z):
        Z, R, S = super()._complex_parts(z)
        _, kappa = kolosov_constants(self.material)
        for j, (J, k) in enumerate(self.ordering):
            if J == 3:
                S[:, j] = 1j * kappa * z ** (k - 1)
        return Z, R, S


def test_kolosov_examples():
    for regime in (PLANE_STRESS, PLANE_STRAIN):
        G, k = kolosov_constants(Material(1.0, 0.0, regime))
        assert G == 0.5 and k == 3.0
    G, k = kolosov_constants(Material(3e7, 0.25, PLANE_STRAIN))
    assert G == pytest.approx(1.2e7, rel=1e-15) and k == pytest.approx(2.0, rel=1e-15)
    _, k = kolosov_constants(Material(1.0, 0.3, PLANE_STRESS))
    assert k == pytest.approx(2.7 / 1.3, rel=1e-15)


def test_material_rejects_bad_values():
    with pytest.raises(ValueError):
        Material(0.0, 0.3)
    with pytest.raises(ValueError):
        Material(1.0, 0.5)
    with pytest.raises(ValueError):
        Material(1.0, 0.3, "axisymmetric")


def test_constitutive_matrix_spd():
    for regime in (PLANE_STRESS, PLANE_STRAIN):
        D = Material(2.0, 0.35, regime).D
        np.testing.assert_allclose(D, D.T)
        assert np.linalg.eigvalsh(D).min() > 0


def test_default_ordering_examples():
    assert default_ordering(1) == [(2, 1)]
    assert default_ordering(3) == [(2, 1), (3, 1), (4, 1)]
    assert default_ordering(7) == [(2, 1), (3, 1), (4, 1), (1, 2), (2, 2), (3, 2), (4, 2)]
    assert (1, 1) not in default_ordering(40)


def test_mode_set_rejects_bad_input(steel_like):
    with pytest.raises(ValueError):
        TrefftzModeSet(steel_like, m=0)
    with pytest.raises(ValueError):
        TrefftzModeSet(steel_like, ordering=[(2, 0)])
    with pytest.raises(ValueError):
        TrefftzModeSet(steel_like, ordering=[(2, 1), (2, 1)])
    with pytest.raises(ValueError):
        TrefftzModeSet(steel_like, ordering=[])


def test_displacement_vanishes_at_origin(steel_like):
    ms = TrefftzModeSet(steel_like, m=15)
    ev = eval_modes(ms, (0.0, 0.0))
    np.testing.assert_array_equal(ev.displacement, 0.0)


def test_mode_41_constant_stress(steel_like):
    ms = TrefftzModeSet(steel_like, ordering=[(4, 1)])
    rng = np.random.default_rng(0)
    for p in rng.normal(size=(10, 2)):
        ev = eval_modes(ms, p, (1.0, 0.0))
        np.testing.assert_allclose(ev.stress[:, 0], [-1, 1, 0], atol=1e-15)
        np.testing.assert_allclose(ev.traction[:, 0], [-1, 0], atol=1e-15)


def test_mode_21_displacement_hand_value():
    # kappa = 2, G = 0.5: plane strain with nu = 0.25, E = 1.25
    mat = Material(1.25, 0.25, PLANE_STRAIN)
    G, k = kolosov_constants(mat)
    assert G == pytest.approx(0.5) and k == pytest.approx(2.0)
    ms = TrefftzModeSet(mat, ordering=[(2, 1)])
    np.testing.assert_allclose(eval_modes(ms, (1.0, 0.0)).displacement[:, 0], [1.0, 0.0], atol=1e-15)


def test_mode_31_pure_shear_stress():
    # psi = i z gives sigma_xy = 1 independent of kappa
    ms = TrefftzModeSet(Material(1.25, 0.25, PLANE_STRAIN), ordering=[(3, 1)])
    np.testing.assert_allclose(eval_modes(ms, (0.3, -0.7)).stress[:, 0], [0, 0, 1], atol=1e-15)


def test_stress_divided_by_scale(steel_like):
    a = TrefftzModeSet(steel_like, m=11, origin=(1.0, 2.0), scale=1.0)
    b = TrefftzModeSet(steel_like, m=11, origin=(1.0, 2.0), scale=2.5)
    # same local point
    pa = np.array([[1.3, 2.2]])
    pb = np.array([1.0, 2.0]) + 2.5 * (pa - [1.0, 2.0])
    ea, eb = a.evaluate(pa), b.evaluate(pb)
    np.testing.assert_allclose(eb.displacement, ea.displacement, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(eb.stress, ea.stress / 2.5, rtol=1e-13, atol=1e-15)


def test_excluded_rigid_mode_has_zero_stress(steel_like):
    ms = TrefftzModeSet(steel_like, ordering=[(1, 1)])
    pts = np.random.default_rng(1).normal(size=(100, 2))
    ev = ms.evaluate(pts)
    np.testing.assert_array_equal(ev.stress, 0.0)
    assert np.abs(ev.displacement).max() > 0


def test_linear_completeness(steel_like):
    ms = TrefftzModeSet(steel_like, m=3)
    T = ms.evaluate((0.2, 0.1)).stress
    assert abs(np.linalg.det(T)) > 1e-3


@settings(max_examples=40, deadline=None)
@given(
    x=st.floats(-1, 1), y=st.floats(-1, 1), ang=st.floats(0, 2 * np.pi),
    nu=st.floats(0, 0.49),
)
def test_traction_identity(x, y, ang, nu):
    ms = TrefftzModeSet(Material(1.0, nu), m=19)
    n = np.array([np.cos(ang), np.sin(ang)])
    ev = ms.evaluate((x, y), n)
    np.testing.assert_allclose(ev.traction, traction_operator(n) @ ev.stress, atol=1e-13)


@pytest.mark.parametrize("regime", [PLANE_STRESS, PLANE_STRAIN])
@pytest.mark.parametrize("nu", [0.0, 0.25, 0.3, 0.49])
def test_verify_mode_set_passes(nu, regime):
    ms = TrefftzModeSet(Material(1.0, nu, regime), m=23, origin=(0.4, -1.0), scale=0.8)
    assert ms.k_max == 6
    rep = verify_mode_set(ms)
    assert rep.passed, rep.table()


def test_negative_control_fails_consistency():
    # kappa = 2.077 here; with kappa = 2 the k = 2 mode would coincide by accident
    ms = KappaInS3(Material(1.0, 0.3, PLANE_STRESS), m=23)
    rep = verify_mode_set(ms)
    failed = {(c.J, c.k) for c in rep.failures}
    assert failed == {(3, k) for k in range(1, 7)}
    assert all(c.equilibrium < 1e-5 for c in rep.failures)  # equilibrium alone cannot see it
    assert all(c.consistency > 1e-3 for c in rep.failures)


def test_report_table_lists_modes(steel_like):
    rep = verify_mode_set(TrefftzModeSet(steel_like, m=3), sample_points=5)
    lines = rep.table().splitlines()
    assert len(lines) == 4 and all("pass" in ln for ln in lines[1:])
