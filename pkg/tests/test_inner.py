import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esterle.inner import (
    DeltaGrid,
    GridParams,
    InnerEval,
    SingularMeasure,
    SupportProximityError,
    delta_n,
    delta_n_atomic_ray,
    measure_from_dict,
    snorm_lower_bound,
    theta_eval,
    unitary_sanity,
    verify_theorem,
    witness_points,
)
from esterle.majorant import RhoCurve, build_omega
from esterle.sequence import u_sequence
from esterle.thinsets import Atoms, SelfSimilarCantor

mp.mp.dps = 50


def ray_oracle(c, n):
    """Crossing of n log r and -c (1+r)/(1-r), bisected in 50 digits."""
    g = lambda r: n * mp.log(r) + c * (1 + r) / (1 - r)
    a, b = mp.mpf("1e-300"), 1 - mp.mpf("1e-40")
    for _ in range(600):
        m = (a + b) / 2
        if g(m) < 0:
            a = m
        else:
            b = m
    return n * mp.log((a + b) / 2)


def atom(c=1.0, angle=0.0):
    return InnerEval(SingularMeasure.atomic([(angle, c)]))


# -- pointwise values --------------------------------------------------------


@pytest.mark.parametrize("c", [0.3, 1.0, 4.0])
def test_theta_at_origin(c):
    assert theta_eval(atom(c), 0j)[0] == pytest.approx(-c, abs=1e-15)


@pytest.mark.parametrize("mode", ["reflect", "direct"])
def test_theta_on_ray(mode):
    ie = atom()
    assert ie.log_abs(0.5, mode) == pytest.approx(-3.0, abs=1e-14)
    assert ie.log_abs(2.0, mode) == pytest.approx(3.0, abs=1e-14)


def test_support_proximity():
    with pytest.raises(SupportProximityError, match="too close to singular support"):
        atom().log_abs(1.0 + 1e-14)
    with pytest.raises(ValueError):
        atom().log_abs(complex(math.inf, 0))


def test_polar_forms_match_pointwise():
    ie = InnerEval(SingularMeasure.atomic([(0.0, 1.0), (0.7, 0.4), (2.0, 0.2)]))
    t = np.array([1e-6, 1e-3, 0.2, 0.9])
    th = np.array([0.01, 0.69, 2.5, -1.0])
    lam_in = (1 - t) * np.exp(1j * th)
    lam_out = (1 + t) * np.exp(1j * th)
    np.testing.assert_allclose(ie.log_modulus_polar(t, th), ie.log_abs(lam_in), rtol=1e-9)
    np.testing.assert_allclose(ie.log_modulus_exterior(t, th), ie.log_abs(lam_out, "direct"), rtol=1e-9)


lam_strategy = st.builds(
    lambda r, a: r * complex(math.cos(a), math.sin(a)),
    st.floats(min_value=1e-8, max_value=0.999),
    st.floats(min_value=-math.pi, max_value=math.pi),
)


@settings(max_examples=300, deadline=None)
@given(lam_strategy)
def test_reflection_and_contractivity(lam):
    ie = InnerEval(SingularMeasure.atomic([(0.0, 1.0), (0.5, 0.25), (3.0, 2.0)]))
    try:
        inside = ie.log_abs(lam, "direct")
        outside = ie.log_abs(1 / np.conj(lam), "direct")
    except SupportProximityError:
        return
    assert inside < 0
    assert abs(inside + outside) <= 1e-10 * max(1.0, abs(inside))


def test_measure_json_round_trip():
    C = SelfSimilarCantor((0.0, 1.0), 1 / 3)
    m = SingularMeasure.cantor(C, 4)
    again = measure_from_dict(m.to_dict())
    assert again.angles == m.angles and again.weights == m.weights
    assert m.total_mass == pytest.approx(1.0, abs=1e-15)
    assert np.all(C.dist(np.array(m.angles)) <= 1e-14)


# -- delta_n -----------------------------------------------------------------


def test_ray_oracle_pin():
    assert delta_n_atomic_ray(1.0, 10) == pytest.approx(float(ray_oracle(1, 10)), abs=1e-12)
    assert delta_n_atomic_ray(1.0, 10) == pytest.approx(-4.50974724818757, abs=1e-12)
    assert math.exp(delta_n_atomic_ray(1.0, 10)) == pytest.approx(1.1e-2, rel=1e-2)
    assert delta_n_atomic_ray(1.0, 1) == pytest.approx(float(ray_oracle(1, 1)), abs=1e-12)


def test_ray_oracle_large_mass():
    vals = [delta_n_atomic_ray(c, 10) for c in (1.0, 10.0, 100.0)]
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_grid_delta_matches_ray(c):
    ie = atom(c)
    grid = DeltaGrid.build(ie)
    for n in (1, 5, 10, 50):
        rep = delta_n(ie, n, grid)
        assert abs(rep.log_delta - float(ray_oracle(c, n))) <= 1e-6
        assert abs(rep.log_delta - rep.log_delta_exterior) <= 1e-4
        assert rep.log_delta <= ie.log_theta0()


def test_delta_monotone_in_n():
    ie = InnerEval(SingularMeasure.atomic([(0.0, 1.0), (1.0, 0.5)]))
    grid = DeltaGrid.build(ie)
    assert delta_n(ie, 5, grid).log_delta >= delta_n(ie, 10, grid).log_delta


def test_coarse_grid_warns():
    ie = atom()
    rep = delta_n(ie, 400, GridParams(t_floor=0.2, n_radii=17, n_coarse=16))
    assert rep.warnings


def test_cantor_duality():
    ie = InnerEval(SingularMeasure.cantor(SelfSimilarCantor((0.0, 1.0), 1 / 3), 4))
    grid = DeltaGrid.build(ie, GridParams(n_coarse=256))
    for n in (3, 30):
        rep = delta_n(ie, n, grid)
        assert abs(rep.log_delta - rep.log_delta_exterior) <= 1e-4


# -- witnesses and verification ----------------------------------------------


@pytest.fixture(scope="module")
def atom_omega():
    return build_omega(RhoCurve(Atoms((0.0,))), 0.5, t_min=1e-8)


def test_interior_points_never_witness(atom_omega):
    ie = atom()
    for r in (0.1, 0.9, 0.999):
        assert ie.log_abs(r) <= 0 < math.log(atom_omega(1 - r))


def test_ray_witness_closed_form(atom_omega):
    ie = atom()
    for t in (1e-1, 1e-2, 1e-3):
        assert ie.log_abs(1 + t) == pytest.approx((2 + t) / t, rel=1e-12)
    w = witness_points(ie, atom_omega, [1e-3])[0]
    assert w.found
    assert w.log_theta >= 2 / 1e-3
    assert w.log_omega < 2000


def test_verify_theorem_atom(atom_omega):
    ie = atom()
    useq = u_sequence(atom_omega, 80)
    rep = verify_theorem(ie, useq, 80)
    assert rep.witnesses
    assert all(b <= a for a, b in zip(rep.running_min, rep.running_min[1:]))


def test_verify_theorem_reports_failure_diagnostics(atom_omega):
    ie = atom()
    useq = u_sequence(atom_omega, 5)
    rep = verify_theorem(ie, useq, 5, slack=1e-300)
    assert not rep.witnesses and not rep.success
    assert "hint" in rep.diagnostics


# -- norm bounds and unitary sanity -----------------------------------------


def test_snorm_values():
    assert snorm_lower_bound(math.log(1 / 3)).log_bound == pytest.approx(0.0, abs=1e-15)
    b = snorm_lower_bound(math.log(1e-6))
    assert b.log_bound == pytest.approx(math.log(0.5 * (1e6 - 1)), abs=1e-12)
    assert b.log_bound == pytest.approx(13.122, abs=5e-4)
    assert not b.vacuous
    assert snorm_lower_bound(0.0).vacuous


def test_unitary_sanity():
    assert unitary_sanity(Atoms((0.0,)), 1, 20).ok
    rep = unitary_sanity(SelfSimilarCantor((0.0, 1.0), 1 / 3), 4, 50)
    assert rep.ok
    assert len(set(rep.eigen_angles)) == 4
