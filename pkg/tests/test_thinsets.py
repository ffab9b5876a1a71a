import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esterle.thinsets import (
    Atoms,
    GeometricCluster,
    PrecisionError,
    SelfSimilarCantor,
    ThinSetError,
    Union,
    cover_intervals,
    neighborhood_measure,
    thin_set_from_dict,
)


# -- independent oracles ---------------------------------------------------


def sweep_length(intervals):
    """Plain sweep over endpoint events; no numpy, no shared helpers."""
    events = []
    for a, b in intervals:
        events.append((a, 0))  # opens sort before closes at equal abscissa
        events.append((b, 1))
    events.sort()
    depth, start, blocks = 0, None, []
    for x, kind in events:
        if kind == 0:
            if depth == 0:
                start = x
            depth += 1
        else:
            depth -= 1
            if depth == 0:
                blocks.append(x - start)
    return math.fsum(blocks)


def cantor_cover_exact(depth, r=Fraction(1, 3)):
    """Generation intervals of the middle-thirds set, in exact rationals."""
    ivs = [(Fraction(0), Fraction(1))]
    for _ in range(depth):
        nxt = []
        for a, b in ivs:
            L = (b - a) * r
            nxt += [(a, a + L), (b - L, b)]
        ivs = nxt
    return ivs


def fattened_length_exact(ivs, t):
    t = Fraction(t)
    fat = sorted((a - t, b + t) for a, b in ivs)
    total, (ca, cb) = Fraction(0), fat[0]
    for a, b in fat[1:]:
        if a <= cb:
            cb = max(cb, b)
        else:
            total += cb - ca
            ca, cb = a, b
    return total + (cb - ca)


# -- cover examples --------------------------------------------------------


def test_atoms_cover_is_points():
    assert cover_intervals(Atoms((0.0,)), 3).tolist() == [[0.0, 0.0]]


def test_cantor_cover_generations():
    C = SelfSimilarCantor((0.0, 1.0), 1 / 3)
    np.testing.assert_allclose(cover_intervals(C, 1), [[0, 1 / 3], [2 / 3, 1]], atol=1e-15)
    np.testing.assert_allclose(
        cover_intervals(C, 2), [[0, 1 / 9], [2 / 9, 1 / 3], [2 / 3, 7 / 9], [8 / 9, 1]], atol=1e-15
    )


def test_cover_depth_beyond_precision():
    C = SelfSimilarCantor((1.0, 2.0), 0.01)
    with pytest.raises(PrecisionError, match="depth exceeds precision"):
        cover_intervals(C, 23)
    with pytest.raises(PrecisionError, match="too many intervals"):
        cover_intervals(SelfSimilarCantor((0.0, 1.0), 1 / 3), 40)


# -- measure examples ------------------------------------------------------


def test_single_atom():
    assert neighborhood_measure(Atoms((0.0,)), 0.1) == pytest.approx(0.2, abs=1e-15)


def test_two_atoms_merge():
    assert neighborhood_measure(Atoms((0.0, 0.5)), 0.3) == pytest.approx(1.1, abs=1e-15)


def test_cantor_one_eighteenth():
    C = SelfSimilarCantor((0.0, 1.0), 1 / 3)
    assert abs(C.neighborhood_measure(1 / 18) - 8 / 9) <= 1e-10


@pytest.mark.parametrize("t", [0.3, 1 / 18, 0.01, 1e-3, 2e-4])
def test_cantor_against_exact_rational_cover(t):
    # for these t every gap below generation 6..10 is bridged, so the
    # fattened deep cover equals the fattened set
    C = SelfSimilarCantor((0.0, 1.0), 1 / 3)
    depth = 10
    expected = float(fattened_length_exact(cantor_cover_exact(depth), Fraction(t)))
    assert C.neighborhood_measure(t) == pytest.approx(expected, rel=1e-12)


def test_cantor_sandwich_certificate():
    # E ⊂ C_k ⊂ E_{3^-k}, so |E_t| <= |(C_k)_t| <= |E_{t+3^-k}|
    C = SelfSimilarCantor((0.0, 1.0), 1 / 3)
    k = 8
    cover = cover_intervals(C, k)
    for t in [1e-3, 5e-3, 0.02]:
        fat = sweep_length([(a - t, b + t) for a, b in cover])
        assert C.neighborhood_measure(t) <= fat + 1e-12
        assert fat <= C.neighborhood_measure(t + 3.0**-k) + 1e-12


def test_atoms_match_sweep_oracle_exactly():
    rng = np.random.default_rng(7)
    for _ in range(50):
        pts = np.sort(rng.uniform(-3, 3, rng.integers(1, 30)))
        t = float(rng.uniform(1e-4, 0.5))
        E = Atoms(tuple(pts))
        assert E.neighborhood_measure(t) == sweep_length([(p - t, p + t) for p in pts])


def test_cluster_matches_sweep_oracle_exactly():
    E = GeometricCluster(0.0, 0.5, 1.0)
    for t in [0.3, 0.1, 0.01, 1e-3, 1e-5, 1e-8]:
        pts = E.points
        assert E.neighborhood_measure(t) == sweep_length([(p - t, p + t) for p in pts])


def test_errors():
    with pytest.raises(ThinSetError):
        Atoms((0.0,)).neighborhood_measure(0.0)
    with pytest.raises(ThinSetError):
        Atoms((0.0,)).neighborhood_measure(-1.0)
    with pytest.raises(ThinSetError):
        SelfSimilarCantor((0.0, 1.0), 0.5)
    with pytest.raises(ThinSetError):
        GeometricCluster(0.0, 1.5, 1.0)
    with pytest.raises(ThinSetError):
        Atoms(())
    with pytest.raises(ThinSetError):
        thin_set_from_dict({"variant": "nope"})


def test_cantor_unreachable_tolerance_reports_bound():
    C = SelfSimilarCantor((0.0, 1.0), 1 / 3)
    with pytest.raises(PrecisionError) as exc:
        C.neighborhood_measure(5e-324)
    assert exc.value.achieved >= 0


# -- properties ------------------------------------------------------------

families = st.sampled_from([
    Atoms((0.0,)),
    Atoms((0.0, 0.5, 0.51, 2.0)),
    GeometricCluster(0.0, 0.5, 1.0),
    GeometricCluster(1.0, 0.3, -0.5),
    SelfSimilarCantor((0.0, 1.0), 1 / 3),
    SelfSimilarCantor((-1.0, 2.0), 0.2),
])
ts = st.floats(min_value=1e-9, max_value=2.0)


@settings(max_examples=200, deadline=None)
@given(families, ts, ts)
def test_monotone_in_t(E, s, t):
    s, t = sorted((s, t))
    assert E.neighborhood_measure(s) <= E.neighborhood_measure(t) * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(families, ts)
def test_at_least_two_t(E, t):
    assert E.neighborhood_measure(t) >= 2 * t * (1 - 1e-12)


@settings(max_examples=100, deadline=None)
@given(families, families, ts)
def test_union_subadditive(A, B, t):
    U = Union((A, B))
    lo = max(A.neighborhood_measure(t), B.neighborhood_measure(t))
    hi = A.neighborhood_measure(t) + B.neighborhood_measure(t)
    slack = U.tolerance + A.tolerance + B.tolerance
    assert lo - slack <= U.neighborhood_measure(t) <= hi + slack


@settings(max_examples=50, deadline=None)
@given(families)
def test_json_round_trip(E):
    again = thin_set_from_dict(json.loads(json.dumps(E.to_dict())))
    assert again == E


@settings(max_examples=100, deadline=None)
@given(families, st.floats(min_value=-3, max_value=3))
def test_dist_agrees_with_fattening(E, x):
    d = float(E.dist(np.array([x]))[0])
    iv = E.fattened_intervals(d + 1e-9)
    assert any(a <= x <= b for a, b in iv)
    if d > 1e-6:
        iv = E.fattened_intervals(d * (1 - 1e-6))
        assert not any(a <= x <= b for a, b in iv)
