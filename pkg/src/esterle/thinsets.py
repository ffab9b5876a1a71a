"""Compact measure-zero subsets of the circle in angle coordinates.

Every set lives on the real line (angles in radians). The main query is
``neighborhood_measure(t)``, the length of the closed t-fattening
``{x : dist(x, E) <= t}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_TOLERANCE = 1e-12

# 2**24 intervals is the most we materialise in one cover.
MAX_COVER_INTERVALS = 1 << 24


class ThinSetError(ValueError):
    """Invalid set description or query argument."""


class PrecisionError(ArithmeticError):
    """A query cannot be answered within floating-point precision."""

    def __init__(self, message: str, achieved: float = math.inf):
        super().__init__(message)
        self.achieved = achieved


def merge_intervals(intervals: np.ndarray) -> np.ndarray:
    """Sort and merge closed intervals; touching endpoints are merged."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if len(iv) == 0:
        return iv
    iv = iv[np.lexsort((iv[:, 1], iv[:, 0]))]
    # running max of right ends; a new block starts where the left end
    # exceeds everything seen so far
    right = np.maximum.accumulate(iv[:, 1])
    starts = np.empty(len(iv), dtype=bool)
    starts[0] = True
    starts[1:] = iv[1:, 0] > right[:-1]
    idx = np.flatnonzero(starts)
    ends = np.append(idx[1:], len(iv)) - 1
    return np.column_stack([iv[idx, 0], right[ends]])


def total_length(intervals: np.ndarray) -> float:
    """Correctly rounded sum of the interval lengths."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    return math.fsum((iv[:, 1] - iv[:, 0]).tolist())


def _check_t(t: float) -> float:
    t = float(t)
    if not t > 0 or not math.isfinite(t):
        raise ThinSetError(f"t must be a positive finite real, got {t!r}")
    return t


class ThinSet:
    """Base class. Subclasses are frozen dataclasses."""

    tolerance: float

    def cover_intervals(self, depth: int) -> np.ndarray:
        raise NotImplementedError

    def fattened_intervals(self, t: float) -> np.ndarray:
        """Disjoint closed intervals whose union is ``E_t`` on the line."""
        raise NotImplementedError

    def neighborhood_measure(self, t: float) -> float:
        """Length of ``E_t`` intersected with the line."""
        t = _check_t(t)
        return total_length(self.fattened_intervals(t))

    def dist(self, x) -> np.ndarray:
        """Distance from real points ``x`` to the set."""
        raise NotImplementedError

    def bounds(self) -> tuple[float, float]:
        raise NotImplementedError

    def sample_points(self, m: int) -> np.ndarray:
        """``m`` deterministic points of the set (with repetition if finite)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def span(self) -> float:
        lo, hi = self.bounds()
        return hi - lo

    @property
    def center(self) -> float:
        lo, hi = self.bounds()
        return 0.5 * (lo + hi)


def _point_fattening(points: np.ndarray, t: float) -> np.ndarray:
    return merge_intervals(np.column_stack([points - t, points + t]))


def _point_dist(points: np.ndarray, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    pts = np.sort(points)
    j = np.clip(np.searchsorted(pts, x), 1, len(pts) - 1) if len(pts) > 1 else None
    if j is None:
        return np.abs(x - pts[0])
    return np.minimum(np.abs(x - pts[j - 1]), np.abs(x - pts[j]))


@dataclass(frozen=True)
class Atoms(ThinSet):
    angles: tuple[float, ...]
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if not angles:
            raise ThinSetError("Atoms needs at least one angle")
        if not all(math.isfinite(a) for a in angles):
            raise ThinSetError("angles must be finite")
        object.__setattr__(self, "angles", angles)
        _check_tolerance(self.tolerance)

    @property
    def points(self) -> np.ndarray:
        return np.unique(np.array(self.angles))

    def cover_intervals(self, depth: int) -> np.ndarray:
        _check_depth(depth)
        p = self.points
        return np.column_stack([p, p])

    def fattened_intervals(self, t: float) -> np.ndarray:
        return _point_fattening(self.points, _check_t(t))

    def dist(self, x) -> np.ndarray:
        return _point_dist(self.points, x)

    def bounds(self):
        p = self.points
        return float(p[0]), float(p[-1])

    def sample_points(self, m: int) -> np.ndarray:
        p = self.points
        return p[np.arange(m) % len(p)]

    def to_dict(self) -> dict:
        return {"variant": "atoms", "angles": list(self.angles), "tolerance": self.tolerance}


@dataclass(frozen=True)
class GeometricCluster(ThinSet):
    """Points ``base + scale * ratio**k`` for k >= 0 together with ``base``."""

    base: float
    ratio: float
    scale: float
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ThinSetError("cluster ratio must lie in (0, 1)")
        if self.scale == 0 or not math.isfinite(self.scale):
            raise ThinSetError("cluster scale must be finite and nonzero")
        _check_tolerance(self.tolerance)

    @property
    def n_explicit(self) -> int:
        """Number of points kept before the tail collapses onto ``base``."""
        cut = self.tolerance / 4
        k = 0
        s = abs(self.scale)
        while s >= cut:
            s *= self.ratio
            k += 1
        return k

    @property
    def points(self) -> np.ndarray:
        """Truncated point set: explicit points plus the limit point."""
        k = np.arange(self.n_explicit)
        pts = self.base + self.scale * self.ratio ** k
        return np.unique(np.append(pts, self.base))

    def cover_intervals(self, depth: int) -> np.ndarray:
        _check_depth(depth)
        k = np.arange(depth)
        pts = self.base + self.scale * self.ratio ** k
        tail = self.scale * self.ratio ** depth
        if tail == 0:
            raise PrecisionError("depth exceeds precision")
        lo, hi = sorted((self.base, self.base + tail))
        iv = np.vstack([np.column_stack([pts, pts]), [[lo, hi]]])
        return merge_intervals(iv)

    def fattened_intervals(self, t: float) -> np.ndarray:
        return _point_fattening(self.points, _check_t(t))

    def dist(self, x) -> np.ndarray:
        return _point_dist(self.points, x)

    def bounds(self):
        ends = (self.base, self.base + self.scale)
        return float(min(ends)), float(max(ends))

    def sample_points(self, m: int) -> np.ndarray:
        k = np.arange(m) % max(self.n_explicit, 1)
        return self.base + self.scale * self.ratio ** k

    def to_dict(self) -> dict:
        return {
            "variant": "cluster",
            "base": self.base,
            "ratio": self.ratio,
            "scale": self.scale,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class SelfSimilarCantor(ThinSet):
    """Symmetric Cantor set on ``carrier`` keeping two pieces of relative length ``ratio``."""

    carrier: tuple[float, float]
    ratio: float
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        a, b = (float(c) for c in self.carrier)
        if not b > a:
            raise ThinSetError("carrier must be a nondegenerate interval [a, b]")
        if not 0 < self.ratio < 0.5:
            raise ThinSetError("Cantor ratio must lie in (0, 1/2)")
        object.__setattr__(self, "carrier", (a, b))
        _check_tolerance(self.tolerance)

    @property
    def length(self) -> float:
        return self.carrier[1] - self.carrier[0]

    def generation_length(self, k: int) -> float:
        return self.length * self.ratio ** k

    def gap(self, k: int) -> float:
        """Length of the gaps opened when passing from generation k to k+1."""
        return self.length * self.ratio ** k * (1 - 2 * self.ratio)

    def cover_intervals(self, depth: int) -> np.ndarray:
        _check_depth(depth)
        if depth > 0 and 2 ** depth > MAX_COVER_INTERVALS:
            raise PrecisionError(f"cover of depth {depth} has too many intervals")
        a = self.carrier[0]
        ell = self.generation_length(depth)
        if ell <= abs(a) * np.finfo(float).eps or ell == 0:
            raise PrecisionError("depth exceeds precision")
        starts = np.array([a])
        for j in range(depth):
            shift = self.generation_length(j) - self.generation_length(j + 1)
            starts = np.concatenate([starts, starts + shift])
        starts.sort()
        return np.column_stack([starts, starts + ell])

    def _critical_depth(self, t: float) -> int:
        """Smallest k whose generation gaps are all bridged by a 2t fattening."""
        k = 0
        g = self.gap(0)
        while g > 2 * t:
            k += 1
            g *= self.ratio
            if g == 0 or k > 1000:
                raise PrecisionError(
                    f"depth exceeds precision at t = {t!r}", achieved=self.generation_length(k)
                )
        # subnormal lengths at the check depth would lose relative precision
        if self.generation_length(k + 2) < np.finfo(float).tiny:
            raise PrecisionError(f"depth exceeds precision at t = {t!r}", achieved=self.generation_length(k))
        return k

    def cover_measure(self, t: float, depth: int) -> float:
        """Length of the merged t-fattening of the depth-``depth`` cover.

        Generation-j gaps separate 2**j pairs of neighbours; a gap shorter
        than 2t closes, and its overlap is removed once per gap.
        """
        t = _check_t(t)
        total = 2.0 ** depth * (self.generation_length(depth) + 2 * t)
        overlap = 0.0
        for j in range(depth):
            closed = 2 * t - self.gap(j)
            if closed > 0:
                overlap += 2.0 ** j * closed
        return total - overlap

    def neighborhood_measure(self, t: float) -> float:
        t = _check_t(t)
        k = self._critical_depth(t)
        # at the critical depth all deeper gaps are bridged, so the depth-k
        # cover fattens to exactly E_t; depth k+2 must reproduce it
        value = self.cover_measure(t, k)
        check = self.cover_measure(t, k + 2)
        err = abs(check - value)
        if err > max(self.tolerance, 8 * np.finfo(float).eps * value):
            raise PrecisionError(f"cover measures disagree at t = {t!r}", achieved=err)
        return value

    def fattened_intervals(self, t: float) -> np.ndarray:
        t = _check_t(t)
        k = self._critical_depth(t)
        cov = self.cover_intervals(k)
        return merge_intervals(np.column_stack([cov[:, 0] - t, cov[:, 1] + t]))

    def dist(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a, _ = self.carrier
        r = self.ratio
        out = np.zeros_like(x)
        lo = np.full_like(x, a)
        ell = self.length
        active = np.ones(x.shape, dtype=bool)
        # outside the carrier
        below = x < a
        above = x > a + ell
        out[below] = a - x[below]
        out[above] = x[above] - (a + ell)
        active &= ~(below | above)
        floor = np.finfo(float).eps * max(abs(a), abs(a + ell), ell)
        while np.any(active) and ell > floor:
            child = ell * r
            left_end = lo + child
            right_start = lo + ell - child
            in_gap = active & (x > left_end) & (x < right_start)
            out[in_gap] = np.minimum(x[in_gap] - left_end[in_gap], right_start[in_gap] - x[in_gap])
            active &= ~in_gap
            go_right = active & (x >= right_start)
            lo = np.where(go_right, right_start, lo)
            ell = child
        return out

    def bounds(self):
        return self.carrier

    def sample_points(self, m: int) -> np.ndarray:
        depth = max(0, math.ceil(math.log2(max(m, 1))))
        left = self.cover_intervals(depth)[:, 0]
        return left[np.arange(m) % len(left)]

    def to_dict(self) -> dict:
        return {
            "variant": "cantor",
            "carrier": list(self.carrier),
            "ratio": self.ratio,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class Union(ThinSet):
    parts: tuple[ThinSet, ...]
    tolerance: float = field(default=DEFAULT_TOLERANCE)

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ThinSetError("Union needs at least one part")
        object.__setattr__(self, "parts", parts)
        _check_tolerance(self.tolerance)

    def cover_intervals(self, depth: int) -> np.ndarray:
        return merge_intervals(np.vstack([p.cover_intervals(depth) for p in self.parts]))

    def fattened_intervals(self, t: float) -> np.ndarray:
        return merge_intervals(np.vstack([p.fattened_intervals(t) for p in self.parts]))

    def dist(self, x) -> np.ndarray:
        return np.min([p.dist(x) for p in self.parts], axis=0)

    def bounds(self):
        bs = [p.bounds() for p in self.parts]
        return min(b[0] for b in bs), max(b[1] for b in bs)

    def sample_points(self, m: int) -> np.ndarray:
        per = -(-m // len(self.parts))
        pts = np.concatenate([p.sample_points(per) for p in self.parts])
        return pts[:m]

    def to_dict(self) -> dict:
        return {
            "variant": "union",
            "parts": [p.to_dict() for p in self.parts],
            "tolerance": self.tolerance,
        }


def _check_tolerance(tol: float) -> None:
    if not tol > 0:
        raise ThinSetError("tolerance must be positive")


def _check_depth(depth: int) -> None:
    if depth < 0:
        raise ThinSetError("depth must be >= 0")


def cover_intervals(E: ThinSet, depth: int) -> np.ndarray:
    return E.cover_intervals(depth)


def neighborhood_measure(E: ThinSet, t: float) -> float:
    return E.neighborhood_measure(t)


def thin_set_from_dict(d: dict) -> ThinSet:
    """Build a set from its JSON descriptor."""
    variant = d.get("variant")
    tol = float(d.get("tolerance", DEFAULT_TOLERANCE))
    if variant == "atoms":
        return Atoms(tuple(d["angles"]), tol)
    if variant == "cluster":
        return GeometricCluster(float(d["base"]), float(d["ratio"]), float(d["scale"]), tol)
    if variant == "cantor":
        return SelfSimilarCantor(tuple(d["carrier"]), float(d["ratio"]), tol)
    if variant == "union":
        return Union(tuple(thin_set_from_dict(p) for p in d["parts"]), tol)
    raise ThinSetError(f"unknown set variant {variant!r}")


def measure_curve(E: ThinSet, ts: Sequence[float]) -> list[tuple[float, float]]:
    """``(t, |E_t|)`` samples, e.g. for CSV output."""
    return [(float(t), E.neighborhood_measure(t)) for t in ts]


def standard_families() -> dict[str, ThinSet]:
    """The three built-in test families used throughout the test-suite and CLI."""
    return {
        "atoms": Atoms((0.0,)),
        "cluster": GeometricCluster(0.0, 0.5, 1.0),
        "cantor": SelfSimilarCantor((0.0, 1.0), 1.0 / 3.0),
    }
