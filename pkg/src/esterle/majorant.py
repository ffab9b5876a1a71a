"""Piecewise-linear growth majorant built from chord slopes of ``rho1``.

``rho(t) = t / |E_t|`` and ``rho1(t) = sqrt(t * rho(t))``. Knots
``t_0 > t_1 > ...`` are chosen by halving; the value at knot ``t_n`` is the
chord slope of ``rho1`` over ``[t_n, t_{n-1}]``. Between knots the majorant
is linear, right of the first knot it is constant.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .thinsets import PrecisionError, ThinSet, thin_set_from_dict

OMEGA_SCHEMA = "esterle.omega/1"
# below this abscissa we refuse to extend
T_FLOOR = 1e-290


class RuleStalled(RuntimeError):
    """The halving rule could not find an admissible next knot."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MajorantInvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class RuleParams:
    growth: float = 0.25
    min_increment: float = 1e-3
    max_halvings: int = 60

    def __post_init__(self):
        if not self.growth > 0 or not self.min_increment > 0 or self.max_halvings < 1:
            raise ValueError("rule parameters must be positive")


class RhoCurve:
    """``rho`` and ``rho1`` for a thin set, with a sample cache."""

    def __init__(self, E: ThinSet):
        self.set = E
        self._cache: dict[float, float] = {}
        self._lock = threading.Lock()

    def rho(self, t: float) -> float:
        t = float(t)
        try:
            return self._cache[t]
        except KeyError:
            pass
        value = t / self.set.neighborhood_measure(t)
        with self._lock:
            self._cache[t] = value
        return value

    def rho1(self, t: float) -> float:
        t = float(t)
        return math.sqrt(t * self.rho(t))

    @property
    def samples(self) -> list[tuple[float, float]]:
        return sorted(self._cache.items())

    def check_monotone(self, ts: Iterable[float]) -> float:
        """Largest decrease of ``rho`` along increasing ``ts``.

        Violations above ten times the set tolerance raise.
        """
        ts = sorted(float(t) for t in ts)
        vals = [self.rho(t) for t in ts]
        worst = max([0.0] + [a - b for a, b in zip(vals, vals[1:])])
        if worst > 10 * self.set.tolerance:
            raise MajorantInvariantError(f"rho decreases by {worst:.3e} on the grid")
        return worst


def rho_eval(curve: RhoCurve, t: float) -> float:
    return curve.rho(t)


def rho1_eval(curve: RhoCurve, t: float) -> float:
    return curve.rho1(t)


class MajorantOmega:
    """Decreasing piecewise-linear majorant with lazily extended knots.

    Knots are append-only. ``anchor`` is the abscissa preceding the first
    knot, used for the first chord slope.
    """

    def __init__(
        self,
        curve: RhoCurve,
        anchor: float,
        knots_t: list[float],
        knots_d: list[float],
        params: RuleParams,
        t_start: float,
    ):
        self.curve = curve
        self.anchor = float(anchor)
        self.knots_t = [float(t) for t in knots_t]
        self.knots_d = [float(d) for d in knots_d]
        self.params = params
        self.t_start = float(t_start)
        self._lock = threading.RLock()
        self._arrays = None

    # -- construction -----------------------------------------------------

    def chord(self, a: float, b: float) -> float:
        rho1 = self.curve.rho1
        return (rho1(a) - rho1(b)) / (a - b)

    def _next_knot(self) -> tuple[float, float]:
        t_prev, d_prev = self.knots_t[-1], self.knots_d[-1]
        need = max(d_prev * (1 + self.params.growth), d_prev + self.params.min_increment)
        best = -math.inf
        t = t_prev
        for _ in range(self.params.max_halvings):
            t = t / 2
            if t < T_FLOOR:
                raise PrecisionError(f"cannot certify below t = {t_prev!r}", achieved=t_prev)
            try:
                slope = self.chord(t_prev, t)
            except PrecisionError as exc:
                raise PrecisionError(f"cannot certify below t = {t_prev!r}", exc.achieved) from exc
            best = max(best, slope)
            if slope >= need:
                return t, slope
        raise RuleStalled(
            f"rule stalled at t = {t_prev!r}",
            {"t": t_prev, "slope": d_prev, "required": need, "best_chord": best,
             "chord_limit": self.curve.rho1(t_prev) / t_prev},
        )

    def extend(self, t_target: float) -> "MajorantOmega":
        """Append knots until the smallest one is at or below ``t_target``."""
        if not t_target > 0:
            raise ValueError("t_target must be positive")
        with self._lock:
            while self.knots_t[-1] > t_target:
                t, d = self._next_knot()
                self.knots_t.append(t)
                self.knots_d.append(d)
                self._arrays = None
        return self

    # -- evaluation -------------------------------------------------------

    @property
    def plateau(self) -> float:
        return self.knots_d[0]

    @property
    def n_knots(self) -> int:
        return len(self.knots_t)

    def _ascending(self):
        arr = self._arrays
        if arr is None or len(arr[0]) != len(self.knots_t):
            arr = (np.array(self.knots_t[::-1]), np.array(self.knots_d[::-1]))
            self._arrays = arr
        return arr

    def __call__(self, t):
        """Evaluate the majorant; scalars in, float out."""
        ts = np.asarray(t, dtype=float)
        if np.any(ts <= 0):
            raise ValueError("omega is defined for t > 0")
        tmin = float(ts.min()) if ts.size else math.inf
        if tmin < self.knots_t[-1]:
            self.extend(tmin)
        x, y = self._ascending()
        out = np.interp(ts, x, y)
        return float(out) if out.ndim == 0 else out

    def log(self, t):
        return np.log(self(t))

    def _trapezoids(self, lo: int, hi: int) -> float:
        """Exact integral over ``[t_hi, t_lo]`` (knot indices, lo < hi)."""
        ts, ds = self.knots_t, self.knots_d
        return math.fsum(
            0.5 * (ds[j] + ds[j + 1]) * (ts[j] - ts[j + 1]) for j in range(lo, hi)
        )

    def integral(self, t: float, extend: bool = True) -> tuple[float, float]:
        """Enclosure ``[lower, upper]`` of the integral of omega over ``(0, t]``.

        The exact trapezoid part covers realised knots; the unrealised tail
        over ``(0, t_N]`` is enclosed by ``[d_N t_N, rho1(t_N)]``.
        """
        t = float(t)
        if not t > 0:
            raise ValueError("t must be positive")
        if extend and t < self.knots_t[-1]:
            self.extend(t)
        ts, ds = self.knots_t, self.knots_d
        N = len(ts) - 1
        tail_lo = ds[N] * ts[N]
        tail_hi = self.curve.rho1(ts[N])
        if t < ts[N]:
            return ds[N] * t, tail_hi
        if t >= ts[0]:
            exact = self.plateau * (t - ts[0]) + self._trapezoids(0, N)
        else:
            # ts descending: find k with ts[k+1] <= t < ts[k]
            k = len(ts) - 1 - bisect.bisect_right(ts[::-1], t)
            k = min(k, N - 1)
            w = self(t)
            exact = 0.5 * (ds[k + 1] + w) * (t - ts[k + 1]) + self._trapezoids(k + 1, N)
        return exact + tail_lo, exact + tail_hi

    # -- checks and io ----------------------------------------------------

    def validate(self) -> None:
        ts, ds = self.knots_t, self.knots_d
        if not ts:
            raise MajorantInvariantError("no knots")
        if any(b >= a for a, b in zip(ts, ts[1:])):
            raise MajorantInvariantError("knot abscissas must strictly decrease")
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise MajorantInvariantError("knot values must strictly increase")
        if ds[0] <= 1:
            raise MajorantInvariantError("first knot value must exceed 1")
        prev = [self.anchor] + ts[:-1]
        for a, b, d in zip(prev, ts, ds):
            c = self.chord(a, b)
            if abs(c - d) > 1e-12 * abs(d):
                raise MajorantInvariantError(f"knot at t = {b!r} is not the chord slope")

    def to_dict(self) -> dict:
        return {
            "schema": OMEGA_SCHEMA,
            "set": self.curve.set.to_dict(),
            "t_start": self.t_start,
            "anchor": self.anchor,
            "rule_params": asdict(self.params),
            "knots": [[t, d] for t, d in zip(self.knots_t, self.knots_d)],
        }

    @classmethod
    def from_dict(cls, data: dict, curve: RhoCurve | None = None) -> "MajorantOmega":
        if data.get("schema") != OMEGA_SCHEMA:
            raise ValueError(f"unsupported omega schema {data.get('schema')!r}")
        if curve is None:
            curve = RhoCurve(thin_set_from_dict(data["set"]))
        knots = data["knots"]
        return cls(
            curve,
            data["anchor"],
            [k[0] for k in knots],
            [k[1] for k in knots],
            RuleParams(**data["rule_params"]),
            data["t_start"],
        )


def build_omega(
    curve: RhoCurve,
    t_start: float = 0.5,
    params: RuleParams | None = None,
    t_min: float | None = None,
) -> MajorantOmega:
    """Seed the majorant at ``t_start`` and realise knots down to ``t_min``.

    The anchor is halved until the chord slope over ``[anchor/2, anchor]``
    exceeds 1; that chord gives the first knot. Without ``t_min`` two knots
    are realised.
    """
    params = params or RuleParams()
    if not t_start > 0:
        raise ValueError("t_start must be positive")
    anchor = float(t_start)
    for _ in range(2000):
        t1 = anchor / 2
        if t1 < T_FLOOR:
            break
        slope = (curve.rho1(anchor) - curve.rho1(t1)) / (anchor - t1)
        if slope > 1:
            omega = MajorantOmega(curve, anchor, [t1], [slope], params, t_start)
            omega.extend(t_min if t_min is not None else t1 / 2)
            if t_min is None and omega.n_knots < 2:
                omega.extend(omega.knots_t[-1] / 2)
            return omega
        anchor = t1
    raise RuleStalled(f"rule stalled at t = {anchor!r}", {"t": anchor, "reason": "no slope above 1"})


def extend_knots(omega: MajorantOmega, t_target: float) -> MajorantOmega:
    return omega.extend(t_target)


def omega_eval(omega: MajorantOmega, t: float) -> float:
    return omega(t)


def omega_integral(omega: MajorantOmega, t: float) -> tuple[float, float]:
    return omega.integral(t)


def verify_liminf_condition(omega: MajorantOmega, curve: RhoCurve | None = None) -> list[tuple[float, float]]:
    """Upper bounds of ``(|E_t|/t) * int_0^t omega`` at every knot."""
    curve = curve or omega.curve
    if omega.n_knots < 2:
        raise ValueError("need at least two knots")
    return [(t, omega.integral(t, extend=False)[1] / curve.rho(t)) for t in omega.knots_t]
