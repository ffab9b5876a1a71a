"""Numerical removability experiments for thin sets on the real line.

Three observables are computed for a test function ``f``:

* the criterion integral ``(1/eta) * integral of |f| over E_eta``,
* the Cauchy-integral reconstruction ``(1/2 pi i) * contour integral of f(z)/(z - zeta)``,
* a growth check ``|f(x+iy)| <= omega(|y|)`` on a cloud of points near E.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .inner import InnerEval, SingularMeasure, measure_from_dict
from .thinsets import ThinSet

REMOVABLE = "REMOVABLE"
NOT_REMOVABLE = "NOT-REMOVABLE"
INCONCLUSIVE = "INCONCLUSIVE"


class MarginError(ValueError):
    pass


class TestFunction:
    """Catalogue of holomorphic test functions with closed-form evaluators."""

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, tag: str, params: dict | None = None):
        self.tag = tag
        self.params = dict(params or {})
        if tag == "reflected_inner":
            m = self.params["measure"]
            measure = m if isinstance(m, SingularMeasure) else measure_from_dict(m)
            self._ie = InnerEval(measure)
        elif tag not in ("exp", "polynomial", "pole", "bounded_jump"):
            raise ValueError(f"unknown test function {tag!r}")

    # constructors
    @classmethod
    def exp(cls):
        return cls("exp")

    @classmethod
    def polynomial(cls, coeffs):
        """Coefficients in increasing degree."""
        return cls("polynomial", {"coeffs": [float(c) for c in coeffs]})

    @classmethod
    def pole(cls, p: float = 0.0):
        return cls("pole", {"p": p})

    @classmethod
    def reflected_inner(cls, measure: SingularMeasure):
        return cls("reflected_inner", {"measure": measure})

    @classmethod
    def bounded_jump(cls, a: float, b: float):
        return cls("bounded_jump", {"a": a, "b": b})

    def singular_points(self) -> list[float]:
        """Real points where the evaluator blows up (finite singular sets only)."""
        if self.tag == "pole":
            return [float(self.params["p"])]
        if self.tag == "reflected_inner":
            return list(self._ie.measure.angles)
        if self.tag == "bounded_jump":
            return [float(self.params["a"]), float(self.params["b"])]
        return []

    def _herglotz(self, z):
        return self._ie.herglotz(np.exp(1j * np.asarray(z, dtype=complex)), check=False)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            if self.tag == "exp":
                out = np.exp(z)
            elif self.tag == "polynomial":
                out = np.polyval(self.params["coeffs"][::-1], z)
            elif self.tag == "pole":
                out = 1 / (z - self.params["p"])
            elif self.tag == "bounded_jump":
                out = np.log((z - self.params["a"]) / (z - self.params["b"]))
            else:
                # Theta(e^{iz}); the upper half-plane maps into the disk
                out = np.exp(-self._herglotz(z))
        return out[()] if out.ndim == 0 else out

    def log_abs(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            if self.tag == "exp":
                out = z.real
            elif self.tag == "reflected_inner":
                out = -self._herglotz(z).real
            else:
                out = np.log(np.abs(self(z)))
        return out[()] if np.ndim(out) == 0 else out

    def log_abs_scalar(self, x: float, y: float) -> float:
        """``log|f(x + iy)|`` at one point, avoiding numpy call overhead."""
        z = complex(x, y)
        try:
            if self.tag == "exp":
                return x
            if self.tag == "pole":
                return -math.log(abs(z - self.params["p"]))
            if self.tag == "polynomial":
                acc = 0j
                for c in reversed(self.params["coeffs"]):
                    acc = acc * z + c
                return math.log(abs(acc))
            if self.tag == "bounded_jump":
                return math.log(abs(cmath.log((z - self.params["a"]) / (z - self.params["b"]))))
        except (ValueError, ZeroDivisionError):
            return math.inf if self.tag == "pole" else float(self.log_abs(z))
        return float(self.log_abs(z))

    def to_dict(self) -> dict:
        d = {"tag": self.tag}
        for k, v in self.params.items():
            d[k] = v.to_dict() if isinstance(v, SingularMeasure) else v
        return d


def test_function_from_dict(d: dict) -> TestFunction:
    d = dict(d)
    tag = d.pop("tag")
    aliases = {"reflectedinner": "reflected_inner", "jump": "bounded_jump", "entire": "exp"}
    return TestFunction(aliases.get(tag.lower(), tag.lower()), d)


test_function_from_dict.__test__ = False


@dataclass(frozen=True)
class Contour:
    """Positively oriented circle, discretised with ``M`` trapezoid nodes."""

    center: complex
    radius: float
    M: int = 512
    margin: float = 1e-3

    @classmethod
    def around(cls, E: ThinSet, M: int = 512) -> "Contour":
        c = E.center
        return cls(complex(c), 1.5 * E.span + 0.5, M, margin=0.05 * (1.5 * E.span + 0.5))

    def nodes(self) -> np.ndarray:
        k = np.arange(self.M)
        return self.center + self.radius * np.exp(2j * math.pi * k / self.M)

    def winds_around(self, E: ThinSet) -> bool:
        lo, hi = E.bounds()
        far = max(abs(lo - self.center), abs(hi - self.center))
        return far < self.radius - self.margin

    def probes(self, k: int = 4, frac: float = 0.5) -> list[complex]:
        """Points at ``frac * radius`` on the diagonals, away from the real axis."""
        return [self.center + frac * self.radius * complex(math.cos(a), math.sin(a))
                for a in (math.pi / 4 + j * 2 * math.pi / k for j in range(k))]


def cauchy_reconstruct(f, contour: Contour, zeta: complex) -> complex:
    """Trapezoid rule for ``(1/2 pi i) * contour integral of f(z)/(z - zeta) dz``."""
    zeta = complex(zeta)
    if contour.radius - abs(zeta - contour.center) < contour.margin:
        raise MarginError("margin violated")
    z = contour.nodes()
    # dz = i (z - c) dtheta, so the i cancels against 1/(2 pi i)
    vals = f(z) * (z - contour.center) / (z - zeta)
    return complex(np.mean(vals))


class _Diverges(Exception):
    pass


@dataclass
class CriterionResult:
    eta: float
    value: float
    lower: float
    upper: float
    diverges: bool = False
    flagged: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower


_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class QuadParams:
    epsabs: float = 1e-13
    epsrel: float = 1e-11
    limit: int = 200
    log_cap: float = 50.0


def criterion_integral(f: TestFunction, E: ThinSet, eta: float, quad: QuadParams | None = None) -> CriterionResult:
    """Enclosure of ``(1/eta) * integral of |f| dm`` over the planar neighbourhood ``E_eta``.

    For E on the line, the horizontal section of ``E_eta`` at height ``y`` is
    the one-dimensional ``sqrt(eta^2 - y^2)``-fattening of E, so the area
    integral is computed as nested adaptive quadrature over exact sections.
    Any integrand sample or partial integral above ``exp(log_cap)`` reports
    divergence.
    """
    q = quad or QuadParams()
    if not eta > 0:
        raise ValueError("eta must be positive")
    cap = math.exp(q.log_cap)
    sing = sorted(set(f.singular_points()))
    inner_err = [0.0]
    flagged = [False]

    def absf(x, y):
        la = f.log_abs_scalar(x, y)
        if la > q.log_cap:
            raise _Diverges
        return math.exp(la) if la > -745 else 0.0

    def section(y):
        w = math.sqrt(max(eta * eta - y * y, 0.0))
        if w == 0.0:
            return 0.0
        iv = np.asarray(E.fattened_intervals(w), dtype=float).reshape(-1, 2)
        # vectorised Gauss-Legendre on every interval; adaptive quad only where
        # the 8- and 16-node rules disagree or a singular point is inside
        hard = np.zeros(len(iv), dtype=bool)
        for s in sing:
            hard |= (iv[:, 0] <= s) & (s <= iv[:, 1])
        total = 0.0
        easy = iv[~hard]
        if len(easy):
            mid = 0.5 * (easy[:, 0] + easy[:, 1])
            half = 0.5 * (easy[:, 1] - easy[:, 0])
            la = np.asarray(f.log_abs(mid[:, None] + half[:, None] * _GL16[0][None, :] + 1j * y), dtype=float)
            lb = np.asarray(f.log_abs(mid[:, None] + half[:, None] * _GL8[0][None, :] + 1j * y), dtype=float)
            if np.any(la > q.log_cap) or np.any(lb > q.log_cap) or np.any(np.isnan(la)):
                raise _Diverges
            i16 = half * (np.exp(la) @ _GL16[1])
            i8 = half * (np.exp(lb) @ _GL8[1])
            diff = np.abs(i16 - i8)
            ok = diff <= np.maximum(q.epsabs, q.epsrel * np.abs(i16))
            total += math.fsum(i16[ok])
            if np.any(ok):
                inner_err[0] = max(inner_err[0], float(diff[ok].max()))
            redo = easy[~ok]
        else:
            redo = easy
        for a, b in [*map(tuple, iv[hard]), *map(tuple, redo)]:
            pts = [s for s in sing if a < s < b]
            with warnings.catch_warnings():
                warnings.simplefilter("error", integrate.IntegrationWarning)
                try:
                    val, err = integrate.quad(absf, a, b, args=(y,), points=pts or None,
                                              epsabs=q.epsabs, epsrel=q.epsrel, limit=q.limit)
                except integrate.IntegrationWarning:
                    flagged[0] = True
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        val, err = integrate.quad(absf, a, b, args=(y,), points=pts or None,
                                                  epsabs=q.epsabs, epsrel=q.epsrel, limit=q.limit)
            total += val
            inner_err[0] = max(inner_err[0], err)
        if total > cap:
            raise _Diverges
        return total

    value, outer_err = 0.0, 0.0
    try:
        for lo, hi in ((-eta, 0.0), (0.0, eta)):
            with warnings.catch_warnings():
                warnings.simplefilter("error", integrate.IntegrationWarning)
                try:
                    v, e = integrate.quad(section, lo, hi, epsabs=q.epsabs, epsrel=q.epsrel, limit=q.limit)
                except integrate.IntegrationWarning:
                    flagged[0] = True
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        v, e = integrate.quad(section, lo, hi, epsabs=q.epsabs, epsrel=q.epsrel, limit=q.limit)
            value += v
            outer_err += e
            if value > cap:
                raise _Diverges
    except _Diverges:
        return CriterionResult(eta, math.inf, cap / eta, math.inf, diverges=True)
    err = outer_err + 2 * eta * inner_err[0]
    return CriterionResult(eta, value / eta, (value - err) / eta, (value + err) / eta, flagged=flagged[0])


def strip_bound(E: ThinSet, omega, eta: float) -> float:
    """Upper bound ``2 |E_eta| * int_0^eta omega / eta`` for functions under the growth bound."""
    return 2 * E.neighborhood_measure(eta) * omega.integral(eta)[1] / eta


@dataclass
class GrowthCheck:
    ok: bool
    n_points: int
    worst_excess: float
    worst_point: complex


def growth_check(f: TestFunction, E: ThinSet, omega, y_max: float, n_x: int = 8,
                 n_y: int = 12, y_min: float = 1e-6) -> GrowthCheck:
    """Compare ``log|f(x+iy)|`` with ``log omega(|y|)`` on a cloud hugging E."""
    xs0 = np.unique(E.sample_points(n_x))
    ys = np.geomspace(y_max, y_min, n_y)
    pts = []
    for y in ys:
        for x0 in xs0:
            for dx in (0.0, -y, y):
                for sgn in (1.0, -1.0):
                    pts.append(complex(x0 + dx, sgn * y))
    pts = np.array(pts)
    excess = np.asarray(f.log_abs(pts), dtype=float) - np.log(omega(np.abs(pts.imag)))
    excess = np.where(np.isnan(excess), np.inf, excess)
    k = int(np.argmax(excess))
    return GrowthCheck(bool(excess[k] <= 0), len(pts), float(excess[k]), complex(pts[k]))


@dataclass
class RemovabilityReport:
    verdict: str
    growth: GrowthCheck
    trace: list[CriterionResult]
    mismatches: list[dict]
    max_mismatch: float
    strip_bounds: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        g = asdict(self.growth)
        g["worst_point"] = [self.growth.worst_point.real, self.growth.worst_point.imag]
        return {
            "verdict": self.verdict,
            "growth": g,
            "criterion_trace": [_finite(asdict(c)) for c in self.trace],
            "strip_bounds": [_num(b) for b in self.strip_bounds],
            "mismatches": self.mismatches,
            "max_mismatch": _num(self.max_mismatch),
        }


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf") if not math.isnan(x) else "nan"


def _finite(d: dict) -> dict:
    return {k: _num(v) if isinstance(v, float) else v for k, v in d.items()}


def removability_test(
    f: TestFunction,
    E: ThinSet,
    contour: Contour,
    omega,
    etas,
    probes=None,
    quad: QuadParams | None = None,
    criterion_threshold: float = 1e-2,
    mismatch_tol: float = 1e-8,
    mismatch_floor: float = 1e-3,
) -> RemovabilityReport:
    """Classify ``f`` across E from the criterion trace and contour reconstruction."""
    etas = sorted((float(e) for e in etas), reverse=True)
    probes = list(probes) if probes is not None else contour.probes()
    for z in probes:
        if np.min(np.abs(z - (E.sample_points(64) + 0j))) < contour.margin:
            raise MarginError("probe too close to E")
    trace = [criterion_integral(f, E, eta, quad) for eta in etas]
    strips = [strip_bound(E, omega, eta) for eta in etas]
    rows, worst = [], 0.0
    for z in probes:
        rec = cauchy_reconstruct(f, contour, z)
        act = complex(f(z))
        d = abs(rec - act)
        worst = max(worst, d)
        rows.append({"probe": [z.real, z.imag], "reconstructed": [rec.real, rec.imag],
                     "actual": [act.real, act.imag], "abs": d})
    growth = growth_check(f, E, omega, y_max=etas[0])

    diverges = any(c.diverges for c in trace)
    values = [c.value for c in trace]
    decreasing = all(b <= a for a, b in zip(values, values[1:]))
    if diverges or worst > mismatch_floor:
        verdict = NOT_REMOVABLE
    elif decreasing and values[-1] < criterion_threshold and worst <= mismatch_tol:
        verdict = REMOVABLE
    else:
        verdict = INCONCLUSIVE
    return RemovabilityReport(verdict, growth, trace, rows, worst, strips)
