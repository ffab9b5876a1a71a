"""Scalar singular inner functions and the quantity delta_n.

For an atomic singular measure ``mu = sum w_j delta_{exp(i a_j)}``,

    Theta(lam) = exp(-sum_j w_j (zeta_j + lam) / (zeta_j - lam)),

and ``log delta_n = inf_{|lam|<1} max(n log|lam|, log|Theta(lam)|)``. All
magnitudes are handled as logarithms.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .majorant import MajorantOmega
from .optimize import bisect_decreasing, golden_min
from .thinsets import SelfSimilarCantor, ThinSet, thin_set_from_dict


class SupportProximityError(ValueError):
    pass


@dataclass(frozen=True)
class SingularMeasure:
    """Finite atomic measure on the circle; angles in radians."""

    angles: tuple[float, ...]
    weights: tuple[float, ...]
    support: ThinSet | None = None
    depth: int | None = None

    def __post_init__(self):
        if len(self.angles) != len(self.weights) or not self.angles:
            raise ValueError("need matching, nonempty angles and weights")
        if any(not w > 0 for w in self.weights):
            raise ValueError("weights must be positive")

    @classmethod
    def atomic(cls, atoms, support: ThinSet | None = None) -> "SingularMeasure":
        angles, weights = zip(*[(float(a), float(w)) for a, w in atoms])
        return cls(tuple(angles), tuple(weights), support)

    @classmethod
    def cantor(cls, E: SelfSimilarCantor, depth: int, total_mass: float = 1.0) -> "SingularMeasure":
        """``2**depth`` equal atoms at the left ends of the generation intervals.

        Left endpoints are points of E, so the atoms sit on the set itself.
        """
        left = E.cover_intervals(depth)[:, 0]
        w = total_mass / len(left)
        return cls(tuple(float(a) for a in left), (w,) * len(left), E, depth)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    @property
    def zetas(self) -> np.ndarray:
        return np.exp(1j * np.array(self.angles))

    def to_dict(self) -> dict:
        if self.depth is not None and isinstance(self.support, SelfSimilarCantor):
            return {"variant": "cantor", "set": self.support.to_dict(), "depth": self.depth,
                    "total_mass": self.total_mass}
        return {"variant": "atomic", "atoms": [[a, w] for a, w in zip(self.angles, self.weights)]}


def measure_from_dict(d: dict) -> SingularMeasure:
    variant = d.get("variant")
    if variant == "atomic":
        return SingularMeasure.atomic(d["atoms"])
    if variant == "cantor":
        E = thin_set_from_dict(d["set"])
        if not isinstance(E, SelfSimilarCantor):
            raise ValueError("cantor measure needs a cantor set")
        return SingularMeasure.cantor(E, int(d["depth"]), float(d.get("total_mass", 1.0)))
    raise ValueError(f"unknown measure variant {variant!r}")


class InnerEval:
    """Evaluator for ``Theta_mu`` off the support of ``mu``."""

    def __init__(self, measure: SingularMeasure, eps_excl: float = 1e-12):
        self.measure = measure
        self.eps_excl = eps_excl
        self._angles = np.array(measure.angles)
        self._w = np.array(measure.weights)
        self._zeta = measure.zetas

    # -- pointwise --------------------------------------------------------

    def _check(self, lam: np.ndarray) -> None:
        d = np.min(np.abs(lam[..., None] - self._zeta), axis=-1)
        if np.any(d < self.eps_excl):
            raise SupportProximityError("evaluation too close to singular support")

    def herglotz(self, lam, check: bool = True) -> np.ndarray:
        """``sum_j w_j (zeta_j + lam)/(zeta_j - lam)``, so ``Theta = exp(-herglotz)``."""
        lam = np.asarray(lam, dtype=complex)
        if check:
            self._check(lam)
        z = self._zeta
        return np.sum(self._w * (z + lam[..., None]) / (z - lam[..., None]), axis=-1)

    def theta_eval(self, lam, exterior: str = "reflect"):
        """``(log|Theta(lam)|, arg Theta(lam))``.

        Outside the disk the default uses ``Theta(lam) = 1/conj(Theta(1/conj(lam)))``;
        ``exterior="direct"`` evaluates the integral formula there instead.
        """
        lam = np.asarray(lam, dtype=complex)
        if exterior not in ("reflect", "direct"):
            raise ValueError("exterior must be 'reflect' or 'direct'")
        if not np.all(np.isfinite(lam)):
            raise ValueError("lam must be finite")
        outside = np.abs(lam) > 1
        src = lam
        if exterior == "reflect":
            src = np.where(outside, 1 / np.conj(np.where(outside, lam, 1)), lam)
        h = self.herglotz(src)
        logmod = -h.real
        if exterior == "reflect":
            logmod = np.where(outside, -logmod, logmod)
        phase = -h.imag
        if logmod.ndim == 0:
            return float(logmod), float(phase)
        return logmod, phase

    def log_abs(self, lam, exterior: str = "reflect"):
        return self.theta_eval(lam, exterior)[0]

    # -- polar evaluations used by the grid searches -------------------------

    def log_modulus_polar(self, t, theta) -> np.ndarray:
        """``log|Theta((1-t) e^{i theta})|`` for ``0 < t <= 1``, broadcasting."""
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        t, theta = np.broadcast_arrays(t, theta)
        return -self._poisson_sum(t * (2 - t), t * t, 4 * (1 - t), theta)

    def log_modulus_exterior(self, e, theta) -> np.ndarray:
        """``log|Theta((1+e) e^{i theta})|`` from the integral formula, ``e > 0``."""
        e = np.asarray(e, dtype=float)
        theta = np.asarray(theta, dtype=float)
        e, theta = np.broadcast_arrays(e, theta)
        return self._poisson_sum(e * (2 + e), e * e, 4 * (1 + e), theta)

    def _poisson_sum(self, num, base, scale, theta) -> np.ndarray:
        """``sum_j w_j num / (base + scale sin^2((theta - a_j)/2))``."""
        if theta.size <= 64:
            s = np.sin(0.5 * (theta[..., None] - self._angles))
            return np.sum(self._w * num[..., None] / (base[..., None] + scale[..., None] * s * s), axis=-1)
        # large grids: accumulate atom by atom to bound memory
        acc = np.zeros(theta.shape)
        for a, w in zip(self._angles, self._w):
            s = np.sin(0.5 * (theta - a))
            acc += w * num / (base + scale * s * s)
        return acc

    def log_theta0(self) -> float:
        return -self.measure.total_mass


def theta_eval(ie: InnerEval, lam, exterior: str = "reflect"):
    return ie.theta_eval(lam, exterior)


# ---------------------------------------------------------------------------
# delta_n


@dataclass(frozen=True)
class GridParams:
    t_floor: float = 1e-9
    n_radii: int = 181
    n_coarse: int = 512
    offsets: tuple[float, ...] = tuple(10.0 ** k for k in range(-9, 0))
    top_rays: int = 4
    rounds: int = 2


@dataclass
class DeltaGrid:
    """Interior and exterior log-modulus tables shared across ``n``."""

    ie: InnerEval
    params: GridParams
    t: np.ndarray
    angles: np.ndarray
    H: np.ndarray
    H_ext: np.ndarray

    @classmethod
    def build(cls, ie: InnerEval, params: GridParams | None = None, threads: int = 1) -> "DeltaGrid":
        p = params or GridParams()
        t = np.logspace(math.log10(p.t_floor), 0.0, p.n_radii)[:-1]
        # radii close to the origin, so crossings at small |lam| are bracketed
        near_origin = 1 - np.logspace(-6, math.log10(0.5), p.n_radii // 8)
        t = np.unique(np.concatenate([t, near_origin]))
        atoms = np.array(ie.measure.angles)
        coarse = np.linspace(-math.pi, math.pi, p.n_coarse, endpoint=False)
        offs = np.array(p.offsets)
        offs = np.concatenate([[0.0], offs, -offs])
        near = (atoms[:, None] + offs[None, :]).ravel()
        # angles are taken mod 2pi only for de-duplication of the coarse grid
        center = 0.5 * (atoms.min() + atoms.max())
        coarse = coarse + center
        angles = np.unique(np.concatenate([coarse, near]))
        e = t / (1 - t)
        chunks = np.array_split(np.arange(len(angles)), max(1, threads))

        def fill(idx):
            return (ie.log_modulus_polar(t[:, None], angles[None, idx]),
                    ie.log_modulus_exterior(e[:, None], angles[None, idx]))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(fill, chunks))
        else:
            parts = [fill(idx) for idx in chunks]
        H = np.concatenate([q[0] for q in parts], axis=1)
        H_ext = np.concatenate([q[1] for q in parts], axis=1)
        return cls(ie, p, t, angles, H, H_ext)


@dataclass
class DeltaReport:
    n: int
    log_delta: float
    log_delta_exterior: float
    grid_log_delta: float
    argmin: complex
    depth: int | None = None
    warnings: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def duality_gap(self) -> float:
        return abs(self.log_delta - self.log_delta_exterior)


def _interior_obj(ie: InnerEval, n: int):
    def F(t: float, theta: float) -> float:
        return max(n * math.log1p(-t), float(ie.log_modulus_polar(t, theta)))
    return F


def _exterior_obj(ie: InnerEval, n: int):
    # maximise min(n log|mu|, log|Theta(mu)|) with |mu| = 1/(1-t)
    def G(t: float, theta: float) -> float:
        e = t / (1 - t)
        return min(-n * math.log1p(-t), float(ie.log_modulus_exterior(e, theta)))
    return G


def _crossing_scores(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Per-column estimate of ``min_radius max(A, B)``.

    Where ``A - B`` changes sign between neighbouring radii the crossing
    value is linearly interpolated, which ranks rays far more reliably than
    the raw grid minimum.
    """
    A, B = np.broadcast_arrays(A, B)
    score = np.maximum(A, B).min(axis=0)
    D = A - B
    d0, d1 = D[:-1], D[1:]
    change = (d0 * d1 < 0) & np.isfinite(d0) & np.isfinite(d1)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(change, d0 / (d0 - d1), 0.0)
        val = A[:-1] + lam * (A[1:] - A[:-1])
    val = np.where(change, val, np.inf)
    return np.minimum(score, val.min(axis=0))


def _refine(F, t_grid, angles, i, j, rounds, sign):
    """Alternate golden-section searches along the ray and across angles.

    ``sign`` is +1 to minimise ``F`` and -1 to maximise it.
    """
    lo_u = math.log(t_grid[max(i - 1, 0)])
    hi_u = math.log(t_grid[i + 1]) if i + 1 < len(t_grid) else math.log1p(-1e-15)
    th_lo = angles[j - 1] if j > 0 else angles[j] - (angles[1] - angles[0])
    th_hi = angles[j + 1] if j + 1 < len(angles) else angles[j] + (angles[-1] - angles[-2])
    t_best, th_best = float(t_grid[i]), float(angles[j])
    val = sign * F(t_best, th_best)
    for _ in range(rounds):
        u, fu = golden_min(lambda u: sign * F(math.exp(u), th_best), lo_u, hi_u)
        if fu <= val:
            t_best, val = math.exp(u), fu
        th, fth = golden_min(lambda th: sign * F(t_best, th), th_lo, th_hi)
        if fth <= val:
            th_best, val = th, fth
        # second round works in a narrower window around the current point
        hw_u = 0.25 * (hi_u - lo_u)
        u0 = math.log(t_best)
        lo_u, hi_u = u0 - hw_u, min(u0 + hw_u, math.log1p(-1e-15))
        hw_th = 0.25 * (th_hi - th_lo)
        th_lo, th_hi = th_best - hw_th, th_best + hw_th
    return t_best, th_best, sign * val


def delta_n(ie: InnerEval, n: int, grid: DeltaGrid | GridParams | None = None) -> DeltaReport:
    """Estimate ``log delta_n`` from a polar grid plus local golden-section refinement.

    The interior infimum and the exterior supremum are searched separately;
    both values are reported.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not isinstance(grid, DeltaGrid):
        grid = DeltaGrid.build(ie, grid)
    p = grid.params
    t, angles = grid.t, grid.angles
    logr = np.log1p(-t)[:, None]
    warnings = []

    # interior: candidate lam = 0 gives log|Theta(0)|
    F_grid = np.maximum(n * logr, grid.H)
    theta0 = ie.log_theta0()
    grid_val = min(float(F_grid.min()), theta0)
    F = _interior_obj(ie, n)
    col = _crossing_scores(n * logr, grid.H)
    rays = np.argsort(col, kind="stable")[: p.top_rays]
    best = (theta0, 0j)
    for j in rays:
        i = int(np.argmin(F_grid[:, j]))
        if i == 0:
            warnings.append("interior minimum at the innermost grid radius")
        tb, thb, v = _refine(F, t, angles, i, int(j), p.rounds, +1)
        if v < best[0]:
            best = (v, (1 - tb) * complex(math.cos(thb), math.sin(thb)))
    log_delta, argmin = best

    # exterior: candidate mu = infinity gives min(inf, -log|Theta(0)|)
    G_grid = np.minimum(-n * logr, grid.H_ext)
    G = _exterior_obj(ie, n)
    col = _crossing_scores(n * logr, -grid.H_ext)
    rays = np.argsort(col, kind="stable")[: p.top_rays]
    sup = -theta0
    for j in rays:
        i = int(np.argmax(G_grid[:, j]))
        _, _, v = _refine(G, t, angles, i, int(j), p.rounds, -1)
        sup = max(sup, v)
    log_delta_ext = -sup

    if abs(log_delta - log_delta_ext) > 1e-4:
        warnings.append("interior and exterior estimates disagree")
    return DeltaReport(
        n=n,
        log_delta=log_delta,
        log_delta_exterior=log_delta_ext,
        grid_log_delta=grid_val,
        argmin=argmin,
        depth=ie.measure.depth,
        warnings=tuple(dict.fromkeys(warnings)),
        diagnostics={"n_radii": len(t), "n_angles": len(angles), "t_floor": p.t_floor},
    )


def delta_sweep(ie: InnerEval, ns, grid: DeltaGrid | None = None, threads: int = 1) -> list[DeltaReport]:
    grid = grid if isinstance(grid, DeltaGrid) else DeltaGrid.build(ie, grid, threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda n: delta_n(ie, n, grid), ns))
    return [delta_n(ie, n, grid) for n in ns]


def delta_n_atomic_ray(c: float, n: int) -> float:
    """``log delta_n`` for a single atom of mass ``c``, reduced to its ray.

    With ``s = 1 - r`` the crossing of ``n log(1-s)`` and ``-c(2-s)/s`` is unique.
    """
    if not c > 0 or n < 1:
        raise ValueError("need c > 0 and n >= 1")

    def h(v):
        s = math.exp(v)
        return n * math.log1p(-s) + c * (2 - s) / s

    lo, hi = -745.0, math.log1p(-1e-16)
    v = bisect_decreasing(h, lo, hi, iters=400)
    return n * math.log1p(-math.exp(v))


# ---------------------------------------------------------------------------
# witnesses, verification, operator bounds


@dataclass(frozen=True)
class Witness:
    t: float
    lam: complex
    log_theta: float
    log_omega: float

    @property
    def found(self) -> bool:
        return self.log_theta > self.log_omega


def witness_points(ie: InnerEval, omega, ts, rel_offsets=(0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)) -> list[Witness]:
    """Best point on ``|lam| = 1 + t`` near the support for each scheduled ``t``."""
    atoms = np.array(ie.measure.angles)
    offs = np.array(rel_offsets)
    offs = np.unique(np.concatenate([offs, -offs]))
    out = []
    for t in ts:
        t = float(t)
        angles = (atoms[:, None] + t * offs[None, :]).ravel()
        # |lam| = 1+t reflects to radius 1/(1+t), i.e. 1 - t/(1+t)
        vals = -ie.log_modulus_polar(t / (1 + t), angles)
        k = int(np.argmax(vals))
        lam = (1 + t) * complex(math.cos(angles[k]), math.sin(angles[k]))
        out.append(Witness(t, lam, float(vals[k]), math.log(omega(t))))
    return out


@dataclass
class TheoremReport:
    ns: list[int]
    log_delta: list[float]
    log_u: list[float]
    witnesses: list[int]
    running_min: list[float]
    improvements: int
    slack: float
    reports: list[DeltaReport] = field(repr=False, default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return bool(self.witnesses) and self.improvements >= 3

    def rows(self):
        for n, ld, lu in zip(self.ns, self.log_delta, self.log_u):
            yield n, ld, lu, lu + ld, int(2 * lu + ld <= math.log(self.slack))


def verify_theorem(ie: InnerEval, useq, N: int, grid=None, slack: float = 1.1,
                   threads: int = 1) -> TheoremReport:
    """Check ``u_n^2 delta_n <= slack`` along ``n <= N`` and track ``min u_n delta_n``."""
    if N > useq.N:
        raise ValueError("N exceeds the computed u-sequence")
    ns = list(range(1, N + 1))
    reports = delta_sweep(ie, ns, grid, threads)
    log_delta = [r.log_delta for r in reports]
    log_u = [useq.log_u_n(n) for n in ns]
    witnesses = [n for n, ld, lu in zip(ns, log_delta, log_u) if 2 * lu + ld <= math.log(slack)]
    running, improvements, cur = [], 0, math.inf
    for ld, lu in zip(log_delta, log_u):
        v = lu + ld
        if v < cur:
            if cur < math.inf:
                improvements += 1
            cur = v
        running.append(cur)
    diag = {}
    if not witnesses:
        diag["hint"] = "no n with u_n^2 delta_n <= slack; raise N or refine the grid"
        diag["best"] = min(2 * lu + ld for ld, lu in zip(log_delta, log_u))
    return TheoremReport(ns, log_delta, log_u, witnesses, running, improvements, slack, reports, diag)


@dataclass(frozen=True)
class NormBound:
    log_bound: float
    vacuous: bool


def snorm_lower_bound(report) -> NormBound:
    """``log(0.5 (1/delta_n - 1))`` from a report or a raw ``log delta_n``."""
    ld = report.log_delta if isinstance(report, DeltaReport) else float(report)
    if ld >= 0:
        return NormBound(-math.inf if ld == 0 else math.nan, True)
    # 1/delta - 1 = e^{-ld} (1 - e^{ld})
    lb = -ld + math.log1p(-math.exp(ld)) - math.log(2)
    return NormBound(lb, lb <= 0)


@dataclass
class UnitaryReport:
    eigen_angles: list[float]
    norms: list[float]
    max_deviation: float

    @property
    def ok(self) -> bool:
        return self.max_deviation < 1e-10


def unitary_sanity(E: ThinSet, m: int, n_max: int) -> UnitaryReport:
    """``||T^{-n}||`` for a unitary with spectrum sampled from E.

    The diagonal is conjugated by the unitary DFT matrix so the check does
    not reduce to reading off diagonal entries.
    """
    angles = E.sample_points(m)
    F = np.fft.fft(np.eye(m)) / math.sqrt(m)
    T_inv = F @ np.diag(np.exp(-1j * angles)) @ F.conj().T
    P = np.eye(m, dtype=complex)
    norms = []
    for _ in range(n_max):
        P = P @ T_inv
        norms.append(float(np.linalg.norm(P, 2)))
    dev = max(abs(x - 1) for x in norms) if norms else 0.0
    return UnitaryReport([float(a) for a in angles], norms, dev)


def atom_measure_for(E: ThinSet, mass: float = 1.0) -> SingularMeasure:
    """Single atom of the given mass at the leftmost point of E."""
    return SingularMeasure.atomic([(E.bounds()[0], mass)], support=E)


def omega_log(omega: MajorantOmega, t: float) -> float:
    return math.log(omega(t))
