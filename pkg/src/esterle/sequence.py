"""Roots of ``omega(t) = (1+t)**n`` and the growth gauge ``u_n``.

All ``u_n`` values are kept as logarithms: ``log u_n = (n/2) log(1 + t_{n+1})``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

from scipy.optimize import brentq

from .majorant import MajorantOmega, RuleStalled
from .thinsets import PrecisionError

OmegaLike = Union[MajorantOmega, Callable[[float], float]]


class RootError(RuntimeError):
    pass


class IdentityError(AssertionError):
    pass


def _log_omega(omega: OmegaLike, t: float) -> float:
    return math.log(omega(t))


def _gap(omega: OmegaLike, n: int, t: float) -> float:
    return _log_omega(omega, t) - n * math.log1p(t)


def bracket_tn(omega: OmegaLike, n: int) -> tuple[float, float]:
    """Return ``(lo, hi)`` with ``g(lo) > 0 >= g(hi)``, ``hi = 2 lo``."""
    t = omega.knots_t[0] if isinstance(omega, MajorantOmega) else 1.0
    try:
        if _gap(omega, n, t) > 0:
            # root lies right of t: grow until the sign flips
            for _ in range(2000):
                if _gap(omega, n, 2 * t) <= 0:
                    return t, 2 * t
                t *= 2
        else:
            for _ in range(2000):
                lo = t / 2
                if lo < 1e-300:
                    break
                if _gap(omega, n, lo) > 0:
                    return lo, t
                t = lo
    except (PrecisionError, RuleStalled) as exc:
        raise RootError(f"root below certifiable range for n = {n}") from exc
    raise RootError(f"root below certifiable range for n = {n}")


def solve_tn(omega: OmegaLike, n: int, rel_tol: float = 1e-10) -> float:
    """Unique root of ``log omega(t) = n log(1+t)``.

    ``g(t) = log omega(t) - n log1p(t)`` is strictly decreasing, so after
    bracketing a sign change the root is found on ``log t``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = bracket_tn(omega, n)
    if isinstance(omega, MajorantOmega) and lo >= omega.knots_t[0]:
        # plateau: omega is the constant d_0 there
        t = math.expm1(math.log(omega.plateau) / n)
    else:
        s = brentq(lambda s: _gap(omega, n, math.exp(s)), math.log(lo), math.log(hi),
                   xtol=1e-300, rtol=4 * 2.0 ** -52, maxiter=500)
        t = math.exp(s)
    resid = abs(_gap(omega, n, t))
    if resid > rel_tol * n * math.log1p(t):
        raise RootError(f"root residual {resid:.3e} above tolerance for n = {n}")
    return t


@dataclass
class EsterleSequence:
    """``roots[i]`` is ``t_{i+1}``; ``log_u[i]`` is ``log u_{i+1}``."""

    roots: list[float]
    log_u: list[float]
    source: OmegaLike = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.log_u)

    def t(self, n: int) -> float:
        return self.roots[n - 1]

    def log_u_n(self, n: int) -> float:
        return self.log_u[n - 1]

    def identity_residual(self, n: int) -> float:
        """``log u_n - (n/(2n+2)) log omega(t_{n+1})``."""
        return self.log_u_n(n) - n / (2 * n + 2) * _log_omega(self.source, self.t(n + 1))

    def root_residual(self, n: int) -> float:
        """Relative residual ``|omega(t_n) - (1+t_n)^n| / (1+t_n)^n``."""
        return abs(math.expm1(_gap(self.source, n, self.t(n))))

    def rows(self):
        for n in range(1, self.N + 1):
            lu = self.log_u_n(n)
            u = math.exp(lu) if lu < 709.0 else math.inf
            yield n, self.t(n), lu, u, self.identity_residual(n)


def u_sequence(omega: OmegaLike, N: int, rel_tol: float = 1e-10, threads: int = 1) -> EsterleSequence:
    """Roots ``t_1..t_{N+1}`` and ``log u_1..log u_N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    # the deepest root fixes how far omega must be realised; after that all
    # solves are read-only and can run concurrently
    deepest = solve_tn(omega, N + 1, rel_tol)
    if isinstance(omega, MajorantOmega):
        omega.extend(bracket_tn(omega, N + 1)[0])
    ns = range(1, N + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            roots = list(pool.map(lambda n: solve_tn(omega, n, rel_tol), ns))
    else:
        roots = [solve_tn(omega, n, rel_tol) for n in ns]
    roots.append(deepest)
    if any(b >= a for a, b in zip(roots, roots[1:])):
        raise RootError("roots are not strictly decreasing")
    log_u = [0.5 * n * math.log1p(roots[n]) for n in ns]
    seq = EsterleSequence(roots, log_u, omega)
    for n in ns:
        r = seq.identity_residual(n)
        if abs(r) > 10 * rel_tol * max(1.0, abs(seq.log_u_n(n))):
            raise IdentityError(f"u_n identity fails at n = {n}: residual {r:.3e}")
    return seq
