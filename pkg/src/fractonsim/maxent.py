"""Independent-site maximum-entropy profile for a (Q, P) sector.

Each site carries its own distribution over s in {-1, 0, +1}; maximizing
the entropy subject to the mean charge and mean dipole gives

    p_i(s) = exp(s * a_i) / (1 + 2 cosh a_i),   a_i = lam_q + x_i * lam_p,

so <S_i> = 2 sinh a_i / (1 + 2 cosh a_i).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull

from .chain import ChargeProfile, SectorLabel
from .errors import ConvergenceError, InfeasibleError, ValidationError


@dataclass(frozen=True)
class LagrangeMultipliers:
    lambda_q: float
    lambda_p: float

    def __post_init__(self):
        if not (np.isfinite(self.lambda_q) and np.isfinite(self.lambda_p)):
            raise ValidationError("multipliers must be finite")


@dataclass
class SiteDistribution:
    """``probs[i] = (p_i(-), p_i(0), p_i(+))``."""

    probs: np.ndarray

    def mean_charge(self) -> np.ndarray:
        return self.probs[:, 2] - self.probs[:, 0]

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())


def _arguments(L: int, m: LagrangeMultipliers) -> np.ndarray:
    return m.lambda_q + np.arange(1, L + 1) * m.lambda_p


def distribution_from_multipliers(L: int, m: LagrangeMultipliers) -> SiteDistribution:
    a = _arguments(L, m)
    # shift by |a| so that large multipliers saturate instead of overflowing
    b = np.abs(a)
    w = np.stack([np.exp(-a - b), np.exp(-b), np.exp(a - b)], axis=1)
    return SiteDistribution(w / w.sum(axis=1, keepdims=True))


def _site_moments(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean charge and its derivative d<S>/da per site, overflow-safe."""
    ea = np.exp(-np.abs(a))
    # 2 sinh a / (1 + 2 cosh a) rewritten with e^{-|a|}
    denom = ea + 1 + ea * ea
    mean = np.sign(a) * (1 - ea * ea) / denom
    # derivative: (2 cosh a + 4) / (1 + 2 cosh a)^2
    deriv = (ea * (1 + ea * ea) + 4 * ea * ea) / denom**2
    return mean, deriv


def constraint_residuals(L: int, label, m: LagrangeMultipliers) -> tuple[float, float]:
    q, p = SectorLabel(*label)
    x = np.arange(1, L + 1)
    mean, _ = _site_moments(_arguments(L, m))
    return float(mean.sum() - q), float(mean @ x - p)


def linearized_multipliers(L: int, label, exact: bool = False):
    """Small-(Q, P) solution of the constraint equations.

    With ``exact=True`` the pair is returned as ``Fraction`` values.
    """
    q, p = SectorLabel(*label)
    if L < 2:
        raise ValidationError("linearized multipliers need L >= 2")
    rational = all(isinstance(v, (int, np.integer, Fraction)) for v in (q, p))
    if exact and not rational:
        raise ValidationError("exact multipliers need integer or Fraction targets")
    # real-valued targets (scaled sectors) fall back to floats
    num = Fraction if rational else float
    lam_q = num(6 * L * q + 3 * q - 9 * p) / (L * (L - 1))
    lam_p = num(-9 * (L * q + q - 2 * p)) / (L * (L * L - 1))
    if exact:
        return lam_q, lam_p
    return LagrangeMultipliers(float(lam_q), float(lam_p))


@lru_cache(maxsize=None)
def _extremal_points(L: int) -> np.ndarray:
    # For each charge Q, the smallest dipole puts +'s leftmost and -'s rightmost.
    pts = []
    x = np.arange(1, L + 1)
    for n_plus in range(L + 1):
        for n_minus in range(L + 1 - n_plus):
            s = np.zeros(L, dtype=int)
            s[:n_plus] = 1
            if n_minus:
                s[L - n_minus:] = -1
            pts.append((s.sum(), s @ x))
            # mirror image: same charge, dipole (L+1)Q - P
            pts.append((s.sum(), (L + 1) * s.sum() - s @ x))
    return np.unique(np.array(pts, dtype=float), axis=0)


def is_strictly_feasible(L: int, label, margin: float = 1e-9) -> bool:
    """True iff (Q, P) is interior to the convex hull of all basis states."""
    q, p = SectorLabel(*label)
    pts = _extremal_points(L)
    if L < 2:
        return False
    hull = ConvexHull(pts)
    return bool(np.all(hull.equations[:, :2] @ np.array([q, p], dtype=float) + hull.equations[:, 2] < -margin))


def solve_multipliers(L: int, label, tol: float = 1e-10, max_iter: int = 100) -> LagrangeMultipliers:
    """Newton iteration on the two constraint equations, seeded by the
    linearized solution, halving the step whenever the residual grows."""
    q, p = SectorLabel(*label)
    if not tol > 0 or max_iter < 1:
        raise ValidationError("need tol > 0 and max_iter >= 1")
    if not is_strictly_feasible(L, (q, p)):
        raise InfeasibleError(f"(Q, P) = ({q}, {p}) is not strictly inside the realizable region for L={L}")
    x = np.arange(1, L + 1, dtype=float)
    # work in centred dipole coordinates for conditioning; map back at the end
    xc = x - x.mean()
    pc = p - q * x.mean()
    seed = linearized_multipliers(L, (q, p))
    lam = np.array([seed.lambda_q + x.mean() * seed.lambda_p, seed.lambda_p])

    def residual(v):
        mean, deriv = _site_moments(v[0] + xc * v[1])
        r = np.array([mean.sum() - q, mean @ xc - pc])
        jac = np.array([[deriv.sum(), deriv @ xc], [deriv @ xc, deriv @ (xc * xc)]])
        return r, jac

    r, jac = residual(lam)
    norm = np.abs(r).max()
    for _ in range(max_iter):
        if norm < tol:
            break
        step = np.linalg.solve(jac, -r)
        t = 1.0
        while True:
            trial = lam + t * step
            r_new, jac_new = residual(trial)
            if np.abs(r_new).max() < norm or t < 1e-12:
                break
            t *= 0.5
        lam, r, jac, norm = trial, r_new, jac_new, np.abs(r_new).max()
    else:
        if norm >= tol:
            raise ConvergenceError(f"Newton did not converge for L={L}, (Q, P)=({q}, {p}); residual {norm:.3g}")
    if norm >= tol:
        raise ConvergenceError(f"Newton did not converge for L={L}, (Q, P)=({q}, {p}); residual {norm:.3g}")
    out = LagrangeMultipliers(float(lam[0] - x.mean() * lam[1]), float(lam[1]))
    res = constraint_residuals(L, (q, p), out)
    if max(abs(res[0]), abs(res[1])) >= tol:
        # mapping back to 1-based coordinates lost precision; polish there
        out = _polish(L, q, p, out, tol)
    return out


def _polish(L, q, p, m, tol):
    x = np.arange(1, L + 1, dtype=float)
    lam = np.array([m.lambda_q, m.lambda_p])
    for _ in range(20):
        mean, deriv = _site_moments(lam[0] + x * lam[1])
        r = np.array([mean.sum() - q, mean @ x - p])
        if np.abs(r).max() < tol:
            return LagrangeMultipliers(float(lam[0]), float(lam[1]))
        jac = np.array([[deriv.sum(), deriv @ x], [deriv @ x, deriv @ (x * x)]])
        lam = lam + np.linalg.solve(jac, -r)
    raise ConvergenceError(f"residual polish failed for L={L}, (Q, P)=({q}, {p})")


def exact_profile(L: int, m: LagrangeMultipliers) -> ChargeProfile:
    mean, _ = _site_moments(_arguments(L, m))
    return ChargeProfile(mean, meta={"lambda_q": m.lambda_q, "lambda_p": m.lambda_p})


def linear_profile(L: int, m: LagrangeMultipliers) -> ChargeProfile:
    """Small-multiplier profile <S_i> = (2/3)(lam_q + x_i lam_p)."""
    return ChargeProfile(2.0 / 3.0 * _arguments(L, m), meta={"lambda_q": m.lambda_q, "lambda_p": m.lambda_p})
