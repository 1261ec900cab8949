"""Closed-form stationary profiles for one and two fractons.

Continuum formulas use centred coordinates x in (-L/2, L/2).  A geometry
of length L is sampled onto a chain of L + 1 sites (L height columns):
site i sits at x = i - 1 - L/2, so the two boundary sites carry the
delta-function charges at x = -L/2 and x = +L/2, and fractons at x = -+D/2
sit on sites 1 + (L -+ D)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import gammaln

from .chain import ChargeProfile, SpinState
from .errors import NumericalError, ValidationError

QUAD_TOL = 1e-8


def single_fracton_final(L: int, p: int) -> ChargeProfile:
    """Infinite-time profile of one ``+`` started at site ``p``: all charge on
    the two boundary sites, weighted to keep Q = 1 and P = p."""
    if L < 2:
        raise ValidationError("need L >= 2 for a single-fracton final state")
    if not 1 <= p <= L:
        raise ValidationError(f"fracton site {p} outside 1..{L}")
    m = np.zeros(L)
    m[0] = (L - p) / (L - 1)
    m[-1] = (p - 1) / (L - 1)
    return ChargeProfile(m, meta={"L": L, "p": p})


@dataclass(frozen=True)
class TwoFractonGeometry:
    L: float
    delta: float

    def __post_init__(self):
        if not 0 < self.delta < self.L:
            raise ValidationError(f"need 0 < delta < L, got delta={self.delta}, L={self.L}")

    @property
    def gas_size(self) -> float:
        """Holes (and particles) per gas: L/2 - delta/2."""
        return (self.L - self.delta) / 2

    @property
    def piston_width(self) -> float:
        """Standard deviation of the Gaussian piston weight."""
        return 0.5 * math.sqrt(self.L * self.delta / (self.L - self.delta))

    # lattice sampling -----------------------------------------------------

    def n_sites(self) -> int:
        self._require_lattice()
        return int(self.L) + 1

    def site_coordinates(self) -> np.ndarray:
        return np.arange(1, self.n_sites() + 1) - 1 - self.L / 2

    def fracton_sites(self) -> tuple[int, int]:
        self._require_lattice()
        i1 = 1 + int(self.gas_size)
        return i1, i1 + int(self.delta)

    def initial_state(self) -> SpinState:
        return SpinState.fractons(self.n_sites(), self.fracton_sites())

    def _require_lattice(self):
        if self.L != int(self.L) or self.delta != int(self.delta) or (int(self.L) - int(self.delta)) % 2:
            raise ValidationError("lattice sampling needs integer L, delta with L - delta even")


def _check_xi(geom: TwoFractonGeometry, xi: float) -> None:
    if not -geom.delta / 2 < xi < geom.delta / 2:
        raise ValidationError(f"piston position {xi} outside (-{geom.delta / 2}, {geom.delta / 2})")


def stationary_gas_densities(geom: TwoFractonGeometry, xi: float):
    """Uniform hole (red) and particle (blue) densities for a piston at ``xi``.

    Returns two vectorized functions of x.
    """
    _check_xi(geom, xi)
    n = geom.gas_size
    red = n / (geom.L / 2 + xi)
    blue = n / (geom.L / 2 - xi)

    def rho_red(x):
        return np.where(np.asarray(x) < xi, red, 0.0)

    def rho_blue(x):
        return np.where(np.asarray(x) > xi, blue, 0.0)

    return rho_red, rho_blue


def piston_weight(geom: TwoFractonGeometry, xi):
    """Gaussian stationary distribution of the piston position."""
    L, d = geom.L, geom.delta
    return math.sqrt(2 * (L - d) / (d * L * math.pi)) * np.exp(-2 * np.square(xi) * (L - d) / (L * d))


def detailed_balance_ratio(geom: TwoFractonGeometry, xi: float) -> float:
    """P(xi+1 -> xi) / P(xi -> xi+1) = W(xi) / W(xi+1) for the piston gas.

    Exceeds one for xi > 0: the piston is pushed back to the centre.
    """
    _check_xi(geom, xi)
    _check_xi(geom, xi + 1)
    h, hl = geom.delta / 2, geom.L / 2
    return (hl - xi) * (h + xi) / ((h - xi) * (hl + xi))


def _quad(f, a, b):
    val, err = integrate.quad(f, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    if not np.isfinite(val) or err > 10 * QUAD_TOL:
        raise NumericalError(f"quadrature did not converge on [{a}, {b}] (error estimate {err:.2g})")
    return val


def _red_kernel(geom, xi):
    return piston_weight(geom, xi) * geom.gas_size / (geom.L / 2 + xi)


def _blue_kernel(geom, xi):
    return piston_weight(geom, xi) * geom.gas_size / (geom.L / 2 - xi)


def final_gas_densities(geom: TwoFractonGeometry, x: float) -> tuple[float, float]:
    """Piston-averaged stationary hole and particle densities at ``x``."""
    h = geom.delta / 2
    if x < -h:
        red = _quad(lambda s: _red_kernel(geom, s), -h, h)
    elif x < h:
        red = _quad(lambda s: _red_kernel(geom, s), x, h)
    else:
        red = 0.0
    if x < -h:
        blue = 0.0
    elif x < h:
        blue = _quad(lambda s: _blue_kernel(geom, s), -h, x)
    else:
        blue = _quad(lambda s: _blue_kernel(geom, s), -h, h)
    return red, blue


def interior_charge_density(geom: TwoFractonGeometry, x):
    """Continuum charge density strictly inside the chain."""
    x = np.asarray(x, dtype=float)
    L = geom.L
    inside = np.abs(x) < geom.delta / 2
    xs = np.where(inside, x, 0.0)
    val = piston_weight(geom, xs) * geom.gas_size * L / (L * L / 4 - xs * xs)
    return np.where(inside, val, 0.0)


def boundary_charges(geom: TwoFractonGeometry) -> tuple[float, float]:
    """Charge on the left end (from the hole gas) and right end (from the particle gas)."""
    h = geom.delta / 2
    left = 1.0 - _quad(lambda s: _red_kernel(geom, s), -h, h)
    right = 1.0 - _quad(lambda s: _blue_kernel(geom, s), -h, h)
    return left, right


def boundary_charge(geom: TwoFractonGeometry) -> float:
    """Charge collected on each end site."""
    return boundary_charges(geom)[0]


def two_fracton_final_profile(geom: TwoFractonGeometry) -> ChargeProfile:
    """Stationary profile sampled on the ``L + 1``-site chain."""
    x = geom.site_coordinates()
    m = interior_charge_density(geom, x)
    m[0], m[-1] = boundary_charges(geom)
    return ChargeProfile(m, meta={"L": geom.L, "delta": geom.delta, "boundary_charge": m[0]})


def conservation_totals(geom: TwoFractonGeometry) -> tuple[float, float]:
    """Total charge and centred dipole of the continuum stationary state."""
    h = geom.delta / 2
    left, right = boundary_charges(geom)
    q = _quad(lambda s: float(interior_charge_density(geom, s)), -h, h) + left + right
    p = _quad(lambda s: s * float(interior_charge_density(geom, s)), -h, h) + (right - left) * geom.L / 2
    return q, p


def peak_fwhm(geom: TwoFractonGeometry) -> float:
    """Full width at half maximum of the continuum central peak."""
    peak = float(interior_charge_density(geom, 0.0))
    half = brentq(lambda s: float(interior_charge_density(geom, s)) - peak / 2, 0.0, geom.delta / 2 - 1e-12)
    return 2 * half


# --------------------------------------------------------------------------
# exact lattice stationary state


def lattice_two_fracton_profile(L: int, i1: int, i2: int, piston: bool = False) -> ChargeProfile:
    """Exact flat average over the three-site fragment of ``+`` at i1 < i2.

    The fragment is every arrangement of the i1 - 1 holes and L - i2
    particles on the L - 1 interior columns with all holes left of all
    particles and at least one empty column between them.  With
    ``piston=True`` each arrangement is weighted by the number of empty
    columns in that gap, which is the stationary law of the piston gas.
    """
    if not 1 < i1 < i2 < L:
        raise ValidationError(f"need 1 < i1 < i2 < L, got {i1}, {i2}, L={L}")
    M = L - 1
    nh, npart = i1 - 1, L - i2

    def lchoose(n, k):
        return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)

    # a: column of the last hole, b: column of the first particle, b >= a + 2
    a = np.arange(nh, M + 1)[:, None]
    b = np.arange(1, M + 1)[None, :]
    ok = (b >= a + 2) & (b <= M - npart + 1)
    logw = np.where(ok, lchoose(a - 1, nh - 1) + lchoose(M - b, npart - 1), -np.inf)
    if piston:
        logw = logw + np.where(ok, np.log(np.maximum(b - a - 1, 1)), 0.0)
    w = np.exp(logw - logw[ok].max())
    w /= w.sum()
    wa = w.sum(axis=1)  # law of the last hole
    wb = w.sum(axis=0)  # law of the first particle
    cols = np.arange(1, M + 1)
    p_hole = np.zeros(M + 1)
    p_part = np.zeros(M + 1)
    for k, av in enumerate(range(nh, M + 1)):
        if wa[k] == 0:
            continue
        p_hole[av] += wa[k]
        if av > 1 and nh > 1:
            p_hole[1:av] += wa[k] * (nh - 1) / (av - 1)
    for bv in range(1, M + 1):
        if wb[bv - 1] == 0:
            continue
        p_part[bv] += wb[bv - 1]
        if bv < M and npart > 1:
            p_part[bv + 1:] += wb[bv - 1] * (npart - 1) / (M - bv)
    h = np.concatenate(([0.0], 1.0 + p_part[cols] - p_hole[cols], [2.0]))
    return ChargeProfile(np.diff(h), meta={"L": L, "i1": i1, "i2": i2, "piston": piston})
