"""Relaxation-time sweeps and power-law fits.

A sweep measures the crossing time tau of an ensemble observable at a
ladder of system sizes:

* ``single``: one ``+`` at the chain centre, tau is when the width r(t)
  about the initial centre reaches L/4;
* ``double``: two ``+`` charges a distance Delta apart, placed symmetrically
  on a chain with Delta/L fixed, tau is when the separation r'(t) drops to
  Delta/2.

Error bars come from splitting each ensemble into independent seed groups
and measuring tau on every group separately.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .automaton import EvolutionConfig, METRICS, crossing_time, geometric_schedule, run_ensemble_groups
from .chain import SpinState
from .errors import NotCrossedError, NumericalError, ValidationError

MIN_SINGLE_L = 7
MIN_DELTA = 3
# tau is roughly 0.2 L^2 (single) and 0.6 Delta^2 (double) steps; the first
# attempt runs this many scale^2 steps and doubles on a miss
DEFAULT_BUDGET = {"single": 1.0, "double": 2.0}


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    exponent_stderr: float
    r_squared: float
    n_points: int

    def predict(self, scale):
        return self.prefactor * np.power(scale, self.exponent)

    def to_dict(self) -> dict:
        return asdict(self)


def powerlaw_fit(points: Iterable[Sequence[float]]) -> PowerLawFit:
    """Ordinary least squares of log tau on log scale.

    ``points`` holds (scale, tau) pairs; extra trailing fields are ignored,
    so ``TauPoint`` objects can be passed directly.
    """
    pts = [tuple(float(v) for v in tuple(p)[:2]) for p in points]
    if len(pts) < 4:
        raise ValidationError(f"a power-law fit needs at least 4 points, got {len(pts)}")
    x, y = np.array(pts).T
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)) or np.any(x <= 0) or np.any(y <= 0):
        raise ValidationError("power-law fit needs finite positive scales and times")
    if np.ptp(x) == 0:
        raise ValidationError("power-law fit needs at least two distinct scales")
    lx, ly = np.log(x), np.log(y)
    n = len(lx)
    mx, my = lx.mean(), ly.mean()
    sxx = float(((lx - mx) ** 2).sum())
    slope = float(((lx - mx) * (ly - my)).sum() / sxx)
    icpt = my - slope * mx
    resid = ly - (icpt + slope * lx)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - my) ** 2).sum())
    stderr = math.sqrt(ss_res / (n - 2) / sxx)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if not math.isfinite(stderr):
        raise NumericalError("power-law fit produced a non-finite standard error")
    return PowerLawFit(slope, float(math.exp(icpt)), stderr, r2, n)


@dataclass(frozen=True)
class TauPoint:
    scale: int
    tau: float
    tau_err: float
    L: int
    positions: tuple[int, ...]
    n_steps: int
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def __iter__(self):
        # unpacks as (scale, tau) for powerlaw_fit
        return iter((self.scale, self.tau))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["positions"] = list(self.positions)
        return d


def sweep_geometry(kind: str, scale: int, ratio: float = 0.5) -> tuple[SpinState, str, float]:
    """Initial state, metric name and threshold for one sweep point."""
    scale = int(scale)
    if kind == "single":
        if scale < MIN_SINGLE_L:
            raise ValidationError(f"L={scale} is too small for the width metric (need L >= {MIN_SINGLE_L})")
        return SpinState.fractons(scale, ((scale + 1) // 2,)), "width_r", scale / 4
    if kind == "double":
        if scale < MIN_DELTA:
            raise ValidationError(f"Delta={scale} is too small for the separation metric (need >= {MIN_DELTA})")
        if not 0 < ratio < 1:
            raise ValidationError("Delta/L ratio must lie in (0, 1)")
        L = int(round(scale / ratio))
        # symmetric placement i1 + i2 = L + 1 needs L + 1 - Delta even
        if (L + 1 - scale) % 2:
            L += 1
        i1 = (L + 1 - scale) // 2
        if i1 < 2:
            raise ValidationError(f"Delta={scale} leaves no room for the boundary gases at L={L}")
        return SpinState.fractons(L, (i1, i1 + scale)), "separation_r_prime", scale / 2
    raise ValidationError(f"unknown sweep kind {kind!r}; expected 'single' or 'double'")


def _group_taus(config, metric, threshold, groups, workers):
    fn, rising = METRICS[metric]
    pooled, subs = run_ensemble_groups(config, groups, workers)

    def tau_of(res):
        t, v = res.metric_series(lambda prof: fn(prof, config))
        return crossing_time(t, v, threshold, rising)

    return tau_of(pooled), [tau_of(s) for s in subs]


def measure_point(kind: str, scale: int, ratio: float = 0.5, n_realizations: int = 512, seed: int = 0,
                  groups: int = 8, budget: float | None = None, max_doublings: int = 3,
                  gate_width: int = 3, schedule_ratio: float = 1.02, workers: int = 1) -> TauPoint:
    """tau at one scale; the step budget doubles until every seed group crosses."""
    state, metric, threshold = sweep_geometry(kind, scale, ratio)
    if groups < 8:
        raise ValidationError("tau error bars need at least 8 seed groups")
    budget = DEFAULT_BUDGET[kind] if budget is None else budget
    n_steps = max(10, int(math.ceil(budget * scale * scale)))
    positions = tuple(i + 1 for i, s in enumerate(state.sites) if s)
    for _ in range(max_doublings + 1):
        cfg = EvolutionConfig(state, gate_width, n_steps, n_realizations,
                              geometric_schedule(n_steps, schedule_ratio), seed)
        try:
            tau, taus = _group_taus(cfg, metric, threshold, groups, workers)
        except NotCrossedError:
            n_steps *= 2
            continue
        err = float(np.std(taus, ddof=1) / math.sqrt(len(taus)))
        return TauPoint(int(scale), tau, err, state.L, positions, n_steps)
    return TauPoint(int(scale), float("nan"), float("nan"), state.L, positions, n_steps // 2,
                    "not_crossed", f"threshold {threshold:g} not reached within {n_steps // 2} steps")


def tau_sweep(kind: str, scales: Sequence[int], ratio: float = 0.5, seed: int = 0, n_realizations: int = 512,
              groups: int = 8, budget: float | None = None, max_doublings: int = 3, gate_width: int = 3,
              workers: int = 1) -> list[TauPoint]:
    """tau at each scale.  Invalid scales raise before any simulation; a
    scale whose threshold is never crossed is reported with status
    ``not_crossed`` and the sweep carries on."""
    scales = [int(s) for s in scales]
    for s in scales:
        sweep_geometry(kind, s, ratio)
    out = []
    for s in scales:
        # each scale gets its own stream family so sweeps can be extended
        point_seed = int(np.random.SeedSequence([seed & (2**64 - 1), s]).generate_state(2, np.uint64)[0] >> 1)
        out.append(measure_point(kind, s, ratio, n_realizations, point_seed, groups, budget,
                                 max_doublings, gate_width, workers=workers))
    return out


def fit_sweep(points: Sequence[TauPoint]) -> PowerLawFit:
    return powerlaw_fit([p for p in points if p.ok])
