"""Monte Carlo automaton dynamics on spin-1 chains.

One time step applies ``round(L/n)`` gates, each at an independent,
uniformly random window (placements may overlap).  Realization ``j`` of
an ensemble draws from its own stream seeded by ``(master_seed, j)``, and
all ensemble sums are integer-valued, so results do not depend on how
realizations are split across workers.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .chain import ChargeProfile, SpinState, dipole_moment, total_charge
from .errors import NotCrossedError, ValidationError
from .gates import GateClassTable, apply_random_gate, build_class_table


def gates_per_step(L: int, n: int) -> int:
    return max(1, int(math.floor(L / n + 0.5)))


def realization_seeds(master_seed: int, start: int, stop: int) -> np.ndarray:
    """32-bit seeds for realizations ``start..stop-1``."""
    return np.array(
        [np.random.SeedSequence([master_seed & (2**64 - 1), j]).generate_state(1)[0] for j in range(start, stop)],
        dtype=np.uint32,
    )


def geometric_schedule(n_steps: int, ratio: float = 1.03, first: int = 1) -> list[int]:
    """Snapshot times 0, first, ... growing by ``ratio`` (at least +1), ending at n_steps."""
    times = {0, n_steps}
    t = float(max(first, 1))
    while t < n_steps:
        times.add(int(round(t)))
        t = max(t * ratio, t + 1)
    return sorted(x for x in times if x <= n_steps)


# --------------------------------------------------------------------------
# compiled kernels

_RAND_MAX = 2**31 - 1


@njit(cache=True)
def _apply_gates(state, n, n_gates, class_index, offsets, members, digits):
    nwin = state.shape[0] - n + 1
    for _ in range(n_gates):
        # one draw serves placement and member choice; modulo bias < 1e-7
        r = np.random.randint(0, _RAND_MAX)
        start = r % nwin
        code = 0
        mult = 1
        for k in range(n):
            code += (state[start + k] + 1) * mult
            mult *= 3
        c = class_index[code]
        lo = offsets[c]
        size = offsets[c + 1] - lo
        if size > 1:
            new = members[lo + (r // nwin) % size]
            for k in range(n):
                state[start + k] = digits[new, k]


@njit(cache=True)
def _ensemble_kernel(initial, n, n_gates, n_steps, record_times, seeds,
                     class_index, offsets, members, digits,
                     win_start, win_every):
    L = initial.shape[0]
    nrec = record_times.shape[0]
    sums = np.zeros((nrec, L), np.int64)
    sq = np.zeros((nrec, L), np.int64)
    wsum = np.zeros(L, np.int64)
    wsq = np.zeros(L, np.int64)
    acc = np.zeros(L, np.int64)
    for j in range(seeds.shape[0]):
        np.random.seed(seeds[j])
        state = initial.copy()
        acc[:] = 0
        r = 0
        for t in range(n_steps + 1):
            if t > 0:
                _apply_gates(state, n, n_gates, class_index, offsets, members, digits)
            while r < nrec and record_times[r] == t:
                for i in range(L):
                    sums[r, i] += state[i]
                    sq[r, i] += state[i] * state[i]
                r += 1
            if win_start >= 0 and t >= win_start and (t - win_start) % win_every == 0:
                for i in range(L):
                    acc[i] += state[i]
        for i in range(L):
            wsum[i] += acc[i]
            wsq[i] += acc[i] * acc[i]
    return sums, sq, wsum, wsq


@njit(cache=True)
def _trajectory_average_kernel(initial, n, n_gates, n_steps, burn_in, seed,
                               class_index, offsets, members, digits):
    np.random.seed(seed)
    state = initial.copy()
    L = state.shape[0]
    acc = np.zeros(L, np.int64)
    for t in range(1, n_steps + 1):
        _apply_gates(state, n, n_gates, class_index, offsets, members, digits)
        if t > burn_in:
            for i in range(L):
                acc[i] += state[i]
    return acc


# --------------------------------------------------------------------------
# configuration and results


@dataclass
class EvolutionConfig:
    initial_state: SpinState
    gate_width: int = 3
    n_steps: int = 1000
    n_realizations: int = 100
    record_times: Sequence[int] | None = None
    master_seed: int = 0
    # late-time window: per-realization average of snapshots taken every
    # ``window_every`` steps from ``window_start`` to n_steps
    window_start: int | None = None
    window_every: int = 1

    def __post_init__(self):
        if isinstance(self.initial_state, str):
            self.initial_state = SpinState.from_string(self.initial_state)
        if self.gate_width not in (3, 4):
            raise ValidationError(f"gate_width must be 3 or 4, got {self.gate_width}")
        if self.L < self.gate_width:
            raise ValidationError(f"chain of {self.L} sites is shorter than a {self.gate_width}-site gate")
        if self.n_realizations < 1:
            raise ValidationError("n_realizations must be >= 1")
        if self.n_steps < 0:
            raise ValidationError("n_steps must be >= 0")
        times = [self.n_steps] if self.record_times is None else sorted(set(int(t) for t in self.record_times))
        if times and (times[0] < 0 or times[-1] > self.n_steps):
            raise ValidationError(f"record_times must lie in [0, {self.n_steps}]")
        self.record_times = times
        if self.window_start is not None:
            if not 0 <= self.window_start <= self.n_steps:
                raise ValidationError("window_start must lie in [0, n_steps]")
            if self.window_every < 1:
                raise ValidationError("window_every must be >= 1")

    @property
    def L(self) -> int:
        return self.initial_state.L

    def window_samples(self) -> int:
        if self.window_start is None:
            return 0
        return (self.n_steps - self.window_start) // self.window_every + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["initial_state"] = str(self.initial_state)
        d["L"] = self.L
        return d


def _profile_from_sums(s, s2, count: int, meta=None) -> ChargeProfile:
    mean = s / count
    if count > 1:
        var = (s2 - s * s / count) / (count - 1)
        err = np.sqrt(np.maximum(var, 0.0) / count)
    else:
        err = np.zeros_like(mean)
    return ChargeProfile(mean, err, sample_count=count, meta=dict(meta or {}))


@dataclass
class EnsembleResult:
    config: EvolutionConfig
    profiles: dict[int, ChargeProfile]
    window_profile: ChargeProfile | None = None
    engine: str = "automaton"
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> list[int]:
        return sorted(self.profiles)

    def final(self) -> ChargeProfile:
        return self.profiles[self.times[-1]]

    def metric_series(self, metric: Callable[[ChargeProfile], float]) -> tuple[np.ndarray, np.ndarray]:
        t = np.array(self.times, dtype=float)
        return t, np.array([metric(self.profiles[k]) for k in self.times])

    def save(self, out_dir: str | Path, x0: float | None = None) -> Path:
        """Write ``meta.json``, ``profile_t<step>.csv`` per snapshot and ``metrics.csv``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        q = total_charge(self.config.initial_state)
        p = dipole_moment(self.config.initial_state)
        x0 = charge_center(self.config.initial_state) if x0 is None else x0
        meta = {"engine": self.engine, "config": self.config.to_dict(), **self.meta}
        (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        rows = ["t,r,r_prime"]
        for t in self.times:
            prof = self.profiles[t]
            prof.check_conservation(q, p, tol=1e-9 * prof.L)
            prof.to_csv(out / f"profile_t{t}.csv")
            r = width_r(prof, x0, strict=False)
            rows.append(f"{t},{r!r},{separation_r_prime(prof)!r}")
        (out / "metrics.csv").write_text("\n".join(rows) + "\n")
        if self.window_profile is not None:
            self.window_profile.to_csv(out / "profile_window.csv")
        return out


def charge_center(state: SpinState) -> float:
    q = total_charge(state)
    return dipole_moment(state) / q if q else (state.L + 1) / 2


# --------------------------------------------------------------------------
# public operations


def evolve_one_step(state: SpinState, table: GateClassTable, rng: np.random.Generator) -> SpinState:
    """One time step: ``round(L/n)`` gates at independent uniform placements."""
    n = table.window_width
    for _ in range(gates_per_step(state.L, n)):
        start = int(rng.integers(1, state.L - n + 2))
        state = apply_random_gate(state, start, table, rng)
    return state


def _kernel_args(config: EvolutionConfig):
    table = build_class_table(config.gate_width)
    return (
        config.initial_state.as_array(),
        config.gate_width,
        gates_per_step(config.L, config.gate_width),
        config.n_steps,
        np.asarray(config.record_times, dtype=np.int64),
    ), table.kernel_arrays()


def _run_chunk(config: EvolutionConfig, start: int, stop: int):
    head, tables = _kernel_args(config)
    seeds = realization_seeds(config.master_seed, start, stop)
    win = -1 if config.window_start is None else config.window_start
    return _ensemble_kernel(*head, seeds, *tables, win, config.window_every)


def run_chunks(fn, config, workers: int):
    """Split realizations into contiguous chunks, run ``fn(config, a, b)`` on each
    and add the integer partial sums in chunk order."""
    R = config.n_realizations
    if workers <= 1 or R < 2:
        return fn(config, 0, R)
    bounds = np.linspace(0, R, min(workers, R) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [config] * (len(bounds) - 1), bounds[:-1], bounds[1:]))
    return tuple(sum(p[k] for p in parts) for k in range(len(parts[0])))


def summarize(config: EvolutionConfig, sums, sq, wsum, wsq, engine: str) -> EnsembleResult:
    R = config.n_realizations
    profiles = {t: _profile_from_sums(sums[k], sq[k], R, {"t": t}) for k, t in enumerate(config.record_times)}
    window = None
    if config.window_start is not None:
        m = config.window_samples()
        # per-realization window means are wsum_j / m; their spread gives the error
        window = _profile_from_sums(wsum / m, wsq / m**2, R, {"window_start": config.window_start, "window_every": config.window_every, "samples_per_realization": m})
    return EnsembleResult(config, profiles, window, engine=engine)


def run_ensemble(config: EvolutionConfig, workers: int = 1) -> EnsembleResult:
    """Evolve ``n_realizations`` independent trajectories and average the charges."""
    sums, sq, wsum, wsq = run_chunks(_run_chunk, config, workers)
    return summarize(config, sums, sq, wsum, wsq, "automaton")


def _group_bounds(R: int, groups: int) -> np.ndarray:
    if not 1 <= groups <= R:
        raise ValidationError(f"cannot split {R} realizations into {groups} groups")
    return np.linspace(0, R, groups + 1).astype(int)


def run_ensemble_groups(config: EvolutionConfig, groups: int, workers: int = 1) -> tuple[EnsembleResult, list[EnsembleResult]]:
    """Pooled ensemble plus one sub-ensemble per contiguous block of realizations.

    The pooled result is bit-identical to ``run_ensemble(config)``; the groups
    are statistically independent replicas for resampling error bars.
    """
    bounds = _group_bounds(config.n_realizations, groups)
    args = ([config] * groups, bounds[:-1], bounds[1:])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, *args))
    else:
        parts = [_run_chunk(*a) for a in zip(*args)]
    pooled = summarize(config, *(sum(p[k] for p in parts) for k in range(4)), "automaton")
    subs = []
    for (a, b), part in zip(zip(bounds[:-1], bounds[1:]), parts):
        sub_cfg = replace(config, n_realizations=int(b - a))
        subs.append(summarize(sub_cfg, *part, "automaton"))
    return pooled, subs


def trajectory_average(initial: SpinState, gate_width: int, n_steps: int, burn_in: int = 0, seed: int = 0) -> ChargeProfile:
    """Time-averaged charge profile along a single long trajectory."""
    if not 0 <= burn_in < n_steps:
        raise ValidationError("need 0 <= burn_in < n_steps")
    table = build_class_table(gate_width)
    s = realization_seeds(seed, 0, 1)[0]
    acc = _trajectory_average_kernel(initial.as_array(), gate_width, gates_per_step(initial.L, gate_width),
                                     n_steps, burn_in, s, *table.kernel_arrays())
    return ChargeProfile(acc / (n_steps - burn_in), sample_count=n_steps - burn_in)


# --------------------------------------------------------------------------
# observables


def width_r(profile: ChargeProfile, x0: float, strict: bool = True) -> float:
    """Effective peak width sqrt(sum_i <S_i>(x_i - x0)^2).

    A radicand that is negative only within three standard errors is clamped
    to zero; a clearly negative one raises (or gives NaN with ``strict=False``).
    """
    w = (profile.coordinates - x0) ** 2
    rad = float(profile.mean_charge @ w)
    if rad >= 0:
        return math.sqrt(rad)
    noise = 3 * math.sqrt(float((profile.stderr**2) @ w**2)) if profile.stderr is not None else 0.0
    if -rad <= max(noise, 1e-12 * float(w.sum())):
        return 0.0
    if strict:
        raise ValidationError(f"width radicand {rad:.3g} is negative beyond noise {noise:.3g}")
    return float("nan")


def separation_r_prime(profile: ChargeProfile) -> float:
    """Charge-weighted distance between the right and left halves, boundary sites excluded."""
    L = profile.L
    x = profile.coordinates
    m = profile.mean_charge
    right = (x > L / 2) & (x != L)
    left = (x < L / 2) & (x != 1)
    return float(m[right] @ x[right] - m[left] @ x[left])


def crossing_time(times, values, threshold: float, rising: bool) -> float:
    """First time the series reaches ``threshold``, linearly interpolated."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    past = values >= threshold if rising else values <= threshold
    if not past.any():
        raise NotCrossedError(f"threshold {threshold} not reached by t={times[-1]:g}")
    k = int(np.argmax(past))
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    v0, v1 = values[k - 1], values[k]
    return float(t0 + (threshold - v0) * (t1 - t0) / (v1 - v0))


METRICS = {
    "width_r": (lambda prof, cfg: width_r(prof, charge_center(cfg.initial_state), strict=False), True),
    "separation_r_prime": (lambda prof, cfg: separation_r_prime(prof), False),
}


def measure_tau(config: EvolutionConfig, metric: str, threshold: float, workers: int = 1,
                result: EnsembleResult | None = None) -> float:
    """Time at which the ensemble metric first crosses ``threshold``.

    ``width_r`` is measured about the initial charge centre and rises;
    ``separation_r_prime`` falls.
    """
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}")
    fn, rising = METRICS[metric]
    result = run_ensemble(config, workers) if result is None else result
    t, v = result.metric_series(lambda prof: fn(prof, config))
    return crossing_time(t, v, threshold, rising)
