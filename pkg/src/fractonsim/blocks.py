"""Block-sliding picture of three-site dynamics.

A three-site gate on sites (i, i+1, i+2) only changes the interior heights
h_i, h_{i+1}, and the nontrivial ones swap two adjacent heights that differ
by one.  Read as blocks, the top block of the taller column slides
sideways onto the shorter one, and the move is legal only if every
height step stays within +-1.  The boundary heights h_0 and h_L never move.

Two engines live here:

* ``slide_step`` acts on an arbitrary height field and is the same Markov
  chain as the three-site automaton, up to a constant time rescaling.
* ``two_tier_step`` is the particle/hole/piston gas used for the
  two-fracton stationary state.  The piston is an extra marked empty column
  that neither gas may enter, so it is carried alongside the height field.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .automaton import (
    EnsembleResult,
    EvolutionConfig,
    _RAND_MAX,
    gates_per_step,
    realization_seeds,
    run_chunks,
    run_ensemble,
    summarize,
)
from .chain import HeightField, SpinState, from_height_field, height_area, to_height_field
from .errors import ValidationError


def map_single_fracton(L: int, p: int) -> HeightField:
    """Step profile: h_i = 0 for i < p and 1 for i >= p (L - p unit blocks)."""
    if not 1 <= p <= L:
        raise ValidationError(f"fracton site {p} outside 1..{L}")
    return HeightField(tuple(0 if i < p else 1 for i in range(L + 1)))


def block_count(h: HeightField) -> int:
    return height_area(h)


# --------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _try_slide(h, c, d):
    """Move the top block of column c onto column c + d if legal."""
    L = h.shape[0] - 1
    t = c + d
    if t < 1 or t > L - 1:
        return False
    hc = h[c]
    if h[t] != hc - 1:
        return False
    if abs(h[c - d] - (hc - 1)) > 1 or abs(h[t + d] - hc) > 1:
        return False
    h[c] = hc - 1
    h[t] = hc
    return True


@njit(cache=True)
def _slide_moves(h, n_moves):
    ncol = h.shape[0] - 2  # interior columns 1..L-1
    for _ in range(n_moves):
        r = np.random.randint(0, _RAND_MAX)
        c = 1 + r % ncol
        d = 1 if (r // ncol) % 2 else -1
        _try_slide(h, c, d)


@njit(cache=True)
def _block_ensemble_kernel(h0, n_moves, n_steps, record_times, seeds, win_start, win_every):
    L = h0.shape[0] - 1
    nrec = record_times.shape[0]
    sums = np.zeros((nrec, L), np.int64)
    sq = np.zeros((nrec, L), np.int64)
    wsum = np.zeros(L, np.int64)
    wsq = np.zeros(L, np.int64)
    acc = np.zeros(L, np.int64)
    for j in range(seeds.shape[0]):
        np.random.seed(seeds[j])
        h = h0.copy()
        acc[:] = 0
        r = 0
        for t in range(n_steps + 1):
            if t > 0:
                _slide_moves(h, n_moves)
            while r < nrec and record_times[r] == t:
                for i in range(L):
                    s = h[i + 1] - h[i]
                    sums[r, i] += s
                    sq[r, i] += s * s
                r += 1
            if win_start >= 0 and t >= win_start and (t - win_start) % win_every == 0:
                for i in range(L):
                    acc[i] += h[i + 1] - h[i]
        for i in range(L):
            wsum[i] += acc[i]
            wsq[i] += acc[i] * acc[i]
    return sums, sq, wsum, wsq


@njit(cache=True)
def _piston_moves(h, piston, n_moves, count, n_at, n_left, n_right):
    ncol = h.shape[0] - 2
    for _ in range(n_moves):
        r = np.random.randint(0, _RAND_MAX)
        c = 1 + r % ncol
        d = 1 if (r // ncol) % 2 else -1
        if count:
            n_at[piston] += 1
        if c == piston:
            t = c + d
            # the piston enters a neighbouring column only if it is empty (h' = 0)
            if 1 <= t <= ncol and h[t] == 1:
                if count:
                    if d > 0:
                        n_right[piston] += 1
                    else:
                        n_left[piston] += 1
                piston = t
        elif c + d != piston:
            _try_slide(h, c, d)
    return piston


@njit(cache=True)
def _two_tier_kernel(h0, piston0, n_moves, n_steps, record_times, seeds, win_start, win_every, count_from):
    L = h0.shape[0] - 1
    nrec = record_times.shape[0]
    sums = np.zeros((nrec, L), np.int64)
    sq = np.zeros((nrec, L), np.int64)
    wsum = np.zeros(L, np.int64)
    wsq = np.zeros(L, np.int64)
    acc = np.zeros(L, np.int64)
    R = seeds.shape[0]
    n_at = np.zeros((R, L + 1), np.int64)
    n_left = np.zeros((R, L + 1), np.int64)
    n_right = np.zeros((R, L + 1), np.int64)
    for j in range(R):
        np.random.seed(seeds[j])
        h = h0.copy()
        piston = piston0
        acc[:] = 0
        r = 0
        for t in range(n_steps + 1):
            if t > 0:
                count = count_from >= 0 and t > count_from
                piston = _piston_moves(h, piston, n_moves, count, n_at[j], n_left[j], n_right[j])
            while r < nrec and record_times[r] == t:
                for i in range(L):
                    s = h[i + 1] - h[i]
                    sums[r, i] += s
                    sq[r, i] += s * s
                r += 1
            if win_start >= 0 and t >= win_start and (t - win_start) % win_every == 0:
                for i in range(L):
                    acc[i] += h[i + 1] - h[i]
        for i in range(L):
            wsum[i] += acc[i]
            wsq[i] += acc[i] * acc[i]
    return sums, sq, wsum, wsq, n_at, n_left, n_right


# --------------------------------------------------------------------------
# single steps on value objects


def legal_moves(h: HeightField) -> list[tuple[int, int]]:
    """All legal (column, direction) block slides."""
    arr = h.as_array()
    out = []
    for c in range(1, h.L):
        for d in (-1, 1):
            trial = arr.copy()
            if _try_slide(trial, c, d):
                out.append((c, d))
    return out


def slide(h: HeightField, column: int, direction: int) -> HeightField:
    """Apply one block slide, raising if it is illegal."""
    arr = h.as_array()
    if not _try_slide(arr, column, direction):
        raise ValidationError(f"block at column {column} cannot slide {'right' if direction > 0 else 'left'}")
    return HeightField(tuple(int(v) for v in arr))


def slide_step(state: HeightField, rng: np.random.Generator) -> HeightField:
    """``round(L/3)`` proposals of a uniform (column, direction) pair; illegal
    proposals are no-ops."""
    arr = state.as_array()
    L = state.L
    if L < 2:
        return state
    for _ in range(gates_per_step(L, 3)):
        c = int(rng.integers(1, L))
        d = 1 if rng.integers(2) else -1
        _try_slide(arr, c, d)
    return HeightField(tuple(int(v) for v in arr))


@dataclass(frozen=True)
class TwoTierState:
    """Two-tier height field (values in {0, 1, 2}) plus the piston column.

    In the modified height h' = h - 1, holes are columns with h' = -1 and
    particles columns with h' = +1; the piston is an empty column that
    separates them.
    """

    heights: HeightField
    piston: int

    def __post_init__(self):
        h = self.heights.heights
        L = self.heights.L
        if not 1 <= self.piston <= L - 1:
            raise ValidationError(f"piston column {self.piston} outside 1..{L - 1}")
        if h[self.piston] != 1:
            raise ValidationError("the piston column must be empty (h' = 0)")
        if h[0] != 0 or h[L] != 2 or any(v not in (0, 1, 2) for v in h):
            raise ValidationError("not a two-tier height field")
        if any(v != 0 and v != 1 for v in h[1:self.piston]) or any(v not in (1, 2) for v in h[self.piston + 1:L]):
            raise ValidationError("holes must lie left of the piston and particles right of it")

    @property
    def L(self) -> int:
        return self.heights.L

    @property
    def modified_heights(self) -> tuple[int, ...]:
        return tuple(v - 1 for v in self.heights.heights)

    @property
    def hole_positions(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.L) if self.heights.heights[i] == 0)

    @property
    def particle_positions(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.L) if self.heights.heights[i] == 2)

    def xi(self) -> float:
        """Piston position relative to column (L - 1)/2, the convention under
        which an (L - 1)-column chain matches the continuum length L - 1."""
        return self.piston - (self.L - 1) / 2

    def legal_moves(self) -> list[tuple[int, int]]:
        arr = self.heights.as_array()
        moves = []
        for c in range(1, self.L):
            for d in (-1, 1):
                t = c + d
                if c == self.piston:
                    if 1 <= t <= self.L - 1 and arr[t] == 1:
                        moves.append((c, d))
                elif t != self.piston and _try_slide(arr.copy(), c, d):
                    moves.append((c, d))
        return moves


def map_two_fracton(L: int, i1: int, i2: int, piston: int | None = None) -> TwoTierState:
    """Height field of ``+`` charges at sites i1 < i2: holes on columns
    1..i1-1, an empty strip i1..i2-1 and particles on i2..L-1.

    The piston defaults to the middle of the empty strip.
    """
    if not 1 <= i1 < i2 <= L:
        raise ValidationError(f"need 1 <= i1 < i2 <= L, got {i1}, {i2}")
    h = to_height_field(SpinState.fractons(L, (i1, i2)))
    if i1 == 1 or i2 == L:
        raise ValidationError("fractons on the boundary sites leave no room for both gases")
    if piston is None:
        piston = (i1 + i2 - 1) // 2
    if not i1 <= piston <= i2 - 1:
        raise ValidationError(f"piston {piston} must start in the empty strip {i1}..{i2 - 1}")
    return TwoTierState(h, piston)


def two_tier_step(state: TwoTierState, rng: np.random.Generator) -> TwoTierState:
    """One step of the piston gas: gases perform exclusion moves but may not
    enter the piston column; the piston hops into an empty neighbour."""
    arr = state.heights.as_array()
    piston = state.piston
    L = state.L
    for _ in range(gates_per_step(L, 3)):
        c = int(rng.integers(1, L))
        d = 1 if rng.integers(2) else -1
        t = c + d
        if c == piston:
            if 1 <= t <= L - 1 and arr[t] == 1:
                piston = t
        elif t != piston:
            _try_slide(arr, c, d)
    return TwoTierState(HeightField(tuple(int(v) for v in arr)), piston)


def to_charge_profile(state: HeightField | TwoTierState) -> SpinState:
    if isinstance(state, TwoTierState):
        state = state.heights
    return from_height_field(state)


# --------------------------------------------------------------------------
# ensembles


def _run_block_chunk(config: EvolutionConfig, start: int, stop: int):
    h0 = to_height_field(config.initial_state).as_array()
    seeds = realization_seeds(config.master_seed, start, stop)
    win = -1 if config.window_start is None else config.window_start
    return _block_ensemble_kernel(h0, gates_per_step(config.L, 3), config.n_steps,
                                  np.asarray(config.record_times, dtype=np.int64), seeds, win, config.window_every)


def run_block_ensemble(config: EvolutionConfig, workers: int = 1) -> EnsembleResult:
    """Ensemble of block-sliding trajectories; same config and output as the automaton."""
    if config.gate_width != 3:
        raise ValidationError("the block picture describes three-site dynamics only")
    sums, sq, wsum, wsq = run_chunks(_run_block_chunk, config, workers)
    return summarize(config, sums, sq, wsum, wsq, "blocks")


@dataclass
class PistonStatistics:
    """Per-realization counts collected after ``count_from``: attempts made while
    the piston sat on each column, and accepted hops left/right from it."""

    n_at: np.ndarray
    n_left: np.ndarray
    n_right: np.ndarray
    L: int

    def _ratio(self, at, left, right, c):
        up = right[c] / at[c]
        down = left[c + 1] / at[c + 1]
        return down / up

    def transition_ratio(self, column: int) -> float:
        """Estimated P(c+1 -> c) / P(c -> c+1) from pooled counts."""
        at, left, right = (a.sum(axis=0) for a in (self.n_at, self.n_left, self.n_right))
        return float(self._ratio(at, left, right, column))

    def transition_ratio_error(self, column: int, groups: int = 20) -> float:
        """Delete-one-group jackknife error of ``transition_ratio``."""
        R = self.n_at.shape[0]
        groups = min(groups, R)
        bounds = np.linspace(0, R, groups + 1).astype(int)
        tot = [a.sum(axis=0) for a in (self.n_at, self.n_left, self.n_right)]
        est = []
        for g in range(groups):
            sl = slice(bounds[g], bounds[g + 1])
            part = [t - a[sl].sum(axis=0) for t, a in zip(tot, (self.n_at, self.n_left, self.n_right))]
            est.append(self._ratio(*part, column))
        est = np.array(est)
        return float(np.sqrt((groups - 1) / groups * ((est - est.mean()) ** 2).sum()))

    def occupation(self) -> np.ndarray:
        at = self.n_at.sum(axis=0).astype(float)
        return at / at.sum()


def run_two_tier_ensemble(state: TwoTierState, n_steps: int, n_realizations: int, master_seed: int = 0,
                          record_times=None, window_start: int | None = None, window_every: int = 1,
                          count_from: int | None = None) -> tuple[EnsembleResult, PistonStatistics]:
    """Ensemble of piston-gas trajectories, with piston hop statistics
    collected from step ``count_from`` on."""
    config = EvolutionConfig(to_charge_profile(state), 3, n_steps, n_realizations, record_times,
                             master_seed, window_start, window_every)
    seeds = realization_seeds(master_seed, 0, n_realizations)
    win = -1 if window_start is None else window_start
    out = _two_tier_kernel(state.heights.as_array(), state.piston, gates_per_step(state.L, 3), n_steps,
                           np.asarray(config.record_times, dtype=np.int64), seeds, win, window_every,
                           -1 if count_from is None else count_from)
    result = summarize(config, *out[:4], "two_tier")
    return result, PistonStatistics(*out[4:], L=state.L)


@dataclass
class EquivalenceReport:
    automaton: EnsembleResult
    blocks: EnsembleResult
    matched_times: list[tuple[int, int]]
    max_abs_deviation: float
    max_z: float

    @property
    def consistent(self) -> bool:
        return self.max_z <= 3.0

    def summary(self) -> dict:
        return {
            "matched_times": self.matched_times,
            "max_abs_deviation": self.max_abs_deviation,
            "max_z": self.max_z,
            "consistent": self.consistent,
        }


def matched_schedules(L: int, n_points: int, spacing: int = 1) -> tuple[list[int], list[int]]:
    """Automaton and block snapshot times that correspond exactly.

    Per step the automaton flips a given flippable pair with probability
    ~ g/(2(L-2)) and the block engine with ~ g/(2(L-1)), g = round(L/3);
    automaton step k(L-2) therefore matches block step k(L-1).
    """
    a = [k * spacing * (L - 2) for k in range(n_points + 1)]
    b = [k * spacing * (L - 1) for k in range(n_points + 1)]
    return a, b


def equivalence_check(L: int, initial: SpinState, n_steps: int, n_realizations: int, seed: int = 0,
                      n_points: int = 5, workers: int = 1) -> EquivalenceReport:
    """Run the automaton and the block simulator from the same state and
    compare site-wise ensemble means at matched times."""
    if initial.L != L:
        raise ValidationError(f"initial state has {initial.L} sites, expected {L}")
    spacing = max(1, n_steps // (n_points * (L - 2)))
    ta, tb = matched_schedules(L, n_points, spacing)
    cfg_a = EvolutionConfig(initial, 3, ta[-1], n_realizations, ta, seed)
    cfg_b = EvolutionConfig(initial, 3, tb[-1], n_realizations, tb, seed + 1)
    ra = run_ensemble(cfg_a, workers)
    rb = run_block_ensemble(cfg_b, workers)
    max_dev = 0.0
    max_z = 0.0
    for a, b in zip(ta, tb):
        pa, pb = ra.profiles[a], rb.profiles[b]
        diff = np.abs(pa.mean_charge - pb.mean_charge)
        err = np.sqrt(pa.stderr**2 + pb.stderr**2)
        max_dev = max(max_dev, float(diff.max()))
        nz = err > 0
        if np.any(diff[~nz] > 0):
            max_z = float("inf")
        if nz.any():
            max_z = max(max_z, float((diff[nz] / err[nz]).max()))
    return EquivalenceReport(ra, rb, list(zip(ta, tb)), max_dev, max_z)
