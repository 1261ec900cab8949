"""Exhaustive symmetry sectors and their Krylov fragments.

Sectors are generated depth-first with exact pruning: for every suffix of
the chain we precompute the set of reachable (charge, dipole) pairs, so
no dead branch is ever entered.  Fragments are connected components of
the one-gate move graph, found by breadth-first search over states packed
as base-3 integers.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .chain import ChargeProfile, SectorLabel, SpinState
from .errors import ValidationError
from .gates import GateClassTable, neighbours

MAX_ENUMERATION_L = 16


def pack(state: tuple[int, ...]) -> int:
    code = 0
    for s in reversed(state):
        code = 3 * code + s + 1
    return code


@dataclass(frozen=True)
class SymmetrySector:
    L: int
    label: SectorLabel
    states: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.states)

    def as_array(self) -> np.ndarray:
        return np.array(self.states, dtype=np.int8).reshape(len(self.states), self.L)

    def index(self) -> dict[int, int]:
        return {pack(s): k for k, s in enumerate(self.states)}


@lru_cache(maxsize=None)
def _suffix_reach(L: int) -> tuple[frozenset, ...]:
    # reach[k]: (q, p) pairs realizable by sites k+1..L (1-based)
    reach = [frozenset()] * (L + 1)
    reach[L] = frozenset({(0, 0)})
    for k in range(L - 1, -1, -1):
        x = k + 1
        reach[k] = frozenset((q + s, p + s * x) for q, p in reach[k + 1] for s in (-1, 0, 1))
    return tuple(reach)


def enumerate_sector(L: int, label) -> SymmetrySector:
    """All length-``L`` strings with the given total charge and dipole, in
    lexicographic order of (s_1, s_2, ...) with - < 0 < +."""
    label = SectorLabel(*label)
    if not 1 <= L <= MAX_ENUMERATION_L:
        raise ValidationError(f"exhaustive enumeration supports 1 <= L <= {MAX_ENUMERATION_L}")
    reach = _suffix_reach(L)
    out: list[tuple[int, ...]] = []
    if (label.q_tot, label.p_tot) not in reach[0]:
        return SymmetrySector(L, label, ())
    prefix: list[int] = []

    def descend(k: int, q: int, p: int) -> None:
        if k == L:
            out.append(tuple(prefix))
            return
        nxt = reach[k + 1]
        for s in (-1, 0, 1):
            if (q - s, p - s * (k + 1)) in nxt:
                prefix.append(s)
                descend(k + 1, q - s, p - s * (k + 1))
                prefix.pop()

    descend(0, label.q_tot, label.p_tot)
    return SymmetrySector(L, label, tuple(out))


def enumerate_sector_bruteforce(L: int, label) -> SymmetrySector:
    """Full 3**L scan; reference for small L only."""
    label = SectorLabel(*label)
    x = range(1, L + 1)
    states = tuple(
        s for s in itertools.product((-1, 0, 1), repeat=L)
        if sum(s) == label.q_tot and sum(i * v for i, v in zip(x, s)) == label.p_tot
    )
    return SymmetrySector(L, label, states)


def _mean_profile(states: np.ndarray, meta: dict) -> ChargeProfile:
    if len(states) == 0:
        raise ValidationError("cannot average over an empty set of states")
    return ChargeProfile(states.mean(axis=0), sample_count=len(states), meta=meta)


def sector_mean_profile(sector: SymmetrySector) -> ChargeProfile:
    """Equal-weight average of every site over the whole sector."""
    return _mean_profile(sector.as_array(), {"L": sector.L, "q_tot": sector.label.q_tot, "p_tot": sector.label.p_tot})


@dataclass
class KrylovDecomposition:
    sector: SymmetrySector
    gate_width: int
    component_of: np.ndarray  # component id per sector state
    components: list[np.ndarray]  # state indices per component, largest first

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.components]

    @property
    def largest_fraction(self) -> float:
        return self.sizes[0] / len(self.sector) if self.components else 0.0

    def size_histogram(self) -> dict[int, int]:
        vals, counts = np.unique(self.sizes, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    def component_containing(self, state) -> int:
        if isinstance(state, SpinState):
            state = state.sites
        idx = self.sector.index().get(pack(tuple(state)))
        if idx is None:
            raise ValidationError(f"state {SpinState(tuple(state))} is not in sector {tuple(self.sector.label)}")
        return int(self.component_of[idx])

    def component_states(self, cid: int) -> np.ndarray:
        return self.sector.as_array()[self.components[cid]]

    def summary(self) -> dict:
        return {
            "L": self.sector.L,
            "sector": {"q_tot": self.sector.label.q_tot, "p_tot": self.sector.label.p_tot},
            "gate_width": self.gate_width,
            "sector_size": len(self.sector),
            "component_count": len(self.components),
            "size_histogram": {str(k): v for k, v in self.size_histogram().items()},
            "largest_fraction": self.largest_fraction,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def krylov_decompose(sector: SymmetrySector, table: GateClassTable) -> KrylovDecomposition:
    """Connected components of the sector under single-gate moves."""
    index = sector.index()
    comp = np.full(len(sector), -1, dtype=np.int64)
    groups: list[list[int]] = []
    for seed in range(len(sector)):
        if comp[seed] >= 0:
            continue
        cid = len(groups)
        comp[seed] = cid
        members = [seed]
        queue = deque([sector.states[seed]])
        while queue:
            for nb in neighbours(queue.popleft(), table):
                k = index[pack(nb)]
                if comp[k] < 0:
                    comp[k] = cid
                    members.append(k)
                    queue.append(nb)
        groups.append(members)
    order = sorted(range(len(groups)), key=lambda c: (-len(groups[c]), min(groups[c])))
    relabel = np.empty(len(groups), dtype=np.int64)
    relabel[order] = np.arange(len(groups))
    components = [np.array(sorted(groups[c]), dtype=np.int64) for c in order]
    return KrylovDecomposition(sector, table.window_width, relabel[comp] if len(groups) else comp, components)


def krylov_component(state: SpinState, table: GateClassTable) -> list[tuple[int, ...]]:
    """States reachable from ``state``, without enumerating the sector first."""
    start = state.sites
    seen = {start}
    queue = deque([start])
    while queue:
        for nb in neighbours(queue.popleft(), table):
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return sorted(seen)


def component_mean_profile(decomposition: KrylovDecomposition, representative) -> ChargeProfile:
    """Flat average over the fragment containing ``representative``: the
    infinite-time automaton profile started from that state."""
    cid = decomposition.component_containing(representative)
    states = decomposition.component_states(cid)
    return _mean_profile(states, {"component": cid, "component_size": len(states)})
