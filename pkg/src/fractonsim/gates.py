"""Charge- and dipole-conserving local moves.

A width-``n`` window holds one of ``3**n`` local strings.  Strings sharing
the same window-local charge and dipole (coordinates 1..n) form a class;
a gate replaces the window with a uniformly drawn member of its class,
the current string included.  Window codes are base 3 with digit
``s + 1`` and the leftmost site least significant.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .chain import SpinState
from .errors import ValidationError

# Nontrivial three-site classes, as listed for the three-site circuit.
THREE_SITE_PAIRS = (
    frozenset({"0+0", "+-+"}),
    frozenset({"0-0", "-+-"}),
    frozenset({"+-0", "0+-"}),
    frozenset({"-+0", "0-+"}),
)


def encode(window) -> int:
    return sum((int(s) + 1) * 3**k for k, s in enumerate(window))


def decode(code: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        code, d = divmod(code, 3)
        out.append(d - 1)
    return tuple(out)


def _to_str(window) -> str:
    return str(SpinState(tuple(window)))


@dataclass(frozen=True)
class GateClassTable:
    window_width: int
    classes: tuple[tuple[tuple[int, ...], ...], ...]
    class_of: dict  # local string (tuple) -> class index

    @property
    def nontrivial(self) -> list[tuple[tuple[int, ...], ...]]:
        return [c for c in self.classes if len(c) > 1]

    def members(self, window) -> tuple[tuple[int, ...], ...]:
        return self.classes[self.class_of[tuple(window)]]

    def size_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for c in self.classes:
            hist[len(c)] = hist.get(len(c), 0) + 1
        return dict(sorted(hist.items()))

    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat lookup tables for the compiled kernels.

        Returns ``(class_index, offsets, members, digits)``: ``class_index[code]``
        is the class of a window code, ``members[offsets[c]:offsets[c+1]]`` the
        member codes of class ``c``, and ``digits[code]`` the decoded window.
        """
        return _kernel_arrays(self.window_width)

    def to_json(self) -> str:
        return json.dumps(
            {
                "window_width": self.window_width,
                "string_to_class": {_to_str(w): cid for w, cid in sorted(self.class_of.items(), key=lambda kv: encode(kv[0]))},
                "classes": [[_to_str(w) for w in c] for c in self.classes],
            },
            indent=2,
        )


def _local_charges(window) -> tuple[int, int]:
    return sum(window), sum(k * s for k, s in enumerate(window, start=1))


@lru_cache(maxsize=None)
def build_class_table(n: int) -> GateClassTable:
    """Partition all 3**n window strings by (local charge, local dipole)."""
    if n not in (3, 4):
        raise ValidationError(f"gate width must be 3 or 4, got {n}")
    groups: dict[tuple[int, int], list[tuple[int, ...]]] = {}
    for code in range(3**n):
        w = decode(code, n)
        groups.setdefault(_local_charges(w), []).append(w)
    classes = tuple(tuple(g) for _, g in sorted(groups.items(), key=lambda kv: encode(kv[1][0])))
    class_of = {w: cid for cid, c in enumerate(classes) for w in c}
    return GateClassTable(n, classes, class_of)


@lru_cache(maxsize=None)
def _kernel_arrays(n: int):
    table = build_class_table(n)
    class_index = np.empty(3**n, dtype=np.int64)
    offsets = np.zeros(len(table.classes) + 1, dtype=np.int64)
    members = np.empty(3**n, dtype=np.int64)
    pos = 0
    for cid, c in enumerate(table.classes):
        for w in c:
            class_index[encode(w)] = cid
            members[pos] = encode(w)
            pos += 1
        offsets[cid + 1] = pos
    digits = np.array([decode(code, n) for code in range(3**n)], dtype=np.int8)
    for arr in (class_index, offsets, members, digits):
        arr.setflags(write=False)
    return class_index, offsets, members, digits


def verify_three_site_table(table: GateClassTable) -> bool:
    """True iff ``table`` is a conserving partition whose nontrivial classes are
    exactly the four three-site pairs."""
    if table.window_width != 3:
        return False
    seen: set[tuple[int, ...]] = set()
    for c in table.classes:
        if len({_local_charges(w) for w in c}) != 1:
            return False
        for w in c:
            if w in seen:
                return False
            seen.add(w)
    if seen != set(itertools.product((-1, 0, 1), repeat=3)):
        return False
    nontrivial = {frozenset(_to_str(w) for w in c) for c in table.classes if len(c) > 1}
    return nontrivial == set(THREE_SITE_PAIRS)


def apply_random_gate(state: SpinState, start: int, table: GateClassTable, rng: np.random.Generator) -> SpinState:
    """Replace the window at 1-based ``start`` with a uniform member of its class."""
    n = table.window_width
    if not 1 <= start <= state.L - n + 1:
        raise ValidationError(f"window start {start} outside 1..{state.L - n + 1}")
    window = state.sites[start - 1 : start - 1 + n]
    choices = table.members(window)
    new = choices[int(rng.integers(len(choices)))]
    return SpinState(state.sites[: start - 1] + tuple(new) + state.sites[start - 1 + n :])


def neighbours(state: tuple[int, ...], table: GateClassTable):
    """Yield every string reachable from ``state`` by one nontrivial gate."""
    n = table.window_width
    for start in range(len(state) - n + 1):
        window = state[start : start + n]
        cls = table.classes[table.class_of[window]]
        if len(cls) == 1:
            continue
        for w in cls:
            if w != window:
                yield state[:start] + w + state[start + n :]
