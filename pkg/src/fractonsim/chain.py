"""Spin-1 chain states, conserved quantities and the height-field map.

Sites are 1-based: site ``i`` sits at coordinate ``x_i = i`` for
``i = 1..L``.  Charges are stored as small integers so that conservation
checks are exact.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import ValidationError

_CHAR_TO_CHARGE = {"+": 1, "0": 0, "-": -1, "−": -1}
_CHARGE_TO_CHAR = {1: "+", 0: "0", -1: "-"}


class SectorLabel(NamedTuple):
    q_tot: int
    p_tot: int


@dataclass(frozen=True)
class SpinState:
    """A basis string of S^z eigenvalues, one per site."""

    sites: tuple[int, ...]

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(sites) < 1:
            raise ValidationError("a chain needs at least one site")
        bad = [s for s in sites if s not in (-1, 0, 1)]
        if bad:
            raise ValidationError(f"site charges must be in {{-1, 0, +1}}, got {bad[0]}")
        object.__setattr__(self, "sites", sites)

    @classmethod
    def from_string(cls, text: str) -> SpinState:
        try:
            return cls(tuple(_CHAR_TO_CHARGE[c] for c in text.strip()))
        except KeyError as exc:
            raise ValidationError(f"unknown charge symbol {exc.args[0]!r}") from None

    @classmethod
    def vacuum(cls, L: int) -> SpinState:
        return cls((0,) * L)

    @classmethod
    def with_charges(cls, L: int, charges: Mapping[int, int]) -> SpinState:
        """Vacuum of length ``L`` with ``charges[site] = s`` placed on 1-based sites."""
        sites = [0] * L
        for site, s in charges.items():
            if not 1 <= site <= L:
                raise ValidationError(f"site {site} outside 1..{L}")
            sites[site - 1] = s
        return cls(tuple(sites))

    @classmethod
    def fractons(cls, L: int, positions: Iterable[int]) -> SpinState:
        """Vacuum with a single ``+`` charge on each listed site."""
        return cls.with_charges(L, {p: 1 for p in positions})

    @property
    def L(self) -> int:
        return len(self.sites)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.sites, dtype=np.int8)

    def __str__(self) -> str:
        return "".join(_CHARGE_TO_CHAR[s] for s in self.sites)

    def __len__(self) -> int:
        return len(self.sites)


@dataclass(frozen=True)
class HeightField:
    """Cumulative charge h_0..h_L with h_0 = 0."""

    heights: tuple[int, ...]

    def __post_init__(self):
        h = tuple(int(v) for v in self.heights)
        if len(h) < 2:
            raise ValidationError("a height field needs at least h_0 and h_1")
        if h[0] != 0:
            raise ValidationError(f"h_0 must be 0, got {h[0]}")
        steps = np.diff(h)
        if np.any(np.abs(steps) > 1):
            i = int(np.flatnonzero(np.abs(steps) > 1)[0]) + 1
            raise ValidationError(f"|h_{i} - h_{i - 1}| = {abs(int(steps[i - 1]))} exceeds 1")
        object.__setattr__(self, "heights", h)

    @property
    def L(self) -> int:
        return len(self.heights) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.heights, dtype=np.int64)


@dataclass
class ChargeProfile:
    """Mean charge per site, optionally with standard errors."""

    mean_charge: np.ndarray
    stderr: np.ndarray | None = None
    sample_count: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mean_charge = np.asarray(self.mean_charge, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
            if self.stderr.shape != self.mean_charge.shape:
                raise ValidationError("stderr and mean_charge lengths differ")

    @property
    def L(self) -> int:
        return len(self.mean_charge)

    @property
    def coordinates(self) -> np.ndarray:
        return np.arange(1, self.L + 1, dtype=float)

    def total_charge(self) -> float:
        return float(self.mean_charge.sum())

    def dipole_moment(self) -> float:
        return float(self.mean_charge @ self.coordinates)

    def check_conservation(self, q_tot: float, p_tot: float | None = None, tol: float | None = None) -> None:
        """Raise if the profile's charge (and dipole) drift from the sector values."""
        tol = 1e-9 * self.L if tol is None else tol
        if abs(self.total_charge() - q_tot) > tol:
            raise ValidationError(f"profile charge {self.total_charge()!r} != {q_tot}")
        if p_tot is not None and abs(self.dipole_moment() - p_tot) > tol * self.L:
            raise ValidationError(f"profile dipole {self.dipole_moment()!r} != {p_tot}")

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        with_err = self.stderr is not None
        writer.writerow(["site", "mean_charge"] + (["stderr"] if with_err else []))
        for i, m in enumerate(self.mean_charge, start=1):
            row = [i, repr(float(m))]
            if with_err:
                row.append(repr(float(self.stderr[i - 1])))
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> ChargeProfile:
        return cls.from_csv_text(Path(path).read_text())

    @classmethod
    def from_csv_text(cls, text: str) -> ChargeProfile:
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValidationError("empty profile CSV")
        sites = [int(r["site"]) for r in rows]
        if sites != list(range(1, len(rows) + 1)):
            raise ValidationError("profile CSV sites must run 1..L in order")
        mean = [float(r["mean_charge"]) for r in rows]
        err = [float(r["stderr"]) for r in rows] if "stderr" in rows[0] and rows[0]["stderr"] is not None else None
        return cls(np.array(mean), None if err is None else np.array(err))


def total_charge(state: SpinState) -> int:
    return sum(state.sites)


def dipole_moment(state: SpinState) -> int:
    return sum(i * s for i, s in enumerate(state.sites, start=1))


def sector_of(state: SpinState) -> SectorLabel:
    return SectorLabel(total_charge(state), dipole_moment(state))


def to_height_field(state: SpinState) -> HeightField:
    h = np.concatenate(([0], np.cumsum(state.sites)))
    return HeightField(tuple(int(v) for v in h))


def from_height_field(h: HeightField | Iterable[int]) -> SpinState:
    """Discrete derivative s_i = h_i - h_{i-1}; rejects steps larger than one."""
    if not isinstance(h, HeightField):
        h = HeightField(tuple(h))
    return SpinState(tuple(int(v) for v in np.diff(h.heights)))


def height_area(h: HeightField) -> int:
    """Area under the interior heights, sum_{i=1}^{L-1} h_i = L*Q - P."""
    return int(sum(h.heights[1:-1]))
