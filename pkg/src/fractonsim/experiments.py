"""Config-driven experiment pipelines.

An experiment is a kind, a flat parameter mapping and a seed.  Parameters
are validated against a typed per-kind schema before anything runs; every
kind has a desk-scale default and a full-scale default (``paper_scale``).
``run_experiment`` writes ``meta.json``, plot-ready CSVs and a
``summary.json`` of headline numbers.  The summary depends only on the
spec, so equal specs give byte-identical summaries.
"""
from __future__ import annotations

import json
import math
import subprocess
import zlib
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .analytic import (
    TwoFractonGeometry,
    conservation_totals,
    lattice_two_fracton_profile,
    peak_fwhm,
    single_fracton_final,
    two_fracton_final_profile,
)
from .automaton import EvolutionConfig, geometric_schedule, run_ensemble, trajectory_average
from .blocks import equivalence_check
from .chain import ChargeProfile, SpinState, sector_of
from .errors import FractonSimError, NumericalError, ValidationError
from .gates import build_class_table
from .maxent import exact_profile, linear_profile, linearized_multipliers, solve_multipliers
from .scaling import fit_sweep, sweep_geometry, tau_sweep
from .sectors import component_mean_profile, enumerate_sector, krylov_decompose, sector_mean_profile

# name -> (type, desk default, full-scale default); types: int, float, ints
SCHEMAS: dict[str, dict[str, tuple[str, Any, Any]]] = {
    "fig1_thermal": {
        "L": ("int", 14, 14),
        "q_tot": ("int", 2, 2),
        "p_tot": ("int", 7, 7),
        "placement_a": ("ints", [3, 4], [3, 4]),
        "placement_b": ("ints", [2, 5], [2, 5]),
        "gate_width": ("int", 4, 4),
        "n_steps": ("int", 10000, 45000),
        "n_realizations": ("int", 500, 5000),
    },
    "fig2_single": {
        "L": ("int", 51, 51),
        "p": ("int", 26, 26),
        "n_steps": ("int", 30000, 45000),
        "n_realizations": ("int", 500, 5000),
        "window_start": ("int", 20000, 35000),
        "window_every": ("int", 10, 10),
        "schedule_ratio": ("float", 1.03, 1.03),
    },
    "fig3_scaling": {
        "sizes": ("ints", [17, 25, 33, 49, 65], [17, 25, 33, 49, 65]),
        "n_realizations": ("int", 2048, 5000),
        "groups": ("int", 8, 8),
    },
    "fig4_two": {
        "L": ("int", 51, 51),
        "i1": ("int", 16, 16),
        "i2": ("int", 36, 36),
        "n_steps": ("int", 30000, 45000),
        "n_realizations": ("int", 500, 5000),
        "window_start": ("int", 20000, 35000),
        "window_every": ("int", 10, 10),
        "schedule_ratio": ("float", 1.03, 1.03),
    },
    "fig5_scaling": {
        "deltas": ("ints", [9, 13, 17, 25, 33, 49], [9, 13, 17, 25, 33, 49]),
        "ratio": ("float", 0.5, 0.5),
        "n_realizations": ("int", 2048, 5000),
        "groups": ("int", 8, 8),
    },
    "fig8_overlay": {
        "L": ("int", 80, 80),
        "delta": ("int", 40, 40),
        "n_steps": ("int", 40000, 60000),
        "n_realizations": ("int", 500, 5000),
        "window_start": ("int", 20000, 30000),
        "window_every": ("int", 10, 10),
    },
    "krylov_report": {
        "sizes": ("ints", [10, 11, 12], [10, 11, 12, 13, 14]),
        "trajectory_L": ("int", 10, 10),
        "trajectory_steps": ("int", 2_000_000, 20_000_000),
        "burn_in": ("int", 1000, 1000),
    },
    "equivalence": {
        "L": ("int", 31, 31),
        "single_site": ("int", 16, 16),
        "pair": ("ints", [8, 24], [8, 24]),
        "n_steps": ("int", 2000, 2000),
        "n_realizations": ("int", 1000, 5000),
        "n_points": ("int", 5, 5),
    },
}

KINDS = tuple(SCHEMAS)


def _coerce(kind: str, name: str, typ: str, value):
    where = f"{kind}.{name}"
    if typ == "int":
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ValidationError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if typ == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float, np.number)) or not math.isfinite(value):
            raise ValidationError(f"{where} must be a finite number, got {value!r}")
        return float(value)
    if typ == "ints":
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split()]
            try:
                value = [int(v) for v in value]
            except ValueError:
                raise ValidationError(f"{where} must be a list of integers") from None
        if not isinstance(value, (list, tuple)) or not value:
            raise ValidationError(f"{where} must be a non-empty list of integers, got {value!r}")
        return [_coerce(kind, name, "int", v) for v in value]
    raise AssertionError(typ)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    paper_scale: bool = False

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValidationError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        schema = SCHEMAS[self.kind]
        unknown = set(self.parameters) - set(schema)
        if unknown:
            raise ValidationError(f"unknown parameters for {self.kind}: {', '.join(sorted(unknown))}")
        full = {}
        for name, (typ, desk, paper) in schema.items():
            raw = self.parameters.get(name, paper if self.paper_scale else desk)
            full[name] = _coerce(self.kind, name, typ, raw)
        object.__setattr__(self, "parameters", full)
        object.__setattr__(self, "seed", int(self.seed))
        _validate(self.kind, full)

    @classmethod
    def from_mapping(cls, data: dict, paper_scale: bool = False, seed: int | None = None) -> ExperimentSpec:
        data = dict(data)
        if "kind" not in data:
            raise ValidationError("experiment config needs a 'kind' entry")
        kind = data.pop("kind")
        file_seed = data.pop("seed", 0)
        paper_scale = bool(data.pop("paper_scale", False)) or paper_scale
        return cls(kind, data, file_seed if seed is None else seed, paper_scale)

    @classmethod
    def load(cls, path: str | Path, paper_scale: bool = False, seed: int | None = None) -> ExperimentSpec:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: expected a flat JSON object")
        return cls.from_mapping(data, paper_scale, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "paper_scale": self.paper_scale, **self.parameters}

    def dump(self, path: str | Path, scale_free: bool = False) -> None:
        """Write the spec as a flat JSON config.  With ``scale_free`` the
        ensemble-size entries that differ between desk and full scale are
        left out, so the file follows ``--paper-scale``."""
        data = self.to_dict()
        if scale_free:
            data.pop("paper_scale")
            for name, (_, desk, paper) in SCHEMAS[self.kind].items():
                if desk != paper and data[name] == (paper if self.paper_scale else desk):
                    del data[name]
        Path(path).write_text(json.dumps(data, indent=2) + "\n")


def _validate(kind: str, p: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ValidationError(f"{kind}: {msg}")

    for name in ("n_steps", "n_realizations", "window_every", "n_points", "groups", "trajectory_steps"):
        if name in p:
            need(p[name] >= 1, f"{name} must be >= 1")
    if "window_start" in p:
        need(0 <= p["window_start"] <= p["n_steps"], "window_start must lie in [0, n_steps]")
    if "schedule_ratio" in p:
        need(p["schedule_ratio"] > 1, "schedule_ratio must exceed 1")
    if kind == "fig1_thermal":
        need(p["gate_width"] in (3, 4), "gate_width must be 3 or 4")
        need(2 <= p["L"] <= 16, "L must lie in 2..16 for exhaustive enumeration")
        for key in ("placement_a", "placement_b"):
            state = _placement_state(p["L"], p[key], kind)
            need(tuple(sector_of(state)) == (p["q_tot"], p["p_tot"]),
                 f"{key} {p[key]} is not in sector ({p['q_tot']}, {p['p_tot']})")
    elif kind == "fig2_single":
        need(3 <= p["L"] and 1 <= p["p"] <= p["L"], "need L >= 3 and 1 <= p <= L")
    elif kind == "fig4_two":
        need(1 < p["i1"] < p["i2"] < p["L"], "need 1 < i1 < i2 < L")
    elif kind in ("fig3_scaling", "fig5_scaling"):
        need(len(p["sizes" if kind == "fig3_scaling" else "deltas"]) >= 4, "a power-law fit needs at least 4 sizes")
        need(p["groups"] >= 8, "groups must be >= 8")
        need(p["n_realizations"] >= p["groups"], "need at least one realization per group")
        if kind == "fig3_scaling":
            for L in p["sizes"]:
                sweep_geometry("single", L)
        else:
            for d in p["deltas"]:
                sweep_geometry("double", d, p["ratio"])
    elif kind == "fig8_overlay":
        TwoFractonGeometry(p["L"], p["delta"])._require_lattice()
    elif kind == "krylov_report":
        need(all(5 <= L <= 14 for L in p["sizes"]), "sizes must lie in 5..14")
        need(5 <= p["trajectory_L"] <= 14, "trajectory_L must lie in 5..14")
        need(0 <= p["burn_in"] < p["trajectory_steps"], "need 0 <= burn_in < trajectory_steps")
    elif kind == "equivalence":
        need(p["L"] >= 5, "L must be >= 5")
        need(1 <= p["single_site"] <= p["L"], "single_site outside the chain")
        need(len(p["pair"]) == 2 and 1 <= p["pair"][0] < p["pair"][1] <= p["L"], "pair must be two increasing sites")


def _placement_state(L: int, sites, kind: str) -> SpinState:
    if any(not 1 <= s <= L for s in sites) or len(set(sites)) != len(sites):
        raise ValidationError(f"{kind}: placement {sites} must be distinct sites in 1..{L}")
    return SpinState.fractons(L, sites)


# --------------------------------------------------------------------------
# helpers


def derive_seed(seed: int, label: str) -> int:
    """Stable 63-bit child seed for a named stage."""
    return int(np.random.SeedSequence([seed, zlib.crc32(label.encode())]).generate_state(1, np.uint64)[0] >> 1)


def code_version() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return f"fractonsim {__version__} (no git)"
    if out.returncode != 0:
        return f"fractonsim {__version__} (no git)"
    return out.stdout.strip()


@contextmanager
def stage(name: str):
    """Re-raise package errors with the failing stage named."""
    try:
        yield
    except FractonSimError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def max_z(a: ChargeProfile, b: ChargeProfile, sites=None) -> float:
    """Largest |a - b| / combined standard error over ``sites`` (1-based)."""
    idx = np.arange(a.L) if sites is None else np.asarray(sites) - 1
    diff = np.abs(a.mean_charge[idx] - b.mean_charge[idx])
    ea = a.stderr[idx] if a.stderr is not None else 0.0
    eb = b.stderr[idx] if b.stderr is not None else 0.0
    err = np.sqrt(np.square(ea) + np.square(eb)) * np.ones_like(diff)
    if np.any((err == 0) & (diff > 1e-12)):
        return float("inf")
    nz = err > 0
    return float((diff[nz] / err[nz]).max()) if nz.any() else 0.0


def peak_summary(profile: ChargeProfile, lo: int, hi: int) -> dict:
    """Highest site in ``lo..hi`` and the full width at half maximum of the
    peak around it, from linear interpolation between sites."""
    m = profile.mean_charge
    k = lo - 1 + int(np.argmax(m[lo - 1:hi]))
    height = float(m[k])
    err = float(profile.stderr[k]) if profile.stderr is not None else float("nan")
    half = height / 2

    def edge(step):
        j = k
        while 0 <= j + step < profile.L and m[j + step] > half:
            j += step
        if not 0 <= j + step < profile.L:
            return float(j)
        # interpolate between j (above half) and j + step (at or below)
        frac = (m[j] - half) / (m[j] - m[j + step])
        return j + step * frac

    fwhm = edge(1) - edge(-1) if height > 0 else float("nan")
    return {"site": k + 1, "height": height, "stderr": err,
            "z": height / err if err > 0 else float("inf"), "fwhm": float(fwhm)}


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def _write_profile(path: Path, profile: ChargeProfile, q=None, p=None, tol=None) -> None:
    if q is not None:
        profile.check_conservation(q, p, tol)
    profile.to_csv(path)


# --------------------------------------------------------------------------
# pipelines; each returns the summary dict


def _fig1(p, seed, out, workers):
    L, label = p["L"], (p["q_tot"], p["p_tot"])
    with stage("sector enumeration"):
        sector = enumerate_sector(L, label)
        enum = sector_mean_profile(sector)
    with stage("maxent solve"):
        lam = solve_multipliers(L, label)
        lin_q, lin_p = linearized_multipliers(L, label, exact=True)
        exact = exact_profile(L, lam)
        lin = linear_profile(L, linearized_multipliers(L, label))
    _write_profile(out / "enumeration.csv", enum, *label)
    _write_profile(out / "maxent_exact.csv", exact, *label, tol=1e-8)
    lin.to_csv(out / "maxent_linear.csv")
    summary = {
        "sector_size": len(sector),
        "lambda_q": lam.lambda_q, "lambda_p": lam.lambda_p,
        "lambda_q_linearized": str(lin_q), "lambda_p_linearized": str(lin_p),
        "maxent_vs_enumeration_max_abs": float(np.abs(exact.mean_charge - enum.mean_charge).max()),
        "linear_vs_enumeration_max_abs": float(np.abs(lin.mean_charge - enum.mean_charge).max()),
    }
    runs = {}
    for key in ("placement_a", "placement_b"):
        state = SpinState.fractons(L, p[key])
        cfg = EvolutionConfig(state, p["gate_width"], p["n_steps"], p["n_realizations"], None,
                              derive_seed(seed, key))
        with stage(f"automaton run {key}"):
            res = run_ensemble(cfg, workers)
        prof = res.final()
        _write_profile(out / f"ad_{key}.csv", prof, *label)
        runs[key] = prof
        summary[f"{key}_vs_enumeration_max_z"] = max_z(prof, enum)
    summary["ad_a_vs_ad_b_max_z"] = max_z(runs["placement_a"], runs["placement_b"])
    return summary


def _ensemble_with_window(state, p, seed, label, workers):
    n = p["n_steps"]
    cfg = EvolutionConfig(state, 3, n, p["n_realizations"], geometric_schedule(n, p.get("schedule_ratio", 1.03)),
                          derive_seed(seed, label), p["window_start"], p["window_every"])
    with stage(f"{label} ensemble"):
        return run_ensemble(cfg, workers)


def _fig2(p, seed, out, workers):
    L, site = p["L"], p["p"]
    state = SpinState.fractons(L, (site,))
    res = _ensemble_with_window(state, p, seed, "single", workers)
    res.save(out / "ensemble")
    late = res.window_profile
    late.check_conservation(1, site)
    late.to_csv(out / "late_time.csv")
    final = single_fracton_final(L, site)
    _write_profile(out / "analytic_final.csv", final, 1, site)
    interior = np.arange(2, L)
    return {
        "boundary_left": late.mean_charge[0], "boundary_left_stderr": late.stderr[0],
        "boundary_right": late.mean_charge[-1], "boundary_right_stderr": late.stderr[-1],
        "boundary_max_z": max_z(late, final, [1, L]),
        "interior_max_z": max_z(late, final, interior),
        "interior_max_abs": float(np.abs(late.mean_charge[1:-1]).max()),
    }


def _write_sweep(out: Path, points) -> None:
    rows = ["scale,L,tau,tau_err,n_steps,status"]
    for pt in points:
        rows.append(f"{pt.scale},{pt.L},{pt.tau!r},{pt.tau_err!r},{pt.n_steps},{pt.status}")
    (out / "tau.csv").write_text("\n".join(rows) + "\n")


def _sweep_summary(points):
    summary = {"points": [pt.to_dict() for pt in points],
               "failed_scales": [pt.scale for pt in points if not pt.ok]}
    try:
        fit = fit_sweep(points)
    except ValidationError as exc:
        summary["fit_error"] = str(exc)
    else:
        summary["fit"] = fit.to_dict()
    return summary


def _fig3(p, seed, out, workers):
    with stage("single-fracton tau sweep"):
        pts = tau_sweep("single", p["sizes"], seed=derive_seed(seed, "fig3"), n_realizations=p["n_realizations"],
                        groups=p["groups"], workers=workers)
    _write_sweep(out, pts)
    return _sweep_summary(pts)


def _fig5(p, seed, out, workers):
    with stage("two-fracton tau sweep"):
        pts = tau_sweep("double", p["deltas"], ratio=p["ratio"], seed=derive_seed(seed, "fig5"),
                        n_realizations=p["n_realizations"], groups=p["groups"], workers=workers)
    _write_sweep(out, pts)
    return _sweep_summary(pts)


def _two_fracton_common(state, geom, p, seed, label, out, workers):
    i1, i2 = (i + 1 for i, s in enumerate(state.sites) if s)
    res = _ensemble_with_window(state, p, seed, label, workers)
    res.save(out / "ensemble")
    late = res.window_profile
    q, dip = 2, i1 + i2
    late.check_conservation(q, dip)
    late.to_csv(out / "late_time.csv")
    with stage("analytic profile"):
        ana = two_fracton_final_profile(geom)
        exact = lattice_two_fracton_profile(state.L, i1, i2)
        # conservation is checked on the continuum law; sampling it on sites
        # loses a little charge at the jumps x = +-delta/2, more so at small L
        q_ana, p_ana = conservation_totals(geom)
        if abs(q_ana - q) > 1e-6 * q or abs(p_ana) > 1e-6 * geom.L:
            raise NumericalError(f"continuum profile totals ({q_ana:.8g}, {p_ana:.3g}) != ({q}, 0)")
    _write_profile(out / "analytic.csv", ana)
    _write_profile(out / "lattice_exact.csv", exact, q, dip)
    mid = (i1 + i2) / 2
    half = (i2 - i1) / 2
    peak = peak_summary(late, int(math.ceil(mid - half / 2)), int(math.floor(mid + half / 2)))
    interior = np.arange(2, state.L)
    return late, ana, {
        "geometry": {"L": geom.L, "delta": geom.delta, "sites": state.L, "i1": i1, "i2": i2},
        "peak": peak,
        "analytic_peak": float(ana.mean_charge[int(round(mid)) - 1]),
        "analytic_fwhm": peak_fwhm(geom),
        "analytic_boundary": float(ana.mean_charge[0]),
        "analytic_total_charge": q_ana,
        "analytic_centred_dipole": p_ana,
        "analytic_sampled_charge": ana.total_charge(),
        "lattice_exact_peak": float(exact.mean_charge[int(round(mid)) - 1]),
        "interior_max_z_vs_analytic": max_z(late, ana, interior),
        "interior_max_z_vs_lattice_exact": max_z(late, exact, interior),
        "boundary_left": late.mean_charge[0], "boundary_right": late.mean_charge[-1],
    }


def _fig4(p, seed, out, workers):
    L, i1, i2 = p["L"], p["i1"], p["i2"]
    state = SpinState.fractons(L, (i1, i2))
    if (i1 - 1) != (L - i2):
        # asymmetric placements have no closed form; report the lattice oracle only
        res = _ensemble_with_window(state, p, seed, "two", workers)
        res.save(out / "ensemble")
        late = res.window_profile
        late.to_csv(out / "late_time.csv")
        exact = lattice_two_fracton_profile(L, i1, i2)
        exact.to_csv(out / "lattice_exact.csv")
        mid = (i1 + i2) / 2
        half = (i2 - i1) / 2
        return {"peak": peak_summary(late, int(math.ceil(mid - half / 2)), int(math.floor(mid + half / 2))),
                "interior_max_z_vs_lattice_exact": max_z(late, exact, np.arange(2, L))}
    geom = TwoFractonGeometry(L - 1, i2 - i1)
    _, _, summary = _two_fracton_common(state, geom, p, seed, "two", out, workers)
    summary["initial"] = str(state)
    ChargeProfile(state.as_array().astype(float)).to_csv(out / "initial.csv")
    return summary


def _fig8(p, seed, out, workers):
    geom = TwoFractonGeometry(p["L"], p["delta"])
    state = geom.initial_state()
    late, ana, summary = _two_fracton_common(state, geom, p, seed, "overlay", out, workers)
    summary["peak_relative_deviation"] = abs(summary["peak"]["height"] - summary["analytic_peak"]) / summary["analytic_peak"]
    return summary


def two_fracton_sector_state(L: int) -> SpinState:
    """Symmetric two-``+`` state used for fragmentation reports:
    i1 = 1 + (L - 1) // 3, i2 = L + 1 - i1."""
    i1 = 1 + (L - 1) // 3
    return SpinState.fractons(L, (i1, L + 1 - i1))


def _krylov(p, seed, out, workers):
    summary: dict = {"sizes": {}}
    for L in p["sizes"]:
        state = two_fracton_sector_state(L)
        with stage(f"sector enumeration L={L}"):
            sector = enumerate_sector(L, sector_of(state))
        entry = {"initial": str(state), "sector_size": len(sector)}
        for n in (3, 4):
            with stage(f"Krylov decomposition L={L} n={n}"):
                dec = krylov_decompose(sector, build_class_table(n))
            cid = dec.component_containing(state)
            _write_json(out / f"krylov_L{L}_n{n}.json", {**dec.summary(), "initial": str(state),
                                                         "initial_component_size": len(dec.components[cid])})
            entry[f"n{n}"] = {
                "component_count": len(dec.components),
                "largest_fraction": dec.largest_fraction,
                "initial_component_size": len(dec.components[cid]),
                "initial_component_fraction": len(dec.components[cid]) / len(sector),
            }
        summary["sizes"][str(L)] = entry
    L = p["trajectory_L"]
    state = two_fracton_sector_state(L)
    sector = enumerate_sector(L, sector_of(state))
    summary["trajectory"] = {"L": L, "initial": str(state)}
    for n in (3, 4):
        dec = krylov_decompose(sector, build_class_table(n))
        comp = component_mean_profile(dec, state)
        with stage(f"trajectory average n={n}"):
            traj = trajectory_average(state, n, p["trajectory_steps"], p["burn_in"], derive_seed(seed, f"traj{n}"))
        _write_profile(out / f"component_mean_n{n}.csv", comp, *sector_of(state))
        _write_profile(out / f"trajectory_n{n}.csv", traj, *sector_of(state))
        summary["trajectory"][f"n{n}_max_abs_deviation"] = float(np.abs(traj.mean_charge - comp.mean_charge).max())
    return summary


def _equivalence(p, seed, out, workers):
    L = p["L"]
    summary = {}
    cases = {"single": SpinState.fractons(L, (p["single_site"],)), "two": SpinState.fractons(L, tuple(p["pair"]))}
    for name, state in cases.items():
        with stage(f"equivalence {name}"):
            rep = equivalence_check(L, state, p["n_steps"], p["n_realizations"], derive_seed(seed, name),
                                    p["n_points"], workers)
        rep.automaton.save(out / name / "automaton")
        rep.blocks.save(out / name / "blocks")
        summary[name] = rep.summary()
    return summary


PIPELINES = {
    "fig1_thermal": _fig1,
    "fig2_single": _fig2,
    "fig3_scaling": _fig3,
    "fig4_two": _fig4,
    "fig5_scaling": _fig5,
    "fig8_overlay": _fig8,
    "krylov_report": _krylov,
    "equivalence": _equivalence,
}


def run_experiment(spec: ExperimentSpec, out_dir: str | Path, workers: int = 1) -> Path:
    """Run one experiment and write its directory; returns the path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "meta.json", {"spec": spec.to_dict(), "seed": spec.seed, "code_version": code_version(),
                                    "package_version": __version__})
    summary = PIPELINES[spec.kind](spec.parameters, spec.seed, out, workers)
    _write_json(out / "summary.json", {"kind": spec.kind, "seed": spec.seed, **summary})
    return out


def default_spec(kind: str, seed: int = 0, paper_scale: bool = False) -> ExperimentSpec:
    return ExperimentSpec(kind, {}, seed, paper_scale)


def reproduce_all(out_dir: str | Path, seed: int = 0, paper_scale: bool = False, workers: int = 1,
                  kinds=KINDS) -> dict[str, Path]:
    out = Path(out_dir)
    return {k: run_experiment(default_spec(k, seed, paper_scale), out / k, workers) for k in kinds}
