import json
import math

import numpy as np
import pytest

from fractonsim.analytic import TwoFractonGeometry, single_fracton_final, two_fracton_final_profile
from fractonsim.automaton import (
    EvolutionConfig,
    crossing_time,
    evolve_one_step,
    gates_per_step,
    geometric_schedule,
    measure_tau,
    run_ensemble,
    run_ensemble_groups,
    separation_r_prime,
    trajectory_average,
    width_r,
)
from fractonsim.chain import ChargeProfile, SpinState, dipole_moment, sector_of, total_charge
from fractonsim.errors import NotCrossedError, ValidationError
from fractonsim.gates import build_class_table
from fractonsim.sectors import component_mean_profile, enumerate_sector, krylov_decompose


def test_gates_per_step_rounds_half_up():
    assert gates_per_step(14, 4) == 4  # 3.5
    assert gates_per_step(51, 3) == 17
    assert gates_per_step(31, 3) == 10
    assert gates_per_step(3, 4) == 1


def test_zero_steps_returns_initial():
    s = SpinState.from_string("0+0-00+0")
    res = run_ensemble(EvolutionConfig(s, 3, 0, 1))
    np.testing.assert_array_equal(res.final().mean_charge, s.as_array())


def test_vacuum_is_inert(rng):
    table = build_class_table(3)
    s = SpinState.vacuum(10)
    for _ in range(20):
        s = evolve_one_step(s, table, rng)
    assert s == SpinState.vacuum(10)
    res = run_ensemble(EvolutionConfig(SpinState.vacuum(10), 3, 50, 10))
    assert not res.final().mean_charge.any()
    # four-site gates do act on the vacuum: 0000 <-> +--+
    res = run_ensemble(EvolutionConfig(SpinState.vacuum(10), 4, 50, 10))
    assert res.final().mean_charge.any()


def test_one_step_stays_in_sector(rng):
    table = build_class_table(3)
    s = SpinState.fractons(21, (11,))
    for _ in range(50):
        s = evolve_one_step(s, table, rng)
        assert sector_of(s) == (1, 11)


def test_table_row_reachable_in_one_gate(rng):
    from fractonsim.gates import apply_random_gate
    table = build_class_table(3)
    s = SpinState.from_string("+-+000")
    seen = {str(apply_random_gate(s, 1, table, rng)) for _ in range(50)}
    assert "0+0000" in seen


def test_determinism_and_worker_independence():
    cfg = EvolutionConfig(SpinState.fractons(21, (6, 16)), 3, 300, 40, [0, 10, 100, 300], 99, 200, 5)
    a = run_ensemble(cfg)
    b = run_ensemble(cfg)
    c = run_ensemble(cfg, workers=3)
    for t in cfg.record_times:
        np.testing.assert_array_equal(a.profiles[t].mean_charge, b.profiles[t].mean_charge)
        np.testing.assert_array_equal(a.profiles[t].mean_charge, c.profiles[t].mean_charge)
        np.testing.assert_array_equal(a.profiles[t].stderr, c.profiles[t].stderr)
    np.testing.assert_array_equal(a.window_profile.mean_charge, c.window_profile.mean_charge)
    other = run_ensemble(EvolutionConfig(cfg.initial_state, 3, 300, 40, [300], 100))
    assert not np.array_equal(other.final().mean_charge, a.final().mean_charge)


def test_grouped_run_pools_to_plain_run():
    cfg = EvolutionConfig(SpinState.fractons(17, (9,)), 3, 100, 37, [0, 50, 100], 5)
    plain = run_ensemble(cfg)
    pooled, groups = run_ensemble_groups(cfg, 8)
    assert sum(g.config.n_realizations for g in groups) == 37
    for t in cfg.record_times:
        np.testing.assert_array_equal(plain.profiles[t].mean_charge, pooled.profiles[t].mean_charge)
        weighted = sum(g.profiles[t].mean_charge * g.config.n_realizations for g in groups) / 37
        np.testing.assert_allclose(weighted, plain.profiles[t].mean_charge, atol=1e-12)


@pytest.mark.parametrize("n, state", [(3, SpinState.fractons(25, (7, 19))), (4, SpinState.from_string("0+0-0++0-0+00"))])
def test_profiles_conserve_charge_and_dipole(n, state):
    cfg = EvolutionConfig(state, n, 400, 30, geometric_schedule(400), 3, 100, 3)
    res = run_ensemble(cfg)
    q, p = total_charge(state), dipole_moment(state)
    for prof in list(res.profiles.values()) + [res.window_profile]:
        prof.check_conservation(q, p, tol=1e-9 * state.L)


def test_compiled_kernel_matches_python_stepper():
    # independent implementations of the same step; compare ensemble means
    state = SpinState.fractons(11, (4, 8))
    table = build_class_table(3)
    rng = np.random.default_rng(7)
    R, T = 3000, 15
    acc = np.zeros((R, state.L))
    for j in range(R):
        s = state
        for _ in range(T):
            s = evolve_one_step(s, table, rng)
        acc[j] = s.sites
    py = ChargeProfile(acc.mean(axis=0), acc.std(axis=0, ddof=1) / math.sqrt(R))
    nb = run_ensemble(EvolutionConfig(state, 3, T, R, None, 8)).final()
    z = np.abs(py.mean_charge - nb.mean_charge) / np.sqrt(py.stderr**2 + nb.stderr**2 + 1e-300)
    assert z.max() < 4.5


def test_trajectory_average_matches_component_mean():
    state = SpinState.fractons(10, (4, 7))
    dec = krylov_decompose(enumerate_sector(10, sector_of(state)), build_class_table(3))
    comp = component_mean_profile(dec, state)
    traj = trajectory_average(state, 3, 1_000_000, 1000, seed=4)
    assert np.abs(traj.mean_charge - comp.mean_charge).max() < 0.02


def test_config_validation():
    s = SpinState.fractons(10, (5,))
    with pytest.raises(ValidationError):
        EvolutionConfig(s, 5)
    with pytest.raises(ValidationError):
        EvolutionConfig(s, 3, 10, 0)
    with pytest.raises(ValidationError):
        EvolutionConfig(s, 3, 10, 1, [0, 11])
    with pytest.raises(ValidationError):
        EvolutionConfig(SpinState.vacuum(3), 4)
    with pytest.raises(ValidationError):
        EvolutionConfig(s, 3, 10, 1, None, 0, 11)


def test_geometric_schedule():
    t = geometric_schedule(1000, 1.03)
    assert t[0] == 0 and t[-1] == 1000
    assert all(b > a for a, b in zip(t, t[1:]))
    gaps = [(b - a) / a for a, b in zip(t[1:], t[2:]) if a > 100]
    assert max(gaps) < 0.04


# ---------------------------------------------------------------- observables


def test_width_examples():
    L = 21
    x0 = 11
    delta = ChargeProfile(np.eye(L)[x0 - 1])
    assert width_r(delta, x0) == 0.0
    d = 4
    two = ChargeProfile(0.5 * (np.eye(L)[x0 - 1 - d] + np.eye(L)[x0 - 1 + d]))
    assert width_r(two, x0) == pytest.approx(d)
    L = 51
    assert width_r(single_fracton_final(L, 26), (L + 1) / 2) == pytest.approx((L - 1) / 2)


def test_width_negative_radicand():
    prof = ChargeProfile(np.array([-0.5, 1.0, 0.0, 0.0, 0.0]), np.zeros(5))
    with pytest.raises(ValidationError):
        width_r(prof, 2)
    assert math.isnan(width_r(prof, 2, strict=False))
    noisy = ChargeProfile(np.array([-0.01, 1.0, 0.0]), np.array([0.05, 0.0, 0.0]))
    assert width_r(noisy, 2) == 0.0


def test_separation_examples():
    L = 20
    i1, i2 = 6, 15
    prof = ChargeProfile(np.eye(L)[i1 - 1] + np.eye(L)[i2 - 1])
    assert separation_r_prime(prof) == i2 - i1
    ends = np.zeros(L)
    ends[0] = ends[-1] = 1
    assert separation_r_prime(ChargeProfile(ends)) == 0
    geom = TwoFractonGeometry(80, 40)
    assert separation_r_prime(two_fracton_final_profile(geom)) < 0.25 * geom.delta


def test_separation_skips_middle_site_for_odd_L():
    prof = ChargeProfile(np.eye(21)[10])  # site 11 = L/2 + 1/2 counts as right half
    assert separation_r_prime(prof) == 11


def test_crossing_time():
    t = [0, 10, 20, 30]
    assert crossing_time(t, [5, 6, 7, 8], 4, rising=True) == 0
    assert crossing_time(t, [0, 1, 3, 5], 2, rising=True) == pytest.approx(15)
    assert crossing_time(t, [8, 6, 4, 2], 5, rising=False) == pytest.approx(15)
    with pytest.raises(NotCrossedError):
        crossing_time(t, [0, 1, 1, 1], 2, rising=True)


def test_measure_tau_already_past_and_not_crossed():
    s = SpinState.fractons(21, (11,))
    cfg = EvolutionConfig(s, 3, 50, 10, geometric_schedule(50), 1)
    assert measure_tau(cfg, "width_r", 0.0) == 0.0
    with pytest.raises(NotCrossedError):
        measure_tau(cfg, "width_r", 100.0)
    with pytest.raises(ValidationError):
        measure_tau(cfg, "nope", 1.0)


def test_save_layout(tmp_path):
    s = SpinState.fractons(15, (5, 11))
    cfg = EvolutionConfig(s, 3, 20, 8, [0, 10, 20], 2, 10, 2)
    out = run_ensemble(cfg).save(tmp_path / "run")
    meta = json.loads((out / "meta.json").read_text())
    assert meta["config"]["master_seed"] == 2 and meta["engine"] == "automaton"
    assert meta["config"]["initial_state"] == str(s)
    assert {p.name for p in out.glob("profile_t*.csv")} == {"profile_t0.csv", "profile_t10.csv", "profile_t20.csv"}
    rows = (out / "metrics.csv").read_text().splitlines()
    assert rows[0] == "t,r,r_prime" and len(rows) == 4
    assert float(rows[1].split(",")[2]) == 6.0
    back = ChargeProfile.from_csv(out / "profile_t0.csv")
    np.testing.assert_array_equal(back.mean_charge, s.as_array())
    assert (out / "profile_window.csv").exists()
