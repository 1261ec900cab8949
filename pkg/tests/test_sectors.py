import itertools
import json

import numpy as np
import pytest

from fractonsim.analytic import lattice_two_fracton_profile, single_fracton_final
from fractonsim.chain import SpinState, sector_of, to_height_field
from fractonsim.errors import ValidationError
from fractonsim.gates import build_class_table, neighbours
from fractonsim.sectors import (
    component_mean_profile,
    enumerate_sector,
    enumerate_sector_bruteforce,
    krylov_component,
    krylov_decompose,
    sector_mean_profile,
)


@pytest.mark.parametrize("L", range(1, 9))
def test_dfs_matches_full_scan_all_sectors(L):
    labels = {sector_of(SpinState(s)) for s in itertools.product((-1, 0, 1), repeat=L)}
    total = 0
    for label in labels:
        fast = enumerate_sector(L, label)
        slow = enumerate_sector_bruteforce(L, label)
        assert fast.states == slow.states
        total += len(fast)
    assert total == 3**L


@pytest.mark.parametrize("L, label", [(9, (1, 5)), (10, (2, 11)), (10, (0, 0)), (10, (-3, -12))])
def test_dfs_matches_full_scan_l9_l10(L, label):
    assert enumerate_sector(L, label).states == enumerate_sector_bruteforce(L, label).states


def test_small_sector_examples():
    assert [str(SpinState(s)) for s in enumerate_sector(2, (2, 3)).states] == ["++"]
    assert [str(SpinState(s)) for s in enumerate_sector(3, (0, 0)).states] == ["000"]
    assert len(enumerate_sector(4, (5, 0))) == 0
    assert len(enumerate_sector(14, (2, 7))) == 12973
    with pytest.raises(ValidationError):
        enumerate_sector(17, (0, 0))


def test_sector_mean_examples():
    single = enumerate_sector(3, (3, 6))
    np.testing.assert_array_equal(sector_mean_profile(single).mean_charge, [1, 1, 1])
    neutral = sector_mean_profile(enumerate_sector(9, (0, 0))).mean_charge
    assert abs(neutral.sum()) < 1e-12
    np.testing.assert_allclose(neutral, -neutral[::-1], atol=1e-12)
    prof = sector_mean_profile(enumerate_sector(14, (2, 7)))
    prof.check_conservation(2, 7)
    # close to a decreasing straight line
    slope = np.polyfit(prof.coordinates, prof.mean_charge, 1)[0]
    assert slope < 0
    with pytest.raises(ValidationError):
        sector_mean_profile(enumerate_sector(4, (5, 0)))


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("L, label", [(8, (1, 4)), (10, (2, 11)), (9, (0, 0))])
def test_krylov_partition_and_closure(n, L, label):
    sector = enumerate_sector(L, label)
    table = build_class_table(n)
    dec = krylov_decompose(sector, table)
    assert sum(dec.sizes) == len(sector)
    members = np.concatenate(dec.components)
    assert len(np.unique(members)) == len(sector)
    assert dec.sizes == sorted(dec.sizes, reverse=True)
    index = sector.index()
    from fractonsim.sectors import pack
    for k, state in enumerate(sector.states):
        for nb in neighbours(state, table):
            assert dec.component_of[index[pack(nb)]] == dec.component_of[k]


def test_vacuum_component_is_singleton():
    vac = SpinState.vacuum(8)
    dec = krylov_decompose(enumerate_sector(8, (0, 0)), build_class_table(3))
    cid = dec.component_containing(vac)
    assert len(dec.components[cid]) == 1
    assert not component_mean_profile(dec, vac).mean_charge.any()
    assert krylov_component(vac, build_class_table(3)) == [vac.sites]


def test_component_containing_rejects_foreign_state():
    dec = krylov_decompose(enumerate_sector(6, (1, 3)), build_class_table(3))
    with pytest.raises(ValidationError):
        dec.component_containing(SpinState.fractons(6, (4,)))


def test_fragmentation_fixtures():
    # symmetric two-fracton sectors (2, L + 1); values recorded from BFS
    expect = {10: (48, 6), 11: (88, 10), 12: (194, 10)}
    for L, (c3, c4) in expect.items():
        sector = enumerate_sector(L, (2, L + 1))
        d3 = krylov_decompose(sector, build_class_table(3))
        d4 = krylov_decompose(sector, build_class_table(4))
        assert (len(d3.components), len(d4.components)) == (c3, c4)
        assert d3.largest_fraction < 0.5 < d4.largest_fraction
    dec = krylov_decompose(enumerate_sector(14, (2, 7)), build_class_table(3))
    assert len(dec.components) == 756
    dec4 = krylov_decompose(enumerate_sector(14, (2, 7)), build_class_table(4))
    assert dec4.sizes[0] == 12711


def test_single_tier_reachability():
    table = build_class_table(3)
    L = 10
    for bits in itertools.product((0, 1), repeat=L - 1):
        h = (0,) + bits + (1,)
        if any(abs(b - a) > 1 for a, b in zip(h, h[1:])):
            continue
        state = SpinState(tuple(np.diff(h)))
        for member in krylov_component(state, table):
            hh = to_height_field(SpinState(member)).heights
            assert set(hh) <= {0, 1}


@pytest.mark.parametrize("L, p", [(7, 4), (9, 3), (10, 5), (12, 2)])
def test_single_fracton_component_mean_is_exact_oracle(L, p):
    state = SpinState.fractons(L, (p,))
    dec = krylov_decompose(enumerate_sector(L, sector_of(state)), build_class_table(3))
    bfs = component_mean_profile(dec, state)
    np.testing.assert_allclose(bfs.mean_charge, single_fracton_final(L, p).mean_charge, atol=1e-12)


@pytest.mark.parametrize("L, i1, i2", [(10, 4, 7), (11, 3, 9), (12, 5, 8), (12, 3, 8)])
def test_two_fracton_component_mean_matches_lattice_oracle(L, i1, i2):
    state = SpinState.fractons(L, (i1, i2))
    dec = krylov_decompose(enumerate_sector(L, sector_of(state)), build_class_table(3))
    bfs = component_mean_profile(dec, state)
    np.testing.assert_allclose(bfs.mean_charge, lattice_two_fracton_profile(L, i1, i2).mean_charge, atol=1e-12)


def test_two_fracton_component_has_central_peak():
    L, i1, i2 = 12, 4, 9
    state = SpinState.fractons(L, (i1, i2))
    dec = krylov_decompose(enumerate_sector(L, sector_of(state)), build_class_table(3))
    m = component_mean_profile(dec, state).mean_charge
    interior = m[1:-1]
    assert interior.max() > 0
    assert i1 <= 2 + int(np.argmax(interior)) <= i2


def test_summary_json():
    dec = krylov_decompose(enumerate_sector(10, (2, 11)), build_class_table(3))
    data = json.loads(dec.to_json())
    assert data["sector"] == {"q_tot": 2, "p_tot": 11}
    assert data["sector_size"] == 347 and data["component_count"] == 48
    assert sum(int(k) * v for k, v in data["size_histogram"].items()) == 347
    assert data["largest_fraction"] == pytest.approx(dec.largest_fraction)
