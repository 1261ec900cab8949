import time

import pytest

from fractonsim.chain import SpinState, dipole_moment, total_charge
from fractonsim.errors import ValidationError
from fractonsim.gates import (
    THREE_SITE_PAIRS,
    GateClassTable,
    apply_random_gate,
    build_class_table,
    decode,
    encode,
    neighbours,
    verify_three_site_table,
)


def _strings(c):
    return frozenset(str(SpinState(w)) for w in c)


def test_three_site_table_matches_known_pairs():
    t0 = time.perf_counter()
    table = build_class_table(3)
    assert {_strings(c) for c in table.nontrivial} == set(THREE_SITE_PAIRS)
    assert sum(len(c) for c in table.nontrivial) == 8
    assert table.size_histogram() == {1: 19, 2: 4}
    assert verify_three_site_table(table)
    assert time.perf_counter() - t0 < 1.0


def test_four_site_histogram_fixture():
    table = build_class_table(4)
    assert len(table.classes) == 49
    assert table.size_histogram() == {1: 26, 2: 14, 3: 9}


@pytest.mark.parametrize("n", [3, 4])
def test_classes_partition_and_conserve(n):
    table = build_class_table(n)
    members = [w for c in table.classes for w in c]
    assert len(members) == len(set(members)) == 3**n
    for c in table.classes:
        labels = {(sum(w), sum(k * s for k, s in enumerate(w, 1))) for w in c}
        assert len(labels) == 1


def test_verify_rejects_broken_tables():
    table = build_class_table(3)
    # drop the {0+0, +-+} pair entirely
    drop = [c for c in table.classes if _strings(c) != frozenset({"0+0", "+-+"})]
    broken = GateClassTable(3, tuple(drop), {w: k for k, c in enumerate(drop) for w in c})
    assert not verify_three_site_table(broken)
    # merge two classes with different (q, p)
    merged = list(table.classes)
    a, b = merged.pop(0), merged.pop(0)
    merged.insert(0, a + b)
    bad = GateClassTable(3, tuple(merged), {w: k for k, c in enumerate(merged) for w in c})
    assert not verify_three_site_table(bad)
    assert not verify_three_site_table(build_class_table(4))


def test_encode_decode_round_trip():
    for n in (3, 4):
        for code in range(3**n):
            assert encode(decode(code, n)) == code


def test_invalid_width():
    with pytest.raises(ValidationError):
        build_class_table(5)


def test_singleton_is_inert(rng):
    table = build_class_table(3)
    s = SpinState.vacuum(6)
    for start in range(1, 5):
        assert apply_random_gate(s, start, table, rng) == s


def test_pair_flip_probability(rng):
    table = build_class_table(3)
    s = SpinState.from_string("0+0")
    outcomes = [str(apply_random_gate(s, 1, table, rng)) for _ in range(4000)]
    assert set(outcomes) == {"0+0", "+-+"}
    frac = outcomes.count("+-+") / len(outcomes)
    # binomial sd is 0.0079
    assert abs(frac - 0.5) < 0.04


def test_placement_range(rng):
    with pytest.raises(ValidationError):
        apply_random_gate(SpinState.vacuum(5), 4, build_class_table(3), rng)


@pytest.mark.parametrize("n", [3, 4])
def test_conservation_over_many_applications(n, rng):
    table = build_class_table(n)
    L = 12
    s = SpinState(tuple(rng.integers(-1, 2, size=L)))
    q, p = total_charge(s), dipole_moment(s)
    for k in range(100_000 // 2):
        if k % 500 == 0:
            s = SpinState(tuple(rng.integers(-1, 2, size=L)))
            q, p = total_charge(s), dipole_moment(s)
        s = apply_random_gate(s, int(rng.integers(1, L - n + 2)), table, rng)
        assert total_charge(s) == q and dipole_moment(s) == p


def test_neighbours_are_one_gate_images():
    table = build_class_table(3)
    s = SpinState.from_string("0+000").sites
    assert {str(SpinState(t)) for t in neighbours(s, table)} == {"+-+00"}


def test_kernel_arrays_consistent():
    for n in (3, 4):
        table = build_class_table(n)
        class_index, offsets, members, digits = table.kernel_arrays()
        for code in range(3**n):
            w = tuple(int(v) for v in digits[code])
            assert w == decode(code, n)
            c = class_index[code]
            got = {decode(int(m), n) for m in members[offsets[c]:offsets[c + 1]]}
            assert got == set(table.members(w))


def test_table_json_dump():
    import json
    data = json.loads(build_class_table(3).to_json())
    assert data["window_width"] == 3
    assert len(data["string_to_class"]) == 27
    cid = data["string_to_class"]["0+0"]
    assert sorted(data["classes"][cid]) == ["+-+", "0+0"]
