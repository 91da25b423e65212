import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blvos.circuit import (BlockTag, Gate, GateKind, MultiplierSpec, Netlist, Region, SpecError, Structure,
                           build_multiplier, crossing_nets, decompose_operand, dump_netlist, evaluate,
                           insert_level_shifters, level_shifter_count, region_gate_sets, validate)


def _grid(n):
    side = 1 << n
    a = np.repeat(np.arange(side), side)
    b = np.tile(np.arange(side), side)
    return a, b


@pytest.mark.parametrize("n,k", [(2, 1), (4, 1), (4, 2), (4, 3), (8, 2), (8, 4), (8, 6), (8, 7)])
def test_exact_product_exhaustive(n, k):
    net = build_multiplier(MultiplierSpec(n, k))
    a, b = _grid(n)
    assert np.array_equal(evaluate(net, a, b), a * b)


def test_worked_products():
    assert evaluate(build_multiplier(MultiplierSpec(8, 4)), 171, 205) == 35055
    gated = build_multiplier(MultiplierSpec(8, 4, gated_blocks=frozenset({BlockTag.LL})))
    assert evaluate(gated, 171, 205) == 34912


def test_two_bit_table():
    net = build_multiplier(MultiplierSpec(2, 1))
    for a, b in itertools.product(range(4), repeat=2):
        assert evaluate(net, a, b) == a * b


def test_sixteen_bit_samples(rng):
    net = build_multiplier(MultiplierSpec(16, 8))
    a = rng.integers(0, 1 << 16, 2000)
    b = rng.integers(0, 1 << 16, 2000)
    assert np.array_equal(evaluate(net, a, b), a * b)


@pytest.mark.parametrize("k", [1, 3, 4, 7])
def test_gating_identities(k):
    n = 8
    a, b = _grid(n)
    ah, al = a >> k, a & ((1 << k) - 1)
    bh, bl = b >> k, b & ((1 << k) - 1)
    expect = {
        BlockTag.LL: a * b - al * bl,
        BlockTag.HL: a * b - ah * bl * (1 << k),
        BlockTag.LH: a * b - al * bh * (1 << k),
    }
    for tag, want in expect.items():
        net = build_multiplier(MultiplierSpec(n, k, gated_blocks=frozenset({tag})))
        assert np.array_equal(evaluate(net, a, b), want), tag


def test_gating_removes_block_gates():
    net = build_multiplier(MultiplierSpec(8, 4, gated_blocks=frozenset({BlockTag.LL, BlockTag.HL})))
    tags = {g.block_tag for g in net.gates}
    assert BlockTag.LL not in tags and BlockTag.HL not in tags


@pytest.mark.parametrize("t", [1, 4, 7])
def test_truncation_drops_low_columns(t):
    n, k = 8, 4
    net = build_multiplier(MultiplierSpec(n, k, truncation=t))
    a, b = _grid(n)
    out = evaluate(net, a, b)
    assert np.all(out & ((1 << t) - 1) == 0)
    assert np.all(out <= a * b)
    # each dropped partial product of weight < 2^t is gone; nothing else is
    full = build_multiplier(MultiplierSpec(n, k))
    assert len(net.gates) < len(full.gates)


def test_truncation_keeps_exact_high_bits_bound():
    n, k, t = 8, 4, 4
    net = build_multiplier(MultiplierSpec(n, k, truncation=t))
    a, b = _grid(n)
    dropped = np.zeros_like(a)
    for i in range(n):
        for j in range(n):
            if i + j < t:
                dropped += (((a >> i) & 1) * ((b >> j) & 1)) << (i + j)
    assert np.array_equal(evaluate(net, a, b), a * b - dropped)


@pytest.mark.parametrize("bad", [dict(n=8, k=0), dict(n=8, k=8), dict(n=8, k=4, truncation=16),
                                 dict(n=8, k=4, gated_blocks=frozenset({BlockTag.HH}))])
def test_spec_rejected(bad):
    with pytest.raises(SpecError):
        MultiplierSpec(**bad)


def test_structure_parse():
    assert Structure.parse("blvos3") is Structure.BLVOS3
    assert Structure.parse("BL-VOS2") is Structure.BLVOS2
    assert Structure.parse(4) is Structure.BLVOS4


@pytest.mark.parametrize("x,n,k,want", [(0xAB, 8, 4, (0xA, 0xB)), (0, 16, 12, (0, 0)), (255, 8, 2, (63, 3))])
def test_decompose_examples(x, n, k, want):
    assert decompose_operand(x, n, k) == want


@given(st.integers(2, 16).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1),
                                                      st.integers(0, (1 << n) - 1))))
def test_decompose_round_trip(args):
    n, k, x = args
    hi, lo = decompose_operand(x, n, k)
    assert hi * (1 << k) + lo == x
    assert 0 <= lo < (1 << k) and 0 <= hi < (1 << (n - k))


def test_validate_ok_and_faults():
    net = build_multiplier(MultiplierSpec(8, 4, Structure.BLVOS3))
    assert validate(net) == []
    g0 = net.gates[0]
    dup = Gate("dup", GateKind.AND2, g0.inputs, g0.output, g0.block_tag, 1.0)
    bad = Netlist(net.gates + (dup,), net.primary_inputs, net.primary_outputs, net.n, net.k)
    diags = validate(bad)
    assert any(g0.output in d and "drivers" in d for d in diags)
    short = Gate("short", GateKind.AND2, (g0.inputs[0],), "zz", BlockTag.GLUE, 1.0)
    bad = Netlist(net.gates + (short,), net.primary_inputs, net.primary_outputs, net.n, net.k)
    assert any("short" in d and "expects 2 inputs" in d for d in validate(bad))


def test_validate_cycle():
    g1 = Gate("g1", GateKind.AND2, ("a0", "y"), "x", BlockTag.GLUE, 1.0)
    g2 = Gate("g2", GateKind.AND2, ("b0", "x"), "y", BlockTag.GLUE, 1.0)
    net = Netlist((g1, g2), ("a0", "a1", "b0", "b1"), ("x", "y", "x", "y"), 2, 1)
    assert any("cycle" in d.lower() for d in validate(net))


def test_region_sets_examples():
    net = build_multiplier(MultiplierSpec(8, 4))
    every = frozenset(g.id for g in net.gates)
    assert region_gate_sets(net, Structure.BLVOS0)[Region.APPROX] == frozenset()
    assert region_gate_sets(net, Structure.BLVOS4)[Region.APPROX] == every
    for s in Structure:
        r = region_gate_sets(net, s)
        assert r[Region.APPROX] | r[Region.ACCURATE] == every
        assert not r[Region.APPROX] & r[Region.ACCURATE]


@pytest.mark.parametrize("n", [4, 8])
def test_region_nesting(n):
    for k in range(1, n):
        net = build_multiplier(MultiplierSpec(n, k))
        sets = [region_gate_sets(net, s)[Region.APPROX] for s in Structure]
        for small, big in zip(sets, sets[1:]):
            assert small <= big


@pytest.mark.parametrize("s,want", [(Structure.BLVOS1, 4), (Structure.BLVOS2, 12), (Structure.BLVOS3, 13),
                                    (Structure.BLVOS4, 0), (Structure.BLVOS0, 0)])
def test_shifter_formula(s, want):
    assert level_shifter_count(s, 8, 2) == want


def test_shifter_formula_16():
    assert level_shifter_count(Structure.BLVOS4, 16, 8) == 0


@pytest.mark.parametrize("n", [8, 16])
def test_crossing_nets_match_formula(n):
    # the closed forms assume every block contributes bits to the crossing; this holds for 2 <= k <= n-2
    for k in range(2, n - 1):
        net = build_multiplier(MultiplierSpec(n, k))
        for s in (Structure.BLVOS1, Structure.BLVOS2, Structure.BLVOS3, Structure.BLVOS4):
            assert len(crossing_nets(net, s)) == level_shifter_count(s, n, k), (n, k, s)


def test_shifter_insertion_preserves_function():
    net = build_multiplier(MultiplierSpec(8, 4))
    approx = region_gate_sets(net, Structure.BLVOS2)[Region.APPROX]
    nets = crossing_nets(net, Structure.BLVOS2)
    shifted = insert_level_shifters(net, approx, nets, 0.5)
    assert validate(shifted) == []
    assert sum(g.kind is GateKind.LEVEL_SHIFTER for g in shifted.gates) == len(nets)
    a, b = _grid(8)
    assert np.array_equal(evaluate(shifted, a, b), a * b)
    # accurate readers only see shifted copies of crossing nets
    for g in shifted.gates:
        if g.id not in approx and g.kind is not GateKind.LEVEL_SHIFTER:
            assert not set(g.inputs) & set(nets)


def test_block_tags_cover_all_gates():
    net = build_multiplier(MultiplierSpec(8, 3))
    tags = {g.block_tag for g in net.gates}
    assert tags == {BlockTag.LL, BlockTag.HL, BlockTag.LH, BlockTag.HH, BlockTag.ADDER1,
                    BlockTag.ADDER2, BlockTag.ADDER3, BlockTag.HA_FINAL}


def test_dump_format():
    net = build_multiplier(MultiplierSpec(2, 1))
    lines = [ln for ln in dump_netlist(net).splitlines() if not ln.startswith("#")]
    assert len(lines) == len(net.gates)
    gid, kind, tag, ins, out = lines[0].split()
    assert GateKind(kind) and BlockTag(tag)
    assert out == net.gates[0].output


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))),
       st.integers(0, 2 ** 20 - 1), st.integers(0, 2 ** 20 - 1))
def test_random_widths_exact(nk, x, y):
    n, k = nk
    x %= 1 << n
    y %= 1 << n
    assert evaluate(build_multiplier(MultiplierSpec(n, k)), x, y) == x * y
