import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bmlp.compiler import SymbolLookupError, SymbolTable, build_table, compile_ie, compile_rms, decode, decompile
from bmlp.datalog import Program, classify_lir, parse_program
from bmlp.petri import transform
from bmlp.solve import bmlp_rms, strip_reflexive
from conftest import CHAIN3

SHIFTED_CHAIN = """\
flight(c1,c2).
flight(c2,c3).
route(X,Y) :- flight(X,Y).
route(X,Y) :- flight(X,Z), route(Z,Y).
"""


def test_chain3_table():
    t = build_table(parse_program(CHAIN3))
    assert t.to_index == {"c0": 0, "c1": 1, "c2": 2}


def test_empty_table():
    assert build_table(Program()).n == 0


def test_chain3_rows():
    p = parse_program(CHAIN3)
    inp = compile_rms(p, build_table(p))
    assert inp.r1.row_ints() == [2, 4, 0]


def test_no_facts_gives_zero_matrix():
    p = parse_program("route(X,Y) :- flight(X,Y).\nroute(X,Y) :- flight(X,Z), route(Z,Y).")
    t = SymbolTable(("a", "b", "c"))
    assert compile_rms(p, t).r1.popcount() == 0
    assert compile_rms(p, t).r1.shape == (3, 3)


def test_flight_matrix(flights):
    p = transform(flights, {"berlin", "paris"}, union="flight", recursive="route")
    t = build_table(p)
    r1 = compile_rms(p, t).r1
    assert r1.shape == (6, 6) and r1.popcount() == 6
    for a, b in [
        ("marking_berlin_paris", "berlin_paris"),
        ("berlin_paris", "london_toronto"),
        ("berlin_paris", "london"),
        ("berlin_paris", "toronto"),
        ("london_toronto", "new_york"),
        ("new_york", "london"),
    ]:
        assert r1.get(t.index(a), t.index(b))


def test_shifted_chain_fact_rows():
    p = parse_program(SHIFTED_CHAIN)
    t = build_table(p)
    inp = compile_ie(p, t, "c1")
    assert inp.r1_first.row_ints() == [1, 2]
    assert inp.r2_second.row_ints() == [2, 4]
    assert inp.v.to_int() == 1


def test_unit_source_vector():
    t = SymbolTable(("c0", "c1", "c2"))
    inp = compile_ie(parse_program(CHAIN3), t, "c1")
    assert inp.v.to_int() == 2 and inp.v.popcount() == 1


def test_flight_ie_input(flights):
    p = transform(flights, {"berlin", "paris"}, union="flight", recursive="route")
    t = build_table(p)
    inp = compile_ie(p, t, "marking_berlin_paris")
    assert inp.k == 6
    assert decode(inp.v, t) == ["marking_berlin_paris"]
    for i, (a, b) in enumerate(classify_lir(p).edges):
        assert decode(inp.r1_first.row(i), t) == [a]
        assert decode(inp.r2_second.row(i), t) == [b]


def test_unknown_source():
    p = parse_program(CHAIN3)
    with pytest.raises(SymbolLookupError):
        compile_ie(p, build_table(p), "nowhere")
    fresh = compile_ie(p, build_table(p), "nowhere", allow_fresh=True)
    assert fresh.table.n == 4 and fresh.v.to_int() == 8


def test_table_extend_keeps_order():
    t = SymbolTable(("a", "b")).extend(["c", "a", "d", "c"])
    assert t.names == ("a", "b", "c", "d")
    with pytest.raises(ValueError):
        SymbolTable(("a", "a"))


RULES = "route(X,Y) :- flight(X,Y).\nroute(X,Y) :- flight(X,Z), route(Z,Y).\n"
pairs_st = st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=60)


def program(pairs):
    return parse_program("".join(f"flight(c{a},c{b}).\n" for a, b in pairs) + RULES)


@given(pairs_st)
def test_decompile_round_trip(pairs):
    p = program(pairs)
    t = build_table(p)
    prof = classify_lir(p)
    assert decompile(compile_rms(prof, t).r1, t, "flight") == prof.fact_set


@given(pairs_st)
def test_ie_rows_have_one_bit(pairs):
    p = program(pairs)
    inp = compile_ie(p, build_table(p), "c" + str(pairs[0][0]))
    assert all(r.popcount() == 1 for r in inp.r1_first.rows())
    assert all(r.popcount() == 1 for r in inp.r2_second.rows())


@given(pairs_st, st.randoms(use_true_random=False))
def test_permuted_order_gives_same_closure(pairs, rnd):
    p1 = program(pairs)
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    p2 = program(shuffled)
    views = []
    for p in (p1, p2):
        t = build_table(p)
        inp = compile_rms(p, t)
        views.append(decompile(strip_reflexive(bmlp_rms(inp), inp), t, "route"))
    assert views[0] == views[1]


def test_bit_convention_matches_semantics():
    rng = random.Random(0)
    pairs = [(rng.randrange(10), rng.randrange(10)) for _ in range(25)]
    p = program(pairs)
    t = build_table(p)
    r1 = compile_rms(p, t).r1
    for i in range(t.n):
        for j in range(t.n):
            assert r1.get(i, j) == ((int(t.name(i)[1:]), int(t.name(j)[1:])) in set(pairs))
