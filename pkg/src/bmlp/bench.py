"""Workload generators and the timing harness.

Randomness comes from the raw 64-bit output of PCG64 (numpy's reference
implementation), turned into uniforms as ``(x >> 11) * 2**-53``. Because only the
raw stream is used, generated nets are identical on every platform.
"""

from __future__ import annotations

import csv
import io
import math
import re
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .compiler import SymbolTable, build_table, compile_ie, compile_rms
from .datalog import Program, classify_lir, seminaive_model
from .petri import ElementaryNet, Marking, marking_constant, transform
from .solve import bmlp_ie, bmlp_rms, naive_closure
from .timing import Deadline, SolveTimeout

METHODS = ("bmlp_ie", "bmlp_rms", "naive_closure", "seminaive_fixpoint")
CSV_COLUMNS = (
    "method", "n", "p_t", "seed", "repeat",
    "phase_seconds_compile", "phase_seconds_solve", "iterations", "popcount", "timeout_flag",
)


class InvalidProbability(ValueError):
    pass


# -- random streams ----------------------------------------------------------


class Stream:
    """Uniform doubles and bounded integers from a seeded PCG64 raw stream."""

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF)

    def raw(self, size: int) -> np.ndarray:
        return np.asarray(self._bits.random_raw(size), dtype=np.uint64).reshape(size)

    def uniform(self, size: int) -> np.ndarray:
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def below(self, bound: int, size: int) -> np.ndarray:
        return (self.raw(size) % np.uint64(bound)).astype(np.int64)


# -- nets --------------------------------------------------------------------


@dataclass(frozen=True)
class GenSpec:
    n_places: int
    p_t: float
    seed: int = 0
    kind: Literal["pairwise", "hypernode"] = "pairwise"

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_t <= 1.0 or math.isnan(self.p_t):
            raise InvalidProbability(f"p_t must lie in [0, 1], got {self.p_t}")
        if self.n_places < 0:
            raise ValueError("n_places must be non-negative")
        if self.kind not in ("pairwise", "hypernode"):
            raise ValueError(f"unknown kind {self.kind!r}")


def gen_net(spec: GenSpec) -> ElementaryNet:
    """Random net on places ``c0..c{n-1}``.

    Every ordered pair ``(i, j)``, ``i != j``, gets a transition ``t_i_j`` with
    probability ``p_t``; one uniform is drawn per pair in row-major order,
    diagonal included. The hypernode kind then visits each unordered pair
    ``i < j`` and, with probability ``p_t / 10``, adds ``h_i_j`` from both places
    to one or two other places.
    """
    n, rng = spec.n_places, Stream(spec.seed)
    places = [f"c{i}" for i in range(n)]
    transitions = []
    for i in range(n):
        hit = np.flatnonzero(rng.uniform(n) < spec.p_t)
        transitions.extend((f"t_{i}_{j}", (places[i],), (places[j],)) for j in hit.tolist() if j != i)
    if spec.kind == "hypernode" and n >= 3:
        for i in range(n - 1):
            for j in np.flatnonzero(rng.uniform(n - 1 - i) < spec.p_t / 10).tolist():
                j += i + 1
                others = [k for k in range(n) if k not in (i, j)]
                width = 1 + int(rng.below(2, 1)[0]) if n >= 4 else 1
                picks = rng.below(len(others), width).tolist()
                outs = dict.fromkeys(places[others[k]] for k in picks)
                transitions.append((f"h_{i}_{j}", (places[i], places[j]), tuple(outs)))
    return ElementaryNet.build(transitions, places)


def chain_net(n: int) -> ElementaryNet:
    """``c0 -> c1 -> ... -> c{n-1}``."""
    places = [f"c{i}" for i in range(n)]
    return ElementaryNet.build([(f"t_{i}_{i + 1}", (places[i],), (places[i + 1],)) for i in range(n - 1)], places)


# -- metabolic reactions -----------------------------------------------------


class ReactionSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Reaction:
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]
    reversible: bool = False


_NUMBER = re.compile(r"[0-9]*\.?[0-9]+([eE][-+]?[0-9]+)?\Z")
_SUBSTRATE = re.compile(r"[A-Za-z0-9_]+\Z")


def _side(text: str, lineno: int) -> tuple[str, ...]:
    out: dict[str, None] = {}
    for part in text.split("+"):
        names = [tok for tok in part.split() if not _NUMBER.match(tok)]
        if len(names) != 1 or not _SUBSTRATE.match(names[0]):
            raise ReactionSyntaxError(f"cannot read substrate from {part.strip()!r}", lineno)
        out.setdefault(names[0].lower())
    return tuple(out)


def parse_reactions(text: str) -> list[Reaction]:
    """Read ``a + 2 B -> c`` / ``a <-> b`` lines; reversible lines yield both directions."""
    reactions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if "<->" in line:
            lhs, _, rhs = line.partition("<->")
            a, b = _side(lhs, lineno), _side(rhs, lineno)
            reactions += [Reaction(a, b, True), Reaction(b, a, True)]
        elif "->" in line:
            lhs, _, rhs = line.partition("->")
            reactions.append(Reaction(_side(lhs, lineno), _side(rhs, lineno)))
        else:
            raise ReactionSyntaxError("expected '->' or '<->'", lineno)
    return reactions


def render_reactions(reactions: Sequence[Reaction]) -> str:
    """Inverse of :func:`parse_reactions`; mirrored reversible pairs are written once with ``<->``."""
    lines, i = [], 0
    while i < len(reactions):
        r = reactions[i]
        nxt = reactions[i + 1] if i + 1 < len(reactions) else None
        if r.reversible and nxt == Reaction(r.rhs, r.lhs, True):
            lines.append(f"{' + '.join(r.lhs)} <-> {' + '.join(r.rhs)}\n")
            i += 2
        else:
            lines.append(f"{' + '.join(r.lhs)} -> {' + '.join(r.rhs)}\n")
            i += 1
    return "".join(lines)


def reactions_to_net(reactions: Sequence[Reaction]) -> ElementaryNet:
    return ElementaryNet.build([(f"rxn{i}", r.lhs, r.rhs) for i, r in enumerate(reactions)])


def gen_reactions(
    n_substrates: int, n_reactions: int, seed: int = 0, reversible: float = 0.25
) -> list[Reaction]:
    """Synthetic reaction list with about ``n_reactions`` directed reactions.

    Each side has one to three substrates (weights 5:3:2) drawn uniformly from
    ``s0..s{n-1}``; a fraction of reactions is reversible and counts twice.
    """
    rng = Stream(seed)
    names = [f"s{i}" for i in range(n_substrates)]
    sizes = np.array([1] * 5 + [2] * 3 + [3] * 2)
    out: list[Reaction] = []
    while len(out) < n_reactions:
        k_l, k_r = sizes[rng.below(10, 2)]
        picks = rng.below(n_substrates, int(k_l + k_r)).tolist()
        lhs = tuple(dict.fromkeys(names[i] for i in picks[:k_l]))
        rhs = tuple(dict.fromkeys(names[i] for i in picks[k_l:]))
        if rng.uniform(1)[0] < reversible and len(out) + 2 <= n_reactions:
            out += [Reaction(lhs, rhs, True), Reaction(rhs, lhs, True)]
        else:
            out.append(Reaction(lhs, rhs))
    return out


def sample_marking(net: ElementaryNet, size: int, seed: int) -> Marking:
    """``size`` distinct places chosen by a seeded partial shuffle."""
    rng = Stream(seed)
    pool = list(net.places)
    size = min(size, len(pool))
    draws = rng.raw(size).tolist()
    for i in range(size):
        j = i + draws[i] % (len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return frozenset(pool[:size])


@dataclass(frozen=True)
class MetabolicWorkload:
    reactions: tuple[Reaction, ...]
    marking: Marking
    seed: int = 0


# -- harness -----------------------------------------------------------------


@dataclass
class BenchRecord:
    method: str
    n: int
    p_t: float
    seed: int
    repeat: int
    phase_seconds_compile: float
    phase_seconds_solve: float
    iterations: int | None
    popcount: int | None
    timeout_flag: int = 0


@dataclass
class _Case:
    program: Program
    table: SymbolTable
    sources: list[str]
    n: int
    p_t: float
    seed: int


def _prepare(workload, task: Literal["one", "all"]) -> _Case:
    if isinstance(workload, MetabolicWorkload):
        net = reactions_to_net(workload.reactions)
        prog = transform(net, workload.marking, union="reaction", recursive="metabolic_path", shared_predicate="reaction")
        table = build_table(prog, SymbolTable(net.places))
        mc = marking_constant(net, workload.marking)
        table = table.extend([mc])
        n_sub = max(len(net.places), 1)
        return _Case(prog, table, [mc], len(net.places), len(net.transitions) / n_sub**2, workload.seed)
    if isinstance(workload, GenSpec):
        net, p_t, seed = gen_net(workload), workload.p_t, workload.seed
    elif isinstance(workload, ElementaryNet):
        net, seed = workload, 0
        p_t = len(workload.transitions) / max(len(workload.places), 1) ** 2
    else:
        raise TypeError(f"unsupported workload {type(workload).__name__}")
    prog = transform(net, frozenset(), union="flight", recursive="route", shared_predicate="flight")
    table = build_table(prog, SymbolTable(net.places))
    sources = list(net.places[:1]) if task == "one" else list(net.places)
    return _Case(prog, table, sources, len(net.places), p_t, seed)


def _run_method(method: str, case: _Case, deadline: Deadline, trace: Callable[[str], Callable[[], None]], threads: int):
    """Returns (compile seconds, solve seconds, iterations, popcount)."""
    t = case.table
    src_idx = [t.index(s) for s in case.sources]
    done = trace("compile")
    c0 = time.perf_counter()
    if method in ("bmlp_rms", "naive_closure"):
        inp = compile_rms(case.program, t)
    elif method == "bmlp_ie":
        base = compile_ie(case.program, t, case.sources[0]) if case.sources else None
        inputs = [base.with_source(s) for s in case.sources]
    elif method == "seminaive_fixpoint":
        recursive = classify_lir(case.program).recursive
    else:
        raise ValueError(f"unknown method {method!r}")
    c1 = time.perf_counter()
    done()

    done = trace("solve")
    s0 = time.perf_counter()
    if method == "bmlp_rms":
        res = bmlp_rms(inp, threads, deadline)
    elif method == "naive_closure":
        res = naive_closure(inp, threads, deadline)
    elif method == "bmlp_ie":
        results = [bmlp_ie(i, deadline) for i in inputs]
    else:
        model, rounds = seminaive_model(case.program, deadline)
    s1 = time.perf_counter()
    done()

    if method in ("bmlp_rms", "naive_closure"):
        iterations = res.iterations
        popcount = sum(res.matrix.row(i).popcount() for i in src_idx)
    elif method == "bmlp_ie":
        iterations = max((r.iterations for r in results), default=0)
        popcount = sum(r.vector.popcount() for r in results)
    else:
        iterations = rounds
        reach: dict[str, set[str]] = {s: {s} for s in case.sources}
        for x, y in model.get(recursive, ()):
            if x in reach:
                reach[x].add(y)
        popcount = sum(len(v) for v in reach.values())
    return c1 - c0, s1 - s0, iterations, popcount


def run_bench(
    workload: GenSpec | ElementaryNet | MetabolicWorkload,
    methods: Iterable[str] = METHODS,
    repeats: int = 1,
    timeout: float = 300.0,
    task: Literal["one", "all"] = "one",
    threads: int = 1,
    trace: list | None = None,
) -> list[BenchRecord]:
    """Time each method's solve phase separately from compilation.

    ``popcount`` is the size of the reflexive-transitive closure restricted to
    the query sources (``c0`` for task ``one``, every place for ``all``, the
    marking constant for metabolic workloads), so all methods must agree.
    A run that exceeds ``timeout`` seconds is recorded with ``timeout_flag=1``.
    ``trace``, when given, receives ``(method, repeat, phase, start, end)`` tuples.
    """
    prep0 = time.perf_counter()
    case = _prepare(workload, task)
    if trace is not None:
        trace.append(("*", -1, "prepare", prep0, time.perf_counter()))
    records = []
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        for rep in range(repeats):

            def tracer(phase: str, _m=method, _r=rep):
                start = time.perf_counter()

                def done():
                    if trace is not None:
                        trace.append((_m, _r, phase, start, time.perf_counter()))

                return done

            try:
                comp, solve, it, pop = _run_method(method, case, Deadline(timeout, stride=256), tracer, threads)
                records.append(BenchRecord(method, case.n, case.p_t, case.seed, rep, comp, solve, it, pop))
            except SolveTimeout:
                records.append(BenchRecord(method, case.n, case.p_t, case.seed, rep, 0.0, timeout, None, None, 1))
    return sort_records(records)


def sort_records(records: Iterable[BenchRecord]) -> list[BenchRecord]:
    return sorted(records, key=lambda r: (r.method, r.n, r.p_t, r.seed, r.repeat))


def write_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sort_records(records):
        row = asdict(r)
        w.writerow(["" if row[c] is None else row[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv(text: str) -> list[BenchRecord]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected columns {rows.fieldnames}")
    out = []
    for row in rows:
        vals = {}
        for k, v in row.items():
            if v == "":
                vals[k] = None
            elif k == "method":
                vals[k] = v
            elif k in ("p_t", "phase_seconds_compile", "phase_seconds_solve"):
                vals[k] = float(v)
            else:
                vals[k] = int(v)
        out.append(BenchRecord(**vals))
    return out
