"""Command-line interface: ``bmlp <verb> ...``.

Exit codes:
    0  success
    1  parse error, unreadable input, or empty program
    2  program is not linear recursive (classification error)
    3  shape mismatch, unknown constant, or unknown place
    4  invalid probability or invalid arguments
    5  ``check`` found disagreeing solvers

Results go to standard output or ``--out``; diagnostics go to standard error.
Output files are written to a temporary name and renamed, so a failed run
never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench, formats
from .bitmat import BitMatrix, BitVector, ShapeError
from .compiler import SymbolLookupError, SymbolTable, build_table, compile_ie, compile_rms
from .datalog import (
    ClassificationError,
    DatalogError,
    Program,
    classify_lir,
    parse_program,
    render_program,
    seminaive_fixpoint,
)
from .petri import NetError, UnknownPlace, cross_check, parse_net, reach_query, render_net, transform
from .solve import bmlp_ie, bmlp_rms, ie_paths, naive_closure, strip_reflexive

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_CLASSIFY = 2
EXIT_LOOKUP = 3
EXIT_ARGS = 4
EXIT_DISAGREE = 5

METHOD_ALIASES = {
    "ie": "bmlp_ie",
    "rms": "bmlp_rms",
    "naive": "naive_closure",
    "seminaive": "seminaive_fixpoint",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse's own exit status 2 would collide with the classification code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        formats.write_text_atomic(out, text)


def _load_program(path: str) -> Program:
    prog = parse_program(_read(path))
    if len(prog) == 0:
        raise DatalogError(f"{path}: empty program")
    return prog


def _names(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise bench.InvalidProbability(f"not a number: {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise bench.InvalidProbability(f"probability {p} outside [0, 1]")
    return p


# -- verbs -------------------------------------------------------------------


def cmd_parse(args) -> int:
    prog = _load_program(args.file)
    if args.classify:
        prof = classify_lir(prog)
        print(f"% linear recursive: {prof.recursive} over {prof.union}", file=sys.stderr)
    _emit(render_program(prog), args.out)
    return EXIT_OK


def cmd_compile(args) -> int:
    prog = _load_program(args.file)
    prof = classify_lir(prog)
    table = build_table(prog)
    if args.algorithm == "ie":
        if args.source is None:
            raise UsageError("--source is required for ie")
        inp = compile_ie(prof, table, args.source)
        mats = {
            "v": formats.vector_matrix(inp.v),
            f"{prof.union}1": inp.r1_first,
            f"{prof.union}2": inp.r2_second,
        }
    else:
        mats = {"v": compile_rms(prof, table).r1}
    _write_matrices(args, table, mats)
    return EXIT_OK


def _write_matrices(args, table: SymbolTable, mats: dict[str, BitMatrix]) -> None:
    if getattr(args, "binary", False):
        if args.out is None:
            raise UsageError("--binary needs --out")
        formats.save_binary(args.out + ".npz", table, mats)
    _emit(formats.write_matrices(table, mats), args.out)


def _facts(pred: str, table: SymbolTable, rows: list[BitVector], row_names: list[str]) -> str:
    lines = []
    for name, row in zip(row_names, rows):
        lines.extend(f"{pred}({name},{table.name(j)})." for j in row.indices())
    return "".join(line + "\n" for line in lines)


def cmd_solve(args) -> int:
    prog = _load_program(args.file)
    prof = classify_lir(prog)
    table = build_table(prog)
    if args.algorithm == "ie":
        if args.source is None:
            raise UsageError("--source is required for ie")
        inp = compile_ie(prof, table, args.source)
        res = bmlp_ie(inp)
        v = res.vector if args.reflexive else ie_paths(res, inp)
        print(f"% ie: {res.iterations} iterations", file=sys.stderr)
        if args.facts:
            _emit(_facts(prof.recursive, table, [v], [args.source]), args.out)
        else:
            _write_matrices(args, table, {"v": formats.vector_matrix(v)})
        return EXIT_OK

    if args.algorithm == "seminaive":
        pairs = seminaive_fixpoint(prog, prof.recursive).pairs
        idx = [(table.index(a), table.index(b)) for a, b in pairs]
        m = BitMatrix.from_pairs(table.n, table.n, idx)
        if args.reflexive:
            m = BitMatrix.from_pairs(table.n, table.n, idx + [(i, i) for i in range(table.n)])
    else:
        inp = compile_rms(prof, table)
        solver = bmlp_rms if args.algorithm == "rms" else naive_closure
        res = solver(inp, threads=args.threads)
        print(f"% {args.algorithm}: {res.iterations} iterations", file=sys.stderr)
        m = res.matrix if args.reflexive else strip_reflexive(res, inp, args.threads)
    if args.facts:
        _emit(_facts(prof.recursive, table, m.rows(), list(table.names)), args.out)
    else:
        _write_matrices(args, table, {"v": m})
    return EXIT_OK


def _load_net(path: str):
    return parse_net(_read(path))


def cmd_transform(args) -> int:
    net = _load_net(args.file)
    prog = transform(net, _names(args.marking), args.union, args.recursive, args.predicate)
    _emit(render_program(prog), args.out)
    return EXIT_OK


def cmd_reach(args) -> int:
    net = _load_net(args.file)
    m0 = net.check_marking(_names(args.marking))
    reached = reach_query(net, m0, args.algorithm)
    shown = reached | m0 if args.include_marking else reached - m0
    lines = sorted(shown)
    if args.cross_check:
        report = cross_check(net, m0, args.algorithm).report()
        if report:
            lines.append(report)
    _emit("".join(line + "\n" for line in lines), args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.reactions is not None:
        reactions = bench.gen_reactions(args.n, args.reactions, args.seed)
        _emit(bench.render_reactions(reactions), args.out)
        return EXIT_OK
    net = bench.gen_net(bench.GenSpec(args.n, _probability(args.pt), args.seed, args.kind))
    _emit(render_net(net), args.out)
    return EXIT_OK


def _methods(text: str) -> list[str]:
    out = []
    for m in _names(text):
        m = METHOD_ALIASES.get(m, m)
        if m not in bench.METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHOD_ALIASES)}")
        out.append(m)
    return out


def cmd_bench(args) -> int:
    methods = _methods(args.methods)
    records = []
    if args.reactions is not None:
        reactions = bench.parse_reactions(_read(args.reactions))
        net = bench.reactions_to_net(reactions)
        for seed in args.seed:
            marking = bench.sample_marking(net, args.marking_size, seed)
            work = bench.MetabolicWorkload(tuple(reactions), marking, seed)
            records += bench.run_bench(work, methods, args.repeats, args.timeout, args.task, args.threads)
    else:
        pts = [_probability(p) for p in args.pt]
        for n in args.n:
            for p_t in pts:
                for seed in args.seed:
                    spec = bench.GenSpec(n, p_t, seed, args.kind)
                    print(f"% bench n={n} p_t={p_t} seed={seed}", file=sys.stderr)
                    records += bench.run_bench(spec, methods, args.repeats, args.timeout, args.task, args.threads)
    _emit(bench.write_csv(records), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    prog = _load_program(args.file)
    prof = classify_lir(prog)
    table = build_table(prog)
    inp = compile_rms(prof, table)
    views = {
        "rms": strip_reflexive(bmlp_rms(inp), inp),
        "naive": strip_reflexive(naive_closure(inp), inp),
    }
    pairs = seminaive_fixpoint(prog, prof.recursive).pairs
    views["seminaive"] = BitMatrix.from_pairs(table.n, table.n, [(table.index(a), table.index(b)) for a, b in pairs])
    rows = []
    for name in table.names:
        ie_inp = compile_ie(prof, table, name)
        rows.append(ie_paths(bmlp_ie(ie_inp), ie_inp))
    views["ie"] = BitMatrix.from_rows(table.n, rows)
    ref = views["rms"]
    bad = [k for k, m in views.items() if m != ref]
    if bad:
        for k in bad:
            diff = sorted(set(views[k].pairs()) ^ set(ref.pairs()))
            shown = ", ".join(f"{prof.recursive}({table.name(i)},{table.name(j)})" for i, j in diff[:10])
            print(f"{k} disagrees with rms on {len(diff)} facts: {shown}", file=sys.stderr)
        return EXIT_DISAGREE
    print(f"ok: {len(views)} solvers agree on {ref.popcount()} {prof.recursive} facts over {table.n} constants")
    return EXIT_OK


# -- wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bmlp", description="Boolean-matrix evaluation of linear recursive datalog and net reachability.")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", help="parse and pretty-print a program")
    p.add_argument("file")
    p.add_argument("--classify", action="store_true", help="also check the linear recursive shape")
    p.add_argument("--out")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("compile", help="write the input matrices for a solver")
    p.add_argument("file")
    p.add_argument("--algorithm", choices=("rms", "ie"), default="rms")
    p.add_argument("--source")
    p.add_argument("--out")
    p.add_argument("--binary", action="store_true", help="also write OUT.npz")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("solve", help="compute the closure of the recursive predicate")
    p.add_argument("file")
    p.add_argument("--algorithm", choices=tuple(METHOD_ALIASES), default="rms")
    p.add_argument("--source", help="query constant (required for ie)")
    p.add_argument("--out")
    p.add_argument("--facts", action="store_true", help="write derived ground facts instead of matrix rows")
    p.add_argument("--reflexive", action="store_true", help="include the diagonal as the solvers produce it")
    p.add_argument("--binary", action="store_true", help="also write OUT.npz")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("transform", help="translate a net and marking into a program")
    p.add_argument("file")
    p.add_argument("--marking", default="")
    p.add_argument("--union", default="r1")
    p.add_argument("--recursive", default="r2")
    p.add_argument("--predicate", help="use one fact predicate instead of transition names")
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("reach", help="places reachable from a marking")
    p.add_argument("file")
    p.add_argument("--marking", required=True)
    p.add_argument("--algorithm", choices=("ie", "rms"), default="ie")
    p.add_argument("--cross-check", action="store_true", help="compare against token simulation")
    p.add_argument("--include-marking", action="store_true", help="also list the marked places")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("gen", help="generate a random net or reaction list")
    p.add_argument("--n", type=int, required=True, help="places (or substrates with --reactions)")
    p.add_argument("--pt", default="0.01", help="transition probability per ordered place pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=("pairwise", "hypernode"), default="pairwise")
    p.add_argument("--reactions", type=int, help="emit this many random reactions instead of a net")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time the solvers and write CSV")
    p.add_argument("--methods", default=",".join(METHOD_ALIASES))
    p.add_argument("--n", type=int, nargs="+", default=[1000])
    p.add_argument("--pt", nargs="+", default=["0.01"])
    p.add_argument("--seed", type=int, nargs="+", default=[0])
    p.add_argument("--kind", choices=("pairwise", "hypernode"), default="pairwise")
    p.add_argument("--reactions", help="reaction file; benchmarks a sampled marking per seed")
    p.add_argument("--marking-size", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--timeout", type=float, default=300.0)
    p.add_argument("--task", choices=("one", "all"), default="one")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="run every solver on a program and compare")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClassificationError as exc:
        print(f"bmlp: classification error: {exc}", file=sys.stderr)
        return EXIT_CLASSIFY
    except (ShapeError, SymbolLookupError, UnknownPlace) as exc:
        print(f"bmlp: {exc}", file=sys.stderr)
        return EXIT_LOOKUP
    except (bench.InvalidProbability, UsageError) as exc:
        print(f"bmlp: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (DatalogError, NetError, bench.ReactionSyntaxError, formats.MatrixFormatError, OSError) as exc:
        print(f"bmlp: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
