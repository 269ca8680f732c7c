import pytest

from bmlp.bench import read_csv
from bmlp.cli import main
from bmlp.datalog import parse_program
from bmlp.formats import load_binary, read_matrices
from bmlp.petri import parse_net
from conftest import CHAIN3, FLIGHT_NET


@pytest.fixture
def files(tmp_path):
    (tmp_path / "ex3.dl").write_text(CHAIN3)
    (tmp_path / "flights.net").write_text(FLIGHT_NET)
    (tmp_path / "empty.dl").write_text("")
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_rms_listing(files, capsys):
    code, out, _ = run(capsys, "solve", "--algorithm", "rms", files / "ex3.dl")
    assert code == 0
    _, mats = read_matrices(out)
    assert mats["v"].row_ints() == [6, 4, 0]
    assert [line for line in out.splitlines() if line.startswith("v(")] == ["v(0,6).", "v(1,4).", "v(2,0)."]


def test_solve_reflexive_and_facts(files, capsys):
    _, out, _ = run(capsys, "solve", "--reflexive", files / "ex3.dl")
    assert read_matrices(out)[1]["v"].row_ints() == [7, 6, 4]
    _, out, _ = run(capsys, "solve", "--facts", "--algorithm", "seminaive", files / "ex3.dl")
    assert set(parse_program(out).facts) == set(
        parse_program("route(c0,c1). route(c0,c2). route(c1,c2).").facts
    )


@pytest.mark.parametrize("algorithm", ["rms", "naive", "seminaive"])
def test_solve_algorithms_agree(files, capsys, algorithm):
    _, out, _ = run(capsys, "solve", "--algorithm", algorithm, files / "ex3.dl")
    assert read_matrices(out)[1]["v"].row_ints() == [6, 4, 0]


def test_solve_ie_vector(files, capsys):
    out_file = files / "v.txt"
    code, _, _ = run(capsys, "solve", "--algorithm", "ie", "--source", "c1", "--reflexive", "--out", out_file, files / "ex3.dl")
    assert code == 0
    table, mats = read_matrices(out_file.read_text())
    assert table.n == 3 and mats["v"].row_ints() == [0b110]
    _, out, _ = run(capsys, "solve", "--algorithm", "ie", "--source", "c1", files / "ex3.dl")
    assert read_matrices(out)[1]["v"].row_ints() == [0b100]


def test_solve_binary_sidecar(files, capsys):
    out_file = files / "c.txt"
    assert run(capsys, "solve", "--binary", "--out", out_file, files / "ex3.dl")[0] == 0
    table, mats = load_binary(str(out_file) + ".npz")
    assert mats["v"].row_ints() == [6, 4, 0]


def test_compile_ie_matrices(files, capsys):
    code, out, _ = run(capsys, "compile", "--algorithm", "ie", "--source", "c0", files / "ex3.dl")
    assert code == 0
    mats = read_matrices(out)[1]
    assert mats["flight1"].row_ints() == [1, 2] and mats["flight2"].row_ints() == [2, 4]


def test_parse_round_trip(files, capsys):
    code, out, _ = run(capsys, "parse", "--classify", files / "ex3.dl")
    assert code == 0 and parse_program(out) == parse_program(CHAIN3)


def test_exit_codes(files, capsys):
    assert run(capsys, "solve", files / "empty.dl")[0] == 1
    assert run(capsys, "solve", files / "missing.dl")[0] == 1
    (files / "bad.dl").write_text("e(a,b")
    assert run(capsys, "solve", files / "bad.dl")[0] == 1
    (files / "nonlin.dl").write_text("r(X,Y) :- e(X,Y).\nr(X,Y) :- r(X,Z), r(Z,Y).\ne(a,b).")
    assert run(capsys, "solve", files / "nonlin.dl")[0] == 2
    assert run(capsys, "solve", "--algorithm", "ie", "--source", "zz", files / "ex3.dl")[0] == 3
    assert run(capsys, "reach", files / "flights.net", "--marking", "rome")[0] == 3
    assert run(capsys, "bench", "--pt", "1.5")[0] == 4
    assert run(capsys, "gen", "--n", "5", "--pt", "-1")[0] == 4
    assert run(capsys, "solve", "--algorithm", "ie", files / "ex3.dl")[0] == 4
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 4


def test_errors_go_to_stderr(files, capsys):
    code, out, err = run(capsys, "solve", files / "empty.dl")
    assert out == "" and "empty program" in err


def test_reach_flights(files, capsys):
    code, out, _ = run(capsys, "reach", files / "flights.net", "--marking", "berlin,paris")
    assert code == 0 and out.splitlines() == ["london", "new_york", "toronto"]
    _, out, _ = run(capsys, "reach", files / "flights.net", "--marking", "berlin,paris", "--include-marking")
    assert out.splitlines() == ["berlin", "london", "new_york", "paris", "toronto"]
    _, out, _ = run(capsys, "reach", files / "flights.net", "--marking", "berlin")
    assert out == ""


def test_reach_cross_check(files, capsys):
    run(capsys, "gen", "--n", "30", "--pt", "0.05", "--seed", "3", "--out", files / "g.net")
    code, out, _ = run(capsys, "reach", files / "g.net", "--marking", "c0,c5", "--cross-check")
    assert code == 0 and "DIVERGENCE" not in out
    (files / "div.net").write_text("transition t1: a -> x.\ntransition t2: b -> y.\ntransition t3: x y -> z.\n")
    _, out, _ = run(capsys, "reach", files / "div.net", "--marking", "a,b", "--cross-check")
    assert "DIVERGENCE marking=a,b" in out and "END DIVERGENCE" in out


def test_transform_output_parses(files, capsys):
    code, out, _ = run(capsys, "transform", files / "flights.net", "--marking", "berlin,paris", "--union", "flight", "--recursive", "route")
    assert code == 0
    assert len(parse_program(out).facts) == 6


def test_gen_deterministic(files, capsys):
    _, a, _ = run(capsys, "gen", "--n", "100", "--pt", "0.01", "--seed", "7")
    _, b, _ = run(capsys, "gen", "--n", "100", "--pt", "0.01", "--seed", "7")
    assert a == b and len(parse_net(a).places) == 100


def test_gen_reactions(files, capsys):
    code, out, _ = run(capsys, "gen", "--n", "40", "--reactions", "80", "--seed", "1", "--out", files / "r.txt")
    assert code == 0
    code, _, _ = run(capsys, "bench", "--reactions", files / "r.txt", "--marking-size", "10", "--out", files / "m.csv")
    recs = read_csv((files / "m.csv").read_text())
    assert code == 0 and len({r.popcount for r in recs}) == 1 and len(recs) == 4


def test_bench_csv(files, capsys):
    code, _, _ = run(capsys, "bench", "--methods", "rms,naive", "--n", "256", "--pt", "1", "--out", files / "b.csv")
    recs = read_csv((files / "b.csv").read_text())
    assert code == 0 and [r.method for r in recs] == ["bmlp_rms", "naive_closure"]
    assert recs[0].popcount == recs[1].popcount == 256


def test_check_verb(files, capsys):
    code, out, _ = run(capsys, "check", files / "ex3.dl")
    assert code == 0 and out.startswith("ok")


def test_check_reports_disagreement(files, capsys, monkeypatch):
    import bmlp.cli as cli
    from bmlp.bitmat import BitMatrix

    real = cli.strip_reflexive
    calls = []

    def broken(res, inp, threads=1):
        m = real(res, inp, threads)
        calls.append(1)
        return BitMatrix.zeros(*m.shape) if len(calls) == 2 else m

    monkeypatch.setattr(cli, "strip_reflexive", broken)
    code, _, err = run(capsys, "check", files / "ex3.dl")
    assert code == 5 and "naive disagrees" in err


def test_failed_run_leaves_no_output(files, capsys):
    target = files / "never.txt"
    assert run(capsys, "solve", "--out", target, files / "empty.dl")[0] == 1
    assert not target.exists()
