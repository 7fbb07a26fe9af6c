import subprocess
import sys

import pytest

from conftest import CORPUS, corpus_path, pipeline
from semtrans.cli import main
from semtrans.syntax import pretty

MIXED_ATOMIC = """
(def f #:atomic (x) x)
(def g (x) x)
(def main ([Integer n]) (let h (if (< n 0) f g) (h n)))
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_transform_prints_the_machine(capsys):
    assert main(["transform", str(corpus_path("factorial"))]) == 0
    assert capsys.readouterr().out == pretty(pipeline("factorial").final)


def test_transform_stop_after_and_output_file(tmp_path, capsys):
    out = tmp_path / "out.sem"
    assert main(["transform", str(corpus_path("cbv")), "--stop-after", "cps", "-o", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text() == pretty(pipeline("cbv").programs["cps"])


def test_transform_is_deterministic(capsys):
    main(["transform", str(corpus_path("nbe"))])
    first = capsys.readouterr().out
    main(["transform", str(corpus_path("nbe"))])
    assert capsys.readouterr().out == first


def test_dump_cfa(tmp_path):
    dump = tmp_path / "cfa.txt"
    assert main(["transform", str(corpus_path("factorial")), "--dump-cfa", str(dump)]) == 0
    text = dump.read_text()
    assert ";; analysis of the anf program" in text
    assert ";; analysis of the cps program" in text
    assert "(callees (def factorial))" in text


def test_run(capsys):
    assert main(["run", str(corpus_path("factorial")), "5"]) == 0
    assert capsys.readouterr().out == "120\n"
    assert main(["run", str(corpus_path("factorial")), "--stage", "inline", "--", "-3"]) == 0
    assert capsys.readouterr().out == "1\n"


def test_run_records_and_closures(capsys):
    nbe = str(corpus_path("nbe"))
    assert main(["run", nbe, "{App {Abs {Var 0}} {Abs {Var 0}}}"]) == 0
    assert capsys.readouterr().out == "{Abs {Var 0}}\n"
    assert main(["run", str(corpus_path("cbv")), '{Abs "x" "x"}']) == 0
    assert capsys.readouterr().out.startswith("#<closure:")


def test_run_errors(tmp_path, capsys):
    cbv = str(corpus_path("cbv"))
    assert main(["run", cbv, '"z"']) == 4
    assert "empty environment" in capsys.readouterr().err
    assert main(["run", cbv, "1"]) == 1
    assert main(["run", cbv, "{Abs"]) == 1
    assert main(["run", str(corpus_path("factorial")), "--fuel", "10", "50"]) == 4
    assert "out-of-fuel" in capsys.readouterr().err


def test_check(capsys):
    for name in CORPUS:
        code = main(["check", str(corpus_path(name)), str(corpus_path(name, "tests"))])
        assert code == 0
        assert "0 mismatches" in capsys.readouterr().out


def test_check_mismatch(tmp_path, capsys):
    tests = write(tmp_path, "bad.tests", "(check (3) 7) (check (3) 6)")
    assert main(["check", str(corpus_path("factorial")), tests]) == 5
    captured = capsys.readouterr()
    assert "2 checks x 5 stages: 5 mismatches" in captured.out
    assert "(check (3) 7)" in captured.err


def test_exit_codes(tmp_path, capsys):
    assert main(["transform", write(tmp_path, "p.sem", "(def main (n) n)")]) == 2
    assert main(["transform", write(tmp_path, "q.sem", "(def main ([Integer n]) (")]) == 2
    assert main(["transform", write(tmp_path, "m.sem", MIXED_ATOMIC)]) == 3
    err = capsys.readouterr().err
    assert "mixed atomic and non-atomic callees at label" in err
    assert main(["transform", str(tmp_path / "missing.sem")]) == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["transform", str(corpus_path("cbv")), "--stop-after", "nope"])
    assert info.value.code == 1


def test_values_after_dash_dash_only_for_run(capsys):
    with pytest.raises(SystemExit) as info:
        main(["transform", str(corpus_path("cbv")), "--", "1"])
    assert info.value.code == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "semtrans", "run", str(corpus_path("factorial")), "4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == "24\n"
