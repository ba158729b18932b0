import json
import subprocess
import sys


from patchfuzz.cli import EXIT_EMPTY, EXIT_ERROR, EXIT_OK, main, parse_duration
from conftest import corpus_path

BSEARCH = corpus_path("bsearch")
EXPLOIT = corpus_path("bsearch.tests/exploit", ".in")


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_parse_duration():
    assert parse_duration("120s") == 120
    assert parse_duration("2m") == 120
    assert parse_duration("500ms") == 0.5
    assert parse_duration("3") == 3


def test_exec_reports_crash(capsys):
    code, out, _ = run(capsys, "exec", BSEARCH, "--input", EXPLOIT)
    assert code == EXIT_OK
    assert "outcome: Crash(IntegerOverflow) at stmt 22" in out


def test_identity_patch_changes_nothing(capsys, tmp_path):
    patch = tmp_path / "id.fpz"
    code, _, _ = run(capsys, "mkpatch", BSEARCH, "--stmt-id", "22", "--stmt", "let mid = (lo + hi) / 2;",
                     "-o", str(patch))
    assert code == EXIT_OK
    data = corpus_path("bsearch.tests/t1", ".in")
    _, plain, _ = run(capsys, "exec", BSEARCH, "--input", data)
    _, patched, _ = run(capsys, "exec", BSEARCH, "--input", data, "--patch", str(patch))
    assert plain == patched


def test_fix_patch_avoids_crash(capsys, tmp_path):
    patch = tmp_path / "fix.fpz"
    _, out, _ = run(capsys, "mkpatch", BSEARCH, "--stmt-id", "22", "--stmt", "let mid = lo + (hi - lo) / 2;",
                    "-o", str(patch))
    digest = out.split()[0]
    assert len(digest) == 64
    code, out, _ = run(capsys, "exec", BSEARCH, "--input", EXPLOIT, "--patch", str(patch))
    assert "outcome: Normal(0)" in out and "output: b'1\\n'" in out


def test_mkpatch_rejects_bad_input(capsys, tmp_path):
    code, _, err = run(capsys, "mkpatch", BSEARCH, "--stmt-id", "999", "--stmt", "print(1);", "-o",
                       str(tmp_path / "x"))
    assert code == EXIT_ERROR and "--stmt-id" in err
    code, _, err = run(capsys, "mkpatch", BSEARCH, "--stmt-id", "22", "--stmt", "let = ;", "-o",
                       str(tmp_path / "x"))
    assert code == EXIT_ERROR and "--stmt" in err


def test_exec_rejects_corrupt_patch(capsys, tmp_path):
    bad = tmp_path / "bad.fpz"
    bad.write_bytes(b"garbage")
    code, _, err = run(capsys, "exec", BSEARCH, "--input", EXPLOIT, "--patch", str(bad))
    assert code == EXIT_ERROR and "FormatError" in err


def test_stmts_listing(capsys):
    code, out, _ = run(capsys, "stmts", corpus_path("wrongcmp"))
    lines = out.splitlines()
    assert code == EXIT_OK and len(lines) == 8
    assert lines[3].split()[:2] == ["3", "main:"]  # if is not patchable
    assert lines[4].split()[:2] == ["4", "*"]
    raw = run(capsys, "stmts", corpus_path("wrongcmp"), "--no-refactor")[1].splitlines()
    assert len(raw) == 7 and not any("__cf_" in l for l in raw)


def test_repair_writes_report(capsys, tmp_path):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "repair", corpus_path("divzero"), "--tests", corpus_path("divzero", ".tests"),
                       "--execs", "3000", "--seed", "1", "--max-steps", "5000", "--out", str(out_dir))
    assert code == EXIT_OK
    report = json.loads((out_dir / "report.json").read_text())
    assert report["plausible"] and report["seed"] == 1
    assert f"{len(report['plausible'])} plausible" in out


def test_seed_environment_overrides_flag(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("RLANG_SEED", "42")
    out_dir = tmp_path / "out"
    run(capsys, "repair", corpus_path("divzero"), "--tests", corpus_path("divzero", ".tests"),
        "--execs", "500", "--seed", "1", "--out", str(out_dir))
    assert json.loads((out_dir / "report.json").read_text())["seed"] == 42


def test_repair_zero_budget_exits_empty(capsys, tmp_path):
    out_dir = tmp_path / "out"
    code, _, _ = run(capsys, "repair", BSEARCH, "--tests", corpus_path("bsearch", ".tests"),
                     "--budget", "0s", "--out", str(out_dir))
    assert code == EXIT_EMPTY
    assert json.loads((out_dir / "report.json").read_text())["plausible"] == []


def test_repair_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "repair", BSEARCH, "--tests", str(tmp_path / "nope"))
    assert code == EXIT_ERROR and "--tests" in err
    code, _, err = run(capsys, "repair", BSEARCH)
    assert code == EXIT_ERROR and "--tests" in err
    code, _, _ = run(capsys, "repair", BSEARCH, "--budget", "soon")
    assert code == EXIT_ERROR
    suite = tmp_path / "suite"
    suite.mkdir()
    (suite / "t1.in").write_bytes(b"")
    code, _, err = run(capsys, "repair", BSEARCH, "--tests", str(suite))
    assert code == EXIT_ERROR and "exploit.in" in err


def test_missing_program(capsys, tmp_path):
    code, _, err = run(capsys, "stmts", str(tmp_path / "none.rl"))
    assert code == EXIT_ERROR and err.startswith("patchfuzz: error:")


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "patchfuzz.cli", "exec", BSEARCH, "--input", EXPLOIT],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "IntegerOverflow" in proc.stdout
