import json
import shutil
import subprocess
import sys

import pytest

from ctmix.cli import main
from ctmix.corpus import corpus_dir, load_corpus
from ctmix.fixtures import fixture_names, fixture_path
from ctmix.harness import parse_text_report

PASSWORD_NCT = ["--program", str(corpus_dir() / "password_nct.s"), "--target", "password_checker",
                "--secret-addr", "0x1000", "--secret-len", "6",
                "--public", "mem:0x2000:736563726574", "--base-secret", "736563726574"]


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_password_nct(capsys):
    code, out, err = cli(capsys, "verify", *PASSWORD_NCT, "--seed", "0xDA1C", "--rounds", "5")
    assert code == 1 and err == ""
    assert "verdict: NON_CONSTANT_TIME" in out
    assert "violation: rounds 0 and 1" in out
    assert "Light ALU / Integer" in out


def test_verify_by_benchmark_name(capsys):
    code, out, _ = cli(capsys, "verify", "--benchmark", "password_nct", "--rounds", "5")
    assert code == 1 and "violation: rounds 0 and 1" in out
    code, out, _ = cli(capsys, "verify", "--benchmark", "password_ct", "--rounds", "20")
    assert code == 0 and "violation: none" in out


def test_verify_json_matches_text(capsys):
    for bench in load_corpus():
        args = ["verify", "--benchmark", bench.name, "--rounds", "6", "--exhaustive"]
        code_t, text, _ = cli(capsys, *args)
        code_j, js, _ = cli(capsys, *args, "--format", "json")
        doc = json.loads(js)
        parsed = parse_text_report(text)
        assert code_t == code_j == {"CONSTANT_TIME_OBSERVED": 0, "NON_CONSTANT_TIME": 1}[doc["verdict"]]
        assert parsed["verdict"] == doc["verdict"]
        assert parsed["violation"] == (doc["violation"] and doc["violation"]["rounds"])
        assert parsed["rounds"] == {r["round"]: list(r["mix"].values()) for r in doc["rounds"]}


def test_verify_directed(capsys):
    base = ["verify-directed", "--program", str(corpus_dir() / "modexp_nct.s"),
            "--target", "modexp", "--secret-addr", "0x1000", "--secret-len", "8",
            "--secrets", "8c00000000000000,f000000000000000"]
    code, out, _ = cli(capsys, *base)
    assert code == 1 and "Heavy ALU / Integer" in out
    code, out, _ = cli(capsys, *[a.replace("modexp_nct", "modexp_ct") for a in base])
    assert code == 0


def test_inconclusive_exit(capsys, tmp_path):
    src = tmp_path / "spin.s"
    src.write_text("main: call f\n halt\nf: ld r1, [r0]\n and r1, r1, 255\n"
                   " beq r1, r0, spin\n ret\nspin: jmp spin\n")
    code, out, _ = cli(capsys, "verify-directed", "--program", str(src), "--target", "f",
                       "--secret-addr", "0", "--secret-len", "1", "--secrets", "01,00",
                       "--budget", "500")
    assert code == 2 and "verdict: INCONCLUSIVE" in out


@pytest.mark.parametrize("name", fixture_names())
def test_ingest_mix_fixtures(capsys, name):
    code, out, _ = cli(capsys, "ingest-mix", "--csv", str(fixture_path(name)))
    expected = 1 if "_nct_" in name else 0
    assert code == expected
    assert ("NON_CONSTANT_TIME" in out) == bool(expected)


def test_ingest_mix_json(capsys):
    code, out, _ = cli(capsys, "ingest-mix", "--csv", str(fixture_path("password_nct_gcc_O0.csv")),
                       "--format", "json")
    doc = json.loads(out)
    assert code == 1 and doc["violation"]["l1"] == 117 and doc["violation"]["rounds"] == [1, 2]


def test_run_and_ingest_trace(capsys, tmp_path):
    trace = tmp_path / "t.txt"
    code, out, _ = cli(capsys, "run", "--program", str(corpus_dir() / "modexp_nct.s"),
                       "--target", "modexp", "--secret-addr", "0x1000", "--secret-len", "8",
                       "--secret", "8c00000000000000", "--dump-trace", str(trace),
                       "--format", "json")
    ran = json.loads(out)
    assert code == 0 and ran["status"] == "halted" and ran["mix"]["alu_heavy_int"] == 6
    code, out, _ = cli(capsys, "ingest-trace", "--trace", str(trace), "--format", "json")
    assert code == 0 and json.loads(out)["mix"] == ran["mix"]


def test_ingest_trace_with_map(capsys, tmp_path):
    (tmp_path / "m.map").write_text("imul\tHeavyAluInt\njne\tControlFlow\n")
    (tmp_path / "t.txt").write_text("0 imul\n1 jne\n")
    code, out, _ = cli(capsys, "ingest-trace", "--trace", str(tmp_path / "t.txt"),
                       "--map", str(tmp_path / "m.map"), "--format", "json")
    assert code == 0 and json.loads(out)["mix"]["alu_heavy_int"] == 1


def test_assemble_listing(capsys):
    code, out, _ = cli(capsys, "assemble", "--program", str(corpus_dir() / "password_ct.s"))
    assert code == 0 and out.startswith("; 21 instructions")


def test_corpus_command(capsys):
    code, out, _ = cli(capsys, "corpus", "--rounds", "5")
    assert code == 0
    assert out.strip().splitlines()[-1] == f"{len(load_corpus())}/{len(load_corpus())} verdicts as expected"


@pytest.mark.parametrize("argv, code", [
    ([], 64),
    (["frobnicate"], 64),
    (["verify", "--bogus-flag"], 64),
    (["verify", "--program", "x.s"], 64),
    (["verify", "--benchmark", "nope"], 64),
    (["verify", "--benchmark", "password_nct", "--rounds", "1"], 64),
    (["verify", "--benchmark", "password_nct", "--seed", "banana"], 64),
    (["verify", "--program", "/nonexistent.s", "--target", "f", "--secret-addr", "0",
      "--secret-len", "1"], 66),
    (["ingest-mix", "--csv", "/nonexistent.csv"], 66),
    (["verify", "--benchmark", "password_nct", "--base-secret", "00"], 65),
    (["verify", "--benchmark", "password_nct", "--target", "nope"], 65),
    (["verify", "--benchmark", "password_nct", "--public", "mem:0x1000:00"], 65),
])
def test_error_exit_codes(capsys, argv, code):
    got, out, err = cli(capsys, *argv)
    assert got == code
    assert out == ""
    assert len(err.strip().splitlines()) == 1 and err.startswith("ctmix: error: ")


def test_assemble_empty_file(capsys, tmp_path):
    (tmp_path / "e.s").write_text("")
    code, _, err = cli(capsys, "assemble", "--program", str(tmp_path / "e.s"))
    assert code == 65 and "no instructions" in err


def test_bad_csv_exit(capsys, tmp_path):
    (tmp_path / "b.csv").write_text("round,nope\n")
    code, _, err = cli(capsys, "ingest-mix", "--csv", str(tmp_path / "b.csv"))
    assert code == 65 and "header" in err


def test_console_script():
    exe = shutil.which("ctmix")
    cmd = [exe] if exe else [sys.executable, "-m", "ctmix.cli"]
    proc = subprocess.run(cmd + ["verify", "--benchmark", "password_nct", "--rounds", "5"],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and "NON_CONSTANT_TIME" in proc.stdout
    proc = subprocess.run(cmd + ["--bogus"], capture_output=True, text=True)
    assert proc.returncode == 64
