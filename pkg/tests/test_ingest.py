import pytest
from hypothesis import given, strategies as st

from ctmix.classify import InstructionClass as C, parse_mnemonic_map
from ctmix.corpus import load_corpus
from ctmix.fixtures import fixture_path
from ctmix.ingest import (
    IngestError, MIX_CSV_HEADER, format_mix_csv, format_trace, parse_mix_csv,
    parse_mix_csv_rounds, parse_trace, trace_arch,
)
from ctmix.mix import MixVector, Verdict, build_mix, pairwise_check
from ctmix.vm import execute

HEADER = ",".join(MIX_CSV_HEADER)


def test_empty_trace_file():
    assert len(parse_trace("")) == 0


def test_three_line_trace():
    t = parse_trace("# arch: ctmix-isa/1\n0 add\n1 add\n2 beq\n")
    v = build_mix(t)
    assert v[C.LightAluInt] == 2 and v[C.ControlFlow] == 1 and v.total == 3
    assert [e.index for e in t] == [0, 1, 2]


def test_trace_arch_header():
    assert trace_arch("# arch: x86-64\n0 mov\n") == "x86-64"
    assert trace_arch("0 add\n") == ""


def test_unknown_mnemonic_named():
    with pytest.raises(IngestError) as info:
        parse_trace("0 add\n1 vfmadd231pd\n")
    assert "vfmadd231pd" in str(info.value) and info.value.line == 2


@pytest.mark.parametrize("text, line", [
    ("0 add extra\n", 1),
    ("x add\n", 1),
    ("1 add\n", 1),
    ("0 add\n0 add\n", 2),
    ("0 add\n3 add\n2 add\n", 3),
])
def test_malformed_traces(text, line):
    with pytest.raises(IngestError) as info:
        parse_trace(text)
    assert info.value.line == line


def test_indices_may_skip():
    assert len(parse_trace("0 add\n5 sub\n")) == 2


def test_foreign_map():
    m = parse_mnemonic_map("# arch: x86-64\nmovsd\tLoadFloat\nimul\tHeavyAluInt\njne\tControlFlow\n")
    v = build_mix(parse_trace("0 movsd\n1 imul\n2 jne\n3 jne\n", m))
    assert (v[C.LoadFloat], v[C.HeavyAluInt], v[C.ControlFlow]) == (1, 1, 2)


def test_password_ct_clang_o2_rows_equal():
    a, b = parse_mix_csv(fixture_path("password_ct_clang_O2.csv"))
    assert a == b
    assert (a[C.LoadInt], a[C.LightAluInt], a[C.HeavyAluInt], a[C.ControlFlow],
            a[C.StoreInt]) == (115, 13, 0, 10, 0)


def test_modexp_nct_gcc_o2_rows_differ():
    rows = parse_mix_csv(fixture_path("modexp_nct_gcc_O2.csv"))
    a, b = rows
    assert (a[C.LoadInt], b[C.LoadInt], a[C.StoreInt], b[C.StoreInt]) == (1657, 1661, 2, 3)
    assert (a[C.ControlFlow], b[C.ControlFlow]) == (252, 251)
    assert pairwise_check(rows).verdict is Verdict.NON_CONSTANT_TIME


def test_zero_row():
    (v,) = parse_mix_csv(HEADER + "\n0" + ",0" * 13 + "\n")
    assert v == MixVector()


def test_round_labels_kept():
    rows = parse_mix_csv_rounds(HEADER + "\n7" + ",1" * 13 + "\n9" + ",1" * 13 + "\n")
    assert [r for r, _ in rows] == [7, 9]


@pytest.mark.parametrize("text", [
    "",
    "round,load_int\n1,2\n",
    HEADER + "\n1" + ",0" * 12 + "\n",
    HEADER + "\n1" + ",0" * 12 + ",-1\n",
    HEADER + "\n1" + ",0" * 12 + ",x\n",
    HEADER + "\n1" + ",0" * 12 + ",1.5\n",
])
def test_bad_csv(text):
    with pytest.raises(IngestError):
        parse_mix_csv(text)


@given(st.lists(st.lists(st.integers(0, 10**9), min_size=13, max_size=13), max_size=20))
def test_csv_roundtrip(rows):
    vs = [MixVector(tuple(r)) for r in rows]
    assert parse_mix_csv(format_mix_csv(vs)) == vs


def test_ingest_agrees_with_vm_on_corpus():
    for bench in load_corpus():
        ex = execute(bench.program, bench.binding, bench.target_spec, secret=bench.base_secret)
        text = format_trace(ex.trace, "ctmix-isa/1")
        assert build_mix(parse_trace(text)) == build_mix(ex.trace), bench.name


def test_fixture_set_complete():
    from ctmix.fixtures import fixture_names
    names = fixture_names()
    assert len(names) == 24
    for name in names:
        rows = parse_mix_csv(fixture_path(name))
        assert len(rows) == 2
        for v in rows:  # float and vector columns are zero
            assert all(v[c] == 0 for c in C if c.name.endswith(("Float", "Vector")))
