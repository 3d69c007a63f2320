import json

import pytest

import seqslice

EXAMPLE = """int pick ( ) {
int D = 6 ;
int E = 7 ;
int F = 1 ;
D = E ;
F = D ;
int temp ;
if ( C <= A ) {
A = B ;
D = E ;
C = D ;
temp = B ;
}
return temp ;
}
"""


def test_oracle_on_the_if_example():
    assert seqslice.backward_slice(EXAMPLE, "temp", 12) == [7, 8, 12, 13]
    inst = seqslice.make_instance(EXAMPLE, "temp", 12)
    assert inst["gold_lines"] == [7, 8, 12, 13]
    assert inst["gold_text"].splitlines()[0] == "7 : int temp ;"


def test_bad_criterion_raises():
    with pytest.raises(seqslice.SeqsliceError):
        seqslice.backward_slice(EXAMPLE, "nothere", 12)


def test_generated_instances_are_deterministic():
    a = seqslice.random_instance(11)
    assert a == seqslice.random_instance(11)
    assert seqslice.backward_slice(a["program"], a["variable"], a["line"]) == a["gold_lines"]


def test_tree_distance_and_metrics():
    program = seqslice.generate_program(3)
    assert seqslice.tree_edit_distance(program, program) == 0.0
    assert seqslice.tree_edit_distance("int a ;", "int a = 1 ;") > 0
    gold = seqslice.make_instance(EXAMPLE, "temp", 12)["gold_text"]
    assert seqslice.exact_match(gold, gold) == 1.0
    assert seqslice.tsed_metric(gold, gold) == 1.0
    assert seqslice.acc_d([7, 8], [7, 8, 12, 13]) == 0.5
    assert 0.0 < seqslice.prefix_tsed(EXAMPLE, "7 : int temp ;") < 1.0


def test_cli_round_trip(tmp_path):
    data = tmp_path / "data"
    code, _, _ = seqslice.run_cli(["gen", "--seed", "1", "--out", str(data),
                                   "--train", "16", "--valid", "2", "--test", "2"])
    assert code == 0
    assert json.loads((data / "manifest.json").read_text())["files"]["train"]["count"] == 16
    ckpt = tmp_path / "m.ckpt"
    code, out, err = seqslice.run_cli(["train", "--data", str(data), "--out", str(ckpt), "--seed", "2",
                                       "--d-model", "16", "--heads", "2", "--ffn", "16", "--layers", "1",
                                       "--epochs", "1", "--min-count", "1"])
    assert code == 0, err
    slicer = seqslice.Slicer(str(ckpt))
    assert slicer.copy
    text = slicer.slice(EXAMPLE, "temp", 12, max_len=30)
    assert isinstance(text, str)
    assert seqslice.run_cli(["slice", "--ckpt", str(ckpt), "--source", str(data / "none.java"),
                             "--var", "a", "--line", "1"])[0] == 2
