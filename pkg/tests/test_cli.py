import json

from regcorr.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_classify_finds_certificate(capsys):
    code, out = run_cli(capsys, "classify", "box p <= p")
    assert code == 0
    assert '"kind": "sahlqvist"' in out


def test_classify_at_given_order_type(capsys):
    code, out = run_cli(capsys, "classify", "box(p -> q) <= (box p -> box q)",
                        "--eps", "p=1,q=1", "--omega", "p<q")
    assert code == 0
    assert "sahlqvist at given order type: False" in out
    assert "inductive at given (order type, dependency order): True" in out


def test_classify_json(capsys):
    code, out = run_cli(capsys, "classify", "box p <= p", "--json")
    data = json.loads(out)
    assert data["certificate"]["eps"] == {"p": "1"}


def test_correspond(capsys):
    code, out = run_cli(capsys, "correspond", "box p <= p")
    assert code == 0
    assert "![i0]: (N(i0) => R(i0,i0))" in out
    assert "n=3: ok" in out


def test_correspond_trace(capsys):
    code, out = run_cli(capsys, "correspond", "box p <= p", "--trace")
    assert code == 0
    assert '"rule": "adj_mult"' in out


def test_check_named_condition(capsys):
    code, out = run_cli(capsys, "check", "box p <= p", "pre-normal reflexivity")
    assert code == 0 and "equivalent" in out


def test_check_rejects_wrong_condition(capsys):
    code, out = run_cli(capsys, "check", "box p <= p", "normality",
                        "--max-n", "2")
    assert code == 1
    assert "NOT equivalent" in out


def test_check_tptp_sentence(capsys):
    code, out = run_cli(capsys, "check", "box p <= p", "![x]: (N(x) => R(x,x))")
    assert code == 0


def test_duality(capsys):
    code, out = run_cli(capsys, "duality", "--max-n", "2", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["classical"]["2"]["total"] == 25
    assert data["classical"]["2"]["fails"] == 0


def test_axioms_exit_code(capsys):
    code, out = run_cli(capsys, "axioms")
    assert code == 0
    assert "E5 frame class" in out and "MISMATCH" not in out


def test_axioms_json(capsys):
    code, out = run_cli(capsys, "axioms", "--json")
    data = json.loads(out)
    assert data["axioms"]["(2)"]["equivalent"] is True
    assert data["systems"]["E5"]["equivalent"] is True
    assert data["e5_equals_s5"] is True


def test_fuzz(capsys):
    code, out = run_cli(capsys, "fuzz", "--count", "10", "--seed", "1")
    assert code == 0
    assert "mismatches=0" in out


def test_signature_file_flag(tmp_path, capsys):
    sig_path = tmp_path / "sig.txt"
    sig_path.write_text("k 2 additive 11\n")
    code, out = run_cli(capsys, "classify", "k(p, q) <= dia p",
                        "--sig", str(sig_path))
    assert code == 0


def test_correspond_custom_signature_reports_pure_output(tmp_path, capsys):
    sig_path = tmp_path / "sig.txt"
    sig_path.write_text("k 2 additive 11\n")
    code, out = run_cli(capsys, "correspond", "k(p, q) <= dia p",
                        "--sig", str(sig_path))
    assert code == 0
    assert "k(#i1, #i2) <= dia #i1" in out
    assert "correspondent: unavailable" in out


def test_parse_error_exit(capsys):
    code, _ = run_cli(capsys, "classify", "box p <=")
    assert code == 2
