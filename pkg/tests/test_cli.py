import json
from fractions import Fraction


from adelic import cli
from adelic.adeles import TruncatedAdele
from adelic.formula import is_quantifier_free, parse_bool_formula
from adelic.placesets import PlaceSet


def _run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, out


def _run_json(capsys, argv):
    code, out = _run(capsys, argv)
    return code, json.loads(out)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# --------------------------------------------------------------------------
# happy paths


def test_qe_bool(tmp_path, capsys):
    path = _write(tmp_path, "f.bool", "exists X . X <= Y & C[1](X)")
    code, doc = _run_json(capsys, ["qe-bool", path])
    assert code == 0
    assert doc["status"] == "ok"
    assert is_quantifier_free(parse_bool_formula(doc["payload"]["formula"]))


def test_decide_bool(tmp_path, capsys):
    path = _write(tmp_path, "f.bool", "!Fin(1)")
    code, doc = _run_json(capsys, ["decide-bool", path])
    assert code == 0
    assert doc["payload"]["value"] is True


def test_fv_reduce(tmp_path, capsys):
    path = _write(tmp_path, "f.ring", "x+y=z")
    code, doc = _run_json(capsys, ["fv-reduce", path])
    assert code == 0
    assert doc["payload"]["mode"] == "finite"
    assert doc["payload"]["psis"] == ["x + y = z"]

    code, doc = _run_json(capsys, ["fv-reduce", path, "--restricted"])
    assert code == 0
    assert doc["payload"]["mode"] == "restricted"


def test_fv_check(tmp_path, capsys):
    path = _write(tmp_path, "f.ring", "exists x . x*x=x & !(x=0)")
    code, doc = _run_json(
        capsys, ["fv-check", path, "--factors", "F2,F3,Z4", "--trials", "6"])
    assert code == 0
    payload = doc["payload"]
    assert payload["trials"] == 6
    assert payload["agreements"] == 6
    assert payload["all_agree"] is True
    assert payload["mismatches"] == []
    assert payload["seed"] == 0


def test_fv_check_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ADELIC_FV_SEED", "123")
    path = _write(tmp_path, "f.ring", "x=0")
    code, doc = _run_json(
        capsys, ["fv-check", path, "--factors", "F2", "--trials", "3"])
    assert code == 0
    assert doc["payload"]["seed"] == 123
    assert doc["payload"]["all_agree"] is True


def test_eval_sentence(tmp_path, capsys):
    path = _write(tmp_path, "f.ring",
                  "exists x . x * x = x & !(x = 0) & !(x = 1)")
    code, doc = _run_json(capsys, ["eval", path])
    assert code == 0
    assert doc["payload"]["value"] is True


def test_eval_with_adele_environment(tmp_path, capsys):
    path = _write(tmp_path, "f.ring", "x * x = x")
    e2 = TruncatedAdele({2: Fraction(1)}, 0)
    env_path = _write(tmp_path, "env.json", json.dumps({"x": e2.to_json()}))
    code, doc = _run_json(capsys, ["eval", path, "--adele-env", env_path])
    assert code == 0
    assert doc["payload"]["value"] is True


def test_regular(tmp_path, capsys):
    path = _write(tmp_path, "a.json",
                  json.dumps(TruncatedAdele.principal(6).to_json()))
    code, doc = _run_json(capsys, ["regular", "--adele", path])
    assert code == 0
    assert doc["payload"]["regular"] is True
    assert doc["payload"]["positive_support"] \
        == PlaceSet.finite([2, 3]).to_json()


def test_fin_witness(capsys):
    code, doc = _run_json(capsys, ["fin-witness", "--places", "2,5"])
    assert code == 0
    assert doc["payload"]["ok"] is True
    assert doc["payload"]["round_trip"] == [2, 5]


def test_measure_set(capsys):
    code, doc = _run_json(capsys, ["measure", "--set", "0<=v<=1"])
    assert code == 0
    payload = doc["payload"]
    assert payload["symbolic"] == "(p^2 - 1)/p^2"
    assert payload["at_p"]["2"] == "3/4"
    assert "euler" not in payload


def test_measure_zeta_at_prime(capsys):
    code, doc = _run_json(capsys, ["measure", "--zeta", "2", "--p", "3"])
    assert code == 0
    assert doc["payload"]["at_p"] == {"3": "9/8"}


def test_measure_euler(capsys):
    code, doc = _run_json(
        capsys, ["measure", "--set", "0<=v<=1", "--euler", "1000"])
    assert code == 0
    euler = doc["payload"]["euler"]
    assert euler["P"] == 1000
    assert euler["lo"] <= euler["value"] <= euler["hi"]


def test_hilbert_negative_arguments(capsys):
    code, doc = _run_json(capsys, ["hilbert", "-1", "-1"])
    assert code == 0
    payload = doc["payload"]
    assert payload["symbols"]["real"] == -1
    assert payload["symbols"]["2"] == -1
    assert payload["product"] == 1


def test_hilbert_fractions(capsys):
    code, doc = _run_json(capsys, ["hilbert", "3/4", "-7"])
    assert code == 0
    assert doc["payload"]["product"] == 1


# --------------------------------------------------------------------------
# determinism


def test_output_is_byte_identical(tmp_path, capsys):
    path = _write(tmp_path, "f.bool", "exists X . Fin(X) & C[2](X)")
    _, out1 = _run(capsys, ["qe-bool", path])
    _, out2 = _run(capsys, ["qe-bool", path])
    assert out1 == out2

    ring = _write(tmp_path, "g.ring", "exists x . x*x=a")
    argv = ["fv-check", ring, "--factors", "F2,F5", "--trials", "4"]
    _, out1 = _run(capsys, argv)
    _, out2 = _run(capsys, argv)
    assert out1 == out2


# --------------------------------------------------------------------------
# failure modes: structured errors, no tracebacks


def test_parse_error(tmp_path, capsys):
    path = _write(tmp_path, "f.bool", "Fin(X &")
    code, doc = _run_json(capsys, ["decide-bool", path])
    assert code == 1
    assert doc["status"] == "error"
    assert doc["code"] == "parse"


def test_usage_error_unknown_command(capsys):
    code, doc = _run_json(capsys, ["frobnicate"])
    assert code == 1
    assert doc["code"] == "usage"


def test_usage_error_hilbert_arity(capsys):
    code, doc = _run_json(capsys, ["hilbert", "3"])
    assert code == 1
    assert doc["code"] == "usage"


def test_guard_error_missing_file(capsys):
    code, doc = _run_json(capsys, ["decide-bool", "/nonexistent/f.bool"])
    assert code == 1
    assert doc["code"] == "guard"


def test_guard_error_free_variable_sentence(tmp_path, capsys):
    path = _write(tmp_path, "f.bool", "Fin(X)")
    code, doc = _run_json(capsys, ["decide-bool", path])
    assert code == 1
    assert doc["code"] == "guard"


def test_usage_error_hilbert_zero(capsys):
    code, doc = _run_json(capsys, ["hilbert", "0", "3"])
    assert code == 1
    assert doc["code"] == "usage"


def test_usage_error_measure_flags(capsys):
    code, doc = _run_json(
        capsys, ["measure", "--set", "v=0", "--zeta", "2"])
    assert code == 1
    assert doc["code"] == "usage"

    code, doc = _run_json(capsys, ["measure"])
    assert code == 1
    assert doc["code"] == "usage"


def test_guard_error_bad_adele_json(tmp_path, capsys):
    path = _write(tmp_path, "a.json", "{not json")
    code, doc = _run_json(capsys, ["regular", "--adele", path])
    assert code == 1
    assert doc["code"] == "parse"


def test_unsupported_fragment_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "f.ring", "exists x . x * x * x = 2")
    code, doc = _run_json(capsys, ["eval", path])
    assert code == 2
    assert doc["status"] == "error"
    assert doc["code"] == "unsupported-fragment"
