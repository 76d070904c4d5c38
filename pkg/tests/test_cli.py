import json

import numpy as np
import pytest

from nlocal import codec
from nlocal.certify import Verdict, factorization_check
from nlocal.cli import run
from nlocal.fixtures import bell_local_nonbilocal
from nlocal.models import (canonicalize, evaluate, path_point, random_model,
                           star_mix)
from nlocal.quantum import born_evaluate, realize
from nlocal.tensor import Scenario, distance, mix, uniform_ct


def _run(argv, capsys):
    code = run(argv + ["--quiet"])
    return code, capsys.readouterr().out


def test_gen_example_and_certify(tmp_path, capsys):
    f = tmp_path / "ex21.json"
    assert run(["gen", "--example", "paper-2.1", "--out", str(f), "--quiet"]) == 0
    t = codec.read(f.read_text())
    assert np.array_equal(t.values, bell_local_nonbilocal().values)
    code, out = _run(["certify", "--in", str(f), "--hub", "B"], capsys)
    rep = codec.read(out)
    assert code == 2 and rep.verdict is Verdict.NECESSARY_FAIL
    assert rep.defect == pytest.approx(0.25, abs=1e-12)


def test_certify_uniform_finds_witness(tmp_path, capsys):
    f = tmp_path / "u.json"
    run(["gen", "--example", "uniform", "--scenario", "2,2;2,2;2,2", "--out", str(f),
         "--quiet"])
    code, out = _run(["certify", "--in", str(f), "--restarts", "2"], capsys)
    assert code == 0 and codec.read(out).verdict is Verdict.NLOCAL_WITNESS


def test_certify_signaling_not_bell_local(tmp_path, capsys):
    from nlocal.fixtures import hub_copies_input
    f = tmp_path / "sig.json"
    f.write_text(codec.write(hub_copies_input()))
    code, out = _run(["certify", "--in", str(f)], capsys)
    rep = codec.read(out)
    assert code == 2 and rep.verdict is Verdict.NOT_BELL_LOCAL
    assert rep.defect == pytest.approx(0.5, abs=1e-9)


def test_canon_born_chain_matches_eval(tmp_path, capsys, monkeypatch):
    import io
    f = tmp_path / "model.json"
    run(["gen", "--example", "random-model", "--scenario", "2,2;3,2;2,2",
         "--dims", "2,3", "--seed", "5", "--out", str(f), "--quiet"])
    _, canon = _run(["canon", "--in", str(f)], capsys)
    monkeypatch.setattr("sys.stdin", io.StringIO(canon))
    _, born = _run(["born", "--in", "-"], capsys)
    _, ev = _run(["eval", "--in", str(f)], capsys)
    assert distance(codec.read(born), codec.read(ev))[0] <= 1e-10


def test_verbs_equal_library_calls(tmp_path, capsys):
    s = Scenario.tripartite(2, 2, 2, 2, 2, 2)
    rng = np.random.default_rng(3)
    mp, mq = random_model(s, (2, 2), rng), random_model(s, (3, 1), rng)
    p, q = tmp_path / "p.json", tmp_path / "q.json"
    p.write_text(codec.write(mp))
    q.write_text(codec.write(mq))

    _, out = _run(["canon", "--in", str(p)], capsys)
    assert codec.write(codec.read(out)) == codec.write(canonicalize(mp))
    _, out = _run(["realize", "--in", str(p)], capsys)
    assert out == codec.write(realize(canonicalize(mp)))
    _, out = _run(["born", "--in", str(p)], capsys)
    assert out == codec.write(born_evaluate(realize(canonicalize(mp))))
    _, out = _run(["path", "--in", str(p), "--in", str(q), "--t", "0.3"], capsys)
    assert out == codec.write(path_point(mp, mq, 0.3))
    _, out = _run(["star", "--in", str(p), "--t", "0.6", "--edge", "C", "--evaluate"],
                  capsys)
    assert out == codec.write(evaluate(star_mix(mp, "C", 0.6)))
    _, out = _run(["mix", "--in", str(p), "--in", str(q), "--weights", "0.25,0.75"],
                  capsys)
    assert out == codec.write(mix([(0.25, evaluate(mp)), (0.75, evaluate(mq))]))


def test_certify_report_contains_parts(tmp_path, capsys):
    f = tmp_path / "ex21.json"
    f.write_text(codec.write(bell_local_nonbilocal()))
    _, out = _run(["certify", "--in", str(f), "--hub", "A"], capsys)
    doc = json.loads(out)
    assert doc["verdict"] == "BELL_LOCAL"
    assert doc["details"]["factorization"]["verdict"] == "UNKNOWN"
    assert doc["details"]["bell_local_lp"]["verdict"] == "BELL_LOCAL"
    assert factorization_check(bell_local_nonbilocal(), hub="A").verdict is Verdict.UNKNOWN


@pytest.mark.parametrize("argv", [
    ["gen", "--example", "uniform"],
    ["gen", "--example", "nothing"],
    ["eval"],
    ["eval", "--in", "/nonexistent.json"],
    ["mix", "--in", "x", "--weights"],
])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as err:
        code = run(argv + ["--quiet"])
        raise SystemExit(code)
    assert err.value.code == 1


def test_bad_document_exit_1(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text('{"type": "tensor", "version": "nlocal-json/0"}')
    assert run(["eval", "--in", str(f), "--quiet"]) == 1
    f.write_text(codec.write(uniform_ct(Scenario.uniform(2, 2, 2))))
    assert run(["path", "--in", str(f), "--in", str(f), "--t", "0.5", "--quiet"]) == 1


def test_fixed_seed_gives_identical_bytes(tmp_path, capsys):
    argv = ["gen", "--example", "random-model", "--scenario", "2,2;2,2;2,2", "--seed", "4"]
    _, a = _run(argv, capsys)
    _, b = _run(argv, capsys)
    f = tmp_path / "m.json"
    f.write_text(a)
    _, c1 = _run(["certify", "--in", str(f), "--restarts", "2", "--max-iters", "50"], capsys)
    _, c2 = _run(["certify", "--in", str(f), "--restarts", "2", "--max-iters", "50"], capsys)
    assert a == b and c1 == c2
