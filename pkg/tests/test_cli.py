import io
import json

import numpy as np
import pytest

from filippov.cli import RunConfig, UsageError, main, read_config


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, out.getvalue()


def read_csv(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_models_lists_six():
    code, text = run(["models", "--json"])
    assert code == 0
    rows = json.loads(text)
    assert [r["id"] for r in rows] == ["example-b", "cubic-3d", "impact-osc", "ant-colony", "planar-quadratic",
                                       "fuller"]
    cubic = next(r for r in rows if r["id"] == "cubic-3d")
    assert cubic["dim"] == 3 and cubic["second_order"]
    code, text = run(["models"])
    assert code == 0 and len(text.strip().splitlines()) == 6


def test_simulate_csv_and_events(tmp_path):
    ev = tmp_path / "events.jsonl"
    code, text = run(["simulate", "--model", "cubic-3d", "--x0", "0.01,0,-1", "--t-end", "20", "--events", str(ev)])
    assert code == 0
    header, rows = read_csv(text)
    assert header == ["t", "x1", "x2", "x3", "mode"]
    ts = [float(r[0]) for r in rows]
    assert ts == sorted(ts) and ts[-1] == 20.0
    modes = {r[-1] for r in rows}
    assert modes <= {"FlowL", "FlowR", "SlideSigma", "SlideT"}
    for r in rows:
        h = float(r[1])
        if r[-1] == "FlowL":
            assert h <= 1e-10
        elif r[-1] == "FlowR":
            assert h >= -1e-10
    events = [json.loads(line) for line in ev.read_text().splitlines()]
    assert set(events[0]) >= {"t", "x", "kind", "nu", "s"}
    assert events[-1]["kind"] == "HorizonEnd"
    assert all(e["kind"] == "HitSigma-Cross" for e in events[:-1])


def test_simulate_replay_is_bit_identical(tmp_path):
    argv = ["simulate", "--model", "example-b", "--x0", "0.1,0.5", "--t-end", "5", "--seed", "7"]
    outs = []
    for k in range(2):
        csv = tmp_path / f"run{k}.csv"
        ev = tmp_path / f"run{k}.jsonl"
        assert run(argv + ["--output", str(csv), "--events", str(ev)])[0] == 0
        outs.append((csv.read_bytes(), ev.read_bytes()))
    assert outs[0] == outs[1]


def test_csv_floats_round_trip(tmp_path):
    code, text = run(["simulate", "--model", "example-b", "--x0", "0.1,0.5", "--t-end", "0.3"])
    _, rows = read_csv(text)
    for r in rows:
        for v in r[:-1]:
            assert format(float(v), ".17g") == v


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# cubic run\nmodel = cubic-3d\nx0 = 0.01,0,-1\nt-end = 2\nparam = rate_R=0.3\n")
    code, a = run(["simulate", "--config", str(cfg)])
    assert code == 0
    _, rows = read_csv(a)
    assert float(rows[-1][0]) == 2.0
    code, b = run(["simulate", "--config", str(cfg), "--t-end", "1"])
    _, rows = read_csv(b)
    assert float(rows[-1][0]) == 1.0
    code, c = run(["simulate", "--config", str(cfg), "--param", "rate_R=0.2"])
    code, d = run(["simulate", "--model", "cubic-3d", "--x0", "0.01,0,-1", "--t-end", "2"])
    assert c == d and a != d


def test_read_config_repeats_param(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("param = a=1\nparam = b=2\nv-converge = 1e-5\n")
    assert read_config(str(cfg)) == {"param": ["a=1", "b=2"], "v_converge": "1e-5"}


@pytest.mark.parametrize("kw", [dict(rtol=0.0), dict(t_end=-1.0), dict(guard_tol=-1.0),
                                dict(repelling_choice="up")])
def test_run_config_validation(kw):
    with pytest.raises(UsageError):
        RunConfig(model="cubic-3d", **kw)


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["simulate", "--model", "no-such-model", "--x0", "0,0"],
    ["simulate", "--model", "cubic-3d", "--x0", "0,0"],
    ["simulate", "--model", "cubic-3d", "--x0", "0,0,-1", "--param", "zz=1"],
    ["simulate", "--model", "cubic-3d", "--x0", "0,0,-1", "--t-end", "-1"],
    ["simulate", "--model", "cubic-3d", "--x0", "0,0,-1", "--bogus"],
    ["simulate", "--x0", "0,0,-1"],
    ["pseudo-eq", "--model", "example-b"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _ = run(argv)
    assert code == 2
    assert capsys.readouterr().err


def test_classify_surface():
    code, text = run(["classify-surface", "--model", "cubic-3d", "--x", "0,0,-1"])
    assert code == 0
    d = json.loads(text)
    assert d["region"] == "InvInv"
    assert d["lambda"] == pytest.approx(-0.325)


def test_return_map_report():
    code, text = run(["return-map", "--model", "cubic-3d", "--base", "0,0,-1"])
    assert code == 0
    d = json.loads(text)
    assert d["beta_hat"] == pytest.approx(3.0, rel=0.01)
    assert d["c_hat"] == pytest.approx(-0.21667, rel=0.05)
    assert "samples" not in d
    code, text = run(["return-map", "--model", "cubic-3d", "--base", "0,0,-1", "--nus", "1e-3,5e-4,2.5e-4",
                      "--samples"])
    assert len(json.loads(text)["samples"]) == 3


def test_return_map_failure_exit_1():
    # VisVis base point: the expansion does not apply
    code, _ = run(["return-map", "--model", "cubic-3d", "--base", "0,0,2"])
    assert code == 1


def test_pseudo_eq_report():
    code, text = run(["pseudo-eq", "--model", "example-b", "--seed-point", "0,1.5", "--seed-point", "0,3"])
    assert code == 0
    (pe,) = json.loads(text)
    assert pe["verdict"] == "Unstable" and pe["region"] == "RepellingSliding"
    np.testing.assert_allclose(pe["point"], [0.0, 2.0], atol=1e-10)
    code, text = run(["pseudo-eq", "--model", "ant-colony", "--order", "second", "--seed-point", "24,5.8,0"])
    (pe,) = json.loads(text)
    assert pe["region"] == "VisVis" and pe["order"] == "Second"


def test_verify_subset_table(tmp_path):
    rep = tmp_path / "rep.json"
    code, text = run(["verify", "--only", "C2,C9", "--json", str(rep)])
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0].startswith("C2") and "PASS" in lines[0]
    assert lines[-1] == "overall: PASS"
    assert json.loads(rep.read_text())["passed"] is True


def test_verify_failure_exit_1():
    # the reference impact third derivative omits the damping term
    code, text = run(["verify", "--only", "C1"])
    assert code == 1
    assert "FAIL" in text
