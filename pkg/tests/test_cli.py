import json
from importlib import resources
from pathlib import Path

import pytest

from indoornet.cli import main
from indoornet.ingest import sessions_to_csv, write_triples
from indoornet.synth import SynthParams, generate_synthetic_contacts, generate_synthetic_log


@pytest.fixture
def f1_csv(tmp_path):
    path = tmp_path / "f1.csv"
    path.write_text(resources.files("indoornet").joinpath("fixtures", "f1.csv").read_text())
    return path


def data_lines(path):
    return [l for l in Path(path).read_text().splitlines() if not l.startswith("#")][1:]


def test_ingest_f1(f1_csv, tmp_path, capsys):
    store = tmp_path / "store"
    assert main(["ingest", "--input", str(f1_csv), "--out", str(store)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "3 devices, 5 sessions, 1 WAP"
    assert len(data_lines(store / "sessions.csv")) == 5
    meta = json.loads((store / "store.json").read_text())
    assert (meta["devices"], meta["sessions"], meta["waps"], meta["rejected_lines"]) == (3, 5, 1, 0)
    assert (store / "f1.csv.errors.txt").read_text() == ""


def test_ingest_empty_file(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["ingest", "--input", str(empty), "--out", str(tmp_path / "s")]) == 0
    assert capsys.readouterr().out.startswith("0 devices, 0 sessions, 0 WAPs")


def test_ingest_writes_error_sidecar(tmp_path):
    src = tmp_path / "bad.csv"
    src.write_text("A,w1,10,40\nA,w1,40,10\nB,w1,1\n")
    assert main(["ingest", "--input", str(src), "--out", str(tmp_path / "s")]) == 0
    rows = (tmp_path / "s" / "bad.csv.errors.txt").read_text().splitlines()
    assert [r.split("\t")[0] for r in rows] == ["2", "3"]


def test_ingest_missing_input_exit_1(tmp_path, capsys):
    assert main(["ingest", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "s")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path, f1_csv):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bins_per_decade": 0}))
    assert main(["ingest", "--input", str(f1_csv), "--out", str(tmp_path / "s"), "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["ingest", "--input", str(f1_csv), "--out", str(tmp_path / "s"), "--config", str(cfg)]) == 2
    assert main(["analyze", "--store", str(tmp_path), "--out", str(tmp_path / "o"), "--targets", "ei,plots"]) == 2
    assert main(["ingest", "--out", str(tmp_path / "s")]) == 2


def test_config_file_overrides_flags(tmp_path, f1_csv):
    main(["ingest", "--input", str(f1_csv), "--out", str(tmp_path / "s")])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"targets": ["ei"], "seed": 9}))
    assert main(["analyze", "--store", str(tmp_path / "s"), "--out", str(tmp_path / "o"), "--targets", "ti", "--config", str(cfg)]) == 0
    assert (tmp_path / "o" / "ei-table.csv").exists() and not (tmp_path / "o" / "ti-table.csv").exists()
    echoed = json.loads((tmp_path / "o" / "config.json").read_text())
    assert echoed["config"]["seed"] == 9 and echoed["version"]


def test_analyze_missing_store_exit_1(tmp_path):
    assert main(["analyze", "--store", str(tmp_path / "none"), "--out", str(tmp_path / "o")]) == 1


def test_invariant_violation_exit_3(tmp_path, monkeypatch):
    import indoornet.cli as cli
    from indoornet import InvariantViolation

    def broken(cfg):
        raise InvariantViolation("boom")

    monkeypatch.setitem(cli.COMMANDS, "oracle-check", broken)
    assert main(["oracle-check"]) == 3


def test_analyze_f1_ei_table(tmp_path, f1_csv):
    main(["ingest", "--input", str(f1_csv), "--out", str(tmp_path / "s")])
    assert main(["analyze", "--store", str(tmp_path / "s"), "--out", str(tmp_path / "o"), "--targets", "ei"]) == 0
    table = (tmp_path / "o" / "ei-table.csv").read_text().splitlines()
    assert table[1] == "ei_id,wap_id,members,t_begin,t_end"
    assert table[2:] == ["0,w1,A|B,10,20", "1,w1,A|B|C,20,30", "2,w1,A|B,30,40", "3,w1,A|C,60,70"]


def test_analyze_f1_all_targets(tmp_path, f1_csv):
    main(["ingest", "--input", str(f1_csv), "--out", str(tmp_path / "s")])
    assert main(["analyze", "--store", str(tmp_path / "s"), "--out", str(tmp_path / "o")]) == 0
    out = tmp_path / "o"
    assert data_lines(out / "edge-table.csv") == ["0,1,A|B,10,10", "1,2,A|B,10,20", "1,3,C,40,20", "2,3,A,30,30"]
    assert data_lines(out / "ti-table.csv") == ["A,B,w1,10,40", "A,C,w1,20,30", "B,C,w1,20,30", "A,C,w1,60,70"]
    for path in out.iterdir():
        if path.suffix == ".csv":
            assert path.read_text().startswith("# figure: "), path.name
    assert data_lines(out / "delta-days.csv") == ["0,4,1.0"]
    deseason = json.loads((out / "deseason.json").read_text())
    assert deseason["natural"] == {"n": 4, "n_all": 4}
    assert {"seed", "n_swaps_factor", "acceptance_rate"} <= set(deseason["shuffled"])
    assert (out / "deseason-natural.csv").exists() and (out / "deseason-shuffled.csv").exists()


def test_shuffle_command(tmp_path, f1_csv):
    main(["ingest", "--input", str(f1_csv), "--out", str(tmp_path / "s")])
    assert main(["shuffle", "--store", str(tmp_path / "s"), "--out", str(tmp_path / "o"), "--seed", "4"]) == 0
    meta = json.loads((tmp_path / "o" / "null-model.json").read_text())
    assert meta["seed"] == 4 and meta["n_swaps_factor"] == 10
    assert len(data_lines(tmp_path / "o" / "shuffled-ei-table.csv")) == 4


def test_oracle_check_command(capsys):
    assert main(["oracle-check", "--instances", "50"]) == 0
    out = capsys.readouterr().out
    assert "5/5 golden instances match" in out and "50/50 random instances" in out


def test_sociopatterns_ingest_and_analyze(tmp_path, capsys):
    src = tmp_path / "tij.dat"
    with open(src, "w") as fh:
        write_triples(generate_synthetic_contacts(n_people=120, n_days=2, seed=3), fh)
    store = tmp_path / "s"
    assert main(["ingest", "--input", str(src), "--format", "sociopatterns", "--out", str(store)]) == 0
    assert "participants" in capsys.readouterr().out
    assert main(["analyze", "--store", str(store), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "config.json").read_text())["store"]["format"] == "sociopatterns"


def test_determinism_wifi(tmp_path):
    log = generate_synthetic_log(SynthParams(n_devices=40, n_waps=5, horizon=3 * 1440, session_rate=3.0, mean_session_length=40.0, seed=2))
    src = tmp_path / "log.csv"
    src.write_text(sessions_to_csv(log))
    outputs = []
    for run in ("a", "b"):
        store = tmp_path / f"store-{run}"
        main(["ingest", "--input", str(src), "--out", str(store)])
        main(["analyze", "--store", str(store), "--out", str(tmp_path / f"out-{run}"), "--seed", "5", "--k-min", "2"])
        outputs.append({p.name: p.read_bytes() for p in sorted((tmp_path / f"out-{run}").iterdir()) if p.name != "config.json"})
    assert outputs[0] == outputs[1]
    assert len(outputs[0]) >= 25
