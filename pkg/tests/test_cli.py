import json

from sooplatform.cli import main
from sooplatform.sim import (
    Scenario,
    Schedule,
    make_agents,
    make_truth,
    scenario_to_json,
)


def write_scenario(tmp_path):
    truth = make_truth(objectives=2, criteria=3, indicators=3)
    scenario = Scenario(
        truth=truth,
        agents=make_agents(10, reliability=(0.9, 1.0)),
        schedule=Schedule(mode="rounds", rounds=20),
        seed=6,
        max_answers=3000,
    )
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario_to_json(scenario)))
    return path


def test_simulate_replay_export_roundtrip(tmp_path, capsys):
    scenario_path = write_scenario(tmp_path)
    log_path = tmp_path / "events.ldjson"
    report_path = tmp_path / "report.json"
    rc = main(
        [
            "simulate", str(scenario_path),
            "--log", str(log_path),
            "--report", str(report_path),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "structureF1" in out
    report = json.loads(report_path.read_text())
    assert report["repeatDeliveries"] == 0
    assert log_path.exists()

    rc = main(["replay", str(log_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "snapshot hashes verified" in out
    assert report["finalSnapshotHash"] in out

    csv_path = tmp_path / "soo.csv"
    rc = main(["export", str(log_path), str(csv_path)])
    assert rc == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "id,kind,name,parent_id,state,validity,global_weight"
    assert any(line.startswith("e000001,goal") for line in lines[1:])


def test_replay_rejects_corrupt_log(tmp_path, capsys):
    log_path = tmp_path / "bad.ldjson"
    log_path.write_text('{"seq": 2, "ts": "2026-01-01T00:00:00+00:00"}\n')
    rc = main(["replay", str(log_path)])
    assert rc == 1
    assert "corrupt log" in capsys.readouterr().err


def test_seed_override_changes_run(tmp_path, capsys):
    scenario_path = write_scenario(tmp_path)
    r1 = tmp_path / "r1.json"
    r2 = tmp_path / "r2.json"
    main(["simulate", str(scenario_path), "--report", str(r1), "--seed", "1"])
    main(["simulate", str(scenario_path), "--report", str(r2), "--seed", "1"])
    capsys.readouterr()
    a, b = json.loads(r1.read_text()), json.loads(r2.read_text())
    a.pop("wallClockSeconds"), b.pop("wallClockSeconds")
    assert a == b
