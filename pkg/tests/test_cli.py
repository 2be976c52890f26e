import numpy as np
import pytest

from ktchart import read_chart, read_observations
from ktchart.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, main


def _run_simulate(path, length=600, dim=2, seed=3, extra=()):
    return main([
        "simulate", "--output", str(path), "--dim", str(dim),
        "--length", str(length), "--seed", str(seed), *extra,
    ])


def test_simulate_writes_csv(tmp_path):
    out = tmp_path / "obs.csv"
    assert _run_simulate(out) == EXIT_OK
    X, summary = read_observations(out)
    assert X.shape == (600, 2)
    assert summary.columns == ("x1", "x2")


def test_simulate_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _run_simulate(a, seed=11)
    _run_simulate(b, seed=11)
    assert a.read_bytes() == b.read_bytes()
    _run_simulate(b, seed=12)
    assert a.read_bytes() != b.read_bytes()


def test_simulate_with_fault(tmp_path):
    out = tmp_path / "f.csv"
    code = _run_simulate(
        out, length=4000, seed=5,
        extra=["--fault", "mean_step", "--fault-magnitude", "4",
               "--fault-onset", "2000"],
    )
    assert code == EXIT_OK
    X, _ = read_observations(out)
    assert X[2000:, 0].mean() - X[:2000, 0].mean() > 3.0


def _train(tmp_path, obs, n=40, m=10, seed=7):
    model = tmp_path / "phase1.ktm"
    points = tmp_path / "phase1_points.csv"
    code = main([
        "train", "--input", str(obs), "--model", str(model),
        "--output", str(points), "--window-n", str(n), "--overlap-m", str(m),
        "--fraction-f", "0.01", "--sample-size", "3", "--seed", str(seed),
    ])
    return code, model, points


def test_train_then_monitor_end_to_end(tmp_path):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=40 + 199 * 30, seed=21)  # 200 windows
    code, model, points = _train(tmp_path, obs)
    assert code == EXIT_OK
    assert model.exists()
    phase1_points = read_chart(points)
    assert len(phase1_points) == 200

    stream = tmp_path / "stream.csv"
    _run_simulate(stream, length=2020, seed=33)
    out = tmp_path / "monitor.csv"
    code = main([
        "monitor", "--input", str(stream), "--model", str(model),
        "--output", str(out), "--seed", "9",
    ])
    assert code == EXIT_OK
    pts = read_chart(out)
    assert len(pts) == 67  # (2020 - 40) // 30 + 1
    ok = sum(
        p.a_status == "in_control" and p.r2_status not in ("out_high", "out_low")
        for p in pts
    )
    assert ok / len(pts) >= 0.95


def test_monitor_dimension_mismatch_writes_nothing(tmp_path):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=40 + 9 * 30, seed=2)
    code, model, _ = _train(tmp_path, obs)
    assert code == EXIT_OK
    bad = tmp_path / "bad.csv"
    _run_simulate(bad, length=100, dim=3, seed=4)
    out = tmp_path / "monitor.csv"
    code = main([
        "monitor", "--input", str(bad), "--model", str(model),
        "--output", str(out),
    ])
    assert code == EXIT_IO  # dimension enforced at ingest
    assert not out.exists()


def test_score_against_saved_model(tmp_path):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=40 + 9 * 30, seed=2)
    code, model, _ = _train(tmp_path, obs)
    rows = tmp_path / "rows.csv"
    _run_simulate(rows, length=12, seed=6)
    out = tmp_path / "scores.csv"
    code = main([
        "score", "--input", str(rows), "--model", str(model),
        "--output", str(out),
    ])
    assert code == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "row,dist_squared,status"
    assert len(lines) == 13
    for line in lines[1:]:
        _, dist, status = line.split(",")
        assert float(dist) >= 0.0
        assert status in ("inside", "outside")


def test_plot_renders_svg(tmp_path):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=40 + 9 * 30, seed=2)
    code, model, points = _train(tmp_path, obs)
    svg = tmp_path / "chart.svg"
    code = main([
        "plot", "--input", str(points), "--model", str(model),
        "--output", str(svg),
    ])
    assert code == EXIT_OK
    text = svg.read_text()
    assert 'id="panel-a"' in text and 'id="panel-r2"' in text


def test_missing_file_gives_io_exit(tmp_path):
    code = main([
        "score", "--input", str(tmp_path / "absent.csv"),
        "--model", str(tmp_path / "absent.ktm"),
        "--output", str(tmp_path / "out.csv"),
    ])
    assert code == EXIT_IO


def test_numeric_failure_exit(tmp_path):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=50, seed=2)
    model = tmp_path / "m.ktm"
    points = tmp_path / "p.csv"
    code = main([
        "train", "--input", str(obs), "--model", str(model),
        "--output", str(points), "--window-n", "40", "--overlap-m", "10",
        "--fraction-f", "0.01", "--sample-size", "3",
    ])
    assert code == EXIT_NUMERIC  # only one complete window: sigma undefined
    assert not model.exists()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["train", "--nonsense"])
    assert info.value.code == 2


def test_invalid_window_flags(tmp_path):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=200, seed=2)
    code = main([
        "train", "--input", str(obs), "--model", str(tmp_path / "m"),
        "--output", str(tmp_path / "p"), "--window-n", "40",
        "--overlap-m", "40", "--fraction-f", "0.01",
    ])
    assert code == EXIT_NUMERIC


def test_simulate_composed_segments_with_boundaries(tmp_path):
    from ktchart import read_boundaries

    out = tmp_path / "stream.csv"
    sidecar = tmp_path / "bounds.txt"
    code = main([
        "simulate", "--output", str(out), "--dim", "2", "--seed", "8",
        "--segments", "300,100:mean_step:5,300",
        "--boundaries-out", str(sidecar),
    ])
    assert code == EXIT_OK
    X, _ = read_observations(out)
    assert X.shape == (700, 2)
    assert read_boundaries(sidecar) == [301, 401]
    assert X[301:400, 0].mean() > 4.0  # fault block shifted in coordinate 1


def test_simulate_requires_length_or_segments(tmp_path):
    code = main(["simulate", "--output", str(tmp_path / "x.csv"), "--dim", "2"])
    assert code == EXIT_NUMERIC


def test_monitor_skips_bad_rows_under_policy(tmp_path):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=40 + 9 * 30, seed=2)
    _, model, _ = _train(tmp_path, obs)
    stream = tmp_path / "s.csv"
    _run_simulate(stream, length=130, seed=5)
    lines = stream.read_text().splitlines()
    lines.insert(4, "bad,1.0")  # non-numeric first cell
    stream.write_text("\n".join(lines) + "\n")
    out = tmp_path / "mon.csv"
    assert main(["monitor", "--input", str(stream), "--model", str(model),
                 "--output", str(out)]) == EXIT_IO
    assert not out.exists()
    assert main(["monitor", "--input", str(stream), "--model", str(model),
                 "--output", str(out), "--on-missing", "skip-row"]) == EXIT_OK
    pts = read_chart(out)
    assert len(pts) == (130 - 40) // 30 + 1  # the inserted bad row is dropped


def test_monitor_streams_rows_to_stdout(tmp_path, capsys):
    obs = tmp_path / "obs.csv"
    _run_simulate(obs, length=40 + 9 * 30, seed=2)
    _, model, _ = _train(tmp_path, obs)
    stream = tmp_path / "s.csv"
    _run_simulate(stream, length=120, seed=5)
    out = tmp_path / "mon.csv"
    capsys.readouterr()
    code = main(["monitor", "--input", str(stream), "--model", str(model),
                 "--output", str(out), "--seed", "4"])
    assert code == EXIT_OK
    streamed = capsys.readouterr().out.strip().splitlines()
    assert streamed[0].startswith("window_id,")
    assert len(streamed) == 1 + len(read_chart(out))
