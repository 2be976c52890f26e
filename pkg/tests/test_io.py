import io

import numpy as np
import pytest

from ktchart import (
    ChartLimits,
    ChartPoint,
    IngestPolicy,
    KernelSpec,
    SamplingConfig,
    load_model,
    load_phase1,
    phase1,
    read_chart,
    read_observations,
    render_charts,
    save_model,
    save_phase1,
    score,
    train_full,
    write_chart,
    write_observations,
)
from ktchart.charts import Phase2Monitor, WindowSpec
from ktchart.stream_io import IngestError, ModelFormatError

GAUSS = KernelSpec.gaussian(1.3)


# ---------------------------------------------------------------------------
# observation CSV

def test_read_observations_basic():
    src = io.StringIO("a,b,c\n1,2,3\n4,5,6\n")
    X, summary = read_observations(src)
    np.testing.assert_array_equal(X, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    assert summary.columns == ("a", "b", "c")
    assert summary.rows_read == summary.rows_kept == 2
    assert summary.rows_skipped == 0


def test_read_observations_missing_cell_error_names_row():
    src = io.StringIO("a,b,c\n1,2,3\n4,,6\n")
    with pytest.raises(IngestError, match="row 2.*empty cell.*'b'"):
        read_observations(src)


def test_read_observations_skip_row_policy():
    src = io.StringIO("a,b,c\n1,2,3\n4,,6\n")
    policy = IngestPolicy(on_missing="skip_row")
    X, summary = read_observations(src, policy)
    assert X.shape == (1, 3)
    assert summary.rows_read == 2
    assert summary.rows_kept == 1
    assert summary.rows_skipped_missing == 1
    assert summary.rows_read == summary.rows_kept + summary.rows_skipped


def test_read_observations_non_numeric_and_non_finite():
    with pytest.raises(IngestError, match="non-numeric"):
        read_observations(io.StringIO("a,b\n1,spam\n"))
    with pytest.raises(IngestError, match="non-numeric"):
        read_observations(io.StringIO("a,b\n1,nan\n"))
    policy = IngestPolicy(on_non_numeric="skip_row")
    X, summary = read_observations(io.StringIO("a,b\n1,inf\n2,3\n"), policy)
    assert X.shape == (1, 2)
    assert summary.rows_skipped_non_numeric == 1


def test_read_observations_structural_errors():
    with pytest.raises(IngestError, match="header"):
        read_observations(io.StringIO(""))
    with pytest.raises(IngestError, match="cells"):
        read_observations(io.StringIO("a,b\n1,2,3\n"))
    with pytest.raises(IngestError, match="expected 3"):
        read_observations(io.StringIO("a,b\n1,2\n"), IngestPolicy(expected_dim=3))
    with pytest.raises(IngestError, match="no usable"):
        read_observations(io.StringIO("a,b\n"))


def test_write_read_observations_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    path = tmp_path / "obs.csv"
    write_observations(X, path, columns=["t1", "t2", "t3"])
    back, summary = read_observations(path)
    np.testing.assert_array_equal(back, X)  # repr round-trip is exact
    assert summary.columns == ("t1", "t2", "t3")


# ---------------------------------------------------------------------------
# chart CSV

def _points():
    return [
        ChartPoint(index=1, start=1, end=10, r_squared=0.5, center_dist=0.1,
                   a_status="in_control", r2_status="in_control"),
        ChartPoint(index=2, start=8, end=17, r_squared=0.9, center_dist=0.7,
                   a_status="out_of_control", r2_status="out_high"),
    ]


def test_chart_round_trip(tmp_path):
    path = tmp_path / "chart.csv"
    pts = _points()
    write_chart(pts, path)
    assert read_chart(path) == pts


def test_chart_empty_is_header_only(tmp_path):
    path = tmp_path / "chart.csv"
    write_chart([], path)
    text = path.read_text().strip()
    assert text == "window_id,start,end,r_squared,center_dist,a_status,r2_status"
    assert read_chart(path) == []


def test_chart_read_rejects_bad_files():
    with pytest.raises(IngestError, match="header"):
        read_chart(io.StringIO("nope,nope\n"))
    with pytest.raises(IngestError, match="row 1"):
        read_chart(io.StringIO(
            "window_id,start,end,r_squared,center_dist,a_status,r2_status\n"
            "x,1,10,0.5,0.1,in_control,in_control\n"
        ))


# ---------------------------------------------------------------------------
# model persistence

def _trained_model(seed=1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3)) + 2.0
    return train_full(X, GAUSS, f=0.05), X


def test_model_round_trip_preserves_scores(tmp_path):
    model, X = _trained_model()
    path = tmp_path / "m.ktm"
    save_model(model, path)
    back = load_model(path)
    rng = np.random.default_rng(2)
    Z = rng.normal(size=(100, 3)) + 2.0
    np.testing.assert_allclose(score(back, Z), score(model, Z), atol=1e-12, rtol=0)
    assert back.r_squared == model.r_squared
    assert back.kernel == model.kernel
    assert back.params == model.params
    np.testing.assert_array_equal(back.support_vectors, model.support_vectors)
    np.testing.assert_array_equal(back.alphas, model.alphas)


def test_model_file_is_versioned(tmp_path):
    model, _ = _trained_model()
    path = tmp_path / "m.ktm"
    save_model(model, path)
    first = path.read_text().splitlines()[0]
    assert first == "ktchart-model 1"
    mangled = path.read_text().replace("ktchart-model 1", "ktchart-model 99")
    with pytest.raises(ModelFormatError, match="version"):
        load_model(io.StringIO(mangled))


def test_model_truncated_file_fails_cleanly(tmp_path):
    model, _ = _trained_model()
    path = tmp_path / "m.ktm"
    save_model(model, path)
    lines = path.read_text().splitlines()
    for cut in (1, 5, len(lines) - 1):
        with pytest.raises(ModelFormatError):
            load_model(io.StringIO("\n".join(lines[:cut])))


def test_model_bad_field_named_in_error(tmp_path):
    model, _ = _trained_model()
    path = tmp_path / "m.ktm"
    save_model(model, path)
    mangled = path.read_text().replace("r_squared: ", "r_squared: oops")
    with pytest.raises(ModelFormatError, match="r_squared"):
        load_model(io.StringIO(mangled))


def _phase1_model():
    spec = WindowSpec(n=30, m=5)
    rng = np.random.default_rng(5)
    X = rng.normal(size=(spec.n + 11 * spec.stride, 2)) + 3.0
    cfg = SamplingConfig(sample_size=3, rng_seed=5, patience=3)
    model, points = phase1(X, spec, KernelSpec.gaussian(1.5), f=0.01, sampling=cfg)
    return model, points


def test_phase1_round_trip_preserves_monitoring(tmp_path):
    model, _ = _phase1_model()
    path = tmp_path / "p1.ktm"
    save_phase1(model, path)
    back = load_phase1(path)
    assert back.a_chart == model.a_chart
    assert back.r2_chart == model.r2_chart
    assert back.window_spec == model.window_spec
    assert back.sampling == model.sampling
    assert back.r2_mean == model.r2_mean
    assert back.r2_sigma == model.r2_sigma
    rng = np.random.default_rng(6)
    stream = rng.normal(size=(150, 2)) + 3.0
    p_orig = Phase2Monitor(model, seed=9).process(stream)
    p_back = Phase2Monitor(back, seed=9).process(stream)
    assert p_orig == p_back


def test_phase1_loaded_model_cannot_prune(tmp_path):
    from ktchart import prune_and_recompute

    model, _ = _phase1_model()
    path = tmp_path / "p1.ktm"
    save_phase1(model, path)
    back = load_phase1(path)
    with pytest.raises(ValueError, match="summaries"):
        prune_and_recompute(back, [1])


# ---------------------------------------------------------------------------
# rendering

def _limits():
    a = ChartLimits(ucl=0.8, center_line=0.4, lcl=0.0)
    r2 = ChartLimits(ucl=5.0, center_line=2.0, lcl=0.0, uwl=4.0, lwl=0.5)
    return a, r2


def test_render_single_point_structure(tmp_path):
    path = tmp_path / "chart.svg"
    render_charts(_points()[:1], _limits(), path)
    svg = path.read_text()
    assert svg.startswith("<?xml")
    assert 'id="panel-a"' in svg and 'id="panel-r2"' in svg
    assert svg.count('class="limit') >= 6
    assert 'stroke-dasharray' in svg  # warning limits dashed


def test_render_marks_out_of_control_distinct(tmp_path):
    path = tmp_path / "chart.svg"
    render_charts(_points(), _limits(), path)
    svg = path.read_text()
    assert svg.count('class="pt ooc"') == 2  # one out point per panel


def test_render_is_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    render_charts(_points(), _limits(), p1)
    render_charts(_points(), _limits(), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_render_axis_spans_all_window_indices(tmp_path):
    pts = [
        ChartPoint(index=i, start=i, end=i + 9, r_squared=2.0 + 0.001 * i,
                   center_dist=0.1, a_status="in_control", r2_status="in_control")
        for i in range(1, 1001)
    ]
    path = tmp_path / "big.svg"
    render_charts(pts, _limits(), path)
    svg = path.read_text()
    assert ">1<" in svg and ">1000<" in svg


def test_render_requires_points():
    with pytest.raises(ValueError):
        render_charts([], _limits(), io.StringIO())
