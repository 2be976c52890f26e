import numpy as np
import pytest

from ktchart import FaultSpec, SegmentSpec, compose_stream, gen_segment


def _spec(length=100, d=2, fault=None, **kw):
    return SegmentSpec(
        label="seg", length=length, mean=(0.0,) * d, scale=(1.0,) * d,
        fault=fault, **kw,
    )


def test_zero_scale_yields_constant_rows():
    spec = SegmentSpec(label="flat", length=10, mean=(3.0, -1.0), scale=(0.0, 0.0))
    X = gen_segment(spec, seed=1)
    np.testing.assert_array_equal(X, np.tile([3.0, -1.0], (10, 1)))


def test_same_seed_is_identical():
    spec = _spec(length=50)
    np.testing.assert_array_equal(gen_segment(spec, 9), gen_segment(spec, 9))
    assert not np.array_equal(gen_segment(spec, 9), gen_segment(spec, 10))


def test_mean_step_moves_first_coordinate():
    fault = FaultSpec(kind="mean_step", magnitude=3.0, onset=0)
    X = gen_segment(_spec(length=10_000, fault=fault), seed=3)
    assert abs(X[:, 0].mean() - 3.0) < 0.05
    assert abs(X[:, 1].mean()) < 0.05  # other coordinates untouched


def test_mean_step_scales_with_sigma():
    fault = FaultSpec(kind="mean_step", magnitude=2.0, onset=0)
    spec = SegmentSpec(label="s", length=20_000, mean=(1.0, 0.0),
                       scale=(3.0, 1.0), fault=fault)
    X = gen_segment(spec, seed=4)
    assert abs(X[:, 0].mean() - (1.0 + 2.0 * 3.0)) < 0.1


def test_variance_scale_fault():
    fault = FaultSpec(kind="variance_scale", magnitude=4.0, onset=5000)
    X = gen_segment(_spec(length=10_000, fault=fault), seed=5)
    assert X[:5000].std(axis=0) == pytest.approx([1.0, 1.0], abs=0.06)
    assert X[5000:].std(axis=0) == pytest.approx([2.0, 2.0], abs=0.12)


def test_drift_ramp_reaches_full_magnitude():
    fault = FaultSpec(kind="drift_ramp", magnitude=5.0, onset=1000)
    X = gen_segment(_spec(length=2000, fault=fault), seed=6)
    base = gen_segment(_spec(length=2000), seed=6)
    shift = X[:, 0] - base[:, 0]
    np.testing.assert_allclose(shift[:1000], 0.0, atol=1e-12)
    assert shift[-1] == pytest.approx(5.0, abs=1e-12)
    assert np.all(np.diff(shift[1000:]) > 0)


def test_correlation_break_restores_independence():
    corr = ((1.0, 0.9), (0.9, 1.0))
    fault = FaultSpec(kind="correlation_break", magnitude=1.0, onset=10_000)
    spec = SegmentSpec(label="c", length=20_000, mean=(0.0, 0.0),
                       scale=(1.0, 1.0), correlation=corr, fault=fault)
    X = gen_segment(spec, seed=7)
    rho_before = np.corrcoef(X[:10_000].T)[0, 1]
    rho_after = np.corrcoef(X[10_000:].T)[0, 1]
    assert rho_before == pytest.approx(0.9, abs=0.02)
    assert abs(rho_after) < 0.03


def test_fault_locality_rows_before_onset_unchanged():
    fault = FaultSpec(kind="variance_scale", magnitude=9.0, onset=60)
    with_fault = gen_segment(_spec(length=100, fault=fault), seed=8)
    without = gen_segment(_spec(length=100), seed=8)
    np.testing.assert_array_equal(with_fault[:60], without[:60])
    assert not np.array_equal(with_fault[60:], without[60:])


def test_correlated_sampling_matches_target():
    corr = ((1.0, -0.6), (-0.6, 1.0))
    spec = SegmentSpec(label="c", length=50_000, mean=(1.0, 2.0),
                       scale=(2.0, 0.5), correlation=corr)
    X = gen_segment(spec, seed=9)
    assert np.corrcoef(X.T)[0, 1] == pytest.approx(-0.6, abs=0.02)
    assert X.std(axis=0) == pytest.approx([2.0, 0.5], rel=0.03)


def test_mixture_component_draws():
    spec = SegmentSpec(
        label="mix", length=50_000, mean=(0.0, 0.0), scale=(0.5, 0.5),
        mix_weight=0.25, mix_mean=(10.0, 10.0), mix_scale=(0.5, 0.5),
    )
    X = gen_segment(spec, seed=10)
    far = X[:, 0] > 5.0
    assert far.mean() == pytest.approx(0.25, abs=0.02)
    assert X[far][:, 0].mean() == pytest.approx(10.0, abs=0.05)


def test_invalid_correlation_rejected():
    bad_pd = ((1.0, 2.0), (2.0, 1.0))  # symmetric, unit diagonal, not PD
    with pytest.raises(ValueError, match="positive-definite"):
        gen_segment(_spec(correlation=bad_pd), seed=0)
    asym = ((1.0, 0.5), (0.2, 1.0))
    with pytest.raises(ValueError, match="symmetric"):
        gen_segment(_spec(correlation=asym), seed=0)
    bad_diag = ((2.0, 0.0), (0.0, 2.0))
    with pytest.raises(ValueError, match="unit diagonal"):
        gen_segment(_spec(correlation=bad_diag), seed=0)


def test_segment_spec_validation():
    with pytest.raises(ValueError):
        SegmentSpec(label="x", length=0, mean=(0.0,), scale=(1.0,))
    with pytest.raises(ValueError):
        SegmentSpec(label="x", length=5, mean=(0.0, 0.0), scale=(1.0,))
    with pytest.raises(ValueError):
        SegmentSpec(label="x", length=5, mean=(0.0,), scale=(-1.0,))
    with pytest.raises(ValueError, match="onset"):
        SegmentSpec(label="x", length=5, mean=(0.0,), scale=(1.0,),
                    fault=FaultSpec(kind="mean_step", magnitude=1.0, onset=5))
    with pytest.raises(ValueError):
        SegmentSpec(label="x", length=5, mean=(0.0,), scale=(1.0,),
                    mix_weight=0.5)  # mixture fields missing


def test_fault_spec_validation():
    with pytest.raises(ValueError):
        FaultSpec(kind="unknown", magnitude=1.0)
    with pytest.raises(ValueError):
        FaultSpec(kind="variance_scale", magnitude=0.0)
    with pytest.raises(ValueError):
        FaultSpec(kind="mean_step", magnitude=1.0, onset=-1)


def test_compose_single_segment():
    X, bounds = compose_stream([_spec(length=30)], seed=2)
    assert X.shape == (30, 2)
    assert bounds == []


def test_compose_boundaries():
    segs = [_spec(length=100), _spec(length=50), _spec(length=100)]
    X, bounds = compose_stream(segs, seed=3)
    assert X.shape == (250, 2)
    assert bounds == [101, 151]


def test_compose_alternating_ten_segments():
    segs = [_spec(length=20) for _ in range(10)]
    X, bounds = compose_stream(segs, seed=4)
    assert X.shape == (200, 2)
    assert bounds == [21, 41, 61, 81, 101, 121, 141, 161, 181]


def test_compose_is_deterministic():
    segs = [_spec(length=40), _spec(length=40)]
    X1, _ = compose_stream(segs, seed=5)
    X2, _ = compose_stream(segs, seed=5)
    np.testing.assert_array_equal(X1, X2)


def test_compose_rejects_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        compose_stream([_spec(d=2), _spec(d=3)], seed=0)
