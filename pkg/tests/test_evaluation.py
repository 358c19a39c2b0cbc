import csv

import numpy as np
import pytest

from hypertime.data_io import synth_corpus
from hypertime.evaluation import (
    PredictorSpec,
    _windows,
    config_hash,
    evaluate_generation,
    export_projection,
    precision_recall_f1,
    predictive_score,
    spectral_variance_profile,
)
from hypertime.series import TimeSeries, uniform_grid

FAST = PredictorSpec(window=4, hidden=8, epochs=40, lr=1e-2)


def make_set(values):
    values = np.asarray(values, dtype=float)
    t = uniform_grid(values.shape[-1])
    return [TimeSeries(t, v.reshape(-1, values.shape[-1])) for v in values]


def test_self_f1_in_band():
    real = make_set(np.random.default_rng(0).normal(size=(200, 16)))
    p, r, f1 = precision_recall_f1(real, real)
    assert p == r
    assert 0.95 <= f1 <= 1.0
    # below 101 samples only the extremes fall outside the band
    assert precision_recall_f1(real[:60], real[:60])[2] == pytest.approx(58 / 60, abs=1e-12)


def test_self_f1_depends_on_band_not_data():
    a = make_set(np.random.default_rng(0).normal(size=(200, 8)))
    b = make_set(np.random.default_rng(1).uniform(-5, 3, size=(200, 8)))
    for band in [(0.01, 0.99), (0.1, 0.9)]:
        assert precision_recall_f1(a, a, band)[2] == pytest.approx(precision_recall_f1(b, b, band)[2], abs=1e-12)
    assert precision_recall_f1(a, a, (0.1, 0.9))[2] == pytest.approx(0.8, abs=0.02)


def test_disjoint_f1_zero():
    rng = np.random.default_rng(0)
    real = make_set(rng.uniform(0, 1, size=(30, 10)))
    synth = make_set(rng.uniform(5, 6, size=(30, 10)))
    assert precision_recall_f1(real, synth) == (0.0, 0.0, 0.0)


def test_swap_symmetry():
    rng = np.random.default_rng(2)
    a = make_set(rng.normal(size=(50, 12)))
    b = make_set(rng.normal(0.5, 1.3, size=(40, 12)))
    p, r, f1 = precision_recall_f1(a, b)
    p2, r2, f12 = precision_recall_f1(b, a)
    assert (p, r) == (r2, p2) and f1 == f12


def test_prf_errors():
    a = make_set(np.zeros((12, 8)))
    with pytest.raises(ValueError, match="at least"):
        precision_recall_f1(a, a[:3])
    with pytest.raises(ValueError, match="shape"):
        precision_recall_f1(a, make_set(np.zeros((12, 9))))
    with pytest.raises(ValueError, match="empty"):
        precision_recall_f1(a, [])


def test_windows_layout():
    X = np.arange(2 * 2 * 6, dtype=float).reshape(2, 2, 6)
    inputs, targets = _windows(X, 3)
    assert inputs.shape == (2 * 3, 2 * 3) and targets.shape == (6, 2)
    assert inputs[0].tolist() == [0, 1, 2, 6, 7, 8]
    assert targets[0].tolist() == [3, 9]
    with pytest.raises(ValueError, match="shorter"):
        _windows(X, 6)


def test_predictive_score_deterministic_and_order_free():
    data = synth_corpus("multisine", 12, 32, 0).series
    a = predictive_score(data[:8], data[8:], FAST)
    assert a == predictive_score(data[:8], data[8:], FAST)
    assert a == predictive_score(data[:8][::-1], data[8:], FAST)
    other = predictive_score(data[:8], data[8:], PredictorSpec(4, 8, 40, 1e-2, seed=5))
    assert other != a


def test_zero_synthetic_mae_near_mean_abs_target():
    real = synth_corpus("multisine", 10, 48, 1).series
    zeros = make_set(np.zeros((10, 48)))
    spec = PredictorSpec(window=8, hidden=16, epochs=300, lr=1e-2)
    mae = predictive_score(zeros, real, spec)
    target = np.mean([np.abs(s.values[0, 8:]).mean() for s in real])
    assert mae == pytest.approx(target, rel=0.05)


def test_training_on_real_beats_noise():
    real = synth_corpus("multisine", 16, 64, 3).series
    noise = make_set(np.random.default_rng(0).normal(0, 0.5, size=(16, 64)))
    spec = PredictorSpec(window=8, hidden=16, epochs=300, lr=1e-2)
    assert predictive_score(real, real, spec) < predictive_score(noise, real, spec)


def test_evaluate_generation_report():
    data = synth_corpus("multisine", 12, 24, 0).series
    rep = evaluate_generation(data, data, FAST, config={"x": 1})
    assert rep.n_real == rep.n_synth == 12
    # interpolated 1%/99% quantiles of 12 distinct values exclude min and max
    assert rep.f1 == pytest.approx(10 / 12, abs=1e-12)
    assert rep.config_hash == evaluate_generation(data, data, FAST, config={"x": 1}).config_hash
    assert rep.config_hash != evaluate_generation(data, data, FAST, config={"x": 2}).config_hash
    assert set(rep.to_dict()) >= {"predictive_mae", "precision", "recall", "f1"}


def test_config_hash_key_order():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert len(config_hash({})) == 16


def test_spectral_profile_multisine_narrower():
    ms = spectral_variance_profile(synth_corpus("multisine", 40, 128, 0).series)
    sp = spectral_variance_profile(synth_corpus("spectral_spread", 40, 128, 0).series)
    assert ms.shape == sp.shape == (65,)
    # multisine energy sits at bins 2, 5 and 9 only
    off = np.delete(ms, [2, 5, 9])
    assert off.max() < 1e-10 * ms.max()
    assert np.abs(sp).sum() > np.abs(ms).sum()


def test_export_projection(tmp_path):
    real = synth_corpus("multisine", 12, 32, 0).series
    synth = synth_corpus("multisine", 5, 32, 1).series
    path = tmp_path / "proj.csv"
    rows = export_projection(real, synth, path)
    assert len(rows) == 17 and [r[2] for r in rows].count("synth") == 5
    with open(path) as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["x", "y", "label"] and len(table) == 18
