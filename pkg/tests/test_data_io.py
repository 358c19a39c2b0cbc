import numpy as np
import pytest

from hypertime.config import ConfigError, RunConfig
from hypertime.data_io import (
    DataFormatError,
    Dataset,
    load_csv_multivariate,
    load_series_file,
    load_ucr_tsv,
    save_csv_multivariate,
    save_ucr_tsv,
    synth_corpus,
)
from hypertime.series import TimeSeries, uniform_grid


def write(path, text):
    path.write_text(text)
    return path


def test_ucr_two_rows(tmp_path):
    ds = load_ucr_tsv(write(tmp_path / "a.tsv", "1\t0\t1\t2\t3\n2\t5\t4\t3\t2\n"))
    assert len(ds) == 2 and ds.labels == ["1", "2"]
    assert len(ds[0]) == 4 and ds[0].n_channels == 1
    assert np.allclose(ds[0].t, [-1.0, -1 / 3, 1 / 3, 1.0], atol=1e-15)
    assert ds[1].values.max() == 1.0 and ds[1].values.min() == -1.0
    assert ds.name == "a"


def test_ucr_constant_row_unit_gain(tmp_path):
    ds = load_ucr_tsv(write(tmp_path / "c.tsv", "0\t2.5\t2.5\t2.5\n"))
    assert ds[0].gain.tolist() == [1.0]
    assert np.array_equal(ds[0].raw(), np.full((1, 3), 2.5))


def test_ucr_ragged_row(tmp_path):
    with pytest.raises(DataFormatError, match="ragged row 1"):
        load_ucr_tsv(write(tmp_path / "r.tsv", "0\t1\t2\t3\n0\t1\t2\n"))


def test_ucr_non_numeric(tmp_path):
    with pytest.raises(DataFormatError, match="row 1, column 2"):
        load_ucr_tsv(write(tmp_path / "n.tsv", "0\t1\t2\n0\t1\tx\n"))


def test_ucr_empty(tmp_path):
    with pytest.raises(DataFormatError, match="no rows"):
        load_ucr_tsv(write(tmp_path / "e.tsv", "\n\n"))


def test_ucr_keeps_every_row(tmp_path):
    rows = "".join(f"{i % 3}\t{i}\t{i * 2}\t{-i}\n" for i in range(25))
    path = write(tmp_path / "k.tsv", rows + "\n")
    assert len(load_ucr_tsv(path)) == 25
    assert len(load_ucr_tsv(path, max_series=10)) == 10


def test_ucr_roundtrip(tmp_path, rng):
    raw = rng.normal(size=(5, 30)) * 100
    ds = Dataset([TimeSeries.from_raw(r, label=str(i)) for i, r in enumerate(raw)], "x")
    path = tmp_path / "x.tsv"
    save_ucr_tsv(ds, path)
    back = load_ucr_tsv(path)
    for s, orig in zip(back, raw):
        assert np.abs(s.raw()[0] - orig).max() <= 1e-12 * np.abs(orig).max()
    assert back.labels == [str(i) for i in range(5)]


def test_ucr_unnormalized(tmp_path):
    ds = load_ucr_tsv(write(tmp_path / "u.tsv", "0\t3\t4\n"), normalize=False)
    assert ds[0].values.tolist() == [[3.0, 4.0]]


def test_csv_wide_layout(tmp_path):
    row = ",".join(str(v) for v in range(16))
    ds = load_csv_multivariate(write(tmp_path / "w.csv", row + "\n"), channels=2, normalize=False)
    assert ds[0].values.shape == (2, 8)
    assert ds[0].values[1, 0] == 8.0


def test_csv_wide_mismatch(tmp_path):
    with pytest.raises(DataFormatError, match="not divisible"):
        load_csv_multivariate(write(tmp_path / "w.csv", "1,2,3\n"), channels=2)


def test_csv_long_layout_and_errors(tmp_path):
    text = "series_id,c0,c1\na,1,2\na,3,4\nb,5,6\nb,7,9\n"
    ds = load_csv_multivariate(write(tmp_path / "l.csv", text), 2, normalize=False)
    assert len(ds) == 2 and ds[1].values.tolist() == [[5, 7], [6, 9]]
    with pytest.raises(DataFormatError, match="expected 3"):
        load_csv_multivariate(write(tmp_path / "l.csv", text), 3)
    with pytest.raises(DataFormatError, match="not contiguous"):
        load_csv_multivariate(write(tmp_path / "m.csv", "series_id,c0\na,1\nb,2\nb,3\na,4\n"), 1)
    with pytest.raises(DataFormatError, match="row 1"):
        load_csv_multivariate(write(tmp_path / "m.csv", "series_id,c0\na,1,2\n"), 1)


def test_csv_roundtrip_bit_exact(tmp_path, rng):
    series = [TimeSeries(uniform_grid(8), rng.normal(size=(2, 8)), name=f"s{i}") for i in range(3)]
    path = tmp_path / "rt.csv"
    save_csv_multivariate(Dataset(series, "rt"), path)
    back = load_series_file(path, channels=2, normalize=False)
    for a, b in zip(series, back):
        assert np.array_equal(a.values, b.values)


def test_dataset_validation():
    one = TimeSeries(uniform_grid(4), np.zeros((1, 4)))
    two = TimeSeries(uniform_grid(4), np.zeros((2, 4)))
    with pytest.raises(ValueError, match="channel count"):
        Dataset([one, two])
    with pytest.raises(ValueError, match="non-empty"):
        Dataset([one], "")
    with pytest.raises(ValueError, match="labels"):
        Dataset([one], "x", ["a", "b"])


@pytest.mark.parametrize("preset", ["multisine", "am_chirp", "spectral_spread"])
def test_synth_corpus_properties(preset):
    ds = synth_corpus(preset, 6, 64, 3)
    assert len(ds) == 6 and all(len(s) == 64 for s in ds)
    X = np.stack([s.values for s in ds])
    assert np.abs(X).max() <= 1.0
    again = synth_corpus(preset, 6, 64, 3)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(ds, again))
    assert not np.array_equal(X, np.stack([s.values for s in synth_corpus(preset, 6, 64, 4)]))


def test_synth_corpus_errors():
    with pytest.raises(ValueError):
        synth_corpus("nope", 4, 32, 0)
    with pytest.raises(ValueError):
        synth_corpus("multisine", 1, 32, 0)
    with pytest.raises(ValueError):
        synth_corpus("multisine", 4, 8, 0)


def test_run_config_validation(tmp_path):
    cfg = RunConfig()
    assert cfg.override(seed=None).seed == 0
    assert cfg.override(epochs=5).epochs == 5
    with pytest.raises(ConfigError, match="unknown config keys: bogus"):
        RunConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError, match="activation"):
        cfg.override(activation="gelu")
    with pytest.raises(ConfigError, match="lambdas"):
        cfg.override(lambdas=[1, 2])
    bad = write(tmp_path / "c.json", "{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        RunConfig.load(bad)
    good = write(tmp_path / "g.json", '{"seed": 4, "steps": 3}')
    loaded = RunConfig.load(good)
    assert loaded.seed == 4 and loaded.hypertime().steps == 3
