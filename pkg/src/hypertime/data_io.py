"""Dataset files (UCR-style TSV, multivariate CSV) and synthetic corpora."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .series import TimeSeries, uniform_grid

PRESETS = ("multisine", "am_chirp", "spectral_spread")
MULTISINE_CYCLES = (2.0, 5.0, 9.0)


class DataFormatError(ValueError):
    pass


@dataclass
class Dataset:
    series: list[TimeSeries]
    name: str = "dataset"
    labels: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise ValueError("dataset name must be non-empty")
        if self.series:
            c = self.series[0].n_channels
            if any(s.n_channels != c for s in self.series):
                raise ValueError("all series in a dataset must share a channel count")
        if self.labels is not None and len(self.labels) != len(self.series):
            raise ValueError("labels and series differ in length")

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def __getitem__(self, i):
        return self.series[i]

    def head(self, n: int) -> "Dataset":
        labels = None if self.labels is None else self.labels[:n]
        return Dataset(self.series[:n], self.name, labels, dict(self.meta))


def _parse_float(cell: str, row: int, col: int, path) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataFormatError(f"{path}: non-numeric cell {cell!r} at row {row}, column {col}") from None


def load_ucr_tsv(path, normalize: bool = True, max_series: int | None = None) -> Dataset:
    """Read ``label<TAB>v1<TAB>v2 ...`` rows into univariate series.

    Every non-blank row becomes one series (rows must share a length); each
    series gets a uniform grid on [-1, 1] and, by default, min-max scaling.
    """
    path = Path(path)
    series, labels = [], []
    width = None
    with open(path, newline="") as fh:
        for r, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) < 3:
                raise DataFormatError(f"{path}: row {r} has {len(cells) - 1} values, need at least 2")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DataFormatError(
                    f"{path}: ragged row {r}: {len(cells)} cells, expected {width}"
                )
            values = np.array([_parse_float(c, r, j, path) for j, c in enumerate(cells[1:], 1)])
            labels.append(cells[0])
            series.append(TimeSeries.from_raw(values, normalize=normalize, name=f"{path.stem}[{len(series)}]", label=cells[0]))
            if max_series is not None and len(series) >= max_series:
                break
    if not series:
        raise DataFormatError(f"{path}: no rows")
    return Dataset(series, path.stem, labels)


def save_ucr_tsv(dataset, path) -> None:
    """Write raw (denormalized) univariate values with ``repr`` precision."""
    rows = list(dataset)
    with open(path, "w", newline="") as fh:
        for i, s in enumerate(rows):
            if s.n_channels != 1:
                raise DataFormatError("UCR TSV holds univariate series only")
            label = s.label if s.label is not None else "0"
            fh.write("\t".join([str(label)] + [repr(float(v)) for v in s.raw()[0]]) + "\n")


def load_csv_multivariate(path, channels: int, normalize: bool = True) -> Dataset:
    """Read multivariate series from CSV.

    Two layouts are accepted:

    * long: header ``series_id,c0,...,c{C-1}``; one row per time step, rows of
      a series contiguous;
    * wide: no header; one row per series holding ``C * N`` values laid out
      channel-major (all of channel 0, then channel 1, ...).
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    if channels < 1:
        raise DataFormatError("channels must be positive")
    series = []
    if rows[0][0].strip() == "series_id":
        header = rows[0]
        if len(header) - 1 != channels:
            raise DataFormatError(
                f"{path}: header has {len(header) - 1} channel columns, expected {channels}"
            )
        groups: dict[str, list] = {}
        order = []
        last = None
        for r, row in enumerate(rows[1:], 1):
            if len(row) != len(header):
                raise DataFormatError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
            sid = row[0]
            if sid != last and sid in groups:
                raise DataFormatError(f"{path}: rows of series {sid!r} are not contiguous (row {r})")
            if sid not in groups:
                groups[sid] = []
                order.append(sid)
            last = sid
            groups[sid].append([_parse_float(c, r, j, path) for j, c in enumerate(row[1:], 1)])
        for sid in order:
            raw = np.asarray(groups[sid]).T
            series.append(TimeSeries.from_raw(raw, normalize=normalize, name=sid, label=sid))
    else:
        for r, row in enumerate(rows):
            if len(row) % channels:
                raise DataFormatError(
                    f"{path}: row {r} has {len(row)} values, not divisible by {channels} channels"
                )
            vals = np.array([_parse_float(c, r, j, path) for j, c in enumerate(row)])
            series.append(
                TimeSeries.from_raw(vals.reshape(channels, -1), normalize=normalize, name=f"{path.stem}[{r}]")
            )
    return Dataset(series, path.stem)


def save_csv_multivariate(dataset, path) -> None:
    """Write the long layout read by :func:`load_csv_multivariate`."""
    rows = list(dataset)
    c = rows[0].n_channels
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series_id"] + [f"c{j}" for j in range(c)])
        for i, s in enumerate(rows):
            sid = s.name or f"s{i}"
            for col in s.raw().T:
                w.writerow([sid] + [repr(float(v)) for v in col])


def load_series_file(path, channels: int = 1, normalize: bool = True, max_series=None) -> Dataset:
    """Pick a loader from the file suffix (``.csv`` or anything else as TSV)."""
    if Path(path).suffix.lower() == ".csv":
        ds = load_csv_multivariate(path, channels, normalize)
        return ds.head(max_series) if max_series else ds
    return load_ucr_tsv(path, normalize, max_series)


# ---------------------------------------------------------------------------
# synthetic corpora
# ---------------------------------------------------------------------------


def _multisine(rng, tau):
    amps = rng.uniform(0.15, 1.0 / 3.0, size=3)
    phases = rng.uniform(0, 2 * np.pi, size=3)
    return sum(a * np.sin(2 * np.pi * f * tau + p) for a, f, p in zip(amps, MULTISINE_CYCLES, phases))


def _spectral_spread(rng, tau, n):
    # 1-3 tones at random frequencies anywhere up to n/5 cycles
    k = rng.integers(1, 4)
    freqs = rng.uniform(1.0, n / 5.0, size=k)
    amps = rng.uniform(0.3, 1.0, size=k)
    amps /= max(1.0, amps.sum())
    phases = rng.uniform(0, 2 * np.pi, size=k)
    return sum(a * np.sin(2 * np.pi * f * tau + p) for a, f, p in zip(amps, freqs, phases))


def _am_chirp(rng, tau, n):
    # sweep up to 0.03-0.05 cycles/sample: at least ~20 samples per period
    f0 = rng.uniform(1.0, 3.0)
    f1 = rng.uniform(0.03, 0.05) * n
    phase = 2 * np.pi * (f0 * tau + 0.5 * (f1 - f0) * tau**2) + rng.uniform(0, 2 * np.pi)
    env = 0.6 + 0.35 * np.sin(2 * np.pi * rng.uniform(0.5, 2.0) * tau + rng.uniform(0, 2 * np.pi))
    return env * np.sin(phase)


def synth_corpus(preset: str, n: int, length: int, seed) -> Dataset:
    """Bounded synthetic corpora (values in [-1, 1], identity scaling).

    * ``multisine``: tones at fixed 2, 5 and 9 cycles per series with random
      amplitudes and phases (spectra vary little across series);
    * ``spectral_spread``: 1-3 tones at random frequencies per series
      (spectra vary strongly);
    * ``am_chirp``: linear chirps under a slow amplitude envelope.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    if n < 2 or length < 16:
        raise ValueError("synthetic corpora need n >= 2 and length >= 16")
    rng = np.random.default_rng(seed)
    t = uniform_grid(length)
    tau = np.arange(length) / length
    series = []
    for i in range(n):
        if preset == "multisine":
            v = _multisine(rng, tau)
        elif preset == "spectral_spread":
            v = _spectral_spread(rng, tau, length)
        else:
            v = _am_chirp(rng, tau, length)
        series.append(TimeSeries(t, v[None, :], name=f"{preset}[{i}]", label="0"))
    return Dataset(series, preset, ["0"] * n, {"preset": preset, "seed": seed})
