"""The TimeSeries container and its normalization bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def uniform_grid(n: int) -> np.ndarray:
    """``n`` equally spaced time coordinates covering [-1, 1]."""
    if n < 2:
        raise ValueError(f"a time grid needs at least 2 points, got {n}")
    return np.linspace(-1.0, 1.0, n)


def minmax_scale(raw: np.ndarray, mask: np.ndarray | None = None):
    """Per-channel (offset, gain) mapping observed values onto [-1, 1].

    A channel with zero range gets gain 1 and offset equal to its constant.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    obs = raw if mask is None else raw[:, mask]
    if obs.shape[1] == 0:
        raise ValueError("no observed values to normalize")
    lo = obs.min(axis=1)
    hi = obs.max(axis=1)
    gain = (hi - lo) / 2.0
    offset = (hi + lo) / 2.0
    flat = gain == 0
    gain[flat] = 1.0
    offset[flat] = lo[flat]
    return offset, gain


@dataclass
class TimeSeries:
    """One (possibly multivariate) series on a time grid inside [-1, 1].

    ``values`` has shape ``(channels, n)`` and is stored in normalized units;
    ``raw()`` undoes the per-channel ``offset``/``gain``. Entries where
    ``mask`` is False are unobserved and may hold anything finite.
    """

    t: np.ndarray
    values: np.ndarray
    mask: np.ndarray | None = None
    offset: np.ndarray | None = None
    gain: np.ndarray | None = None
    name: str = ""
    label: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        c, n = self.values.shape
        if self.t.shape != (n,):
            raise ValueError(f"time grid has shape {self.t.shape}, values have {n} samples")
        if n < 2:
            raise ValueError("a series needs at least 2 samples")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if self.t[0] < -1.0 - 1e-12 or self.t[-1] > 1.0 + 1e-12:
            raise ValueError("time grid must lie within [-1, 1]")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != (n,):
                raise ValueError(f"mask has shape {self.mask.shape}, expected ({n},)")
        obs = self.values if self.mask is None else self.values[:, self.mask]
        if not np.isfinite(obs).all():
            raise ValueError("observed values must be finite")
        self.offset = np.zeros(c) if self.offset is None else np.asarray(self.offset, dtype=np.float64).reshape(c)
        self.gain = np.ones(c) if self.gain is None else np.asarray(self.gain, dtype=np.float64).reshape(c)

    @classmethod
    def from_raw(cls, raw, t=None, mask=None, normalize: bool = True, **kw) -> "TimeSeries":
        raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
        if t is None:
            t = uniform_grid(raw.shape[1])
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
        if not normalize:
            return cls(t, raw, mask, **kw)
        offset, gain = minmax_scale(raw, mask)
        values = (raw - offset[:, None]) / gain[:, None]
        return cls(t, values, mask, offset, gain, **kw)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.values.shape[1]

    @property
    def observed(self) -> np.ndarray:
        return np.ones(len(self), dtype=bool) if self.mask is None else self.mask

    def raw(self) -> np.ndarray:
        return self.values * self.gain[:, None] + self.offset[:, None]

    def with_values(self, values, mask=None) -> "TimeSeries":
        return replace(self, values=np.atleast_2d(values), mask=mask, meta=dict(self.meta))
