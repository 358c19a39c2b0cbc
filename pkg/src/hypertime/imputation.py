"""Missing-value imputation with INRs (optionally TV-regularized) and baselines."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import _accel
from .inr import FitOptions, MlpSpec, evaluate, fit, tv_prior, tv_prior_var  # noqa: F401  (tv prior lives with the MLP passes)
from .series import TimeSeries
from .spectral import ffte

BASELINES = ("mean", "knn", "cubic_spline", "linear")
DEFAULT_TV_WEIGHT = 1e-6


@dataclass
class MaskedSeries:
    series: TimeSeries  # values at masked-out positions are zeroed
    missing_fraction: float
    truth: TimeSeries | None = None

    def __post_init__(self):
        if self.series.mask is None:
            raise ValueError("masked series must carry a mask")
        if self.series.mask.sum() < 2:
            raise ValueError("at least 2 observed points are required")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise ValueError("missing fraction must lie in [0, 1)")


@dataclass
class ImputationReport:
    method: str
    mse: float
    ffte: float
    fraction: float

    def to_dict(self) -> dict:
        return asdict(self)


def mask_series(series: TimeSeries, fraction: float, seed) -> MaskedSeries:
    """Hide ``round(fraction * N)`` uniformly chosen samples (half rounds up)."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"missing fraction must lie in [0, 1), got {fraction}")
    n = len(series)
    n_missing = int(np.floor(fraction * n + 0.5))
    if n - n_missing < 2:
        raise ValueError(f"fraction {fraction} leaves fewer than 2 observed points of {n}")
    rng = np.random.default_rng(seed)
    mask = np.ones(n, dtype=bool)
    mask[rng.choice(n, size=n_missing, replace=False)] = False
    values = np.where(mask, series.values, 0.0)
    hidden = series.with_values(values, mask=mask)
    return MaskedSeries(hidden, float(fraction), truth=series)


def _report(method: str, masked: MaskedSeries, imputed: np.ndarray) -> ImputationReport:
    if masked.truth is None:
        return ImputationReport(method, float("nan"), float("nan"), masked.missing_fraction)
    truth = masked.truth.values
    mse = float(np.mean((imputed - truth) ** 2))
    fe = float(np.mean([ffte(truth[c], imputed[c]) for c in range(truth.shape[0])]))
    return ImputationReport(method, mse, fe, masked.missing_fraction)


def impute_inr(
    masked: MaskedSeries,
    use_tv: bool = False,
    tv_weight: float = DEFAULT_TV_WEIGHT,
    opts: FitOptions | None = None,
    spec: MlpSpec | None = None,
    **kw,
):
    """Fit an INR to the observed points and evaluate it on the full grid."""
    opts = opts or FitOptions(**kw)
    opts = FitOptions(opts.epochs, opts.lr, opts.seed, tv_weight if use_tv else 0.0)
    s = masked.series
    params, _ = fit(s, spec or MlpSpec.default(s.n_channels), opts)
    imputed = evaluate(params, s.t)
    name = "siren_tv" if use_tv else "siren"
    return s.with_values(imputed, mask=s.mask), _report(name, masked, imputed)


def _fill(method: str, t_obs, v_obs, t_all, k: int) -> np.ndarray:
    if method == "mean":
        return np.repeat(v_obs.mean(axis=1, keepdims=True), t_all.shape[0], axis=1)
    if method == "linear":
        # np.interp holds edge values constant outside the observed range
        return np.stack([np.interp(t_all, t_obs, v) for v in v_obs])
    if method == "cubic_spline":
        if t_obs.shape[0] < 4:
            raise ValueError("cubic spline imputation needs at least 4 observed points")
        return CubicSpline(t_obs, v_obs, axis=1, bc_type="natural")(t_all)
    if method == "knn":
        return _accel.knn_fill(t_obs, v_obs, t_all, k)
    raise ValueError(f"unknown baseline {method!r}; choose from {BASELINES}")


def impute_baseline(masked: MaskedSeries, method: str, k: int = 5):
    """Classical imputation; observed samples are passed through unchanged."""
    s = masked.series
    obs = s.mask
    filled = _fill(method, s.t[obs], s.values[:, obs], s.t, k)
    imputed = np.where(obs, s.values, filled)
    return s.with_values(imputed, mask=s.mask), _report(method, masked, imputed)


def impute(masked: MaskedSeries, method: str, opts: FitOptions | None = None, tv_weight=DEFAULT_TV_WEIGHT):
    """Dispatch on method name: ``siren``, ``siren_tv`` or a baseline."""
    if method == "siren":
        return impute_inr(masked, False, opts=opts)
    if method == "siren_tv":
        return impute_inr(masked, True, tv_weight, opts=opts)
    return impute_baseline(masked, method)
