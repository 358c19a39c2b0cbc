"""Quality metrics for generated series.

* predictive score: a windowed MLP forecaster is trained on synthetic series
  and its next-step MAE is measured on real series;
* per-timestep precision/recall: the share of one set's values that fall in
  the other set's central quantile band at each time step, averaged over
  time and combined into F1;
* spectral variance profile and 2-D PCA projections for plotting.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from . import _accel
from . import autodiff as ad
from .autodiff import AdamState, NumericalError, Tape, adam_step
from .hyper import HyperTimeConfig, PcaBasis, interpolate_generate, train_hypertime
from .inr import MlpSpec, forward_np, forward_var, init_params
from .series import TimeSeries
from .spectral import magnitude_spectra

DEFAULT_BAND = (0.01, 0.99)
BAND_EPS = 1e-9


@dataclass
class PredictorSpec:
    window: int = 8
    hidden: int = 32
    epochs: int = 500
    lr: float = 1e-3
    seed: int = 0
    # L2 penalty on weights; drives unused weights to zero
    weight_decay: float = 1e-4

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("predictor window must be >= 1")


@dataclass
class EvalReport:
    predictive_mae: float
    precision: float
    recall: float
    f1: float
    n_real: int
    n_synth: int
    config_hash: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _stack(series: Sequence[TimeSeries], what: str) -> np.ndarray:
    series = list(series)
    if not series:
        raise ValueError(f"{what} set is empty")
    lengths = {s.values.shape for s in series}
    if len(lengths) != 1:
        raise ValueError(f"{what} series differ in shape: {sorted(lengths)}")
    return np.stack([s.values for s in series])


def _windows(X: np.ndarray, p: int):
    """Sliding windows of ``p`` steps (all channels) and the following step."""
    n, c, length = X.shape
    if length < p + 1:
        raise ValueError(f"series of length {length} are shorter than window + 1 = {p + 1}")
    idx = np.arange(length - p)[:, None] + np.arange(p)[None, :]
    inputs = X[:, :, idx]  # (n, c, W, p)
    inputs = inputs.transpose(0, 2, 1, 3).reshape(-1, c * p)
    targets = X[:, :, p:].transpose(0, 2, 1).reshape(-1, c)
    return inputs, targets


def train_predictor(inputs: np.ndarray, targets: np.ndarray, spec: PredictorSpec):
    """Fit the forecaster by full-batch Adam on MAE plus L2 weight decay."""
    # canonical row order makes training independent of how the set was listed
    order = np.lexsort(np.concatenate([inputs, targets], axis=1).T[::-1])
    inputs, targets = inputs[order], targets[order]
    mspec = MlpSpec((inputs.shape[1], spec.hidden, targets.shape[1]), "tanh")
    params = {"flat": init_params(mspec, spec.seed).flat}
    weight_mask = np.zeros(mspec.n_params)
    for _, _, w0, b0, _ in mspec.layer_slices():
        weight_mask[w0:b0] = 1.0
    state = AdamState(lr=spec.lr)
    for epoch in range(spec.epochs):
        tape = Tape()
        flat = tape.param(params["flat"], "flat")
        pred = forward_var(flat, mspec, tape.constant(inputs))
        loss = ad.absolute(pred - targets).mean()
        if spec.weight_decay > 0:
            loss = loss + ad.square(flat * tape.constant(weight_mask)).sum() * spec.weight_decay
        try:
            adam_step(state, params, tape.backward(loss))
        except NumericalError as exc:
            raise NumericalError(f"predictor training diverged at epoch {epoch}: {exc}") from exc
    return params["flat"], mspec


def predictive_score(synth: Sequence[TimeSeries], real: Sequence[TimeSeries], spec: PredictorSpec | None = None) -> float:
    """Train-on-synthetic, test-on-real next-step MAE (normalized units)."""
    spec = spec or PredictorSpec()
    S = _stack(synth, "synthetic")
    R = _stack(real, "real")
    if S.shape[1] != R.shape[1]:
        raise ValueError("synthetic and real series differ in channel count")
    flat, mspec = train_predictor(*_windows(S, spec.window), spec)
    x_real, y_real = _windows(R, spec.window)
    return float(np.mean(np.abs(forward_np(flat, mspec, x_real) - y_real)))


def precision_recall_f1(real: Sequence[TimeSeries], synth: Sequence[TimeSeries], band=DEFAULT_BAND,
                        eps: float = BAND_EPS, min_series: int = 10):
    """Per-timestep quantile-band precision, recall and their F1.

    Precision at a step is the share of synthetic values inside the real
    values' ``[q_lo, q_hi]`` quantile band (widened by ``eps``); recall swaps
    the roles. Both are averaged over time steps (and channels).
    """
    R = _stack(real, "real")
    S = _stack(synth, "synthetic")
    if R.shape[1:] != S.shape[1:]:
        raise ValueError(f"real series have shape {R.shape[1:]}, synthetic {S.shape[1:]}")
    if R.shape[0] < min_series or S.shape[0] < min_series:
        raise ValueError(f"need at least {min_series} series in each set")
    lo, hi = band
    R = R.reshape(R.shape[0], -1)
    S = S.reshape(S.shape[0], -1)
    r_lo, r_hi = np.quantile(R, [lo, hi], axis=0)
    s_lo, s_hi = np.quantile(S, [lo, hi], axis=0)
    p = float(_accel.band_coverage(S, r_lo, r_hi, eps).mean())
    r = float(_accel.band_coverage(R, s_lo, s_hi, eps).mean())
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def evaluate_generation(real, synth, predictor: PredictorSpec | None = None, band=DEFAULT_BAND,
                        config: dict | None = None) -> EvalReport:
    predictor = predictor or PredictorSpec()
    p, r, f1 = precision_recall_f1(real, synth, band)
    mae = predictive_score(synth, real, predictor)
    cfg = {"predictor": asdict(predictor), "band": list(band), **(config or {})}
    return EvalReport(mae, p, r, f1, len(list(real)), len(list(synth)), config_hash(cfg))


def spectral_variance_profile(corpus: Sequence[TimeSeries]) -> np.ndarray:
    """Per-bin standard deviation of magnitude spectra across the corpus.

    Shape ``(bins,)`` for univariate corpora, ``(channels, bins)`` otherwise.
    """
    X = _stack(corpus, "corpus")
    prof = magnitude_spectra(X).std(axis=0)
    return prof[0] if prof.shape[0] == 1 else prof


def export_projection(real: Sequence[TimeSeries], synth: Sequence[TimeSeries], path=None):
    """2-component PCA of the union; rows ``(x, y, label)``, real rows first."""
    real, synth = list(real), list(synth)
    basis = PcaBasis.fit(real + synth, 2)
    rows = []
    for label, group in (("real", real), ("synth", synth)):
        if group:
            coords = basis.transform(np.stack([s.values for s in group]))
            rows += [(float(x), float(y), label) for x, y in coords[:, :2]]
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "label"])
            w.writerows((repr(x), repr(y), lab) for x, y, lab in rows)
    return rows


def ablation_fft(corpus: Sequence[TimeSeries], config: HyperTimeConfig | None = None, n_synth: int | None = None,
                 gen_seed: int = 0, predictor: PredictorSpec | None = None, band=DEFAULT_BAND,
                 without_lambda: float = 0.0):
    """Train twin HyperTime models that differ only in the spectral-loss weight.

    Both arms share every seed; returns ``{"with_fft": EvalReport,
    "without_fft": EvalReport}`` plus the two trained models under
    ``"models"``.
    """
    corpus = list(corpus)
    cfg = config or HyperTimeConfig()
    n_synth = n_synth or len(corpus)
    out = {"models": {}}
    for arm, lam3 in (("with_fft", cfg.lambdas[2]), ("without_fft", without_lambda)):
        arm_cfg = replace(cfg, lambdas=(cfg.lambdas[0], cfg.lambdas[1], lam3))
        model = train_hypertime(corpus, arm_cfg)
        synth = interpolate_generate(model, corpus, n_synth, seed=gen_seed)
        out[arm] = evaluate_generation(corpus, synth, predictor, band, {"hypertime": asdict(arm_cfg)})
        out["models"][arm] = model
    return out
