"""Implicit neural representations of single time series.

An INR is a small MLP mapping a time coordinate to the series value(s).
With ``activation="sine"`` every hidden layer computes
``sin(omega0 * W x + b)`` and the output layer is linear. Parameters live in
one flat vector ordered layer by layer as ``W`` (row-major, ``out x in``)
followed by ``b``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState, NumericalError, Tape, Var, adam_step
from .series import TimeSeries

log = logging.getLogger(__name__)

ACTIVATIONS = ("sine", "relu", "tanh", "sigmoid")
DEFAULT_HIDDEN = (60, 60, 60)


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple
    activation: str = "sine"
    omega0: float = 30.0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ValueError("an MLP needs at least an input and an output layer")
        if any(w <= 0 for w in widths):
            raise ValueError(f"layer widths must be positive: {widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.activation == "sine" and not self.omega0 > 0:
            raise ValueError("omega0 must be positive for sine activations")

    @classmethod
    def default(cls, channels: int = 1, activation: str = "sine", omega0: float = 30.0) -> "MlpSpec":
        return cls((1, *DEFAULT_HIDDEN, channels), activation, omega0)

    @property
    def n_in(self) -> int:
        return self.layer_widths[0]

    @property
    def n_out(self) -> int:
        return self.layer_widths[-1]

    def layer_slices(self):
        """Yield ``(n_in, n_out, w_start, b_start, b_stop)`` per layer."""
        pos = 0
        for n_in, n_out in zip(self.layer_widths[:-1], self.layer_widths[1:]):
            w_start = pos
            b_start = w_start + n_in * n_out
            pos = b_start + n_out
            yield n_in, n_out, w_start, b_start, pos

    @property
    def n_params(self) -> int:
        w = self.layer_widths
        return sum(a * b + b for a, b in zip(w[:-1], w[1:]))


@dataclass
class ParamVector:
    flat: np.ndarray
    spec: MlpSpec

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=np.float64)
        if self.flat.shape != (self.spec.n_params,):
            raise ValueError(
                f"parameter vector has shape {self.flat.shape}, spec needs ({self.spec.n_params},)"
            )

    def unflatten(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [
            (self.flat[w0:b0].reshape(n_out, n_in), self.flat[b0:b1])
            for n_in, n_out, w0, b0, b1 in self.spec.layer_slices()
        ]

    @classmethod
    def flatten(cls, layers, spec: MlpSpec) -> "ParamVector":
        parts = []
        for W, b in layers:
            parts.append(np.asarray(W, dtype=np.float64).ravel())
            parts.append(np.asarray(b, dtype=np.float64).ravel())
        return cls(np.concatenate(parts), spec)


def init_params(spec: MlpSpec, seed) -> ParamVector:
    """Random initial weights, deterministic in ``seed``.

    Sine nets: first layer ``U(-1/n_in, 1/n_in)``, later layers
    ``U(-sqrt(6/n_in)/omega0, +sqrt(6/n_in)/omega0)``. Other activations use
    Glorot-uniform. Biases are ``U(-1/sqrt(n_in), 1/sqrt(n_in))``.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for i, (n_in, n_out) in enumerate(zip(spec.layer_widths[:-1], spec.layer_widths[1:])):
        if spec.activation == "sine":
            bound = 1.0 / n_in if i == 0 else np.sqrt(6.0 / n_in) / spec.omega0
        else:
            bound = np.sqrt(6.0 / (n_in + n_out))
        W = rng.uniform(-bound, bound, size=(n_out, n_in))
        b = rng.uniform(-1.0 / np.sqrt(n_in), 1.0 / np.sqrt(n_in), size=n_out)
        layers.append((W, b))
    return ParamVector.flatten(layers, spec)


# ---------------------------------------------------------------------------
# forward passes
# ---------------------------------------------------------------------------


def _activate_np(z, spec: MlpSpec):
    if spec.activation == "sine":
        return np.sin(z)
    if spec.activation == "relu":
        return np.maximum(z, 0.0)
    if spec.activation == "tanh":
        return np.tanh(z)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def forward_np(flat: np.ndarray, spec: MlpSpec, x: np.ndarray) -> np.ndarray:
    """Plain numpy forward. ``flat`` is ``(P,)`` or ``(B, P)``; ``x`` is ``(..., N, n_in)``."""
    h = x
    last = len(spec.layer_widths) - 2
    for i, (n_in, n_out, w0, b0, b1) in enumerate(spec.layer_slices()):
        W = flat[..., w0:b0].reshape(flat.shape[:-1] + (n_out, n_in))
        b = flat[..., b0:b1][..., None, :]
        z = np.matmul(h, np.swapaxes(W, -1, -2))
        if i == last:
            h = z + b
        elif spec.activation == "sine":
            h = np.sin(spec.omega0 * z + b)
        else:
            h = _activate_np(z + b, spec)
    return h


def _layer_params(flat: Var, spec: MlpSpec):
    lead = flat.shape[:-1]
    for n_in, n_out, w0, b0, b1 in spec.layer_slices():
        W = ad.slice_last(flat, w0, b0).reshape(lead + (n_out, n_in))
        b = ad.slice_last(flat, b0, b1).reshape(lead + (1, n_out))
        yield W, b


def _activate(z: Var, spec: MlpSpec) -> Var:
    if spec.activation == "sine":
        return ad.sin(z)
    if spec.activation == "relu":
        return ad.relu(z)
    if spec.activation == "tanh":
        return ad.tanh(z)
    return ad.sigmoid(z)


def forward_var(flat: Var, spec: MlpSpec, x: Var) -> Var:
    """Taped forward pass; shapes as in :func:`forward_np`."""
    h = x
    last = len(spec.layer_widths) - 2
    for i, (W, b) in enumerate(_layer_params(flat, spec)):
        z = h @ W.T
        if i == last:
            h = z + b
        elif spec.activation == "sine":
            h = ad.sin(z * spec.omega0 + b)
        else:
            h = _activate(z + b, spec)
    return h


def forward_with_input_derivative(flat: Var, spec: MlpSpec, x: Var) -> tuple[Var, Var]:
    """Forward pass that also carries d(output)/dt for a 1-D input.

    The derivative is propagated layer by layer with the chain rule, so it
    stays on the tape and can itself be differentiated w.r.t. ``flat``.
    """
    if spec.n_in != 1:
        raise ValueError("input derivative is only defined for 1-D inputs")
    tape = x.tape
    h = x
    dh = tape.constant(np.ones(x.shape))
    last = len(spec.layer_widths) - 2
    for i, (W, b) in enumerate(_layer_params(flat, spec)):
        Wt = W.T
        z = h @ Wt
        dz = dh @ Wt
        if i == last:
            h, dh = z + b, dz
        elif spec.activation == "sine":
            pre = z * spec.omega0 + b
            h = ad.sin(pre)
            dh = ad.cos(pre) * (dz * spec.omega0)
        else:
            pre = z + b
            h = _activate(pre, spec)
            if spec.activation == "relu":
                dh = ad.step(pre) * dz
            elif spec.activation == "tanh":
                dh = (1.0 - ad.square(h)) * dz
            else:
                dh = (h - ad.square(h)) * dz
    return h, dh


def evaluate(params: ParamVector, t) -> np.ndarray:
    """Network output at coordinates ``t``; shape ``(channels, len(t))``."""
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    if not np.isfinite(t).all():
        raise ValueError("time coordinates must be finite")
    return forward_np(params.flat, params.spec, t).T


def input_derivative(params: ParamVector, t) -> np.ndarray:
    """d(output)/dt at ``t``; shape ``(channels, len(t))``."""
    tape = Tape()
    flat = tape.constant(params.flat)
    x = tape.constant(np.asarray(t, dtype=np.float64).reshape(-1, 1))
    _, d = forward_with_input_derivative(flat, params.spec, x)
    return d.value.T


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def tv_prior_var(flat: Var, spec: MlpSpec, t_samples) -> Var:
    """Mean absolute input-derivative of the network at ``t_samples``."""
    t_samples = np.asarray(t_samples, dtype=np.float64)
    if t_samples.size == 0:
        raise ValueError("tv prior needs at least one sample point")
    x = flat.tape.constant(t_samples.reshape(-1, 1))
    _, d = forward_with_input_derivative(flat, spec, x)
    return ad.absolute(d).mean()


def tv_prior(params: ParamVector, t_samples) -> float:
    tape = Tape()
    return float(tv_prior_var(tape.constant(params.flat), params.spec, t_samples).value)


@dataclass
class FitOptions:
    epochs: int = 2000
    lr: float = 1e-4
    seed: int = 0
    tv_weight: float = 0.0


def fit(series: TimeSeries, spec: MlpSpec | None = None, opts: FitOptions | None = None, **kw):
    """Fit an INR to the observed samples of ``series`` by full-batch Adam.

    Returns ``(ParamVector, loss_history)`` where the history holds the data
    MSE at every epoch (before that epoch's update). With ``tv_weight > 0``
    the objective adds ``tv_weight`` times the TV prior evaluated at observed
    time points drawn at random each epoch.
    """
    opts = opts or FitOptions(**kw)
    spec = spec or MlpSpec.default(series.n_channels)
    if spec.n_in != 1 or spec.n_out != series.n_channels:
        raise ValueError(
            f"spec widths {spec.layer_widths} do not match a {series.n_channels}-channel series"
        )
    obs = series.observed
    if obs.sum() < 2:
        raise ValueError("need at least 2 observed samples to fit")
    t_obs = series.t[obs]
    x = t_obs.reshape(-1, 1)
    y = series.values[:, obs].T
    params = {"flat": init_params(spec, opts.seed).flat}
    state = AdamState(lr=opts.lr)
    rng = np.random.default_rng([opts.seed, 1])
    history = np.empty(opts.epochs)
    for epoch in range(opts.epochs):
        tape = Tape()
        flat = tape.param(params["flat"], "flat")
        try:
            pred = forward_var(flat, spec, tape.constant(x))
            mse = ad.square(pred - y).mean()
            loss = mse
            if opts.tv_weight > 0:
                ts = rng.choice(t_obs, size=t_obs.shape[0], replace=True)
                loss = mse + tv_prior_var(flat, spec, ts) * opts.tv_weight
            history[epoch] = float(mse.value)
            grads = tape.backward(loss)
            adam_step(state, params, grads)
        except NumericalError as exc:
            raise NumericalError(f"INR fit diverged at epoch {epoch}: {exc}") from exc
    return ParamVector(params["flat"], spec), history


def reconstruction_mse(params: ParamVector, series: TimeSeries) -> float:
    """MSE on observed samples, averaged over channels."""
    obs = series.observed
    pred = evaluate(params, series.t[obs])
    return float(np.mean((pred - series.values[:, obs]) ** 2))


def _fit_job(args):
    idx, series, activation, omega0, opts = args
    spec = MlpSpec.default(series.n_channels, activation, omega0)
    try:
        params, hist = fit(series, spec, opts)
    except (NumericalError, ValueError) as exc:
        raise type(exc)(f"series {idx} ({activation}): {exc}") from exc
    return reconstruction_mse(params, series), hist


def compare_activations(
    dataset: Sequence[TimeSeries],
    epochs: int = 2000,
    lr: float = 1e-4,
    seed: int = 0,
    omega0: float = 30.0,
    activations: Sequence[str] = ACTIVATIONS,
    max_series: int = 300,
    workers: int = 1,
) -> dict:
    """Fit one INR per series per activation and tabulate reconstruction MSE.

    Returns ``{activation: {"mean_mse", "mse", "curves"}}``; ``curves`` is an
    ``(n_series, epochs)`` array of per-epoch training MSE. At most
    ``max_series`` series (the first ones) are used.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    dataset = list(dataset)[:max_series]
    jobs = [
        (i, s, act, omega0, FitOptions(epochs=epochs, lr=lr, seed=seed + i))
        for act in activations
        for i, s in enumerate(dataset)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_job, jobs))
    else:
        results = [_fit_job(j) for j in jobs]
    table = {}
    n = len(dataset)
    for k, act in enumerate(activations):
        chunk = results[k * n : (k + 1) * n]
        mse = np.array([r[0] for r in chunk])
        table[act] = {
            "mean_mse": float(mse.mean()),
            "mse": mse,
            "curves": np.stack([r[1] for r in chunk]),
        }
        log.info("%s: mean MSE %.3e over %d series", act, mse.mean(), n)
    return table
