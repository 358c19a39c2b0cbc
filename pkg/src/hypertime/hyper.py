"""HyperTime: a set encoder and hypernetwork that emit per-series INR weights.

Every ``(t, f(t))`` pair of a series is mapped by a sine-activated encoder to
a latent vector; the per-pair vectors are mean-pooled into one embedding
``z``. A ReLU hypernetwork maps ``z`` to the flat weight vector of a hyponet
(an INR with :class:`~hypertime.inr.MlpSpec` layout), which is evaluated on
the series' own time grid. Training backpropagates the composite loss

    L = L_rec + lam_weights * L_weights + lam_latent * L_latent + lam_fft * L_fft

through hyponet, hypernetwork and encoder in a single tape.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState, NumericalError, Tape, adam_step
from .inr import MlpSpec, ParamVector, forward_np, forward_var, init_params
from .series import TimeSeries, uniform_grid
from .spectral import fft_loss_var

log = logging.getLogger(__name__)

LATENT_DIM = 40
DEFAULT_LAMBDAS = (1e-4, 1e-3, 1e-2)


@dataclass
class HyperTimeConfig:
    steps: int = 2000
    batch_size: int = 32
    lr: float = 1e-4
    seed: int = 0
    lambdas: tuple = DEFAULT_LAMBDAS
    omega0: float = 30.0
    encoder_omega0: float = 30.0
    encoder_hidden: tuple = (128, 128)
    latent_dim: int = LATENT_DIM
    hyper_hidden: int = 128
    hypo_hidden: tuple = (60, 60, 60)
    # hypernet output layer weights are shrunk by this factor at init and its
    # bias holds a SIREN initialization, so untrained hyponets start as SIRENs
    hyper_out_scale: float = 1e-2
    log_every: int = 0

    def __post_init__(self):
        self.lambdas = tuple(float(x) for x in self.lambdas)
        if len(self.lambdas) != 3 or any(x < 0 for x in self.lambdas):
            raise ValueError("lambdas must be three non-negative numbers")
        if self.steps < 0 or self.batch_size < 1 or not self.lr > 0:
            raise ValueError("steps >= 0, batch_size >= 1 and lr > 0 required")
        self.encoder_hidden = tuple(int(w) for w in self.encoder_hidden)
        self.hypo_hidden = tuple(int(w) for w in self.hypo_hidden)


@dataclass
class HyperTimeModel:
    encoder: ParamVector
    hyper: ParamVector
    hypo_spec: MlpSpec
    lambdas: tuple = DEFAULT_LAMBDAS
    meta: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hyper.spec.n_out != self.hypo_spec.n_params:
            raise ValueError(
                f"hypernet emits {self.hyper.spec.n_out} values, hyponet needs {self.hypo_spec.n_params}"
            )
        if self.encoder.spec.n_out != self.hyper.spec.n_in:
            raise ValueError("encoder latent width does not match hypernet input")
        if self.encoder.spec.n_in != 1 + self.hypo_spec.n_out:
            raise ValueError("encoder input width must be 1 + channels")

    @property
    def channels(self) -> int:
        return self.hypo_spec.n_out

    @property
    def latent_dim(self) -> int:
        return self.encoder.spec.n_out

    @property
    def omega0(self) -> float:
        return self.hypo_spec.omega0


@dataclass
class Embedding:
    z: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        if self.z.ndim != 1 or not np.isfinite(self.z).all():
            raise ValueError("embedding must be a finite 1-D vector")


def init_model(channels: int = 1, config: HyperTimeConfig | None = None) -> HyperTimeModel:
    cfg = config or HyperTimeConfig()
    hypo_spec = MlpSpec((1, *cfg.hypo_hidden, channels), "sine", cfg.omega0)
    enc_spec = MlpSpec((1 + channels, *cfg.encoder_hidden, cfg.latent_dim), "sine", cfg.encoder_omega0)
    hyper_spec = MlpSpec((cfg.latent_dim, cfg.hyper_hidden, hypo_spec.n_params), "relu")
    ss = np.random.SeedSequence(cfg.seed)
    s_enc, s_hyp, s_base = ss.spawn(3)
    encoder = init_params(enc_spec, s_enc)
    hyper = init_params(hyper_spec, s_hyp)
    layers = hyper.unflatten()
    W_out, _ = layers[-1]
    layers[-1] = (W_out * cfg.hyper_out_scale, init_params(hypo_spec, s_base).flat)
    hyper = ParamVector.flatten(layers, hyper_spec)
    return HyperTimeModel(encoder, hyper, hypo_spec, cfg.lambdas)


def _pairs(series: TimeSeries) -> np.ndarray:
    return np.concatenate([series.t[None, :], series.values], axis=0).T


def _canonical(pairs: np.ndarray) -> np.ndarray:
    # sorted, de-duplicated rows: pooling then sees one fixed summation order,
    # so the embedding is bit-identical under permutation and duplication
    return np.unique(pairs, axis=0)


def encode_pairs(model: HyperTimeModel, pairs: np.ndarray) -> np.ndarray:
    """Mean-pooled encoder output for an ``(n_pairs, 1 + C)`` set of pairs.

    The set is canonicalized first. A series has strictly increasing ``t``,
    so its pairs are already canonical and training sees the same order.
    """
    pairs = np.asarray(pairs, dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[1] != model.encoder.spec.n_in:
        raise ValueError(f"pairs must have shape (n, {model.encoder.spec.n_in}), got {pairs.shape}")
    return forward_np(model.encoder.flat, model.encoder.spec, _canonical(pairs)).mean(axis=0)


def encode(model: HyperTimeModel, series: TimeSeries) -> Embedding:
    if series.n_channels != model.channels:
        raise ValueError(
            f"series has {series.n_channels} channels, model encodes {model.channels}"
        )
    if series.mask is not None and not series.mask.all():
        raise ValueError("encode expects a fully observed series")
    return Embedding(encode_pairs(model, _pairs(series)), series.name)


def decode_array(model: HyperTimeModel, z: np.ndarray) -> np.ndarray:
    return forward_np(model.hyper.flat, model.hyper.spec, np.atleast_2d(z)[None])[0]


def decode(model: HyperTimeModel, z) -> ParamVector:
    z = z.z if isinstance(z, Embedding) else np.asarray(z, dtype=np.float64)
    if z.shape != (model.latent_dim,):
        raise ValueError(f"embedding has shape {z.shape}, expected ({model.latent_dim},)")
    return ParamVector(decode_array(model, z)[0], model.hypo_spec)


def reconstruct(model: HyperTimeModel, series: TimeSeries) -> np.ndarray:
    """decode(encode(series)) evaluated on the series' grid, ``(C, N)``."""
    params = decode(model, encode(model, series))
    return forward_np(params.flat, params.spec, series.t[:, None]).T


# ---------------------------------------------------------------------------
# loss and training
# ---------------------------------------------------------------------------


def _batch_loss(tape: Tape, enc, hyp, model: HyperTimeModel, batch: Sequence[TimeSeries]):
    n = len(batch[0])
    if any(len(s) != n for s in batch):
        raise ValueError("a training batch must hold series of one length")
    pairs = np.stack([_pairs(s) for s in batch])  # (B, N, 1+C)
    target = np.stack([s.values for s in batch])  # (B, C, N)
    per_pair = forward_var(enc, model.encoder.spec, tape.constant(pairs))
    z = per_pair.mean(axis=1)  # (B, Z)
    w = forward_var(hyp, model.hyper.spec, z)  # (B, P)
    t = tape.constant(pairs[:, :, :1])
    f_hat = forward_var(w, model.hypo_spec, t).T  # (B, C, N)
    l_rec = ad.square(f_hat - target).mean()
    l_w = ad.square(w).mean()
    l_z = ad.square(z).mean()
    l_fft = fft_loss_var(tape.constant(target), f_hat)
    lam1, lam2, lam3 = model.lambdas
    total = l_rec + l_w * lam1 + l_z * lam2 + l_fft * lam3
    parts = {"total": total, "rec": l_rec, "weights": l_w, "latent": l_z, "fft": l_fft}
    return total, parts


def hypertime_loss(model: HyperTimeModel, batch: Sequence[TimeSeries], with_grads: bool = False):
    """Composite loss on ``batch``; returns ``(total, components[, grads])``.

    ``components`` maps ``rec``, ``weights``, ``latent``, ``fft`` (and
    ``total``) to floats. With ``with_grads`` the gradients w.r.t. the
    encoder and hypernet parameter vectors are returned as well.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    tape = Tape()
    enc = tape.param(model.encoder.flat, "encoder")
    hyp = tape.param(model.hyper.flat, "hyper")
    total, parts = _batch_loss(tape, enc, hyp, model, batch)
    comps = {}
    for name, var in parts.items():
        val = float(var.value)
        if not np.isfinite(val):
            raise NumericalError(f"loss component {name!r} is not finite")
        comps[name] = val
    if not with_grads:
        return comps["total"], comps
    return comps["total"], comps, tape.backward(total)


def _length_groups(corpus):
    groups: dict[int, list[int]] = {}
    for i, s in enumerate(corpus):
        groups.setdefault(len(s), []).append(i)
    return [np.array(v) for _, v in sorted(groups.items())]


def train_hypertime(corpus: Sequence[TimeSeries], config: HyperTimeConfig | None = None,
                    checkpoint=None, checkpoint_every: int = 0) -> HyperTimeModel:
    """Fit encoder and hypernet by minibatch Adam on the composite loss.

    Batches are drawn from one length group at a time by walking seeded
    permutations. ``checkpoint`` (a path) is written every
    ``checkpoint_every`` steps and at the end.
    """
    cfg = config or HyperTimeConfig()
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty training corpus")
    channels = corpus[0].n_channels
    if any(s.n_channels != channels for s in corpus):
        raise ValueError("all training series must share a channel count")
    for i, s in enumerate(corpus):
        if s.mask is not None and not s.mask.all():
            raise ValueError(f"training series {i} has missing values")
    model = init_model(channels, cfg)
    model.meta.update(
        lengths=[len(s) for s in corpus],
        offsets=[s.offset.tolist() for s in corpus],
        gains=[s.gain.tolist() for s in corpus],
    )
    params = {"encoder": model.encoder.flat.copy(), "hyper": model.hyper.flat.copy()}
    state = AdamState(lr=cfg.lr)
    rng = np.random.default_rng([cfg.seed, 7])
    groups = _length_groups(corpus)
    weights = np.array([len(g) for g in groups], dtype=float)
    queues = [[] for _ in groups]
    hist = {k: [] for k in ("total", "rec", "weights", "latent", "fft")}
    for step in range(cfg.steps):
        gi = 0 if len(groups) == 1 else int(rng.choice(len(groups), p=weights / weights.sum()))
        if len(queues[gi]) < min(cfg.batch_size, len(groups[gi])):
            queues[gi] = list(rng.permutation(groups[gi]))
        take = min(cfg.batch_size, len(groups[gi]))
        idx, queues[gi] = queues[gi][:take], queues[gi][take:]
        batch = [corpus[i] for i in sorted(idx)]
        model.encoder.flat = params["encoder"]
        model.hyper.flat = params["hyper"]
        try:
            _, comps, grads = hypertime_loss(model, batch, with_grads=True)
            adam_step(state, params, grads)
        except NumericalError as exc:
            raise NumericalError(f"HyperTime training diverged at step {step}: {exc}") from exc
        for k, v in comps.items():
            hist[k].append(v)
        if cfg.log_every and (step % cfg.log_every == 0 or step == cfg.steps - 1):
            log.info("step %d  " + "  ".join(f"{k}=%.3e" for k in comps), step, *comps.values())
        if checkpoint and checkpoint_every and (step + 1) % checkpoint_every == 0:
            from .containers import save_hypertime

            save_hypertime(checkpoint, model)
    model.encoder.flat = params["encoder"]
    model.hyper.flat = params["hyper"]
    model.history = {k: np.asarray(v) for k, v in hist.items()}
    if checkpoint:
        from .containers import save_hypertime

        save_hypertime(checkpoint, model)
    return model


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def _draw_pairs(rng, n_series: int, n_samples: int, alpha_range, alpha):
    if n_series < 2:
        raise ValueError("interpolation needs at least 2 series")
    pairs = np.array([rng.choice(n_series, size=2, replace=False) for _ in range(n_samples)], dtype=int)
    if alpha is None:
        lo, hi = alpha_range
        alphas = rng.uniform(lo, hi, size=n_samples)
    else:
        alphas = np.full(n_samples, float(alpha))
    return pairs.reshape(n_samples, 2), alphas


def interpolate_generate(model: HyperTimeModel, corpus: Sequence[TimeSeries], n_samples: int,
                         seed=0, alpha_range=(0.25, 0.75), alpha: float | None = None) -> list[TimeSeries]:
    """Synthesize series from convex combinations of two corpus embeddings.

    For each sample a random distinct pair ``(A, B)`` and a mixing weight
    ``alpha`` (uniform on ``alpha_range`` unless ``alpha`` is fixed) give
    ``z = (1 - alpha) z_A + alpha z_B``. The decoded hyponet is evaluated on
    a uniform grid of A's length; channel scales are mixed the same way.
    """
    corpus = list(corpus)
    if not np.isfinite(model.hyper.flat).all() or not np.isfinite(model.encoder.flat).all():
        raise ValueError("model parameters are not finite")
    rng = np.random.default_rng(seed)
    pairs, alphas = _draw_pairs(rng, len(corpus), n_samples, alpha_range, alpha)
    Z = np.stack([encode(model, s).z for s in corpus])
    out = []
    for (a, b), al in zip(pairs, alphas):
        z = (1.0 - al) * Z[a] + al * Z[b]
        params = decode(model, z)
        n = len(corpus[a])
        t = uniform_grid(n)
        values = forward_np(params.flat, params.spec, t[:, None]).T
        offset = (1.0 - al) * corpus[a].offset + al * corpus[b].offset
        gain = (1.0 - al) * corpus[a].gain + al * corpus[b].gain
        out.append(
            TimeSeries(t, values, None, offset, gain, name=f"interpolated({al:.6g}, {a}, {b})", label="synthetic")
        )
    return out


@dataclass
class PcaBasis:
    mean: np.ndarray
    components: np.ndarray  # (k, D), orthonormal rows
    shape: tuple  # (C, N) of one series

    @classmethod
    def fit(cls, corpus: Sequence[TimeSeries], n_components: int = LATENT_DIM) -> "PcaBasis":
        corpus = list(corpus)
        lengths = {len(s) for s in corpus}
        if len(lengths) != 1:
            raise ValueError("PCA needs equally sampled series of one length")
        shape = corpus[0].values.shape
        X = np.stack([s.values.ravel() for s in corpus])
        mean = X.mean(axis=0)
        _, sv, Vt = np.linalg.svd(X - mean, full_matrices=False)
        k = min(n_components, Vt.shape[0])
        comps = Vt[:k]
        # deterministic sign: largest-magnitude loading positive
        signs = np.sign(comps[np.arange(k), np.abs(comps).argmax(axis=1)])
        signs[signs == 0] = 1.0
        return cls(mean, comps * signs[:, None], shape)

    def transform(self, values: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(values.reshape(values.shape[0], -1) if values.ndim == 3 else values.ravel()[None])
        return (X - self.mean) @ self.components.T

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(coeffs) @ self.components + self.mean
        return X.reshape((-1,) + self.shape)


def pca_generate(corpus: Sequence[TimeSeries], n_components: int = LATENT_DIM, n_samples: int = 100,
                 seed=0, alpha_range=(0.25, 0.75), alpha: float | None = None) -> list[TimeSeries]:
    """Same interpolation scheme as :func:`interpolate_generate` in PCA space."""
    corpus = list(corpus)
    basis = PcaBasis.fit(corpus, n_components)
    coeffs = basis.transform(np.stack([s.values for s in corpus]))
    rng = np.random.default_rng(seed)
    pairs, alphas = _draw_pairs(rng, len(corpus), n_samples, alpha_range, alpha)
    out = []
    t = corpus[0].t
    for (a, b), al in zip(pairs, alphas):
        values = basis.inverse((1.0 - al) * coeffs[a] + al * coeffs[b])[0]
        offset = (1.0 - al) * corpus[a].offset + al * corpus[b].offset
        gain = (1.0 - al) * corpus[a].gain + al * corpus[b].gain
        out.append(TimeSeries(t, values, None, offset, gain, name=f"pca({al:.6g}, {a}, {b})", label="synthetic"))
    return out
