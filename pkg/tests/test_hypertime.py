import numpy as np
import pytest

from hypertime.containers import ContainerError, load_hypertime, save_hypertime
from hypertime.data_io import synth_corpus
from hypertime.hyper import (
    Embedding,
    HyperTimeConfig,
    PcaBasis,
    decode,
    encode,
    encode_pairs,
    hypertime_loss,
    init_model,
    interpolate_generate,
    pca_generate,
    reconstruct,
    train_hypertime,
)
from hypertime.inr import MlpSpec, ParamVector, forward_np
from hypertime.series import TimeSeries, uniform_grid

from conftest import rel_err

SMALL = dict(encoder_hidden=(8, 8), latent_dim=4, hyper_hidden=6, hypo_hidden=(5, 5))


def small_model(seed=0, channels=1, **kw):
    return init_model(channels, HyperTimeConfig(seed=seed, **{**SMALL, **kw}))


def reference_mlp(flat, widths, omega0, x):
    h, pos = x, 0
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        W = flat[pos : pos + a * b].reshape(b, a)
        bias = flat[pos + a * b : pos + a * b + b]
        pos += a * b + b
        z = h @ W.T
        h = z + bias if i == len(widths) - 2 else np.sin(omega0 * z + bias)
    return h


@pytest.fixture(scope="module")
def corpus():
    return synth_corpus("multisine", 6, 32, 0).series


def test_default_hypernet_emits_7501(corpus):
    model = init_model(1)
    assert model.hyper.spec.n_out == 7501 == model.hypo_spec.n_params
    z = encode(model, synth_corpus("multisine", 2, 64, 0)[0])
    assert z.z.shape == (40,)
    assert decode(model, z).flat.shape == (7501,)


def test_hyponet_matches_reference_mlp():
    model = init_model(1)
    rng = np.random.default_rng(0)
    params = decode(model, rng.normal(size=40))
    t = np.linspace(-1, 1, 50)[:, None]
    ref = reference_mlp(params.flat, (1, 60, 60, 60, 1), 30.0, t)
    assert np.abs(forward_np(params.flat, params.spec, t) - ref).max() <= 1e-12


def test_untrained_hyponet_is_siren_init():
    model = small_model(hyper_out_scale=0.0)
    z = np.ones(4)
    bias = model.hyper.unflatten()[-1][1]
    assert np.array_equal(decode(model, z).flat, bias)


def test_zero_hypernet_gives_zero_hyponet():
    model = small_model()
    model.hyper.flat = np.zeros_like(model.hyper.flat)
    params = decode(model, np.ones(4))
    assert not params.flat.any()
    assert not forward_np(params.flat, params.spec, uniform_grid(9)[:, None]).any()


def test_encoder_permutation_and_duplication_invariant(corpus):
    model = small_model()
    s = corpus[0]
    pairs = np.concatenate([s.t[None], s.values]).T
    z = encode_pairs(model, pairs)
    perm = np.random.default_rng(1).permutation(len(s))
    assert np.array_equal(encode_pairs(model, pairs[perm]), z)
    assert np.array_equal(encode_pairs(model, np.concatenate([pairs, pairs[::-1]])), z)
    assert np.array_equal(encode(model, s).z, z)


def test_encode_matches_training_pooling(corpus):
    # the loss pools raw pairs in time order; encode must agree bit for bit
    from hypertime.autodiff import Tape
    from hypertime.inr import forward_var

    model = small_model()
    s = corpus[1]
    pairs = np.concatenate([s.t[None], s.values]).T
    tape = Tape()
    pooled = forward_var(tape.constant(model.encoder.flat), model.encoder.spec, tape.constant(pairs[None]))
    assert np.array_equal(pooled.mean(axis=1).value[0], encode(model, s).z)


def test_encode_rejects_bad_input():
    model = small_model()
    two = TimeSeries(uniform_grid(8), np.zeros((2, 8)))
    with pytest.raises(ValueError, match="channels"):
        encode(model, two)
    masked = TimeSeries(uniform_grid(8), np.zeros((1, 8)), np.arange(8) > 0)
    with pytest.raises(ValueError, match="fully observed"):
        encode(model, masked)
    with pytest.raises(ValueError, match="expected"):
        decode(model, np.zeros(5))
    with pytest.raises(ValueError):
        Embedding(np.array([np.nan]))


def test_model_shape_validation():
    model = small_model()
    with pytest.raises(ValueError, match="hyponet needs"):
        type(model)(model.encoder, model.hyper, MlpSpec((1, 7, 1)))


def test_loss_components_and_gradient_fd(corpus):
    model = small_model(seed=3, lambdas=(1e-2, 1e-2, 0.5), omega0=3.0, encoder_omega0=3.0)
    batch = corpus[:3]
    total, comps, grads = hypertime_loss(model, batch, with_grads=True)
    lam = model.lambdas
    assert total == pytest.approx(
        comps["rec"] + lam[0] * comps["weights"] + lam[1] * comps["latent"] + lam[2] * comps["fft"], rel=1e-12
    )
    rng = np.random.default_rng(0)
    h = 1e-6
    for name, pv in (("encoder", model.encoder), ("hyper", model.hyper)):
        base = pv.flat.copy()
        idx = rng.choice(base.size, size=12, replace=False)
        fd = []
        for i in idx:
            pv.flat = base.copy()
            pv.flat[i] += h
            up = hypertime_loss(model, batch)[0]
            pv.flat[i] -= 2 * h
            down = hypertime_loss(model, batch)[0]
            fd.append((up - down) / (2 * h))
        pv.flat = base
        assert rel_err(grads[name][idx], np.array(fd)) < 1e-4, name


def test_reconstruct_shape(corpus):
    model = small_model()
    assert reconstruct(model, corpus[0]).shape == (1, 32)


def test_alpha_zero_reproduces_endpoint(corpus):
    model = small_model()
    synth = interpolate_generate(model, corpus, 5, seed=2, alpha=0.0)
    for s in synth:
        a = int(s.name.split(", ")[1])
        assert np.array_equal(s.values, reconstruct(model, corpus[a]))
        assert np.array_equal(s.offset, corpus[a].offset)


def test_generation_deterministic(corpus):
    model = small_model()
    a = interpolate_generate(model, corpus, 4, seed=9)
    b = interpolate_generate(model, corpus, 4, seed=9)
    assert all(np.array_equal(x.values, y.values) and x.name == y.name for x, y in zip(a, b))
    with pytest.raises(ValueError, match="at least 2"):
        interpolate_generate(model, corpus[:1], 2)


def test_pca_full_rank_reconstruction(corpus):
    basis = PcaBasis.fit(corpus, n_components=len(corpus))
    X = np.stack([s.values for s in corpus])
    assert np.abs(basis.inverse(basis.transform(X)) - X).max() <= 1e-9
    synth = pca_generate(corpus, len(corpus), 4, seed=0, alpha=0.0)
    for s in synth:
        a = int(s.name.split(", ")[1])
        assert np.abs(s.values - corpus[a].values).max() <= 1e-9


def test_pca_sign_is_deterministic(corpus):
    basis = PcaBasis.fit(corpus, 3)
    big = basis.components[np.arange(3), np.abs(basis.components).argmax(axis=1)]
    assert (big > 0).all()
    assert np.allclose(basis.components @ basis.components.T, np.eye(3), atol=1e-12)


def test_hyt_container_roundtrip(tmp_path, corpus):
    model = train_hypertime(corpus, HyperTimeConfig(steps=2, batch_size=3, **SMALL))
    path = tmp_path / "m.hyt"
    save_hypertime(path, model)
    back = load_hypertime(path)
    assert np.array_equal(back.encoder.flat, model.encoder.flat)
    assert np.array_equal(back.hyper.flat, model.hyper.flat)
    assert back.hypo_spec == model.hypo_spec and back.lambdas == model.lambdas
    assert back.meta["lengths"] == [32] * 6
    path.write_bytes(b"INR1" + path.read_bytes()[4:])
    with pytest.raises(ContainerError, match="magic"):
        load_hypertime(path)


def test_training_deterministic_and_converges(corpus):
    cfg = HyperTimeConfig(steps=150, batch_size=6, lr=1e-3, seed=1, omega0=10.0, **SMALL)
    a = train_hypertime(corpus, cfg)
    b = train_hypertime(corpus, cfg)
    assert np.array_equal(a.hyper.flat, b.hyper.flat)
    rec = a.history["rec"]
    assert rec[-10:].mean() < 0.5 * rec[:10].mean()


def test_training_rejects_bad_corpus():
    with pytest.raises(ValueError, match="empty"):
        train_hypertime([], HyperTimeConfig(steps=1))
    s = TimeSeries(uniform_grid(8), np.zeros((1, 8)), np.arange(8) > 0)
    with pytest.raises(ValueError, match="missing"):
        train_hypertime([s, s], HyperTimeConfig(steps=1))


def test_mixed_lengths_batch_by_length():
    data = synth_corpus("multisine", 4, 16, 0).series + synth_corpus("multisine", 4, 24, 1).series
    model = train_hypertime(data, HyperTimeConfig(steps=4, batch_size=3, **SMALL))
    assert len(model.history["rec"]) == 4
    synth = interpolate_generate(model, data, 6, seed=0)
    assert {len(s) for s in synth} <= {16, 24}
