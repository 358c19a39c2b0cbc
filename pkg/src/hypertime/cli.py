"""Command-line interface: ``hypertime <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
Relative output paths are resolved against ``--out-dir``, which defaults to
``$HYPERTIME_OUT`` or the working directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .autodiff import NumericalError
from .config import ConfigError, RunConfig
from .containers import ContainerError, load_hypertime, load_inr, save_hypertime, save_inr
from .data_io import DataFormatError, Dataset, load_series_file, save_csv_multivariate, save_ucr_tsv, synth_corpus
from .evaluation import evaluate_generation, export_projection
from .hyper import interpolate_generate, pca_generate, train_hypertime
from .imputation import impute, mask_series
from .inr import MlpSpec, compare_activations, evaluate, fit, reconstruction_mse
from .series import TimeSeries, uniform_grid

log = logging.getLogger("hypertime")

OUT_ENV = "HYPERTIME_OUT"


def _out(args, name) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = Path(args.out_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _save_series(dataset, path) -> None:
    if Path(path).suffix.lower() == ".csv" or dataset[0].n_channels > 1:
        save_csv_multivariate(dataset, path)
    else:
        save_ucr_tsv(dataset, path)


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    for key in ("seed", "epochs", "lr", "omega0", "activation", "max_series", "channels", "steps",
                "batch_size", "n_samples", "tv_weight", "preset", "n_series", "length"):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    if getattr(args, "fractions", None):
        overrides["fractions"] = [float(x) for x in args.fractions.split(",")]
    if getattr(args, "methods", None):
        overrides["methods"] = args.methods.split(",")
    if getattr(args, "lambdas", None):
        overrides["lambdas"] = [float(x) for x in args.lambdas.split(",")]
    return cfg.override(**overrides)


def _load(args, cfg: RunConfig) -> Dataset:
    return load_series_file(args.data, cfg.channels, max_series=cfg.max_series)


def cmd_fit(args, cfg):
    ds = _load(args, cfg)
    s = ds[args.index]
    spec = MlpSpec((1, *cfg.hidden, s.n_channels), cfg.activation, cfg.omega0)
    params, hist = fit(s, spec, cfg.fit_options())
    save_inr(_out(args, args.model), params, s.offset, s.gain, {"source": s.name})
    report = {"config": cfg.to_dict(), "series": s.name, "mse": reconstruction_mse(params, s),
              "final_loss": float(hist[-1]), "n_params": spec.n_params}
    _write_json(_out(args, args.report), report)


def cmd_reconstruct(args, cfg):
    params, offset, gain, meta = load_inr(args.model)
    t = uniform_grid(args.grid_length)
    values = evaluate(params, t)
    s = TimeSeries(t, values, None, offset, gain, name=meta.get("source", "reconstruction"), label="0")
    _save_series(Dataset([s], "reconstruction"), _out(args, args.output))


def cmd_compare(args, cfg):
    ds = _load(args, cfg)
    table = compare_activations(ds.series, cfg.epochs, cfg.lr, cfg.seed, cfg.omega0,
                                cfg.activations, cfg.max_series, args.workers)
    report = {
        "config": cfg.to_dict(),
        "dataset": ds.name,
        "n_series": len(ds),
        "results": {a: {"mean_mse": r["mean_mse"], "mse": r["mse"].tolist()} for a, r in table.items()},
    }
    _write_json(_out(args, args.report), report)
    if args.curves:
        with open(_out(args, args.curves), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            acts = list(table)
            w.writerow(["epoch"] + acts)
            means = [table[a]["curves"].mean(axis=0) for a in acts]
            for e in range(len(means[0])):
                w.writerow([e] + [repr(float(m[e])) for m in means])


def cmd_impute(args, cfg):
    ds = _load(args, cfg)
    reports = []
    rows = []
    for i, s in enumerate(ds):
        for fraction in cfg.fractions:
            masked = mask_series(s, fraction, [cfg.seed, i, int(round(fraction * 1000))])
            for method in cfg.methods:
                imputed, rep = impute(masked, method, cfg.fit_options(), cfg.tv_weight)
                d = rep.to_dict()
                d["series"] = i
                reports.append(d)
                raw = imputed.raw()
                for j in range(len(imputed)):
                    rows.append([i, repr(fraction), method, repr(float(imputed.t[j]))]
                                + [repr(float(v)) for v in raw[:, j]] + [int(imputed.mask[j])])
    _write_json(_out(args, args.report), {"config": cfg.to_dict(), "dataset": ds.name, "reports": reports})
    with open(_out(args, args.output), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "fraction", "method", "t"] + [f"c{c}" for c in range(ds[0].n_channels)] + ["observed"])
        w.writerows(rows)


def cmd_train(args, cfg):
    ds = _load(args, cfg)
    model = train_hypertime(ds.series, cfg.hypertime())
    model.meta["dataset"] = ds.name
    save_hypertime(_out(args, args.model), model)
    hist = {k: v.tolist() for k, v in model.history.items()}
    final = {k: (v[-1] if v else None) for k, v in hist.items()}
    _write_json(_out(args, args.report), {"config": cfg.to_dict(), "final": final, "history": hist})


def cmd_generate(args, cfg):
    model = load_hypertime(args.model)
    ds = _load(args, cfg)
    lo, hi = cfg.alpha_range
    synth = interpolate_generate(model, ds.series, cfg.n_samples, seed=cfg.seed, alpha_range=(lo, hi))
    _save_series(Dataset(synth, "hypertime"), _out(args, args.output))


def cmd_pca(args, cfg):
    ds = _load(args, cfg)
    lo, hi = cfg.alpha_range
    synth = pca_generate(ds.series, cfg.n_components, cfg.n_samples, seed=cfg.seed, alpha_range=(lo, hi))
    _save_series(Dataset(synth, "pca"), _out(args, args.output))


def cmd_evaluate(args, cfg):
    real = load_series_file(args.real, cfg.channels, max_series=cfg.max_series)
    synth = load_series_file(args.synth, cfg.channels)
    rep = evaluate_generation(real.series, synth.series, cfg.predictor(), tuple(cfg.band), {"run": cfg.to_dict()})
    payload = {"config": cfg.to_dict(), "real": real.name, "synth": synth.name, "report": rep.to_dict()}
    if args.projection:
        export_projection(real.series, synth.series, _out(args, args.projection))
        payload["projection"] = str(args.projection)
    _write_json(_out(args, args.report), payload)


def cmd_synth(args, cfg):
    ds = synth_corpus(cfg.preset, cfg.n_series, cfg.length, cfg.seed)
    _save_series(ds, _out(args, args.output))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypertime", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", default=os.environ.get(OUT_ENV, "."))
        if data:
            dataset(sp)
        return sp

    def dataset(sp):
        sp.add_argument("data", help="dataset file (.tsv UCR layout or .csv)")
        sp.add_argument("--channels", type=int)
        sp.add_argument("--max-series", dest="max_series", type=int)

    def fitting(sp):
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--lr", type=float)
        sp.add_argument("--omega0", type=float)
        return sp

    sp = fitting(common(sub.add_parser("fit", help="fit one INR to one series")))
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--activation")
    sp.add_argument("--model", default="model.inr")
    sp.add_argument("--report", default="fit.json")
    sp.set_defaults(func=cmd_fit)

    sp = common(sub.add_parser("reconstruct", help="evaluate a saved INR on a uniform grid"), data=False)
    sp.add_argument("model")
    sp.add_argument("--length", dest="grid_length", type=int, required=True)
    sp.add_argument("--output", default="reconstruction.tsv")
    sp.set_defaults(func=cmd_reconstruct)

    sp = fitting(common(sub.add_parser("compare-activations", help="sine vs relu/tanh/sigmoid INRs")))
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--report", default="activations.json")
    sp.add_argument("--curves", help="CSV of mean loss per epoch and activation")
    sp.set_defaults(func=cmd_compare)

    sp = fitting(common(sub.add_parser("impute", help="mask, impute and score")))
    sp.add_argument("--fractions", help="comma-separated missing fractions")
    sp.add_argument("--methods", help="comma-separated methods")
    sp.add_argument("--tv-weight", dest="tv_weight", type=float)
    sp.add_argument("--report", default="imputation.json")
    sp.add_argument("--output", default="imputed.csv")
    sp.set_defaults(func=cmd_impute)

    sp = common(sub.add_parser("train-hypertime", help="train the set encoder + hypernetwork"))
    sp.add_argument("--steps", type=int)
    sp.add_argument("--batch-size", dest="batch_size", type=int)
    sp.add_argument("--lambdas", help="comma-separated lambda_weights,lambda_latent,lambda_fft")
    sp.add_argument("--omega0", type=float)
    sp.add_argument("--model", default="model.hyt")
    sp.add_argument("--report", default="train.json")
    sp.set_defaults(func=cmd_train)

    sp = common(sub.add_parser("generate", help="latent interpolation with a trained model"), data=False)
    sp.add_argument("model")
    dataset(sp)
    sp.add_argument("--n-samples", dest="n_samples", type=int)
    sp.add_argument("--output", default="synthetic.tsv")
    sp.set_defaults(func=cmd_generate)

    sp = common(sub.add_parser("baseline-pca", help="PCA interpolation baseline"))
    sp.add_argument("--n-samples", dest="n_samples", type=int)
    sp.add_argument("--output", default="pca.tsv")
    sp.set_defaults(func=cmd_pca)

    sp = common(sub.add_parser("evaluate", help="predictive MAE and precision/recall/F1"), data=False)
    sp.add_argument("real")
    sp.add_argument("synth")
    sp.add_argument("--channels", type=int)
    sp.add_argument("--max-series", dest="max_series", type=int)
    sp.add_argument("--projection", help="write 2-D PCA projection CSV")
    sp.add_argument("--report", default="evaluation.json")
    sp.set_defaults(func=cmd_evaluate)

    sp = common(sub.add_parser("synth-data", help="write a synthetic corpus"), data=False)
    sp.add_argument("preset")
    sp.add_argument("--n", dest="n_series", type=int)
    sp.add_argument("--length", type=int)
    sp.add_argument("--output", default="synthetic_corpus.tsv")
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        args.func(args, cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DataFormatError, ContainerError, ValueError, FileNotFoundError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
