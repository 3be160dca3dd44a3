"""Command-line entry point: ``quadnc simulate | featurize | train | predict | sweep``.

Seeds: ``--seed`` wins, then the ``QUADNC_SEED`` environment variable, then a
seed from ``--config``, then 0.  Every output embeds the resolved run
configuration; pass that file back via ``--config`` to regenerate it.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path


from . import classify, nn, pipeline
from .errors import QuadncError
from .features import csv_header, featurize, featurize_subsample
from .sampler import read_batch, simulate, write_batch
from .states import Family, StateSpec

log = logging.getLogger("quadnc")

SWEEPS = ("families", "phase-squeezed", "spacs-grid", "cat", "sample-size", "ablation")
# options that name output files are not part of the embedded configuration
_NOT_EMBEDDED = {"out", "log", "save_corpus", "csv", "config", "verbose", "func", "jobs"}


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_config(path: str) -> dict:
    """Read a JSON config, or the configuration embedded in a previous output file."""
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError:
        for line in text.splitlines():
            if line.startswith("# config: "):
                d = json.loads(line[len("# config: "):])
                break
        else:
            raise QuadncError(f"{path}: no configuration found") from None
    if isinstance(d, dict) and d.get("format") == nn.MODEL_FORMAT:
        d = d.get("metadata", {}).get("run_config", {})
    return d.get("run_config", d) if isinstance(d, dict) else {}


def _resolve_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("QUADNC_SEED")
    if env:
        return int(env)
    return int(cfg.get("seed", 0))


def _run_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_EMBEDDED}


# --- commands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    spec = StateSpec(
        Family.parse(args.family), alpha=args.alpha, nbar=args.nbar, n=args.n, xi=args.xi, eta=args.eta, phi=args.phi
    )
    batch = simulate(spec, args.count, args.seed)
    write_batch(batch, args.out, comments=["config: " + json.dumps(_run_config(args), sort_keys=True)])
    log.info("wrote %d events to %s", len(batch), args.out)
    return 0


def cmd_featurize(args) -> int:
    batch = read_batch(args.events)
    fv = featurize(batch) if args.subsample is None else featurize_subsample(batch, args.subsample, args.seed)
    text = "# config: " + json.dumps(_run_config(args), sort_keys=True) + "\n" + csv_header() + "\n" + fv.to_csv_row() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _corpus_config(args) -> pipeline.CorpusConfig:
    cfg = pipeline.default_training_config(
        vectors_per_family=args.vectors_per_family,
        events_per_vector=args.events,
        eta=args.eta,
        seed=args.seed,
    )
    if args.ablate_spacs:
        cfg = pipeline.ablated_config(Family.SPACS, cfg)
    if args.phase_averaged:
        cfg = pipeline.swap_classical_variant(cfg, use_phase_averaged=True)
    return cfg


def cmd_train(args) -> int:
    if args.corpus:
        corpus = pipeline.read_corpus(args.corpus)
    else:
        cfg = _corpus_config(args)
        log.info("simulating %d families x %d vectors", len(cfg.families), cfg.vectors_per_family)
        corpus = pipeline.generate_corpus(cfg, jobs=args.jobs)
        if args.save_corpus:
            pipeline.write_corpus(corpus, args.save_corpus, extra={"run_config": _run_config(args)})
    tc = nn.TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
    )
    log_path = args.log or str(args.out) + ".log"
    with open(log_path, "w") as fh:
        fh.write("epoch,train_loss,val_loss,val_accuracy,best_val_loss\n")

        def on_epoch(row):
            fh.write("%d,%.17g,%.17g,%.17g,%.17g\n" % (
                row["epoch"], row["train_loss"], row["val_loss"], row["val_accuracy"], row["best_val_loss"]))
            log.debug("epoch %d val_loss %.6g", row["epoch"], row["val_loss"])

        model = nn.fit(corpus.dataset(), tc, log=on_epoch)
        fh.write("# best_epoch=%d best_val_loss=%.17g epochs_run=%d\n" % (
            model.metadata["best_epoch"], model.metadata["best_val_loss"], model.metadata["epochs_run"]))
    model.metadata["run_config"] = _run_config(args)
    model.metadata["corpus_families"] = sorted({spec.family.value for spec, _ in corpus.provenance})
    nn.save(model, args.out)
    log.info("best epoch %d, model written to %s", model.metadata["best_epoch"], args.out)
    return 0


def cmd_predict(args) -> int:
    model = nn.load(args.model)
    batch = read_batch(args.events)
    v = classify.predict(model, batch, args.threshold)
    print(
        "r=%.6f threshold=%g nonclassical=%s sample_variance=%.6f variance_nonclassical=%s events=%d"
        % (v.r, v.threshold, str(v.nonclassical).lower(), v.sample_variance, str(v.variance_nonclassical).lower(), v.events)
    )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("# config: " + json.dumps(_run_config(args), sort_keys=True) + "\n")
            fh.write("r,threshold,nonclassical,sample_variance,variance_nonclassical,events\n")
            fh.write("%.17g,%.17g,%d,%.17g,%d,%d\n" % (
                v.r, v.threshold, v.nonclassical, v.sample_variance, v.variance_nonclassical, v.events))
    return 0


def cmd_sweep(args) -> int:
    model = nn.load(args.model)
    common = dict(seed=args.seed, threshold=args.threshold)
    sim = dict(events=args.events, seeds=args.seeds, jobs=args.jobs, **common)
    name = args.sweep
    if name == "families":
        rep = classify.sweep_training_families(model, events=args.events, eta=args.eta, jobs=args.jobs, **common)
    elif name == "phase-squeezed":
        rep = classify.sweep_phase_squeezed(model, xi=args.xi, nbins=args.nbins, eta=args.eta, **sim)
    elif name == "spacs-grid":
        rep = classify.sweep_spacs_grid(model, alphas=args.alphas, phis=args.phi, eta=args.eta, **sim)
    elif name == "cat":
        phis = args.phi if args.phi else (math.pi / 2, math.pi / 4)
        rep = classify.sweep_cat(model, phis=phis, alphas=args.alphas, eta=args.eta, **sim)
    elif name == "ablation":
        rep = classify.sweep_ablation(model, alphas=args.alphas, eta=args.eta, **sim)
    else:
        nc = read_batch(args.nc_events) if args.nc_events else simulate(
            StateSpec(Family.SPACS, alpha=0.32, eta=args.eta), args.events, args.seed + 1)
        c = read_batch(args.c_events) if args.c_events else simulate(
            StateSpec(Family.COHERENT, alpha=0.32, eta=args.eta), args.events, args.seed + 2)
        sizes = args.sizes or [s for s in classify.DEFAULT_SIZES if s <= min(len(nc), len(c))]
        rep = classify.sweep_sample_size(model, nc, c, sizes=sizes, seeds=args.seeds, **common)
    rep.config["run_config"] = _run_config(args)
    rep.write_csv(args.out)
    log.info("wrote %d rows to %s", len(rep), args.out)
    return 0


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadnc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="JSON config or a previous output file with an embedded config")
        if seed:
            sp.add_argument("--seed", type=int, default=None)

    s = sub.add_parser("simulate", help="simulate homodyne events of one state")
    common(s)
    s.add_argument("--family", default=None, choices=[f.value for f in Family], metavar="FAMILY",
                   help="one of: " + ", ".join(f.value for f in Family))
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--nbar", type=float, default=0.0)
    s.add_argument("--n", type=int, default=0)
    s.add_argument("--xi", type=float, default=0.0)
    s.add_argument("--eta", type=float, default=0.6)
    s.add_argument("--phi", type=float, default=0.0)
    s.add_argument("--count", type=_positive_int, default=16000)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("featurize", help="histogram an event file into a 160-bin feature row")
    common(f)
    f.add_argument("--events", required=True)
    f.add_argument("--subsample", type=_positive_int, default=None)
    f.add_argument("--out")
    f.set_defaults(func=cmd_featurize)

    t = sub.add_parser("train", help="simulate a corpus (or read one) and train the classifier")
    common(t)
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--corpus", help="existing corpus file; skips simulation")
    t.add_argument("--save-corpus")
    t.add_argument("--log", help="training log path (default: <out>.log)")
    t.add_argument("--vectors-per-family", type=_positive_int, default=20000)
    t.add_argument("--events", type=_positive_int, default=16000)
    t.add_argument("--eta", type=float, default=0.6)
    t.add_argument("--ablate-spacs", action="store_true")
    t.add_argument("--phase-averaged", action="store_true")
    t.add_argument("--learning-rate", type=float, default=1e-3)
    t.add_argument("--batch-size", type=_positive_int, default=128)
    t.add_argument("--max-epochs", type=_positive_int, default=500)
    t.add_argument("--patience", type=_positive_int, default=10)
    t.add_argument("--jobs", type=_positive_int, default=1)
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("predict", help="classify one event file")
    common(r, seed=False)
    r.add_argument("--model", required=True)
    r.add_argument("--events", required=True)
    r.add_argument("--threshold", type=float, default=classify.DEFAULT_THRESHOLD)
    r.add_argument("--csv")
    r.set_defaults(func=cmd_predict, seed=None)

    w = sub.add_parser("sweep", help="run an evaluation sweep and write a CSV report")
    common(w)
    w.add_argument("sweep", choices=SWEEPS)
    w.add_argument("--model", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--threshold", type=float, default=classify.DEFAULT_THRESHOLD)
    w.add_argument("--events", type=_positive_int, default=classify.DEFAULT_EVENTS)
    w.add_argument("--eta", type=float, default=classify.DEFAULT_ETA)
    w.add_argument("--seeds", type=_positive_int, default=None, help="simulations per grid point")
    w.add_argument("--nbins", type=int, default=125)
    w.add_argument("--xi", type=float, default=0.5)
    w.add_argument("--alphas", type=_float_list, default=None)
    w.add_argument("--phi", type=float, action="append", default=None)
    w.add_argument("--sizes", type=_float_list, default=None)
    w.add_argument("--nc-events")
    w.add_argument("--c-events")
    w.add_argument("--jobs", type=_positive_int, default=1)
    w.set_defaults(func=cmd_sweep)
    return p


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = {}
    if getattr(args, "config", None):
        cfg = _load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        # the seed is resolved separately so QUADNC_SEED can override a config file
        sub.set_defaults(**{k: v for k, v in cfg.items() if k in known and k not in _NOT_EMBEDDED and k != "seed"})
        args = parser.parse_args(argv)
    if args.command == "simulate" and args.family is None:
        parser.error("the following arguments are required: --family (or --config)")
    if args.command != "predict":
        args.seed = _resolve_seed(args, cfg)
    if args.command == "sweep":
        if args.seeds is None:
            args.seeds = 10 if args.sweep == "sample-size" else classify.DEFAULT_SEEDS
        if args.sizes is not None:
            args.sizes = [int(s) for s in args.sizes]
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except QuadncError as exc:
        print(f"quadnc: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (QuadncError, OSError) as exc:
        print(f"quadnc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
