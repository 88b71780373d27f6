"""``adact`` command-line interface: gen, train, xval, burden and plotdata."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import click
import numpy as np

from .activations import ActivationBank
from .burden import KINDS, BurdenInput, burden
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .data import Dataset, Standardizer, crossval, gen_rosenbrock, gen_sine, load_csv, standardize
from .network import MlpNetwork, forward, mse, pe
from .trainers import train

log = logging.getLogger("adact")

CONFIG_COPY = "config.json"
TRAIN_CSV = "train.csv"
TEST_CSV = "test.csv"
CHECKPOINT = "checkpoint.json"
HISTORY_CSV = "history.csv"
REPORT_CSV = "report.csv"
XVAL_CSV = "xval_report.csv"
PLOT_CSV = "plot_data.csv"
SHAPES_CSV = "activation_shapes.csv"


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, doc):
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(v):
    return repr(float(v))


def build_datasets(cfg: ExperimentConfig):
    """Return ``(train, test)``; ``test`` is ``None`` for a csv source without ``test_path``."""
    d = cfg.data
    p = d.params
    if d.source == "gen_sine":
        return gen_sine(p.n_train, p.n_test, p.seed)
    if d.source == "gen_rosenbrock":
        return (
            gen_rosenbrock(p.n_train, p.seed, p.low, p.high),
            # a separate stream so train and test never share draws
            gen_rosenbrock(p.n_test, p.seed + 1_000_000, p.low, p.high),
        )
    tr = load_csv(p.path, p.n_inputs, p.n_outputs, p.kind)
    te = None if p.test_path is None else load_csv(p.test_path, p.n_inputs, p.n_outputs, p.kind)
    if te is not None and tr.kind == "classification":
        te = _align_classes(te, tr)
    return tr, te


def _datasets(cfg):
    try:
        return build_datasets(cfg)
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot load data: {exc}") from None


def _align_classes(te: Dataset, tr: Dataset):
    labels = te.classes[np.argmax(te.T, axis=1)]
    unknown = np.setdiff1d(labels, tr.classes)
    if unknown.size:
        raise click.ClickException(f"test file has labels {unknown.tolist()} absent from the training file")
    T = np.eye(tr.classes.size)[np.searchsorted(tr.classes, labels)]
    return Dataset(te.X, T, te.kind, te.names, tr.classes)


def _apply_overrides(cfg: ExperimentConfig, overrides):
    """Patch ``{(section, field): value}`` into the config and revalidate it."""
    doc = cfg.model_dump()
    for (section, key), value in overrides.items():
        if value is not None:
            doc[section][key] = value
    return parse_config(doc)


def _prepare(config_path, seed, out, trainer=None, n_iter=None, k_folds=None):
    overrides = {
        ("eval", "k_folds"): k_folds,
        ("train", "seed"): seed,
        ("train", "trainer"): trainer,
        ("train", "N_it"): n_iter,
        ("output", "directory"): out,
    }
    try:
        cfg = _apply_overrides(load_config(config_path), overrides)
    except ConfigError as exc:
        raise click.ClickException(f"invalid config {config_path}:\n{exc}") from None
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / CONFIG_COPY, cfg.model_dump(mode="json"))
    return cfg, outdir


def _checkpoint_doc(net: MlpNetwork, stats: Standardizer):
    doc = net.to_dict()
    doc["input_mean"] = stats.mean.tolist()
    doc["input_scale"] = stats.scale.tolist()
    return doc


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    net = MlpNetwork.from_dict(doc)
    stats = Standardizer(np.asarray(doc["input_mean"], float), np.asarray(doc["input_scale"], float))
    return net, stats


def _report_rows(net, stats, datasets):
    rows = []
    for name, ds in datasets:
        if ds is None:
            continue
        Y = forward(net, stats.transform(ds.X)).Y
        p = _num(pe(Y, ds.T)) if ds.kind == "classification" else ""
        rows.append([name, len(ds), _num(mse(Y, ds.T)), p])
    return rows


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose):
    """Train MLPs with adaptive piecewise-linear activations."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _common(fn):
    fn = click.option("--out", type=click.Path(file_okay=False), help="Override output.directory.")(fn)
    fn = click.option("--seed", type=int, help="Override train.seed.")(fn)
    fn = click.argument("config", type=click.Path(exists=True, dir_okay=False))(fn)
    return fn


@main.command()
@_common
def gen(config, seed, out):
    """Write the configured train/test datasets as CSV."""
    cfg, outdir = _prepare(config, seed, out)
    tr, te = _datasets(cfg)
    tr.to_csv(outdir / TRAIN_CSV)
    if te is not None:
        te.to_csv(outdir / TEST_CSV)
    click.echo(f"wrote {len(tr)} training patterns to {outdir / TRAIN_CSV}")


@main.command("train")
@_common
@click.option("--trainer", type=click.Choice(["adact", "molf", "cg", "scg"]), help="Override train.trainer.")
@click.option("--n-it", "n_iter", type=int, help="Override train.N_it.")
def train_cmd(config, seed, out, trainer, n_iter):
    """Train one network; write checkpoint, history and a report."""
    cfg, outdir = _prepare(config, seed, out, trainer=trainer, n_iter=n_iter)
    tr_raw, te_raw = _datasets(cfg)
    tr, te, stats = standardize(tr_raw, te_raw)
    tc = cfg.train_config()
    try:
        run = train(tc, tr.X, tr.T, None if te is None else te.X, None if te is None else te.T, tr_raw.kind)
    except (ValueError, FloatingPointError) as exc:
        raise click.ClickException(f"training failed: {exc}") from None
    tr_raw.to_csv(outdir / TRAIN_CSV)
    if te_raw is not None:
        te_raw.to_csv(outdir / TEST_CSV)
    _write_json(outdir / CHECKPOINT, _checkpoint_doc(run.network, stats))
    _write_text(outdir / HISTORY_CSV, run.history_csv())
    rows = _report_rows(run.network, stats, [("train", tr_raw), ("test", te_raw)])
    _write_rows(outdir / REPORT_CSV, ["split", "patterns", "mse", "pe"], rows)
    for split, n, m, p in rows:
        click.echo(f"{split:>5} mse {float(m):.6g}" + (f"  pe {float(p):.3f}%" if p else ""))


@main.command()
@_common
@click.option("--k", "k_folds", type=int, help="Override eval.k_folds.")
def xval(config, seed, out, k_folds):
    """k-fold cross-validation on the configured training data."""
    cfg, outdir = _prepare(config, seed, out, k_folds=k_folds)
    k = cfg.eval.k_folds
    tr, _ = _datasets(cfg)
    try:
        report = crossval(cfg.train_config(), tr, k=k, seed=cfg.train.seed)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _write_text(outdir / XVAL_CSV, report.to_csv())
    click.echo(report.table())


@main.command("burden")
@click.option("--n", "N", type=int, required=True, help="Inputs.")
@click.option("--nh", "N_h", type=int, required=True, help="Hidden units.")
@click.option("--m", "M", type=int, required=True, help="Outputs.")
@click.option("--nv", "N_v", type=int, required=True, help="Training patterns.")
@click.option("--hinges", "N_hinges", type=int, default=0, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write the table as CSV.")
def burden_cmd(N, N_h, M, N_v, N_hinges, csv_path):
    """Multiplies per iteration for every algorithm."""
    try:
        d = BurdenInput(N, N_h, M, N_v, N_hinges)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    counts = [(k, burden(k, d)) for k in KINDS]
    click.echo(f"N={N} N_h={N_h} M={M} N_v={N_v} N_hinges={N_hinges} (N_u={d.N_u}, N_w={d.N_w})")
    click.echo(f"{'algorithm':<10}{'multiplies':>16}")
    for k, v in counts:
        click.echo(f"{k:<10}{v:>16d}")
    if csv_path:
        _write_rows(csv_path, ["algorithm", "multiplies"], counts)


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--data", "data_csv", type=click.Path(exists=True, dir_okay=False),
              help="Pattern file to predict (default: the run's test.csv).")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory (default: RUN_DIR).")
def plotdata(run_dir, data_csv, out):
    """Prediction-vs-target rows and per-unit activation shapes for a trained run."""
    run_dir = Path(run_dir)
    outdir = Path(out) if out else run_dir
    ckpt = run_dir / CHECKPOINT
    if not ckpt.exists():
        raise click.ClickException(f"{ckpt} not found; run 'adact train' first")
    net, stats = load_checkpoint(ckpt)
    data_csv = Path(data_csv) if data_csv else run_dir / TEST_CSV
    if not data_csv.exists():
        raise click.ClickException(f"{data_csv} not found; pass --data")
    try:
        ds = load_csv(data_csv, net.N, net.M)
    except ValueError as exc:
        raise click.ClickException(f"{data_csv}: {exc}") from None
    Y = forward(net, stats.transform(ds.X)).Y
    outdir.mkdir(parents=True, exist_ok=True)
    one = net.N == 1 and net.M == 1
    header = (["x"] if net.N == 1 else [f"x{j + 1}" for j in range(net.N)]) + (
        ["target", "prediction"] if one else
        [f"target{i + 1}" for i in range(net.M)] + [f"prediction{i + 1}" for i in range(net.M)]
    )
    _write_rows(outdir / PLOT_CSV, header,
                ([_num(v) for v in np.concatenate([x, t, y])] for x, t, y in zip(ds.X, ds.T, Y)))
    if isinstance(net.bank, ActivationBank):
        rows = ([k + 1, _num(n), _num(a)] for k in range(net.N_h) for n, a in zip(net.bank.ns[k], net.bank.A[k]))
        _write_rows(outdir / SHAPES_CSV, ["unit", "ns", "a"], rows)
    click.echo(f"wrote {len(ds)} rows to {outdir / PLOT_CSV}")


if __name__ == "__main__":  # pragma: no cover
    main()
