"""Command-line frontend: dataset generation, the two simulation studies,
curve-to-age leave-one-out prediction, and hyperparameter grid scans.

Every subcommand is deterministic under a fixed --seed: output files carry
``#``-prefixed metadata lines (seed, config, grid) followed by comma-delimited
rows, with no timestamps, so reruns are byte-identical. Failures exit nonzero
with a single ``error:<category>: message`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np
from scipy.linalg import LinAlgError

from .experiments import (
    ExperimentConfig,
    EvalReport,
    config_1d,
    config_2d,
    gen_dataset,
    run_table1,
    run_table2,
)
from .ridge import GridSpec, grid_search, paper_grid
from .teoae import (
    ParseError,
    error_histogram,
    loo_age,
    read_curves,
    select_lambda,
    synth_cohort,
    write_curves,
    AGE_SANITY_RANGE,
)

__all__ = ["main"]

EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_IO = 4
EXIT_NUMERIC = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep CLI failures on one machine-parseable line
        print(f"error:usage: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_table(path, metadata, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for key, value in metadata:
                fh.write(f"# {key}={value}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(cell) for cell in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"expected a comma-separated list of integers, got {text!r}") from None


def _grid_from_args(args) -> GridSpec:
    grid = paper_grid()
    overrides = {}
    for name, parser in (
        ("lambdas", _parse_floats),
        ("ls", _parse_floats),
        ("gammas", _parse_floats),
        ("zetas", _parse_floats),
        ("xis", _parse_floats),
        ("orders", _parse_ints),
        ("cs", _parse_ints),
    ):
        raw = getattr(args, name, None)
        if raw is not None:
            overrides[name] = parser(raw)
    if overrides:
        grid = replace(grid, **overrides)
    return grid


def _grid_metadata(grid: GridSpec) -> list[tuple[str, str]]:
    return [
        ("grid_spacing", "geometric"),
        ("lambdas", ",".join(_fmt(v) for v in grid.lambdas)),
        ("ls", ",".join(_fmt(v) for v in grid.ls)),
        ("gammas", ",".join(_fmt(v) for v in grid.gammas)),
        ("orders", ",".join(str(v) for v in grid.orders)),
        ("zetas", ",".join(_fmt(v) for v in grid.zetas)),
        ("xis", ",".join(_fmt(v) for v in grid.xis)),
        ("cs", ",".join(str(v) for v in grid.cs)),
        ("bins", str(grid.bins)),
    ]


def _params_string(record_params: dict, lam: float) -> str:
    parts = [f"{key}={_fmt(value)}" for key, value in record_params.items()]
    parts.append(f"lam={_fmt(lam)}")
    return ";".join(parts)


def _report_rows(report: EvalReport):
    return [
        [rec.model, _params_string(rec.params, rec.lam), rec.rmse]
        for rec in report.records
    ]


def _config_metadata(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    return [
        ("seed", str(cfg.seed)),
        ("n_train", str(cfg.n_train)),
        ("n_test", str(cfg.n_test)),
        ("noise_sigma", _fmt(cfg.noise_sigma)),
        ("dimension", str(cfg.dimension)),
        ("mean_range", f"{_fmt(cfg.mean_range[0])},{_fmt(cfg.mean_range[1])}"),
        ("sigma_range", f"{_fmt(cfg.sigma_range[0])},{_fmt(cfg.sigma_range[1])}"),
        ("cov_entry_range", f"{_fmt(cfg.cov_entry_range[0])},{_fmt(cfg.cov_entry_range[1])}"),
        ("cov_jitter", _fmt(cfg.cov_jitter)),
        ("sampling", "independent"),
    ]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_gen(args) -> None:
    if args.kind == "teoae":
        ds = synth_cohort(n=args.n_subjects, M=args.bins, seed=args.seed)
        write_curves(
            args.out,
            ds,
            metadata=[
                ("kind", "teoae"),
                ("seed", str(args.seed)),
                ("n_subjects", str(args.n_subjects)),
                ("bins", str(args.bins)),
            ],
        )
        return
    cfg = _experiment_config(args, dimension=1 if args.kind == "gauss1d" else 2)
    xs, y_noisy, _ = gen_dataset(cfg, n=cfg.n_train, seed=cfg.seed)
    metadata = [("kind", args.kind)] + _config_metadata(cfg)
    if cfg.dimension == 1:
        header = ["m", "sigma", "y"]
        rows = [[x.m, x.sigma, y] for x, y in zip(xs, y_noisy)]
    else:
        header = ["m1", "m2", "s11", "s12", "s22", "y"]
        rows = [
            [x.mean[0], x.mean[1], x.cov[0, 0], x.cov[0, 1], x.cov[1, 1], y]
            for x, y in zip(xs, y_noisy)
        ]
    _write_table(args.out, metadata, header, rows)


def _experiment_config(args, dimension: int) -> ExperimentConfig:
    make = config_1d if dimension == 1 else config_2d
    kwargs = dict(seed=args.seed, n_train=args.n_train, noise_sigma=args.noise_sigma)
    if getattr(args, "n_test", None) is not None:
        kwargs["n_test"] = args.n_test
    if getattr(args, "mean_range", None) is not None:
        kwargs["mean_range"] = tuple(args.mean_range)
    if getattr(args, "sigma_range", None) is not None:
        kwargs["sigma_range"] = tuple(args.sigma_range)
    return make(**kwargs)


def _cmd_table1(args) -> None:
    cfg = _experiment_config(args, dimension=1)
    grid = _grid_from_args(args)
    report = run_table1(cfg, grid, threads=args.threads)
    metadata = _config_metadata(cfg) + _grid_metadata(grid)
    for note in report.notes:
        metadata.append(("note", note))
    _write_table(args.out, metadata, ["model", "params", "rmse"], _report_rows(report))


def _cmd_table2(args) -> None:
    cfg = _experiment_config(args, dimension=2)
    grid = _grid_from_args(args)
    levels = _parse_floats(args.noise_levels)
    report = run_table2(cfg, grid, noise_levels=levels, threads=args.threads)
    metadata = _config_metadata(cfg) + _grid_metadata(grid)
    metadata.append(("noise_levels", ",".join(_fmt(v) for v in levels)))
    for note in report.notes:
        metadata.append(("note", note))
    _write_table(args.out, metadata, ["model", "params", "rmse"], _report_rows(report))


def _cmd_teoae(args) -> None:
    if args.input is not None:
        ds = read_curves(args.input)
        source = [("input", str(args.input))]
    else:
        ds = synth_cohort(n=args.n_subjects, M=args.bins, seed=args.seed)
        source = [
            ("input", "synthetic"),
            ("seed", str(args.seed)),
            ("n_subjects", str(args.n_subjects)),
            ("bins", str(args.bins)),
        ]
    if len(ds) < 2:
        raise ValueError("leave-one-out needs at least two records")
    if args.lam is not None:
        lam, selection = args.lam, "fixed"
    else:
        lam, _ = select_lambda(ds, paper_grid().lambdas, gamma=args.gamma, l=args.l)
        selection = "loo-grid"
    predictions = loo_age(ds, gamma=args.gamma, l=args.l, lam=lam)

    metadata = source + [
        ("gamma", _fmt(args.gamma)),
        ("l", _fmt(args.l)),
        ("lam", _fmt(lam)),
        ("lam_selection", selection),
        ("n", str(len(ds))),
        ("bins_per_curve", str(ds.M)),
    ]
    flagged = [p.name for p in predictions if not p.in_sanity_range]
    if flagged:
        lo, hi = AGE_SANITY_RANGE
        metadata.append(("flagged_outside_age_range", f"[{_fmt(lo)},{_fmt(hi)}]:" + "|".join(flagged)))
    rows = [
        [p.name, p.age, p.predicted, abs(p.predicted - p.age)] for p in predictions
    ]
    _write_table(args.out, metadata, ["name", "age", "predicted_age", "abs_error"], rows)

    edges, counts = error_histogram(predictions)
    hist_rows = [
        [edges[i], edges[i + 1], int(counts[i])] for i in range(len(counts))
    ]
    _write_table(
        args.errors_out,
        metadata,
        ["abs_error_lo", "abs_error_hi", "count"],
        hist_rows,
    )


_GRID_COLUMNS = {
    "wasserstein": ("gamma", "l", "H"),
    "legendre": ("order", "gamma", "l"),
    "histogram": ("zeta", "bins"),
    "sliced": ("xi", "c"),
}


def _cmd_grid(args) -> None:
    dimension = 2 if args.family == "sliced" else args.dimension
    if args.family in ("legendre", "histogram") and dimension != 1:
        raise ValueError(f"the {args.family} family applies to 1-D Gaussian inputs")
    cfg = _experiment_config(args, dimension=dimension)
    grid = _grid_from_args(args)
    train, y_train, _ = gen_dataset(cfg, n=cfg.n_train, seed=cfg.seed)
    valid, _, y_clean = gen_dataset(cfg, n=args.n_valid, seed=cfg.seed + 1)
    result = grid_search(grid, args.family, train, y_train, valid, y_clean, threads=args.threads)

    from .kernels import describe_spec

    best = describe_spec(result.spec)
    metadata = (
        [("family", args.family), ("n_valid", str(args.n_valid))]
        + _config_metadata(cfg)
        + _grid_metadata(grid)
        + [("best_" + key, _fmt(value)) for key, value in best.items()]
        + [("best_lam", _fmt(result.lam)), ("best_rmse", _fmt(result.rmse))]
    )
    columns = _GRID_COLUMNS[args.family]
    header = ["lam"] + list(columns) + ["rmse"]
    rows = []
    for cell in result.cells:
        desc = describe_spec(cell.spec)
        rows.append([cell.lam] + [desc[c] for c in columns] + [cell.rmse])
    _write_table(args.out, metadata, header, rows)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p, n_train_default=200):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--n-train", type=int, default=n_train_default, dest="n_train")
    p.add_argument("--noise-sigma", type=float, default=0.0, dest="noise_sigma")
    p.add_argument("--mean-range", type=float, nargs=2, default=None, dest="mean_range")
    p.add_argument("--sigma-range", type=float, nargs=2, default=None, dest="sigma_range")


def _add_grid_flags(p):
    for name in ("lambdas", "ls", "gammas", "zetas", "xis", "orders", "cs"):
        p.add_argument(f"--{name}", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate a dataset file")
    p.add_argument("--kind", choices=("gauss1d", "gauss2d", "teoae"), default="gauss1d")
    p.add_argument("--n-subjects", type=int, default=48, dest="n_subjects")
    p.add_argument("--bins", type=int, default=256)
    _add_common(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("table1", help="1-D model comparison report")
    _add_common(p)
    p.add_argument("--n-test", type=int, default=700, dest="n_test")
    _add_grid_flags(p)
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("table2", help="2-D noise sweep report")
    _add_common(p)
    p.add_argument("--n-test", type=int, default=500, dest="n_test")
    p.add_argument("--noise-levels", type=str, default="1,5,10", dest="noise_levels")
    _add_grid_flags(p)
    p.set_defaults(func=_cmd_table2)

    p = sub.add_parser("teoae", help="leave-one-out age prediction from curves")
    p.add_argument("--input", default=None, help="curve file; omit to use a synthetic cohort")
    p.add_argument("--n-subjects", type=int, default=48, dest="n_subjects")
    p.add_argument("--bins", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--l", type=float, default=10.0)
    p.add_argument("--lam", type=float, default=None, help="fixed ridge strength; default: LOO grid search")
    p.add_argument("--out", required=True)
    p.add_argument("--errors-out", required=True, dest="errors_out")
    p.set_defaults(func=_cmd_teoae)

    p = sub.add_parser("grid", help="exhaustive grid scan for one kernel family")
    p.add_argument("--family", choices=("wasserstein", "legendre", "histogram", "sliced"), required=True)
    p.add_argument("--dimension", type=int, choices=(1, 2), default=1)
    p.add_argument("--n-valid", type=int, default=200, dest="n_valid")
    _add_common(p)
    _add_grid_flags(p)
    p.set_defaults(func=_cmd_grid)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ParseError as exc:
        print(f"error:parse: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LinAlgError, np.linalg.LinAlgError) as exc:
        print(f"error:numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        print(f"error:config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
