"""Command-line front end.

Four modes: ``search`` (full architecture search, then train the winner),
``train`` (train one explicitly given architecture), ``timecmp`` (wall-clock
score-vs-short-training table) and ``tradeoff`` (repeat the search across
sample counts). Every option lives in a flat key=value config file and has a
same-named flag; flags win. All emitted files are a pure function of
(config, seed); wall-clock fields are only filled under --emit-timings, which
is documented to break byte-level reproducibility.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import bo, data, surrogate, trainer
from .bo import BoConfig, BoResult, Strategy
from .encoding import Architecture, Scheme, SearchSpace, decode, sample_lhs, sample_uniform
from .exceptions import BadStrategyCode, RnnSearchError
from .mrs import OutputActivation
from .seeding import sub_rng
from .trainer import TrainConfig

_SCHEMES = {"F": Scheme.FLAG, "S": Scheme.SIZE, "P": Scheme.PLAIN}

DEFAULTS = {
    "problem": "sine",
    "csv": None,
    "targets": None,
    "activation": None,
    "encoding": None,
    "strategy": "C--S",
    "max_evals": 100,
    "init": 10,
    "q": 100,
    "threshold": 0.01,
    "warm": None,
    "warm_mode": "random",
    "epochs": 200,
    "seed": 42,
    "out": "out",
    "max_layers": 3,
    "neuron_min": 1,
    "neuron_max": 100,
    "lookback_min": 2,
    "lookback_max": 30,
    "batch_size": 32,
    "dropout": 0.5,
    "learning_rate": 1e-3,
    "proposal_budget": 2000,
    "test_fraction": 0.2,
    "test_rows": None,
    "normalize": False,
    "emit_timings": False,
    "n_archs": 20,
    "q_list": "30,50,100,200",
    "reps": 3,
    "epochs_short": 10,
    "penalty_scale": 0.5,
    "infeasible_objective": 0.0,
    "trees": 100,
    "min_samples_leaf": 2,
    "layers": None,
    "lookback": None,
}

_BOOL_KEYS = {"normalize", "emit_timings"}
_INT_KEYS = {
    "max_evals", "init", "q", "epochs", "seed", "max_layers", "neuron_min", "neuron_max",
    "lookback_min", "lookback_max", "batch_size", "proposal_budget", "test_rows", "n_archs",
    "reps", "epochs_short", "trees", "min_samples_leaf", "warm", "lookback",
}
_FLOAT_KEYS = {
    "threshold", "dropout", "learning_rate", "test_fraction", "penalty_scale", "infeasible_objective",
}


def parse_strategy(code: str) -> Strategy:
    """Decode a 4-character strategy code like C--S or -WIF."""
    expected = (("C",), ("W",), ("I",))
    if len(code) != 4:
        raise BadStrategyCode(f"strategy code must be 4 characters, got {code!r}", position=min(len(code), 4))
    flags = []
    for pos, allowed in enumerate(expected):
        ch = code[pos]
        if ch == "-":
            flags.append(False)
        elif ch in allowed:
            flags.append(True)
        else:
            raise BadStrategyCode(
                f"position {pos} of {code!r} must be {allowed[0]!r} or '-', got {ch!r}", position=pos
            )
    if code[3] not in _SCHEMES:
        raise BadStrategyCode(f"position 3 of {code!r} must be one of F, S, P", position=3)
    scheme = _SCHEMES[code[3]]
    if flags[2] and scheme is Scheme.SIZE:
        raise BadStrategyCode(
            f"{code!r}: infeasible penalization cannot be combined with the size scheme", position=2
        )
    return Strategy(
        constraint_handling=flags[0], warm_start=flags[1], infeasible_penalization=flags[2], scheme=scheme
    )


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None


def _coerce(key: str, raw):
    if raw is None or (isinstance(raw, str) and raw == ""):
        return None
    if key in _BOOL_KEYS:
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return raw


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise RnnSearchError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip().replace("-", "_")
        if key not in DEFAULTS:
            raise RnnSearchError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value.strip())
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        if hasattr(args, key):
            value = getattr(args, key)
            if value is not None and value is not False:
                merged[key] = _coerce(key, value)
    return RunConfig(values=merged)


def build_space(cfg: RunConfig, scheme: Scheme) -> SearchSpace:
    return SearchSpace(
        scheme=scheme,
        max_layers=cfg.max_layers,
        neuron_lo=cfg.neuron_min,
        neuron_hi=cfg.neuron_max,
        lookback_max=cfg.lookback_max,
        lookback_min=cfg.lookback_min,
    )


def build_problem(cfg: RunConfig):
    """Returns (train_set, test_set, activation). Windows use the space's max look-back."""
    if cfg.problem == "sine":
        series = data.gen_sine()
        act = OutputActivation(cfg.activation) if cfg.activation else OutputActivation.TANH
    elif cfg.problem == "csv":
        if not cfg.csv:
            raise RnnSearchError("--csv PATH is required for the csv problem")
        series = data.load_csv(cfg.csv)
        if cfg.targets:
            cols = []
            for tok in str(cfg.targets).split(","):
                tok = tok.strip()
                if tok.isdigit():
                    cols.append(int(tok))
                elif tok in series.feature_names:
                    cols.append(series.feature_names.index(tok))
                else:
                    raise RnnSearchError(f"unknown target column {tok!r}")
            series = data.TimeSeries(series.values, series.feature_names, tuple(cols))
        act = OutputActivation(cfg.activation) if cfg.activation else OutputActivation.LINEAR
    else:
        raise RnnSearchError(f"unknown problem {cfg.problem!r}")

    if cfg.test_rows is not None:
        cut = series.length - cfg.test_rows
    else:
        cut = series.length - int(series.length * cfg.test_fraction)
    if cfg.normalize:
        series, _ = data.normalize_zscore(series, stats_rows=cut)
    train_series, test_series = data.split(
        series, test_rows=series.length - cut if cfg.test_rows is None else cfg.test_rows
    )
    lookback = cfg.lookback_max
    train_set = data.make_windows(train_series, lookback)
    test_set = data.make_windows(test_series, lookback)
    return train_set, test_set, act


def resolve_strategy(cfg: RunConfig) -> Strategy:
    strat = parse_strategy(cfg.strategy)
    if cfg.encoding:
        enc = str(cfg.encoding).upper()
        if enc not in _SCHEMES:
            raise RnnSearchError(f"--encoding must be one of F, S, P, got {cfg.encoding!r}")
        if cfg.strategy != DEFAULTS["strategy"] and _SCHEMES[enc] is not strat.scheme:
            raise RnnSearchError(
                f"--encoding {enc} conflicts with --strategy {cfg.strategy}"
            )
        strat = Strategy(
            constraint_handling=strat.constraint_handling,
            warm_start=strat.warm_start,
            infeasible_penalization=strat.infeasible_penalization,
            scheme=_SCHEMES[enc],
        )
    return strat


def bo_config(cfg: RunConfig) -> BoConfig:
    return BoConfig(
        max_evals=cfg.max_evals,
        n_init=cfg.init,
        p_m=cfg.threshold,
        q=cfg.q,
        penalty_scale=cfg.penalty_scale,
        warm_count=cfg.warm,
        warm_mode=cfg.warm_mode,
        proposal_budget=cfg.proposal_budget,
        seed=cfg.seed,
        infeasible_objective=cfg.infeasible_objective,
        forest=surrogate.ForestConfig(n_trees=cfg.trees, min_samples_leaf=cfg.min_samples_leaf),
    )


def train_config(cfg: RunConfig, epochs: Optional[int] = None) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs if epochs is None else epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        dropout=cfg.dropout,
        seed=int(sub_rng(cfg.seed, "train").integers(2**31)),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_trace_csv(path, result: BoResult, emit_timings: bool):
    cols = [
        "iter", "genotype", "feasible", "duplicate", "mrs_mu", "mrs_sigma", "mrs_prob",
        "objective_used", "best_so_far", "wall_ms",
    ]
    lines = [",".join(cols)]
    for row in result.trace:
        lines.append(
            ",".join(
                [
                    str(row.index),
                    ";".join(str(v) for v in row.genotype.values),
                    _fmt(row.feasible),
                    _fmt(row.duplicate),
                    _fmt(row.mu),
                    _fmt(row.sigma),
                    _fmt(row.prob),
                    _fmt(row.objective),
                    _fmt(row.best_so_far),
                    _fmt(row.wall_ms) if emit_timings else "",
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _config_echo(cfg: RunConfig) -> dict:
    # the output directory names where files land, not what they contain
    return {k: v for k, v in sorted(cfg.values.items()) if k != "out"}


def write_result_json(path, payload: dict):
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )


def cmd_search(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_set, test_set, act = build_problem(cfg)
    strat = resolve_strategy(cfg)
    space = build_space(cfg, strat.scheme)
    t0 = time.perf_counter()
    result = bo.run(train_set, space, strat, bo_config(cfg), act)
    t_search = time.perf_counter() - t0
    t0 = time.perf_counter()
    report = trainer.train(result.best_architecture, train_set, test_set, act, train_config(cfg))
    t_train = time.perf_counter() - t0

    write_trace_csv(out_dir / "trace.csv", result, cfg.emit_timings)
    np.save(out_dir / "model.npy", report.weights.flatten())
    payload = {
        "strategy": strat.code,
        "seed": cfg.seed,
        "best_genotype": list(result.best_genotype.values),
        "best_architecture": {
            "layer_sizes": list(result.best_architecture.layer_sizes),
            "lookback": result.best_architecture.lookback,
        },
        "best_mrs": result.best_value,
        "test_mae": report.test_mae,
        "test_mape": report.test_mape,
        "mrs_calls": result.mrs_calls,
        "infeasible_proposals": result.infeasible_proposals,
        "duplicate_proposals": result.duplicate_proposals,
        "n_evaluations": len(result.trace),
        "n_iterations": result.n_iterations,
        "wall_clock_ms": {
            "search": t_search * 1e3 if cfg.emit_timings else None,
            "training": t_train * 1e3 if cfg.emit_timings else None,
            "total": (t_search + t_train) * 1e3 if cfg.emit_timings else None,
        },
        "config": _config_echo(cfg),
    }
    write_result_json(out_dir / "result.json", payload)
    print(
        f"search [{strat.code}] best_mrs={result.best_value:.6g} "
        f"arch={list(result.best_architecture.layer_sizes)} lookback={result.best_architecture.lookback} "
        f"test_mae={report.test_mae:.6g}"
    )
    return 0


def cmd_train(cfg: RunConfig) -> int:
    if not cfg.layers or cfg.lookback is None:
        raise RnnSearchError("train mode needs --layers (semicolon-joined sizes) and --lookback")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    arch = Architecture(tuple(int(v) for v in str(cfg.layers).split(";")), cfg.lookback)
    train_set, test_set, act = build_problem(cfg)
    if arch.lookback > train_set.lookback:
        raise RnnSearchError(f"lookback {arch.lookback} exceeds the window length {train_set.lookback}")
    t0 = time.perf_counter()
    report = trainer.train(arch, train_set, test_set, act, train_config(cfg))
    t_train = time.perf_counter() - t0
    np.save(out_dir / "model.npy", report.weights.flatten())
    payload = {
        "architecture": {"layer_sizes": list(arch.layer_sizes), "lookback": arch.lookback},
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "final_training_loss": report.loss_curve[-1] if report.loss_curve else None,
        "test_mae": report.test_mae,
        "test_mape": report.test_mape,
        "wall_clock_ms": {"training": t_train * 1e3 if cfg.emit_timings else None},
        "config": _config_echo(cfg),
    }
    write_result_json(out_dir / "result.json", payload)
    print(f"train arch={list(arch.layer_sizes)} lookback={arch.lookback} test_mae={report.test_mae:.6g}")
    return 0


def _lhs_architectures(cfg: RunConfig, space: SearchSpace, n: int):
    rng = sub_rng(cfg.seed, "timecmp-lhs")
    archs = []
    for g in sample_lhs(space, n, rng):
        try:
            archs.append(decode(g, space))
        except RnnSearchError:
            pass
    while len(archs) < n:
        try:
            archs.append(decode(sample_uniform(space, rng), space))
        except RnnSearchError:
            continue
    return archs[:n]


def cmd_timecmp(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_set, test_set, act = build_problem(cfg)
    strat = resolve_strategy(cfg)
    space = build_space(cfg, strat.scheme)
    archs = _lhs_architectures(cfg, space, cfg.n_archs)
    table = trainer.time_comparison(
        archs, train_set, test_set, act, q=cfg.q, epochs_short=cfg.epochs_short, seed=cfg.seed
    )
    lines = ["row,layers,lookback,mrs_seconds,adam_seconds"]
    for i, row in enumerate(table.rows):
        lines.append(
            f"{i},{';'.join(str(v) for v in row.arch.layer_sizes)},{row.arch.lookback},"
            f"{_fmt(row.mrs_seconds)},{_fmt(row.adam_seconds)}"
        )
    for stat in ("mean", "median", "max", "min", "sd"):
        lines.append(f"{stat},,,{_fmt(table.summary['mrs'][stat])},{_fmt(table.summary['adam'][stat])}")
    (out_dir / "timing.csv").write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(
        f"timecmp n={len(table.rows)} q={cfg.q} epochs={cfg.epochs_short} "
        f"median_mrs={table.summary['mrs']['median']:.3f}s median_adam={table.summary['adam']['median']:.3f}s"
    )
    return 0


def cmd_tradeoff(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    q_values = [int(tok) for tok in str(cfg.q_list).split(",") if tok.strip()]
    lines = ["q,rep,seed,best_mrs,test_mae"]
    for q in q_values:
        for rep in range(cfg.reps):
            run_seed = int(sub_rng(cfg.seed, "tradeoff", q, rep).integers(2**31))
            sub_values = dict(cfg.values)
            sub_values.update(q=q, seed=run_seed, out=str(out_dir / f"tradeoff_q{q}_rep{rep}"))
            sub_cfg = RunConfig(values=sub_values)
            code = cmd_search(sub_cfg)
            if code != 0:
                return code
            payload = json.loads((Path(sub_cfg.out) / "result.json").read_text(encoding="utf-8"))
            lines.append(
                f"{q},{rep},{run_seed},{_fmt(payload['best_mrs'])},{_fmt(payload['test_mae'])}"
            )
    (out_dir / "tradeoff.csv").write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"tradeoff wrote {len(lines) - 1} rows for q in {q_values}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnnsearch",
        description="Architecture search for recurrent forecasters with a training-free score.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--problem", choices=["sine", "csv"])
    common.add_argument("--csv", help="path to a numeric CSV time series")
    common.add_argument("--targets", help="comma-separated target columns (indices or header names)")
    common.add_argument("--activation", choices=["tanh", "sigmoid", "linear"])
    common.add_argument("--encoding", choices=["F", "S", "P"])
    common.add_argument("--strategy", help="4-character code, e.g. C--S or -WIF")
    common.add_argument("--max-evals", dest="max_evals", type=int)
    common.add_argument("--init", type=int)
    common.add_argument("--q", type=int)
    common.add_argument("--threshold", type=float)
    common.add_argument("--warm", type=int, help="warm-start genotype count (default: auto)")
    common.add_argument("--warm-mode", dest="warm_mode", choices=["random", "boundary"])
    common.add_argument("--epochs", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--max-layers", dest="max_layers", type=int)
    common.add_argument("--neuron-min", dest="neuron_min", type=int)
    common.add_argument("--neuron-max", dest="neuron_max", type=int)
    common.add_argument("--lookback-min", dest="lookback_min", type=int)
    common.add_argument("--lookback-max", dest="lookback_max", type=int)
    common.add_argument("--batch-size", dest="batch_size", type=int)
    common.add_argument("--dropout", type=float)
    common.add_argument("--learning-rate", dest="learning_rate", type=float)
    common.add_argument("--proposal-budget", dest="proposal_budget", type=int)
    common.add_argument("--test-fraction", dest="test_fraction", type=float)
    common.add_argument("--test-rows", dest="test_rows", type=int)
    common.add_argument("--normalize", action="store_true", default=None)
    common.add_argument("--emit-timings", dest="emit_timings", action="store_true", default=None)
    common.add_argument("--trees", type=int)
    common.add_argument("--min-samples-leaf", dest="min_samples_leaf", type=int)

    sub.add_parser("search", parents=[common], help="run the architecture search, then train the winner")

    p_train = sub.add_parser("train", parents=[common], help="train one explicit architecture")
    p_train.add_argument("--layers", help="semicolon-joined layer sizes, e.g. 10;5")
    p_train.add_argument("--lookback", type=int)

    p_time = sub.add_parser("timecmp", parents=[common], help="time the score against short training")
    p_time.add_argument("--n-archs", dest="n_archs", type=int)
    p_time.add_argument("--epochs-short", dest="epochs_short", type=int)

    p_trade = sub.add_parser("tradeoff", parents=[common], help="repeat the search across sample counts")
    p_trade.add_argument("--q-list", dest="q_list", help="comma-separated sample counts")
    p_trade.add_argument("--reps", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "search":
            return cmd_search(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "timecmp":
            return cmd_timecmp(cfg)
        if args.command == "tradeoff":
            return cmd_tradeoff(cfg)
        raise RnnSearchError(f"unknown command {args.command!r}")
    except RnnSearchError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
