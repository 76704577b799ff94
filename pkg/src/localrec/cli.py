"""Command-line pipeline: prepare, train, evaluate, recommend, ablate, sweep.

Configuration is a plain INI file; every key has a default, unknown keys are
rejected, and ``--set section.key=value`` overrides file values. All
randomness flows from the single run seed. Each command writes a manifest
(config echo, seeds, input checksums) sufficient to re-run bit-identically.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .data import Schema, leave_k_out_split, load_interactions, load_split, preprocess, save_split
from .ensemble import (
    EnsembleConfig,
    ensemble_coverage,
    load_ensemble,
    predict_user,
    recommend_top_n,
    save_ensemble,
    train_ensemble,
)
from .errors import ConfigError, LocalRecError
from .evaluation import breakdown_by_activity, evaluate_model, save_report
from .models import TrainConfig
from .neighborhood import KernelConfig

_CHOICES = {
    ("model", "base_model"): ("ease", "dae"),
    ("model", "anchor_strategy"): ("coverage", "random", "farthest", "kmeans"),
    ("model", "embedding_method"): ("auto", "truncated-svd", "dae-hidden"),
}


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _threshold(text: str):
    return "all" if text.strip() == "all" else float(text)


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(part) for part in text.split(","))


def _opt_str(text: str):
    return text or None


# section -> key -> (parser, default). Defaults are the documented values.
_SCHEMA = {
    "data": {
        "path": (_opt_str, None),
        "delimiter": (str, ","),
        "has_header": (_bool, False),
        "columns": (str, "user,item,rating,timestamp"),
    },
    "preprocess": {
        "min_user_interactions": (int, 10),
        "positive_threshold": (_threshold, "all"),
    },
    "split": {
        "k": (int, 5),
    },
    "kernel": {
        "h_t": (float, 1.2),
        "h_w": (float, 0.5),
        "scale": (_bool, False),
    },
    "model": {
        "q": (int, 8),
        "alpha": (float, 0.5),
        "base_model": (str, "ease"),
        "anchor_strategy": (str, "coverage"),
        "embedding_method": (str, "auto"),
        "embedding_dim": (int, 16),
        "lambda": (float, 30.0),
    },
    "dae": {
        "d": (int, 64),
        "learning_rate": (float, 0.01),
        "batch_size": (int, 512),
        "max_epochs": (int, 200),
        "patience": (int, 50),
        "l2": (float, 0.01),
        "dropout": (float, 0.5),
        "init_std": (float, 0.01),
    },
    "eval": {
        "n_values": (_int_list, "50,100"),
        "breakdown_edges": (_int_list, ""),
    },
    "run": {
        "out": (str, "run"),
        "jobs": (int, 1),
        "seed": (int, 0),
    },
}


@dataclass
class RunConfig:
    """Fully resolved configuration: every schema key has a value."""

    values: dict[tuple[str, str], object]

    def get(self, section: str, key: str):
        return self.values[(section, key)]

    def set(self, section: str, key: str, raw: str) -> None:
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown configuration key {section}.{key}")
        parse, _ = _SCHEMA[section][key]
        try:
            value = parse(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc
        self.values[(section, key)] = value

    def validate(self) -> None:
        h_t = self.get("kernel", "h_t")
        h_w = self.get("kernel", "h_w")
        if not 0 < h_w <= h_t:
            raise ConfigError(
                f"kernel.h_w={h_w} must satisfy 0 < kernel.h_w <= kernel.h_t={h_t}"
            )
        for (section, key), allowed in _CHOICES.items():
            value = self.get(section, key)
            if value not in allowed:
                raise ConfigError(f"{section}.{key}={value!r} must be one of {allowed}")

    # ---- typed views -------------------------------------------------

    def schema(self) -> Schema:
        columns = tuple(c.strip() for c in self.get("data", "columns").split(","))
        return Schema(
            columns=columns,
            delimiter=self.get("data", "delimiter"),
            has_header=self.get("data", "has_header"),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.get("dae", "learning_rate"),
            batch_size=self.get("dae", "batch_size"),
            max_epochs=self.get("dae", "max_epochs"),
            patience=self.get("dae", "patience"),
            l2=self.get("dae", "l2"),
            dropout=self.get("dae", "dropout"),
            init_std=self.get("dae", "init_std"),
            seed=self.get("run", "seed"),
        )

    def ensemble_config(self, **overrides) -> EnsembleConfig:
        fields = dict(
            q=self.get("model", "q"),
            kernel=KernelConfig(h_t=self.get("kernel", "h_t"), h_w=self.get("kernel", "h_w")),
            alpha=self.get("model", "alpha"),
            base_model=self.get("model", "base_model"),
            anchor_strategy=self.get("model", "anchor_strategy"),
            embedding_method=self.get("model", "embedding_method"),
            embedding_dim=self.get("model", "embedding_dim"),
            jobs=self.get("run", "jobs"),
            seed=self.get("run", "seed"),
            lam=self.get("model", "lambda"),
            dae=self.train_config(),
            dae_dim=self.get("dae", "d"),
            scale_distances=self.get("kernel", "scale"),
        )
        fields.update(overrides)
        return EnsembleConfig(**fields)

    def as_nested_dict(self) -> dict:
        out: dict[str, dict] = {}
        for (section, key), value in sorted(self.values.items()):
            if isinstance(value, tuple):
                value = list(value)
            out.setdefault(section, {})[key] = value
        return out


def parse_config(path: str | Path | None, overrides: list[str] | None = None) -> RunConfig:
    """Resolve defaults, then the INI file, then ``section.key=value`` overrides."""
    values: dict[tuple[str, str], object] = {}
    for section, keys in _SCHEMA.items():
        for key, (parse, default) in keys.items():
            values[(section, key)] = parse(default) if isinstance(default, str) else default
    config = RunConfig(values)

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown configuration section [{section}]")
            for key, raw in parser.items(section):
                config.set(section, key, raw)

    for override in overrides or []:
        if "=" not in override:
            raise ConfigError(f"override {override!r} is not of the form section.key=value")
        dotted, raw = override.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} is not of the form section.key")
        section, key = dotted.split(".", 1)
        config.set(section.strip().lower(), key.strip().lower(), raw)

    config.validate()
    return config


# ------------------------------------------------------------------ artifacts

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out: Path, command: str, config: RunConfig, inputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "config": config.as_nested_dict(),
        "inputs": {str(p): _sha256(p) for p in inputs if p.is_file()},
        "seed": config.get("run", "seed"),
    }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"manifest_{command}.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _echo_config(out: Path, config: RunConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    nested = config.as_nested_dict()
    for section in sorted(nested):
        lines.append(f"[{section}]")
        for key in sorted(nested[section]):
            value = nested[section][key]
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {'' if value is None else value}")
        lines.append("")
    (out / "config_resolved.ini").write_text("\n".join(lines))


def _require_artifacts(*paths: Path) -> None:
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise ConfigError(f"expected artifacts were not written: {missing}")


def _split_inputs(out: Path) -> list[Path]:
    split_dir = out / "split"
    return [split_dir / "train.csv", split_dir / "heldout.csv", split_dir / "indexmap.csv"]


def _load_split_artifacts(out: Path):
    split_dir = out / "split"
    if not split_dir.is_dir():
        raise ConfigError(f"no split found at {split_dir}; run `prepare` first")
    return load_split(split_dir)


# ------------------------------------------------------------------ commands

def _cmd_prepare(config: RunConfig, out: Path, args) -> int:
    data_path = config.get("data", "path")
    if not data_path:
        raise ConfigError("data.path is required for `prepare`")
    log = load_interactions(data_path, config.schema())
    matrix = preprocess(
        log,
        min_user_interactions=config.get("preprocess", "min_user_interactions"),
        positive_threshold=config.get("preprocess", "positive_threshold"),
    )
    split = leave_k_out_split(log, matrix, k=config.get("split", "k"))
    save_split(split, out / "split")
    _echo_config(out, config)
    _write_manifest(out, "prepare", config, [Path(data_path)])
    _require_artifacts(*_split_inputs(out))
    print(
        f"prepared split: {matrix.m} users x {matrix.n} items, "
        f"{matrix.interaction_count} train interactions, k={split.k}"
    )
    return 0


def _cmd_train(config: RunConfig, out: Path, args) -> int:
    split = _load_split_artifacts(out)
    model = train_ensemble(split, config.ensemble_config())
    save_ensemble(model, out / "model")
    _echo_config(out, config)
    _write_manifest(out, "train", config, _split_inputs(out))
    _require_artifacts(out / "model" / "manifest.json", out / "model" / "global.model")
    print(
        f"trained {config.get('model', 'base_model')} ensemble: q={len(model.locals)}, "
        f"coverage={ensemble_coverage(model):.3f}, anchors={model.anchor_set.anchors}"
    )
    return 0


def _cmd_evaluate(config: RunConfig, out: Path, args) -> int:
    split = _load_split_artifacts(out)
    model_dir = out / "model"
    if not model_dir.is_dir():
        raise ConfigError(f"no model found at {model_dir}; run `train` first")
    model = load_ensemble(model_dir)
    n_values = config.get("eval", "n_values")
    report = evaluate_model(model, split, n_values=n_values)
    save_report(report, out / "eval")

    edges = config.get("eval", "breakdown_edges")
    if edges:
        buckets = breakdown_by_activity(report, split.train, edges)
        with open(out / "eval" / "breakdown.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            metrics = [f"{m}@{n}" for m in ("recall", "ndcg") for n in n_values]
            writer.writerow(["lo", "hi", "count", *metrics])
            for b in buckets:
                writer.writerow([b["lo"], b["hi"], b["count"], *(f"{b[m]:.10g}" for m in metrics)])

    _write_manifest(out, "evaluate", config, [*_split_inputs(out), model_dir / "manifest.json"])
    _require_artifacts(out / "eval" / "report.csv", out / "eval" / "summary.txt")
    for metric in ("recall", "ndcg"):
        for n in n_values:
            print(f"mean {metric}@{n}: {report.means[metric][n]:.4f}")
    print(f"coverage: {report.coverage:.3f}")
    return 0


def _cmd_recommend(config: RunConfig, out: Path, args) -> int:
    split = _load_split_artifacts(out)
    model_dir = out / "model"
    if not model_dir.is_dir():
        raise ConfigError(f"no model found at {model_dir}; run `train` first")
    model = load_ensemble(model_dir)
    train = split.train

    tokens = [t for t in (args.users or "").split(",") if t]
    if not tokens:
        raise ConfigError("--users is required for `recommend` (comma-separated user tokens)")
    rows = []
    for token in tokens:
        if token not in train.user_index:
            raise ConfigError(f"unknown user token {token!r}")
        u = train.user_index[token]
        r_u = train.row_vector(u)
        scores = predict_user(model, u, r_u)
        for rank, item in enumerate(recommend_top_n(model, u, r_u, n=args.n), start=1):
            rows.append([token, rank, train.item_tokens[int(item)], f"{scores[int(item)]:.10g}"])

    with open(out / "recommendations.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "rank", "item", "score"])
        writer.writerows(rows)
    _write_manifest(out, "recommend", config, [*_split_inputs(out), model_dir / "manifest.json"])
    _require_artifacts(out / "recommendations.csv")
    for row in rows:
        print(",".join(str(c) for c in row))
    return 0


def _cmd_ablate(config: RunConfig, out: Path, args) -> int:
    split = _load_split_artifacts(out)
    strategies = [s for s in args.strategies.split(",") if s]
    q = args.q if args.q is not None else config.get("model", "q")
    n_values = config.get("eval", "n_values")
    n_top = max(n_values)

    rows = []
    for strategy in strategies:
        model = train_ensemble(split, config.ensemble_config(anchor_strategy=strategy, q=q))
        report = evaluate_model(model, split, n_values=(n_top,))
        rows.append([strategy, q, f"{report.coverage:.10g}", f"{report.means['ndcg'][n_top]:.10g}"])

    with open(out / "ablation.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "q", "coverage", f"ndcg@{n_top}"])
        writer.writerows(rows)
    _write_manifest(out, "ablate-anchors", config, _split_inputs(out))
    _require_artifacts(out / "ablation.csv")
    print(f"strategy,q,coverage,ndcg@{n_top}")
    for row in rows:
        print(",".join(str(c) for c in row))
    return 0


_SWEEP_PARAMS = {
    "q": ("model", "q", int),
    "h_t": ("kernel", "h_t", float),
    "h_w": ("kernel", "h_w", float),
}


def _cmd_sweep(config: RunConfig, out: Path, args) -> int:
    if args.param not in _SWEEP_PARAMS:
        raise ConfigError(f"--param must be one of {tuple(_SWEEP_PARAMS)}, got {args.param!r}")
    section, key, cast = _SWEEP_PARAMS[args.param]
    try:
        points = [cast(v) for v in args.values.split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"bad --values for {args.param}: {args.values!r} ({exc})") from exc
    if not points:
        raise ConfigError("--values must list at least one point")

    split = _load_split_artifacts(out)
    n_values = config.get("eval", "n_values")

    rows = []
    for value in points:
        point = RunConfig(dict(config.values))
        point.values[(section, key)] = value
        point.validate()
        model = train_ensemble(split, point.ensemble_config())
        report = evaluate_model(model, split, n_values=n_values)
        row = [args.param, value, f"{report.coverage:.10g}"]
        for metric in ("recall", "ndcg"):
            for n in n_values:
                row.append(f"{report.means[metric][n]:.10g}")
        rows.append(row)

    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["param", "value", "coverage"]
        header += [f"{m}@{n}" for m in ("recall", "ndcg") for n in n_values]
        writer.writerow(header)
        writer.writerows(rows)
    _write_manifest(out, "sweep", config, _split_inputs(out))
    _require_artifacts(out / "sweep.csv")
    print(f"swept {args.param} over {len(points)} points -> {out / 'sweep.csv'}")
    return 0


_COMMANDS = {
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "recommend": _cmd_recommend,
    "ablate-anchors": _cmd_ablate,
    "sweep": _cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument(
        "--set",
        action="append",
        metavar="SECTION.KEY=VALUE",
        help="override a configuration value (repeatable)",
    )
    common.add_argument("--out", help="output directory (default: run.out)")
    common.add_argument("--jobs", type=int, help="parallel local trainings (default: run.jobs)")
    common.add_argument("--seed", type=int, help="run seed (default: run.seed)")

    parser = argparse.ArgumentParser(prog="localrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("prepare", parents=[common], help="ingest, filter, and split raw interactions")
    sub.add_parser("train", parents=[common], help="train the local-model ensemble")
    sub.add_parser("evaluate", parents=[common], help="score the trained model on the held-out split")
    rec = sub.add_parser("recommend", parents=[common], help="emit top-N lists for selected users")
    rec.add_argument("--users", help="comma-separated user tokens")
    rec.add_argument("--n", type=int, default=10, help="list length (default 10)")
    abl = sub.add_parser("ablate-anchors", parents=[common], help="compare anchor strategies")
    abl.add_argument("--strategies", default="coverage,random,farthest,kmeans")
    abl.add_argument("--q", type=int, default=None, help="anchor count (default: model.q)")
    swp = sub.add_parser("sweep", parents=[common], help="metric curves over q, h_t, or h_w")
    swp.add_argument("--param", required=True, help="one of: q, h_t, h_w")
    swp.add_argument("--values", required=True, help="comma-separated points")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, args.set or [])
        if args.jobs is not None:
            config.values[("run", "jobs")] = args.jobs
        if args.seed is not None:
            config.values[("run", "seed")] = args.seed
        if args.out is not None:
            config.values[("run", "out")] = args.out
        config.validate()
        out = Path(config.get("run", "out"))
        return _COMMANDS[args.command](config, out, args)
    except LocalRecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
