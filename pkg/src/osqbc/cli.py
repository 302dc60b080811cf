"""``osqbc <verb>`` command-line entry point."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import harness, nogo
from .harness import ConfigError, ExperimentConfig

VERB_SCENARIO = {
    "honest": "honest",
    "estimate-alpha": "estimate_alpha",
    "attack": "attack",
    "coin-toss": "coin_toss",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="write here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config field")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osqbc", description="Orthogonal-state QBC simulator")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERB_SCENARIO:
        p = sub.add_parser(verb)
        _common(p)
        p.add_argument("--code")
        p.add_argument("--alpha", type=float)
        p.add_argument("--s", type=int)
        if verb == "attack":
            p.add_argument("--attack", choices=harness.ATTACKS[1:])
            p.add_argument("--defense", choices=("on", "off"))

    p = sub.add_parser("nogo", help="(theta, trace distance, fidelity, cheat success) along an interpolating family")
    _common(p)
    p.add_argument("--points", type=int, default=11)

    p = sub.add_parser("qot")
    _common(p)
    p.add_argument("--mode", choices=("honest", "curious"), default="honest")
    p.add_argument("--n", type=int)

    p = sub.add_parser("sweep")
    _common(p)
    p.add_argument("--param", required=True, choices=harness.SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated")
    p.add_argument("--scenario")
    p.add_argument("--code")
    p.add_argument("--alpha", type=float)
    p.add_argument("--s", type=int)
    return parser


def _config(args, scenario: str | None) -> ExperimentConfig:
    cfg = harness.load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        over[key.strip()] = harness.coerce_value(key.strip(), raw)
    if scenario is not None:
        over["scenario"] = scenario
    for name in ("seed", "trials", "out", "format", "code", "alpha", "s", "attack", "defense"):
        val = getattr(args, name, None)
        if val is not None:
            over[name] = val
    return harness.config_from_mapping(over, cfg)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _nogo(args, cfg: ExperimentConfig) -> str:
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    thetas = np.linspace(0.0, math.pi / 2, args.points)
    rows = nogo.sweep_rows(thetas)
    if args.format == "json":
        keys = ("theta", "trace_distance", "fidelity", "cheat_success")
        return json.dumps([dict(zip(keys, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "trace_distance", "fidelity", "cheat_success"])
    w.writerows([[repr(float(x)) for x in r] for r in rows])
    return buf.getvalue()


def _qot(args, cfg: ExperimentConfig) -> str:
    cfg = dataclasses.replace(cfg, qot_mode=args.mode, qot_n=args.n or (8 if args.mode == "curious" else cfg.qot_n))
    report = harness.run_experiment(cfg, workers=args.workers)
    m = report.metrics["correct"]
    return json.dumps({"mean": m["mean"], "stderr": m["stderr"], "trials": m["count"]}, sort_keys=True) + "\n"


def _parse_values(param: str, text: str) -> list:
    items = [x.strip() for x in text.split(",") if x.strip()]
    cast = int if param in ("d", "n", "s", "trials") else float
    try:
        return [cast(x) for x in items]
    except ValueError as exc:
        raise ConfigError(f"bad --values for {param}: {exc}") from exc


def _sweep(args, cfg: ExperimentConfig) -> str:
    values = _parse_values(args.param, args.values)
    reports = harness.sweep(cfg, args.param, values, workers=args.workers)
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "value"] + harness.CSV_HEADER)
        for v, rep in zip(values, reports):
            for row in rep.csv_rows():
                w.writerow([args.param, v] + row)
        return buf.getvalue()
    body = [{"param": args.param, "value": v, "report": rep.to_dict()} for v, rep in zip(values, reports)]
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "nogo":
            cfg = _config(args, None)
            _emit(_nogo(args, cfg), cfg.out)
        elif args.verb == "qot":
            cfg = _config(args, "qot")
            _emit(_qot(args, cfg), cfg.out)
        elif args.verb == "sweep":
            cfg = _config(args, args.scenario)
            _emit(_sweep(args, cfg), cfg.out)
        else:
            cfg = _config(args, VERB_SCENARIO[args.verb])
            report = harness.run_experiment(cfg, workers=args.workers)
            _emit(report.serialize(cfg.format), cfg.out)
    except (ConfigError, ValueError) as exc:
        print(f"osqbc: error: {exc}", file=sys.stderr)
        return 2
    return 0
