"""Seeded Monte Carlo experiments, parameter sweeps and report emission."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__, adversary, qot
from ._rng import check_seed, stream
from .codes import LinearCode, code_from_spec, hamming_distance, parse_generator
from .protocol import (
    HonestAlice,
    HonestBob,
    ProtocolParams,
    commit_verdict,
    honest_announcement,
    run_coin_toss,
    run_commit,
    run_unveil,
)

SCENARIOS = ("honest", "estimate_alpha", "attack", "coin_toss", "qot")
ATTACKS = ("none", "alice_flip", "alice_superpose", "bob_intercept", "counterfactual")
SWEEP_PARAMS = ("alpha", "d", "n", "s", "eps", "trials")
Z95 = 1.959963984540054


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "honest"
    code: str = "hamming7"
    generator: str | None = None  # rows of a custom generator; overrides ``code``
    s: int | None = None  # default 50 n
    alpha: float = 0.2
    alpha_attack: float = 1.0
    eps_dephase: float = 0.0
    eps_loss: float = 0.0
    alpha_abort: bool = True
    alpha_margin: float = 0.0
    attack: str = "none"
    defense: str = "off"
    target_b: int | None = None  # flip target; default is the opposite of the committed bit
    trials: int = 1
    seed: int = 0
    qot_mode: str = "honest"
    qot_n: int = 40
    r_fraction: float = 0.25
    out: str | None = None
    format: str = "json"

    def __post_init__(self) -> None:
        # attack names double as scenario shorthands
        if self.scenario in ATTACKS[1:]:
            if self.attack not in ("none", self.scenario):
                raise ConfigError(f"scenario {self.scenario} conflicts with attack={self.attack}")
            object.__setattr__(self, "attack", self.scenario)
            object.__setattr__(self, "scenario", "attack")

    def echo(self) -> dict[str, Any]:
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in ("out", "format")}


def build_code(cfg: ExperimentConfig) -> LinearCode:
    if cfg.generator:
        return parse_generator(cfg.generator)
    return code_from_spec(cfg.code)


def build_params(cfg: ExperimentConfig, code: LinearCode) -> ProtocolParams:
    return ProtocolParams.for_code(
        code,
        s=cfg.s,
        alpha=cfg.alpha,
        eps_dephase=cfg.eps_dephase,
        eps_loss=cfg.eps_loss,
        alpha_abort=cfg.alpha_abort,
        alpha_margin=cfg.alpha_margin,
    )


def validate(cfg: ExperimentConfig) -> None:
    """Raise ConfigError on anything that would fail mid-run."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    if cfg.attack not in ATTACKS:
        raise ConfigError(f"unknown attack {cfg.attack!r}")
    if (cfg.scenario == "attack") != (cfg.attack != "none"):
        raise ConfigError(f"scenario {cfg.scenario!r} cannot run with attack={cfg.attack!r}")
    if cfg.defense not in ("on", "off"):
        raise ConfigError("defense must be 'on' or 'off'")
    if cfg.format not in ("json", "csv"):
        raise ConfigError("format must be 'json' or 'csv'")
    if isinstance(cfg.trials, bool) or not isinstance(cfg.trials, int) or cfg.trials < 1:
        raise ConfigError("trials must be a positive integer")
    if cfg.target_b not in (None, 0, 1):
        raise ConfigError("target_b must be 0 or 1")
    try:
        check_seed(cfg.seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.scenario == "qot":
        if cfg.qot_mode not in ("honest", "curious"):
            raise ConfigError("qot_mode must be 'honest' or 'curious'")
        if cfg.qot_n < 8:
            raise ConfigError("qot_n must be at least 8")
        if cfg.qot_mode == "curious" and cfg.qot_n > qot.MAX_REGISTER_N:
            raise ConfigError(f"curious qot is limited to qot_n <= {qot.MAX_REGISTER_N}")
        if not 0.0 < cfg.r_fraction < 1.0:
            raise ConfigError("r_fraction must lie in (0, 1)")
        return
    try:
        code = build_code(cfg)
        build_params(cfg, code)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.attack == "bob_intercept" and not 0.0 <= cfg.alpha_attack <= 1.0:
        raise ConfigError("alpha_attack must lie in [0, 1]")


# --- per-trial bodies ---------------------------------------------------------------


@dataclass
class TrialResult:
    metrics: dict[str, float] = field(default_factory=dict)
    verdict: str | None = None


def _defense(cfg: ExperimentConfig) -> adversary.DefenseConfig:
    return adversary.DEFENSE_ON if cfg.defense == "on" else adversary.DEFENSE_OFF


def _commit_metrics(tr) -> dict[str, float]:
    return {
        "n_prime": float(tr.n_prime),
        "alpha_estimate": float(tr.alpha_estimate),
        "learned_bits": float(len(tr.bob_view())),
        "abort_rate": float(tr.aborted is not None),
    }


def _trial_honest(cfg, code, params, rng) -> TrialResult:
    b = int(rng.integers(2))
    tr = run_commit(params, code, HonestAlice(b), HonestBob(defense=_defense(cfg)), rng)
    out = TrialResult(_commit_metrics(tr))
    verdict = commit_verdict(tr)
    if verdict is None:
        verdict = run_unveil(tr, honest_announcement(tr, rng), code, tr.r, params.eps_dephase)
    out.metrics["accept_rate"] = float(verdict.accepted)
    out.verdict = verdict.label()
    return out


def _trial_estimate(cfg, code, params, rng) -> TrialResult:
    tr = run_commit(params, code, HonestAlice(int(rng.integers(2))), HonestBob(defense=_defense(cfg)), rng)
    m = _commit_metrics(tr)
    m["abs_error"] = abs(tr.alpha_estimate - params.alpha)
    return TrialResult(m, "abort" if tr.aborted else "commit")


def _target(cfg: ExperimentConfig, b: int) -> int:
    return 1 - b if cfg.target_b is None else cfg.target_b


def _trial_attack(cfg, code, params, rng) -> TrialResult:
    defense = _defense(cfg)
    if cfg.attack == "bob_intercept":
        tr = run_commit(params, code, HonestAlice(int(rng.integers(2))), adversary.bob_over_intercept(cfg.alpha_attack), rng)
        out = TrialResult(_commit_metrics(tr))
        out.verdict = tr.aborted or "commit"
        return out

    b = int(rng.integers(2))
    if cfg.attack == "alice_superpose":
        alice = adversary.SuperposedAlice(adversary.uniform_superposition(code))
    elif cfg.attack == "counterfactual":
        alice = adversary.CounterfactualAlice(b)
    else:
        alice = HonestAlice(b)
    tr = run_commit(params, code, alice, HonestBob(defense=defense), rng)
    out = TrialResult(_commit_metrics(tr))
    verdict = commit_verdict(tr)
    if verdict is not None:
        out.verdict = verdict.label()
        return out

    if cfg.attack == "alice_superpose":
        ann = honest_announcement(tr, rng)
        out.metrics["unveiled_b"] = float(ann.b)
    elif cfg.attack == "alice_flip":
        c, b = tr.committed
        ann = adversary.alice_flip_attack(tr, code, tr.r, _target(cfg, b))
        out.metrics["flip_distance"] = float(hamming_distance(c, ann.c))
        out.metrics["analytic_escape"] = adversary.flip_escape_probability(c, ann.c, params.alpha)
    else:
        c, b = tr.committed
        ann = adversary.counterfactual_announcement(tr, code, tr.r, _target(cfg, b))
        for i, t in enumerate(tr.send_times):
            res = tr.probe_outcomes[i]
            bypass = not tr.bob_modes[t - 1]
            guess_bypass = res == "Dc"
            out.metrics.setdefault("_acc", []).append(float(guess_bypass == bypass))
            if bypass:
                out.metrics.setdefault("_dc_bypass", []).append(float(res == "Dc"))
            else:
                out.metrics.setdefault("_dc_intercept", []).append(float(res == "Dc"))
        out.metrics["flip_distance"] = float(hamming_distance(c, ann.c))

    verdict = run_unveil(tr, ann, code, tr.r, params.eps_dephase)
    out.verdict = verdict.label()
    out.metrics["accept_rate" if cfg.attack == "alice_superpose" else "escape_rate"] = float(verdict.accepted)
    return out


def _trial_coin(cfg, code, params, rng) -> TrialResult:
    tr_bob = HonestBob(defense=_defense(cfg))
    y, verdict = run_coin_toss(params, code, rng, bob=tr_bob)
    m = {"accept_rate": float(verdict.accepted)}
    if y is not None:
        m["coin"] = float(y)
    return TrialResult(m, verdict.label())


def _trial_qot(cfg, code, params, rng) -> TrialResult:
    if cfg.qot_mode == "honest":
        res = qot.run_qot_honest(cfg.qot_n, rng, r_fraction=cfg.r_fraction)
    else:
        res = qot.run_qot_curious(cfg.qot_n, rng, r_fraction=cfg.r_fraction)
    return TrialResult({"correct": float(res.correct), "confidence": res.confidence}, res.case)


_BODIES: dict[str, Callable] = {
    "honest": _trial_honest,
    "estimate_alpha": _trial_estimate,
    "attack": _trial_attack,
    "coin_toss": _trial_coin,
    "qot": _trial_qot,
}


def run_trial(cfg: ExperimentConfig, index: int, prefix: tuple[int, ...] = ()) -> TrialResult:
    code = params = None
    if cfg.scenario != "qot":
        code = build_code(cfg)
        params = build_params(cfg, code)
    return _BODIES[cfg.scenario](cfg, code, params, stream(cfg.seed, *prefix, index))


def _run_chunk(cfg: ExperimentConfig, indices: Sequence[int], prefix: tuple[int, ...]) -> list[TrialResult]:
    if cfg.scenario == "qot":
        return [_BODIES["qot"](cfg, None, None, stream(cfg.seed, *prefix, i)) for i in indices]
    code = build_code(cfg)
    params = build_params(cfg, code)
    body = _BODIES[cfg.scenario]
    return [body(cfg, code, params, stream(cfg.seed, *prefix, i)) for i in indices]


# --- aggregation ------------------------------------------------------------------------


def summarize(values: Sequence[float]) -> dict[str, Any]:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1) if n > 1 else 0.0
    se = math.sqrt(var / n)
    return {"mean": mean, "stderr": se, "count": n, "ci95": [mean - Z95 * se, mean + Z95 * se]}


@dataclass(frozen=True)
class Report:
    scenario: str
    params: dict[str, Any]
    metrics: dict[str, dict[str, Any]]
    verdicts: dict[str, int]
    seed: int
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "params": self.params,
            "metrics": self.metrics,
            "verdicts": self.verdicts,
            "seed": self.seed,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def csv_rows(self) -> list[list[Any]]:
        rows = []
        for name in sorted(self.metrics):
            m = self.metrics[name]
            rows.append(["metric", name, repr(m["mean"]), repr(m["stderr"]), m["count"], repr(m["ci95"][0]), repr(m["ci95"][1])])
        for name in sorted(self.verdicts):
            rows.append(["verdict", name, "", "", self.verdicts[name], "", ""])
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(self.csv_rows())
        return buf.getvalue()

    def serialize(self, fmt: str = "json") -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


CSV_HEADER = ["kind", "name", "mean", "stderr", "count", "ci95_low", "ci95_high"]


def aggregate(cfg: ExperimentConfig, results: Sequence[TrialResult]) -> Report:
    samples: dict[str, list[float]] = {}
    for res in results:  # trial order, so the result is independent of scheduling
        for key, val in res.metrics.items():
            name = key.lstrip("_")
            vals = val if isinstance(val, list) else [val]
            samples.setdefault(_RENAME.get(name, name), []).extend(vals)
    verdicts = Counter(r.verdict for r in results if r.verdict is not None)
    return Report(
        scenario=cfg.scenario if cfg.attack == "none" else f"attack:{cfg.attack}",
        params=cfg.echo(),
        metrics={k: summarize(v) for k, v in sorted(samples.items())},
        verdicts=dict(sorted(verdicts.items())),
        seed=cfg.seed,
    )


_RENAME = {"acc": "mode_accuracy", "dc_bypass": "p_dc_given_bypass", "dc_intercept": "p_dc_given_intercept"}


def run_experiment(cfg: ExperimentConfig, workers: int = 1, prefix: tuple[int, ...] = ()) -> Report:
    """Run ``cfg.trials`` independent trials; the report depends only on (cfg, prefix)."""
    validate(cfg)
    indices = range(cfg.trials)
    if workers <= 1 or cfg.trials < 2 * workers:
        results = _run_chunk(cfg, indices, prefix)
    else:
        chunks = np.array_split(np.arange(cfg.trials), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [cfg] * workers, [c.tolist() for c in chunks], [prefix] * workers)
            results = [r for part in parts for r in part]
    return aggregate(cfg, results)


def _with_param(cfg: ExperimentConfig, parameter: str, value: Any) -> ExperimentConfig:
    if parameter == "alpha":
        return dataclasses.replace(cfg, alpha=float(value))
    if parameter == "eps":
        return dataclasses.replace(cfg, eps_dephase=float(value))
    if parameter == "s":
        return dataclasses.replace(cfg, s=int(value))
    if parameter == "trials":
        return dataclasses.replace(cfg, trials=int(value))
    if parameter in ("d", "n"):
        family = cfg.code.split(":")[0]
        if cfg.generator or family not in ("repetition", "random"):
            raise ConfigError(f"sweeping {parameter} needs a repetition or random code family")
        if family == "repetition":
            code = f"repetition:{int(value)}"
        elif parameter == "n":
            _, _, k, seed = cfg.code.split(":")
            code = f"random:{int(value)}:{k}:{seed}"
        else:
            raise ConfigError("sweeping d is supported for repetition codes only")
        return dataclasses.replace(cfg, code=code)
    raise ConfigError(f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMS}")


def sweep(cfg: ExperimentConfig, parameter: str, values: Sequence[Any], workers: int = 1) -> list[Report]:
    """One report per value, all under the master seed with stream prefix (value index,)."""
    if parameter not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMS}")
    configs = []
    for v in values:
        try:
            c = _with_param(cfg, parameter, v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid {parameter} value {v!r}: {exc}") from exc
        validate(c)
        configs.append(c)
    return [run_experiment(c, workers=workers, prefix=(j,)) for j, c in enumerate(configs)]


# --- config files ------------------------------------------------------------------------


def _coerce(name: str, raw: str, annotation: str) -> Any:
    raw = raw.strip()
    if raw.lower() in ("none", "null", "") and "None" in annotation:
        return None
    if annotation.startswith("bool"):
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if annotation.startswith("int"):
            return int(raw)
        if annotation.startswith("float"):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    return raw


_FIELD_TYPES = {f.name: str(f.type) for f in fields(ExperimentConfig)}


def parse_config_text(text: str) -> dict[str, Any]:
    """Flat ``key = value`` lines; ``#`` starts a comment; indented lines
    continue the previous value (used for generator rows)."""
    values: dict[str, str] = {}
    last = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        if line[0] in " \t":
            if last is None:
                raise ConfigError(f"line {lineno}: continuation without a key")
            values[last] = (values[last] + "\n" + stripped.strip()).strip()
            continue
        key, sep, val = stripped.partition("=")
        if not sep:
            key, sep, val = stripped.partition(":")
        key = key.strip()
        if not sep or key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown or malformed entry {stripped!r}")
        values[key] = val.strip()
        last = key
    return {k: _coerce(k, v, _FIELD_TYPES[k]) for k, v in values.items()}


def config_from_mapping(mapping: dict[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    unknown = set(mapping) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return dataclasses.replace(base or ExperimentConfig(), **mapping)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_mapping(parse_config_text(fh.read()))


def coerce_value(key: str, raw: str) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    return _coerce(key, raw, _FIELD_TYPES[key])
