"""TOML experiment configuration.

Layout::

    [experiment]            seed, warmup_tasks, replicas, strict_assumption5
    [topology]              costs = [...]
    [topology.availability.N]   kind = "always_up" | "bernoulli" | "schedule"
    [workload]              kind = "synthetic" | "trace"
    [methods.N]             kind = "endserve" | "edgeserve" | "cloudserve" |
                            "colserve" | "casserve" | "recserve"
    [report]                out, format
    [calibration]           budget or target_beta, eta, window, epsilon, ...

See README.md for every key.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibrate import CalibrationConfig
from .core import TaskType, TierTopology
from .errors import ConfigError, RecServeError
from .experiment import ExperimentConfig
from .history import ThresholdConfig
from .netsim import AlwaysUp, Bernoulli, Schedule
from .policy import CasServe, CloudServe, ColServe, EdgeServe, EndServe, RecServe
from .theory import TheoryInputs, expected_comm
from .workload import BetaDist, Constant, LogNormal, QualityModel, SyntheticSpec, Uniform

DEFAULT_K = 10000


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")


def _ordered_tables(table: dict, where: str) -> list[tuple[str, dict]]:
    try:
        keys = sorted(table, key=int)
    except ValueError:
        raise ConfigError(f"{where} sub-tables must be numbered, e.g. [{where}.1]") from None
    return [(k, table[k]) for k in keys]


def parse_length_dist(d: Any, where: str):
    if isinstance(d, int):
        return Constant(d)
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{where}: expected an integer or a table with 'kind'")
    kind = d["kind"]
    if kind == "constant":
        _reject_unknown(d, {"kind", "value"}, where)
        return Constant(int(d["value"]))
    if kind == "uniform":
        _reject_unknown(d, {"kind", "lo", "hi"}, where)
        return Uniform(int(d["lo"]), int(d["hi"]))
    if kind == "lognormal":
        _reject_unknown(d, {"kind", "mu", "sigma"}, where)
        return LogNormal(float(d["mu"]), float(d["sigma"]))
    raise ConfigError(f"{where}: unknown length distribution {kind!r}")


def parse_availability(d: dict, where: str):
    kind = d.get("kind", "always_up")
    if kind == "always_up":
        _reject_unknown(d, {"kind"}, where)
        return AlwaysUp()
    if kind == "bernoulli":
        _reject_unknown(d, {"kind", "p_up"}, where)
        return Bernoulli(float(d["p_up"]))
    if kind == "schedule":
        _reject_unknown(d, {"kind", "down"}, where)
        return Schedule(tuple(tuple(iv) for iv in d.get("down", [])))
    raise ConfigError(f"{where}: unknown availability kind {kind!r}")


def parse_topology(sec: dict) -> TierTopology:
    _reject_unknown(sec, {"costs", "availability"}, "[topology]")
    if "costs" not in sec:
        raise ConfigError("[topology] needs costs = [...]")
    costs = [float(c) for c in sec["costs"]]
    avail = [AlwaysUp()] * len(costs)
    for key, table in sec.get("availability", {}).items():
        try:
            tier = int(key)
        except ValueError:
            raise ConfigError(f"[topology.availability.{key}] must be keyed by tier number") from None
        if not 1 <= tier <= len(costs):
            raise ConfigError(f"[topology.availability.{tier}] refers to a tier that does not exist")
        avail[tier - 1] = parse_availability(table, f"[topology.availability.{tier}]")
    return TierTopology.from_costs(costs, avail)


_WORKLOAD_KEYS = {"kind", "path", "n_tasks", "task_type", "input_len", "output_len", "confidence",
                  "quality", "length_confidence_corr", "seed"}


def parse_workload(sec: dict, n: int, default_seed: int, base: Path) -> SyntheticSpec | Path:
    _reject_unknown(sec, _WORKLOAD_KEYS, "[workload]")
    kind = sec.get("kind", "synthetic")
    if kind == "trace":
        if "path" not in sec:
            raise ConfigError("[workload] kind = 'trace' needs path")
        p = Path(sec["path"])
        return p if p.is_absolute() else base / p
    if kind != "synthetic":
        raise ConfigError(f"[workload] unknown kind {kind!r}")
    if "n_tasks" not in sec:
        raise ConfigError("[workload] needs n_tasks")

    conf = sec.get("confidence")
    if conf is None:
        conf_dists = tuple(BetaDist(2.0, 2.0) for _ in range(n))
    else:
        if isinstance(conf, dict):
            conf = [conf] * n
        conf_dists = tuple(BetaDist(float(c["a"]), float(c["b"])) for c in conf)

    quality = sec.get("quality")
    if quality is None:
        quality_models = tuple(QualityModel() for _ in range(n))
    else:
        if isinstance(quality, dict):
            quality = [quality] * n
        quality_models = tuple(QualityModel(float(q.get("q0", 0.5)), float(q.get("q1", 0.5))) for q in quality)

    out = sec.get("output_len", 20)
    out_dist = (tuple(parse_length_dist(d, f"[workload] output_len[{i}]") for i, d in enumerate(out))
                if isinstance(out, list) else parse_length_dist(out, "[workload] output_len"))
    try:
        task_type = TaskType.parse(sec.get("task_type", "seq2class"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return SyntheticSpec(
        n_tasks=int(sec["n_tasks"]),
        task_type=task_type,
        input_len_dist=parse_length_dist(sec.get("input_len", {"kind": "uniform", "lo": 50, "hi": 150}),
                                         "[workload] input_len"),
        output_len_dist=out_dist,
        confidence_dist=conf_dists,
        quality_model=quality_models,
        length_confidence_corr=float(sec.get("length_confidence_corr", 0.0)),
        seed=int(sec.get("seed", default_seed)),
    )


_METHOD_KEYS = {
    "endserve": {"kind"},
    "edgeserve": {"kind"},
    "cloudserve": {"kind"},
    "colserve": {"kind", "alpha"},
    "casserve": {"kind", "thresholds"},
    "recserve": {"kind", "beta", "k", "min_samples", "tolerant", "insert_before_threshold"},
}


def parse_method(d: dict, where: str):
    kind = str(d.get("kind", "")).lower()
    if kind not in _METHOD_KEYS:
        raise ConfigError(f"{where}: unknown method kind {d.get('kind')!r}")
    _reject_unknown(d, _METHOD_KEYS[kind], where)
    if kind == "endserve":
        return EndServe()
    if kind == "edgeserve":
        return EdgeServe()
    if kind == "cloudserve":
        return CloudServe()
    if kind == "colserve":
        return ColServe(float(d["alpha"]))
    if kind == "casserve":
        return CasServe(tuple(d["thresholds"]))
    cfg = ThresholdConfig(
        beta=float(d["beta"]),
        k=int(d.get("k", DEFAULT_K)),
        min_samples=int(d.get("min_samples", 2)),
        insert_before_threshold=bool(d.get("insert_before_threshold", True)),
    )
    return RecServe(cfg, bool(d.get("tolerant", False)))


def load_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def experiment_from_dict(doc: dict, base: Path = Path("."), seed: int | None = None) -> ExperimentConfig:
    try:
        _reject_unknown(doc, {"experiment", "topology", "workload", "methods", "report", "calibration"}, "config")
        exp = _section(doc, "experiment")
        _reject_unknown(exp, {"seed", "warmup_tasks", "replicas", "strict_assumption5"}, "[experiment]")
        seed = int(exp.get("seed", 0)) if seed is None else seed
        topology = parse_topology(_section(doc, "topology"))
        workload = parse_workload(_section(doc, "workload"), topology.n, seed, base)
        methods = [parse_method(t, f"[methods.{k}]") for k, t in _ordered_tables(_section(doc, "methods"), "methods")]
        report = _section(doc, "report")
        _reject_unknown(report, {"out", "format"}, "[report]")
        warmup = exp.get("warmup_tasks")
        if warmup is None:
            ks = [m.cfg.k for m in methods if isinstance(m, RecServe)]
            warmup = max(ks) if ks else 0
        echo = dict(doc)
        echo.setdefault("experiment", {})
        echo["experiment"] = {**exp, "seed": seed, "warmup_tasks": int(warmup)}
        cfg = ExperimentConfig(
            topology=topology,
            workload=workload,
            methods=methods,
            warmup_tasks=int(warmup),
            replicas=int(exp.get("replicas", 1)),
            seed=seed,
            strict_assumption5=bool(exp.get("strict_assumption5", False)),
            out=report.get("out"),
            format=report.get("format", "csv"),
            echo=echo,
        )
        return cfg.validate()
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RecServeError):
            raise
        detail = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise ConfigError(detail) from None


def load_experiment(path: str | Path, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    return experiment_from_dict(load_toml(path), path.parent, seed)


_CAL_KEYS = {"budget", "target_beta", "eta", "window", "epsilon", "max_rounds", "beta_lo", "beta_hi",
             "mean_payload", "warmup_tasks", "k", "min_samples", "insert_before_threshold"}


def calibration_from_dict(doc: dict, base: Path = Path("."), seed: int | None = None):
    """Returns ``(experiment, calibration_config, threshold_template)``.

    ``target_beta`` is a convenience: the budget becomes the theoretical burden
    at that beta for the workload's mean payload.
    """
    doc = dict(doc)
    methods = doc.setdefault("methods", {})
    if not methods:
        doc["methods"] = {"1": {"kind": "endserve"}}
    exp = experiment_from_dict(doc, base, seed)
    try:
        sec = _section(doc, "calibration")
        _reject_unknown(sec, _CAL_KEYS, "[calibration]")
        n = exp.topology.n
        mean_payload = sec.get("mean_payload")
        if mean_payload is None and isinstance(exp.workload, SyntheticSpec):
            mean_payload = exp.workload.mean_payload()
        if "budget" in sec:
            budget = float(sec["budget"])
        elif "target_beta" in sec:
            if mean_payload is None:
                raise ConfigError("[calibration] target_beta with a trace workload needs mean_payload")
            budget = expected_comm(TheoryInputs(float(sec["target_beta"]), n, float(mean_payload)))
        else:
            raise ConfigError("[calibration] needs budget or target_beta")
        k = int(sec.get("k", DEFAULT_K))
        cal = CalibrationConfig(
            budget=budget,
            eta=float(sec.get("eta", 0.5)),
            window=int(sec.get("window", 5000)),
            epsilon=float(sec.get("epsilon", 0.05)),
            max_rounds=int(sec.get("max_rounds", 15)),
            beta_clamp=(float(sec.get("beta_lo", 0.01)), float(sec.get("beta_hi", 0.6))),
            mean_payload=float(mean_payload) if mean_payload is not None else None,
            warmup_tasks=int(sec.get("warmup_tasks", k)),
            strict_assumption5=exp.strict_assumption5,
        )
        template = ThresholdConfig(beta=0.5, k=k, min_samples=int(sec.get("min_samples", 2)),
                                   insert_before_threshold=bool(sec.get("insert_before_threshold", True)))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return exp, cal, template


def load_calibration(path: str | Path, seed: int | None = None):
    path = Path(path)
    return calibration_from_dict(load_toml(path), path.parent, seed)
