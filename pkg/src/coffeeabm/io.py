"""Config files, CSV output and run metadata.

A config file is YAML whose top-level keys are the fields of
:class:`~coffeeabm.scenario.ScenarioConfig`; nested sections mirror the
nested dataclasses.  An optional ``base`` key names a built-in case to start
from.  Unknown keys at any level are errors.  Example::

    base: case3
    label: my-run
    demand_split: [60, 40]
    weight_mix: {trust: 0.5, risk: 0.0, cost: 0.5}
    behavior: {household_expense: 8000}
    role_params:
      lender: {threshold: 0.5}

CSV output always uses ``.`` decimals, six fixed decimals, and ``\\n`` line
endings.  Missing values (series of a buyer kind that is absent) are written
as ``nan``.
"""

from __future__ import annotations

import dataclasses
import io as _io
import os
from pathlib import Path

import numpy as np
import yaml

from .agents import BehaviorParams, BuyerSpec
from .batch import EnsembleStats
from .engine import SERIES, TimeSeriesFrame
from .evaluation import CostParams, EvaluationParams, RiskWeights, TopWeights, TrustWeights
from .proxy import ProxyParams
from .scenario import ROLES, ScenarioConfig, get_case

OUT_ENV = "COFFEEABM_OUT"
DEFAULT_OUT = "runs"

_NESTED = {
    "weight_mix": TopWeights,
    "eval_params": EvaluationParams,
    "proxy_params": ProxyParams,
    "behavior": BehaviorParams,
}
_EVAL_NESTED = {"top": TopWeights, "trust": TrustWeights, "risk": RiskWeights, "cost": CostParams}
_TUPLES = {"demand_split", "farm_area", "trust_init", "risk_init", "income", "weights", "gcb_price", "fresh_price"}


class ConfigError(ValueError):
    pass


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


# --------------------------------------------------------------------------
# config <-> plain data
# --------------------------------------------------------------------------


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return _plain(cfg)


def _check_keys(cls, data: dict, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def _build(cls, data: dict, where: str, base=None):
    """Construct ``cls`` from ``data``, starting from ``base`` when given."""
    _check_keys(cls, data, where)
    kw = {}
    for key, val in data.items():
        if cls is EvaluationParams and key in _EVAL_NESTED:
            sub = getattr(base, key) if base is not None else None
            val = _build(_EVAL_NESTED[key], val, f"{where}.{key}", sub)
        elif key in _TUPLES and val is not None:
            val = tuple(val)
        kw[key] = val
    try:
        if base is not None:
            return dataclasses.replace(base, **kw)
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    data = dict(data)
    base_label = data.pop("base", None)
    try:
        base = get_case(base_label) if base_label is not None else ScenarioConfig()
    except KeyError as e:
        raise ConfigError(str(e)) from None
    _check_keys(ScenarioConfig, data, "config")
    kw = {}
    for key, val in data.items():
        if key in _NESTED:
            val = _build(_NESTED[key], val, key, getattr(base, key))
        elif key == "buyers":
            if not isinstance(val, list):
                raise ConfigError("buyers: expected a list")
            val = tuple(_build(BuyerSpec, b, f"buyers[{i}]") for i, b in enumerate(val))
        elif key == "role_params":
            _check_role_keys(val)
            val = {
                role: _build(EvaluationParams, sub, f"role_params.{role}", base.role_params.get(role, base.eval_params))
                for role, sub in val.items()
            }
        elif key in _TUPLES:
            val = tuple(val)
        kw[key] = val
    try:
        return dataclasses.replace(base, **kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config: {e}") from e


def _check_role_keys(val) -> None:
    if not isinstance(val, dict):
        raise ConfigError("role_params: expected a mapping")
    unknown = sorted(set(val) - set(ROLES))
    if unknown:
        raise ConfigError(f"role_params: unknown roles {unknown}")


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    return config_from_dict(data or {})


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return "nan" if v != v else f"{v:.6f}"


def ensemble_csv(stats: EnsembleStats) -> str:
    """Long format: one row per (tick, series)."""
    buf = _io.StringIO()
    buf.write("tick,series,mean,std,min,max\n")
    for t in range(stats.mean.shape[0]):
        for j, name in enumerate(stats.columns):
            vals = (stats.mean[t, j], stats.std[t, j], stats.min[t, j], stats.max[t, j])
            buf.write(f"{t + 1},{name}," + ",".join(_fmt(v) for v in vals) + "\n")
    return buf.getvalue()


def frame_csv(frame: TimeSeriesFrame) -> str:
    """Wide format: one row per tick, one column per series."""
    buf = _io.StringIO()
    buf.write("tick," + ",".join(frame.columns) + "\n")
    for t, row in enumerate(frame.data):
        buf.write(f"{t + 1}," + ",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_ensemble_csv(path) -> dict:
    """Parse an ensemble CSV back into ``{stat: (ticks, series) array}``."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "tick,series,mean,std,min,max":
        raise ValueError(f"{path}: not an ensemble CSV")
    rows = [ln.split(",") for ln in lines[1:]]
    names = list(dict.fromkeys(r[1] for r in rows))
    n_ticks = len(rows) // max(len(names), 1)
    out = {}
    for k, stat in enumerate(("mean", "std", "min", "max")):
        out[stat] = np.array([float(r[2 + k]) for r in rows]).reshape(n_ticks, len(names))
    out["series"] = names
    return out


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# Bundles
# --------------------------------------------------------------------------


@dataclasses.dataclass
class OutputBundle:
    directory: Path
    ensemble: Path
    metadata: Path
    raw: list = dataclasses.field(default_factory=list)


def metadata(cfg: ScenarioConfig, stats: EnsembleStats, extra: dict | None = None) -> dict:
    from . import __version__

    meta = {
        "version": __version__,
        "label": cfg.label,
        "replications": stats.replications,
        "base_seed": stats.base_seed,
        "seed_rule": "replication i uses seed base_seed + i",
        "horizon": int(stats.mean.shape[0]),
        "series": list(SERIES),
        "std": "population (divide by replications)",
    }
    meta.update(extra or {})
    meta["config"] = config_to_dict(cfg)
    return meta


def write_bundle(directory, cfg: ScenarioConfig, stats: EnsembleStats, raw: bool = False, extra=None) -> OutputBundle:
    """Write ``ensemble.csv``, ``metadata.yaml`` and optionally ``raw/``.

    Identical inputs produce identical files.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    bundle = OutputBundle(d, d / "ensemble.csv", d / "metadata.yaml")
    _write(bundle.ensemble, ensemble_csv(stats))
    _write(bundle.metadata, yaml.safe_dump(metadata(cfg, stats, extra), sort_keys=False))
    if raw:
        rd = d / "raw"
        rd.mkdir(exist_ok=True)
        for i, frame in enumerate(stats.frames):
            p = rd / f"run-{i:04d}-seed-{stats.base_seed + i}.csv"
            _write(p, frame_csv(frame))
            bundle.raw.append(p)
    return bundle


INDEX_COLUMNS = (
    "label",
    "directory",
    "decision_model",
    "demand_coop",
    "demand_market",
    *(f"{r}_{k}" for r in ROLES for k in ("w_trust", "w_risk", "w_cost", "threshold")),
    "description",
)


def _csv_field(v) -> str:
    s = _fmt(v) if isinstance(v, float) else str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def sweep_index_csv(configs, directories) -> str:
    buf = _io.StringIO()
    buf.write(",".join(INDEX_COLUMNS) + "\n")
    for cfg, d in zip(configs, directories):
        row = [cfg.label, Path(d).name, cfg.decision_model, float(cfg.demand_split[0]), float(cfg.demand_split[1])]
        for r in ROLES:
            p = cfg.params_for(r)
            row += [float(x) for x in p.top.as_tuple()] + [float(p.threshold)]
        row.append(cfg.description)
        buf.write(",".join(_csv_field(v) for v in row) + "\n")
    return buf.getvalue()


def write_sweep_index(path, configs, directories) -> Path:
    path = Path(path)
    _write(path, sweep_index_csv(configs, directories))
    return path
