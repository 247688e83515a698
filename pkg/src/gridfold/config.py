"""Flat experiment configuration: defaults < YAML file < command-line overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .errors import InvalidParameter

KINDS = ("bounds", "simulate", "treefold", "variance", "percolation", "smallworld", "latency")
FORMATS = ("csv", "jsonl")


@dataclass
class ExperimentConfig:
    kind: str = "bounds"
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    trace: str | None = None
    workers: int = 1

    # graph and measure
    L: int = 4
    k: int = 0
    atoms: list = field(default_factory=lambda: [[3, 3], [2, 3], [3, 1]])
    masses: list | None = None
    sink: list = field(default_factory=lambda: [0, 0])

    # engine
    contention: str = "non_congesting"
    t_edge: int = 1
    t_merge: int = 0
    t_cycle: float = 1.0
    k_arch: int = 0
    monoid: str = "int_sum"
    origin: list | None = None

    # statistics
    trials: int = 100_000
    pairs: int = 1000
    fields: int = 20
    schedules: int = 20
    delta: float = 0.1
    f_act: float = 0.1
    n_list: list = field(default_factory=lambda: [8, 16, 32, 64])
    L_list: list = field(default_factory=lambda: [16, 32, 64, 128])
    sigma: float = 5.0

    # latency
    alpha: float = 1e-6
    beta: float = 1e-9
    gamma: float = 1e-10
    c1: float = 1e-6
    c2: float = 1e-6
    c_w: float = 1e-9
    m0: float = 1024.0
    P: int = 1024
    N_list: list = field(default_factory=lambda: [2**e for e in range(4, 25)])
    x_list: list = field(default_factory=lambda: [1, 2, 4, 8, 16, 32, 64])

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """sha256 of the resolved config, ignoring where output goes."""
        d = {k: v for k, v in self.to_dict().items() if k not in ("out", "trace", "workers")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _coerce(name: str, value: Any) -> Any:
    """Coerce a parsed value to the field's declared type."""
    default = getattr(ExperimentConfig(), name)
    typ = _FIELDS[name].type
    try:
        if value is None:
            if "None" in typ:
                return None
            raise TypeError
        if typ.startswith("int"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if typ.startswith("float"):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if typ.startswith("list"):
            if not isinstance(value, list):
                raise TypeError
            return value
        if typ.startswith("str"):
            return str(value)
    except (TypeError, ValueError):
        raise InvalidParameter(f"{name}: cannot use {value!r} (default is {default!r})", field=name) from None
    return value


def _parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise InvalidParameter(f"override {text!r} is not key=value", field=text)
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def load_config(path: str | None, overrides: dict | None = None, sets: list[str] | None = None) -> ExperimentConfig:
    """Resolve a config; unknown keys raise ``InvalidParameter`` naming the key."""
    merged: dict = {}
    if path is not None:
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise InvalidParameter("config file must be a flat key: value mapping", field="config")
        merged.update(data)
    for s in sets or []:
        k, v = _parse_override(s)
        merged[k] = v
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    cfg = ExperimentConfig()
    for key, value in merged.items():
        if key not in _FIELDS:
            raise InvalidParameter(f"unknown config key {key!r}", field=key)
        setattr(cfg, key, _coerce(key, value))
    validate(cfg)
    return cfg


def _check(cond: bool, name: str, msg: str):
    if not cond:
        raise InvalidParameter(f"{name}: {msg}", field=name)


def validate(cfg: ExperimentConfig) -> None:
    _check(cfg.kind in KINDS, "kind", f"must be one of {KINDS}")
    _check(cfg.format in FORMATS, "format", f"must be one of {FORMATS}")
    _check(cfg.workers >= 1, "workers", "must be >= 1")
    _check(cfg.L >= 1, "L", "must be >= 1")
    _check(cfg.k >= 0, "k", "must be >= 0")
    _check(cfg.t_edge >= 0, "t_edge", "must be >= 0")
    _check(cfg.t_merge >= 0, "t_merge", "must be >= 0")
    _check(cfg.k_arch >= 0, "k_arch", "must be >= 0")
    _check(cfg.t_cycle > 0, "t_cycle", "must be > 0")
    _check(0 <= cfg.delta <= 1, "delta", "must lie in [0, 1]")
    _check(0 < cfg.f_act < 1, "f_act", "must lie in (0, 1)")
    _check(cfg.trials >= 1, "trials", "must be >= 1")
    _check(cfg.pairs >= 1, "pairs", "must be >= 1")
    _check(cfg.fields >= 1, "fields", "must be >= 1")
    _check(cfg.schedules >= 1, "schedules", "must be >= 1")
    _check(cfg.sigma > 0, "sigma", "must be > 0")
    for name in ("alpha", "beta", "gamma", "c1", "c2"):
        _check(getattr(cfg, name) >= 0, name, "must be >= 0")
    _check(cfg.c_w > 0, "c_w", "must be > 0")
    _check(cfg.m0 > 0, "m0", "must be > 0")
    _check(cfg.P >= 1, "P", "must be >= 1")
    for name, lo in (("n_list", 2), ("L_list", 2), ("N_list", 2)):
        vals = getattr(cfg, name)
        _check(bool(vals) and all(isinstance(v, int) and v >= lo for v in vals), name, f"must be a non-empty list of integers >= {lo}")
    _check(all(isinstance(x, (int, float)) and x >= 1 for x in cfg.x_list), "x_list", "values must be >= 1")
    for name in ("sink", "origin"):
        v = getattr(cfg, name)
        if v is not None:
            _check(_is_node(v, cfg.L), name, f"must be [x, y] inside the {cfg.L}x{cfg.L} grid")
    _check(bool(cfg.atoms) and all(_is_node(a, cfg.L) for a in cfg.atoms), "atoms", f"must be [x, y] nodes inside the {cfg.L}x{cfg.L} grid")
    if cfg.masses is not None:
        _check(len(cfg.masses) == len(cfg.atoms) and all(m > 0 for m in cfg.masses), "masses", "need one positive mass per atom")


def _is_node(v, L: int) -> bool:
    return isinstance(v, list) and len(v) == 2 and all(isinstance(c, int) and 0 <= c < L for c in v)
