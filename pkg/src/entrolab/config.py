"""Typed TOML experiment configs: one ``[run]`` table plus one table per subcommand."""
from __future__ import annotations

import copy
import hashlib
import re
from dataclasses import dataclass, field

import tomli
import tomli_w


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


RUN_SCHEMA = {"seed": 0, "jobs": 1, "out": "out", "svg": False}
RESULT_NEUTRAL = ("out", "jobs", "svg")

SCHEMAS: dict[str, tuple[str, dict]] = {
    "fuzz-inequalities": ("fuzz", {
        "pairs": 10_000,
        "alphas": [1.5, 2.0, 3.0, 5.0],
        "dim_min": 2,
        "dim_max": 16,
        "physical_fraction": 0.5,
        "search_alpha": 0.5,
        "search_samples": 10_000,
        "search_dim_min": 3,
        "search_dim_max": 8,
    }),
    "gue-s2": ("gue", {
        "d": 2,
        "V": 4,
        "samples": 200,
        "t_max": 3.0,
        "n_times": 61,
    }),
    "mfim-growth": ("mfim", {
        "L": 10,
        "g": -1.05,
        "h": 0.5,
        "J": [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4],
        "samples": 100,
        "alphas": [1.0, 2.0],
        "t_max": 40.0,
        "n_times": 161,
        "fit_window": [],
    }),
    "syk-growth": ("syk", {
        "N": 8,
        "J": 1.0,
        "beta": 0.0,
        "spins": [],
        "samples": 1,
        "alphas": [1.0, 2.0],
        "t_max": 10.0,
        "n_times": 101,
    }),
    "bounds-report": ("bounds", {
        "formulas": [],
        "base": {},
        "grid": {},
    }),
}

def _type_ok(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    if isinstance(default, dict):
        return isinstance(value, dict)
    return True


def _find_line(text: str, table: str | None, key: str) -> int | None:
    current = None
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"^\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if table is None and current == key:
                return i
            continue
        if current == table and pat.match(line):
            return i
    return None


@dataclass
class ExperimentConfig:
    kind: str
    run: dict = field(default_factory=lambda: dict(RUN_SCHEMA))
    params: dict = field(default_factory=dict)

    @property
    def section(self) -> str:
        return SCHEMAS[self.kind][0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "run": dict(self.run), self.section: copy.deepcopy(self.params)}

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        """Hash of everything that affects results; out, jobs and svg are excluded."""
        d = self.to_dict()
        d["run"] = {k: v for k, v in d["run"].items() if k not in RESULT_NEUTRAL}
        return hashlib.sha256(tomli_w.dumps(d).encode()).hexdigest()[:16]


def default_config(kind: str) -> ExperimentConfig:
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    return ExperimentConfig(kind, dict(RUN_SCHEMA), copy.deepcopy(SCHEMAS[kind][1]))


def loads(text: str, kind: str | None = None) -> ExperimentConfig:
    """Parse and validate; missing keys take defaults, unknown keys are errors."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None) from None
    file_kind = raw.pop("kind", None)
    if file_kind is not None and not isinstance(file_kind, str):
        raise ConfigError("kind must be a string", _find_line(text, None, "kind"))
    if kind and file_kind and file_kind != kind:
        raise ConfigError(f"config is for {file_kind!r}, not {kind!r}", _find_line(text, None, "kind"))
    kind = kind or file_kind
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown or missing experiment kind {kind!r}")
    cfg = default_config(kind)
    section = cfg.section
    for top, value in raw.items():
        if top not in ("run", section):
            raise ConfigError(f"unknown table or key {top!r}", _find_line(text, None, top))
        if not isinstance(value, dict):
            raise ConfigError(f"{top!r} must be a table", _find_line(text, None, top))
        schema = RUN_SCHEMA if top == "run" else SCHEMAS[kind][1]
        target = cfg.run if top == "run" else cfg.params
        for key, v in value.items():
            line = _find_line(text, top, key)
            if key not in schema:
                raise ConfigError(f"unknown key {top}.{key}", line or _find_line(text, f"{top}.{key}", key))
            if not _type_ok(schema[key], v):
                raise ConfigError(f"{top}.{key} has type {type(v).__name__}, expected "
                                  f"{type(schema[key]).__name__}", line)
            if isinstance(schema[key], float) and isinstance(v, int):
                v = float(v)
            target[key] = v
    return cfg


def load(path, kind: str | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return loads(text, kind)
