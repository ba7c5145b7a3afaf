"""Experiment configuration: INI text in, validated frozen config out.

Grammar: standard INI (``configparser``), sections and keys listed in
``SCHEMA``.  Lists are comma separated; booleans are true/false.  The
canonical echo (``echo_config``) lists every key with defaults filled, in
schema order, so parse(echo(c)) reproduces c and echo is a fixed point.
"""

from __future__ import annotations

import configparser
import math
import warnings
from dataclasses import dataclass, field

from .errors import ConfigError

__all__ = ["KINDS", "SCHEMA", "ExperimentConfig", "parse_config", "load_config", "echo_config"]

KINDS = ("density", "moments", "local-limit", "front", "intermittency", "mc-validate")
REQUIRED = object()

# section -> key -> (type, default); REQUIRED keys may still be optional for some kinds
SCHEMA = {
    "experiment": {
        "kind": ("str", REQUIRED),
        "output": ("str", "bwalk_out"),
    },
    "kernel": {
        "d": ("int", REQUIRED),
        "alpha": ("float", REQUIRED),
        "profile": ("floats", (1.0,)),
        "R": ("int", 64),
    },
    "dynamics": {
        "nu": ("float", 0.0),
        "times": ("floats", REQUIRED),
    },
    "numerics": {
        "M": ("int", REQUIRED),
        "n_steps": ("int", 0),
        "strict": ("bool", False),
        "aliasing_guard": ("float", 1e-4),
        "richardson_tol": ("float", 0.01),
        "series_terms": ("int", 20),
        "write_binary": ("bool", False),
    },
    "mc": {
        "replicas": ("int", REQUIRED),
        "seed": ("int", REQUIRED),
        "cap": ("int", 1_000_000),
        "sites": ("ints", (0, 5, -5, 20, -20)),
    },
    "analysis": {
        "K": ("float", 3.0),
        "inner": ("float", 30.0),
        "threshold": ("float", 1.0),
        "B": ("float", 1.0),
        "eps": ("float", 0.25),
        "low": ("float", 0.05),
        "high": ("float", 0.15),
        "scaled": ("floats", (1.0, 1.75)),
    },
    "tolerances": {
        "mass": ("float", 1e-8),
        "series": ("float", 1e-6),
        "tail": ("float", 0.10),
        "local": ("float", 0.05),
        "triangle": ("float", 0.03),
        "front_rate": ("float", 0.03),
        "front_radius": ("float", 0.15),
        "z_max": ("float", 4.0),
        "rho_band": ("float", 2.0),
        "slope_min": ("float", 0.3),
    },
}

# blocks each kind needs (REQUIRED keys in other blocks are not enforced)
NEEDS = {
    "density": ("kernel", "dynamics", "numerics"),
    "moments": ("kernel", "dynamics", "numerics"),
    "local-limit": ("kernel", "dynamics", "numerics"),
    "front": ("kernel", "dynamics", "numerics"),
    "intermittency": ("kernel", "dynamics", "numerics"),
    "mc-validate": ("kernel", "dynamics", "numerics", "mc"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``sections`` maps section -> key -> value."""

    kind: str
    sections: dict
    warnings: tuple = field(default=(), compare=False)

    def __getitem__(self, section):
        return self.sections[section]

    def get(self, section, key):
        return self.sections[section][key]

    @property
    def strict(self) -> bool:
        return bool(self.sections["numerics"]["strict"])

    def with_overrides(self, output=None, strict=None) -> "ExperimentConfig":
        sec = {s: dict(v) for s, v in self.sections.items()}
        if output is not None:
            sec["experiment"]["output"] = str(output)
        if strict:
            sec["numerics"]["strict"] = True
        return ExperimentConfig(self.kind, sec, self.warnings)


def _fmt(kind, value):
    if value is None:
        return ""
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "ints":
        return ", ".join(str(int(v)) for v in value)
    return str(value)


def _convert(kind, text):
    text = text.strip()
    if kind == "str":
        return text
    if kind == "int":
        return int(text)
    if kind == "float":
        v = float(text)
        if not math.isfinite(v):
            raise ValueError("not finite")
        return v
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError("expected true or false")
    parts = [p for p in (q.strip() for q in text.split(",")) if p]
    if not parts:
        raise ValueError("empty list")
    conv = float if kind == "floats" else int
    vals = tuple(conv(p) for p in parts)
    if kind == "floats" and not all(math.isfinite(v) for v in vals):
        raise ValueError("not finite")
    return vals


def _validate(kind, sec, errs):
    k, dyn, num = sec["kernel"], sec["dynamics"], sec["numerics"]
    d, alpha = k["d"], k["alpha"]
    if d is not None and d not in (1, 2):
        errs.append(f"kernel.d = {d} must be 1 or 2")
    if alpha is not None and not 0.0 < alpha < 2.0:
        errs.append(f"kernel.alpha = {alpha!r} violates α ∈ (0,2)")
    prof = k["profile"]
    if any(v <= 0 for v in prof):
        errs.append("kernel.profile must be strictly positive")
    if len(prof) > 1:
        if d == 1:
            errs.append("kernel.profile must be a single value for d = 1")
        elif len(prof) % 2:
            errs.append("kernel.profile needs an even number of angles")
        else:
            h = len(prof) // 2
            if any(abs(a - b) > 1e-12 * abs(a) for a, b in zip(prof[:h], prof[h:])):
                errs.append("kernel.profile must be even (a0(-u) = a0(u))")
    if k["R"] < 4:
        errs.append(f"kernel.R = {k['R']} must be >= 4")
    if dyn["nu"] < 0:
        errs.append(f"dynamics.nu = {dyn['nu']!r} must be >= 0 (rates are nonnegative)")
    times = dyn["times"]
    if times is not None:
        if any(t < 0 for t in times):
            errs.append("dynamics.times must be >= 0")
        if list(times) != sorted(times) or len(set(times)) != len(times):
            errs.append("dynamics.times must be strictly increasing")
    M = num["M"]
    if M is not None:
        if M < 8 or M & (M - 1):
            errs.append(f"numerics.M = {M} must be a power of two >= 8")
        elif M < 2 * k["R"] + 2:
            errs.append(f"numerics.M = {M} must be >= 2R+2 = {2 * k['R'] + 2}")
    ns = num["n_steps"]
    if ns != 0 and (ns < 8 or ns % 2):
        errs.append("numerics.n_steps must be 0 (automatic) or an even integer >= 8")
    for key in ("aliasing_guard", "richardson_tol"):
        if num[key] <= 0:
            errs.append(f"numerics.{key} must be positive")
    if num["series_terms"] < 1:
        errs.append("numerics.series_terms must be >= 1")
    for key, v in sec["tolerances"].items():
        if v <= 0:
            errs.append(f"tolerances.{key} must be positive")
    an = sec["analysis"]
    for key in ("K", "inner", "threshold", "B", "eps"):
        if an[key] <= 0:
            errs.append(f"analysis.{key} must be positive")
    if an["low"] > an["high"]:
        errs.append("analysis.low must not exceed analysis.high")
    if kind == "mc-validate":
        mc = sec["mc"]
        if mc["replicas"] is not None and mc["replicas"] < 100:
            errs.append("mc.replicas must be >= 100")
        if mc["seed"] is not None and mc["seed"] < 0:
            errs.append("mc.seed must be a non-negative integer")
        if mc["cap"] < 1:
            errs.append("mc.cap must be positive")
    if kind in ("front", "intermittency") and dyn["nu"] <= 0:
        errs.append(f"dynamics.nu must be positive for kind {kind}")
    if kind in ("front", "intermittency") and times is not None:
        if kind == "intermittency" and any(t <= 1 for t in times):
            errs.append("intermittency times must exceed 1 (radii scale as t^s)")
        if len(times) < (3 if kind == "intermittency" else 2):
            errs.append(f"kind {kind} needs at least {3 if kind == 'intermittency' else 2} times")


def parse_config(text: str, kind: str | None = None, strict: bool = False) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every violation.

    ``kind`` (from the command line) must agree with ``experiment.kind``
    when both are given.  Unknown sections/keys are errors when ``strict``
    (or ``numerics.strict``) is set, warnings otherwise.
    """
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errs, unknown = [], []
    sec = {}
    for name, keys in SCHEMA.items():
        raw = cp[name] if cp.has_section(name) else {}
        sec[name] = {}
        for key, (typ, default) in keys.items():
            if key in raw:
                try:
                    sec[name][key] = _convert(typ, raw[key])
                except ValueError as exc:
                    errs.append(f"{name}.{key} = {raw[key]!r}: {exc}")
                    sec[name][key] = None if default is REQUIRED else default
            else:
                sec[name][key] = None if default is REQUIRED else default
        for key in raw:
            if key not in keys:
                unknown.append(f"unknown key {name}.{key}")
    for name in cp.sections():
        if name not in SCHEMA:
            unknown.append(f"unknown section [{name}]")

    file_kind = sec["experiment"]["kind"]
    if kind is not None and file_kind is not None and kind != file_kind:
        errs.append(f"experiment.kind = {file_kind!r} does not match requested kind {kind!r}")
    kind = kind or file_kind
    if kind is None:
        errs.append("missing mandatory key experiment.kind")
    elif kind not in KINDS:
        errs.append(f"experiment.kind = {kind!r} is not one of {', '.join(KINDS)}")
    else:
        sec["experiment"]["kind"] = kind
        for name in NEEDS[kind]:
            for key, (_, default) in SCHEMA[name].items():
                if default is REQUIRED and sec[name][key] is None and not any(
                        e.startswith(f"{name}.{key} ") for e in errs):
                    errs.append(f"missing mandatory key {name}.{key}")
        _validate(kind, sec, errs)

    strict = strict or bool(sec["numerics"].get("strict"))
    if unknown:
        if strict:
            errs.extend(unknown)
        else:
            for msg in unknown:
                warnings.warn(msg, stacklevel=2)
    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(kind, sec, tuple(unknown))


def load_config(path, kind=None, strict=False) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    return parse_config(text, kind, strict)


def echo_config(cfg: ExperimentConfig) -> str:
    """Canonical text: every schema key in order, defaults filled.

    Keys whose value is unset (REQUIRED keys of blocks the kind does not
    use) are omitted.
    """
    lines = []
    for name, keys in SCHEMA.items():
        body = [f"{key} = {_fmt(typ, cfg.sections[name][key])}"
                for key, (typ, _) in keys.items() if cfg.sections[name][key] is not None]
        if body:
            if lines:
                lines.append("")
            lines.append(f"[{name}]")
            lines.extend(body)
    return "\n".join(lines) + "\n"
