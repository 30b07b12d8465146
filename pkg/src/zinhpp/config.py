"""INI run configuration with line-numbered errors.

Sections are ``[scenario]``, ``[model]``, ``[priors]`` and ``[sampler]``;
each accepts only known keys. Lists are comma separated. Values given on
the command line override file values, which override defaults.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import re
from pathlib import Path

from .model import ModelSpec, PriorConfig
from .sampler import SamplerConfig
from .simulate import ScenarioConfig


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _names(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _optional(conv):
    def f(text):
        return None if text.strip().lower() in ("", "none") else conv(text)
    return f


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_SCENARIO = {
    "n": int, "baseline": str, "alpha1": float, "alpha2": float, "b": float,
    "window": _optional(float), "expected_events": _optional(float), "beta": _floats,
    "pi": _optional(float), "psi": _optional(_floats), "tau": float, "nrow": int, "ncol": int,
    "area_weights": _optional(_floats), "replications": int, "seed": int,
}
_MODEL = {
    "variant": str, "degree": _optional(int),
    "intensity_covariates": _optional(_names), "zero_covariates": _optional(_names),
}
_PRIORS = {f.name: float for f in dataclasses.fields(PriorConfig)}
_SAMPLER = {
    "chains": int, "iterations": int, "warmup": int, "target_accept": float,
    "max_leapfrog": int, "path_length": float, "metric": str, "adapt_window": int,
    "init_optimize": _bool, "divergence_threshold": float, "init_radius": float, "seed": int,
    "jobs": int,
}
SECTIONS = {"scenario": _SCENARIO, "model": _MODEL, "priors": _PRIORS, "sampler": _SAMPLER}


class RunConfig:
    """Parsed configuration: typed values per section plus source text hash."""

    def __init__(self, values=None, path=None, digest=""):
        self.values = values or {s: {} for s in SECTIONS}
        self.path = path
        self.digest = digest

    def section(self, name) -> dict:
        return dict(self.values.get(name, {}))

    def scenario(self, **overrides) -> ScenarioConfig:
        kw = self.section("scenario")
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return ScenarioConfig(**kw)

    def model(self, **overrides) -> ModelSpec:
        kw = self.section("model")
        kw.update({k: v for k, v in overrides.items() if v is not None})
        if "variant" not in kw:
            raise ConfigError(f"{self.path or '<config>'}: [model] variant is required")
        return ModelSpec(priors=PriorConfig(**self.section("priors")), **kw)

    def sampler(self, **overrides) -> SamplerConfig:
        kw = self.section("sampler")
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return SamplerConfig(**kw)


def _key_lines(text):
    """Map (section, key) to its 1-based line number."""
    out = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            out[(section, None)] = lineno
            continue
        key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
        out.setdefault((section, key), lineno)
    return out


def parse_config_text(text, path="<config>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        if lineno is None and getattr(exc, "errors", None):
            lineno = exc.errors[0][0]
        where = f"{path}:{lineno}" if lineno else str(path)
        raise ConfigError(f"{where}: {exc.message.splitlines()[0]}") from None
    lines = _key_lines(text)
    values = {s: {} for s in SECTIONS}
    for section in parser.sections():
        sec = section.lower()
        if sec not in SECTIONS:
            raise ConfigError(f"{path}:{lines.get((sec, None), '?')}: unknown section [{section}]")
        schema = SECTIONS[sec]
        for key, raw in parser.items(section):
            ln = lines.get((sec, key), "?")
            if key not in schema:
                raise ConfigError(f"{path}:{ln}: unknown key {key!r} in [{sec}]")
            try:
                values[sec][key] = schema[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{ln}: bad value for {key!r}: {exc}") from None
    return RunConfig(values, path, hashlib.sha256(text.encode("utf-8")).hexdigest())


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config_text(text, p)
