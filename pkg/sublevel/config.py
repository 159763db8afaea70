"""Experiment files.

An experiment is an INI file::

    [problem]
    kind = logistic
    source = synthetic
    m = 2000
    n = 100
    reg = 1e-3

    [budget]
    max_iters = 100
    x0 = zero

    [method.sigmasvd]
    coarse_dim = 0.5n
    rank = 0.09n
    mode = truncated

Sizes may be written as fractions of n (or of m for `sample_rows`), e.g.
`0.46n`, rounded to the nearest integer with ties rounded up.
"""
from __future__ import annotations

import configparser
import io
import math
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Literal, Optional, Union

from sublevel.errors import ConfigError
from sublevel.optimizers import METHODS, LineSearchConfig, MethodConfig

OUT_DIR_ENV = "SUBLEVEL_OUT_DIR"

_FRACTION = re.compile(r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([nm])\s*")


def parse_size(text: str, n: int, m: Optional[int] = None, name: str = "size") -> int:
    """Parses an integer or a fraction of n ('0.46n') or m ('0.1m')."""

    text = str(text).strip()
    found = _FRACTION.fullmatch(text)
    if found:
        base = n if found.group(2) == "n" else m
        if base is None:
            raise ConfigError(name, f"'{text}' is relative to m, which is unknown here")
        return int(math.floor(float(found.group(1)) * base + 0.5))
    if not text.isdigit():
        raise ConfigError(name, f"expected an integer or a fraction like '0.5n', got '{text}'")
    return int(text)


def _boolean(text: str) -> bool:
    states = configparser.ConfigParser.BOOLEAN_STATES
    if text.lower() not in states:
        raise ValueError(f"not a boolean: '{text}'")
    return states[text.lower()]


def _optional_float(text: str) -> Optional[float]:
    return None if text.lower() in ("", "none") else float(text)


Converter = Callable[[str], Any]

_SIZE = "size"

_METHOD_KEYS: dict[str, Union[Converter, str]] = {
    "method": str,
    "coarse_dim": _SIZE,
    "rank": _SIZE,
    "sample_rows": _SIZE,
    "mode": str,
    "nu": float,
    "eps_exit": float,
    "grad_tol": float,
    "max_iters": int,
    "seed": int,
    "step_rule": str,
    "resample": str,
    "allow_full": _boolean,
    "momentum": float,
    "adam_lr": float,
    "adam_beta1": float,
    "adam_beta2": float,
    "adam_eps": float,
    "cubic_reg": float,
    "oversample": int,
    "power_iters": int,
}

_LINE_SEARCH_KEYS: dict[str, Converter] = {
    "alpha": float,
    "beta": float,
    "t_init": float,
    "max_backtracks": int,
    "slack": float,
}

_SECTIONS: dict[str, dict[str, Converter]] = {
    "problem": {
        "kind": str,
        "source": str,
        "m": int,
        "n": int,
        "distribution": str,
        "data_seed": int,
        "reg": float,
        "standardize": _boolean,
        "dense_cap": int,
        "label_convention": str,
        "width": float,
        "depth": float,
        "informative": int,
        "escape_size": float,
        "offset": float,
    },
    "budget": {
        "max_iters": int,
        "max_seconds": _optional_float,
        "x0": str,
        "x0_seed": int,
        "seed": int,
    },
    "output": {
        "dir": str,
        "x_axis": str,
        "y_axis": str,
        "log_y": _boolean,
        "timing": str,
        "plot": _boolean,
    },
    "escape": {
        "method": str,
        "sweep": str,
        "values": str,
        "trials": int,
        "threshold": _optional_float,
        "reference_iters": int,
    },
}

DataKind = Literal["nls", "loglinear", "logistic", "svm"]


@dataclass(slots=True, frozen=True)
class ProblemConfig:
    """Which objective to build and from which data.

    `source` is 'synthetic' or the path of a LIBSVM file; m, n and the
    generator fields apply to synthetic data only.
    """

    kind: DataKind = "logistic"
    source: str = "synthetic"
    m: int = 1000
    n: int = 100
    distribution: str = "gaussian"
    data_seed: int = 0
    reg: float = 1e-3
    standardize: bool = True
    dense_cap: int = 2000
    label_convention: Optional[str] = None
    width: float = 0.2
    depth: float = 12.0
    informative: int = 10
    escape_size: float = 2.5
    offset: float = 1e-4

    def __post_init__(self):
        if self.kind not in ("nls", "loglinear", "logistic", "svm"):
            raise ConfigError("kind", f"unknown problem kind '{self.kind}'", "problem")
        if self.distribution not in ("gaussian", "loglinear", "saddle"):
            raise ConfigError("distribution", f"unknown distribution '{self.distribution}'", "problem")
        if self.distribution == "saddle" and self.kind != "nls":
            raise ConfigError("distribution", f"saddle data needs kind = nls, got '{self.kind}'", "problem")
        if self.m < 1 or self.n < 1:
            raise ConfigError("m", f"m and n must be positive, got m={self.m}, n={self.n}", "problem")
        if self.label_convention not in (None, "binary", "unit", "raw"):
            raise ConfigError("label_convention", f"unknown convention '{self.label_convention}'",
                              "problem")

    @property
    def synthetic(self) -> bool:
        return self.source == "synthetic"


@dataclass(slots=True, frozen=True)
class BudgetConfig:
    max_iters: int = 100
    max_seconds: Optional[float] = None
    x0: Literal["zero", "gaussian", "probe"] = "zero"
    x0_seed: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ConfigError("max_iters", f"must be non-negative, got {self.max_iters}", "budget")
        if self.x0 not in ("zero", "gaussian", "probe"):
            raise ConfigError("x0", f"unknown x0 policy '{self.x0}'", "budget")


@dataclass(slots=True, frozen=True)
class OutputConfig:
    dir: str = field(default_factory=lambda: os.getenv(OUT_DIR_ENV, "sublevel-out"))
    x_axis: Literal["iterations", "seconds"] = "iterations"
    y_axis: Literal["f_gap", "grad_norm"] = "f_gap"
    log_y: bool = True
    timing: Literal["wall", "off"] = "wall"
    plot: bool = True

    def __post_init__(self):
        if self.x_axis not in ("iterations", "seconds"):
            raise ConfigError("x_axis", f"unknown axis '{self.x_axis}'", "output")
        if self.y_axis not in ("f_gap", "grad_norm"):
            raise ConfigError("y_axis", f"unknown axis '{self.y_axis}'", "output")
        if self.timing not in ("wall", "off"):
            raise ConfigError("timing", f"must be 'wall' or 'off', got '{self.timing}'", "output")


@dataclass(slots=True, frozen=True)
class EscapeConfig:
    method: Optional[str] = None
    sweep: Literal["coarse_dim", "rank"] = "coarse_dim"
    values: tuple[str, ...] = ()
    trials: int = 50
    threshold: Optional[float] = None
    reference_iters: int = 200

    def __post_init__(self):
        if self.sweep not in ("coarse_dim", "rank"):
            raise ConfigError("sweep", f"can sweep 'coarse_dim' or 'rank', got '{self.sweep}'", "escape")
        if self.trials < 1:
            raise ConfigError("trials", f"must be at least 1, got {self.trials}", "escape")


@dataclass(slots=True, frozen=True)
class MethodSpec:
    """A `[method.<label>]` section with its values still as text.

    Sizes can only be resolved once n is known, so the MethodConfig is
    built by `build`.
    """

    label: str
    options: tuple[tuple[str, str], ...] = ()

    @property
    def section(self) -> str:
        return f"method.{self.label}"

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        return dict(self.options).get(key, default)

    def build(self, n: int, m: Optional[int] = None, seed: int = 0, max_iters: Optional[int] = None,
              **overrides: str) -> MethodConfig:
        """Resolves sizes against n (and m) and builds the MethodConfig.

        `seed` and `max_iters` apply unless the section sets them itself.
        """

        values: dict[str, Any] = {"method": self.label, "seed": seed, "label": self.label}
        if max_iters is not None:
            values["max_iters"] = max_iters
        line_search: dict[str, Any] = {}
        options = dict(self.options) | overrides
        for key, text in options.items():
            if key in _LINE_SEARCH_KEYS:
                line_search[key] = _convert(_LINE_SEARCH_KEYS[key], text, key, self.section)
                continue
            converter = _METHOD_KEYS[key]
            if converter == _SIZE:
                values[key] = parse_size(text, n, m, key)
            else:
                values[key] = _convert(converter, text, key, self.section)
        try:
            if line_search:
                values["line_search"] = LineSearchConfig(**line_search)
            return MethodConfig(**values)
        except ConfigError as exc:
            raise ConfigError(exc.field, str(exc).split(": ", 1)[-1], self.section) from None


@dataclass(slots=True, frozen=True)
class ExperimentConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    escape: EscapeConfig = field(default_factory=EscapeConfig)
    methods: tuple[MethodSpec, ...] = ()

    def method(self, label: str) -> MethodSpec:
        for spec in self.methods:
            if spec.label == label:
                return spec
        raise ConfigError("method", f"no [method.{label}] section", "escape")

    def with_overrides(self, out: Optional[str] = None, seed: Optional[int] = None) -> "ExperimentConfig":
        """Applies command-line flags on top of the file."""

        cfg = self
        if out is not None:
            cfg = replace(cfg, output=replace(cfg.output, dir=str(out)))
        if seed is not None:
            cfg = replace(cfg, budget=replace(cfg.budget, seed=seed))
        return cfg

    def snapshot(self) -> str:
        """INI text of the effective configuration, defaults included."""

        parser = configparser.ConfigParser(interpolation=None)
        for name in ("problem", "budget", "output", "escape"):
            section = getattr(self, name)
            parser[name] = {}
            for key in _SECTIONS[name]:
                value = getattr(section, key)
                if value is None:
                    continue
                if isinstance(value, tuple):
                    value = ", ".join(value)
                elif isinstance(value, bool):
                    value = "true" if value else "false"
                parser[name][key] = str(value)
        for spec in self.methods:
            parser[spec.section] = dict(spec.options)
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()


def _convert(converter: Converter, text: str, key: str, section: str) -> Any:
    try:
        return converter(text.strip())
    except ValueError as exc:
        raise ConfigError(key, f"invalid value '{text}' ({exc})", section) from None


def _section_values(parser: configparser.ConfigParser, name: str) -> dict[str, Any]:
    if not parser.has_section(name):
        return {}
    allowed = _SECTIONS[name]
    values = {}
    for key, text in parser.items(name):
        if key not in allowed:
            raise ConfigError(key, "unknown key", name)
        values[key] = _convert(allowed[key], text, key, name)
    return values


def _method_spec(parser: configparser.ConfigParser, section: str) -> MethodSpec:
    label = section.split(".", 1)[1].strip()
    if not label:
        raise ConfigError(section, "method sections need a label, e.g. [method.sigmasvd]")
    options = dict(parser.items(section))
    for key, text in options.items():
        if key not in _METHOD_KEYS and key not in _LINE_SEARCH_KEYS:
            raise ConfigError(key, "unknown key", section)
        if _METHOD_KEYS.get(key) == _SIZE:
            if not (_FRACTION.fullmatch(text) or text.strip().isdigit()):
                raise ConfigError(key, f"expected an integer or a fraction like '0.5n', got '{text}'",
                                  section)
        elif key in _METHOD_KEYS:
            _convert(_METHOD_KEYS[key], text, key, section)
        else:
            _convert(_LINE_SEARCH_KEYS[key], text, key, section)
    method = options.get("method", label)
    if method not in METHODS:
        raise ConfigError("method", f"unknown method '{method}' (choose from {', '.join(METHODS)})",
                          section)
    options["method"] = method
    return MethodSpec(label=label, options=tuple(options.items()))


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parses and validates an experiment file.

    Raises:
        ConfigError: malformed file, unknown section or key, or invalid value.
    """

    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(source, f"malformed file: {exc}") from None

    methods = []
    for section in parser.sections():
        if section.startswith("method."):
            methods.append(_method_spec(parser, section))
        elif section not in _SECTIONS:
            raise ConfigError(section, "unknown section")

    escape = _section_values(parser, "escape")
    if "values" in escape:
        escape["values"] = tuple(v.strip() for v in escape["values"].split(",") if v.strip())

    try:
        return ExperimentConfig(
            problem=ProblemConfig(**_section_values(parser, "problem")),
            budget=BudgetConfig(**_section_values(parser, "budget")),
            output=OutputConfig(**_section_values(parser, "output")),
            escape=EscapeConfig(**escape),
            methods=tuple(methods),
        )
    except TypeError as exc:
        raise ConfigError(source, str(exc)) from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    return parse_config(text, source=str(path))
