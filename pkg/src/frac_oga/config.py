"""Experiment and sweep configuration.

Configs are flat text files with one `key = value` pair per line, `#` comments
and comma-separated lists, e.g.:

    alpha = 1.5
    relu_power = 2
    grid_intervals = 1000
    checkpoints = 2, 4, 8, 16, 32

Every field has a default; serialization writes all of them in a fixed order.
`grid_intervals` counts intervals, so the default of 100 gives 99 interior nodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Final, Iterator

from frac_oga.errors import ConfigError
from frac_oga.export.tables import OUTPUT_FORMATS, atomic_write_bytes, table_filename
from frac_oga.numerics.dictionary import DEFAULT_BIAS_RANGE, DEFAULT_BIAS_SAMPLES, DictionaryGrid
from frac_oga.numerics.fracop import FractionalOrder, Grid
from frac_oga.numerics.metrics import NormWeighting
from frac_oga.numerics.oga import DEFAULT_CONDITION_THRESHOLD, SolveConfig

FORMAT_ALIASES: Final[dict[str, str]] = {"csv": "csv", "md": "markdown", "markdown": "markdown"}


def _parse_float(name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(name, f"expected a number, got {raw!r}") from None


def _parse_int(name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(name, f"expected an integer, got {raw!r}") from None


def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _parse_float_list(name: str, raw: str) -> tuple[float, ...]:
    return tuple(_parse_float(name, part) for part in _split_list(raw))


def parse_int_list(name: str, raw: str) -> tuple[int, ...]:
    return tuple(_parse_int(name, part) for part in _split_list(raw))


def _parse_bias_range(name: str, raw: str) -> tuple[float, float]:
    values = _parse_float_list(name, raw)
    if len(values) != 2:
        raise ConfigError(name, f"expected two comma-separated numbers, got {raw!r}")
    return values[0], values[1]


def _parse_weighting(name: str, raw: str) -> str:
    try:
        return NormWeighting(raw).value
    except ValueError:
        choices = ", ".join(w.value for w in NormWeighting)
        raise ConfigError(name, f"expected one of {choices}, got {raw!r}") from None


def _parse_format(name: str, raw: str) -> str:
    fmt = FORMAT_ALIASES.get(raw.lower())
    if fmt is None:
        raise ConfigError(name, f"expected csv or markdown, got {raw!r}")
    return fmt


def _parse_str(name: str, raw: str) -> str:
    if not raw:
        raise ConfigError(name, "must not be empty")
    return raw


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_list(values: tuple[Any, ...], fmt: Callable[[Any], str] = str) -> str:
    return ", ".join(fmt(v) for v in values)


_Parser = Callable[[str, str], Any]
_Formatter = Callable[[Any], str]

# Shared between ExperimentConfig and SweepConfig.
_COMMON_FIELDS: Final[dict[str, tuple[_Parser, _Formatter]]] = {
    "max_neurons": (_parse_int, str),
    "bias_range": (_parse_bias_range, lambda v: _fmt_list(v, _fmt_float)),
    "bias_samples": (_parse_int, str),
    "checkpoints": (parse_int_list, _fmt_list),
    "norm_weighting": (_parse_weighting, str),
    "condition_threshold": (_parse_float, _fmt_float),
    "output_format": (_parse_format, str),
}

_EXPERIMENT_FIELDS: Final[dict[str, tuple[_Parser, _Formatter]]] = {
    "alpha": (_parse_float, _fmt_float),
    "relu_power": (_parse_int, str),
    "grid_intervals": (_parse_int, str),
    **_COMMON_FIELDS,
    "output_path": (_parse_str, str),
}

_SWEEP_FIELDS: Final[dict[str, tuple[_Parser, _Formatter]]] = {
    "alphas": (_parse_float_list, lambda v: _fmt_list(v, _fmt_float)),
    "relu_powers": (parse_int_list, _fmt_list),
    "grid_intervals": (parse_int_list, _fmt_list),
    **_COMMON_FIELDS,
    "workers": (_parse_int, str),
}


def parse_pairs(text: str) -> dict[str, str]:
    """Raw `key = value` pairs; rejects malformed lines and repeated keys."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError("config", f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        if key in pairs:
            raise ConfigError(key, f"line {lineno}: duplicate key")
        pairs[key] = value.strip()
    return pairs


def _parse_fields(text: str, table: dict[str, tuple[_Parser, _Formatter]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, raw in parse_pairs(text).items():
        if key not in table:
            raise ConfigError(key, f"unknown key; expected one of {', '.join(table)}")
        out[key] = table[key][0](key, raw)
    return out


def _render_fields(obj: Any, table: dict[str, tuple[_Parser, _Formatter]]) -> str:
    lines = []
    for key, (_, fmt) in table.items():
        value = getattr(obj, key)
        lines.append(f"{key} = {fmt(value)}".rstrip())
    return "\n".join(lines) + "\n"


def _read_config_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from None


def _check_common(cfg: "ExperimentConfig | SweepConfig") -> None:
    if cfg.max_neurons < 1:
        raise ConfigError("max_neurons", f"must be >= 1, got {cfg.max_neurons}")
    if cfg.output_format not in OUTPUT_FORMATS:
        raise ConfigError("output_format", f"expected csv or markdown, got {cfg.output_format!r}")
    _parse_weighting("norm_weighting", str(cfg.norm_weighting))
    DictionaryGrid(bias_lo=cfg.bias_range[0], bias_hi=cfg.bias_range[1], bias_samples=cfg.bias_samples)


@dataclass(frozen=True)
class ExperimentConfig:
    """One OGA run: a single (alpha, k, M) cell."""

    alpha: float = 2.0
    relu_power: int = 1
    grid_intervals: int = 100
    max_neurons: int = 64
    bias_range: tuple[float, float] = DEFAULT_BIAS_RANGE
    bias_samples: int = DEFAULT_BIAS_SAMPLES
    # Empty means powers of two 2..max_neurons.
    checkpoints: tuple[int, ...] = ()
    norm_weighting: str = NormWeighting.RAW.value
    condition_threshold: float = DEFAULT_CONDITION_THRESHOLD
    output_path: str = "table.csv"
    output_format: str = "csv"

    def validate(self) -> "ExperimentConfig":
        _check_common(self)
        self.to_solve_config()
        return self

    def to_solve_config(self) -> SolveConfig:
        return SolveConfig(
            order=FractionalOrder(self.alpha),
            grid=Grid(self.grid_intervals),
            dictionary=DictionaryGrid(
                bias_lo=self.bias_range[0],
                bias_hi=self.bias_range[1],
                bias_samples=self.bias_samples,
                power=self.relu_power,
            ),
            max_neurons=self.max_neurons,
            checkpoints=self.checkpoints,
            condition_threshold=self.condition_threshold,
            weighting=NormWeighting(self.norm_weighting),
        )

    def to_text(self) -> str:
        return _render_fields(self, _EXPERIMENT_FIELDS)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls(**_parse_fields(text, _EXPERIMENT_FIELDS)).validate()

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        return cls.from_text(_read_config_text(path))

    def save(self, path: Path) -> None:
        atomic_write_bytes(Path(path), self.to_text().encode("utf-8"))


@dataclass(frozen=True)
class SweepConfig:
    """Cartesian product of alphas x relu_powers x grid_intervals."""

    alphas: tuple[float, ...] = (2.0, 1.5, 0.5)
    relu_powers: tuple[int, ...] = (1, 2)
    grid_intervals: tuple[int, ...] = (100, 500, 1000)
    max_neurons: int = 64
    bias_range: tuple[float, float] = DEFAULT_BIAS_RANGE
    bias_samples: int = DEFAULT_BIAS_SAMPLES
    checkpoints: tuple[int, ...] = ()
    norm_weighting: str = NormWeighting.RAW.value
    condition_threshold: float = DEFAULT_CONDITION_THRESHOLD
    output_format: str = "csv"
    workers: int = 1

    def validate(self) -> "SweepConfig":
        for name in ("alphas", "relu_powers", "grid_intervals"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(name, "must list at least one value")
            if len(set(values)) != len(values):
                raise ConfigError(name, f"contains repeated values: {_fmt_list(values)}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        _check_common(self)
        for cell in self.cells():
            self.experiment(*cell).validate()
        return self

    def cells(self) -> Iterator[tuple[float, int, int]]:
        """(alpha, relu_power, grid_intervals) in a fixed nested order."""
        return itertools.product(self.alphas, self.relu_powers, self.grid_intervals)

    def experiment(self, alpha: float, relu_power: int, grid_intervals: int) -> ExperimentConfig:
        return ExperimentConfig(
            alpha=float(alpha),
            relu_power=int(relu_power),
            grid_intervals=int(grid_intervals),
            max_neurons=self.max_neurons,
            bias_range=self.bias_range,
            bias_samples=self.bias_samples,
            checkpoints=self.checkpoints,
            norm_weighting=self.norm_weighting,
            condition_threshold=self.condition_threshold,
            output_path=table_filename(alpha, relu_power, grid_intervals, self.output_format),
            output_format=self.output_format,
        )

    def to_text(self) -> str:
        return _render_fields(self, _SWEEP_FIELDS)

    @classmethod
    def from_text(cls, text: str) -> "SweepConfig":
        return cls(**_parse_fields(text, _SWEEP_FIELDS)).validate()

    @classmethod
    def load(cls, path: Path) -> "SweepConfig":
        return cls.from_text(_read_config_text(path))

    def save(self, path: Path) -> None:
        atomic_write_bytes(Path(path), self.to_text().encode("utf-8"))
