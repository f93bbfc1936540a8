"""ReLU^k neuron dictionary on the unit interval and greedy argmax selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Final

import numpy as np

from frac_oga.errors import ConfigError, InputError, Stagnation
from frac_oga.numerics.fracop import Grid

_log = logging.getLogger("frac_oga.dictionary")

OMEGAS: Final[tuple[int, int]] = (1, -1)
SUPPORTED_POWERS: Final[tuple[int, ...]] = (1, 2)

DEFAULT_BIAS_RANGE: Final[tuple[float, float]] = (-1.1, 1.1)
DEFAULT_BIAS_SAMPLES: Final[int] = 2049

# Candidate columns scored per block; bounds the temporary evaluation matrix.
_SCORE_BLOCK: Final[int] = 512


def _relu_power(z: np.ndarray | float, power: int) -> np.ndarray:
    return np.maximum(z, 0.0) ** power


def _relu_power_deriv(z: np.ndarray | float, power: int) -> np.ndarray:
    zz = np.asarray(z, dtype=np.float64)
    if power == 1:
        return np.where(zz > 0.0, 1.0, 0.0)
    return np.where(zz > 0.0, power * np.maximum(zz, 0.0) ** (power - 1), 0.0)


@dataclass(frozen=True)
class Neuron:
    """sigma_k(omega * x + bias) with omega in {-1, +1}."""

    omega: int
    bias: float
    power: int

    def __post_init__(self) -> None:
        if self.omega not in OMEGAS:
            raise ConfigError("omega", f"must be +1 or -1, got {self.omega!r}")
        if self.power not in SUPPORTED_POWERS:
            raise ConfigError("relu_power", f"must be one of {SUPPORTED_POWERS}, got {self.power!r}")

    def eval(self, x: np.ndarray | float) -> np.ndarray | float:
        out = _relu_power(self.omega * np.asarray(x, dtype=np.float64) + self.bias, self.power)
        return float(out) if np.ndim(out) == 0 else out

    def deriv(self, x: np.ndarray | float) -> np.ndarray | float:
        # The kink omega*x + b = 0 gets derivative 0.
        z = self.omega * np.asarray(x, dtype=np.float64) + self.bias
        out = self.omega * _relu_power_deriv(z, self.power)
        return float(out) if np.ndim(out) == 0 else out


def eval_on_grid(neuron: Neuron, grid: Grid) -> np.ndarray:
    return np.asarray(neuron.eval(grid.interior_points), dtype=np.float64)


def deriv_on_grid(neuron: Neuron, grid: Grid) -> np.ndarray:
    return np.asarray(neuron.deriv(grid.interior_points), dtype=np.float64)


@dataclass(frozen=True)
class DictionaryGrid:
    """Finite sample of the ReLU^k dictionary.

    Candidate index order: all omega=+1 biases ascending, then all omega=-1
    biases ascending.
    """

    bias_lo: float = DEFAULT_BIAS_RANGE[0]
    bias_hi: float = DEFAULT_BIAS_RANGE[1]
    bias_samples: int = DEFAULT_BIAS_SAMPLES
    power: int = 1

    def __post_init__(self) -> None:
        # Strict containment of omega*x for x in [0, 1], omega = +-1.
        if not float(self.bias_lo) < -1.0:
            raise ConfigError("bias_range", f"lower bound must be < -1, got {self.bias_lo}")
        if not float(self.bias_hi) > 1.0:
            raise ConfigError("bias_range", f"upper bound must be > 1, got {self.bias_hi}")
        if int(self.bias_samples) < 2:
            raise ConfigError("bias_samples", f"must be >= 2, got {self.bias_samples}")
        if self.power not in SUPPORTED_POWERS:
            raise ConfigError("relu_power", f"must be one of {SUPPORTED_POWERS}, got {self.power!r}")

    @cached_property
    def biases(self) -> np.ndarray:
        p = int(self.bias_samples)
        i = np.arange(p, dtype=np.float64)
        b = self.bias_lo + i * (self.bias_hi - self.bias_lo) / (p - 1)
        b.flags.writeable = False
        return b

    @cached_property
    def _omega_column(self) -> np.ndarray:
        return np.repeat(np.asarray(OMEGAS, dtype=np.float64), int(self.bias_samples))

    @cached_property
    def _bias_column(self) -> np.ndarray:
        return np.tile(self.biases, len(OMEGAS))

    def __len__(self) -> int:
        return len(OMEGAS) * int(self.bias_samples)

    def neuron(self, index: int) -> Neuron:
        if not 0 <= index < len(self):
            raise InputError(f"candidate index {index} outside [0, {len(self)})")
        omega_idx, bias_idx = divmod(int(index), int(self.bias_samples))
        return Neuron(omega=OMEGAS[omega_idx], bias=float(self.biases[bias_idx]), power=self.power)

    def evaluate_block(self, x: np.ndarray, start: int, stop: int) -> np.ndarray:
        """Evaluations of candidates [start, stop) at nodes x, shape (len(x), stop-start)."""
        omega = self._omega_column[start:stop]
        bias = self._bias_column[start:stop]
        return _relu_power(np.outer(x, omega) + bias, self.power)


@dataclass(frozen=True)
class Selection:
    neuron: Neuron
    index: int
    score: float


def select(
    candidates: DictionaryGrid,
    residual: np.ndarray,
    grid: Grid,
    *,
    block: int = _SCORE_BLOCK,
) -> Selection:
    """Candidate maximizing |sum_j residual_j * g(x_j)|; lowest index wins ties.

    Raises Stagnation when every score is exactly zero.
    """
    r = np.asarray(residual, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] != grid.size:
        raise InputError(f"residual length {r.shape} does not match {grid.size} interior nodes")
    total = len(candidates)
    if total == 0:
        raise InputError("candidate set is empty")

    x = grid.interior_points
    best_index = -1
    best_abs = -1.0
    best_score = 0.0
    for start in range(0, total, max(1, int(block))):
        stop = min(total, start + max(1, int(block)))
        scores = r @ candidates.evaluate_block(x, start, stop)
        local = int(np.argmax(np.abs(scores)))
        local_abs = float(abs(scores[local]))
        # Strict comparison keeps the earliest block on ties.
        if local_abs > best_abs:
            best_abs = local_abs
            best_index = start + local
            best_score = float(scores[local])

    if best_abs == 0.0:
        raise Stagnation("all dictionary scores are zero against the current residual")

    neuron = candidates.neuron(best_index)
    _log.debug(
        "selected index=%d omega=%d bias=%.6f score=%.6e",
        best_index,
        neuron.omega,
        neuron.bias,
        best_score,
    )
    return Selection(neuron=neuron, index=best_index, score=best_score)
