"""Sampled (time, signal) traces, the common carrier for all measured data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError

MIN_SAMPLES = 4


@dataclass(frozen=True)
class TimeSeries:
    """A detector trace: strictly increasing times, finite signal.

    At least four samples are required, the minimum to fit the
    four-parameter symmetric peak model.
    """

    times: np.ndarray
    signal: np.ndarray

    def __post_init__(self) -> None:
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        signal = np.atleast_1d(np.asarray(self.signal, dtype=float))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "signal", signal)
        if times.ndim != 1 or signal.shape != times.shape:
            raise InvalidSpecError("times and signal must be 1-D and equally long")
        if times.size < MIN_SAMPLES:
            raise InvalidSpecError(f"need at least {MIN_SAMPLES} samples, got {times.size}")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(signal)):
            raise InvalidSpecError("times and signal must be finite")
        if not np.all(np.diff(times) > 0.0):
            raise InvalidSpecError("times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])
