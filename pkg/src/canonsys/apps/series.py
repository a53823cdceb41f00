"""Truncated Fourier series for scalar or vector periodic parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FourierSeries:
    """``f(t) = a0 + sum_k [a_k cos(2 pi k t / p) + b_k sin(2 pi k t / p)]``.

    ``a0`` may be a scalar or a vector; every harmonic coefficient must have
    the same shape.
    """

    a0: object
    period: float
    cos: tuple = field(default_factory=tuple)
    sin: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "cos", tuple(self.cos))
        object.__setattr__(self, "sin", tuple(self.sin))

    @classmethod
    def constant(cls, value, period: float = 1.0) -> "FourierSeries":
        return cls(value, period)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a0 = np.asarray(self.a0, dtype=float)
        out = np.zeros(t.shape + a0.shape) + a0
        w = 2 * np.pi / self.period
        for k, c in enumerate(self.cos, start=1):
            out = out + np.multiply.outer(np.cos(k * w * t), np.asarray(c, dtype=float))
        for k, s in enumerate(self.sin, start=1):
            out = out + np.multiply.outer(np.sin(k * w * t), np.asarray(s, dtype=float))
        return out

    @property
    def is_constant(self) -> bool:
        return not any(np.any(np.asarray(c) != 0) for c in self.cos + self.sin)

    def to_dict(self) -> dict:
        def conv(x):
            x = np.asarray(x, dtype=float)
            return x.tolist() if x.ndim else float(x)

        return {
            "a0": conv(self.a0),
            "cos": [conv(c) for c in self.cos],
            "sin": [conv(s) for s in self.sin],
        }
