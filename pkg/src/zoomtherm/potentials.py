"""Potentials on the phase space: geometric, constant and user-supplied."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dynamics import MapModel
from .errors import ConfigError


@dataclass(frozen=True)
class PotentialSpec:
    """``phi - shift`` for one of the supported kinds.

    ``geometric`` is ``-t log J`` with ``J`` the reference Jacobian and the
    value ``0`` wherever ``J = 0``; ``zero`` and ``constant`` are what they
    say; ``hoelder`` wraps a vectorised callable whose hyperbolicity is the
    caller's assertion.
    """

    kind: str = "zero"
    t: float = 0.0
    value: float = 0.0
    func: Callable | None = None
    hyperbolic_asserted: bool = False
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("geometric", "zero", "constant", "hoelder"):
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if self.kind == "hoelder" and self.func is None:
            raise ConfigError("hoelder potentials need a callable")

    @classmethod
    def geometric(cls, t: float) -> PotentialSpec:
        return cls(kind="geometric", t=float(t))

    @classmethod
    def constant(cls, c: float) -> PotentialSpec:
        return cls(kind="constant", value=float(c))

    @classmethod
    def parse(cls, text: str) -> PotentialSpec:
        """``zero``, ``geometric:t=<v>`` or ``constant:c=<v>``."""
        text = text.strip()
        if text == "zero":
            return cls()
        head, _, rest = text.partition(":")
        key, _, val = rest.partition("=")
        try:
            num = float(val)
        except ValueError:
            raise ConfigError(f"cannot parse potential {text!r}") from None
        if head == "geometric" and key == "t":
            return cls.geometric(num)
        if head == "constant" and key == "c":
            return cls.constant(num)
        raise ConfigError(f"cannot parse potential {text!r}")

    def shifted(self, p: float) -> PotentialSpec:
        return replace(self, shift=self.shift + float(p))

    @property
    def label(self) -> str:
        if self.kind == "geometric":
            return f"geometric:t={self.t:g}"
        if self.kind == "constant":
            return f"constant:c={self.value:g}"
        return self.kind

    def evaluate(self, fmap: MapModel, x) -> tuple[np.ndarray, np.ndarray]:
        """Values at ``x`` and a mask of points where the zero-Jacobian convention applied."""
        x = np.asarray(x, dtype=float)
        flagged = np.zeros(x.shape, dtype=bool)
        if self.kind == "zero":
            vals = np.zeros(x.shape)
        elif self.kind == "constant":
            vals = np.full(x.shape, self.value)
        elif self.kind == "geometric":
            jac = np.asarray(fmap.jacobian(x), dtype=float)
            zero = jac <= 0
            with np.errstate(divide="ignore"):
                vals = np.where(zero, 0.0, -self.t * np.log(np.where(zero, 1.0, jac)))
            flagged = zero & (self.t != 0)
        else:
            vals = np.asarray(self.func(x), dtype=float)
        return vals - self.shift, flagged

    def __call__(self, fmap: MapModel, x):
        return self.evaluate(fmap, x)[0]
