"""Physical unit constants. Natural units hbar = m = 1 by default."""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Units:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")

    @property
    def bohm_coefficient(self) -> float:
        """The canonical amplitude-ratio coefficient -hbar**2 / (2 m)."""
        return -self.hbar**2 / (2.0 * self.mass)

    @property
    def planck(self) -> float:
        return 2.0 * math.pi * self.hbar
