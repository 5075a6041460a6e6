"""Minimal unit-tagged scalar for dimensional-analysis tests.

Tracks exponents of SI base dimensions through products, quotients and sums;
adding quantities of different dimension raises.  Only what the transport
dimension check needs.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict


def _norm(dims: Dict[str, Fraction]) -> Dict[str, Fraction]:
    return {k: Fraction(v) for k, v in dims.items() if v != 0}


@dataclass(frozen=True)
class Quantity:
    value: float
    dims: Dict[str, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "dims", _norm(self.dims))

    def __mul__(self, other):
        if isinstance(other, Quantity):
            dims = dict(self.dims)
            for k, v in other.dims.items():
                dims[k] = dims.get(k, Fraction(0)) + v
            return Quantity(self.value * other.value, dims)
        return Quantity(self.value * other, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Quantity):
            dims = dict(self.dims)
            for k, v in other.dims.items():
                dims[k] = dims.get(k, Fraction(0)) - v
            return Quantity(self.value / other.value, dims)
        return Quantity(self.value / other, self.dims)

    def __add__(self, other):
        if not isinstance(other, Quantity) or _norm(other.dims) != self.dims:
            raise TypeError(f"dimension mismatch: {self.dims} + "
                            f"{getattr(other, 'dims', 'scalar')}")
        return Quantity(self.value + other.value, self.dims)

    def __neg__(self):
        return Quantity(-self.value, self.dims)

    def same_dims(self, other) -> bool:
        return self.dims == _norm(other.dims)


def unit(value: float, **dims) -> Quantity:
    return Quantity(value, {k: Fraction(v) for k, v in dims.items()})
