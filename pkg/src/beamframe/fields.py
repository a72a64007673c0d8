"""Shared field conventions and analytic edge-field representation.

Local 3-vectors are ordered (i, j, k). On an edge:

* displacement trace  g_e = (u, w, v)
* rotation trace      ω_e = (η, -v', w')
* force               f_e = (c u', -b w''', -a v''')
* moment              m_e = (d η', -a v'', b w'')
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .localbasis import lateral_functions, torsion_functions

FIELDS = ("v", "w", "u", "eta")
LATERAL = ("v", "w")
STIFFNESS = {"v": "a", "w": "b", "u": "c", "eta": "d"}

# (field, derivative order, sign) per local axis
TRACE = {
    "g": (("u", 0, 1.0), ("w", 0, 1.0), ("v", 0, 1.0)),
    "omega": (("eta", 0, 1.0), ("v", 1, -1.0), ("w", 1, 1.0)),
}
# (field, derivative order, sign); multiply by the field stiffness
FLUX = {
    "g": (("u", 1, 1.0), ("w", 3, -1.0), ("v", 3, -1.0)),
    "omega": (("eta", 1, 1.0), ("v", 2, -1.0), ("w", 2, 1.0)),
}


def wavenumber(field: str, lam: float, stiffness: float) -> float:
    """μ = (λ/a)^{1/4} for lateral fields, β = (λ/c)^{1/2} for axial/torsional ones."""
    if field in LATERAL:
        return (lam / stiffness) ** 0.25
    return (lam / stiffness) ** 0.5


def basis_size(field: str) -> int:
    return 4 if field in LATERAL else 2


def basis_row(field: str, k: float, x, order: int, length: float) -> np.ndarray:
    if field in LATERAL:
        return lateral_functions(k, x, order, length)
    return torsion_functions(k, x, order)


@dataclass(frozen=True)
class FieldFunction:
    """An edge field as a combination of the fundamental system of its ODE."""

    field: str
    k: float
    coef: np.ndarray
    length: float

    def __call__(self, x, order: int = 0) -> np.ndarray:
        return basis_row(self.field, self.k, x, order, self.length) @ self.coef

    def scaled(self, factor: complex) -> "FieldFunction":
        return FieldFunction(self.field, self.k, self.coef * factor, self.length)

    def conj(self) -> "FieldFunction":
        return FieldFunction(self.field, self.k, np.conj(self.coef), self.length)

    def l2_squared(self, nodes: int = 0) -> float:
        """∫|f|² over the edge by Gauss-Legendre quadrature."""
        n = nodes or max(32, int(4 * self.k * self.length / np.pi) + 32)
        n = min(n, 2000)
        xg, wg = np.polynomial.legendre.leggauss(n)
        x = 0.5 * self.length * (xg + 1.0)
        return float(0.5 * self.length * np.sum(wg * np.abs(self(x)) ** 2))


def zero_field(field: str, length: float) -> FieldFunction:
    return FieldFunction(field, 1.0, np.zeros(basis_size(field)), length)
