"""
Linearized Hermitian fluctuation operators over independent vacuum modes.

An operator is stored as a sparse map ``mode -> w`` and stands for

    X = sum_j (w_j da_j + conj(w_j) da_j^dagger)

where every ``da_j`` is an independent vacuum fluctuation with
``<da da^dagger> = 1``. With this convention the variance of ``X`` is
``sum_j |w_j|^2``, a vacuum quadrature has variance 1/2 and a coherent
beam of mean amplitude ``gamma`` has photon-number variance ``|gamma|^2``.

Transformations (squeezing, phase shifts) are Heisenberg-picture
substitutions on the coefficients: the operator is rewritten in terms of
the vacuum modes that generate the transformed field.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

__all__ = [
    "FluctuationOperator",
    "InvalidModePair",
    "covariance",
    "linear_combine",
    "phase_shift",
    "quadrature",
    "single_mode_squeeze",
    "two_mode_squeeze",
    "variance",
]

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class InvalidModePair(ValueError):
    """Raised when a two-mode transformation is given the same mode twice."""


def _freeze(coefficients: Mapping[int, complex]) -> Mapping[int, complex]:
    cleaned = {}
    for mode, w in coefficients.items():
        mode = int(mode)
        if mode < 0:
            raise ValueError(f"mode index must be non-negative, got {mode}")
        w = complex(w)
        if w != 0:
            cleaned[mode] = w
    return MappingProxyType(dict(sorted(cleaned.items())))


@dataclass(frozen=True, eq=False)
class FluctuationOperator:
    """Hermitian linear fluctuation, ``sum_j w_j da_j + h.c.``.

    Exact zeros are dropped on construction, so the empty operator is the
    unique representation of zero.
    """

    coefficients: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _freeze(self.coefficients))

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(self.coefficients)

    def coefficient(self, mode: int) -> complex:
        return self.coefficients.get(mode, 0j)

    def __eq__(self, other):
        if not isinstance(other, FluctuationOperator):
            return NotImplemented
        return dict(self.coefficients) == dict(other.coefficients)

    __hash__ = None

    def __add__(self, other: FluctuationOperator) -> FluctuationOperator:
        return linear_combine([(1.0, self), (1.0, other)])

    def __sub__(self, other: FluctuationOperator) -> FluctuationOperator:
        return linear_combine([(1.0, self), (-1.0, other)])

    def __neg__(self) -> FluctuationOperator:
        return linear_combine([(-1.0, self)])

    def __mul__(self, a: float) -> FluctuationOperator:
        return linear_combine([(a, self)])

    __rmul__ = __mul__

    def __repr__(self):
        body = ", ".join(f"{m}: {w:.6g}" for m, w in self.coefficients.items())
        return f"FluctuationOperator({{{body}}})"


def quadrature(mode: int, theta: float) -> FluctuationOperator:
    """Generalized quadrature ``(da e^{-i theta} + da^dagger e^{i theta}) / sqrt(2)``.

    ``theta = 0`` is the amplitude quadrature, ``theta = pi/2`` the phase
    quadrature. Its vacuum variance is 1/2.
    """
    return FluctuationOperator({mode: _SQRT_HALF * cmath.exp(-1j * theta)})


def linear_combine(terms: Iterable[tuple[float, FluctuationOperator]]) -> FluctuationOperator:
    """Real-weighted sum of operators.

    Complex weights are refused because they would break Hermiticity.
    """
    acc: dict[int, complex] = {}
    for a, x in terms:
        if isinstance(a, complex):
            if a.imag != 0:
                raise TypeError("linear_combine accepts real coefficients only")
            a = a.real
        a = float(a)
        for mode, w in x.coefficients.items():
            acc[mode] = acc.get(mode, 0j) + a * w
    return FluctuationOperator(acc)


def variance(x: FluctuationOperator) -> float:
    """Vacuum expectation ``<X^2>``, equal to ``sum_j |w_j|^2``."""
    return math.fsum(w.real * w.real + w.imag * w.imag for w in x.coefficients.values())


def covariance(x: FluctuationOperator, y: FluctuationOperator) -> float:
    """Symmetrized covariance ``<XY + YX>/2 = sum_j Re(w_j conj(v_j))``."""
    terms = []
    for mode, w in x.coefficients.items():
        v = y.coefficients.get(mode)
        if v is not None:
            terms.append(w.real * v.real + w.imag * v.imag)
    return math.fsum(terms)


def two_mode_squeeze(x: FluctuationOperator, pair: tuple[int, int], r: float) -> FluctuationOperator:
    """Substitute two-mode squeezed fields for the vacuum pair.

    Uses ``db_1 = cosh(r) da_1 + sinh(r) da_2^dagger`` and its mirror image,
    so that the amplitude difference and phase sum of the pair are reduced
    by ``e^{-r}``. ``r`` may be negative (inverse transformation).

    Raises
    ------
    InvalidModePair
        If both entries of ``pair`` name the same mode.
    """
    m1, m2 = pair
    if m1 == m2:
        raise InvalidModePair(f"two-mode squeezing needs distinct modes, got ({m1}, {m2})")
    if not math.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    c, s = math.cosh(r), math.sinh(r)
    w1, w2 = x.coefficient(m1), x.coefficient(m2)
    coeffs = dict(x.coefficients)
    coeffs[m1] = w1 * c + w2.conjugate() * s
    coeffs[m2] = w2 * c + w1.conjugate() * s
    return FluctuationOperator(coeffs)


def single_mode_squeeze(x: FluctuationOperator, mode: int, r: float, psi: float) -> FluctuationOperator:
    """Substitute a single-mode squeezed field for one vacuum mode.

    ``w -> w cosh(r) + conj(w) e^{-i psi} sinh(r)``. With ``psi = pi`` the
    amplitude quadrature is squeezed to variance ``e^{-2r}/2`` and the phase
    quadrature stretched to ``e^{2r}/2``.
    """
    if not math.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    w = x.coefficient(mode)
    coeffs = dict(x.coefficients)
    coeffs[mode] = w * math.cosh(r) + w.conjugate() * cmath.exp(-1j * psi) * math.sinh(r)
    return FluctuationOperator(coeffs)


def phase_shift(x: FluctuationOperator, mode: int, phi: float) -> FluctuationOperator:
    """Propagate the field of ``mode`` through a phase shifter ``e^{i phi}``.

    ``quadrature(m, theta)`` becomes ``quadrature(m, theta + phi)``.
    """
    w = x.coefficient(mode)
    if w == 0:
        return x
    coeffs = dict(x.coefficients)
    coeffs[mode] = w * cmath.exp(-1j * phi)
    return FluctuationOperator(coeffs)
