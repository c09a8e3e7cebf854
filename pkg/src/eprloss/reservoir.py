"""
Signal mode coupled to a bank of vacuum reservoir modes.

With real coupling rates ``kappa_j`` the Heisenberg equations for the
amplitudes ``(a, v_1, ..., v_N)`` are linear with an antisymmetric
generator, so the propagator is a rotation. Only the signal and the
supermode ``sum_j kappa_j v_j / g`` take part; every other reservoir
combination is a constant of motion.

Cavity decay is modelled as repeated weak beamsplitter bounces, each one
admixing a fresh, independent vacuum mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BounceChannel",
    "MAX_DENSE_MODES",
    "ReservoirSystem",
    "StepSizeError",
    "VACUUM_VARIANCE",
    "analytic_propagator",
    "coupling_matrix",
    "integrate_propagator",
    "iterated_bounce",
    "orthogonality_defect",
    "single_bounce",
]

# quadrature variance of vacuum, same unit as the fluctuation module
VACUUM_VARIANCE = 0.5

MAX_DENSE_MODES = 4096
MAX_STEP = 0.1  # bound on dt * g for the fixed-step integrator


class StepSizeError(ValueError):
    """The requested integration step violates ``dt * g <= 0.1``."""


def single_bounce(theta: float) -> np.ndarray:
    """Beamsplitter rotation ``[[cos, -sin], [sin, cos]]`` on (signal, vacuum)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class ReservoirSystem:
    """Coupling rates of the signal to ``N`` reservoir modes."""

    kappas: np.ndarray

    def __post_init__(self):
        k = np.array(self.kappas, dtype=float).reshape(-1)
        if k.size < 1:
            raise ValueError("reservoir needs at least one mode")
        if not np.all(np.isfinite(k)):
            raise ValueError("coupling rates must be finite")
        k.setflags(write=False)
        object.__setattr__(self, "kappas", k)

    @classmethod
    def uniform(cls, kappa: float, n: int) -> ReservoirSystem:
        return cls(np.full(int(n), float(kappa)))

    @property
    def n_modes(self) -> int:
        return self.kappas.size

    @property
    def g(self) -> float:
        """Collective coupling rate ``sqrt(sum kappa_j^2)``."""
        k = self.kappas
        if np.all(k == k[0]):
            # uniform couplings: |kappa| sqrt(N) without rounding from the sum
            return abs(float(k[0])) * math.sqrt(k.size)
        return math.sqrt(math.fsum(k ** 2))

    @property
    def supermode(self) -> np.ndarray:
        """Unit vector ``kappa / g`` over the reservoir modes."""
        g = self.g
        if g == 0:
            raise ValueError("supermode undefined for an uncoupled reservoir")
        return self.kappas / g


def coupling_matrix(sys: ReservoirSystem) -> np.ndarray:
    """Generator ``C`` of ``d/dt (a, v_1..v_N) = C (a, v_1..v_N)``."""
    n = sys.n_modes
    c = np.zeros((n + 1, n + 1))
    c[0, 1:] = sys.kappas
    c[1:, 0] = -sys.kappas
    return c


def _check_dense(sys: ReservoirSystem):
    if sys.n_modes > MAX_DENSE_MODES:
        raise ValueError(
            f"dense propagator limited to {MAX_DENSE_MODES} reservoir modes, got {sys.n_modes}"
        )


def integrate_propagator(sys: ReservoirSystem, t: float, dt: float) -> np.ndarray:
    """Propagator at time ``t`` by classical RK4 from the identity.

    The step is shrunk to ``t / ceil(t / dt)`` so the last step lands on ``t``.
    RK4 phase error per step is about ``(g dt)^5 / 120``; pick ``g dt`` near
    0.01 or below when 1e-8 accuracy over a full period is needed.

    Raises
    ------
    StepSizeError
        If ``dt <= 0`` or ``dt * g > 0.1``.
    """
    _check_dense(sys)
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    g = sys.g
    if dt * g > MAX_STEP:
        raise StepSizeError(f"dt*g = {dt * g:.3g} exceeds {MAX_STEP}")
    if t < 0:
        raise ValueError("t must be non-negative")
    m = np.eye(sys.n_modes + 1)
    if t == 0:
        return m
    kappas = sys.kappas

    def rhs(x):
        # C @ x for the arrow-shaped generator, O(N^2) instead of O(N^3)
        out = np.empty_like(x)
        out[0] = kappas @ x[1:]
        out[1:] = -np.outer(kappas, x[0])
        return out

    n_steps = math.ceil(t / dt)
    h = t / n_steps
    for _ in range(n_steps):
        k1 = rhs(m)
        k2 = rhs(m + 0.5 * h * k1)
        k3 = rhs(m + 0.5 * h * k2)
        k4 = rhs(m + h * k3)
        m = m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return m


def analytic_propagator(sys: ReservoirSystem, t: float) -> np.ndarray:
    """Exact propagator: rotation by ``g t`` in the (signal, supermode) plane.

    The signal maps to ``cos(gt) a - sin(gt) V`` and the supermode to
    ``sin(gt) a + cos(gt) V``. An uncoupled reservoir gives the identity.
    """
    _check_dense(sys)
    n = sys.n_modes
    g = sys.g
    m = np.eye(n + 1)
    if g == 0:
        return m
    e = np.zeros(n + 1)
    e[0] = 1.0
    u = np.zeros(n + 1)
    u[1:] = sys.supermode
    c, s = math.cos(g * t), math.sin(g * t)
    m += (c - 1.0) * (np.outer(e, e) + np.outer(u, u))
    m += s * (np.outer(e, u) - np.outer(u, e))
    return m


def orthogonality_defect(m: np.ndarray) -> float:
    """``max |M^T M - I|``; zero for an exact photon-number-preserving map."""
    return float(np.max(np.abs(m.T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True)
class BounceChannel:
    """Intracavity field leaking through a weak mirror once per round trip.

    ``theta`` is the per-bounce mixing angle and ``tau`` the round-trip time.
    """

    theta: float
    tau: float

    def __post_init__(self):
        if not 0 <= self.theta < math.pi / 2:
            raise ValueError(f"bounce angle must lie in [0, pi/2), got {self.theta}")
        if not self.tau > 0:
            raise ValueError(f"round-trip time must be positive, got {self.tau}")

    @property
    def gamma(self) -> float:
        """Energy decay rate ``-2 ln(cos theta) / tau``."""
        return -2.0 * math.log(math.cos(self.theta)) / self.tau


def iterated_bounce(channel: BounceChannel | float, m: int, input_variance: float) -> tuple[float, float]:
    """Amplitude factor and quadrature variance after ``m`` bounces.

    ``channel`` may also be a bare angle; ``pi/2`` (full swap) is allowed
    there although it has no finite decay rate.
    """
    if m < 0:
        raise ValueError("bounce count must be non-negative")
    theta = channel.theta if isinstance(channel, BounceChannel) else float(channel)
    amp = math.cos(theta) ** m
    transmitted = amp * amp
    return amp, input_variance * transmitted + VACUUM_VARIANCE * (1.0 - transmitted)
