"""
Two EPR pairs interfering on two 50% beamsplitters.

Pair (b1, b2) carries two-mode squeezing ``r`` and mean amplitude ``beta1``;
pair (b3, b4) carries ``s`` and ``beta3``. Beamsplitter 1 mixes b1 with b4,
beamsplitter 2 mixes b2 with b3, and only one output of each is detected:

    c1 = (b1 e^{i phi1} + b4 e^{i phi4}) / sqrt(2)
    c2 = (b2 e^{i phi2} + b3 e^{i phi3}) / sqrt(2)

The detected signal is the linearized photon-number difference
``d(N1 - N2)``. Vacuum input modes a1..a4 carry mode ids 1..4.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .fluctuation import (
    FluctuationOperator,
    linear_combine,
    quadrature,
    single_mode_squeeze,
    two_mode_squeeze,
    variance,
)

__all__ = [
    "ExperimentConfig",
    "InputKind",
    "NoiseResult",
    "PhaseTableRow",
    "DiscriminationReport",
    "ScanResult",
    "SqueezeLabel",
    "UnsupportedConfiguration",
    "build_number_difference",
    "classical_fringes",
    "closed_form_shot_noise",
    "closed_form_variance",
    "epr_discrimination",
    "noise_result",
    "noise_spectrum",
    "phase_scan",
    "shot_noise_floor",
    "special_phase_table",
    "spectral_squeezing",
]

MODES_12 = (1, 2)
MODES_34 = (3, 4)

# psi = pi squeezes the amplitude quadrature
AMPLITUDE_SQUEEZE_ANGLE = math.pi

# relative dark-fringe guard on the shot noise
SHOT_NOISE_EPS = 1e-9


class UnsupportedConfiguration(ValueError):
    """The requested evaluation is not defined for this configuration."""


class InputKind(enum.Enum):
    EPR = "EPR"
    SINGLE_MODE_AMPLITUDE_SQUEEZED = "SINGLE_MODE_AMPLITUDE_SQUEEZED"
    VACUUM = "VACUUM"

    @classmethod
    def parse(cls, text: str) -> InputKind:
        key = text.strip().upper().replace("-", "_")
        aliases = {"SINGLE": "SINGLE_MODE_AMPLITUDE_SQUEEZED", "SMS": "SINGLE_MODE_AMPLITUDE_SQUEEZED"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown input kind {text!r} (expected one of {valid})") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of the two-pair interference experiment.

    ``beta1`` is the mean amplitude of both b1 and b2, ``beta3`` that of both
    b3 and b4. A VACUUM pair has its amplitude and squeezing forced to zero.
    """

    r: float = 0.0
    s: float = 0.0
    beta1: float = 1.0
    beta3: float = 1.0
    phi1: float = 0.0
    phi2: float = 0.0
    phi3: float = 0.0
    phi4: float = 0.0
    kind_12: InputKind = InputKind.EPR
    kind_34: InputKind = InputKind.EPR

    def __post_init__(self):
        for name in ("r", "s", "beta1", "beta3", "phi1", "phi2", "phi3", "phi4"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        for name in ("r", "s", "beta1", "beta3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        for name in ("kind_12", "kind_34"):
            kind = getattr(self, name)
            if not isinstance(kind, InputKind):
                object.__setattr__(self, name, InputKind.parse(str(kind)))
        if self.kind_12 is InputKind.VACUUM:
            object.__setattr__(self, "r", 0.0)
            object.__setattr__(self, "beta1", 0.0)
        if self.kind_34 is InputKind.VACUUM:
            object.__setattr__(self, "s", 0.0)
            object.__setattr__(self, "beta3", 0.0)

    @property
    def phi14(self) -> float:
        return self.phi1 - self.phi4

    @property
    def phi23(self) -> float:
        return self.phi2 - self.phi3

    def with_relative_phases(self, phi14: float, phi23: float) -> ExperimentConfig:
        """Copy with the given relative phases, keeping phi2 and phi4 fixed."""
        return replace(self, phi1=self.phi4 + phi14, phi3=self.phi2 - phi23)


@dataclass(frozen=True)
class NoiseResult:
    """Noise of the number difference; ``ratio``/``db`` are None when undefined."""

    variance: float
    shot_noise: float
    ratio: float | None
    db: float | None

    @property
    def defined(self) -> bool:
        return self.ratio is not None


def classical_fringes(cfg: ExperimentConfig) -> tuple[float, float]:
    """Mean photon fluxes ``(n1, n2)`` at the two detected outputs."""
    b1, b3 = cfg.beta1, cfg.beta3
    mean = 0.5 * (b1 * b1 + b3 * b3)
    return mean + b1 * b3 * math.cos(cfg.phi14), mean + b1 * b3 * math.cos(cfg.phi23)


def _input_transform(x: FluctuationOperator, pair, kind: InputKind, r: float) -> FluctuationOperator:
    if kind is InputKind.EPR:
        return two_mode_squeeze(x, pair, r)
    if kind is InputKind.SINGLE_MODE_AMPLITUDE_SQUEEZED:
        for mode in pair:
            x = single_mode_squeeze(x, mode, r, AMPLITUDE_SQUEEZE_ANGLE)
        return x
    return x


def build_number_difference(cfg: ExperimentConfig) -> FluctuationOperator:
    """Linearized ``d(N1 - N2)`` expressed over the vacuum inputs a1..a4.

    The output fluctuation is first written in terms of the input-field
    quadratures ``dB^(j)``,

        beta1/sqrt2 (dB1_0 - dB2_0 - dB3_{phi23} + dB4_{phi14})
      + beta3/sqrt2 (dB1_{-phi14} - dB2_{-phi23} - dB3_0 + dB4_0),

    and each input pair is then replaced by its generating transformation
    (two-mode squeezing, single-mode amplitude squeezing or nothing).
    """
    b1, b3 = cfg.beta1, cfg.beta3
    p14, p23 = cfg.phi14, cfg.phi23
    k1 = b1 / math.sqrt(2.0)
    k3 = b3 / math.sqrt(2.0)
    x = linear_combine([
        (k1, quadrature(1, 0.0)),
        (-k1, quadrature(2, 0.0)),
        (-k1, quadrature(3, p23)),
        (k1, quadrature(4, p14)),
        (k3, quadrature(1, -p14)),
        (-k3, quadrature(2, -p23)),
        (-k3, quadrature(3, 0.0)),
        (k3, quadrature(4, 0.0)),
    ])
    x = _input_transform(x, MODES_12, cfg.kind_12, cfg.r)
    x = _input_transform(x, MODES_34, cfg.kind_34, cfg.s)
    return x


def closed_form_variance(cfg: ExperimentConfig) -> float:
    """Analytic ``V(N1 - N2)`` for two EPR inputs.

    Raises
    ------
    UnsupportedConfiguration
        If either pair is not an EPR input.
    """
    if cfg.kind_12 is not InputKind.EPR or cfg.kind_34 is not InputKind.EPR:
        raise UnsupportedConfiguration(
            f"closed form assumes EPR inputs, got {cfg.kind_12.value}/{cfg.kind_34.value}"
        )
    r, s, b1, b3 = cfg.r, cfg.s, cfg.beta1, cfg.beta3
    c14, c23 = math.cos(cfg.phi14), math.cos(cfg.phi23)
    csum = math.cos(cfg.phi14 + cfg.phi23)
    er, es = math.exp(-2 * r), math.exp(-2 * s)
    return (
        0.5 * b1 * b1 * (er + math.cosh(2 * s) - math.sinh(2 * s) * csum)
        + 0.5 * b3 * b3 * (math.cosh(2 * r) - math.sinh(2 * r) * csum + es)
        + 0.5 * b1 * b3 * (er + es) * (c14 + c23)
    )


def closed_form_shot_noise(cfg: ExperimentConfig) -> float:
    """Shot-noise level ``beta1^2 + beta3^2 + beta1 beta3 (cos phi14 + cos phi23)``."""
    b1, b3 = cfg.beta1, cfg.beta3
    return b1 * b1 + b3 * b3 + b1 * b3 * (math.cos(cfg.phi14) + math.cos(cfg.phi23))


def shot_noise_floor(cfg: ExperimentConfig) -> float:
    """Shot noise at or below this value marks the ratio as undefined."""
    return SHOT_NOISE_EPS * (cfg.beta1 ** 2 + cfg.beta3 ** 2)


def noise_result(cfg: ExperimentConfig) -> NoiseResult:
    v = variance(build_number_difference(cfg))
    sn = closed_form_shot_noise(cfg)
    scale = max(cfg.beta1, cfg.beta3)
    if scale == 0.0:
        return NoiseResult(v, sn, None, None)
    # both quantities are quadratic in beta; normalize so tiny beams don't underflow
    unit = replace(cfg, beta1=cfg.beta1 / scale, beta3=cfg.beta3 / scale)
    unit_sn = closed_form_shot_noise(unit)
    if unit_sn <= shot_noise_floor(unit):
        return NoiseResult(v, sn, None, None)
    ratio = variance(build_number_difference(unit)) / unit_sn
    return NoiseResult(v, sn, ratio, 10.0 * math.log10(ratio))


class SqueezeLabel(enum.Enum):
    SQUEEZED = "SQUEEZED"
    NOT_SQUEEZED = "NOT_SQUEEZED"
    UNDEFINED = "UNDEFINED"


@dataclass(frozen=True)
class PhaseTableRow:
    phi14: float
    phi23: float
    result: NoiseResult
    label: SqueezeLabel
    # ratio used for labelling; differs from result.ratio only at a dark fringe
    label_ratio: float | None


SPECIAL_PHASES = (
    (0.0, 0.0),
    (math.pi, math.pi),
    (math.pi / 2, -math.pi / 2),
    (0.0, math.pi),
    (math.pi, 0.0),
    (math.pi / 2, math.pi / 2),
)

# offset used to approach a dark fringe along the opposed-phase scan direction
_DARK_FRINGE_STEP = 1e-4


def _label(ratio: float | None) -> SqueezeLabel:
    if ratio is None:
        return SqueezeLabel.UNDEFINED
    return SqueezeLabel.SQUEEZED if ratio < 1.0 else SqueezeLabel.NOT_SQUEEZED


def _dark_fringe_ratio(cfg: ExperimentConfig) -> float | None:
    # Both sides of the point along (phi14 + e, phi23 - e), the direction in
    # which a synchronous opposed scan crosses the fringe.
    ratios = []
    for e in (_DARK_FRINGE_STEP, -_DARK_FRINGE_STEP):
        res = noise_result(cfg.with_relative_phases(cfg.phi14 + e, cfg.phi23 - e))
        if res.ratio is None:
            return None
        ratios.append(res.ratio)
    if _label(ratios[0]) is not _label(ratios[1]):
        return None
    return 0.5 * (ratios[0] + ratios[1])


def special_phase_table(
    r: float,
    s: float,
    beta1: float,
    beta3: float,
    phases: Sequence[tuple[float, float]] = SPECIAL_PHASES,
) -> list[PhaseTableRow]:
    """Squeezing labels at the characteristic relative-phase pairs.

    A dark fringe (zero shot noise, e.g. ``(pi, pi)`` with equal amplitudes)
    leaves ``result.ratio`` undefined; its label is then taken from the
    limit along the opposed-phase scan direction.
    """
    if r <= 0 and s <= 0:
        raise ValueError("phase table needs r > 0 or s > 0")
    base = ExperimentConfig(r=r, s=s, beta1=beta1, beta3=beta3)
    rows = []
    for p14, p23 in phases:
        cfg = base.with_relative_phases(p14, p23)
        res = noise_result(cfg)
        label_ratio = res.ratio if res.defined else _dark_fringe_ratio(cfg)
        rows.append(PhaseTableRow(p14, p23, res, _label(label_ratio), label_ratio))
    return rows


@dataclass(frozen=True)
class DiscriminationReport:
    r: float
    s: float
    epr_ratio_opposed: float
    single_mode_ratio_opposed: float
    epr_ratio_aligned: float
    single_mode_ratio_aligned: float

    @property
    def epr_squeezed(self) -> bool:
        return self.epr_ratio_opposed < 1.0

    @property
    def single_mode_squeezed(self) -> bool:
        return self.single_mode_ratio_opposed < 1.0

    @property
    def aligned_difference(self) -> float:
        return abs(self.epr_ratio_aligned - self.single_mode_ratio_aligned)

    @property
    def discriminates(self) -> bool:
        return self.epr_squeezed and not self.single_mode_squeezed


def epr_discrimination(r: float, beta1: float, beta3: float, s: float | None = None) -> DiscriminationReport:
    """Compare EPR and single-mode amplitude-squeezed inputs.

    At ``(phi14, phi23) = (pi/2, -pi/2)`` only EPR correlations reduce the
    number-difference noise; at ``(0, 0)`` the two kinds give the same noise.
    """
    if r <= 0:
        raise ValueError("discrimination needs r > 0")
    s = r if s is None else s

    def ratio(kind, p14, p23):
        cfg = ExperimentConfig(r=r, s=s, beta1=beta1, beta3=beta3, kind_12=kind, kind_34=kind)
        res = noise_result(cfg.with_relative_phases(p14, p23))
        if res.ratio is None:
            raise UnsupportedConfiguration("dark fringe: squeezing ratio undefined")
        return res.ratio

    epr, sms = InputKind.EPR, InputKind.SINGLE_MODE_AMPLITUDE_SQUEEZED
    return DiscriminationReport(
        r=r,
        s=s,
        epr_ratio_opposed=ratio(epr, math.pi / 2, -math.pi / 2),
        single_mode_ratio_opposed=ratio(sms, math.pi / 2, -math.pi / 2),
        epr_ratio_aligned=ratio(epr, 0.0, 0.0),
        single_mode_ratio_aligned=ratio(sms, 0.0, 0.0),
    )


@dataclass(frozen=True)
class ScanResult:
    """Column-oriented scan table; ``ratio`` is NaN where undefined."""

    scan_name: str
    scan_value: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    variance: np.ndarray
    shot_noise: np.ndarray
    ratio: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def db(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return 10.0 * np.log10(self.ratio)

    def __len__(self):
        return len(self.scan_value)

    def rows(self) -> Iterator[tuple[float, ...]]:
        db = self.db
        for i in range(len(self)):
            yield (
                float(self.scan_value[i]),
                float(self.n1[i]),
                float(self.n2[i]),
                float(self.variance[i]),
                float(self.shot_noise[i]),
                float(self.ratio[i]),
                float(db[i]),
            )


def _collect(scan_name, values, configs, meta=None) -> ScanResult:
    n1, n2, var, sn, ratio = [], [], [], [], []
    for cfg in configs:
        a, b = classical_fringes(cfg)
        res = noise_result(cfg)
        n1.append(a)
        n2.append(b)
        var.append(res.variance)
        sn.append(res.shot_noise)
        ratio.append(math.nan if res.ratio is None else res.ratio)
    return ScanResult(
        scan_name,
        np.asarray(values, dtype=float),
        np.array(n1),
        np.array(n2),
        np.array(var),
        np.array(sn),
        np.array(ratio),
        dict(meta or {}),
    )


def phase_scan(template: ExperimentConfig, phi_min: float, phi_max: float, steps: int) -> ScanResult:
    """Scan ``phi14 = -phi23 = phi`` over a uniform grid.

    As in a synchronous piezo scan, phi1 and phi3 are moved together while
    phi2 and phi4 stay at their template values.
    """
    steps = int(steps)
    if steps < 2:
        raise ValueError("phase scan needs at least 2 steps")
    phis = np.linspace(phi_min, phi_max, steps)
    configs = (template.with_relative_phases(p, -p) for p in phis)
    return _collect("phi", phis, configs)


def spectral_squeezing(r: float, freq: float, gamma_cavity: float) -> float:
    """Squeezing parameter seen at analysis frequency ``freq``.

    The noise-reduction depth ``1 - e^{-2r}`` follows a Lorentzian of
    half-width ``gamma_cavity``.
    """
    if not gamma_cavity > 0:
        raise ValueError(f"cavity bandwidth must be positive, got {gamma_cavity}")
    if freq == 0:
        return r
    depth = -math.expm1(-2.0 * r)
    depth /= 1.0 + (freq / gamma_cavity) ** 2
    return -0.5 * math.log1p(-depth)


def noise_spectrum(cfg: ExperimentConfig, gamma_cavity: float, freqs) -> ScanResult:
    """Squeezing ratio versus analysis frequency for a cavity-filtered source."""
    if not gamma_cavity > 0:
        raise ValueError(f"cavity bandwidth must be positive, got {gamma_cavity}")
    freqs = np.asarray(freqs, dtype=float)
    configs = (
        replace(
            cfg,
            r=spectral_squeezing(cfg.r, f, gamma_cavity),
            s=spectral_squeezing(cfg.s, f, gamma_cavity),
        )
        for f in freqs
    )
    return _collect("freq", freqs, configs, {"gamma_cavity": gamma_cavity})
