"""Physical parameter containers for one photon source and for the
interference imperfections.

All rates/detunings are angular frequencies in rad/us, all times in us
(see :mod:`cavhom.units`).  The drive Rabi frequency is piecewise
constant: ``omega_drive`` while ``pulse_on <= t < pulse_off`` and zero
outside.  The Stark compensation ``delta_stark`` may be the string
``"auto"``, in which case it is recomputed per drive segment as
Omega_t**2 / (4*Delta) (zero while the drive is off).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import ConfigurationError, DomainError

# Relative slack when checking that pulse edges sit on the dt grid.
_GRID_ALIGN_TOL = 1e-9

AUTO = "auto"


def _snap_to_grid(t: float, dt: float, name: str) -> int:
    k = round(t / dt)
    if not math.isclose(k * dt, t, rel_tol=0.0, abs_tol=_GRID_ALIGN_TOL * max(1.0, abs(t))):
        raise ConfigurationError(
            f"{name}={t} us is not an integer multiple of dt={dt} us; "
            "segment-exact propagation requires pulse edges on the time grid"
        )
    return int(k)


@dataclass(frozen=True)
class Segment:
    """One piecewise-constant stretch of the drive."""

    i_start: int
    i_stop: int          # exclusive, in grid steps
    omega: float         # rad/us
    stark: float         # rad/us


@dataclass(frozen=True)
class SourceParams:
    """All physical rates and timings of one photon source.

    Parameters
    ----------
    omega_drive:
        Raman-laser Rabi frequency Omega while the pulse is on (rad/us).
    delta:
        Drive detuning Delta, stored signed (negative in the usual
        operating regime; docs and configs quote the magnitude).
    g_eff:
        Effective ion-cavity coupling g = alpha * beta * g0 (rad/us).
    kappa:
        Cavity field half-linewidth kappa (rad/us); photon escape rate
        into the detected channel is 2*kappa.
    gamma_sp, gamma_dp:
        Spontaneous scattering rates P->S and P->D (rad/us).
    delta_stark:
        Stark compensation, or "auto" for Omega_t**2/(4*Delta) per segment.
    pulse_on, pulse_off, t_horizon, dt:
        Drive window, simulation end and grid step, all in us.  Pulse
        edges and the horizon must be integer multiples of dt.
    """

    omega_drive: float
    delta: float
    g_eff: float
    kappa: float
    gamma_sp: float
    gamma_dp: float
    delta_stark: Union[float, str] = AUTO
    pulse_on: float = 0.0
    pulse_off: float = 9.4
    t_horizon: float = 12.0
    dt: float = 0.005

    def __post_init__(self) -> None:
        if self.kappa < 0 or self.gamma_sp < 0 or self.gamma_dp < 0:
            raise ConfigurationError("decay rates kappa, gamma_sp, gamma_dp must be >= 0")
        if self.dt <= 0:
            raise ConfigurationError("dt must be > 0")
        if not (0 <= self.pulse_on <= self.pulse_off <= self.t_horizon):
            raise ConfigurationError(
                "require 0 <= pulse_on <= pulse_off <= t_horizon, got "
                f"pulse_on={self.pulse_on}, pulse_off={self.pulse_off}, "
                f"t_horizon={self.t_horizon}"
            )
        if self.delta_stark == AUTO:
            if self.omega_drive != 0.0 and self.delta == 0.0:
                raise ConfigurationError('delta_stark="auto" needs a nonzero delta')
        elif isinstance(self.delta_stark, str):
            raise ConfigurationError(f"delta_stark must be a number or 'auto', got {self.delta_stark!r}")
        # Validate grid alignment eagerly so errors surface at construction.
        self.n_steps
        self.segments()

    # ------------------------------------------------------------------
    # Grid
    # ------------------------------------------------------------------

    @property
    def n_steps(self) -> int:
        return _snap_to_grid(self.t_horizon, self.dt, "t_horizon")

    @property
    def i_pulse_on(self) -> int:
        return _snap_to_grid(self.pulse_on, self.dt, "pulse_on")

    @property
    def i_pulse_off(self) -> int:
        return _snap_to_grid(self.pulse_off, self.dt, "pulse_off")

    def time_grid(self) -> np.ndarray:
        """Grid of n_steps+1 sample times, exactly k*dt."""
        return np.arange(self.n_steps + 1) * self.dt

    def segments(self) -> list[Segment]:
        """Piecewise-constant drive segments covering [0, t_horizon)."""
        edges = sorted({0, self.i_pulse_on, self.i_pulse_off, self.n_steps})
        segs = []
        for i0, i1 in zip(edges[:-1], edges[1:]):
            if i1 == i0:
                continue
            on = self.i_pulse_on <= i0 < self.i_pulse_off
            omega = self.omega_drive if on else 0.0
            segs.append(Segment(i0, i1, omega, self._stark_for(omega)))
        if not segs:  # t_horizon == 0: degenerate single-point grid
            segs.append(Segment(0, 0, 0.0, self._stark_for(0.0)))
        return segs

    # ------------------------------------------------------------------
    # Time-dependent coefficients
    # ------------------------------------------------------------------

    def _stark_for(self, omega: float) -> float:
        if self.delta_stark == AUTO:
            return omega**2 / (4.0 * self.delta) if omega != 0.0 else 0.0
        return float(self.delta_stark)

    def omega_at(self, t: float) -> float:
        self._check_t(t)
        return self.omega_drive if self.pulse_on <= t < self.pulse_off else 0.0

    def stark_at(self, t: float) -> float:
        return self._stark_for(self.omega_at(t))

    def _check_t(self, t: float) -> None:
        if not (0.0 <= t <= self.t_horizon):
            raise DomainError(f"t={t} us outside [0, {self.t_horizon}] us")

    def with_omega(self, omega_drive: float) -> "SourceParams":
        """Copy with a different Rabi frequency (delta_stark='auto' re-derives)."""
        return replace(self, omega_drive=omega_drive)


@dataclass(frozen=True)
class ImperfectionParams:
    """Interference imperfections applied on top of the scattering model.

    epsilon:
        Mode-mismatch probability; with probability epsilon the two
        photons do not interfere at all.
    omega_offset:
        Constant carrier-frequency offset between the two photons (rad/us).
    sigma_drift:
        Std. dev. of the linear frequency-drift rate (rad/us^2).  When the
        drift is characterised by a squared frequency deviation v(T) over
        a timescale T, sigma = sqrt(v(T))/T (see ``drift_sigma``).
    tau_gen:
        Generation-time separation between the two photons (us); the
        drift accumulates over this interval.
    background_density:
        Constant coincidence-probability density floor (1/us) added to
        the tau histograms.
    background_in_perp:
        Whether the floor is also added to the orthogonal histogram
        (measured floors are polarization-independent, so default True).
    """

    epsilon: float = 0.0
    omega_offset: float = 0.0
    sigma_drift: float = 0.0
    tau_gen: float = 13.35
    background_density: float = 0.0
    background_in_perp: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon={self.epsilon} outside [0, 1]")
        if self.sigma_drift < 0:
            raise DomainError("sigma_drift must be >= 0")
        if self.background_density < 0:
            raise DomainError("background_density must be >= 0")
        if self.tau_gen <= 0:
            raise DomainError("tau_gen must be > 0")


def drift_sigma(sqrt_v: float, timescale: float) -> float:
    """Drift-rate sigma (rad/us^2) from a frequency deviation spec.

    ``sqrt_v`` is the r.m.s. frequency deviation sqrt(v(T)) in rad/us
    accumulated over ``timescale`` us; under a linear-drift model the
    drift-rate standard deviation is sqrt(v(T))/T.
    """
    if timescale <= 0:
        raise DomainError("drift timescale must be > 0")
    return sqrt_v / timescale
