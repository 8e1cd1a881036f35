"""Unit conventions and conversion helpers.

Internally every rate and detuning is an angular frequency in rad/us and
every time is in us.  Configuration values given as ordinary frequencies
(MHz, kHz) are converted via omega = 2*pi*nu, so a config entry
``10.7 MHz`` becomes ``2*pi*10.7 rad/us``.
"""

import math

TWO_PI = 2.0 * math.pi


def from_mhz(nu_mhz: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * nu_mhz


def from_khz(nu_khz: float) -> float:
    """Ordinary frequency in kHz -> angular frequency in rad/us."""
    return TWO_PI * nu_khz * 1e-3


def to_mhz(omega: float) -> float:
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return omega / TWO_PI


def from_ns(t_ns: float) -> float:
    """Time in ns -> us."""
    return t_ns * 1e-3


def us_to_ps(t_us: float) -> int:
    """Time in us -> integer picoseconds (rounded)."""
    return int(round(t_us * 1e6))


def ps_to_us(t_ps: int) -> float:
    """Integer picoseconds -> time in us."""
    return t_ps * 1e-6
