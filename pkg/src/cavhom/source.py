"""Emitted-photon description for one source.

The photon leaving the cavity is a temporal mixture: for each time s at
which the ion was last reset to the ground state (by a P->S scattering
event, or s=0 when none occurred), the subsequent no-jump evolution emits
a conditional pure wavepacket

    psi_s(t) = sqrt(2*kappa) <d,1|Phi_{t|s}>,      t >= s,

with sub-norm p_pure(s) = integral |psi_s(t)|^2 dt, the probability that
the first jump after s is the cavity emission.  The reset-rate weight is
P(s) = 2*gamma_sp <p,0|rho_s|p,0> from the full master equation, and the
vacuum weight P0 collects every history that never emits.  The mixture is
summarized by the first-order coherence kernel

    G(t,t') = eta * [ psi_0(t) psi_0*(t') + integral P(s) psi_s(t) psi_s*(t') ds ],

which is all downstream coincidence statistics ever need.

Quadrature conventions: t-integrals of |psi|^2 are plain Riemann sums
(dt * sum), s-integrals use trapezoid weights; the vacuum weight is
defined through the normalization identity with exactly these rules, so
trace(G) dt = eta * (1 - P0) holds to rounding.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import dynamics
from .errors import ConfigurationError, DomainError, NumericsError, GridResolutionWarning
from .params import SourceParams

# Dual-route vacuum-weight computations must agree this well, else the
# grid is too coarse for the requested rates.
P0_CONSISTENCY_TOL = 1e-4

# Absolute |d,1> population allowed to remain at t_horizon (un-emitted tail).
TAIL_TOL = 1e-4


@dataclass(frozen=True)
class PhotonRecord:
    """Discretized emitted-photon state of one source.

    Attributes
    ----------
    params:
        Source parameters the record was computed from.
    t_grid:
        Uniform time grid (us); the reset-time grid s is the same grid.
    psi:
        Conditional amplitudes, shape (n_s, n_t) with psi[s, t] = psi_s(t)
        and zeros for t < s.
    p_pure:
        <psi_s|psi_s> per reset time.
    scatter_rate:
        P(s) = 2*gamma_sp <p,0|rho_s|p,0> (1/us).
    emit_prob:
        pi(s): probability that a photon is still emitted after a reset
        at s (full master-equation restart), used for the conditional
        scattering count.
    p0:
        Vacuum weight, defined by 1 - p_pure(0) - integral P(s) p_pure(s) ds.
    p0_direct:
        Independent route: integrated P->D scattering flux plus the
        population still outside |d,0> at t_horizon.
    kernel:
        Coherence kernel G(t,t') including eta, or None before assembly.
    eta:
        End-to-end detection/transmission efficiency applied to the kernel.
    """

    params: SourceParams
    t_grid: np.ndarray
    psi: np.ndarray
    p_pure: np.ndarray
    scatter_rate: np.ndarray
    emit_prob: np.ndarray
    p0: float
    p0_direct: float
    kernel: np.ndarray | None = None
    eta: float = 1.0

    @property
    def dt(self) -> float:
        return self.params.dt

    @property
    def emission_prob(self) -> float:
        """Probability that a photon is emitted, before efficiency."""
        return 1.0 - self.p0

    def s_weights(self) -> np.ndarray:
        """Mixture weights over the reset grid: trapezoid-weighted P(s)
        plus the exact unit weight of the no-scattering component at s=0."""
        w = self.scatter_rate * _trapezoid_weights(len(self.t_grid), self.dt)
        w[0] += 1.0
        return w

    def singles_density(self) -> np.ndarray:
        """Per-detector click density p_S(t) = G(t,t)/2 behind a 50:50
        beamsplitter (1/us)."""
        if self.kernel is None:
            raise ConfigurationError("kernel not assembled; call assemble_kernel first")
        return 0.5 * np.abs(np.diagonal(self.kernel).real)


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    if n > 1:
        w[0] = w[-1] = 0.5 * dt
    return w


# ----------------------------------------------------------------------
# Stage 1: conditional amplitudes
# ----------------------------------------------------------------------


def compute_conditional_amplitudes(p: SourceParams, strict: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """psi[s, t] and p_pure(s) on the shared grid.

    Warns (or raises in strict mode) if dt under-resolves the fastest
    decay rate or if a significant cavity population remains un-emitted
    at t_horizon.
    """
    max_rate = 2.0 * max(p.kappa, p.gamma_sp + p.gamma_dp)
    if max_rate > 0 and p.dt > 1.0 / (10.0 * max_rate):
        _grid_complaint(
            f"dt={p.dt} us is coarser than a tenth of the fastest decay time "
            f"{1.0 / max_rate:.3g} us", strict)
    psi = np.sqrt(2.0 * p.kappa) * dynamics.conditional_overlap_matrix(p)
    p_pure = (np.abs(psi) ** 2).sum(axis=1) * p.dt
    return psi, p_pure


def _grid_complaint(msg: str, strict: bool) -> None:
    if strict:
        raise NumericsError(msg)
    warnings.warn(msg, GridResolutionWarning, stacklevel=3)


# ----------------------------------------------------------------------
# Stage 2: scattering weights and vacuum weight
# ----------------------------------------------------------------------


def compute_scatter_rate(p: SourceParams, p_pure: np.ndarray,
                         master: dynamics.MasterTrajectory | None = None,
                         ) -> tuple[np.ndarray, float, float]:
    """P(s), the identity-defined vacuum weight, and its direct cross-check.

    P(s) is the ground-state reset rate 2*gamma_sp <p,0|rho_s|p,0|>.  The
    stored vacuum weight follows from the normalization identity

        p_pure(0) + integral P(s) p_pure(s) ds + P0 = 1,

    and is cross-checked against the physically independent route
    (P->D scattering flux plus the residual population still inside the
    three-level manifold at t_horizon).  Disagreement beyond 1e-4 means
    the grid cannot support the rates and raises NumericsError.
    """
    if master is None:
        master = dynamics.propagate_master(p)
    pop_p = master.population(dynamics.IDX_P0)
    scatter_rate = 2.0 * p.gamma_sp * pop_p
    w = _trapezoid_weights(len(scatter_rate), p.dt)
    p0 = 1.0 - p_pure[0] - float(np.dot(w, scatter_rate * p_pure))
    pop_d0_end = master.population(dynamics.IDX_D0)[-1]
    l3_flux = 2.0 * p.gamma_dp * pop_p
    p0_direct = float(np.dot(w, l3_flux)) + (1.0 - pop_d0_end)
    if abs(p0 - p0_direct) > P0_CONSISTENCY_TOL:
        raise NumericsError(
            f"vacuum-weight routes disagree: identity {p0:.6g} vs direct "
            f"{p0_direct:.6g}; refine the grid")
    return scatter_rate, p0, p0_direct


# ----------------------------------------------------------------------
# Stage 3: coherence kernel
# ----------------------------------------------------------------------


def assemble_kernel(psi: np.ndarray, s_weights: np.ndarray, eta: float) -> np.ndarray:
    """G(t,t') = eta * sum_s w_s psi_s(t) psi_s*(t'), Hermitian PSD.

    The no-scattering component enters with exact unit weight (w[0] has
    the +1 added by ``PhotonRecord.s_weights``), never as a discretized
    spike of the reset-rate density.
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta={eta} outside [0, 1]")
    a = psi * np.sqrt(s_weights)[:, None]
    gram = a.conj().T @ a          # gram[t, t'] = sum_s w_s psi*(t) psi(t')
    return eta * gram.conj()       # -> sum_s w_s psi(t) psi*(t')


def build_photon_record(p: SourceParams, eta: float = 1.0, with_kernel: bool = True,
                        strict: bool = False) -> PhotonRecord:
    """Full pipeline: amplitudes, weights, vacuum weight, kernel.

    ``with_kernel=False`` skips the O(n^3) kernel assembly for callers
    that only need scalar bookkeeping (normalization checks, counts).
    """
    psi, p_pure = compute_conditional_amplitudes(p, strict=strict)
    master = dynamics.propagate_master(p)
    scatter_rate, p0, p0_direct = compute_scatter_rate(p, p_pure, master)
    tail = master.population(dynamics.IDX_D1)[-1]
    if tail > TAIL_TOL:
        _grid_complaint(
            f"un-emitted cavity population {tail:.2e} remains at t_horizon="
            f"{p.t_horizon} us; extend the horizon", strict)
    record = PhotonRecord(
        params=p, t_grid=p.time_grid(), psi=psi, p_pure=p_pure,
        scatter_rate=scatter_rate, emit_prob=dynamics.emission_prospect(p),
        p0=p0, p0_direct=p0_direct, kernel=None, eta=eta)
    if with_kernel:
        record = replace(record, kernel=assemble_kernel(psi, record.s_weights(), eta))
    return record


def calibrate_eta(record: PhotonRecord, detect_prob: float) -> PhotonRecord:
    """Re-scale eta so the total detection probability (both beamsplitter
    outputs combined) equals a measured value: eta = detect_prob / (1-P0)."""
    if record.emission_prob <= 0:
        raise DomainError("source never emits; cannot calibrate eta")
    eta = detect_prob / record.emission_prob
    if not 0.0 <= eta <= 1.0:
        raise ConfigurationError(
            f"target detection probability {detect_prob} needs eta={eta:.4g} outside [0, 1]")
    kernel = None
    if record.kernel is not None:
        kernel = record.kernel * (eta / record.eta) if record.eta > 0 else None
    rec = replace(record, eta=eta, kernel=kernel)
    if rec.kernel is None:
        rec = replace(rec, kernel=assemble_kernel(rec.psi, rec.s_weights(), eta))
    return rec


# ----------------------------------------------------------------------
# Scattering counts
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ScatterCounts:
    """Expected number of P->S scattering events per attempt."""

    unconditional: float
    conditional_on_emission: float | None  # None when the source never emits


def expected_scatter_count(record: PhotonRecord) -> ScatterCounts:
    """Mean P->S scattering count, per run and given photon emission.

    The unconditional value is the plain time integral of P(s).  The
    conditional value weights each reset event by the probability pi(s)
    that a photon still comes out afterwards, normalized by the total
    emission probability.
    """
    w = _trapezoid_weights(len(record.t_grid), record.dt)
    unconditional = float(np.dot(w, record.scatter_rate))
    emit = record.emission_prob
    if emit <= 0.0:
        return ScatterCounts(unconditional, None)
    conditional = float(np.dot(w, record.scatter_rate * record.emit_prob)) / emit
    return ScatterCounts(unconditional, conditional)


# ----------------------------------------------------------------------
# CSV export
# ----------------------------------------------------------------------


def psi_csv_lines(record: PhotonRecord, stride: int = 1):
    """Rows (s_us, t_us, re_psi, im_psi); header documents units."""
    yield "s_us,t_us,re_psi_per_sqrt_us,im_psi_per_sqrt_us"
    t = record.t_grid
    for i in range(0, len(t), stride):
        for j in range(i, len(t), stride):
            z = record.psi[i, j]
            yield f"{t[i]:.9g},{t[j]:.9g},{z.real:.9g},{z.imag:.9g}"


def kernel_csv_lines(record: PhotonRecord, stride: int = 1):
    """Rows (t_us, tprime_us, re_G, im_G); header documents units."""
    if record.kernel is None:
        raise ConfigurationError("kernel not assembled")
    yield "t_us,tprime_us,re_G_per_us,im_G_per_us"
    t = record.t_grid
    for i in range(0, len(t), stride):
        for j in range(0, len(t), stride):
            z = record.kernel[i, j]
            yield f"{t[i]:.9g},{t[j]:.9g},{z.real:.9g},{z.imag:.9g}"
