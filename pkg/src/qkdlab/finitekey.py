"""Finite-key secure length for the one-decoy protocol.

Statistical bounds (vacuum, single-photon, phase-error) are derived from
the observed sifted tallies with Hoeffding concentration, then composed
into the secure length

    l = s_Z0 + s_Z1 (1 - h(phi_Z)) - lambda_EC
        - 6 log2(19 / eps_sec) - log2(2 / eps_cor)

clamped at zero.  Every intermediate bound is clamped into its physical
range before entering the composition and retained in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Basis, Intensity, KeyRateReport, ObservedCounts, ProtocolParams
from .rates import binary_entropy, tau_n


class IntensityDegenerate(ValueError):
    """Raised when mu - nu is too small for the decoy estimators."""


class EmptyKeyBasis(ValueError):
    """Raised when there are no sifted key-basis detections at all."""


_MIN_INTENSITY_GAP = 1e-9

# The concentration budget defaults to eps_sec / 19, matching the 19-way
# composition term in the secure-length formula.
_EPS_PE_SHARE = 19.0


@dataclass(frozen=True)
class EpsilonBudget:
    """Failure-probability apportionment for the finite-key bounds."""

    eps_sec: float
    eps_cor: float
    eps_pe: float

    def __post_init__(self) -> None:
        for name in ("eps_sec", "eps_cor", "eps_pe"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name}={v} outside (0, 1)")

    @classmethod
    def from_params(cls, p: ProtocolParams) -> "EpsilonBudget":
        return cls(eps_sec=p.eps_sec, eps_cor=p.eps_cor, eps_pe=p.eps_sec / _EPS_PE_SHARE)


def hoeffding_delta(n_total: int, eps: float) -> float:
    """Two-point Hoeffding deviation sqrt((n/2) ln(1/eps)) in counts."""
    if n_total < 0:
        raise ValueError(f"n_total={n_total} must be >= 0")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps={eps} outside (0, 1)")
    return math.sqrt(n_total / 2.0 * math.log(1.0 / eps))


@dataclass(frozen=True)
class ScaledCountBounds:
    """Poisson-rescaled count estimators (e^k / p_k)(x +- delta)."""

    n_plus_mu: float
    n_minus_mu: float
    n_plus_nu: float
    n_minus_nu: float
    m_plus_mu: float
    m_minus_mu: float
    m_plus_nu: float
    m_minus_nu: float

    def n_plus(self, k: Intensity) -> float:
        return self.n_plus_mu if k is Intensity.SIGNAL else self.n_plus_nu

    def n_minus(self, k: Intensity) -> float:
        return self.n_minus_mu if k is Intensity.SIGNAL else self.n_minus_nu

    def m_plus(self, k: Intensity) -> float:
        return self.m_plus_mu if k is Intensity.SIGNAL else self.m_plus_nu

    def m_minus(self, k: Intensity) -> float:
        return self.m_minus_mu if k is Intensity.SIGNAL else self.m_minus_nu


def scaled_count_bounds(
    counts: ObservedCounts, basis: Basis, p: ProtocolParams, eps: float
) -> ScaledCountBounds:
    """Upper/lower estimators for the Poisson-rescaled per-intensity counts
    of one basis; lower bounds clamp at zero.

    The deviation term uses the basis totals (detections for n, errors for
    m), as the whole basis sample fluctuates jointly.
    """
    d_n = hoeffding_delta(counts.n_total(basis), eps)
    d_m = hoeffding_delta(counts.m_total(basis), eps)
    out = {}
    for k, tag in ((Intensity.SIGNAL, "mu"), (Intensity.DECOY, "nu")):
        scale = math.exp(p.mean_photons(k)) / p.intensity_prob(k)
        n, m = counts.n(basis, k), counts.m(basis, k)
        out[f"n_plus_{tag}"] = scale * (n + d_n)
        out[f"n_minus_{tag}"] = max(0.0, scale * (n - d_n))
        out[f"m_plus_{tag}"] = scale * (m + d_m)
        out[f"m_minus_{tag}"] = max(0.0, scale * (m - d_m))
    return ScaledCountBounds(**out)


@dataclass(frozen=True)
class VacuumBounds:
    s0_low: float
    s0_up: float


def vacuum_bounds(
    counts: ObservedCounts, basis: Basis, p: ProtocolParams, eps: float
) -> VacuumBounds:
    """Bounds on the sifted events caused by empty pulses.

    The lower bound comes from the decoy estimators; the upper bound from
    the error tally, since every vacuum detection errs with probability
    one half.
    """
    if p.mu - p.nu < _MIN_INTENSITY_GAP:
        raise IntensityDegenerate(f"mu - nu = {p.mu - p.nu} too small")
    sb = scaled_count_bounds(counts, basis, p, eps)
    tau0 = tau_n(0, p)
    low = tau0 * (p.mu * sb.n_minus(Intensity.DECOY) - p.nu * sb.n_plus(Intensity.SIGNAL))
    low /= p.mu - p.nu
    n_b, m_b = counts.n_total(basis), counts.m_total(basis)
    up = min(float(n_b), 2.0 * (m_b + hoeffding_delta(n_b, eps)))
    return VacuumBounds(s0_low=max(0.0, low), s0_up=up)


def single_photon_bound(
    counts: ObservedCounts,
    basis: Basis,
    p: ProtocolParams,
    eps: float,
    s0_up: float,
) -> float:
    """Lower bound on the sifted events caused by single-photon pulses."""
    if p.mu - p.nu < _MIN_INTENSITY_GAP:
        raise IntensityDegenerate(f"mu - nu = {p.mu - p.nu} too small")
    if p.nu <= 0:
        raise IntensityDegenerate("decoy intensity must be positive")
    sb = scaled_count_bounds(counts, basis, p, eps)
    tau0, tau1 = tau_n(0, p), tau_n(1, p)
    mu2, nu2 = p.mu**2, p.nu**2
    inner = (
        sb.n_minus(Intensity.DECOY)
        - (nu2 / mu2) * sb.n_plus(Intensity.SIGNAL)
        - ((mu2 - nu2) / mu2) * (s0_up / tau0)
    )
    return max(0.0, tau1 * (p.mu / (p.nu * (p.mu - p.nu))) * inner)


def _gamma(a: float, b: float, c: float, d: float) -> float:
    """Finite-statistics correction for transferring the X-basis error
    ratio b onto the Z single-photon sample (sizes c, d; security a)."""
    if b <= 0.0:
        return 0.0
    if b >= 1.0:
        return float("inf")
    front = (c + d) * (1.0 - b) * b / (c * d * math.log(2.0))
    arg = (c + d) / (c * d * (1.0 - b) * b) * (21.0 / a) ** 2
    return math.sqrt(front * math.log2(arg))


@dataclass(frozen=True)
class PhaseErrorBound:
    phi_z_up: float
    v_x1_up: float
    insufficient_test_statistics: bool


def phase_error_bound(
    counts: ObservedCounts,
    p: ProtocolParams,
    eps: EpsilonBudget,
    s_z1_low: float,
    s_x1_low: float,
) -> PhaseErrorBound:
    """Upper bound on the phase error rate of the Z single-photon events.

    With no single-photon test statistics the bound degrades to maximal
    ignorance (1/2) and the report is flagged.
    """
    if s_x1_low <= 0.0 or s_z1_low <= 0.0:
        return PhaseErrorBound(0.5, 0.0, True)
    sb = scaled_count_bounds(counts, Basis.X, p, eps.eps_pe)
    tau1 = tau_n(1, p)
    v = tau1 * (sb.m_plus(Intensity.SIGNAL) - sb.m_minus(Intensity.DECOY)) / (p.mu - p.nu)
    v = min(max(0.0, v), s_x1_low)
    ratio = v / s_x1_low
    if ratio >= 1.0:
        return PhaseErrorBound(0.5, v, False)
    phi = min(0.5, ratio + _gamma(eps.eps_sec, ratio, s_x1_low, s_z1_low))
    return PhaseErrorBound(phi, v, False)


def key_length(counts: ObservedCounts, p: ProtocolParams) -> KeyRateReport:
    """Evaluate the secure length and key rate for an observed sample.

    Pure and deterministic in (counts, params).
    """
    n_z, m_z = counts.n_total(Basis.Z), counts.m_total(Basis.Z)
    if n_z == 0:
        raise EmptyKeyBasis("no sifted key-basis detections")
    eps = EpsilonBudget.from_params(p)
    vac_z = vacuum_bounds(counts, Basis.Z, p, eps.eps_pe)
    vac_x = vacuum_bounds(counts, Basis.X, p, eps.eps_pe)
    s_z1 = single_photon_bound(counts, Basis.Z, p, eps.eps_pe, vac_z.s0_up)
    s_x1 = single_photon_bound(counts, Basis.X, p, eps.eps_pe, vac_x.s0_up)
    phase = phase_error_bound(counts, p, eps, s_z1, s_x1)
    lambda_ec = p.f_ec * n_z * binary_entropy(m_z / n_z)
    l = (
        vac_z.s0_low
        + s_z1 * (1.0 - binary_entropy(phase.phi_z_up))
        - lambda_ec
        - 6.0 * math.log2(19.0 / eps.eps_sec)
        - math.log2(2.0 / eps.eps_cor)
    )
    l = max(0.0, l)
    return KeyRateReport(
        s_z0_low=vac_z.s0_low,
        s_z0_up=vac_z.s0_up,
        s_z1_low=s_z1,
        s_x1_low=s_x1,
        v_x1_up=phase.v_x1_up,
        phi_z_up=phase.phi_z_up,
        lambda_ec=lambda_ec,
        l_bits=l,
        skr_bps=l * p.f_rep / p.n_pulses,
        n_z=n_z,
        m_z=m_z,
        eps_sec=eps.eps_sec,
        eps_cor=eps.eps_cor,
        eps_pe=eps.eps_pe,
        insufficient_test_statistics=phase.insufficient_test_statistics,
    )
