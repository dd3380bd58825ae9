"""Fock-state couplings, thermal distributions, and Lamb-Dicke utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, jv

_RESCALE = 1e250


@dataclass(frozen=True)
class TrapParams:
    """Trap and beam-geometry parameters.

    eta: Lamb-Dicke parameter along the cooled mode.
    omega: angular trap frequency (rad/s), only needed for Doppler estimates.
    linewidth: angular linewidth (rad/s) of the Doppler transition.
    """

    eta: float
    omega: float | None = None
    linewidth: float | None = None

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.omega is not None and not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")


@dataclass(frozen=True)
class PhononDistribution:
    """Phonon-number populations on n = 0..n_max.

    Truncation may lose tail mass; that loss is tracked, never silently
    renormalized away.
    """

    probs: np.ndarray
    n_max: int

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) != self.n_max + 1:
            raise ValueError(f"probs must have length n_max + 1 = {self.n_max + 1}")
        if np.any(p < -1e-12):
            raise ValueError("negative probability entry")
        if p.sum() > 1 + 1e-9:
            raise ValueError(f"total probability {p.sum()} exceeds 1")
        object.__setattr__(self, "probs", p)

    @property
    def tail_loss(self) -> float:
        return max(0.0, 1.0 - float(self.probs.sum()))


def default_n_max(nbar: float, coverage: float = 0.9999) -> int:
    """Smallest truncation keeping `coverage` of a thermal state, with floors."""
    if not 0 < coverage < 1:
        raise ValueError(f"coverage must be in (0, 1), got {coverage}")
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    floor = max(50, math.ceil(10 * nbar))
    if nbar == 0:
        return floor
    r = nbar / (nbar + 1.0)
    # retained mass 1 - r^(n_max+1) >= coverage
    n_cov = math.ceil(math.log(1.0 - coverage) / math.log(r) - 1.0)
    return max(floor, n_cov)


def thermal_distribution(nbar: float, n_max: int) -> PhononDistribution:
    """p(n) = nbar^n / (nbar+1)^(n+1), evaluated in log space."""
    if nbar < 0 or n_max < 0:
        raise ValueError("nbar and n_max must be non-negative")
    if nbar == 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return PhononDistribution(probs=p, n_max=n_max)
    n = np.arange(n_max + 1)
    logp = n * math.log(nbar / (nbar + 1.0)) - math.log(nbar + 1.0)
    return PhononDistribution(probs=np.exp(logp), n_max=n_max)


def thermal_state(nbar: float, coverage: float = 0.9999) -> PhononDistribution:
    """Thermal distribution truncated by the default coverage rule."""
    return thermal_distribution(nbar, default_n_max(nbar, coverage))


def mean_n(dist: PhononDistribution) -> float:
    """Mean occupation over the retained mass."""
    total = float(dist.probs.sum())
    if total <= 0:
        raise ValueError("distribution has zero total mass")
    n = np.arange(dist.n_max + 1)
    return float(n @ dist.probs) / total


def fock_coupling(n: int, n_prime: int, eta: float) -> float:
    """Relative Rabi frequency between Fock states n and n'.

    exp(-eta^2/2) * sqrt(n_<! / n_>!) * eta^|dn| * L_{n_<}^{|dn|}(eta^2),
    with the Laguerre polynomial evaluated by a rescaled three-term
    recurrence and the factorial ratio in log space, stable to n = 1e4.
    """
    if n < 0 or n_prime < 0:
        raise ValueError(f"Fock indices must be >= 0, got ({n}, {n_prime})")
    if not eta > 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    lo, hi = min(n, n_prime), max(n, n_prime)
    dn = hi - lo
    x = eta * eta
    log_pref = -0.5 * x + dn * math.log(eta) + 0.5 * (gammaln(lo + 1) - gammaln(hi + 1))
    # L_k^dn(x) for k = 0..lo with overflow rescaling
    log_scale = 0.0
    prev, cur = 1.0, 1.0 + dn - x
    if lo == 0:
        cur = 1.0
    else:
        for k in range(2, lo + 1):
            prev, cur = cur, ((2 * k - 1 + dn - x) * cur - (k - 1 + dn) * prev) / k
            if abs(cur) > _RESCALE:
                prev /= _RESCALE
                cur /= _RESCALE
                log_scale += math.log(_RESCALE)
    if cur == 0.0:
        return 0.0
    sign = 1.0 if cur > 0 else -1.0
    return sign * math.exp(log_pref + log_scale + math.log(abs(cur)))


def sideband_coupling_ratios(n_max: int, eta: float) -> np.ndarray:
    """R[n] = coupling(n, n-1) / coupling(1, 0) for n = 0..n_max; R[0] = 0.

    Reduces to L^1_{n-1}(eta^2)/sqrt(n); one recurrence pass over n.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    x = eta * eta
    lag = np.empty(max(n_max, 1), dtype=float)
    lag[0] = 1.0
    if n_max >= 2:
        lag[1] = 2.0 - x
        for k in range(2, n_max):
            lag[k] = ((2 * k - x) * lag[k - 1] - k * lag[k - 2]) / k
    out = np.zeros(n_max + 1)
    if n_max >= 1:
        out[1:] = lag[: n_max] / np.sqrt(np.arange(1, n_max + 1))
    return out


def fock_coupling_bessel(n: int, delta_n: int, eta: float) -> float:
    """Bessel-function approximation J_dn(2 eta sqrt(n + (dn+1)/2)).

    Only the carrier and first sidebands are within its stated validity.
    """
    if abs(delta_n) > 1:
        raise ValueError(f"|delta_n| = {abs(delta_n)} outside validity (carrier and first sideband only)")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    arg = 2.0 * eta * math.sqrt(n + (delta_n + 1) / 2.0)
    return float(jv(delta_n, arg))


def doppler_limit(linewidth: float, omega: float) -> float:
    """Doppler-cooling mean occupation Gamma / (2 omega)."""
    if linewidth < 0 or omega <= 0:
        raise ValueError("linewidth must be >= 0 and omega > 0")
    return linewidth / (2.0 * omega)
