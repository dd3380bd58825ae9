"""Sideband-ratio thermometry, the dark-preparation filter, and the
end-to-end cooling protocol driver.

The sideband ratio infers a mean occupation that equals the true mean
only for thermal states; both numbers are tracked so the difference
stays visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain_dynamics import ChainEvolver
from .cooling import PulseSequence, optimize_global
from .heating import DEFAULT_CHANNEL_RATES, HeatingModel, propagate_heating
from .manifold import CouplingChain
from .motional import (
    PhononDistribution,
    TrapParams,
    mean_n,
    sideband_coupling_ratios,
    thermal_distribution,
    thermal_state,
)

DEFAULT_PROBE_TIME = 1.0


@dataclass(frozen=True)
class SidebandProbeResult:
    """Red/blue sideband excitation at one probe time.

    nbar_sb is the occupation inferred from the ratio; it matches the true
    mean only for thermal states.
    """

    p_red: float
    p_blue: float
    probe_time: float
    nbar_sb: float

    def __post_init__(self) -> None:
        eps = 1e-9
        if not (-eps <= self.p_red <= 1 + eps and -eps <= self.p_blue <= 1 + eps):
            raise ValueError("sideband excitations must lie in [0, 1]")


def sideband_probe(
    dist: PhononDistribution, trap: TrapParams, probe_time: float = DEFAULT_PROBE_TIME
) -> SidebandProbeResult:
    """Probe both first sidebands for `probe_time` (units of the n=1->0 pi-time).

    P_red = sum_n p(n) sin^2(pi t R(n) / 2) and P_blue the same with
    R(n+1), where R(n) is the red-sideband coupling ratio.  The inferred
    occupation is R/(1-R) with R = P_red/P_blue.
    """
    if probe_time <= 0:
        raise ValueError(f"probe_time must be > 0, got {probe_time}")
    ratios = sideband_coupling_ratios(dist.n_max + 1, trap.eta)
    red_amp = np.sin(0.5 * np.pi * probe_time * ratios[: dist.n_max + 1]) ** 2
    blue_amp = np.sin(0.5 * np.pi * probe_time * ratios[1:]) ** 2
    p_red = float(dist.probs @ red_amp)
    p_blue = float(dist.probs @ blue_amp)
    if p_blue == 0:
        raise ValueError("blue sideband signal vanishes; cannot form the ratio")
    ratio = p_red / p_blue
    nbar_sb = math.inf if ratio >= 1 else ratio / (1.0 - ratio)
    return SidebandProbeResult(
        p_red=p_red, p_blue=p_blue, probe_time=float(probe_time), nbar_sb=nbar_sb
    )


def rdp_filter(
    dist: PhononDistribution, chain: CouplingChain, trap: TrapParams, t_clear: float
) -> tuple[PhononDistribution, float]:
    """Conditional dark preparation: one clearing pulse, keep what stayed put.

    Population that responded to the pulse left the start sublevel and is
    discarded; what remains is renormalized.  n = 0 is dark to the pulse
    and survives with probability 1.
    """
    if t_clear <= 0:
        raise ValueError(f"t_clear must be > 0, got {t_clear}")
    evolver = ChainEvolver(chain, trap, dist.n_max)
    retention = evolver.site_probabilities(t_clear)[:, 0]
    kept = dist.probs * retention
    success = float(kept.sum())
    if success <= 0:
        raise ValueError("clearing pulse removed all population")
    conditioned = PhononDistribution(probs=kept / success, n_max=dist.n_max)
    return conditioned, success


def default_t_clear(chain: CouplingChain, trap: TrapParams) -> float:
    """Clearing-pulse duration: the single-pulse optimum for a warm remnant."""
    seq = optimize_global(chain, trap, thermal_state(1.0), 1)
    return seq.times[0]


def thermal_ks_distance(dist: PhononDistribution) -> float:
    """Kolmogorov-Smirnov distance to the thermal state with the same mean."""
    total = float(dist.probs.sum())
    if total <= 0:
        raise ValueError("distribution has zero total mass")
    nbar = mean_n(dist)
    ref = thermal_distribution(nbar, dist.n_max).probs
    ref = ref / ref.sum()
    return float(np.max(np.abs(np.cumsum(dist.probs / total) - np.cumsum(ref))))


@dataclass(frozen=True)
class PulseTiming:
    """Wall-clock durations for converting pulse units into heating time.

    t_f_seconds: the reference pi-time in seconds.
    repump_seconds: optical-pumping interval after each Raman pulse.
    pre_probe_delay_seconds: idle time before the probe.
    """

    t_f_seconds: float = 100e-6
    repump_seconds: float = 15e-3
    pre_probe_delay_seconds: float = 0.0

    def __post_init__(self) -> None:
        if self.t_f_seconds <= 0:
            raise ValueError("t_f_seconds must be > 0")
        if self.repump_seconds < 0 or self.pre_probe_delay_seconds < 0:
            raise ValueError("durations must be >= 0")


@dataclass(frozen=True)
class ProtocolReport:
    """Per-pulse histories plus the final state of one protocol run.

    history[k] is the distribution after k cycles (history[0] the initial
    state); when dark preparation runs, the conditioned state is appended.
    """

    nbar_history: tuple[float, ...]
    nbar_sb_history: tuple[float, ...]
    history: tuple[PhononDistribution, ...]
    final: PhononDistribution
    success_probability: float
    rdp_applied: bool
    t_clear: float | None
    heating_on: bool


def end_to_end_protocol(
    chain: CouplingChain,
    trap: TrapParams,
    sequence: PulseSequence,
    init: PhononDistribution,
    heating_rates: dict | None = None,
    timing: PulseTiming | None = None,
    probe_time: float = DEFAULT_PROBE_TIME,
    rdp: bool = False,
    t_clear: float | None = None,
) -> ProtocolReport:
    """Run the full cooling protocol and record n-bar both ways per pulse.

    heating_rates maps channel names to quanta/s (None disables heating).
    Each cycle is one Raman pulse (raman + trap channels heat for the
    pulse duration) followed by a repump interval (optical_pumping + trap
    channels).  Index k of the histories is the state after k cycles; the
    optional dark-preparation filter is applied after the last cycle and
    any pre-probe delay.
    """
    if timing is None:
        timing = PulseTiming()
    heating_on = heating_rates is not None
    if heating_on:
        rates = dict(DEFAULT_CHANNEL_RATES, **heating_rates)
        pulse_model = HeatingModel.diffusive(rates["raman"] + rates["trap"])
        repump_model = HeatingModel.diffusive(rates["optical_pumping"] + rates["trap"])
        idle_model = HeatingModel.diffusive(rates["trap"])

    evolver = ChainEvolver(chain, trap, init.n_max)
    state = init
    snapshots = [state]
    nbars = [mean_n(state)]
    nbars_sb = [sideband_probe(state, trap, probe_time).nbar_sb]
    for t in sequence.times:
        state = PhononDistribution(
            probs=evolver.apply_pulse(t, state.probs), n_max=state.n_max
        )
        if heating_on:
            state = propagate_heating(state, pulse_model, t * timing.t_f_seconds)
            state = propagate_heating(state, repump_model, timing.repump_seconds)
        snapshots.append(state)
        nbars.append(mean_n(state))
        nbars_sb.append(sideband_probe(state, trap, probe_time).nbar_sb)

    if heating_on and timing.pre_probe_delay_seconds > 0:
        state = propagate_heating(state, idle_model, timing.pre_probe_delay_seconds)
        snapshots[-1] = state

    success = 1.0
    used_t_clear = None
    if rdp:
        used_t_clear = default_t_clear(chain, trap) if t_clear is None else t_clear
        state, success = rdp_filter(state, chain, trap, used_t_clear)
        snapshots.append(state)
        nbars.append(mean_n(state))
        nbars_sb.append(sideband_probe(state, trap, probe_time).nbar_sb)

    return ProtocolReport(
        nbar_history=tuple(nbars),
        nbar_sb_history=tuple(nbars_sb),
        history=tuple(snapshots),
        final=state,
        success_probability=success,
        rdp_applied=rdp,
        t_clear=used_t_clear,
        heating_on=heating_on,
    )
