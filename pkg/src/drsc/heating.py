"""Motional heating propagation and the optical-pumping scattering walk.

Heating is modeled as a nearest-neighbor random walk on the phonon ladder
with up/down rates A+(n+1) and A-*n; optical pumping is an absorbing
Markov chain over the 45 ground-manifold Zeeman sublevels with |7,0> as
the dark state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .manifold import cg_signed_square, decay_branching
from .motional import PhononDistribution

DEFAULT_CHANNEL_RATES = {
    "optical_pumping": 5.58,
    "raman": 2.078,
    "trap": 0.553,
}

_SUBSTEP_FRACTION = 0.1


@dataclass(frozen=True)
class HeatingModel:
    """Phonon-ladder walk rates in quanta/s.

    Recoil-dominated diffusion has a_plus = a_minus; unequal rates give
    relaxation toward a_plus / (a_minus - a_plus).
    """

    a_plus: float
    a_minus: float

    def __post_init__(self) -> None:
        if self.a_plus < 0 or self.a_minus < 0:
            raise ValueError("heating rates must be >= 0")

    @classmethod
    def diffusive(cls, rate: float) -> "HeatingModel":
        return cls(a_plus=rate, a_minus=rate)

    @classmethod
    def from_channels(cls, names, rates: dict | None = None) -> "HeatingModel":
        """Diffusive model with the summed rates of the named channels."""
        table = DEFAULT_CHANNEL_RATES if rates is None else rates
        unknown = [n for n in names if n not in table]
        if unknown:
            raise ValueError(f"unknown heating channels {unknown}")
        return cls.diffusive(sum(table[n] for n in names))

    @property
    def max_rate(self) -> float:
        return max(self.a_plus, self.a_minus)


def validity_bound(model: HeatingModel, n_max: int) -> float:
    """Largest step the first-order transfer matrix tolerates, 1/(n_max A)."""
    if model.max_rate == 0 or n_max == 0:
        return math.inf
    return 1.0 / (n_max * model.max_rate)


def heating_step_matrix(model: HeatingModel, tau: float, n_max: int) -> np.ndarray:
    """First-order transfer matrix b[i, j] = P(n=i -> n=j) over one step tau.

    b_ii = 1 - (A+(i+1) + A- i) tau, b_{i,i+1} = A+ (i+1) tau,
    b_{i,i-1} = A- i tau.  The top row leaks upward probability out of the
    truncated ladder; that loss is the caller's to track.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    bound = validity_bound(model, n_max)
    if tau > bound:
        raise ValueError(
            f"tau = {tau} exceeds the validity bound 1/(n_max A) = {bound:.3e}; "
            "the first-order step matrix is valid only for small tau"
        )
    i = np.arange(n_max + 1, dtype=float)
    up = model.a_plus * (i + 1) * tau
    down = model.a_minus * i * tau
    b = np.diag(1.0 - up - down)
    if n_max >= 1:
        b[np.arange(n_max), np.arange(1, n_max + 1)] = up[:-1]
        b[np.arange(1, n_max + 1), np.arange(n_max)] = down[1:]
    return b


def propagate_heating(
    dist: PhononDistribution,
    model: HeatingModel,
    duration: float,
    substep_fraction: float = _SUBSTEP_FRACTION,
) -> PhononDistribution:
    """Evolve a distribution under the heating walk for `duration` seconds.

    Repeatedly applies the first-order step matrix with the step auto-set
    to a fraction of the validity bound.  Probability leaking past n_max
    shows up as tail loss.
    """
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if duration == 0 or model.max_rate == 0:
        return dist
    bound = validity_bound(model, dist.n_max)
    n_steps = max(1, math.ceil(duration / (substep_fraction * bound)))
    tau = duration / n_steps
    i = np.arange(dist.n_max + 1, dtype=float)
    up = model.a_plus * (i + 1) * tau
    down = model.a_minus * i * tau
    stay = 1.0 - up - down
    p = dist.probs.copy()
    for _ in range(n_steps):
        q = stay * p
        q[1:] += up[:-1] * p[:-1]
        q[:-1] += down[1:] * p[1:]
        p = q
    return PhononDistribution(probs=p, n_max=dist.n_max)


# ---------------------------------------------------------------------------
# optical pumping as an absorbing Markov chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Beam:
    """One repump beam: drives ground level F = f_ground to the F'=7 level.

    polarization 'sigma_pm' splits the weight equally between sigma+ and
    sigma- components.
    """

    label: str
    f_ground: int
    polarization: str
    weight: float = 1.0

    def components(self) -> list[tuple[int, float]]:
        if self.polarization == "pi":
            return [(0, self.weight)]
        if self.polarization == "sigma_plus":
            return [(+1, self.weight)]
        if self.polarization == "sigma_minus":
            return [(-1, self.weight)]
        if self.polarization == "sigma_pm":
            return [(+1, self.weight / 2), (-1, self.weight / 2)]
        raise ValueError(f"unknown polarization {self.polarization!r}")


def default_beams() -> tuple[Beam, ...]:
    return (
        Beam("D_pi", f_ground=7, polarization="pi"),
        Beam("D6", f_ground=6, polarization="sigma_pm"),
        Beam("D8", f_ground=8, polarization="sigma_pm"),
    )


@dataclass(frozen=True)
class PumpingGraph:
    """Scattering-event walk over the ground Zeeman sublevels."""

    states: tuple[tuple[int, int], ...]
    absorbing: tuple[int, int]
    beams: tuple[Beam, ...]
    step_matrix: np.ndarray

    def index(self, state: tuple[int, int]) -> int:
        return self.states.index(tuple(state))


def build_pumping_graph(
    beams: tuple[Beam, ...] | None = None,
    f_excited: int = 7,
    absorbing: tuple[int, int] = (7, 0),
) -> PumpingGraph:
    """One-scattering-event stochastic matrix over the 45 sublevels.

    Per event: an excitation channel is chosen among beam components with
    probability proportional to weight times the squared excitation CG,
    then the excited state decays with squared-CG branching over
    F in {6, 7, 8}.  The absorbing state must be dark under the beams.
    """
    if beams is None:
        beams = default_beams()
    f_grounds = (f_excited - 1, f_excited, f_excited + 1)
    states = tuple((f, m) for f in f_grounds for m in range(-f, f + 1))
    index = {s: i for i, s in enumerate(states)}
    n = len(states)

    matrix = np.zeros((n, n))
    for (f, m) in states:
        channels = []
        for beam in beams:
            if beam.f_ground != f:
                continue
            for q, w in beam.components():
                m_exc = m + q
                if abs(m_exc) > f_excited:
                    continue
                strength = abs(cg_signed_square(f, m, 1, q, f_excited, m_exc))
                if strength != 0:
                    channels.append((m_exc, w * float(strength)))
        total = sum(w for _, w in channels)
        if total == 0:
            continue
        row = index[(f, m)]
        for m_exc, w in channels:
            for (f2, m2), b in decay_branching(m_exc, f_excited).items():
                matrix[row, index[(f2, m2)]] += (w / total) * float(b)

    absorbing = tuple(absorbing)
    if absorbing not in index:
        raise ValueError(f"absorbing state {absorbing} not in the manifold")
    if matrix[index[absorbing]].sum() > 0:
        raise ValueError(
            f"beams drive the absorbing state {absorbing}; it must stay dark"
        )
    return PumpingGraph(states=states, absorbing=absorbing, beams=tuple(beams), step_matrix=matrix)


def _transient_system(graph: PumpingGraph) -> tuple[list[int], np.ndarray]:
    idx_abs = graph.index(graph.absorbing)
    transient = [i for i in range(len(graph.states)) if i != idx_abs]
    q = graph.step_matrix[np.ix_(transient, transient)]
    return transient, q


def _check_reachable(graph: PumpingGraph) -> None:
    # backward breadth-first search from the absorbing state
    n = len(graph.states)
    reach = {graph.index(graph.absorbing)}
    frontier = list(reach)
    incoming = [np.nonzero(graph.step_matrix[:, j] > 0)[0] for j in range(n)]
    while frontier:
        j = frontier.pop()
        for i in incoming[j]:
            if i not in reach:
                reach.add(int(i))
                frontier.append(int(i))
    stuck = [graph.states[i] for i in range(n) if i not in reach]
    if stuck:
        raise RuntimeError(
            f"absorption unreachable from {len(stuck)} states, e.g. {stuck[:3]}; "
            "check the beam set"
        )


def mean_steps_to_dark(
    graph: PumpingGraph, start: tuple[int, int] | dict | None = None
) -> float:
    """Expected scattering events before reaching the dark state.

    start: a single (F, m) level, a {level: weight} distribution, or None
    for a uniform average over all sublevels (the dark state counting 0).
    """
    _check_reachable(graph)
    transient, q = _transient_system(graph)
    try:
        x = np.linalg.solve(np.eye(len(transient)) - q, np.ones(len(transient)))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("absorption unreachable: singular fundamental matrix") from exc
    steps = np.zeros(len(graph.states))
    steps[transient] = x
    if start is None:
        return float(steps.mean())
    if isinstance(start, dict):
        total = sum(start.values())
        if total <= 0:
            raise ValueError("start distribution has zero weight")
        return float(sum(w * steps[graph.index(s)] for s, w in start.items()) / total)
    return float(steps[graph.index(tuple(start))])


def monte_carlo_steps(
    graph: PumpingGraph,
    start: tuple[int, int] | None,
    n_trajectories: int,
    seed: int = 0,
    max_steps: int = 100_000,
) -> tuple[float, float]:
    """Direct simulation of the scattering walk; returns (mean, stderr).

    Trajectories are propagated as ensemble counts with multinomial draws,
    which is statistically identical to walking them one by one.
    """
    _check_reachable(graph)
    rng = np.random.default_rng(seed)
    n = len(graph.states)
    idx_abs = graph.index(graph.absorbing)
    counts = np.zeros(n, dtype=np.int64)
    if start is None:
        base, extra = divmod(n_trajectories, n)
        counts[:] = base
        counts[:extra] += 1
    else:
        counts[graph.index(tuple(start))] = n_trajectories

    absorbed_at = []
    absorbed_so_far = counts[idx_abs]
    absorbed_at.append(int(absorbed_so_far))  # step 0
    counts[idx_abs] = 0
    for _ in range(max_steps):
        if counts.sum() == 0:
            break
        new = np.zeros(n, dtype=np.int64)
        for i in np.nonzero(counts)[0]:
            new += rng.multinomial(counts[i], graph.step_matrix[i])
        absorbed_at.append(int(new[idx_abs]))
        new[idx_abs] = 0
        counts = new
    else:
        raise RuntimeError(f"walkers not absorbed after {max_steps} steps")

    k = np.arange(len(absorbed_at), dtype=float)
    w = np.array(absorbed_at, dtype=float)
    total = w.sum()
    mean = float(k @ w / total)
    var = float((k - mean) ** 2 @ w / total)
    stderr = math.sqrt(var / total)
    return mean, stderr


def recoil_heating_estimate(
    scatter_rate: float, mean_steps: float, eta: float, geometry: float = 1.0 / 3.0
) -> float:
    """Recoil heating rate: scatter_rate * mean_steps * eta^2 * geometry.

    The geometry factor absorbs emission-pattern and beam-angle averaging;
    the default 1/3 is a fitted projection factor.
    """
    if scatter_rate < 0 or mean_steps < 0 or eta < 0 or geometry < 0:
        raise ValueError("all inputs must be >= 0")
    return scatter_rate * mean_steps * eta**2 * geometry
