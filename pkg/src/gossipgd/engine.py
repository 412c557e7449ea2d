"""Distributed gradient descent engine with synchronized reference processes.

Each iteration advances four coupled recursions on the same step sequence:

* ``local``: the per-agent gossip iterates (the algorithm under study),
* ``pooled``: single-machine gradient descent on the union of all samples,
* ``population``: noiseless descent on the exact covariance,
* ``popcov``: linear accumulators that isolate the covariance-driven part
  of each agent's deviation from the pooled iterate.

Keeping them in lockstep is what makes the error decomposition in
:mod:`gossipgd.diagnostics` exact rather than estimated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .problem import AgentData, SpectralProblem
from .topology import GossipMatrix

PROTOCOL_VARIANTS = ("gossip_after_gradient", "gossip_before_gradient")

DIVERGENCE_NORM = 1e12


class DivergenceError(RuntimeError):
    """Iterates left the trust region; carries the failing iteration."""

    def __init__(self, iteration: int, records=None):
        super().__init__(f"iterate norm exceeded {DIVERGENCE_NORM:.0e} at iteration {iteration}")
        self.iteration = iteration
        self.records = records or []


@dataclass(frozen=True)
class StepSchedule:
    """Polynomially decaying step sizes ``eta * t**-theta``."""

    eta: float
    theta: float = 0.0

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if not 0.0 <= self.theta <= 0.75:
            raise ValueError(f"theta must be in [0, 3/4], got {self.theta}")

    def at(self, t: int) -> float:
        return self.eta if self.theta == 0.0 else self.eta * float(t) ** (-self.theta)

    def partial_sum(self, t: int) -> float:
        """sum of the first t step sizes."""
        if self.theta == 0.0:
            return self.eta * t
        return float(self.eta * np.sum(np.arange(1, t + 1, dtype=float) ** (-self.theta)))


@dataclass(frozen=True)
class AgentStats:
    """Per-agent sufficient statistics for least-squares gradients.

    The gradient of the local empirical risk at w is ``C_v w - b_v`` with
    ``C_v`` the empirical second moment and ``b_v`` the response
    cross-moment.  ``C_v`` is kept as an exact diagonal when every sample
    touches a single coordinate, as a dense matrix when m >= d, and
    implicitly (re-multiplying through the sample matrix) when d > m.
    """

    xy: np.ndarray = field(repr=False)  # (n, d)
    mode: str
    cov_diag: np.ndarray | None = field(default=None, repr=False)  # (n, d)
    cov: np.ndarray | None = field(default=None, repr=False)  # (n, d, d)
    x: np.ndarray | None = field(default=None, repr=False)  # (n, m, d)

    @classmethod
    def from_data(cls, datasets: list[AgentData]) -> "AgentStats":
        if not datasets:
            raise ValueError("need at least one agent")
        shapes = {data.x.shape for data in datasets}
        if len(shapes) != 1:
            raise ValueError(f"agents must hold equally shaped samples, got {shapes}")
        m, d = shapes.pop()
        xs = np.stack([data.x for data in datasets])
        ys = np.stack([data.y for data in datasets])
        xy = np.einsum("nmd,nm->nd", xs, ys) / m
        if all(np.count_nonzero(data.x, axis=1).max(initial=0) <= 1 for data in datasets):
            return cls(xy=xy, mode="diag", cov_diag=(xs * xs).sum(axis=1) / m)
        if m >= d:
            return cls(xy=xy, mode="dense", cov=np.einsum("nmd,nme->nde", xs, xs) / m)
        return cls(xy=xy, mode="stream", x=xs)

    @property
    def n(self) -> int:
        return self.xy.shape[0]

    def gradients(self, W: np.ndarray) -> np.ndarray:
        """Per-agent gradients at per-agent points W (n, d)."""
        if self.mode == "diag":
            return self.cov_diag * W - self.xy
        if self.mode == "dense":
            return np.einsum("nde,ne->nd", self.cov, W) - self.xy
        m = self.x.shape[1]
        proj = np.einsum("nmd,nd->nm", self.x, W)
        return np.einsum("nmd,nm->nd", self.x, proj) / m - self.xy

    def gradients_at(self, w: np.ndarray) -> np.ndarray:
        """Per-agent gradients at a common point w (d,)."""
        if self.mode == "diag":
            return self.cov_diag * w[None, :] - self.xy
        if self.mode == "dense":
            return np.einsum("nde,e->nd", self.cov, w) - self.xy
        m = self.x.shape[1]
        proj = np.einsum("nmd,d->nm", self.x, w)
        return np.einsum("nmd,nm->nd", self.x, proj) / m - self.xy

    def mean_gradient(self, w: np.ndarray) -> np.ndarray:
        """Gradient of the pooled empirical risk (average over agents)."""
        return self.gradients_at(w).mean(axis=0)


@dataclass
class TrainState:
    """All lockstep iterates at iteration ``t`` (1-based, all-zero start)."""

    t: int
    local: np.ndarray  # (n, d)
    pooled: np.ndarray  # (d,)
    population: np.ndarray  # (d,)
    popcov_state: np.ndarray  # (n, d)
    popcov_avg: np.ndarray  # (d,)


@dataclass
class RunResult:
    records: list
    final: TrainState


def dgd_step(
    local: np.ndarray,
    stats: AgentStats,
    P_entries: np.ndarray,
    eta: float,
    variant: str = "gossip_after_gradient",
) -> np.ndarray:
    """One distributed step: local gradient moves combined by gossip.

    ``gossip_after_gradient`` averages the post-gradient iterates (the
    default protocol); ``gossip_before_gradient`` averages first and then
    applies each agent's own gradient taken at its pre-average iterate.
    """
    if variant == "gossip_after_gradient":
        return P_entries @ (local - eta * stats.gradients(local))
    if variant == "gossip_before_gradient":
        return P_entries @ local - eta * stats.gradients(local)
    raise ValueError(f"unknown protocol variant {variant!r}")


def single_machine_step(pooled: np.ndarray, stats: AgentStats, eta: float) -> np.ndarray:
    """Gradient descent on all nm samples pooled into one machine."""
    return pooled - eta * stats.mean_gradient(pooled)


def population_step(population: np.ndarray, problem: SpectralProblem, eta: float) -> np.ndarray:
    """Noiseless descent on the exact covariance (pure bias dynamics)."""
    return population - eta * problem.tau * (population - problem.target)


def noise_terms(population: np.ndarray, stats: AgentStats, problem: SpectralProblem) -> np.ndarray:
    """Per-agent gap between the population gradient and each local one.

    Evaluated along the population path these are mean-zero over the data
    draw; they are the inputs the popcov accumulators integrate.
    """
    pop_grad = problem.tau * (population - problem.target)
    return pop_grad[None, :] - stats.gradients_at(population)


def run(
    problem: SpectralProblem,
    datasets: list[AgentData],
    P: GossipMatrix,
    sched: StepSchedule,
    T: int,
    *,
    variant: str = "gossip_after_gradient",
    stride: int = 1,
    initial_local: np.ndarray | None = None,
    observer=None,
) -> RunResult:
    """Advance all processes in lockstep for T iterations.

    Iteration t is recorded (via :func:`gossipgd.diagnostics.decompose`)
    whenever ``t % stride == 0``, plus always the final iteration.  The
    returned records therefore end with the state at ``t = T``.  Raises
    :class:`DivergenceError` (carrying partial records) if the local
    iterates blow past ``DIVERGENCE_NORM``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if variant not in PROTOCOL_VARIANTS:
        raise ValueError(f"unknown protocol variant {variant!r}")
    if P.n != len(datasets):
        raise ValueError(f"gossip matrix is {P.n}x{P.n} but there are {len(datasets)} agents")

    stats = AgentStats.from_data(datasets)
    n, d = stats.n, problem.d
    if stats.xy.shape[1] != d:
        raise ValueError("agent data dimension does not match the problem")
    if sched.at(1) * problem.kappa_sq > 1.0 + 1e-12:
        warnings.warn(
            f"eta * kappa_sq = {sched.at(1) * problem.kappa_sq:.3g} > 1; "
            "contraction of the local steps is not guaranteed",
            RuntimeWarning,
            stacklevel=2,
        )

    if initial_local is None:
        local = np.zeros((n, d))
    else:
        local = np.array(initial_local, dtype=float)
        if local.shape != (n, d):
            raise ValueError(f"initial_local must have shape {(n, d)}")
    state = TrainState(
        t=1,
        local=local,
        pooled=np.zeros(d),
        population=np.zeros(d),
        popcov_state=np.zeros((n, d)),
        popcov_avg=np.zeros(d),
    )

    records = []
    for t in range(1, T + 1):
        if observer is not None:
            observer(state)
        if t % stride == 0 or t == T:
            records.append(diagnostics.decompose(state, problem))
        if t == T:
            break
        eta_t = sched.at(t)
        noise = noise_terms(state.population, stats, problem)
        pc_state, pc_avg = diagnostics.popcov_step(
            state.popcov_state, state.popcov_avg, noise, P.entries, problem.tau, eta_t
        )
        new_local = dgd_step(state.local, stats, P.entries, eta_t, variant)
        if not np.all(np.isfinite(new_local)) or np.linalg.norm(new_local) > DIVERGENCE_NORM:
            raise DivergenceError(t + 1, records)
        state = TrainState(
            t=t + 1,
            local=new_local,
            pooled=single_machine_step(state.pooled, stats, eta_t),
            population=population_step(state.population, problem, eta_t),
            popcov_state=pc_state,
            popcov_avg=pc_avg,
        )
    return RunResult(records=records, final=state)
