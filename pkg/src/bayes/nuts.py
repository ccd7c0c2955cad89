"""
No-U-Turn sampler with a diagonal Euclidean metric.

Trajectories grow by doubling in a random direction until the generalized
U-turn criterion fires, the tree reaches `max_depth` or the energy error
exceeds `MAX_ENERGY_ERROR` (a divergence). The next state is drawn from the
trajectory with multinomial weights exp(−H).

Warmup follows the windowed scheme:
- an initial buffer adapting the step size only,
- doubling windows that also estimate the diagonal metric,
- a terminal buffer adapting the step size for the final metric.

Every chain owns a stream spawned from the run seed, so draws do not depend
on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import polars as pl

from das.logger import log_debug, log_info, log_warn
from src.errors import SamplerError

MAX_ENERGY_ERROR = 1000.0
MAX_DIVERGENT_FRACTION = 0.05
MAX_INIT_ATTEMPTS = 100
MAX_CONSECUTIVE_NONFINITE = 50


class Target(Protocol):
    """Unnormalised log density on R^dim with its gradient."""

    @property
    def dim(self) -> int: ...

    def logp_and_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]: ...

    def initial_point(self, rng: np.random.Generator) -> np.ndarray: ...

    def constrained_vector(self, u: np.ndarray) -> np.ndarray: ...

    def parameter_names(self) -> list[str]: ...


@dataclass(frozen=True)
class SamplerSettings:
    chains: int = 4
    warmup: int = 2000
    keep: int = 2000
    target_accept: float = 0.8
    max_depth: int = 10
    seed: int = 0


@dataclass(frozen=True)
class PosteriorDraws:
    """Post-warmup draws in constrained space with per-iteration sampler statistics."""

    parameter_names: tuple[str, ...]
    values: np.ndarray  # (chains, keep, P)
    accept_stat: np.ndarray  # (chains, keep)
    tree_depth: np.ndarray
    n_leapfrog: np.ndarray
    divergent: np.ndarray
    energy: np.ndarray
    step_size: np.ndarray  # (chains,)
    inv_metric: np.ndarray  # (chains, dim)

    @property
    def n_chains(self) -> int:
        return self.values.shape[0]

    @property
    def n_keep(self) -> int:
        return self.values.shape[1]

    @property
    def divergence_count(self) -> int:
        return int(self.divergent.sum())

    @property
    def divergent_fraction(self) -> float:
        return self.divergence_count / max(self.divergent.size, 1)

    @property
    def divergence_warning(self) -> bool:
        return self.divergent_fraction > MAX_DIVERGENT_FRACTION

    def column(self, name: str) -> np.ndarray:
        """(chains, keep) draws of one parameter."""
        return self.values[:, :, self.parameter_names.index(name)]

    def to_frame(self) -> pl.DataFrame:
        chains, keep, _ = self.values.shape
        head = pl.DataFrame(
            {
                "chain": np.repeat(np.arange(chains), keep),
                "iter": np.tile(np.arange(keep), chains),
            }
        )
        body = pl.DataFrame(
            self.values.reshape(chains * keep, -1),
            schema=list(self.parameter_names),
            orient="row",
        )
        return pl.concat([head, body], how="horizontal")

    def stats_frame(self) -> pl.DataFrame:
        chains, keep = self.accept_stat.shape
        return pl.DataFrame(
            {
                "chain": np.repeat(np.arange(chains), keep),
                "iter": np.tile(np.arange(keep), chains),
                "accept_stat": self.accept_stat.ravel(),
                "tree_depth": self.tree_depth.ravel(),
                "n_leapfrog": self.n_leapfrog.ravel(),
                "divergent": self.divergent.ravel(),
                "energy": self.energy.ravel(),
            }
        )


@dataclass
class _State:
    q: np.ndarray
    p: np.ndarray
    grad: np.ndarray
    logp: float


@dataclass
class _Tree:
    first: _State  # closest to the start of this subtree
    last: _State  # furthest from it
    proposal: _State
    log_weight: float
    rho: np.ndarray
    valid: bool
    divergent: bool
    sum_accept: float
    n_leapfrog: int


@dataclass
class Transition:
    state: _State
    accept_stat: float
    tree_depth: int
    n_leapfrog: int
    divergent: bool
    energy: float


@dataclass
class DualAveraging:
    """Nesterov dual averaging of log step size towards a target acceptance statistic."""

    mu: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    log_eps: float = 0.0
    log_eps_bar: float = 0.0
    h_bar: float = 0.0
    t: int = 0

    @classmethod
    def starting_at(cls, step_size: float) -> DualAveraging:
        return cls(mu=math.log(10.0 * step_size), log_eps=math.log(step_size))

    def update(self, accept_stat: float, target: float) -> float:
        self.t += 1
        eta = 1.0 / (self.t + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (target - accept_stat)
        self.log_eps = self.mu - math.sqrt(self.t) / self.gamma * self.h_bar
        weight = self.t ** (-self.kappa)
        self.log_eps_bar = weight * self.log_eps + (1.0 - weight) * self.log_eps_bar
        return math.exp(self.log_eps)

    def final(self) -> float:
        return math.exp(self.log_eps_bar)


def warmup_windows(warmup: int) -> list[tuple[int, int]]:
    """[start, end) iterations whose draws estimate the metric, doubling in length."""
    if warmup < 20:
        return []
    if warmup >= 150:
        init_buffer, term_buffer, base_window = 75, 50, 25
    else:
        init_buffer = int(0.15 * warmup)
        term_buffer = int(0.10 * warmup)
        base_window = warmup - init_buffer - term_buffer
    end_middle = warmup - term_buffer
    windows = []
    start = init_buffer
    width = base_window
    while start < end_middle:
        end = start + width
        # a window that would leave a remainder shorter than twice its width absorbs it
        if end + 2 * width > end_middle:
            end = end_middle
        windows.append((start, end))
        start = end
        width *= 2
    return windows


def regularized_variance(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[0]
    var = samples.var(axis=0, ddof=1)
    return (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))


def _u_turn(rho: np.ndarray, p_a: np.ndarray, p_b: np.ndarray, inv_metric: np.ndarray) -> bool:
    return float(rho @ (inv_metric * p_a)) <= 0.0 or float(rho @ (inv_metric * p_b)) <= 0.0


class Kernel:
    """One chain's NUTS transition for a fixed step size and metric."""

    def __init__(self, target: Target, rng: np.random.Generator, max_depth: int):
        self.target = target
        self.rng = rng
        self.max_depth = max_depth
        self.step_size = 1.0
        self.inv_metric = np.ones(target.dim)

    def evaluate(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        with np.errstate(all="ignore"):
            try:
                logp, grad = self.target.logp_and_grad(q)
            except (FloatingPointError, OverflowError, ValueError):
                return -math.inf, np.zeros_like(q)
        if not math.isfinite(logp) or not np.all(np.isfinite(grad)):
            return -math.inf, np.zeros_like(q)
        return float(logp), grad

    def kinetic(self, p: np.ndarray) -> float:
        return 0.5 * float(p @ (self.inv_metric * p))

    def hamiltonian(self, state: _State) -> float:
        if not math.isfinite(state.logp):
            return math.inf
        return -state.logp + self.kinetic(state.p)

    def leapfrog(self, state: _State, eps: float) -> _State:
        p_half = state.p + 0.5 * eps * state.grad
        q = state.q + eps * self.inv_metric * p_half
        logp, grad = self.evaluate(q)
        return _State(q, p_half + 0.5 * eps * grad, grad, logp)

    def sample_momentum(self) -> np.ndarray:
        return self.rng.standard_normal(self.inv_metric.size) / np.sqrt(self.inv_metric)

    def _leaf(self, start: _State, direction: int, h0: float) -> _Tree:
        state = self.leapfrog(start, direction * self.step_size)
        h = self.hamiltonian(state)
        if math.isnan(h):
            h = math.inf
        delta = h - h0
        divergent = delta > MAX_ENERGY_ERROR
        accept = 0.0 if not math.isfinite(delta) else min(1.0, math.exp(-delta))
        return _Tree(
            first=state,
            last=state,
            proposal=state,
            log_weight=-delta,
            rho=state.p.copy(),
            valid=not divergent,
            divergent=divergent,
            sum_accept=accept,
            n_leapfrog=1,
        )

    def build_tree(self, start: _State, direction: int, depth: int, h0: float) -> _Tree:
        if depth == 0:
            return self._leaf(start, direction, h0)
        inner = self.build_tree(start, direction, depth - 1, h0)
        if not inner.valid:
            return inner
        outer = self.build_tree(inner.last, direction, depth - 1, h0)
        sum_accept = inner.sum_accept + outer.sum_accept
        n_leapfrog = inner.n_leapfrog + outer.n_leapfrog
        if not outer.valid:
            return _Tree(
                inner.first, outer.last, inner.proposal, -math.inf, inner.rho,
                False, outer.divergent, sum_accept, n_leapfrog,
            )
        log_weight = float(np.logaddexp(inner.log_weight, outer.log_weight))
        if math.log(self.rng.uniform()) < outer.log_weight - log_weight:
            proposal = outer.proposal
        else:
            proposal = inner.proposal
        rho = inner.rho + outer.rho
        m = self.inv_metric
        valid = not (
            _u_turn(rho, inner.first.p, outer.last.p, m)
            or _u_turn(inner.rho + outer.first.p, inner.first.p, outer.first.p, m)
            or _u_turn(inner.last.p + outer.rho, inner.last.p, outer.last.p, m)
        )
        return _Tree(
            inner.first, outer.last, proposal, log_weight, rho,
            valid, False, sum_accept, n_leapfrog,
        )

    def transition(self, q: np.ndarray, logp: float, grad: np.ndarray) -> Transition:
        p0 = self.sample_momentum()
        start = _State(q, p0, grad, logp)
        h0 = self.hamiltonian(start)
        backward = forward = start
        proposal = start
        log_weight = 0.0
        rho = p0.copy()
        sum_accept = 0.0
        n_leapfrog = 0
        divergent = False
        depth = 0
        while depth < self.max_depth:
            direction = 1 if self.rng.uniform() < 0.5 else -1
            edge = forward if direction == 1 else backward
            tree = self.build_tree(edge, direction, depth, h0)
            depth += 1
            sum_accept += tree.sum_accept
            n_leapfrog += tree.n_leapfrog
            if not tree.valid:
                divergent = tree.divergent
                break
            if direction == 1:
                forward = tree.last
            else:
                backward = tree.last
            # biased progressive sampling favours the newer subtree
            if math.log(self.rng.uniform()) < tree.log_weight - log_weight:
                proposal = tree.proposal
            log_weight = float(np.logaddexp(log_weight, tree.log_weight))
            rho = rho + tree.rho
            if _u_turn(rho, backward.p, forward.p, self.inv_metric):
                break
        return Transition(
            state=proposal,
            accept_stat=sum_accept / max(n_leapfrog, 1),
            tree_depth=depth,
            n_leapfrog=n_leapfrog,
            divergent=divergent,
            energy=self.hamiltonian(proposal),
        )

    def find_reasonable_step_size(self, q: np.ndarray, logp: float, grad: np.ndarray) -> float:
        """Double or halve the step until a single leapfrog step crosses acceptance 1/2."""
        eps = self.step_size
        p = self.sample_momentum()
        start = _State(q, p, grad, logp)
        h0 = self.hamiltonian(start)

        def log_accept(step: float) -> float:
            h = self.hamiltonian(self.leapfrog(start, step))
            return h0 - h if math.isfinite(h) else -math.inf

        direction = 1.0 if log_accept(eps) > math.log(0.5) else -1.0
        for _ in range(100):
            if direction * log_accept(eps) <= -direction * math.log(2.0):
                break
            eps *= 2.0**direction
            if not 1e-10 < eps < 1e7:
                break
        return float(np.clip(eps, 1e-10, 1e7))


def hamiltonian_drift(target: Target, q: np.ndarray, p: np.ndarray, step_size: float, length: float) -> float:
    """Largest |H − H0| along a leapfrog trajectory of fixed integration time."""
    kernel = Kernel(target, np.random.default_rng(0), max_depth=1)
    logp, grad = kernel.evaluate(q)
    state = _State(np.asarray(q, dtype=np.float64), np.asarray(p, dtype=np.float64), grad, logp)
    h0 = kernel.hamiltonian(state)
    drift = 0.0
    for _ in range(int(round(length / step_size))):
        state = kernel.leapfrog(state, step_size)
        drift = max(drift, abs(kernel.hamiltonian(state) - h0))
    return drift


def chain_rngs(seed: int, chains: int) -> list[np.random.Generator]:
    return [
        np.random.Generator(np.random.Philox(child))
        for child in np.random.SeedSequence(seed).spawn(chains)
    ]


def _initialize(kernel: Kernel) -> tuple[np.ndarray, float, np.ndarray]:
    for _ in range(MAX_INIT_ATTEMPTS):
        q = kernel.target.initial_point(kernel.rng)
        logp, grad = kernel.evaluate(q)
        if math.isfinite(logp):
            return q, logp, grad
    raise SamplerError(
        f"No finite log density after {MAX_INIT_ATTEMPTS} initialization attempts"
    )


@dataclass
class ChainResult:
    values: np.ndarray
    accept_stat: np.ndarray
    tree_depth: np.ndarray
    n_leapfrog: np.ndarray
    divergent: np.ndarray
    energy: np.ndarray
    step_size: float
    inv_metric: np.ndarray = field(default_factory=lambda: np.empty(0))


def run_chain(
    target: Target, settings: SamplerSettings, rng: np.random.Generator, chain: int = 0
) -> ChainResult:
    kernel = Kernel(target, rng, settings.max_depth)
    q, logp, grad = _initialize(kernel)
    kernel.step_size = kernel.find_reasonable_step_size(q, logp, grad)
    adapter = DualAveraging.starting_at(kernel.step_size)
    windows = warmup_windows(settings.warmup)
    window_ends = {end: start for start, end in windows}
    warmup_draws = np.empty((settings.warmup, target.dim))
    nonfinite_run = 0

    def step() -> Transition:
        nonlocal q, logp, grad, nonfinite_run
        result = kernel.transition(q, logp, grad)
        if math.isfinite(result.energy):
            nonfinite_run = 0
        else:
            nonfinite_run += 1
            if nonfinite_run >= MAX_CONSECUTIVE_NONFINITE:
                raise SamplerError(
                    f"Chain {chain}: {nonfinite_run} consecutive non-finite energies"
                )
        q, logp, grad = result.state.q, result.state.logp, result.state.grad
        return result

    for i in range(settings.warmup):
        result = step()
        kernel.step_size = adapter.update(result.accept_stat, settings.target_accept)
        warmup_draws[i] = q
        if i + 1 in window_ends:
            kernel.inv_metric = regularized_variance(warmup_draws[window_ends[i + 1] : i + 1])
            kernel.step_size = kernel.find_reasonable_step_size(q, logp, grad)
            adapter = DualAveraging.starting_at(kernel.step_size)
            log_debug(f"Chain {chain}: metric updated at warmup iteration {i + 1}")
    if settings.warmup > 0:
        kernel.step_size = adapter.final()

    n_names = len(target.parameter_names())
    out = ChainResult(
        values=np.empty((settings.keep, n_names)),
        accept_stat=np.empty(settings.keep),
        tree_depth=np.empty(settings.keep, dtype=np.int64),
        n_leapfrog=np.empty(settings.keep, dtype=np.int64),
        divergent=np.empty(settings.keep, dtype=bool),
        energy=np.empty(settings.keep),
        step_size=kernel.step_size,
        inv_metric=kernel.inv_metric.copy(),
    )
    for i in range(settings.keep):
        result = step()
        out.values[i] = target.constrained_vector(q)
        out.accept_stat[i] = result.accept_stat
        out.tree_depth[i] = result.tree_depth
        out.n_leapfrog[i] = result.n_leapfrog
        out.divergent[i] = result.divergent
        out.energy[i] = result.energy
    log_debug(
        f"Chain {chain}: step size {kernel.step_size:.4g}, "
        f"{int(out.divergent.sum())} divergent transitions"
    )
    return out


def sample(target: Target, settings: SamplerSettings, threads: int = 1) -> PosteriorDraws:
    """Run `settings.chains` independent chains and stack their post-warmup draws."""
    rngs = chain_rngs(settings.seed, settings.chains)
    log_info(
        f"Sampling {settings.chains} chains: {settings.warmup} warmup + "
        f"{settings.keep} kept iterations, {target.dim} coordinates"
    )
    if threads > 1 and settings.chains > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    lambda args: run_chain(target, settings, args[1], args[0]),
                    enumerate(rngs),
                )
            )
    else:
        results = [run_chain(target, settings, rng, c) for c, rng in enumerate(rngs)]

    draws = PosteriorDraws(
        parameter_names=tuple(target.parameter_names()),
        values=np.stack([r.values for r in results]),
        accept_stat=np.stack([r.accept_stat for r in results]),
        tree_depth=np.stack([r.tree_depth for r in results]),
        n_leapfrog=np.stack([r.n_leapfrog for r in results]),
        divergent=np.stack([r.divergent for r in results]),
        energy=np.stack([r.energy for r in results]),
        step_size=np.array([r.step_size for r in results]),
        inv_metric=np.stack([r.inv_metric for r in results]),
    )
    if draws.divergence_warning:
        log_warn(
            f"{draws.divergence_count} divergent transitions "
            f"({draws.divergent_fraction:.1%} of kept iterations); "
            "posterior summaries may be biased"
        )
    else:
        log_info(f"Sampling done: {draws.divergence_count} divergent transitions")
    return draws
