"""Sequential model-based search over genotypes.

One iteration: maximize the (optionally penalty-constrained) expected
improvement over the forest surrogate by budgeted stochastic search, decode
the winner, dispatch its objective (fresh score, duplicate lookup, or the
infeasible constant), append to the data set and refit the forest. The
decoded-architecture set guarantees each architecture is scored at most once.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr

from . import surrogate
from .encoding import (
    Architecture,
    Genotype,
    Scheme,
    SearchSpace,
    decode,
    genotype_length,
    is_feasible,
    penalty,
    random_mutation,
    sample_lhs,
    sample_uniform,
)
from .exceptions import EmptyArchitecture, RnnSearchError, UnsupportedScheme
from .mrs import OutputActivation, SupervisedSet, mrs
from .seeding import sub_rng
from .surrogate import ForestConfig

_SCHEME_LETTER = {"F": Scheme.FLAG, "S": Scheme.SIZE, "P": Scheme.PLAIN}
_LETTER_SCHEME = {v: k for k, v in _SCHEME_LETTER.items()}


@dataclass(frozen=True)
class Strategy:
    """Which of the three search aids are on, and the encoding scheme."""

    constraint_handling: bool
    warm_start: bool
    infeasible_penalization: bool
    scheme: Scheme

    def __post_init__(self):
        if self.infeasible_penalization and self.scheme is Scheme.SIZE:
            raise ValueError("infeasible penalization is undefined for the size scheme")

    @property
    def code(self) -> str:
        return (
            ("C" if self.constraint_handling else "-")
            + ("W" if self.warm_start else "-")
            + ("I" if self.infeasible_penalization else "-")
            + _LETTER_SCHEME[self.scheme]
        )


@dataclass(frozen=True)
class BoConfig:
    max_evals: int = 100
    n_init: int = 10
    p_m: float = 0.01
    q: int = 100
    penalty_scale: float = 0.5
    warm_count: Optional[int] = None
    warm_mode: str = "random"
    proposal_budget: int = 2000
    seed: int = 0
    infeasible_objective: float = 0.0
    forest: ForestConfig = field(default_factory=ForestConfig)

    def __post_init__(self):
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.max_evals < 0:
            raise ValueError("max_evals must be >= 0")
        if self.proposal_budget < 1:
            raise ValueError("proposal_budget must be >= 1")
        if self.warm_mode not in ("random", "boundary"):
            raise ValueError("warm_mode must be 'random' or 'boundary'")


@dataclass
class TraceRow:
    index: int
    phase: str
    genotype: Genotype
    feasible: bool
    duplicate: bool
    mu: Optional[float]
    sigma: Optional[float]
    prob: Optional[float]
    objective: float
    best_so_far: float
    wall_ms: float


@dataclass
class SearchState:
    genotypes: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    seen: dict = field(default_factory=dict)  # Architecture -> objectives of rows decoding to it
    genotype_set: set = field(default_factory=set)
    t: int = 0

    @property
    def y_max(self) -> float:
        return max(self.objectives)


@dataclass
class BoResult:
    best_genotype: Genotype
    best_architecture: Optional["Architecture"] = None
    best_value: float = 0.0
    trace: list = field(default_factory=list)
    mrs_calls: int = 0
    infeasible_proposals: int = 0
    duplicate_proposals: int = 0
    n_init: int = 0
    n_warm: int = 0
    n_iterations: int = 0


class BoAborted(RnnSearchError):
    """The loop stopped on an evaluation failure; `.trace` holds rows so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def expected_improvement(mean, sd, y_max):
    """E[max(N(mean, sd^2) - y_max, 0)]; collapses to max(mean - y_max, 0) at sd = 0."""
    mean = np.asarray(mean, dtype=np.float64)
    sd = np.asarray(sd, dtype=np.float64)
    improve = mean - y_max
    with np.errstate(divide="ignore", invalid="ignore"):
        z = improve / sd
        ei = improve * ndtr(z) + sd * (np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi))
    ei = np.where(sd > 0.0, ei, np.maximum(improve, 0.0))
    ei = np.maximum(ei, 0.0)
    if ei.ndim == 0:
        return float(ei)
    return ei


def acquisition_scores(model, genotypes, state: SearchState, strat: Strategy, cfg: BoConfig):
    """Scores used by the proposal search: EI, minus the dynamic penalty when on."""
    M = np.asarray([g.values for g in genotypes], dtype=np.float64)
    mean, sd = model.predict_batch(M)
    scores = expected_improvement(mean, sd, state.y_max)
    scores = np.atleast_1d(np.asarray(scores, dtype=np.float64))
    if strat.constraint_handling:
        pen = np.asarray([penalty(g, state.genotype_set) for g in genotypes], dtype=np.float64)
        scores = scores - cfg.penalty_scale * state.t * pen
    return scores


def propose(model, space: SearchSpace, state: SearchState, strat: Strategy, cfg: BoConfig, rng) -> Genotype:
    """Budgeted acquisition maximization: half uniform sampling, half mutation
    hill climbing from the incumbent and the best uniform candidate."""
    n_uniform = max(1, cfg.proposal_budget // 2)
    candidates = [sample_uniform(space, rng) for _ in range(n_uniform)]
    scores = acquisition_scores(model, candidates, state, strat, cfg)
    k = int(np.argmax(scores))
    best_g, best_s = candidates[k], float(scores[k])
    remaining = cfg.proposal_budget - n_uniform
    if remaining > 0:
        incumbent = state.genotypes[int(np.argmax(state.objectives))]
        inc_s = float(acquisition_scores(model, [incumbent], state, strat, cfg)[0])
        remaining -= 1
        if inc_s > best_s:
            best_g, best_s = incumbent, inc_s
        chains = [[incumbent, inc_s], [candidates[k], float(scores[k])]]
        turn = 0
        while remaining > 0:
            chain = chains[turn % len(chains)]
            turn += 1
            cand = random_mutation(chain[0], space, rng)
            s = float(acquisition_scores(model, [cand], state, strat, cfg)[0])
            remaining -= 1
            if s > chain[1]:
                chain[0], chain[1] = cand, s
            if s > best_s:
                best_g, best_s = cand, s
    return best_g


def _default_warm_count(space: SearchSpace) -> int:
    return 2 * genotype_length(space) * space.max_layers


def _zero_some_slots(g: Genotype, space: SearchSpace, rng) -> Genotype:
    m = space.max_layers
    k = 1 + int(rng.integers(m))
    slots = rng.choice(m, size=k, replace=False)
    vals = list(g.values)
    for s in slots:
        if space.scheme is Scheme.PLAIN:
            vals[int(s)] = 0
        else:
            vals[2 * int(s) + 1] = 0
    return Genotype(tuple(vals), space.scheme)


def _boundary_patterns(m: int):
    """Layer on/off patterns that are not of the trailing-off canonical form."""
    for bits in itertools.product((0, 1), repeat=m):
        on = sum(bits)
        canonical = on >= 1 and all(b == 0 for b in bits[on:]) and all(b == 1 for b in bits[:on])
        if not canonical:
            yield bits


def warm_data(space: SearchSpace, count: Optional[int], rng, mode: str = "random"):
    """Infeasible genotypes with objective fixed at zero; no scoring runs.

    random mode: draw a genotype, knock out a random subset of layers, keep it
    if infeasible. boundary mode: enumerate every infeasible on/off pattern
    with neuron slots at their bounds and look-back at its bounds.
    """
    if space.scheme is Scheme.SIZE:
        raise UnsupportedScheme("the size scheme has no infeasible genotypes")
    if mode == "boundary":
        genos = []
        lo, hi = space.neuron_lo, space.neuron_hi
        neuron_choices = (lo,) if lo == hi else (lo, hi)
        lb_choices = (
            (space.lookback_min,)
            if space.lookback_min == space.lookback_max
            else (space.lookback_min, space.lookback_max)
        )
        for bits in _boundary_patterns(space.max_layers):
            if space.scheme is Scheme.PLAIN:
                slots = [(0,) if b == 0 else neuron_choices for b in bits]
                for combo in itertools.product(*slots):
                    for lb in lb_choices:
                        genos.append(Genotype(tuple(combo) + (lb,), space.scheme))
            else:
                for hvals in itertools.product(neuron_choices, repeat=space.max_layers):
                    interleaved = tuple(v for pair in zip(hvals, bits) for v in pair)
                    for lb in lb_choices:
                        genos.append(Genotype(interleaved + (lb,), space.scheme))
        return genos, [0.0] * len(genos)
    if count is None:
        count = _default_warm_count(space)
    if count < 0:
        raise ValueError("count must be >= 0")
    genos = []
    while len(genos) < count:
        g = _zero_some_slots(sample_uniform(space, rng), space, rng)
        if not is_feasible(g, space):
            genos.append(g)
    return genos, [0.0] * len(genos)


def _append_row(state, trace, phase, g, feasible, duplicate, mu, sigma, prob, obj, wall_ms, arch):
    state.genotypes.append(g)
    state.objectives.append(obj)
    state.genotype_set.add(g)
    if arch is not None:
        state.seen.setdefault(arch, []).append(obj)
    best = max(obj, trace[-1].best_so_far) if trace else obj
    trace.append(
        TraceRow(
            index=len(trace),
            phase=phase,
            genotype=g,
            feasible=feasible,
            duplicate=duplicate,
            mu=mu,
            sigma=sigma,
            prob=prob,
            objective=obj,
            best_so_far=best,
            wall_ms=wall_ms,
        )
    )


def run(
    train_set: SupervisedSet,
    space: SearchSpace,
    strat: Strategy,
    cfg: BoConfig,
    act: OutputActivation,
) -> BoResult:
    """Full search: LHS init, optional warm data, then max_evals model-guided steps."""
    if strat.scheme is not space.scheme:
        raise ValueError("strategy and space disagree on the encoding scheme")
    trace: list = []
    state = SearchState()
    counters = {"mrs": 0, "infeasible": 0, "duplicate": 0}
    rng_dup = sub_rng(cfg.seed, "dup")

    def evaluate(g: Genotype, phase: str, in_loop: bool):
        t0 = time.perf_counter()
        feasible = is_feasible(g, space)
        arch = None
        try:
            arch = decode(g, space)
        except EmptyArchitecture:
            arch = None
        duplicate = arch is not None and arch in state.seen
        mu = sigma = prob = None
        if arch is None:
            obj = cfg.infeasible_objective
        elif duplicate:
            prior = state.seen[arch]
            obj = float(prior[int(rng_dup.integers(len(prior)))])
        elif strat.infeasible_penalization and strat.scheme is not Scheme.SIZE and not feasible:
            obj = cfg.infeasible_objective
        else:
            r = mrs(train_set, arch, cfg.p_m, cfg.q, act, sub_rng(cfg.seed, "mrs", counters["mrs"]))
            counters["mrs"] += 1
            mu, sigma, prob = r.mu, r.sigma, r.prob
            obj = r.prob
        if in_loop:
            if not feasible:
                counters["infeasible"] += 1
            if duplicate:
                counters["duplicate"] += 1
        wall_ms = (time.perf_counter() - t0) * 1e3
        _append_row(state, trace, phase, g, feasible, duplicate, mu, sigma, prob, obj, wall_ms, arch)

    try:
        for g in sample_lhs(space, cfg.n_init, sub_rng(cfg.seed, "lhs")):
            evaluate(g, "init", in_loop=False)
        n_init_rows = len(trace)
        if strat.warm_start:
            genos, objs = warm_data(space, cfg.warm_count, sub_rng(cfg.seed, "warm"), cfg.warm_mode)
            for g, obj in zip(genos, objs):
                t0 = time.perf_counter()
                try:
                    arch = decode(g, space)
                except EmptyArchitecture:
                    arch = None
                _append_row(
                    state, trace, "warm", g, is_feasible(g, space), False, None, None, None,
                    float(obj), (time.perf_counter() - t0) * 1e3, arch,
                )
        n_warm_rows = len(trace) - n_init_rows

        if cfg.max_evals > 0:
            model = surrogate.fit(
                state.genotypes, state.objectives, cfg.forest, sub_rng(cfg.seed, "forest", 0)
            )
        while state.t < cfg.max_evals:
            g = propose(model, space, state, strat, cfg, sub_rng(cfg.seed, "propose", state.t))
            evaluate(g, "loop", in_loop=True)
            state.t += 1
            model = surrogate.fit(
                state.genotypes, state.objectives, cfg.forest, sub_rng(cfg.seed, "forest", state.t)
            )
    except RnnSearchError as err:
        raise BoAborted(f"search aborted: {err}", trace) from err

    best_value = max(state.objectives)
    best_idx = None
    best_arch = None
    for i, (g, y) in enumerate(zip(state.genotypes, state.objectives)):
        if y == best_value:
            try:
                best_arch = decode(g, space)
                best_idx = i
                break
            except EmptyArchitecture:
                continue
    if best_idx is None:
        raise BoAborted("no evaluated genotype decodes to an architecture", trace)
    return BoResult(
        best_genotype=state.genotypes[best_idx],
        best_architecture=best_arch,
        best_value=best_value,
        trace=trace,
        mrs_calls=counters["mrs"],
        infeasible_proposals=counters["infeasible"],
        duplicate_proposals=counters["duplicate"],
        n_init=n_init_rows,
        n_warm=n_warm_rows,
        n_iterations=state.t,
    )
