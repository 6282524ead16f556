"""Controlled random search with local mutation (CRS2-LM) on a box.

Derivative-free and global, so it tolerates the piecewise-constant
objectives produced by counting misclassifications.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadBounds, BudgetTooSmall

XTOL = "xtol"
MAX_EVAL = "max_eval"
STALLED = "stalled"


@dataclass(frozen=True)
class CrsOptions:
    population_size: int | None = None  # None: 10 * (dim + 1)
    max_evaluations: int = 10000
    xtol_rel: float = 1e-6
    seed: int = 0
    initial_point: tuple | None = None
    stall_factor: int = 200  # stop after stall_factor * dim proposals without replacement

    def resolved_population(self, dim):
        return 10 * (dim + 1) if self.population_size is None else int(self.population_size)


@dataclass(frozen=True, eq=False)
class OptimResult:
    point: np.ndarray
    value: float
    evaluations: int
    stop_reason: str
    best_trace: list = field(default_factory=list)  # best value after every replacement


def _validate(lower, upper, opts):
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    if lower.shape != upper.shape or lower.size == 0:
        raise BadBounds(f"bounds of shapes {lower.shape} and {upper.shape}")
    if not (np.isfinite(lower).all() and np.isfinite(upper).all()) or not (lower < upper).all():
        raise BadBounds("every coordinate needs finite lower < upper")
    dim = lower.size
    pop = opts.resolved_population(dim)
    if pop < dim + 1:
        raise BudgetTooSmall(f"population {pop} smaller than dim + 1 = {dim + 1}")
    if opts.max_evaluations < pop:
        raise BudgetTooSmall(f"budget {opts.max_evaluations} below population size {pop}")
    return lower, upper, pop


def crs2_minimize(objective, lower, upper, opts=None):
    """Minimize ``objective`` over the box ``[lower, upper]``.

    Every evaluated point lies inside the box. Reflections that leave the box
    are discarded, never clipped. The search stops when the population's
    values agree to ``xtol_rel``, when the evaluation budget is spent, or
    after ``stall_factor * dim`` consecutive proposals that fail to replace
    the worst member.
    """
    opts = opts or CrsOptions()
    lower, upper, N = _validate(lower, upper, opts)
    dim = lower.size
    rng = np.random.default_rng(opts.seed)

    pop = lower + rng.random((N, dim)) * (upper - lower)
    if opts.initial_point is not None:
        x0 = np.asarray(opts.initial_point, dtype=float).ravel()
        if x0.shape != lower.shape:
            raise BadBounds(f"initial point has shape {x0.shape}, expected {lower.shape}")
        pop[0] = np.clip(x0, lower, upper)
    values = np.array([float(objective(x)) for x in pop])
    evals = N

    def inside(x):
        return bool(np.all(x >= lower) and np.all(x <= upper))

    best = int(np.argmin(values))
    trace = [values[best]]
    stall = 0
    stall_limit = opts.stall_factor * dim
    others = np.arange(N)
    reason = MAX_EVAL
    while True:
        lo, hi = values[best], values.max()
        if hi - lo <= opts.xtol_rel * abs(lo):
            reason = XTOL
            break
        if evals >= opts.max_evaluations:
            reason = MAX_EVAL
            break
        if stall >= stall_limit:
            reason = STALLED
            break

        picks = rng.choice(others[others != best], size=dim, replace=False)
        simplex = np.concatenate([[best], picks])
        w_local = simplex[np.argmax(values[simplex])]
        rest = simplex[simplex != w_local]
        reflected = 2.0 * pop[rest].mean(axis=0) - pop[w_local]
        worst = int(np.argmax(values))

        trial = None
        if inside(reflected):
            fr = float(objective(reflected))
            evals += 1
            if fr < values[worst]:
                trial = (reflected, fr)
        if trial is None and evals < opts.max_evaluations and rng.random() < 0.5:
            mix = rng.random(dim)
            mutant = mix * pop[best] + (1.0 - mix) * reflected
            if inside(mutant):
                fm = float(objective(mutant))
                evals += 1
                if fm < values[worst]:
                    trial = (mutant, fm)

        if trial is None:
            stall += 1
            continue
        stall = 0
        pop[worst], values[worst] = trial
        if trial[1] < values[best]:
            best = worst
        assert values[best] <= trace[-1]
        trace.append(values[best])

    return OptimResult(pop[best].copy(), float(values[best]), evals, reason, trace)
