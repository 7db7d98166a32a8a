"""Multivariate, multi-objective TPE over a mixed categorical/continuous space.

Completed trials are split into a *good* set (best nondominated ranks,
boundary ties broken by hypervolume contribution) and a *bad* set.  A joint
Parzen estimator is fitted to each; candidates drawn from the good model are
ranked by ``l(x) / g(x)``.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from scipy.special import ndtr
from scipy.stats import truncnorm

from .chain_model import (
    JOINT_CHOICES,
    DesignGenome,
    LengthBudget,
    canonicalize_joints,
    close_genome,
    length_bound,
)
from .pareto import dominates, hv_contributions, nondominated_sort, reference_point

FAILED_TORQUE = 1e9


@dataclass(frozen=True)
class MotpeConfig:
    n_startup: int = 100
    n_total: int = 20000
    gamma_frac: float = 0.1
    gamma_cap: int = 25
    n_candidates: int = 24
    prior_weight: float = 1.0
    # multiplier on the Scott-rule bandwidth; the plain rule is too broad to
    # resolve gaps along a front
    bandwidth_factor: float = 0.3
    min_bandwidth: float = 0.01  # fraction of the dimension's range
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.n_startup <= self.n_total:
            raise ValueError("need 0 <= n_startup <= n_total")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if not 0 < self.gamma_frac <= 1 or self.gamma_cap < 1:
            raise ValueError("invalid gamma rule")
        if self.bandwidth_factor <= 0 or self.prior_weight <= 0:
            raise ValueError("bandwidth_factor and prior_weight must be positive")

    def n_good(self, n: int) -> int:
        return int(math.ceil(min(self.gamma_frac * n, self.gamma_cap) - 1e-12))


@dataclass
class Trial:
    id: int
    raw_choices: tuple[int, ...]
    choices: tuple[int, ...]
    params: tuple[float, ...]
    objectives: tuple[float, float]
    failed: bool = False
    wall_ms: float = 0.0


class SearchSpace(Protocol):
    n_choices: tuple[int, ...]
    low: np.ndarray
    high: np.ndarray
    failure_objectives: tuple[float, float]

    def sample_uniform(self, rng: np.random.Generator) -> tuple[tuple[int, ...], tuple[float, ...]]: ...

    def project(self, raw_choices, params) -> tuple[tuple[int, ...], tuple[float, ...]]: ...

    def decode(self, choices, params): ...


@dataclass(frozen=True)
class DesignSpace:
    """Joint types (3 choices each) and the first ``n_joint - 1`` link lengths.

    Lengths are modelled on the static range ``[0, max_init]``; the dynamic
    remaining-budget bound is applied when projecting.
    """

    n_joint: int = 6
    budget: LengthBudget = LengthBudget()
    failure_objectives: tuple[float, float] = (0.0, FAILED_TORQUE)

    @property
    def n_choices(self) -> tuple[int, ...]:
        return (len(JOINT_CHOICES),) * self.n_joint

    @property
    def low(self) -> np.ndarray:
        return np.zeros(self.n_joint - 1)

    @property
    def high(self) -> np.ndarray:
        return np.full(self.n_joint - 1, self.budget.max_init)

    @property
    def n_params(self) -> int:
        return 2 * self.n_joint - 1

    def sample_uniform(self, rng):
        raw = tuple(int(c) for c in rng.integers(0, len(JOINT_CHOICES), self.n_joint))
        lengths: list[float] = []
        for _ in range(self.n_joint - 1):
            lengths.append(float(rng.uniform(0.0, length_bound(lengths, self.budget))))
        return raw, tuple(lengths)

    def project(self, raw_choices, params):
        joints = canonicalize_joints(JOINT_CHOICES[c] for c in raw_choices)
        lengths: list[float] = []
        for v in params:
            lengths.append(float(min(max(v, 0.0), length_bound(lengths, self.budget))))
        return tuple(JOINT_CHOICES.index(j) for j in joints), tuple(lengths)

    def decode(self, choices, params) -> DesignGenome:
        return close_genome([JOINT_CHOICES[c] for c in choices], params, self.budget)


@dataclass(frozen=True)
class BoxSpace:
    """Purely continuous box, used for synthetic problems."""

    low: np.ndarray
    high: np.ndarray
    failure_objectives: tuple[float, float] = (1e9, 1e9)
    n_choices: tuple[int, ...] = ()

    def sample_uniform(self, rng):
        return (), tuple(float(v) for v in rng.uniform(self.low, self.high))

    def project(self, raw_choices, params):
        return tuple(raw_choices), tuple(float(v) for v in np.clip(params, self.low, self.high))

    def decode(self, choices, params) -> np.ndarray:
        return np.asarray(params, dtype=float)


# --- good / bad split -------------------------------------------------------

def split_good_bad(objectives, n_good: int) -> tuple[list[int], list[int]]:
    """Indices of the good and bad trials.

    Whole fronts are taken in rank order; the front that straddles ``n_good``
    contributes its members with the largest exclusive hypervolume, against a
    reference just beyond the worst observed value.
    """
    obj = np.asarray(objectives, dtype=float).reshape(-1, 2)
    if len(obj) < 2:
        raise ValueError("need at least two completed trials to split")
    n_good = int(min(max(n_good, 1), len(obj)))
    good: list[int] = []
    for front in nondominated_sort(obj):
        room = n_good - len(good)
        if room <= 0:
            break
        if len(front) <= room:
            good.extend(front)
            continue
        contrib = hv_contributions(obj[front], reference_point(obj))
        order = np.argsort(-contrib, kind="stable")
        good.extend(front[k] for k in order[:room])
    good_set = set(good)
    return sorted(good), [i for i in range(len(obj)) if i not in good_set]


def gamma_split(trials: list[Trial], cfg: MotpeConfig) -> tuple[list[int], list[int]]:
    return split_good_bad([t.objectives for t in trials], cfg.n_good(len(trials)))


# --- Parzen estimator -------------------------------------------------------

class ParzenEstimator:
    """Joint kernel density over categorical and continuous dimensions.

    One product kernel per observation plus one broad prior kernel.
    Categorical kernels put ``prior_weight / n_kernels`` on every choice and
    one extra unit on the observed choice before normalizing.  Continuous
    kernels are Gaussians truncated to the static range, with a shared
    Scott-rule bandwidth per dimension scaled by ``bandwidth_factor``.
    """

    def __init__(self, choices: np.ndarray, params: np.ndarray, space: SearchSpace, cfg: MotpeConfig):
        choices = np.asarray(choices, dtype=int).reshape(len(choices), -1)
        params = np.asarray(params, dtype=float).reshape(len(params), -1)
        n = len(params)
        n_kernels = n + 1
        self.n_choices = tuple(space.n_choices)
        self.low = np.asarray(space.low, dtype=float)
        self.high = np.asarray(space.high, dtype=float)
        span = self.high - self.low
        self.log_weights = np.full(n_kernels, -math.log(n_kernels))
        if n > 0 and cfg.prior_weight != 1.0:
            w = np.append(np.ones(n), cfg.prior_weight)
            self.log_weights = np.log(w / w.sum())

        self.cat_probs = []
        for d, k in enumerate(self.n_choices):
            probs = np.full((n_kernels, k), cfg.prior_weight / n_kernels)
            probs[np.arange(n), choices[:, d]] += 1.0
            self.cat_probs.append(probs / probs.sum(axis=1, keepdims=True))
        self.log_cat_probs = [np.log(p) for p in self.cat_probs]

        dim = params.shape[1]
        if dim:
            std = params.std(axis=0) if n > 1 else np.zeros(dim)
            sigma = cfg.bandwidth_factor * std * max(n, 1) ** (-1.0 / (dim + 4))
            sigma = np.clip(sigma, cfg.min_bandwidth * span, span)
            self.mu = np.vstack([params, 0.5 * (self.low + self.high)])
            self.sigma = np.vstack([np.broadcast_to(sigma, (n, dim)), span])
        else:
            self.mu = np.zeros((n_kernels, 0))
            self.sigma = np.ones((n_kernels, 0))
        # per-kernel constant of the truncated Gaussian log density
        norm = ndtr((self.high - self.mu) / self.sigma) - ndtr((self.low - self.mu) / self.sigma)
        self.log_const = (-0.5 * math.log(2 * math.pi) - np.log(self.sigma)
                          - np.log(np.maximum(norm, 1e-300))).sum(axis=1)

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        comp = rng.choice(len(self.log_weights), size=size, p=np.exp(self.log_weights))
        cats = np.empty((size, len(self.n_choices)), dtype=int)
        for d, probs in enumerate(self.cat_probs):
            cdf = np.cumsum(probs[comp], axis=1)
            u = rng.random(size)[:, None]
            cats[:, d] = np.minimum((u > cdf).sum(axis=1), probs.shape[1] - 1)
        mu, sigma = self.mu[comp], self.sigma[comp]
        if mu.shape[1]:
            a = (self.low - mu) / sigma
            b = (self.high - mu) / sigma
            conts = truncnorm.rvs(a, b, loc=mu, scale=sigma, random_state=rng)
            conts = np.clip(conts.reshape(size, -1), self.low, self.high)
        else:
            conts = np.zeros((size, 0))
        return cats, conts

    def log_pdf(self, cats: np.ndarray, conts: np.ndarray) -> np.ndarray:
        cats = np.asarray(cats, dtype=int).reshape(len(cats), -1)
        conts = np.asarray(conts, dtype=float).reshape(len(conts), -1)
        total = np.broadcast_to(self.log_weights, (len(cats), len(self.log_weights))).copy()
        for d, log_probs in enumerate(self.log_cat_probs):
            total += log_probs[:, cats[:, d]].T
        if conts.shape[1]:
            z = (conts[:, None, :] - self.mu[None]) / self.sigma[None]
            total += self.log_const - 0.5 * (z**2).sum(axis=2)
        peak = total.max(axis=1, keepdims=True)
        return peak[:, 0] + np.log(np.exp(total - peak).sum(axis=1))


def suggest(history: list[Trial], space: SearchSpace, cfg: MotpeConfig, rng: np.random.Generator):
    """Propose ``(raw_choices, params)`` for the next trial (before projection)."""
    if len(history) < max(cfg.n_startup, 2):
        return space.sample_uniform(rng)
    good, bad = gamma_split(history, cfg)

    def fit(idx):
        return ParzenEstimator(
            np.array([history[i].raw_choices for i in idx], dtype=int).reshape(len(idx), -1),
            np.array([history[i].params for i in idx], dtype=float).reshape(len(idx), -1),
            space, cfg,
        )

    below, above = fit(good), fit(bad)
    cats, conts = below.sample(rng, cfg.n_candidates)
    score = below.log_pdf(cats, conts) - above.log_pdf(cats, conts)
    best = int(np.argmax(score))
    return tuple(int(c) for c in cats[best]), tuple(float(v) for v in conts[best])


# --- archive and loop -------------------------------------------------------

@dataclass
class ParetoArchive:
    """Append-only trial list with an incrementally maintained Pareto front."""

    trials: list[Trial] = field(default_factory=list)
    front: list[int] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()
        existing, self.trials, self.front = self.trials, [], []
        for t in existing:
            self.add(t)

    def add(self, trial: Trial) -> bool:
        with self._lock:
            idx = len(self.trials)
            self.trials.append(trial)
            obj = trial.objectives
            if any(dominates(self.trials[k].objectives, obj) for k in self.front):
                return False
            self.front = [k for k in self.front if not dominates(obj, self.trials[k].objectives)]
            self.front.append(idx)
            return True

    def snapshot(self) -> "ParetoArchive":
        with self._lock:
            snap = ParetoArchive()
            snap.trials = list(self.trials)
            snap.front = list(self.front)
            return snap

    @property
    def objectives(self) -> np.ndarray:
        return np.array([t.objectives for t in self.trials], dtype=float).reshape(-1, 2)

    def front_trials(self) -> list[Trial]:
        return [self.trials[k] for k in sorted(self.front)]

    def __len__(self) -> int:
        return len(self.trials)


def run_optimization(
    eval_fn: Callable,
    space: SearchSpace,
    cfg: MotpeConfig,
    history: list[Trial] | None = None,
    on_trial: Callable[[Trial, ParetoArchive], None] | None = None,
) -> ParetoArchive:
    """Sequential suggest -> project -> evaluate -> record loop.

    ``eval_fn`` receives ``space.decode(...)`` and returns two minimized
    objectives.  Exceptions and non-finite results are recorded as failed
    trials scored ``space.failure_objectives``.  Passing an earlier
    ``history`` resumes at trial id ``len(history)``; trial ``k`` always uses
    the random stream seeded by ``(cfg.seed, k)``.
    """
    archive = ParetoArchive(list(history or []))
    for tid in range(len(archive), cfg.n_total):
        rng = np.random.default_rng([cfg.seed, tid])
        raw, params = suggest(archive.trials, space, cfg, rng)
        choices, params = space.project(raw, params)
        start = time.perf_counter()
        failed = False
        try:
            objectives = tuple(float(v) for v in eval_fn(space.decode(choices, params)))
            if len(objectives) != 2 or not all(math.isfinite(v) for v in objectives):
                raise ValueError(f"bad objectives {objectives}")
        except Exception:  # noqa: BLE001 - a broken evaluation must not end the run
            objectives, failed = tuple(space.failure_objectives), True
        trial = Trial(tid, tuple(raw), tuple(choices), tuple(params), objectives, failed,
                      (time.perf_counter() - start) * 1000.0)
        archive.add(trial)
        if on_trial is not None:
            on_trial(trial, archive)
    return archive
