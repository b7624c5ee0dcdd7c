"""Sequential model-based hyperparameter optimization with a TPE surrogate.

One trial evaluates the black-box objective at a point theta; the history
of (performance, theta) pairs drives the next proposal: trials are split
at the gamma-quantile of performance into good/bad sets, per-dimension
Parzen densities l (good) and g (bad) are fitted, candidates are sampled
from l, and the candidate maximizing l/g is evaluated next.

The space is tree-structured: a dimension may be conditioned on another
(e.g. the layer-2 width only exists when at least two hidden layers are
selected); inactive dimensions are neither sampled nor scored.

Fixed surrogate constants: gamma=0.25, 24 candidates per proposal,
Gaussian kernels with Scott's-rule bandwidth floored at 1% of the range,
add-one smoothing for categoricals. Each trial draws from its own
seed-derived substream, so a resumed search replays identically.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, ParseError

GAMMA = 0.25
N_CANDIDATES = 24
BANDWIDTH_FLOOR_FRAC = 0.01
DEDUP_ATTEMPTS = 10
STARTUP_TRIALS = 10  # seeded random trials before the surrogate takes over

KINDS = ("int", "real", "log", "cat")


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    choices: tuple = ()
    condition: tuple[str, int] | None = None  # active iff theta[name] >= value

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ParameterError(f"dimension {self.name}: unknown kind {self.kind!r}")
        if self.kind == "cat":
            if len(self.choices) == 0:
                raise ParameterError(f"dimension {self.name}: empty categorical")
        else:
            if self.low is None or self.high is None or not self.high > self.low:
                if self.kind == "int" and self.low is not None and self.high == self.low:
                    pass  # single-point integer range is legal
                else:
                    raise ParameterError(f"dimension {self.name}: empty range")
            if self.kind == "log" and self.low <= 0:
                raise ParameterError(f"dimension {self.name}: log range must be positive")


@dataclass(frozen=True)
class SearchSpace:
    dimensions: tuple[Dimension, ...]

    def __post_init__(self) -> None:
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ParameterError("duplicate dimension names")
        seen: set[str] = set()
        for d in self.dimensions:
            if d.condition is not None and d.condition[0] not in seen:
                raise ParameterError(
                    f"dimension {d.name}: condition on {d.condition[0]} must come after it"
                )
            seen.add(d.name)

    def active(self, dim: Dimension, theta: dict) -> bool:
        if dim.condition is None:
            return True
        name, minimum = dim.condition
        return name in theta and theta[name] >= minimum

    def sample_random(self, rng: np.random.Generator) -> dict:
        theta: dict = {}
        for d in self.dimensions:
            if not self.active(d, theta):
                continue
            theta[d.name] = _sample_prior(d, rng)
        return theta

    def validate_point(self, theta: dict) -> None:
        expected = set()
        for d in self.dimensions:
            if not self.active(d, theta):
                continue
            expected.add(d.name)
            if d.name not in theta:
                raise ParameterError(f"point is missing active dimension {d.name}")
            v = theta[d.name]
            if d.kind == "cat":
                if v not in d.choices:
                    raise ParameterError(f"{d.name}={v!r} not among choices")
            elif d.kind == "int":
                if not (float(v).is_integer() and d.low <= v <= d.high):
                    raise ParameterError(f"{d.name}={v!r} outside integer range")
            elif not d.low <= v <= d.high:
                raise ParameterError(f"{d.name}={v!r} outside [{d.low}, {d.high}]")
        extra = set(theta) - expected
        if extra:
            raise ParameterError(f"point contains inactive/unknown dimensions {sorted(extra)}")

    @property
    def fully_discrete(self) -> bool:
        return all(d.kind in ("int", "cat") for d in self.dimensions)

    def enumerate_points(self, limit: int = 4096) -> list[dict] | None:
        """All points of a fully discrete space (None when too large)."""
        if not self.fully_discrete:
            return None
        points: list[dict] = [{}]
        for d in self.dimensions:
            nxt: list[dict] = []
            values = (
                list(d.choices)
                if d.kind == "cat"
                else [int(v) for v in range(int(d.low), int(d.high) + 1)]
            )
            for base in points:
                if not self.active(d, base):
                    nxt.append(base)
                    continue
                for v in values:
                    cand = dict(base)
                    cand[d.name] = v
                    nxt.append(cand)
                if len(nxt) > limit:
                    return None
            points = nxt
        unique: dict[tuple, dict] = {}
        for p in points:
            unique.setdefault(_theta_key(p), p)
        return list(unique.values())

    def signature(self) -> str:
        parts = []
        for d in self.dimensions:
            parts.append(
                f"{d.name}:{d.kind}:{d.low}:{d.high}:{','.join(map(str, d.choices))}:{d.condition}"
            )
        return "|".join(parts)


def _sample_prior(d: Dimension, rng: np.random.Generator):
    if d.kind == "cat":
        return d.choices[int(rng.integers(0, len(d.choices)))]
    if d.kind == "int":
        return int(rng.integers(int(d.low), int(d.high) + 1))
    if d.kind == "log":
        lo, hi = math.log10(d.low), math.log10(d.high)
        return float(10.0 ** rng.uniform(lo, hi))
    return float(rng.uniform(d.low, d.high))


def _to_internal(d: Dimension, v: float) -> float:
    return math.log10(v) if d.kind == "log" else float(v)


def _from_internal(d: Dimension, u: float):
    if d.kind == "log":
        return float(10.0**u)
    if d.kind == "int":
        return int(np.clip(round(u), d.low, d.high))
    return float(u)


def _range_internal(d: Dimension) -> tuple[float, float]:
    if d.kind == "log":
        return math.log10(d.low), math.log10(d.high)
    return float(d.low), float(d.high)


def _parzen_params(values: np.ndarray, width: float) -> tuple[np.ndarray, np.ndarray]:
    """Sorted kernel centers and per-kernel bandwidths.

    Each kernel's bandwidth is its largest gap to an adjacent center
    (adaptive spacing, as in the TPE reference implementation), never
    below Scott's-rule value floored at 1% of the range. A plain Scott
    bandwidth alone collapses once good trials stack up at one point and
    the search stalls; the spacing term keeps outward kernels wide.
    """
    arr = np.sort(values)
    n = len(arr)
    # the floor shrinks as evidence accumulates but never below 1% of range
    floor = max(width / min(100.0, n + 1.0), BANDWIDTH_FLOOR_FRAC * width)
    if n == 1:
        return arr, np.array([width])
    scott = float(np.std(arr)) * n ** (-0.2)
    gaps = np.diff(arr)
    left = np.concatenate([[gaps[0]], gaps])
    right = np.concatenate([gaps, [gaps[-1]]])
    bw = np.clip(np.maximum(np.maximum(left, right), scott), floor, width)
    return arr, bw


def _kde_logpdf(x: float, centers: np.ndarray, bws: np.ndarray, width: float) -> float:
    """Gaussian mixture over the centers plus one uniform prior component."""
    if width <= 0:
        width = 1.0
    z = (x - centers) / bws
    kernels = np.exp(-0.5 * z * z) / (bws * math.sqrt(2.0 * math.pi))
    total = (float(np.sum(kernels)) + 1.0 / width) / (len(centers) + 1)
    return math.log(max(total, 1e-300))


def _cat_logpmf(v, choices: tuple, values: list) -> float:
    count = sum(1 for x in values if x == v)
    return math.log((count + 1.0) / (len(values) + len(choices)))


def _sample_parzen(d: Dimension, values: list, rng: np.random.Generator):
    """Draw one value from the good-set Parzen density l.

    l is a mixture of one kernel per good value plus one uniform prior
    component, so sampling picks the prior with probability 1/(n+1); that
    matches the density used for scoring and keeps exploration alive.
    """
    if d.kind == "cat":
        weights = np.array([sum(1 for x in values if x == c) + 1.0 for c in d.choices])
        return d.choices[int(rng.choice(len(d.choices), p=weights / weights.sum()))]
    if int(rng.integers(0, len(values) + 1)) == len(values):
        return _sample_prior(d, rng)
    lo, hi = _range_internal(d)
    centers, bws = _parzen_params(np.array([_to_internal(d, v) for v in values]), hi - lo)
    k = int(rng.integers(0, len(centers)))
    u = float(np.clip(rng.normal(centers[k], bws[k]), lo, hi))
    return _from_internal(d, u)


@dataclass(frozen=True)
class Trial:
    index: int
    theta: dict
    performance: float
    wall_time_s: float


@dataclass
class TrialHistory:
    trials: list[Trial] = field(default_factory=list)

    def append(self, trial: Trial) -> None:
        self.trials.append(trial)

    def __len__(self) -> int:
        return len(self.trials)

    def best(self) -> Trial:
        if not self.trials:
            raise ParameterError("history is empty")
        return min(self.trials, key=lambda t: (t.performance, t.index))


def _theta_key(theta: dict) -> tuple:
    return tuple(sorted(theta.items()))


def tpe_suggest(
    history: TrialHistory,
    space: SearchSpace,
    gamma: float = GAMMA,
    n_candidates: int = N_CANDIDATES,
    rng: np.random.Generator | None = None,
) -> dict:
    """Propose the candidate maximizing l(theta)/g(theta).

    Falls back to seeded random sampling with fewer than two trials.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if len(history) < 2:
        return space.sample_random(rng)

    ranked = sorted(history.trials, key=lambda t: (t.performance, t.index))
    n_good = max(1, math.ceil(gamma * len(ranked)))
    n_good = min(n_good, len(ranked) - 1)
    good = [t.theta for t in ranked[:n_good]]
    bad = [t.theta for t in ranked[n_good:]]

    best_score = -math.inf
    best_theta: dict | None = None
    for _ in range(n_candidates):
        theta: dict = {}
        score = 0.0
        for d in space.dimensions:
            if not space.active(d, theta):
                continue
            good_vals = [t[d.name] for t in good if d.name in t]
            bad_vals = [t[d.name] for t in bad if d.name in t]
            v = _sample_parzen(d, good_vals, rng) if good_vals else _sample_prior(d, rng)
            theta[d.name] = v
            if d.kind == "cat":
                score += _cat_logpmf(v, d.choices, good_vals)
                score -= _cat_logpmf(v, d.choices, bad_vals)
            else:
                lo, hi = _range_internal(d)
                x = _to_internal(d, v)
                width = hi - lo
                if good_vals:
                    ga, gbw = _parzen_params(
                        np.array([_to_internal(d, w) for w in good_vals]), width
                    )
                    score += _kde_logpdf(x, ga, gbw, width)
                if bad_vals:
                    ba, bbw = _parzen_params(
                        np.array([_to_internal(d, w) for w in bad_vals]), width
                    )
                    score -= _kde_logpdf(x, ba, bbw, width)
        if score > best_score:
            best_score = score
            best_theta = theta
    assert best_theta is not None
    return best_theta


class TrialLog:
    """Append-only JSON-lines trial log enabling resume after interruption."""

    def __init__(self, path, space: SearchSpace, seed: int) -> None:
        self.path = Path(path)
        self.space = space
        self.seed = seed

    def header(self) -> dict:
        return {"format": "ghicast-trials", "seed": self.seed, "space": self.space.signature()}

    def read(self) -> TrialHistory:
        history = TrialHistory()
        if not self.path.exists():
            return history
        with open(self.path, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        if not lines:
            return history
        try:
            head = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise ParseError(f"{self.path}: corrupted header: {exc}; restart the search") from None
        if head != self.header():
            raise ParseError(
                f"{self.path}: log belongs to a different search (seed/space changed); "
                "restart the search"
            )
        for i, line in enumerate(lines[1:]):
            try:
                rec = json.loads(line)
                trial = Trial(
                    index=int(rec["index"]),
                    theta=dict(rec["theta"]),
                    performance=float(rec["performance"]),
                    wall_time_s=float(rec["wall_time_s"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(
                    f"{self.path}: corrupted trial line {i + 2}: {exc}; restart the search"
                ) from None
            if trial.index != i + 1:
                raise ParseError(f"{self.path}: trial indices not contiguous; restart the search")
            history.append(trial)
        return history

    def start(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(self.header(), sort_keys=True) + "\n")

    def append(self, trial: Trial) -> None:
        rec = {
            "index": trial.index,
            "theta": trial.theta,
            "performance": trial.performance,
            "wall_time_s": trial.wall_time_s,
        }
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def smbo_optimize(
    objective,
    space: SearchSpace,
    n_trials: int,
    seed: int,
    *,
    gamma: float = GAMMA,
    n_candidates: int = N_CANDIDATES,
    theta0: dict | None = None,
    log: TrialLog | None = None,
    history: TrialHistory | None = None,
) -> tuple[dict, TrialHistory]:
    """Run (or continue) a search of `n_trials` total evaluations.

    The returned best point is always the argmin over recorded trials. An
    objective failure records worst-possible performance (+inf) and the
    search continues. Duplicate proposals in fully discrete spaces are
    redrawn (TPE and not-yet-evaluated uniform draws alternating) up to 10
    times, then accepted.
    """
    if n_trials < 1:
        raise ParameterError("n_trials must be >= 1")
    history = history if history is not None else TrialHistory()
    seen = {_theta_key(t.theta) for t in history.trials}
    all_points = space.enumerate_points() if space.fully_discrete else None

    while len(history) < n_trials:
        index = len(history) + 1
        rng = _trial_rng(seed, index)

        def propose() -> dict:
            if index <= STARTUP_TRIALS:
                return space.sample_random(rng)
            return tpe_suggest(history, space, gamma, n_candidates, rng)

        if index == 1 and theta0 is not None:
            theta = dict(theta0)
        else:
            theta = propose()
            if space.fully_discrete and _theta_key(theta) in seen:
                for attempt in range(DEDUP_ATTEMPTS):
                    if attempt % 2 == 0 and all_points is not None:
                        fresh = [p for p in all_points if _theta_key(p) not in seen]
                        if not fresh:
                            break
                        theta = fresh[int(rng.integers(0, len(fresh)))]
                    else:
                        theta = propose()
                    if _theta_key(theta) not in seen:
                        break
        space.validate_point(theta)

        t0 = time.perf_counter()
        try:
            performance = float(objective(theta))
        except Exception:
            performance = math.inf
        trial = Trial(
            index=index,
            theta=theta,
            performance=performance,
            wall_time_s=time.perf_counter() - t0,
        )
        history.append(trial)
        seen.add(_theta_key(theta))
        if log is not None:
            log.append(trial)

    return dict(history.best().theta), history


def default_mlp_space() -> SearchSpace:
    """The mixed global-network space: depth, widths, learning rate, dropout,
    the seven input flags, and the satellite lag structure."""
    dims = [
        Dimension("hidden_layers", "int", 1, 4),
        Dimension("neurons_1", "int", 100, 400),
        Dimension("neurons_2", "int", 50, 150, condition=("hidden_layers", 2)),
        Dimension("neurons_3", "int", 50, 150, condition=("hidden_layers", 3)),
        Dimension("neurons_4", "int", 50, 150, condition=("hidden_layers", 4)),
        Dimension("learning_rate", "log", 1e-4, 1e-2),
        Dimension("dropout", "real", 0.0, 1.0),
        Dimension("use_nwp", "int", 0, 1),
        Dimension("use_clearsky", "int", 0, 1),
        Dimension("use_sat", "int", 0, 1),
        Dimension("use_temp_hist", "int", 0, 1),
        Dimension("use_humid_hist", "int", 0, 1),
        Dimension("use_temp_fc", "int", 0, 1),
        Dimension("use_humid_fc", "int", 0, 1),
        Dimension("sat_lags_current", "int", 1, 6, condition=("use_sat", 1)),
        Dimension("sat_daily_lag", "int", 0, 1, condition=("use_sat", 1)),
    ]
    return SearchSpace(tuple(dims))
