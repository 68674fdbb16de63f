"""Cox reduction: fibre sweeps over hypercube arrangements with vote-based retention.

Round 1 keeps a variable when it is among the ``top_m`` largest |Wald| values
of a fibre in at least ``fibre_votes1`` of its fibres. Later rounds keep a
variable when its Wald statistic is significant at ``alpha`` in at least half
of its fibres. Rounds alternate between the two halves of a sample split, and
the whole reduction can be rerandomised ``B`` times with a majority vote.
"""

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .errors import (
    ConfigError,
    DegenerateResidualError,
    RankDeficientError,
    ReductionError,
    TooSmallError,
)
from .hypercube import (
    DEFAULT_PAIR_THRESHOLD,
    Arrangement,
    PairingGroups,
    choose_shape,
    fibres,
    pair_collinear,
    randomise,
    unpair,
)
from .linalg_core import as_matrix, as_vector, centre, centre_vector
from .regression_stats import SigmaMode, wald
from .seeding import derive_seed, generator

logger = logging.getLogger(__name__)

MAX_ROUNDS = 3


@dataclass(frozen=True)
class ReductionConfig:
    """Tuning of a Cox reduction run. Every field has a usable default."""

    dims1: int = 3
    dims2: int = 2
    side1: Optional[int] = None
    side2: Optional[int] = None
    alpha: float = 0.01
    sigma_mode: SigmaMode = SigmaMode()
    pair_threshold: float = DEFAULT_PAIR_THRESHOLD
    subsample_fraction: float = 0.35
    holdout_fraction: float = 0.0
    alternate_subsamples: bool = True
    rerandomisations: int = 1
    vote_fraction: float = 0.5
    seed: int = 0
    top_m: int = 2
    fibre_votes1: int = 2
    forced: Tuple[int, ...] = ()
    threads: int = 1

    def validate(self, p: Optional[int] = None) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.subsample_fraction < 1.0:
            raise ConfigError(
                f"subsample fraction must lie in (0, 1), got {self.subsample_fraction}"
            )
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError(
                f"holdout fraction must lie in [0, 1), got {self.holdout_fraction}"
            )
        if self.rerandomisations < 1:
            raise ConfigError(f"need at least one rerandomisation, got {self.rerandomisations}")
        if not 0.0 < self.vote_fraction <= 1.0:
            raise ConfigError(f"vote fraction must lie in (0, 1], got {self.vote_fraction}")
        if self.top_m < 1:
            raise ConfigError(f"top_m must be at least 1, got {self.top_m}")
        if self.dims1 < 2 or self.dims2 < 2:
            raise ConfigError("hypercube dimensions must be at least 2")
        if not 1 <= self.fibre_votes1 <= self.dims1:
            raise ConfigError(
                f"round-1 fibre votes must lie in 1..{self.dims1}, got {self.fibre_votes1}"
            )
        for side in (self.side1, self.side2):
            if side is not None and side < 2:
                raise ConfigError(f"hypercube side must be at least 2, got {side}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if not 0.0 < self.pair_threshold < 1.0:
            raise ConfigError(f"pair threshold must lie in (0, 1), got {self.pair_threshold}")
        self.sigma_mode.validate()
        if len(set(self.forced)) != len(self.forced):
            raise ConfigError("forced covariates contain duplicates")
        if p is not None and any(not 0 <= i < p for i in self.forced):
            raise ConfigError(f"forced covariates must index columns 0..{p - 1}")

    @property
    def vote_threshold(self) -> int:
        """Runs a variable must appear in: ceil(vote_fraction * B), at least 1."""
        return max(1, math.ceil(round(self.vote_fraction * self.rerandomisations, 9)))

    def rule_names(self) -> Dict[str, str]:
        needed = math.ceil(self.dims2 / 2)
        return {
            "round1": f"top-{self.top_m}-in->={self.fibre_votes1}-of-{self.dims1}",
            "round2": f"significant-at-{self.alpha:g}-in->={needed}-of-{self.dims2}",
            "vote": f">={self.vote_threshold}-of-{self.rerandomisations}-runs",
            "pairing": f"|corr|>={self.pair_threshold:g}-single-linkage",
        }

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["sigma_mode"] = self.sigma_mode.describe()
        record["forced"] = list(self.forced)
        # reports are identical for any thread count
        del record["threads"]
        return record


@dataclass(frozen=True)
class FibreFit:
    """Outcome of one fibre regression."""

    axis: int
    anchor: Tuple[int, ...]
    members: Tuple[int, ...]
    statistics: Optional[Tuple[float, ...]]
    events: Tuple[int, ...]
    skipped: str = ""


@dataclass(frozen=True)
class RoundResult:
    """Retained set and per-fibre trace of one reduction round."""

    round_number: int
    arrangement: Arrangement
    retained: FrozenSet[int]
    fits: Tuple[FibreFit, ...]
    n_obs: int

    @property
    def skipped(self) -> int:
        return sum(1 for fit in self.fits if fit.skipped)

    def to_record(self) -> Dict[str, Any]:
        return {
            "round": self.round_number,
            "dims": self.arrangement.dims,
            "side": self.arrangement.side,
            "seed": self.arrangement.seed,
            "arranged": len(self.arrangement.indices),
            "fibres": len(self.fits),
            "skipped_fibres": self.skipped,
            "observations": self.n_obs,
            "retained": sorted(self.retained),
        }


@dataclass(frozen=True)
class RunTrace:
    """One rerandomisation of the whole reduction."""

    run: int
    rounds: Tuple[RoundResult, ...]
    retained: FrozenSet[int]

    @property
    def round1_survivors(self) -> FrozenSet[int]:
        return self.rounds[0].retained

    def to_record(self) -> Dict[str, Any]:
        return {
            "run": self.run,
            "rounds": [r.to_record() for r in self.rounds],
            "retained": sorted(self.retained),
        }


@dataclass(frozen=True)
class ReductionOutcome:
    """Comprehensive model together with everything needed to audit it."""

    comprehensive: Tuple[int, ...]
    runs: Tuple[RunTrace, ...]
    per_run_sets: Tuple[FrozenSet[int], ...]
    votes: Dict[int, int]
    vote_threshold: int
    groups: PairingGroups
    partition: Tuple[np.ndarray, np.ndarray]
    config: ReductionConfig
    excluded: Tuple[int, ...] = ()
    holdout: np.ndarray = field(default_factory=lambda: np.arange(0))

    @property
    def assessment_rows(self) -> np.ndarray:
        """Rows for model assessment: the holdout when one was reserved, else the round-1 part.

        Reusing the round-1 part lets the selection see the assessment noise,
        so likelihood-ratio tests on it are no longer exactly chi-squared.
        """
        if len(self.holdout):
            return self.holdout
        return self.partition[0]

    def to_record(self) -> Dict[str, Any]:
        return {
            "comprehensive": list(self.comprehensive),
            "vote_threshold": self.vote_threshold,
            "votes": {str(k): v for k, v in sorted(self.votes.items())},
            "per_run_sets": [sorted(s) for s in self.per_run_sets],
            "runs": [run.to_record() for run in self.runs],
            "pairing": self.groups.to_record(),
            "partition": {
                "first": [int(i) for i in self.partition[0]],
                "second": [int(i) for i in self.partition[1]],
                "holdout": [int(i) for i in self.holdout],
            },
            "excluded": list(self.excluded),
        }


def _fit_fibre(y, x, members, forced, sigma_mode):
    columns = list(members) + list(forced)
    statistics = wald(y, x[:, columns], sigma_mode, index_map=columns)
    return statistics.values[: len(members)], statistics.pvalues()[: len(members)]


def _skipped(fibre, reason: str) -> FibreFit:
    logger.warning("Skipping fibre %s on axis %d: %s", fibre.anchor, fibre.axis, reason)
    return FibreFit(fibre.axis, fibre.anchor, fibre.members, None, (), reason)


def _tally(fits: Iterable[FibreFit]) -> Counter:
    counts: Counter = Counter()
    for fit in fits:
        counts.update(fit.events)
    return counts


def round1(
    y,
    x,
    arrangement: Arrangement,
    config: ReductionConfig,
) -> RoundResult:
    """First round: top-m |Wald| within a fibre, in enough of the index's fibres.

    Ties at the top-m boundary are all kept. A fibre with a single member counts
    as an event for it; a rank-deficient fibre is skipped and gives no events.
    """
    y = as_vector(y)
    x = as_matrix(x)
    fits = []
    for fibre in fibres(arrangement):
        if len(fibre.members) == 1:
            fits.append(FibreFit(fibre.axis, fibre.anchor, fibre.members, None, fibre.members))
            continue
        try:
            values, _ = _fit_fibre(y, x, fibre.members, config.forced, config.sigma_mode)
        except (RankDeficientError, DegenerateResidualError) as e:
            fits.append(_skipped(fibre, str(e)))
            continue

        magnitude = np.abs(values)
        if len(magnitude) <= config.top_m:
            events = fibre.members
        else:
            cutoff = np.sort(magnitude)[::-1][config.top_m - 1]
            events = tuple(m for m, t in zip(fibre.members, magnitude) if t >= cutoff)
        fits.append(
            FibreFit(fibre.axis, fibre.anchor, fibre.members, tuple(map(float, values)), events)
        )

    counts = _tally(fits)
    retained = frozenset(i for i in arrangement.indices if counts[i] >= config.fibre_votes1)
    logger.info(
        "Round 1 kept %d of %d variables (%d fibres)",
        len(retained),
        len(arrangement.indices),
        len(fits),
    )
    return RoundResult(1, arrangement, retained, tuple(fits), y.shape[0])


def _significance_round(
    round_number: int,
    y: np.ndarray,
    x: np.ndarray,
    arrangement: Arrangement,
    config: ReductionConfig,
) -> RoundResult:
    fits = []
    for fibre in fibres(arrangement):
        try:
            values, pvalues = _fit_fibre(
                y, x, fibre.members, config.forced, config.sigma_mode
            )
        except (RankDeficientError, DegenerateResidualError) as e:
            fits.append(_skipped(fibre, str(e)))
            continue
        events = tuple(m for m, pv in zip(fibre.members, pvalues) if pv < config.alpha)
        fits.append(
            FibreFit(fibre.axis, fibre.anchor, fibre.members, tuple(map(float, values)), events)
        )

    needed = math.ceil(arrangement.dims / 2)
    counts = _tally(fits)
    retained = frozenset(i for i in arrangement.indices if counts[i] >= needed)
    logger.info(
        "Round %d kept %d of %d variables at alpha=%g",
        round_number,
        len(retained),
        len(arrangement.indices),
        config.alpha,
    )
    return RoundResult(round_number, arrangement, retained, tuple(fits), y.shape[0])


def round2(
    y,
    x,
    survivors: Iterable[int],
    arrangement2: Arrangement,
    config: ReductionConfig,
) -> RoundResult:
    """Second round: significant at ``alpha`` in at least ceil(d/2) of d fibres."""
    if frozenset(survivors) != frozenset(arrangement2.indices):
        raise ConfigError("Second-round arrangement must hold exactly the survivors")
    return _significance_round(2, as_vector(y), as_matrix(x), arrangement2, config)


def split_sample(n: int, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Random split into I (round(fraction * n) rows) and its complement."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"fraction must lie in (0, 1), got {fraction}")
    size = int(math.floor(fraction * n + 0.5))
    if size < 2 or n - size < 2:
        raise TooSmallError(
            f"Splitting {n} observations at {fraction:g} leaves parts of {size} and {n - size}"
        )
    order = generator(seed).permutation(n)
    return np.sort(order[:size]), np.sort(order[size:])


def reserve_holdout(n: int, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rows left for the reduction rounds and round(fraction * n) rows kept for assessment only."""
    everything = np.arange(n)
    if fraction == 0.0:
        return everything, everything[:0]
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"holdout fraction must lie in [0, 1), got {fraction}")
    size = int(math.floor(fraction * n + 0.5))
    if size < 2 or n - size < 4:
        raise TooSmallError(
            f"Holding out {size} of {n} observations leaves too few for the reduction"
        )
    order = generator(seed).permutation(n)
    return np.sort(order[size:]), np.sort(order[:size])


def _part(y: np.ndarray, x: np.ndarray, rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Rows of the data, re-centred."""
    part_y, _ = centre_vector(y[rows])
    return part_y, centre(x[rows]).values


def _side_for(count: int, dims: int, requested: Optional[int]) -> int:
    needed = choose_shape(max(count, 2), dims)[1]
    if requested is None:
        return needed
    if requested**dims < count:
        logger.warning(
            "Side %d too small for %d variables in %d dimensions, using %d",
            requested,
            count,
            dims,
            needed,
        )
        return needed
    return requested


def _run_once(
    run: int,
    y: np.ndarray,
    x: np.ndarray,
    candidates: Sequence[int],
    parts: Tuple[np.ndarray, np.ndarray],
    config: ReductionConfig,
) -> RunTrace:
    first_y, first_x = _part(y, x, parts[0])
    side1 = _side_for(len(candidates), config.dims1, config.side1)
    arrangement = randomise(
        candidates, config.dims1, side1, derive_seed(config.seed, run, "round1")
    )
    rounds = [round1(first_y, first_x, arrangement, config)]
    survivors = rounds[0].retained

    round_number = 2
    while survivors:
        rows = parts[(round_number - 1) % 2]
        part_y, part_x = _part(y, x, rows)
        stage = "round2" if round_number == 2 else "round3"
        arrangement = randomise(
            survivors,
            config.dims2,
            _side_for(len(survivors), config.dims2, config.side2),
            derive_seed(config.seed, run, stage),
        )
        result = _significance_round(round_number, part_y, part_x, arrangement, config)
        rounds.append(result)
        survivors = result.retained

        if len(survivors) < len(rows):
            break
        if round_number >= MAX_ROUNDS:
            raise ReductionError(
                f"{len(survivors)} variables remain after {MAX_ROUNDS} rounds "
                f"with {len(rows)} observations; lower alpha"
            )
        logger.info(
            "%d survivors reach the %d observations of round %d; adding a round",
            len(survivors),
            len(rows),
            round_number,
        )
        round_number += 1

    return RunTrace(run=run, rounds=tuple(rounds), retained=frozenset(survivors))


def cox_reduce(
    y,
    x,
    config: ReductionConfig = ReductionConfig(),
    exclude: Iterable[int] = (),
) -> ReductionOutcome:
    """Run the full reduction and return the comprehensive model.

    Pipeline: pair near-collinear columns, set aside the optional assessment
    holdout, split the remaining rows, run ``B`` seeded
    rerandomisations of round 1 (first part) and round 2 (second part), vote,
    then unpair. Columns in ``exclude`` (e.g. constant ones) are never arranged;
    ``config.forced`` columns enter every regression and always end up in the
    comprehensive model. An empty comprehensive model is a valid outcome.
    """
    y = as_vector(y)
    x = as_matrix(x)
    n, p = x.shape
    config.validate(p)
    excluded = tuple(sorted(set(int(i) for i in exclude)))

    groups = pair_collinear(x, config.pair_threshold)
    blocked = set(excluded) | set(config.forced)
    candidates = [i for i in groups.representatives if i not in blocked]
    if len(candidates) < 2:
        raise ConfigError(f"Need at least 2 variables to arrange, got {len(candidates)}")
    if config.side1 is not None and config.side1**config.dims1 < len(candidates):
        raise ConfigError(
            f"side {config.side1} in {config.dims1} dimensions cannot hold "
            f"{len(candidates)} variables"
        )

    rows, holdout = reserve_holdout(n, config.holdout_fraction, derive_seed(config.seed, 0, "holdout"))
    if config.alternate_subsamples:
        first, second = split_sample(len(rows), config.subsample_fraction, derive_seed(config.seed, 0, "split"))
        parts = (rows[first], rows[second])
    else:
        parts = (rows, rows)
    if len(holdout):
        logger.info("Holding out %d of %d observations for assessment", len(holdout), n)

    logger.info(
        "Reducing %d candidate variables over %d rerandomisations", len(candidates), config.rerandomisations
    )
    runs: List[RunTrace] = Parallel(n_jobs=config.threads, prefer="threads")(
        delayed(_run_once)(run, y, x, candidates, parts, config)
        for run in range(config.rerandomisations)
    )

    forced = frozenset(config.forced)
    per_run_sets = tuple(unpair(run.retained, groups) | forced for run in runs)
    votes: Counter = Counter()
    for retained in per_run_sets:
        votes.update(retained)
    threshold = config.vote_threshold
    comprehensive = tuple(sorted(i for i, count in votes.items() if count >= threshold))
    logger.info("Comprehensive model has %d variables", len(comprehensive))

    return ReductionOutcome(
        comprehensive=comprehensive,
        runs=tuple(runs),
        per_run_sets=per_run_sets,
        votes=dict(votes),
        vote_threshold=threshold,
        groups=groups,
        partition=parts,
        config=config,
        excluded=excluded,
        holdout=holdout,
    )


@dataclass(frozen=True)
class StabilityReport:
    """Agreement between the rerandomised retained sets."""

    applicable: bool
    jaccard: Tuple[Tuple[float, ...], ...] = ()
    mean_jaccard: float = float("nan")
    frequencies: Dict[int, float] = field(default_factory=dict)
    fragile: bool = False

    def to_record(self) -> Dict[str, Any]:
        if not self.applicable:
            return {"applicable": False}
        return {
            "applicable": True,
            "mean_jaccard": self.mean_jaccard,
            "fragile": self.fragile,
            "jaccard": [list(row) for row in self.jaccard],
            "frequencies": {str(k): v for k, v in sorted(self.frequencies.items())},
        }


FRAGILITY_LEVEL = 0.5


def _jaccard(a: FrozenSet[int], b: FrozenSet[int]) -> float:
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def stability_report(outcome: ReductionOutcome) -> StabilityReport:
    """Pairwise Jaccard similarity of per-run sets and per-variable frequencies.

    Needs at least two rerandomisations; a mean similarity below 0.5 raises the
    fragility flag.
    """
    sets = outcome.per_run_sets
    b = len(sets)
    if b < 2:
        return StabilityReport(applicable=False)

    matrix = tuple(tuple(_jaccard(sets[i], sets[j]) for j in range(b)) for i in range(b))
    pairs = [matrix[i][j] for i in range(b) for j in range(i + 1, b)]
    mean = float(np.mean(pairs))
    frequencies = {index: count / b for index, count in sorted(outcome.votes.items())}
    fragile = mean < FRAGILITY_LEVEL
    if fragile:
        logger.warning(
            "Retained sets are unstable across rerandomisations (mean Jaccard %.3f)", mean
        )
    return StabilityReport(
        applicable=True,
        jaccard=matrix,
        mean_jaccard=mean,
        frequencies=frequencies,
        fragile=fragile,
    )
