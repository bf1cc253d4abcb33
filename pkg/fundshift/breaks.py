"""
Multiple structural break detection by global SSR minimisation.

For every admissible segment the SSR of the break-detection regression is
tabulated once; a dynamic programme then finds, for each break count, the
partition with the smallest total SSR, and BIC picks the break count.

A break at index ``b`` closes a regime: regimes are ``..b`` and ``b+1..``.
"""
import math
import typing
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from fundshift.log import logger
from fundshift.marketdata import AlignedSample
from fundshift.regress import EXACT_FIT, DesignSpec, Model, response_and_design

MAX_BREAKS = 5
TRIM = 0.15


class InfeasiblePartition(Exception):
    def __init__(self, message):
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class SsrTable:
    """
    ``matrix[i, j]`` is the SSR of the regression on observations ``i..j``
    inclusive; inadmissible segments (shorter than ``h``) hold ``inf``.
    """

    n: int
    h: int
    k: int
    matrix: np.ndarray
    total_ss: float

    def ssr(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])


@dataclass(frozen=True)
class Partition:
    m: int
    break_indices: typing.Tuple[int, ...]
    # None once breaks have been merged away after optimisation
    total_ssr: typing.Optional[float]


@dataclass(frozen=True)
class BreakSet:
    fund_id: str
    n: int
    h: int
    model: Model
    chosen_m: int
    partition: Partition
    criterion_values: typing.Dict[int, float]
    partitions: typing.Dict[int, Partition]
    regime_windows: typing.Tuple[typing.Tuple[int, int], ...]
    is_style_break: typing.Tuple[bool, ...] = ()
    removed_breaks: typing.Tuple[int, ...] = field(default=())

    @property
    def break_indices(self) -> typing.Tuple[int, ...]:
        return self.partition.break_indices


def regime_windows(break_indices: typing.Sequence[int], n: int) -> typing.Tuple[typing.Tuple[int, int], ...]:
    starts = [0, *(b + 1 for b in break_indices)]
    ends = [*break_indices, n - 1]
    return tuple(zip(starts, ends))


def _ssr_rows(y: np.ndarray, X: np.ndarray, h: int, rows: typing.Iterable[int]) -> typing.List[np.ndarray]:
    """
    SSR of every segment starting at each row, from running Gram sums.
    """
    out = []
    for i in rows:
        xs, ys = X[i:], y[i:]
        gram = np.cumsum(xs[:, :, None] * xs[:, None, :], axis=0)[h - 1 :]
        cross = np.cumsum(xs * ys[:, None], axis=0)[h - 1 :]
        yy = np.cumsum(ys * ys)[h - 1 :]
        coef = np.linalg.solve(gram, cross[..., None])[..., 0]
        ssr = yy - np.einsum("ij,ij->i", coef, cross)
        out.append(np.maximum(ssr, 0.0))
    return out


def segment_ssr_table(response: np.ndarray, design: np.ndarray, h: int, n_jobs: int = 1) -> SsrTable:
    """
    Tabulate the SSR of every segment of at least ``h`` observations.

    Columns of the design are rescaled to unit RMS first; SSR is invariant
    to that and the Gram matrices stay well conditioned.
    """
    y = np.asarray(response, dtype=float)
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if h < k + 1:
        raise InfeasiblePartition(f"minimum segment length {h} below {k + 1} for {k} regressors")
    if n < 2 * h:
        raise InfeasiblePartition(f"{n} observations cannot hold two segments of {h}")
    scale = np.sqrt(np.mean(X * X, axis=0))
    X = X / np.where(scale > 0, scale, 1.0)

    starts = np.arange(0, n - h + 1)
    blocks = [block for block in np.array_split(starts, max(1, n_jobs)) if len(block) > 0]
    if n_jobs == 1:
        results = [_ssr_rows(y, X, h, blocks[0])]
    else:
        results = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_ssr_rows)(y, X, h, block) for block in blocks)

    matrix = np.full((n, n), np.inf)
    for block, rows in zip(blocks, results):
        for i, row in zip(block, rows):
            matrix[i, i + h - 1 :] = row
    return SsrTable(n=n, h=h, k=k, matrix=matrix, total_ss=float(y @ y))


def build_ssr_table(
    sample: AlignedSample,
    h: int,
    model: Model = Model.AGT,
    n_jobs: int = 1,
) -> SsrTable:
    response, design = response_and_design(sample.frame, DesignSpec.for_model(model))
    logger.debug(f"Building SSR table for {sample.fund_id} with n={sample.n}, h={h}")
    return segment_ssr_table(response.to_numpy(), design.to_numpy(), h, n_jobs=n_jobs)


def _programme(table: SsrTable, max_breaks: int) -> typing.Tuple[typing.List[np.ndarray], typing.List[np.ndarray]]:
    """
    ``cost[r][i]`` is the least SSR of splitting ``i..n-1`` with ``r`` breaks;
    ``choice[r][i]`` the first break of that split. Ties keep the earliest
    break, so traced partitions are lexicographically earliest.
    """
    n, h, S = table.n, table.h, table.matrix
    cost = [S[:, n - 1].copy()]
    choice = [np.full(n, -1)]
    for r in range(1, max_breaks + 1):
        current = np.full(n, np.inf)
        best = np.full(n, -1)
        previous = cost[r - 1]
        for i in range(n):
            lo, hi = i + h - 1, n - 1 - r * h
            if hi < lo:
                break
            candidates = S[i, lo : hi + 1] + previous[lo + 1 : hi + 2]
            j = int(np.argmin(candidates))
            if np.isfinite(candidates[j]):
                current[i] = candidates[j]
                best[i] = lo + j
        cost.append(current)
        choice.append(best)
    return cost, choice


def _trace(choice: typing.List[np.ndarray], m: int) -> typing.Tuple[int, ...]:
    indices = []
    start = 0
    for r in range(m, 0, -1):
        b = int(choice[r][start])
        indices.append(b)
        start = b + 1
    return tuple(indices)


def optimal_partition(table: SsrTable, m: int) -> Partition:
    """
    Globally SSR-minimal partition with exactly ``m`` breaks.
    """
    if m < 0:
        raise ValueError("break count must not be negative")
    if table.n < (m + 1) * table.h:
        raise InfeasiblePartition(f"{table.n} observations cannot hold {m + 1} segments of {table.h}")
    cost, choice = _programme(table, m)
    return Partition(m=m, break_indices=_trace(choice, m), total_ssr=float(cost[m][0]))


def bic(ssr: float, n: int, m: int, k: int) -> float:
    p = (m + 1) * k + m
    return math.log(ssr / n) + p * math.log(n) / n


def select_break_count(
    sample: AlignedSample,
    max_breaks: int = MAX_BREAKS,
    trim: float = TRIM,
    model: Model = Model.AGT,
    n_jobs: int = 1,
) -> BreakSet:
    """
    Optimal partitions for 0..max_breaks breaks, break count by BIC.

    The minimum segment length is ``max(ceil(trim * n), k + 1)``; break
    counts that cannot fit are skipped.
    """
    if not 0 < trim < 0.5:
        raise ValueError(f"trim {trim} outside (0, 0.5)")
    if max_breaks < 0:
        raise ValueError("max_breaks must not be negative")
    k = DesignSpec.for_model(model).k
    n = sample.n
    h = max(math.ceil(trim * n), k + 1)
    table = build_ssr_table(sample, h, model=model, n_jobs=n_jobs)
    feasible = min(max_breaks, n // h - 1)
    cost, choice = _programme(table, feasible)

    floor = max(EXACT_FIT * table.total_ss, np.finfo(float).tiny)
    partitions = {}
    criterion = {}
    for m in range(feasible + 1):
        total = float(cost[m][0])
        if not np.isfinite(total):
            continue
        partitions[m] = Partition(m=m, break_indices=_trace(choice, m), total_ssr=total)
        criterion[m] = bic(max(total, floor), n, m, k)
    chosen = min(criterion, key=lambda m: (criterion[m], m))
    partition = partitions[chosen]
    logger.info(f"{sample.fund_id}: {chosen} breaks at {list(partition.break_indices)}")
    return BreakSet(
        fund_id=sample.fund_id,
        n=n,
        h=h,
        model=model,
        chosen_m=chosen,
        partition=partition,
        criterion_values=criterion,
        partitions=partitions,
        regime_windows=regime_windows(partition.break_indices, n),
    )


def filter_short_regimes(bs: BreakSet, min_regime: int) -> BreakSet:
    """
    Drop every break bordering a regime shorter than ``min_regime``,
    merging regimes until no remaining break borders a short regime.
    """
    if min_regime < 0:
        raise ValueError("min_regime must not be negative")
    kept = list(bs.break_indices)
    while kept:
        windows = regime_windows(kept, bs.n)
        drop = set()
        for r, (start, end) in enumerate(windows):
            if end - start + 1 < min_regime:
                if r > 0:
                    drop.add(kept[r - 1])
                if r < len(kept):
                    drop.add(kept[r])
        if not drop:
            break
        kept = [b for b in kept if b not in drop]
    if len(kept) == len(bs.break_indices):
        return bs
    removed = tuple(b for b in bs.break_indices if b not in kept)
    logger.info(f"{bs.fund_id}: removed breaks {list(removed)} bordering regimes under {min_regime} observations")
    kept_flags = tuple(flag for b, flag in zip(bs.break_indices, bs.is_style_break) if b in kept)
    return replace(
        bs,
        chosen_m=len(kept),
        partition=Partition(m=len(kept), break_indices=tuple(kept), total_ssr=None),
        regime_windows=regime_windows(kept, bs.n),
        is_style_break=kept_flags,
        removed_breaks=bs.removed_breaks + removed,
    )
