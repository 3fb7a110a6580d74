"""Extended Monte-Carlo cross-validation over paired transition datasets.

Each iteration draws one random fit/holdout split of the pair indices and
fits three maps on: the normal pairs at the fit indices, the mirrored pairs
at the same indices, and the union of both (twice the rows). All three maps
are scored on the identical holdout slice of the normal pairs, and all fitted
matrices are retained so coefficient scatter across iterations can be summed
into a model-uncertainty number.

Determinism contract: every iteration seeds its own generator from
``(seed, iteration_index)``, results land in pre-allocated per-iteration
slots, and per-iteration numerics are independent of chunking, so the result
is bitwise identical no matter how many worker threads execute it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import PairedDataset
from .errors import ValidationError
from .mapfit import SectionMap, cve_matrices, default_rcond, fit_matrices

METHOD_NORMAL = "normal"
METHOD_MIRRORED = "mirrored"
METHOD_COMBINED = "combined"
CV_METHODS = (METHOD_NORMAL, METHOD_MIRRORED, METHOD_COMBINED)


@dataclass(frozen=True)
class CvConfig:
    """Monte-Carlo cross-validation parameters.

    ``rcond = None`` means the map-fit default (dimension times machine
    epsilon). The seed is a required 64-bit unsigned integer; there is no
    wall-clock fallback.
    """

    seed: int
    iterations: int = 1000
    holdout_frac: float = 0.2
    rcond: float | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValidationError("seed must be an integer in [0, 2^64)")
        if not (isinstance(self.iterations, int) and self.iterations >= 1):
            raise ValidationError("iterations must be a positive integer")
        if not 0.0 < self.holdout_frac < 1.0:
            raise ValidationError("holdout_frac must be strictly between 0 and 1")
        if self.rcond is not None and not self.rcond > 0:
            raise ValidationError("rcond must be positive when given")


def holdout_size(n: int, holdout_frac: float) -> int:
    """Number of held-out pairs: round(frac * n), at least 1, at most n - 1."""
    if n < 2:
        raise ValidationError("need at least 2 pairs to split")
    n_v = max(1, int(math.floor(holdout_frac * n + 0.5)))
    if n_v >= n:
        raise ValidationError(
            f"holdout of {n_v} leaves no fit pairs out of {n}; lower holdout_frac"
        )
    return n_v


def split_indices(
    n: int, holdout_frac: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """One uniform random partition of 0..n-1 into (fit, holdout) index sets.

    Both halves come back sorted so gathered rows keep temporal order.
    Deterministic given the generator state.
    """
    n_v = holdout_size(n, holdout_frac)
    perm = rng.permutation(n)
    return np.sort(perm[n_v:]), np.sort(perm[:n_v])


@dataclass(frozen=True, eq=False)
class CvResult:
    """Per-iteration errors and retained fitted maps for one run."""

    config: CvConfig
    kind_normal: str
    kind_mirrored: str
    n_pairs: int
    dim: int
    n_fit: int
    err_normal: np.ndarray
    err_mirrored: np.ndarray
    err_combined: np.ndarray
    maps_normal: np.ndarray
    maps_mirrored: np.ndarray
    maps_combined: np.ndarray

    def __post_init__(self) -> None:
        m = self.config.iterations
        for name in ("err_normal", "err_mirrored", "err_combined"):
            arr = getattr(self, name)
            if arr.shape != (m,):
                raise ValidationError(f"{name} must have length {m}")
            if np.any(arr < 0):
                raise ValidationError(f"{name} contains negative errors")

    def errors(self, method: str) -> np.ndarray:
        return getattr(self, f"err_{_method_attr(method)}")

    def maps(self, method: str) -> np.ndarray:
        return getattr(self, f"maps_{_method_attr(method)}")

    def mean(self, method: str) -> float:
        return float(self.errors(method).mean())

    def sd(self, method: str) -> float:
        errs = self.errors(method)
        return float(errs.std(ddof=1)) if errs.shape[0] > 1 else 0.0


def _method_attr(method: str) -> str:
    if method not in CV_METHODS:
        raise ValidationError(f"method must be one of {CV_METHODS}")
    return method


def _iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    # derived stream: hash of (seed, iteration), independent of execution order
    return np.random.default_rng(np.random.SeedSequence((seed, iteration)))


def run_extended_cv(
    normal: PairedDataset,
    mirrored: PairedDataset,
    cfg: CvConfig,
    jobs: int = 1,
) -> CvResult:
    """Run the three-way cross-validation for one (normal, mirrored) ordering.

    ``normal`` and ``mirrored`` must hold the same number of pairs with row i
    of one corresponding to row i of the other (temporal alignment). The
    holdout set is always drawn from ``normal``; the mirrored training set
    reuses the same fit indices. ``jobs`` only distributes iterations over
    threads and never changes the numbers.
    """
    if normal.n_pairs != mirrored.n_pairs:
        raise ValidationError(
            f"normal has {normal.n_pairs} pairs but mirrored has {mirrored.n_pairs}"
        )
    if normal.dim != mirrored.dim:
        raise ValidationError("normal and mirrored dimensions differ")
    n = normal.n_pairs
    d = normal.dim
    m = cfg.iterations
    n_v = holdout_size(n, cfg.holdout_frac)
    n_f = n - n_v
    rcond = cfg.rcond if cfg.rcond is not None else default_rcond(d)

    errs = np.empty((3, m))
    maps = np.empty((3, m, d, d))

    def run_chunk(lo: int, hi: int) -> None:
        count = hi - lo
        fit_idx = np.empty((count, n_f), dtype=np.intp)
        val_idx = np.empty((count, n_v), dtype=np.intp)
        for j, i in enumerate(range(lo, hi)):
            fit_idx[j], val_idx[j] = split_indices(n, cfg.holdout_frac, _iteration_rng(cfg.seed, i))
        x_val = normal.x[val_idx]
        y_val = normal.y[val_idx]
        training = (
            (normal.x[fit_idx], normal.y[fit_idx]),
            (mirrored.x[fit_idx], mirrored.y[fit_idx]),
        )
        combined = (
            np.concatenate((training[0][0], training[1][0]), axis=1),
            np.concatenate((training[0][1], training[1][1]), axis=1),
        )
        for slot, (x_fit, y_fit) in enumerate(training + (combined,)):
            a = fit_matrices(x_fit, y_fit, rcond)
            maps[slot, lo:hi] = a
            errs[slot, lo:hi] = cve_matrices(a, x_val, y_val)

    if jobs <= 1 or m == 1:
        run_chunk(0, m)
    else:
        workers = min(jobs, m)
        bounds = np.linspace(0, m, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_chunk, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for f in futures:
                f.result()

    return CvResult(
        config=cfg,
        kind_normal=normal.kind,
        kind_mirrored=mirrored.kind,
        n_pairs=n,
        dim=d,
        n_fit=n_f,
        err_normal=errs[0],
        err_mirrored=errs[1],
        err_combined=errs[2],
        maps_normal=maps[0],
        maps_mirrored=maps[1],
        maps_combined=maps[2],
    )


def uncertainty(maps) -> float:
    """Total coefficient scatter: sum over entries of the sample variance.

    ``maps`` is a stack (m, d, d) or a sequence of SectionMap. Uses the
    unbiased n-1 variance; needs at least two maps.
    """
    if isinstance(maps, np.ndarray):
        stack = maps
    else:
        mats = [m.matrix if isinstance(m, SectionMap) else np.asarray(m, float) for m in maps]
        if len(mats) >= 1 and any(mat.shape != mats[0].shape for mat in mats):
            raise ValidationError("maps must share one dimension")
        stack = np.stack(mats) if mats else np.empty((0, 0, 0))
    if stack.ndim != 3 or stack.shape[0] < 2:
        raise ValidationError("need at least two maps of equal dimension")
    return float(stack.var(axis=0, ddof=1).sum())


@dataclass(frozen=True)
class ConditionSummary:
    """Ordering-averaged errors and uncertainties for one transition kind.

    Means average the two orderings' per-method means; standard deviations
    pool both orderings' error streams. The asymmetric-model uncertainty
    averages the two orderings' normal-map scatter, the symmetric-model
    uncertainty the two orderings' combined-map scatter.
    """

    mean_normal: float
    mean_mirrored: float
    mean_combined: float
    sd_normal: float
    sd_mirrored: float
    sd_combined: float
    uncertainty_asymmetric: float
    uncertainty_symmetric: float
    n_pairs: int
    dim: int
    iterations: int


def aggregate_condition(first: CvResult, second: CvResult) -> ConditionSummary:
    """Average the two dataset orderings of one transition kind."""
    if first.config != second.config:
        raise ValidationError("orderings were run with different configurations")
    if first.dim != second.dim or first.n_pairs != second.n_pairs:
        raise ValidationError("orderings cover different data sizes")

    def pooled_sd(method: str) -> float:
        both = np.concatenate([first.errors(method), second.errors(method)])
        return float(both.std(ddof=1)) if both.shape[0] > 1 else 0.0

    return ConditionSummary(
        mean_normal=(first.mean(METHOD_NORMAL) + second.mean(METHOD_NORMAL)) / 2.0,
        mean_mirrored=(first.mean(METHOD_MIRRORED) + second.mean(METHOD_MIRRORED)) / 2.0,
        mean_combined=(first.mean(METHOD_COMBINED) + second.mean(METHOD_COMBINED)) / 2.0,
        sd_normal=pooled_sd(METHOD_NORMAL),
        sd_mirrored=pooled_sd(METHOD_MIRRORED),
        sd_combined=pooled_sd(METHOD_COMBINED),
        uncertainty_asymmetric=(
            uncertainty(first.maps_normal) + uncertainty(second.maps_normal)
        )
        / 2.0,
        uncertainty_symmetric=(
            uncertainty(first.maps_combined) + uncertainty(second.maps_combined)
        )
        / 2.0,
        n_pairs=first.n_pairs,
        dim=first.dim,
        iterations=first.config.iterations,
    )


@dataclass(frozen=True, eq=False)
class StepStrideComparison:
    """Paired step/stride combined-CV errors and their per-subject ratios."""

    pairs: np.ndarray
    ratios: np.ndarray
    mean_ratio: float


def compare_step_stride(
    step, stride
) -> StepStrideComparison:
    """Pair per-subject step and stride combined-CV errors.

    Inputs are equal-length sequences of ConditionSummary (or bare floats)
    aligned subject by subject; the ratio is stride over step.
    """

    def ccv_values(items) -> np.ndarray:
        vals = [it.mean_combined if isinstance(it, ConditionSummary) else float(it) for it in items]
        return np.asarray(vals, dtype=float)

    step_vals = ccv_values(step)
    stride_vals = ccv_values(stride)
    if step_vals.shape != stride_vals.shape or step_vals.ndim != 1 or step_vals.shape[0] < 1:
        raise ValidationError("step and stride summaries must align one-to-one per subject")
    if np.any(step_vals == 0.0):
        raise ValidationError("zero step error; ratio undefined")
    ratios = stride_vals / step_vals
    return StepStrideComparison(
        pairs=np.column_stack([step_vals, stride_vals]),
        ratios=ratios,
        mean_ratio=float(ratios.mean()),
    )
