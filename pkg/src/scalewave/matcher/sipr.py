# scalewave/matcher/sipr.py
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from scalewave.config.settings import (
    DEFAULT_DBA_ITERATIONS,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    STD_FLOOR,
)
from scalewave.errors import ArgumentError
from scalewave.matcher.dtw import DtwOptions, dtw_distance, volatility_weights, weighted_dtw_distance

logger = logging.getLogger(__name__)

InitMode = Literal["farthest", "kmeans++"]


@dataclass
class PatternLibrary:
    """
    K centroid shapes (z-normalized, lengths within [l_min, l_max]) learned by
    DTW k-means, plus the DTW options they were learned with.
    """
    centroids: List[np.ndarray]
    l_min: int
    l_max: int
    options: DtwOptions = field(default_factory=DtwOptions)
    inertia: float = 0.0
    inertia_trace: List[float] = field(default_factory=list)
    assignments: List[int] = field(default_factory=list)
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        self.centroids = [np.asarray(c, dtype=float).reshape(-1).copy() for c in self.centroids]
        if not self.centroids:
            raise ArgumentError("A pattern library needs at least one centroid.")
        if not 1 <= self.l_min <= self.l_max:
            raise ArgumentError(f"Need 1 <= l_min <= l_max, got l_min={self.l_min}, l_max={self.l_max}.")
        for i, c in enumerate(self.centroids):
            if not self.l_min <= c.size <= self.l_max:
                raise ArgumentError(
                    f"Centroid {i} has length {c.size}, outside [{self.l_min}, {self.l_max}]."
                )

    @property
    def k(self) -> int:
        return len(self.centroids)


@dataclass
class Segmentation:
    """
    Greedy tiling of a series. boundaries[j+1] = boundaries[j] + lengths[j].
    `distances` are path-length-normalized DTW distances to the assigned centroid.
    """
    boundaries: List[int]
    lengths: List[int]
    assignments: List[int]
    distances: List[float]
    merged_remainder: bool = False

    @property
    def total_length(self) -> int:
        return int(sum(self.lengths))

    def spans(self) -> List[Tuple[int, int]]:
        return [(b, b + n) for b, n in zip(self.boundaries, self.lengths)]


# -----------------------------
# Segments
# -----------------------------
def zscore_segment(segment: Sequence[float]) -> np.ndarray:
    """Shape-only view of a segment: (s - mean) / max(std, floor)."""
    seg = np.asarray(segment, dtype=float).reshape(-1)
    return (seg - seg.mean()) / max(float(seg.std()), STD_FLOOR)


def _check_lengths(l_min: int, l_max: int) -> None:
    if l_min < 1:
        raise ArgumentError(f"l_min must be positive, got {l_min}.")
    if l_min > l_max:
        raise ArgumentError(f"l_min ({l_min}) is greater than l_max ({l_max}).")


def harvest_segments(series: Sequence[float], l_min: int, l_max: int, stride: int) -> List[np.ndarray]:
    """
    Candidate segments of every length in [l_min, l_max] at starts 0, stride, 2*stride, ...
    Ordered by start, then length. Each segment is z-normalized.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    _check_lengths(l_min, l_max)
    if stride < 1:
        raise ArgumentError(f"Harvest stride must be positive, got {stride}.")
    if l_max > x.size:
        raise ArgumentError(f"l_max ({l_max}) exceeds the series length ({x.size}).")
    out: List[np.ndarray] = []
    for start in range(0, x.size - l_min + 1, stride):
        for length in range(l_min, l_max + 1):
            if start + length > x.size:
                break
            out.append(zscore_segment(x[start:start + length]))
    return out


def _modal_length(segments: Sequence[np.ndarray]) -> int:
    counts = Counter(len(s) for s in segments)
    top = max(counts.values())
    return min(length for length, c in counts.items() if c == top)


def _query_distance(segment: np.ndarray, centroid: np.ndarray, opts: DtwOptions) -> float:
    return dtw_distance(segment, centroid, opts).distance


def farthest_first_init(
    segments: Sequence[Sequence[float]],
    k: int,
    opts: Optional[DtwOptions] = None,
    seed: Optional[int] = None,
    init: InitMode = "farthest",
) -> Tuple[List[np.ndarray], List[int]]:
    """
    First centroid: seeded-random segment of the modal harvested length.
    Then repeatedly the segment whose minimum volatility-weighted DTW distance to the
    chosen centroids is largest (ties -> smallest index). init='kmeans++' samples
    proportionally to that squared distance instead.

    Returns (centroids, chosen segment indices).
    """
    segs = [np.asarray(s, dtype=float).reshape(-1) for s in segments]
    if k < 1:
        raise ArgumentError(f"k must be positive, got {k}.")
    if k > len(segs):
        raise ArgumentError(f"k ({k}) exceeds the number of segments ({len(segs)}).")
    opts = replace(opts or DtwOptions(), weight_mode="volatility")
    rng = np.random.default_rng(seed)

    modal = _modal_length(segs)
    pool = [i for i, s in enumerate(segs) if len(s) == modal]
    chosen = [pool[int(rng.integers(len(pool)))]]
    nearest = np.full(len(segs), np.inf)

    while len(chosen) < k:
        last = segs[chosen[-1]]
        for i, s in enumerate(segs):
            if i in chosen:
                continue
            d = _query_distance(s, last, opts)
            if d < nearest[i]:
                nearest[i] = d
        candidates = [i for i in range(len(segs)) if i not in chosen]
        scores = np.array([nearest[i] for i in candidates])
        if init == "kmeans++" and scores.sum() > 0:
            probs = scores ** 2 / np.sum(scores ** 2)
            pick = candidates[int(rng.choice(len(candidates), p=probs))]
        else:
            pick = candidates[int(np.argmax(scores))]
        chosen.append(pick)

    logger.debug("Initial centroids: %s", chosen)
    return [segs[i].copy() for i in chosen], chosen


# -----------------------------
# DTW barycenter averaging
# -----------------------------
def _resample(seq: np.ndarray, length: int) -> np.ndarray:
    if seq.size == length:
        return seq.copy()
    if seq.size == 1:
        return np.full(length, seq[0])
    src = np.linspace(0.0, 1.0, seq.size)
    dst = np.linspace(0.0, 1.0, length)
    return np.interp(dst, src, seq)


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    half = cum[-1] / 2.0
    idx = int(np.searchsorted(cum, half))
    if cum[idx] == half and idx + 1 < v.size:
        return float(0.5 * (v[idx] + v[idx + 1]))
    return float(v[idx])


def _member_weights(member: np.ndarray, opts: DtwOptions) -> np.ndarray:
    if opts.weight_mode == "volatility" and member.size >= 2:
        return volatility_weights(member, min(opts.volatility_window, member.size))
    return np.ones(member.size)


def _dba_cost(members: Sequence[np.ndarray], weights: Sequence[np.ndarray], centroid: np.ndarray,
              opts: DtwOptions, return_path: bool):
    base = opts.uniform()
    results = [weighted_dtw_distance(m, centroid, w, base, return_path=return_path)
               for m, w in zip(members, weights)]
    return float(sum(r.distance for r in results)), results


def dba_centroid(
    members: Sequence[Sequence[float]],
    target_length: int,
    reference: Optional[Sequence[float]] = None,
    iterations: int = DEFAULT_DBA_ITERATIONS,
    opts: Optional[DtwOptions] = None,
) -> np.ndarray:
    """
    DTW Barycenter Averaging to a fixed target_length.

    Each iteration aligns every member to the current centroid and moves each
    centroid point to the barycenter of the member points aligned to it:
    weighted median under the absolute metric, weighted mean under the squared one.
    The summed member-to-centroid distance never increases.
    """
    mems = [np.asarray(m, dtype=float).reshape(-1) for m in members]
    if not mems:
        raise ArgumentError("dba_centroid needs at least one member.")
    if target_length < 1:
        raise ArgumentError(f"target_length must be positive, got {target_length}.")
    if iterations < 1:
        raise ArgumentError(f"iterations must be positive, got {iterations}.")
    opts = opts or DtwOptions()
    ref = np.asarray(reference, dtype=float).reshape(-1) if reference is not None else mems[0]
    centroid = _resample(ref, target_length)
    weights = [_member_weights(m, opts) for m in mems]

    cost, results = _dba_cost(mems, weights, centroid, opts, return_path=True)
    for it in range(iterations):
        buckets_v: List[List[float]] = [[] for _ in range(target_length)]
        buckets_w: List[List[float]] = [[] for _ in range(target_length)]
        for m, w, res in zip(mems, weights, results):
            for i, j in res.path:
                buckets_v[j].append(m[i])
                buckets_w[j].append(w[i])
        updated = np.empty(target_length)
        for j in range(target_length):
            v = np.asarray(buckets_v[j])
            w = np.asarray(buckets_w[j])
            if opts.local_metric == "absolute":
                updated[j] = _weighted_median(v, w)
            else:
                updated[j] = float(np.sum(v * w) / np.sum(w))
        if np.array_equal(updated, centroid):
            break
        new_cost, new_results = _dba_cost(mems, weights, updated, opts, return_path=True)
        if new_cost > cost:
            logger.debug("DBA stopped at iteration %d (cost %.6g -> %.6g)", it, cost, new_cost)
            break
        centroid, cost, results = updated, new_cost, new_results
    return centroid


# -----------------------------
# K-means
# -----------------------------
def nearest_centroid(segment: Sequence[float], centroids: Sequence[np.ndarray],
                     opts: Optional[DtwOptions] = None) -> Tuple[int, float]:
    """(index, distance) of the closest centroid; ties -> smallest index."""
    opts = opts or DtwOptions()
    best, best_d = 0, np.inf
    for c, centroid in enumerate(centroids):
        d = _query_distance(np.asarray(segment, dtype=float), centroid, opts)
        if d < best_d:
            best, best_d = c, d
    return best, float(best_d)


def _assign(segs: Sequence[np.ndarray], centroids: Sequence[np.ndarray], opts: DtwOptions):
    pairs = [nearest_centroid(s, centroids, opts) for s in segs]
    labels = [p[0] for p in pairs]
    dists = np.array([p[1] for p in pairs])
    return labels, dists


def _lower_median(values: Sequence[int]) -> int:
    ordered = sorted(values)
    return int(ordered[(len(ordered) - 1) // 2])


def _update_centroids(segs, centroids, labels, dists, l_min, l_max, opts, dba_iterations):
    updated: List[np.ndarray] = []
    taken = set()
    for c, centroid in enumerate(centroids):
        members = [s for s, lab in zip(segs, labels) if lab == c]
        if not members:
            order = np.argsort(-dists, kind="stable")
            far = next(int(i) for i in order if int(i) not in taken)
            taken.add(far)
            logger.debug("Cluster %d empty; re-seeded with segment %d", c, far)
            updated.append(segs[far].copy())
            continue
        target = min(max(_lower_median([len(m) for m in members]), l_min), l_max)
        updated.append(dba_centroid(members, target, reference=centroid,
                                    iterations=dba_iterations, opts=opts))
    return updated


def kmeans_cluster(
    segments: Sequence[Sequence[float]],
    k: int,
    opts: Optional[DtwOptions] = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    seed: Optional[int] = None,
    l_min: Optional[int] = None,
    l_max: Optional[int] = None,
    dba_iterations: int = DEFAULT_DBA_ITERATIONS,
    init: InitMode = "farthest",
) -> PatternLibrary:
    """
    DTW k-means: nearest-centroid assignment alternating with DBA centroid updates.

    An update is kept only if it does not increase inertia, so the recorded
    inertia trace is non-increasing. Stops when the improvement drops below tol
    or after max_iter updates.
    """
    segs = [np.asarray(s, dtype=float).reshape(-1) for s in segments]
    if max_iter < 1:
        raise ArgumentError(f"max_iter must be positive, got {max_iter}.")
    if tol <= 0:
        raise ArgumentError(f"tol must be positive, got {tol}.")
    opts = opts or DtwOptions()
    lengths = [len(s) for s in segs]
    l_min = l_min if l_min is not None else min(lengths, default=1)
    l_max = l_max if l_max is not None else max(lengths, default=1)
    _check_lengths(l_min, l_max)

    centroids, _ = farthest_first_init(segs, k, opts, seed=seed, init=init)
    labels, dists = _assign(segs, centroids, opts)
    inertia = float(dists.sum())
    trace = [inertia]
    logger.info("k-means init: k=%d segments=%d inertia=%.6g", k, len(segs), inertia)

    for it in range(max_iter):
        candidate = _update_centroids(segs, centroids, labels, dists, l_min, l_max, opts, dba_iterations)
        new_labels, new_dists = _assign(segs, candidate, opts)
        new_inertia = float(new_dists.sum())
        if new_inertia > inertia:
            logger.info("k-means stopped at iteration %d: update would raise inertia", it + 1)
            break
        improvement = inertia - new_inertia
        centroids, labels, dists, inertia = candidate, new_labels, new_dists, new_inertia
        trace.append(inertia)
        logger.info("k-means iteration %d: inertia=%.6g", it + 1, inertia)
        if improvement < tol:
            break

    return PatternLibrary(
        centroids=centroids,
        l_min=l_min,
        l_max=l_max,
        options=opts,
        inertia=inertia,
        inertia_trace=trace,
        assignments=list(labels),
        seed=seed,
    )


# -----------------------------
# Segmentation
# -----------------------------
def candidate_distance(window: Sequence[float], centroid: np.ndarray, opts: DtwOptions) -> float:
    """DTW distance of the z-normalized window to a centroid, divided by the warping-path length."""
    res = dtw_distance(zscore_segment(window), centroid, opts, return_path=True)
    return res.distance / res.path_length


def segment_series(series: Sequence[float], library: PatternLibrary,
                   opts: Optional[DtwOptions] = None) -> Segmentation:
    """
    Greedy left-to-right segmentation: at position t choose the (l, p) pair
    minimizing the normalized DTW distance of X[t:t+l] to centroid p
    (ties -> smallest l, then smallest centroid index), then advance by l.
    A tail shorter than l_min is merged into the last segment, whose distance
    is then measured over the merged span.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    opts = opts or library.options
    l_min, l_max = library.l_min, library.l_max
    if x.size < l_min:
        raise ArgumentError(f"Series of length {x.size} is shorter than l_min ({l_min}).")

    boundaries: List[int] = []
    lengths: List[int] = []
    assignments: List[int] = []
    distances: List[float] = []
    t = 0
    while x.size - t >= l_min:
        best = (np.inf, l_min, 0)
        for length in range(l_min, min(l_max, x.size - t) + 1):
            window = x[t:t + length]
            for p, centroid in enumerate(library.centroids):
                d = candidate_distance(window, centroid, opts)
                if d < best[0]:
                    best = (d, length, p)
        d, length, p = best
        boundaries.append(t)
        lengths.append(length)
        assignments.append(p)
        distances.append(float(d))
        t += length

    merged = False
    if t < x.size:
        lengths[-1] += x.size - t
        start = boundaries[-1]
        distances[-1] = candidate_distance(x[start:], library.centroids[assignments[-1]], opts)
        merged = True
    logger.debug("Segmented series of length %d into %d segments", x.size, len(lengths))
    return Segmentation(boundaries, lengths, assignments, distances, merged_remainder=merged)


def segment_panel(values: np.ndarray, library: PatternLibrary,
                  opts: Optional[DtwOptions] = None) -> Dict[Tuple[int, int], List[int]]:
    """
    Segment every (stock, feature) channel of a B x M x T array with one library.
    Returns {(b, m): boundaries}.
    """
    B, M, _ = values.shape
    out: Dict[Tuple[int, int], List[int]] = {}
    for b in range(B):
        for m in range(M):
            out[(b, m)] = segment_series(values[b, m], library, opts).boundaries
    logger.debug("Segmented %d channels", B * M)
    return out


def segment_window(values: np.ndarray, end: int, length: int, library: PatternLibrary,
                   opts: Optional[DtwOptions] = None) -> Dict[Tuple[int, int], List[int]]:
    """
    Causal segmentation for the window of `length` days ending at index `end`
    of a B x M x T array. Only values[..., end-length+1 : end+1] are read;
    boundaries are returned as global indices into the T axis.
    """
    start = end - length + 1
    if start < 0 or end >= values.shape[2]:
        raise ArgumentError(f"Day {end} has no full window of length {length}.")
    local = segment_panel(values[:, :, start:end + 1], library, opts)
    return {key: [start + b for b in bounds] for key, bounds in local.items()}
