# scalewave/extracter/patcher.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from scalewave.config.settings import DEFAULT_PATCH_LEN, DEFAULT_PATCH_STRIDE
from scalewave.errors import ArgumentError
from scalewave.matcher.sipr import Segmentation

logger = logging.getLogger(__name__)

Origin = Literal["segment", "stride"]
BoundarySource = Union[Segmentation, Sequence[int], None]


@dataclass
class PatchSet:
    """
    N_p x P patches copied out of one univariate window.
    positions are sorted, unique and within [0, L-P].
    """
    patches: np.ndarray
    positions: List[int]
    origins: List[Origin]
    channel: int = 0

    def __post_init__(self) -> None:
        if self.patches.ndim != 2 or self.patches.shape[0] != len(self.positions):
            raise ArgumentError(
                f"PatchSet shape {self.patches.shape} does not match {len(self.positions)} positions."
            )
        if len(self.origins) != len(self.positions):
            raise ArgumentError("PatchSet needs one origin per position.")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ArgumentError("PatchSet positions must be strictly increasing.")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def patch_len(self) -> int:
        return int(self.patches.shape[1])


# -----------------------------
# Channels
# -----------------------------
def flatten_channels(window: np.ndarray) -> Tuple[List[np.ndarray], List[Tuple[int, int]]]:
    """
    B x M x L window -> B*M univariate sequences, stock-major
    (channel b*M + m holds stock b, feature m).
    """
    arr = np.asarray(window, dtype=float)
    if arr.ndim != 3:
        raise ArgumentError(f"Expected a B x M x L window, got shape {arr.shape}.")
    B, M, _ = arr.shape
    sequences = [arr[b, m].copy() for b in range(B) for m in range(M)]
    index = [(b, m) for b in range(B) for m in range(M)]
    return sequences, index


def regroup_channels(sequences: Sequence[np.ndarray], n_stocks: int, n_features: int) -> np.ndarray:
    if len(sequences) != n_stocks * n_features:
        raise ArgumentError(
            f"Got {len(sequences)} sequences for {n_stocks} stocks x {n_features} features."
        )
    stacked = np.stack([np.asarray(s, dtype=float) for s in sequences])
    return stacked.reshape(n_stocks, n_features, -1)


# -----------------------------
# Extraction points
# -----------------------------
def _check_geometry(window_len: int, patch_len: int, stride: int) -> None:
    if patch_len < 1:
        raise ArgumentError(f"Patch length must be positive, got {patch_len}.")
    if patch_len > window_len:
        raise ArgumentError(f"Patch length {patch_len} exceeds the window length {window_len}.")
    if stride < 1:
        raise ArgumentError(f"Patch stride must be positive, got {stride}.")
    if stride > patch_len:
        raise ArgumentError(f"Patch stride {stride} exceeds the patch length {patch_len}; coverage would break.")


def _boundaries(source: BoundarySource) -> List[int]:
    if source is None:
        return []
    if isinstance(source, Segmentation):
        return list(source.boundaries)
    return [int(b) for b in source]


def extraction_plan(
    segmentation: BoundarySource,
    window_start: int,
    window_len: int,
    patch_len: int,
    stride: int,
    drop_crossing: bool = False,
) -> List[Tuple[int, Origin]]:
    """
    Sorted (position, origin) pairs. A position that is both a shifted segment
    boundary and a grid point is reported as 'segment'. drop_crossing removes
    grid patches that straddle a boundary; segment starts and the final
    position L-P are always kept.
    """
    _check_geometry(window_len, patch_len, stride)
    last = window_len - patch_len
    shifted = sorted({b - window_start for b in _boundaries(segmentation)})
    segment_pos = {b for b in shifted if 0 <= b <= last}

    grid = set(range(0, last + 1, stride))
    if drop_crossing:
        grid = {p for p in grid if not any(p < b < p + patch_len for b in shifted)}
    grid.add(last)

    plan: List[Tuple[int, Origin]] = []
    for pos in sorted(segment_pos | grid):
        plan.append((pos, "segment" if pos in segment_pos else "stride"))
    return plan


def extraction_points(
    segmentation: BoundarySource,
    window_start: int,
    window_len: int,
    patch_len: int,
    stride: int,
    drop_crossing: bool = False,
) -> List[int]:
    """Union of in-window segment boundaries, the stride grid and L-P; sorted, unique."""
    return [p for p, _ in extraction_plan(segmentation, window_start, window_len, patch_len, stride, drop_crossing)]


# -----------------------------
# Patches
# -----------------------------
def extract_patches(
    sequence: Sequence[float],
    positions: Iterable[int],
    patch_len: int,
    origins: Optional[Sequence[Origin]] = None,
    channel: int = 0,
) -> PatchSet:
    seq = np.asarray(sequence, dtype=float).reshape(-1)
    pos = [int(p) for p in positions]
    if not pos:
        raise ArgumentError("extract_patches needs at least one position.")
    if patch_len < 1 or patch_len > seq.size:
        raise ArgumentError(f"Patch length {patch_len} is invalid for a sequence of length {seq.size}.")
    for p in pos:
        if p < 0 or p > seq.size - patch_len:
            raise ArgumentError(f"Patch position {p} is outside [0, {seq.size - patch_len}].")
    patches = np.stack([seq[p:p + patch_len].copy() for p in pos])
    return PatchSet(
        patches=patches,
        positions=pos,
        origins=list(origins) if origins is not None else ["stride"] * len(pos),
        channel=channel,
    )


def next_patch_targets(patch_set: PatchSet) -> Tuple[np.ndarray, np.ndarray]:
    """(inputs, targets): patch k is paired with patch k+1."""
    if len(patch_set) < 2:
        raise ArgumentError(f"Next-patch pairs need at least 2 patches, got {len(patch_set)}.")
    return patch_set.patches[:-1].copy(), patch_set.patches[1:].copy()


def reconstruct_window(patch_set: PatchSet, window_len: int) -> np.ndarray:
    """Overwrite patches at their positions; uncovered points stay NaN."""
    out = np.full(window_len, np.nan)
    for patch, p in zip(patch_set.patches, patch_set.positions):
        out[p:p + patch_set.patch_len] = patch
    return out


def patch_window(
    window: np.ndarray,
    segmentations: Optional[dict] = None,
    window_start: int = 0,
    patch_len: int = DEFAULT_PATCH_LEN,
    stride: int = DEFAULT_PATCH_STRIDE,
    drop_crossing: bool = False,
) -> List[PatchSet]:
    """
    Patch every channel of a B x M x L window. segmentations maps (b, m) to
    global boundaries; channels without an entry use the stride grid only.
    """
    sequences, index = flatten_channels(window)
    L = sequences[0].size
    out: List[PatchSet] = []
    for c, (seq, key) in enumerate(zip(sequences, index)):
        plan = extraction_plan((segmentations or {}).get(key), window_start, L, patch_len, stride, drop_crossing)
        out.append(extract_patches(seq, [p for p, _ in plan], patch_len, [o for _, o in plan], channel=c))
    logger.debug("Patched %d channels (L=%d, P=%d, stride=%d)", len(out), L, patch_len, stride)
    return out
