import numpy as np
import pytest

from scalewave.errors import ArgumentError
from scalewave.extracter.patcher import (
    extract_patches,
    extraction_plan,
    extraction_points,
    flatten_channels,
    next_patch_targets,
    patch_window,
    reconstruct_window,
    regroup_channels,
)
from scalewave.matcher.sipr import Segmentation


def test_stride_grid_always_ends_at_last_position():
    assert extraction_points(None, 0, 32, 8, 4) == [0, 4, 8, 12, 16, 20, 24]
    assert extraction_points(None, 0, 30, 8, 4) == [0, 4, 8, 12, 16, 20, 22]


def test_segment_boundaries_are_shifted_into_the_window():
    seg = Segmentation(boundaries=[100, 105, 140], lengths=[5, 35, 10], assignments=[0, 1, 0], distances=[0.0] * 3)
    plan = extraction_plan(seg, 100, 32, 8, 4)
    assert plan[:4] == [(0, "segment"), (4, "stride"), (5, "segment"), (8, "stride")]
    assert plan[-1] == (24, "stride")


def test_boundaries_outside_window_are_ignored():
    assert extraction_points([3, 95], 10, 32, 8, 8) == [0, 8, 16, 24]


def test_drop_crossing_removes_straddling_grid_patches():
    points = extraction_points([0, 5], 0, 32, 8, 4, drop_crossing=True)
    assert points == [0, 5, 8, 12, 16, 20, 24]


@pytest.mark.parametrize("L, P, stride", [(16, 0, 1), (16, 17, 4), (16, 8, 0), (16, 8, 9)])
def test_bad_geometry_is_rejected(L, P, stride):
    with pytest.raises(ArgumentError):
        extraction_points(None, 0, L, P, stride)


def test_extract_patches_copies_values():
    seq = np.arange(20.0)
    ps = extract_patches(seq, [0, 5, 12], 8)
    assert len(ps) == 3
    np.testing.assert_array_equal(ps.patches[1], np.arange(5.0, 13.0))
    seq[5] = -1.0
    assert ps.patches[1, 0] == 5.0


def test_extract_patches_rejects_out_of_range_position():
    with pytest.raises(ArgumentError):
        extract_patches(np.arange(10.0), [3], 8)


def test_reconstruct_window_covers_every_point():
    rng = np.random.default_rng(0)
    seq = rng.normal(size=30)
    for stride in (1, 3, 8):
        ps = extract_patches(seq, extraction_points([7, 13], 0, 30, 8, stride), 8)
        np.testing.assert_array_equal(reconstruct_window(ps, 30), seq)


def test_next_patch_targets_pairs_neighbours():
    ps = extract_patches(np.arange(16.0), [0, 4, 8], 8)
    inputs, targets = next_patch_targets(ps)
    np.testing.assert_array_equal(inputs, ps.patches[:2])
    np.testing.assert_array_equal(targets, ps.patches[1:])
    with pytest.raises(ArgumentError):
        next_patch_targets(extract_patches(np.arange(8.0), [0], 8))


def test_flatten_channels_is_stock_major():
    window = np.arange(2 * 3 * 4, dtype=float).reshape(2, 3, 4)
    seqs, index = flatten_channels(window)
    assert index[:4] == [(0, 0), (0, 1), (0, 2), (1, 0)]
    np.testing.assert_array_equal(seqs[4], window[1, 1])
    np.testing.assert_array_equal(regroup_channels(seqs, 2, 3), window)


def test_patch_window_uses_per_channel_boundaries():
    window = np.random.default_rng(1).normal(size=(2, 1, 24))
    sets = patch_window(window, {(1, 0): [50, 53]}, window_start=50, patch_len=8, stride=8)
    assert sets[0].positions == [0, 8, 16]
    assert sets[1].positions == [0, 3, 8, 16]
    assert sets[1].origins == ["segment", "segment", "stride", "stride"]
    assert sets[1].channel == 1
