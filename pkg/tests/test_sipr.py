import numpy as np
import pytest

from scalewave.errors import ArgumentError
from scalewave.loader.synthetic import two_motif_series
from scalewave.matcher.dtw import DtwOptions, weighted_dtw_distance
from scalewave.matcher.sipr import (
    PatternLibrary,
    candidate_distance,
    dba_centroid,
    farthest_first_init,
    harvest_segments,
    kmeans_cluster,
    nearest_centroid,
    segment_panel,
    segment_series,
    segment_window,
    zscore_segment,
)


def _motif_segments(seed, per_motif=8, noise=0.02):
    """z-normalized bump and vee shapes at lengths 8..12; returns (segments, true labels)."""
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, 64)
    shapes = [np.sin(np.pi * grid), np.abs(2.0 * grid - 1.0)]
    segs, truth = [], []
    for label, shape in enumerate(shapes):
        for _ in range(per_motif):
            n = int(rng.integers(8, 13))
            s = np.interp(np.linspace(0, 1, n), grid, shape) + rng.normal(0, noise, n)
            segs.append(zscore_segment(s))
            truth.append(label)
    return segs, truth


def _library(seed=0):
    rng = np.random.default_rng(seed)
    return PatternLibrary(
        centroids=[zscore_segment(rng.normal(size=4)), zscore_segment(rng.normal(size=6))],
        l_min=4,
        l_max=6,
    )


def test_zscore_segment_constant_is_zero():
    np.testing.assert_array_equal(zscore_segment([2.0, 2.0, 2.0]), 0.0)


def test_harvest_segments_order_and_normalization():
    segs = harvest_segments(np.arange(10.0) ** 1.5, 3, 4, 3)
    assert [len(s) for s in segs] == [3, 4, 3, 4, 3, 4]
    for s in segs:
        assert s.mean() == pytest.approx(0.0, abs=1e-12)
        assert s.std() == pytest.approx(1.0)


def test_harvest_segments_rejects_bad_lengths():
    with pytest.raises(ArgumentError):
        harvest_segments(np.arange(5.0), 4, 3, 1)
    with pytest.raises(ArgumentError):
        harvest_segments(np.arange(5.0), 2, 6, 1)


def test_farthest_first_init_is_seeded_and_distinct():
    segs, _ = _motif_segments(0)
    a, idx_a = farthest_first_init(segs, 3, seed=11)
    b, idx_b = farthest_first_init(segs, 3, seed=11)
    assert idx_a == idx_b
    assert len(set(idx_a)) == 3
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_farthest_first_init_rejects_too_many_centroids():
    with pytest.raises(ArgumentError) as info:
        farthest_first_init([np.zeros(3), np.ones(3)], 3)
    assert "exceeds" in str(info.value)


def test_kmeans_plus_plus_init_is_seeded():
    segs, _ = _motif_segments(1)
    _, idx_a = farthest_first_init(segs, 2, seed=4, init="kmeans++")
    _, idx_b = farthest_first_init(segs, 2, seed=4, init="kmeans++")
    assert idx_a == idx_b


def test_dba_of_identical_members_is_the_member():
    member = zscore_segment(np.sin(np.linspace(0, 3, 9)))
    centroid = dba_centroid([member, member, member], 9)
    np.testing.assert_allclose(centroid, member)


@pytest.mark.parametrize("metric", ["absolute", "squared"])
def test_dba_cost_does_not_increase_with_iterations(metric):
    segs, _ = _motif_segments(2)
    members = segs[:8]
    opts = DtwOptions(local_metric=metric)

    def cost(c):
        return sum(weighted_dtw_distance(m, c, np.ones(m.size), opts).distance for m in members)

    costs = [cost(dba_centroid(members, 10, reference=members[0], iterations=it, opts=opts))
             for it in (1, 2, 4, 8)]
    start = cost(np.interp(np.linspace(0, 1, 10), np.linspace(0, 1, members[0].size), members[0]))
    assert costs[0] <= start + 1e-12
    assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))


def test_nearest_centroid_tie_goes_to_first():
    c = np.array([0.0, 1.0, 0.0])
    assert nearest_centroid([0.0, 1.0, 0.0], [c, c.copy()]) == (0, 0.0)


def test_kmeans_recovers_two_motifs():
    segs, truth = _motif_segments(3)
    library = kmeans_cluster(segs, 2, seed=0, l_min=8, l_max=12, max_iter=10)
    assert library.k == 2
    assert all(8 <= c.size <= 12 for c in library.centroids)
    # purity 1.0: every true motif maps to a single cluster, and the two differ
    first = {library.assignments[i] for i, t in enumerate(truth) if t == 0}
    second = {library.assignments[i] for i, t in enumerate(truth) if t == 1}
    assert len(first) == 1 and len(second) == 1
    assert first != second


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_kmeans_inertia_trace_is_monotone(seed):
    series = two_motif_series(60, 6, 9, seed=seed).values
    segs = harvest_segments(series, 6, 9, 3)
    library = kmeans_cluster(segs, 3, DtwOptions(weight_mode="volatility"), seed=seed, max_iter=5)
    trace = library.inertia_trace
    assert trace[-1] == pytest.approx(library.inertia)
    assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_kmeans_is_deterministic_for_a_seed():
    segs, _ = _motif_segments(4)
    a = kmeans_cluster(segs, 2, seed=9, max_iter=4)
    b = kmeans_cluster(segs, 2, seed=9, max_iter=4)
    assert a.inertia_trace == b.inertia_trace
    for x, y in zip(a.centroids, b.centroids):
        np.testing.assert_array_equal(x, y)


def test_library_rejects_centroid_outside_length_range():
    with pytest.raises(ArgumentError):
        PatternLibrary(centroids=[np.zeros(3)], l_min=4, l_max=6)


def test_segment_series_tiles_the_series():
    library = _library()
    x = np.random.default_rng(5).normal(size=31)
    seg = segment_series(x, library)
    assert seg.boundaries[0] == 0
    for (a, b), nxt in zip(seg.spans(), seg.boundaries[1:]):
        assert b == nxt
    assert seg.total_length == 31
    assert all(4 <= n for n in seg.lengths)


def test_segment_series_choices_are_locally_optimal():
    library = _library(1)
    opts = library.options
    rng = np.random.default_rng(6)
    for _ in range(50):
        x = rng.normal(size=int(rng.integers(12, 30)))
        seg = segment_series(x, library)
        kept = len(seg.boundaries) - (1 if seg.merged_remainder else 0)
        for t, d in zip(seg.boundaries[:kept], seg.distances[:kept]):
            for length in range(library.l_min, min(library.l_max, x.size - t) + 1):
                for centroid in library.centroids:
                    assert candidate_distance(x[t:t + length], centroid, opts) >= d - 1e-12


def test_segment_series_merges_short_remainder():
    library = PatternLibrary(centroids=[zscore_segment([0.0, 1.0, 2.0, 3.0])], l_min=4, l_max=4)
    seg = segment_series(np.arange(10.0), library)
    assert seg.boundaries == [0, 4]
    assert seg.lengths == [4, 6]
    assert seg.merged_remainder
    merged = candidate_distance(np.arange(4.0, 10.0), library.centroids[0], library.options)
    assert seg.distances[-1] == pytest.approx(merged)


def test_segment_series_too_short():
    with pytest.raises(ArgumentError):
        segment_series(np.arange(3.0), _library())


def test_segment_panel_covers_every_channel():
    values = np.random.default_rng(7).normal(size=(2, 2, 16))
    out = segment_panel(values, _library())
    assert set(out) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert all(b[0] == 0 for b in out.values())


def test_segment_window_reads_only_its_own_days():
    rng = np.random.default_rng(8)
    values = rng.normal(size=(2, 1, 30))
    library = _library()
    before = segment_window(values, 19, 12, library)
    assert all(b[0] == 8 for b in before.values())
    assert all(8 <= x <= 19 for b in before.values() for x in b)

    shifted = values.copy()
    shifted[:, :, 20:] = 10.0 * rng.normal(size=(2, 1, 10))
    assert segment_window(shifted, 19, 12, library) == before
    local = segment_panel(values[:, :, 8:20], library)
    assert {k: [8 + x for x in v] for k, v in local.items()} == before


def test_segment_window_needs_a_full_window():
    with pytest.raises(ArgumentError):
        segment_window(np.zeros((1, 1, 10)), 5, 12, _library())
    with pytest.raises(ArgumentError):
        segment_window(np.zeros((1, 1, 10)), 10, 4, _library())


def test_repeated_centroid_is_cut_at_its_copies():
    centroid = zscore_segment([0.0, 3.0, 1.0, 4.0, 2.0, 5.0])
    library = PatternLibrary(centroids=[centroid], l_min=4, l_max=8)
    seg = segment_series(np.tile(centroid, 3), library)
    assert seg.boundaries == [0, 6, 12]
    assert seg.lengths == [6, 6, 6]
    assert seg.distances == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)


def test_two_planted_motifs_are_recovered():
    bump = zscore_segment(np.sin(np.pi * np.linspace(0.0, 1.0, 8)))
    vee = zscore_segment(np.abs(np.linspace(-1.0, 1.0, 12)))
    library = PatternLibrary(centroids=[bump, vee], l_min=8, l_max=12)
    seg = segment_series(np.concatenate([bump, vee]), library)
    assert seg.boundaries == [0, 8]
    assert seg.lengths == [8, 12]
    assert seg.assignments == [0, 1]
    assert not seg.merged_remainder


def test_stretched_motif_matches_its_centroid():
    bump = zscore_segment(np.sin(np.pi * np.linspace(0.0, 1.0, 8)))
    stretched = zscore_segment(np.sin(np.pi * np.linspace(0.0, 1.0, 12)))
    centroids = [np.zeros(8), bump]
    assert nearest_centroid(bump, centroids)[0] == 1
    assert nearest_centroid(stretched, centroids)[0] == 1


@pytest.mark.parametrize("metric", ["absolute", "squared"])
def test_dba_of_two_constants_is_their_midpoint(metric):
    members = [np.zeros(3), np.full(3, 2.0)]
    centroid = dba_centroid(members, 3, opts=DtwOptions(local_metric=metric))
    np.testing.assert_allclose(centroid, [1.0, 1.0, 1.0])


@pytest.mark.parametrize("seed", range(6))
def test_farthest_first_picks_both_shapes(seed):
    a = zscore_segment(np.sin(np.linspace(0.0, 3.0, 6)))
    b = zscore_segment(np.linspace(0.0, 1.0, 6))
    _, idx = farthest_first_init([a, a.copy(), b], 2, seed=seed)
    assert 2 in idx
    assert idx[0] in (0, 1) or idx[1] in (0, 1)


def test_one_cluster_per_segment_has_zero_inertia():
    segs, _ = _motif_segments(5, per_motif=2)
    library = kmeans_cluster(segs, len(segs), seed=0, max_iter=3)
    assert library.inertia == pytest.approx(0.0, abs=1e-12)
    assert sorted(library.assignments) == list(range(len(segs)))
    for seg, label in zip(segs, library.assignments):
        np.testing.assert_allclose(library.centroids[label], seg)
