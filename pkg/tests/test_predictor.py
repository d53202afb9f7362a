import numpy as np
import pytest

from scalewave.errors import ArgumentError, NumericError
from scalewave.matcher.sipr import PatternLibrary, zscore_segment
from scalewave.model.predictor import (
    PredictorParams,
    Tokenizer,
    backward,
    forward,
    next_patch_loss,
    predict_panel_scores,
    predict_scores,
    run_window,
    tokenize_channel,
)
from scalewave.model.training import window_objective
from scalewave.wavelet.filters import FilterPair, init_filters


def _perturbed(params, direction, eps):
    out = params.copy()
    for name in out.arrays:
        out.arrays[name] = out.arrays[name] + eps * direction[name]
    return out


def test_forward_shapes_and_flat_token_input():
    params = PredictorParams.init(4, 2, 5, seed=0)
    tokens = np.random.default_rng(0).normal(size=(6, 4, 3))
    preds, scores = forward(tokens, params)
    assert preds.shape == (6, 4)
    assert scores.shape == (6,)
    preds_flat, _ = forward(tokens.reshape(6, 12), params)
    np.testing.assert_array_equal(preds, preds_flat)


def test_forward_is_causal():
    rng = np.random.default_rng(1)
    params = PredictorParams.init(4, 1, 6, seed=1)
    tokens = rng.normal(size=(7, 8))
    preds, scores = forward(tokens, params)
    changed = tokens.copy()
    changed[4] += rng.normal(size=8)
    preds2, scores2 = forward(changed, params)
    np.testing.assert_array_equal(preds[:4], preds2[:4])
    np.testing.assert_array_equal(scores[:4], scores2[:4])
    assert not np.allclose(scores[4:], scores2[4:])


def test_forward_rejects_wrong_token_width():
    params = PredictorParams.init(4, 1, 3, seed=0)
    with pytest.raises(ArgumentError):
        forward(np.zeros((3, 5)), params)


def test_tokens_only_see_their_prefix():
    rng = np.random.default_rng(2)
    tok = Tokenizer(window_len=24, patch_len=8, patch_stride=4, levels=2)
    filters = init_filters("db4")
    seq = rng.normal(size=24)
    positions = tok.positions(None, 0)
    tokens, patches = tokenize_channel(seq, positions, tok, filters)
    changed = seq.copy()
    changed[-1] += 5.0
    tokens2, _ = tokenize_channel(changed, positions, tok, filters)
    # only the final patch (ending at the last point) sees the change
    np.testing.assert_array_equal(tokens[:-1], tokens2[:-1])
    assert not np.allclose(tokens[-1], tokens2[-1])
    np.testing.assert_array_equal(patches[1], seq[4:12])


def test_backward_matches_finite_differences_for_parameters():
    rng = np.random.default_rng(3)
    params = PredictorParams.init(3, 1, 4, seed=3)
    tokens = rng.normal(size=(5, 6))
    targets = rng.normal(size=(4, 3))
    y = 0.7

    def loss(p):
        preds, scores = forward(tokens, p)
        return next_patch_loss(preds[:-1], targets) + (scores[-1] - y) ** 2

    preds, scores, cache = forward(tokens, params, return_cache=True)
    gp = np.zeros_like(preds)
    gp[:-1] = 2.0 * (preds[:-1] - targets) / targets.size
    gs = np.zeros_like(scores)
    gs[-1] = 2.0 * (scores[-1] - y)
    grads, d_tokens = backward(cache, params, gp, gs)

    eps = 1e-6
    for name, arr in params.arrays.items():
        for idx in np.ndindex(arr.shape):
            direction = params.zeros_like()
            direction[name][idx] = 1.0
            num = (loss(_perturbed(params, direction, eps)) - loss(_perturbed(params, direction, -eps))) / (2 * eps)
            assert grads[name][idx] == pytest.approx(num, rel=1e-5, abs=1e-8)
    assert d_tokens.shape == tokens.shape


def test_end_to_end_gradient_through_wavelet_filters():
    """Directional derivatives of the window objective, parameters and taps together."""
    rng = np.random.default_rng(4)
    tok = Tokenizer(window_len=16, patch_len=4, patch_stride=4, levels=2)
    boundaries = {(0, 0): [2], (1, 1): [7]}
    eps = 1e-6
    for trial in range(100):
        params = PredictorParams.init(4, 2, 3, seed=trial)
        filters = FilterPair(rng.normal(0, 0.5, (2, 2)), rng.normal(0, 0.5, (2, 2)))
        window = rng.normal(size=(2, 2, 16))
        target = rng.normal(size=2)
        loss, grads, (gh, gg) = window_objective(window, target, params, filters, tok, (0.5, 0.5), boundaries)

        direction = {n: rng.normal(size=a.shape) for n, a in params.arrays.items()}
        vh, vg = rng.normal(size=filters.h.shape), rng.normal(size=filters.g.shape)

        def at(step):
            f = FilterPair(filters.h + step * vh, filters.g + step * vg)
            return window_objective(window, target, _perturbed(params, direction, step), f, tok,
                                    (0.5, 0.5), boundaries, filter_grads=False)[0]

        numeric = (at(eps) - at(-eps)) / (2 * eps)
        analytic = sum(np.sum(grads[n] * direction[n]) for n in grads) + np.sum(gh * vh) + np.sum(gg * vg)
        assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric)) + 1e-8


def test_run_window_earlier_scores_ignore_the_last_point():
    rng = np.random.default_rng(5)
    tok = Tokenizer(window_len=16, patch_len=4, patch_stride=4, levels=1)
    params = PredictorParams.init(4, 1, 4, seed=0)
    filters = init_filters("haar", n_channels=2)
    window = rng.normal(size=(3, 2, 16))
    passes = run_window(window, params, filters, tok)
    assert len(passes) == 3 and len(passes[0]) == 2
    assert passes[0][0].positions == [0, 4, 8, 12]
    changed = window.copy()
    changed[:, :, -1] += 1.0
    passes2 = run_window(changed, params, filters, tok)
    np.testing.assert_array_equal(passes[2][1].scores[:-1], passes2[2][1].scores[:-1])


def test_run_window_rejects_wrong_length():
    tok = Tokenizer(window_len=16, patch_len=4, patch_stride=4, levels=1)
    params = PredictorParams.init(4, 1, 4, seed=0)
    with pytest.raises(ArgumentError):
        run_window(np.zeros((1, 1, 12)), params, init_filters("haar"), tok)


def test_predict_panel_scores_matches_single_windows():
    rng = np.random.default_rng(6)
    tok = Tokenizer(window_len=12, patch_len=4, patch_stride=2, levels=1)
    params = PredictorParams.init(4, 1, 4, seed=2)
    filters = init_filters("haar")
    values = rng.normal(size=(3, 1, 20))
    scores = predict_panel_scores(values, [11, 15, 19], params, filters, tok)
    assert scores.shape == (3, 3)
    np.testing.assert_allclose(scores[1], predict_scores(values[:, :, 4:16], params, filters, tok))
    with pytest.raises(ArgumentError):
        predict_panel_scores(values, [10], params, filters, tok)


def test_predict_scores_with_library_uses_segment_positions():
    rng = np.random.default_rng(7)
    tok = Tokenizer(window_len=16, patch_len=4, patch_stride=4, levels=1)
    params = PredictorParams.init(4, 1, 4, seed=3)
    library = PatternLibrary(centroids=[zscore_segment(rng.normal(size=5))], l_min=5, l_max=5)
    window = rng.normal(size=(2, 1, 16))
    with_lib = predict_scores(window, params, init_filters("haar"), tok, library)
    assert with_lib.shape == (2,)
    assert np.isfinite(with_lib).all()


def test_tokenizer_validation():
    with pytest.raises(ArgumentError):
        Tokenizer(window_len=8, patch_len=16)
    with pytest.raises(ArgumentError):
        Tokenizer(window_len=32, patch_len=8, patch_stride=9)
    tok = Tokenizer(window_len=16, patch_len=4, patch_stride=4, levels=3)
    with pytest.raises(ArgumentError) as info:
        tok.check_filters(init_filters("db4"))
    assert "maximum feasible is 2" in str(info.value)
    assert Tokenizer.from_dict(tok.to_dict()) == tok


def test_params_round_trip_and_reject_non_finite():
    params = PredictorParams.init(4, 2, 3, seed=9)
    again = PredictorParams.from_dict(params.to_dict())
    for name, arr in params.arrays.items():
        np.testing.assert_array_equal(arr, again.arrays[name])
    bad = params.to_dict()
    bad["arrays"]["Wq"][0][0] = float("nan")
    with pytest.raises(NumericError):
        PredictorParams.from_dict(bad)


def test_predict_panel_scores_with_library_ignores_later_days():
    rng = np.random.default_rng(8)
    tok = Tokenizer(window_len=12, patch_len=4, patch_stride=2, levels=1)
    params = PredictorParams.init(4, 1, 4, seed=4)
    filters = init_filters("haar")
    library = PatternLibrary(centroids=[zscore_segment(rng.normal(size=5))], l_min=5, l_max=5)
    values = rng.normal(size=(3, 1, 24))
    days = [11, 15]
    before = predict_panel_scores(values, days, params, filters, tok, library)

    shifted = values.copy()
    shifted[:, :, 16:] = 10.0 * rng.normal(size=(3, 1, 8))
    after = predict_panel_scores(shifted, days, params, filters, tok, library)
    np.testing.assert_array_equal(before, after)
    np.testing.assert_allclose(before[1], predict_scores(values[:, :, 4:16], params, filters, tok, library))
