import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from roblearn import (
    Dataset,
    FiniteOffsets,
    FinitePerExample,
    InvalidNorm,
    LinearModel,
    LpBall,
    Sample,
    SizeLimit,
    dual_exponent,
    dual_maximizer,
    dual_norm,
    inflate,
    inverse_blowup,
    lp_norm,
    margin,
    margins_batch,
    robust_loss,
    robust_risk,
    worst_case_point,
)

from ._refs import brute_ball_loss, brute_finite_loss, norm_ref, dual_exponent_ref


def vec(*vals):
    return np.array(vals, dtype=float)


# ---------------------------------------------------------------------------
# norms and duality
# ---------------------------------------------------------------------------


def test_dual_exponent_pairs():
    assert dual_exponent(1.0) == math.inf
    assert dual_exponent(math.inf) == 1.0
    assert dual_exponent(2.0) == 2.0
    assert dual_exponent(3.0) == pytest.approx(1.5)


def test_dual_exponent_rejects_bad_p():
    with pytest.raises(InvalidNorm):
        dual_exponent(0.5)


@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6),
    st.sampled_from([1.0, 2.0, math.inf]),
)
def test_lp_norm_matches_reference(vals, p):
    v = np.array(vals)
    assert lp_norm(v, p) == pytest.approx(norm_ref(v, p), abs=1e-12)


@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6),
    st.sampled_from([1.0, 2.0, math.inf]),
)
def test_dual_maximizer_attains_dual_norm(vals, p):
    w = np.array(vals)
    if not np.any(w):
        w[0] = 1.0
    v = dual_maximizer(w, p)
    assert lp_norm(v, p) <= 1.0 + 1e-12
    assert float(w @ v) == pytest.approx(norm_ref(w, dual_exponent_ref(p)), abs=1e-9)


def test_dual_maximizer_tie_breaks():
    # two coordinates tied in magnitude: lowest index wins under the 1-norm
    v = dual_maximizer(vec(3.0, -3.0), 1.0)
    assert np.array_equal(v, vec(1.0, 0.0))
    # zero coordinates map to +1 under the sup norm
    v = dual_maximizer(vec(0.0, -2.0), math.inf)
    assert np.array_equal(v, vec(1.0, -1.0))


def test_dual_norm_is_norm_of_dual_exponent():
    w = vec(1.0, -2.0, 3.0)
    for p in (1.0, 2.0, math.inf):
        assert dual_norm(w, p) == pytest.approx(norm_ref(w, dual_exponent_ref(p)))


# ---------------------------------------------------------------------------
# core containers
# ---------------------------------------------------------------------------


def test_sample_validates_label():
    with pytest.raises(ValueError):
        Sample(vec(1.0), 0)


def test_dataset_shapes_and_subset():
    data = Dataset(np.arange(6, dtype=float).reshape(3, 2), np.array([1, -1, 1]))
    assert data.n == 3 and data.d == 2
    sub = data.subset([2, 0])
    assert np.array_equal(sub.X, np.array([[4.0, 5.0], [0.0, 1.0]]))
    assert np.array_equal(sub.y, np.array([1, 1]))
    s = data.sample(1)
    assert np.array_equal(s.x, vec(2.0, 3.0)) and s.y == -1


def test_dataset_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([1]))


def test_linear_model_boundary_is_positive():
    m = LinearModel(vec(1.0, 0.0))
    assert m.predict(vec(0.0, 5.0)) == 1
    assert np.array_equal(m.predict_batch(np.array([[0.0, 1.0], [-1.0, 0.0]])), [1, -1])


# ---------------------------------------------------------------------------
# margins and worst-case points
# ---------------------------------------------------------------------------


def test_margin_is_distance_scaled_decision():
    m = LinearModel(vec(3.0, 4.0), bias=5.0)
    x = vec(1.0, 1.0)
    assert margin(m, x, 2.0) == pytest.approx((3 + 4 + 5) / 5.0)
    assert margin(m, x, math.inf) == pytest.approx(12 / 7.0)
    assert margin(m, x, 1.0) == pytest.approx(12 / 4.0)


def test_margins_batch_matches_scalar():
    m = LinearModel(vec(1.0, -2.0), bias=0.5)
    X = np.array([[0.0, 0.0], [1.0, 1.0], [-2.0, 3.0]])
    got = margins_batch(m, X, 2.0)
    want = [margin(m, X[i], 2.0) for i in range(3)]
    assert np.allclose(got, want)


@given(
    st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=4),
    st.sampled_from([1.0, 2.0, math.inf]),
    st.floats(0.05, 2.0),
    st.sampled_from([1, -1]),
)
def test_worst_case_point_stays_in_ball_and_minimizes(wvals, p, gamma, y):
    w = np.array(wvals)
    if not np.any(w):
        w[0] = 1.0
    model = LinearModel(w)
    x = np.linspace(-1, 1, w.size)
    ball = LpBall(p, gamma)
    z = worst_case_point(model, x, y, ball)
    assert lp_norm(z - x, p) <= gamma * (1 + 1e-9)
    # no ball point does worse than the analytic one
    assert y * float(w @ z) == pytest.approx(
        y * float(w @ x) - gamma * norm_ref(w, dual_exponent_ref(p)), abs=1e-9
    )


# ---------------------------------------------------------------------------
# robust loss: closed form against brute force
# ---------------------------------------------------------------------------


def test_robust_loss_boundary_counts_as_loss():
    m = LinearModel(vec(1.0, 0.0))
    ball = LpBall(2.0, 1.0)
    assert robust_loss(m, Sample(vec(1.0, 0.0), 1), ball) == 1  # margin == gamma
    assert robust_loss(m, Sample(vec(1.0 + 1e-9, 0.0), 1), ball) == 0


def test_robust_loss_zero_radius_is_plain_error():
    m = LinearModel(vec(1.0, -1.0))
    ball = LpBall(2.0, 0.0)
    assert robust_loss(m, Sample(vec(1.0, 0.0), 1), ball) == 0
    assert robust_loss(m, Sample(vec(0.0, 1.0), 1), ball) == 1  # misclassified as is
    assert robust_loss(m, Sample(vec(0.0, 0.0), -1), ball) == 1  # boundary tie goes to +1


@given(
    st.integers(0, 10_000),
    st.sampled_from([1.0, 2.0, math.inf]),
    st.integers(1, 5),
    st.floats(0.05, 2.0),
)
def test_robust_loss_matches_brute_force(seed, p, d, gamma):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(d)
    if not np.any(w):
        w = np.ones(d)
    bias = float(rng.standard_normal()) * 0.5
    x = rng.standard_normal(d)
    y = 1 if rng.random() < 0.5 else -1
    model = LinearModel(w, bias=bias)
    got = robust_loss(model, Sample(x, y), LpBall(p, gamma))
    # the analytic witness makes the sampled check exact for linear models
    want = brute_ball_loss(w, bias, x, y, p, gamma, 512, rng)
    assert got == want


@given(st.integers(0, 5_000), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_robust_loss_monotone_in_radius(seed, g_small, g_extra):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(3)
    if not np.any(w):
        w = np.ones(3)
    model = LinearModel(w, bias=float(rng.standard_normal()) * 0.3)
    s = Sample(rng.standard_normal(3), 1 if rng.random() < 0.5 else -1)
    small = robust_loss(model, s, LpBall(2.0, g_small))
    big = robust_loss(model, s, LpBall(2.0, g_small + g_extra))
    assert small <= big


def test_robust_loss_finite_offsets_enumerates():
    m = LinearModel(vec(1.0, 0.0))
    spec = FiniteOffsets([vec(0.0, 0.0), vec(-2.0, 0.0)])
    s = Sample(vec(1.0, 0.0), 1)
    assert robust_loss(m, s, spec) == 1  # the shifted copy lands at (-1, 0)
    pts = spec.points(s.x)
    assert brute_finite_loss(m.predict, pts, s.y) == 1


def test_robust_loss_per_example_table_uses_index():
    m = LinearModel(vec(1.0, 0.0))
    table = FinitePerExample({0: np.array([[1.0, 0.0]]), 1: np.array([[-1.0, 0.0]])})
    assert robust_loss(m, Sample(vec(1.0, 0.0), 1), table, index=0) == 0
    assert robust_loss(m, Sample(vec(1.0, 0.0), 1), table, index=1) == 1


def test_robust_risk_averages():
    m = LinearModel(vec(1.0, 0.0))
    data = Dataset(np.array([[2.0, 0.0], [0.5, 0.0], [-2.0, 0.0]]), np.array([1, 1, -1]))
    assert robust_risk(m, data, LpBall(2.0, 1.0)) == pytest.approx(1.0 / 3.0)


# ---------------------------------------------------------------------------
# inverse blowup and inflation
# ---------------------------------------------------------------------------


def test_inverse_blowup_doubles_ball_radius():
    ball = LpBall(2.0, 0.7)
    doubled = inverse_blowup(ball)
    assert isinstance(doubled, LpBall)
    assert doubled.p == 2.0 and doubled.gamma == pytest.approx(1.4)
    # applying it twice quadruples the radius
    assert inverse_blowup(doubled).gamma == pytest.approx(2.8)


def test_inverse_blowup_offsets_are_differences():
    spec = FiniteOffsets([vec(0.0), vec(1.0)])
    doubled = inverse_blowup(spec)
    got = sorted(float(o[0]) for o in doubled.offsets)
    assert got == [-1.0, 0.0, 1.0]


def test_inverse_blowup_offsets_dedupes():
    spec = FiniteOffsets([vec(0.0), vec(1.0), vec(-1.0)])
    doubled = inverse_blowup(spec)
    got = sorted(float(o[0]) for o in doubled.offsets)
    assert got == [-2.0, -1.0, 0.0, 1.0, 2.0]


def test_inflate_enumerates_and_tracks_origins():
    data = Dataset(np.array([[0.0, 0.0], [10.0, 0.0]]), np.array([1, -1]))
    spec = FiniteOffsets([vec(0.0, 0.0), vec(1.0, 0.0)])
    out = inflate(data, spec)
    assert out.data.n == 4
    assert np.array_equal(out.origins, np.array([0, 0, 1, 1]))
    assert np.array_equal(out.data.y, np.array([1, 1, -1, -1]))
    assert np.allclose(out.data.X[1], [1.0, 0.0])


def test_inflate_per_example_table_keys_by_row():
    data = Dataset(np.array([[0.0], [1.0]]), np.array([1, -1]))
    spec = FinitePerExample({0: np.array([[5.0]]), 1: np.array([[6.0], [7.0]])})
    out = inflate(data, spec)
    assert out.data.n == 3
    assert np.allclose(out.data.X.ravel(), [5.0, 6.0, 7.0])
    assert np.array_equal(out.origins, np.array([0, 1, 1]))


def test_inflate_rejects_balls_and_caps_size():
    from roblearn import Unsupported

    data = Dataset(np.zeros((2, 1)), np.array([1, 1]))
    with pytest.raises(Unsupported):
        inflate(data, LpBall(2.0, 0.1))
    big = FiniteOffsets(np.zeros((600, 1)) + np.arange(600)[:, None])
    with pytest.raises(SizeLimit):
        inflate(data, big, cap=1000)
