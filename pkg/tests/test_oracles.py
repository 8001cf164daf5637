import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from roblearn import (
    Dataset,
    EllipsoidConfig,
    FiniteOffsets,
    FinitePerExample,
    Hyperplane,
    LinearModel,
    LpBall,
    NotSeparable,
    OracleViolation,
    Polytope,
    Sample,
    attack,
    bound_separation,
    default_ellipsoid_config,
    ellipsoid_certify,
    ellipsoid_feasible,
    lp_norm,
    margin,
    rerm_ellipsoid,
    separation_oracle,
)
from roblearn.oracles import INSIDE

from ._refs import ball_samples, brute_margin_certified


def vec(*vals):
    return np.array(vals, dtype=float)


# ---------------------------------------------------------------------------
# attack oracle
# ---------------------------------------------------------------------------


@given(
    st.integers(0, 5_000),
    st.sampled_from([1.0, 2.0, math.inf]),
    st.floats(0.05, 1.5),
)
def test_attack_ball_matches_robustness(seed, p, gamma):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(3)
    if not np.any(w):
        w = np.ones(3)
    model = LinearModel(w, bias=float(rng.standard_normal()) * 0.3)
    s = Sample(rng.standard_normal(3), 1 if rng.random() < 0.5 else -1)
    ball = LpBall(p, gamma)
    z = attack(model, s, ball)
    if s.y * margin(model, s.x, p) > gamma:
        assert z is None
    else:
        assert z is not None
        assert lp_norm(z - s.x, p) <= gamma * (1 + 1e-9)
        # witness decision value is against (or exactly on) the label
        assert s.y * model.decision(z) <= 1e-9


def test_attack_finite_offsets_returns_first_bad_point():
    model = LinearModel(vec(1.0, 0.0))
    spec = FiniteOffsets([vec(0.0, 0.0), vec(-3.0, 0.0), vec(-5.0, 0.0)])
    z = attack(model, Sample(vec(1.0, 0.0), 1), spec)
    assert np.allclose(z, [-2.0, 0.0])
    assert attack(model, Sample(vec(10.0, 0.0), 1), spec) is None


def test_attack_per_example_table_needs_index():
    model = LinearModel(vec(1.0))
    table = FinitePerExample({0: np.array([[2.0]]), 1: np.array([[-2.0]])})
    assert attack(model, Sample(vec(1.0), 1), table, index=0) is None
    z = attack(model, Sample(vec(1.0), 1), table, index=1)
    assert np.allclose(z, [-2.0])


# ---------------------------------------------------------------------------
# separation oracles
# ---------------------------------------------------------------------------


@given(
    st.integers(0, 5_000),
    st.sampled_from([1.0, 2.0, math.inf]),
)
def test_ball_separation_cuts_query_not_region(seed, p):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(3)
    gamma = 0.5
    ball = LpBall(p, gamma)
    z = x + rng.standard_normal(3) * 1.5
    ans = separation_oracle(ball, x, z)
    if lp_norm(z - x, p) <= gamma:
        assert ans is INSIDE
    else:
        assert isinstance(ans, Hyperplane)
        assert float(ans.normal @ z) > ans.offset - 1e-12
        inside_pts = ball_samples(x, p, gamma, 200, rng)
        assert np.all(inside_pts @ ans.normal <= ans.offset + 1e-9)


def test_polytope_separation_matches_box():
    box = Polytope(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]), np.full(4, 0.5))
    x = vec(1.0, 1.0)
    assert separation_oracle(box, x, vec(1.4, 0.8)) is INSIDE
    ans = separation_oracle(box, x, vec(1.7, 1.0))
    assert isinstance(ans, Hyperplane)
    assert float(ans.normal @ vec(1.7, 1.0)) > ans.offset


def test_hyperplane_rejects_zero_normal():
    with pytest.raises(ValueError):
        Hyperplane(vec(0.0, 0.0), 1.0)


def test_polytope_validates_shapes():
    with pytest.raises(ValueError):
        Polytope(np.zeros((2, 2)), np.zeros(3))


# ---------------------------------------------------------------------------
# ellipsoid feasibility search
# ---------------------------------------------------------------------------


def test_feasible_point_found_in_shifted_ball():
    cfg = EllipsoidConfig()
    target = LpBall(2.0, 0.2)
    center = vec(3.0, 4.0)
    z = ellipsoid_feasible(bound_separation(target, center), 2, cfg, center=vec(0.0, 0.0))
    assert z is not None
    assert np.linalg.norm(z - center) <= 0.2 + 1e-9


def test_feasible_one_dimensional_interval():
    cfg = EllipsoidConfig()
    strip = Polytope(np.array([[1.0], [-1.0]]), np.array([0.4, -0.3]))
    z = ellipsoid_feasible(bound_separation(strip, vec(0.0)), 1, cfg)
    assert z is not None and 0.3 <= z[0] <= 0.4


def test_feasible_returns_none_on_empty_region():
    cfg = EllipsoidConfig()
    empty = Polytope(np.array([[1.0], [-1.0]]), np.array([0.3, -0.4]))  # z <= .3 and z >= .4
    assert ellipsoid_feasible(bound_separation(empty, vec(0.0)), 1, cfg) is None
    empty2 = Polytope(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([0.3, -0.4]))
    assert ellipsoid_feasible(bound_separation(empty2, vec(0.0, 0.0)), 2, cfg) is None


def test_bogus_oracle_cut_is_detected():
    cfg = EllipsoidConfig()

    def lying(z):
        # claims the center is cut by a hyperplane that does not contain it
        return Hyperplane(vec(1.0, 0.0), float(z[0]) + 1.0)

    with pytest.raises(OracleViolation):
        ellipsoid_feasible(lying, 2, cfg)


def test_config_validation_and_defaults():
    with pytest.raises(ValueError):
        EllipsoidConfig(max_iters=0)
    with pytest.raises(ValueError):
        EllipsoidConfig(init_radius=-1.0)
    assert default_ellipsoid_config(1.0).feas_slack == pytest.approx(0.1)
    assert default_ellipsoid_config(0.0).feas_slack == pytest.approx(1e-3)


# ---------------------------------------------------------------------------
# certification: ellipsoid search against the closed-form margin route
# ---------------------------------------------------------------------------


@given(st.integers(0, 3_000), st.sampled_from([2.0, math.inf]))
def test_certify_agrees_with_margin_route_when_clear(seed, p):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(2)
    if np.linalg.norm(w) < 0.3:
        w = vec(1.0, 0.5)
    model = LinearModel(w, bias=float(rng.standard_normal()) * 0.2)
    x = rng.standard_normal(2)
    y = 1 if rng.random() < 0.5 else -1
    gamma = 0.4
    # skip the thin band where finite volume tolerance may legitimately differ
    worst = y * model.decision(x) - gamma * lp_norm(w, 1.0 if math.isinf(p) else 2.0)
    if abs(worst) < 0.05:
        return
    cfg = EllipsoidConfig(feas_slack=1e-9, volume_eps=1e-8)
    hit = ellipsoid_certify(model, Sample(x, y), bound_separation(LpBall(p, gamma), x), cfg)
    certified = brute_margin_certified(w, model.bias, x, y, p, gamma)
    if certified:
        assert hit is None
    else:
        assert hit is not None
        assert lp_norm(hit - x, p) <= gamma + 1e-6
        assert y * model.decision(hit) <= 1e-9


def test_rerm_finds_robust_separator_in_two_dimensions():
    data = Dataset(np.array([[2.0, 0.1], [1.5, -0.5], [-2.0, 0.3], [-1.7, 0.6]]),
                   np.array([1, 1, -1, -1]))
    gamma = 0.3
    for ball in (LpBall(2.0, gamma), LpBall(math.inf, gamma)):
        cfg = default_ellipsoid_config(gamma)
        model = rerm_ellipsoid(data, lambda i: bound_separation(ball, data.X[i]), cfg)
        for i in range(data.n):
            assert brute_margin_certified(model.w, model.bias, data.X[i], int(data.y[i]),
                                          ball.p, gamma)


def test_rerm_raises_when_labels_collide():
    data = Dataset(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1, -1]))
    ball = LpBall(2.0, 0.1)
    cfg = EllipsoidConfig(max_iters=2000)
    with pytest.raises(NotSeparable):
        rerm_ellipsoid(data, lambda i: bound_separation(ball, data.X[i]), cfg)
