import math

import numpy as np
import pytest

from roblearn import (
    ABSTAIN,
    ConstantModel,
    Dataset,
    DistinguisherT1,
    EmptyPool,
    FiniteOffsets,
    FinitePoolPairs,
    GaussianPair,
    GenSpec,
    IoError,
    LinearModel,
    LpBall,
    NoRealizableMember,
    ParseError,
    PoolHypotheses,
    RedactConfig,
    SelectionSet,
    Unsupported,
    apply_rcn,
    generate,
    lambda_star,
    load_selection,
    make_pool_erm,
    massart_denoise_rejectron,
    rejectron,
    save_selection,
    select_member,
    selective_classify,
    transductive_pool,
    urejectron,
)


def vec(*vals):
    return np.array(vals, dtype=float)


AXIS = LinearModel(vec(1.0, 0.0))
# matches AXIS wherever x2 = 0 but flips on the upper cluster
FLIP_UP = LinearModel(vec(1.0, -1.0))


def band_train(n_side: int = 10) -> Dataset:
    xs = np.linspace(1.2, 2.0, n_side)
    X = np.concatenate([np.column_stack([xs, np.zeros(n_side)]),
                        np.column_stack([-xs, np.zeros(n_side)])])
    y = np.concatenate([np.ones(n_side), -np.ones(n_side)]).astype(np.int64)
    return Dataset(X, y)


def mixed_tests(n_side: int = 10) -> np.ndarray:
    indist = band_train(n_side).X
    drift = np.column_stack([np.zeros(n_side * 2) + 0.3, np.full(n_side * 2, 3.0)])
    return np.concatenate([indist, drift])


def test_constant_model_contract():
    c = ConstantModel(-1)
    assert c.predict(vec(9.0)) == -1
    assert np.array_equal(c.predict_batch([[1.0], [2.0]]), [-1, -1])
    with pytest.raises(ValueError):
        ConstantModel(0)


def test_redact_config_validation():
    assert RedactConfig(0.2).resolved_weight(10) == 11.0
    assert RedactConfig(0.2, weight=3.0).resolved_weight(10) == 3.0
    with pytest.raises(ValueError):
        RedactConfig(0.0)
    with pytest.raises(ValueError):
        RedactConfig(0.2, weight=0.5)


def test_selection_set_modes():
    S = SelectionSet("rejectron", [FLIP_UP], base=AXIS)
    assert S.contains(vec(1.5, 0.0))
    assert not select_member(S, vec(0.3, 3.0))
    assert selective_classify(AXIS, S, vec(1.5, 0.0)) == 1
    assert selective_classify(AXIS, S, vec(0.3, 3.0)) is ABSTAIN
    with pytest.raises(ValueError):
        SelectionSet("other", [])
    with pytest.raises(ValueError):
        SelectionSet("rejectron", [])


def test_rejectron_redacts_the_drifted_cluster():
    train = band_train()
    tests = mixed_tests()
    erm = make_pool_erm([AXIS, FLIP_UP])
    diag = {}
    h, S = rejectron(train, tests, RedactConfig(0.2), erm=erm, diagnostics=diag)
    assert diag["rounds"] == 1
    assert diag["rounds"] <= math.floor(1.0 / 0.2)
    assert diag["selected_test_fraction"] == 0.5
    # the high training weight protects every training point from redaction
    assert all(select_member(S, x) for x in train.X)
    for x, y in zip(train.X, train.y):
        assert selective_classify(h, S, x) == y
    for x in tests[20:]:
        assert selective_classify(h, S, x) is ABSTAIN


def test_rejectron_keeps_everything_without_drift():
    train = band_train()
    diag = {}
    h, S = rejectron(train, train.X.copy(), RedactConfig(0.25),
                     erm=make_pool_erm([AXIS, FLIP_UP]), diagnostics=diag)
    assert diag["rounds"] == 0
    assert diag["selected_test_fraction"] == 1.0
    assert S.members == ()


def test_rejectron_handles_empty_test_sets():
    diag = {}
    h, S = rejectron(band_train(), np.empty(0), RedactConfig(0.5),
                     erm=make_pool_erm([AXIS]), diagnostics=diag)
    assert diag["selected_test_fraction"] == 1.0


def test_rejectron_redacts_a_repeated_adversarial_point():
    # half the test stream is one crafted point the base model gets wrong;
    # redaction must reject it rather than eat the error
    train = band_train()
    adv = vec(1.5, 3.0)  # base says +1, truth is -1
    tests = np.concatenate([band_train().X, np.tile(adv, (20, 1))])
    truth = np.concatenate([band_train().y, -np.ones(20)]).astype(np.int64)
    h, S = rejectron(train, tests, RedactConfig(0.2),
                     erm=make_pool_erm([AXIS, FLIP_UP]))
    preds = [selective_classify(h, S, x) for x in tests]
    errs = sum(p is not ABSTAIN and p != t for p, t in zip(preds, truth))
    assert errs / len(tests) <= 0.2
    assert selective_classify(h, S, adv) is ABSTAIN


def test_urejectron_pool_pairs_split_only_on_drift():
    tests = mixed_tests()
    diag = {}
    S = urejectron(band_train().X, tests, RedactConfig(0.2),
                   FinitePoolPairs([AXIS, FLIP_UP]), diagnostics=diag)
    assert diag["rounds"] == 1
    assert all(select_member(S, x) for x in band_train().X)
    assert not any(select_member(S, x) for x in tests[20:])
    with pytest.raises(EmptyPool):
        FinitePoolPairs([])


def test_urejectron_t1_threshold_tradeoff():
    rng_train = generate(GenSpec(GaussianPair((vec(2.0, 0.0), vec(-2.0, 0.0)), 0.1), 40, rng_seed=5))
    indist = generate(GenSpec(GaussianPair((vec(2.0, 0.0), vec(-2.0, 0.0)), 0.1), 20, rng_seed=6))
    drift = np.tile(vec(0.0, 6.0), (20, 1)) + 0.1 * np.random.default_rng(7).standard_normal((20, 2))
    tests = np.concatenate([indist.X, drift])
    diag = {}
    S = urejectron(rng_train.X, tests, RedactConfig(0.2), DistinguisherT1(), diagnostics=diag)
    rows = diag["tradeoff"]
    # sweeping the threshold upward only ever rejects more on both sides
    for a, b in zip(rows, rows[1:]):
        assert b["threshold"] >= a["threshold"]
        assert b["rej_train"] >= a["rej_train"]
        assert b["rej_test"] >= a["rej_test"]
    assert any(r["rej_train"] <= 0.10 and r["rej_test"] >= 0.45 for r in rows)
    # the returned set keeps every training point by construction
    assert all(select_member(S, x) for x in rng_train.X)
    kept_drift = sum(select_member(S, x) for x in drift)
    assert kept_drift == 0
    with pytest.raises(Unsupported):
        urejectron(rng_train.X, tests, RedactConfig(0.2), backend="nope")


def test_lambda_star_matches_its_formula():
    eps_star, lam = lambda_star(0.02, 100_000, 5, 0.05)
    want_eps = 4.0 * math.sqrt((5 * math.log(200_000) + math.log(48 / 0.05)) / 100_000)
    assert eps_star == pytest.approx(want_eps)
    assert lam == pytest.approx(math.sqrt(1.0 / (8 * 0.02 + want_eps ** 2)))
    with pytest.raises(ValueError):
        lambda_star(1.0, 100, 5, 0.05)
    with pytest.raises(ValueError):
        lambda_star(0.1, 0, 5, 0.05)


def test_massart_denoise_relabels_before_redacting():
    pair = GaussianPair((vec(2.0, 0.0), vec(-2.0, 0.0)), sigma=0.2)
    noisy = apply_rcn(generate(GenSpec(pair, 600, rng_seed=11)), eta=0.2, seed=12)
    heldout = generate(GenSpec(pair, 40, rng_seed=13))
    tests = generate(GenSpec(pair, 40, rng_seed=14))
    h, S = massart_denoise_rejectron(noisy, heldout, tests.X, RedactConfig(0.2))
    preds = [selective_classify(h, S, x) for x in tests.X]
    errs = sum(p is not ABSTAIN and p != t for p, t in zip(preds, tests.y))
    abstains = sum(p is ABSTAIN for p in preds)
    assert errs <= 2 and abstains <= 8


def test_transductive_pool_realizable_prefers_first_stable():
    train = band_train()
    pool = PoolHypotheses((AXIS, LinearModel(vec(2.0, 0.0))))
    ball = LpBall(2.0, 0.3)
    diag = {}
    h, labels = transductive_pool(pool, train, train.X, ball, diagnostics=diag)
    assert h is pool.models[0]
    assert np.array_equal(labels, train.y)
    assert diag["scores"][0] == {"labeled": 0.0, "unlabeled": 0.0}
    with pytest.raises(EmptyPool):
        PoolHypotheses(())


def test_transductive_pool_realizable_failure():
    train = band_train()
    wide = LpBall(2.0, 5.0)  # swallows every margin
    with pytest.raises(NoRealizableMember):
        transductive_pool(PoolHypotheses((AXIS,)), train, train.X, wide)
    with pytest.raises(ValueError):
        transductive_pool(PoolHypotheses((AXIS,)), train, train.X, wide, mode="other")


def test_transductive_pool_agnostic_minimizes_the_worse_risk():
    train = band_train()
    tests = np.concatenate([band_train().X, [[0.05, 0.0]]])  # one point hugs the boundary
    good = AXIS
    bad = LinearModel(vec(0.0, 1.0))  # unstable everywhere on the band
    h, _ = transductive_pool(PoolHypotheses((bad, good)), train, tests,
                             LpBall(2.0, 0.3), mode="agnostic")
    assert h is good


def test_transductive_pool_finite_offsets_risks():
    train = Dataset(np.array([[1.0], [-1.0]]), np.array([1, -1]))
    shifts = FiniteOffsets([vec(0.0), vec(1.5)])
    diag = {}
    h, _ = transductive_pool(PoolHypotheses((LinearModel(vec(1.0)),)), train,
                             np.array([[4.0], [0.5]]), shifts, mode="agnostic",
                             diagnostics=diag)
    # the -1 training point crosses the origin under the 1.5 shift, and the
    # 0.5 test point splits its preimage predictions
    assert diag["scores"][0] == {"labeled": 0.5, "unlabeled": 0.5}
    with pytest.raises(Unsupported):
        transductive_pool(PoolHypotheses((h,)), train, train.X, object(), mode="agnostic")


def test_selection_round_trip(tmp_path):
    S = SelectionSet("rejectron", [FLIP_UP, LinearModel(vec(0.25, -1.0), bias=0.5)],
                     base=AXIS, eps=0.2)
    path = str(tmp_path / "sel.txt")
    save_selection(path, S)
    back = load_selection(path)
    assert back.mode == "rejectron" and back.eps == 0.2
    assert np.array_equal(back.base.w, AXIS.w)
    assert len(back.members) == 2
    assert back.members[1].bias == 0.5

    pairs = SelectionSet("urejectron", [(AXIS, ConstantModel(1))], eps=0.5)
    save_selection(path, pairs)
    back = load_selection(path)
    assert back.mode == "urejectron"
    assert isinstance(back.members[0][1], ConstantModel)
    x = vec(1.0, 0.0)
    assert select_member(back, x) == select_member(pairs, x)


def test_selection_load_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("not a selection file\n")
    with pytest.raises(ParseError):
        load_selection(str(p))
    p.write_text("selection-set v1\nmode: rejectron\nbase: linear 0 1 0\nwhat: ever\n")
    with pytest.raises(ParseError):
        load_selection(str(p))
    with pytest.raises(IoError):
        load_selection(str(tmp_path / "missing.txt"))
    with pytest.raises(IoError):
        save_selection(str(tmp_path / "nodir" / "x.txt"),
                       SelectionSet("urejectron", []))