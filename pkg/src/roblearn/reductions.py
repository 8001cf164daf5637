"""Robust learning through non-robust oracles and online attack oracles.

The finite-perturbation reductions work by inflating the training set and
boosting a plain PAC learner over it. The online algorithms instead drive a
conservative mistake-bounded learner (or a fixed hypothesis pool) with a
perfect attack oracle, feeding counterexamples back as updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Dataset,
    FiniteOffsets,
    FinitePerExample,
    LinearModel,
    LpBall,
    Sample,
    as_vector,
    inflate,
    robust_loss,
)
from .boosting import (
    AlphaBoostConfig,
    MajorityVote,
    WeightedDataset,
    _zero_loss,
    alpha_boost,
    sparsify_majority,
)
from .data import substream
from .errors import (
    EmptyPool,
    MistakeCapExceeded,
    SourceExhausted,
    StreamExhausted,
    Unsupported,
    WeakLearnerFailed,
)
from .learners import perceptron_model
from .oracles import attack


# ---------------------------------------------------------------------------
# attack-oracle adapters
# ---------------------------------------------------------------------------


def enumeration_attack(U):
    """Attack oracle over a finite perturbation list; works for any predictor
    exposing predict(). Returns a callable (predictor, sample, index) -> z|None."""
    if not isinstance(U, (FiniteOffsets, FinitePerExample)):
        raise Unsupported("enumeration needs a finite perturbation set")

    def oracle(predictor, sample: Sample, index: int | None = None):
        pts = U.points(sample.x) if isinstance(U, FiniteOffsets) else U.points(index)
        for j in range(pts.shape[0]):
            if predictor.predict(pts[j]) != sample.y:
                return pts[j].copy()
        return None

    return oracle


def margin_attack(U: LpBall):
    """Attack oracle for perceptron-style states with a weight vector; the
    all-zero state predicts +1 everywhere, so only negative samples witness."""

    def oracle(state, sample: Sample, index: int | None = None):
        w = np.asarray(state.w, dtype=float)
        if not np.any(w):
            return sample.x.copy() if sample.y == -1 else None
        return attack(LinearModel(w), sample, U)

    return oracle


# ---------------------------------------------------------------------------
# robustify-the-non-robust (finite perturbation sets, realizable)
# ---------------------------------------------------------------------------


@dataclass
class RobustifyConfig:
    outer_rounds: int | None = None  # None means ceil(1 + 48 ln |S_U|)
    inner_rounds: int | None = None  # None means ceil(1 + 48 ln |L_U|)
    subsample: int = 32
    sparsify_N: int = 25
    alpha: float = 0.125
    delta: float = 0.05
    retry_limit: int = 100
    rng_seed: int = 0


def zero_robust_loss(L: Dataset, U, base_learner, cfg: RobustifyConfig | None = None, indices=None):
    """Boost the base learner on the inflated copy of L until the majority
    classifies every perturbation correctly, then sparsify the vote.

    indices carries the original example positions of L's rows, needed when U
    is a per-example table. Raises WeakLearnerFailed when boosting ends
    without reaching zero loss on the inflated set (non-realizable input).
    """
    cfg = cfg or RobustifyConfig()
    src = _reindexed(U, indices, L.n)
    inflated = inflate(L, src, cap=2_000_000)
    flat = inflated.data
    T = cfg.inner_rounds if cfg.inner_rounds is not None else math.ceil(1.0 + 48.0 * math.log(max(flat.n, 2)))
    boost_cfg = AlphaBoostConfig(
        alpha=cfg.alpha, rounds=T, delta=cfg.delta, early_stop=True, rng_seed=cfg.rng_seed
    )
    models, vote = alpha_boost(flat, base_learner, boost_cfg, U=None)
    if not _zero_loss(vote, flat, None):
        raise WeakLearnerFailed("boosting did not reach zero loss on the inflated set")
    sub = sparsify_majority(
        models, flat, N=cfg.sparsify_N, seed=cfg.rng_seed, U=None, retry_limit=cfg.retry_limit
    )
    return MajorityVote(sub)


def _reindexed(U, indices, n: int):
    # rows of a subsample keep their original per-example perturbation lists
    if not isinstance(U, FinitePerExample):
        return U
    if indices is None:
        raise ValueError("per-example tables need the rows' original indices")
    return FinitePerExample({j: U.points(int(indices[j])) for j in range(n)})


def robustify_nonrobust(data: Dataset, U, base_learner, cfg: RobustifyConfig | None = None, diagnostics=None):
    """Outer boosting over the inflated training set where each round's weak
    hypothesis is built by zero_robust_loss on a subsample projected back to
    its origin examples. The final vote is sparsified until its robust loss
    on the original data is exactly zero.
    """
    cfg = cfg or RobustifyConfig()
    if not isinstance(U, (FiniteOffsets, FinitePerExample)):
        raise Unsupported("robustification needs a finite perturbation set")
    inflated = inflate(data, U, cap=2_000_000)
    flat, origins = inflated.data, inflated.origins
    m_u = flat.n
    T = cfg.outer_rounds if cfg.outer_rounds is not None else math.ceil(1.0 + 48.0 * math.log(max(m_u, 2)))
    retries = max(1, math.ceil(math.log(2.0 * T / cfg.delta)))
    rng = substream(cfg.rng_seed, "robustify")
    D = np.full(m_u, 1.0 / m_u)
    models, round_errors = [], []
    for t in range(T):
        accepted = None
        for _ in range(retries):
            pick = rng.choice(m_u, size=min(cfg.subsample, m_u), replace=True, p=D)
            origin_rows = origins[pick]
            L_t = data.subset(origin_rows)
            inner_cfg = RobustifyConfig(
                inner_rounds=cfg.inner_rounds,
                subsample=cfg.subsample,
                sparsify_N=cfg.sparsify_N,
                alpha=cfg.alpha,
                delta=cfg.delta,
                retry_limit=cfg.retry_limit,
                rng_seed=cfg.rng_seed + t + 1,
            )
            try:
                h_t = zero_robust_loss(L_t, U, base_learner, inner_cfg, indices=origin_rows)
            except WeakLearnerFailed:
                continue
            wrong = (h_t.predict_batch(flat.X) != flat.y).astype(float)
            err = float(D @ wrong)
            if err <= 1.0 / 3.0:
                accepted = (h_t, wrong, err)
                break
        if accepted is None:
            raise WeakLearnerFailed(
                f"no round-{t + 1} hypothesis reached weighted error 1/3 in {retries} tries"
            )
        h_t, wrong, err = accepted
        models.append(h_t)
        round_errors.append(err)
        D = D * np.where(wrong == 0.0, math.exp(-2.0 * cfg.alpha), 1.0)
        D = D / D.sum()
        if _zero_loss(MajorityVote(models), flat, None):
            break
    vote = MajorityVote(models)
    if not _zero_loss(vote, flat, None):
        raise WeakLearnerFailed("outer boosting did not reach zero robust loss")
    sub = sparsify_majority(
        models, data, N=cfg.sparsify_N, seed=cfg.rng_seed, U=U, retry_limit=cfg.retry_limit
    )
    if diagnostics is not None:
        diagnostics["rounds_run"] = len(models)
        diagnostics["round_errors"] = round_errors
        diagnostics["inflated_size"] = m_u
    return MajorityVote(sub)


# ---------------------------------------------------------------------------
# agnostic finite-perturbation reduction (per-perturbation weights)
# ---------------------------------------------------------------------------


class PerExampleWeights:
    """One positive weight per (example, perturbation) pair, with a per-example
    normalized view. Updates only ever multiply by factors >= 1."""

    def __init__(self, counts):
        self.w = [np.ones(int(k), dtype=float) for k in counts]
        for k in counts:
            if k < 1:
                raise ValueError("every example needs at least one perturbation")

    def normalized(self) -> list:
        return [wi / wi.sum() for wi in self.w]

    def scale_up(self, i: int, mask: np.ndarray, factor: float) -> None:
        if factor < 1.0:
            raise ValueError("weights must be non-decreasing")
        self.w[i] = self.w[i] * np.where(mask, factor, 1.0)


def _perturbation_lists(data: Dataset, U) -> list:
    if isinstance(U, FiniteOffsets):
        return [U.points(data.X[i]) for i in range(data.n)]
    if isinstance(U, FinitePerExample):
        return [U.points(i) for i in range(data.n)]
    raise Unsupported("this reduction needs a finite perturbation set")


def fms_agnostic(data: Dataset, U, erm, eta_mw: float | None = None, rounds: int | None = None,
                 eps: float = 0.2, diagnostics=None):
    """Multiplicative-weights game over perturbations: each round the ERM
    fits the current per-perturbation distribution, then every perturbation
    the round's model got wrong is up-weighted by (1 + eta). Returns the
    majority vote of the round models.
    """
    lists = _perturbation_lists(data, U)
    k_max = max(pts.shape[0] for pts in lists)
    T = rounds if rounds is not None else math.ceil(32.0 * math.log(max(k_max, 2)) / eps ** 2)
    eta = eta_mw if eta_mw is not None else math.sqrt(math.log(max(k_max, 2)) / T)
    weights = PerExampleWeights([pts.shape[0] for pts in lists])
    flat_X = np.concatenate(lists)
    flat_y = np.concatenate([np.full(pts.shape[0], data.y[i]) for i, pts in enumerate(lists)])
    flat = Dataset(flat_X, flat_y)
    m = data.n
    models = []
    for _ in range(T):
        P = weights.normalized()
        sample_w = np.concatenate([Pi / m for Pi in P])
        h_t = erm(WeightedDataset(flat, sample_w))
        models.append(h_t)
        for i, pts in enumerate(lists):
            preds = h_t.predict_batch(pts)
            weights.scale_up(i, preds != data.y[i], 1.0 + eta)
    if diagnostics is not None:
        diagnostics["rounds"] = T
        diagnostics["eta"] = eta
    return MajorityVote(models)


# ---------------------------------------------------------------------------
# online conversions
# ---------------------------------------------------------------------------


def one_pass_robust(stream, online_learner, attack_oracle, eps: float, delta: float,
                    mistake_cap: int, diagnostics=None):
    """Single pass over an i.i.d. stream: update on every attackable example,
    return the first hypothesis that survives ceil((1/eps) ln(cap/delta))
    consecutive robust-correct draws. Never updates on a survivor example."""
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    run_len = max(1, math.ceil((1.0 / eps) * math.log(mistake_cap / delta)))
    streak = 0
    updates = 0
    learner = online_learner
    while streak < run_len:
        try:
            batch = stream(1)
        except SourceExhausted as exc:
            raise StreamExhausted(
                f"stream ended with survivor streak {streak} of {run_len}"
            ) from exc
        s = batch.sample(0)
        z = attack_oracle(learner, s)
        if z is None:
            streak += 1
        else:
            learner = learner.update(as_vector(z), s.y)
            updates += 1
            streak = 0
    if diagnostics is not None:
        diagnostics["updates"] = updates
        diagnostics["run_length"] = run_len
    return learner


def cycle_robust(data: Dataset, online_learner, attack_oracle, mistake_cap: int, diagnostics=None):
    """Cycle over the training set feeding attack witnesses to the learner
    until one full pass draws no successful attack. Learner updates beyond
    the mistake cap, or oracle usage beyond m * cap calls, abort the run."""
    m = data.n
    learner = online_learner
    samples = [data.sample(i) for i in range(m)]
    calls = 0
    updates = 0
    passes = 0
    clean = False
    while not clean:
        clean = True
        passes += 1
        for i, s in enumerate(samples):
            if calls + 1 > m * mistake_cap:
                raise MistakeCapExceeded(
                    f"exceeded {m} x {mistake_cap} oracle calls without a clean pass"
                )
            calls += 1
            z = attack_oracle(learner, s, i)
            if z is not None:
                updates += 1
                if updates > mistake_cap:
                    raise MistakeCapExceeded(
                        f"learner needed more than {mistake_cap} updates"
                    )
                learner = learner.update(as_vector(z), s.y)
                clean = False
    if diagnostics is not None:
        diagnostics["oracle_calls"] = calls
        diagnostics["updates"] = updates
        diagnostics["passes"] = passes
    return learner


# ---------------------------------------------------------------------------
# weighted majority over a fixed pool
# ---------------------------------------------------------------------------


@dataclass
class EnsembleWeights:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size == 0:
            raise EmptyPool("at least one hypothesis required")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("hypothesis weights must lie in [0, 1]")
        self.weights = w


class WeightedMajority:
    """Vote with per-member weights; ties (including the all-zero edge) go to +1."""

    def __init__(self, models, weights: EnsembleWeights):
        self.models = list(models)
        self.ensemble = weights

    def predict(self, z) -> int:
        z = as_vector(z)
        score = sum(
            wi * m.predict(z) for wi, m in zip(self.ensemble.weights, self.models)
        )
        return 1 if score >= 0 else -1

    def predict_batch(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.array([self.predict(Z[i]) for i in range(Z.shape[0])], dtype=np.int64)


def wm_constants(eta: float) -> tuple[float, float]:
    """Mistake-bound multipliers (a, b): mistakes <= a * OPT + b * ln(pool size)."""
    if not (0.0 < eta < 1.0):
        raise ValueError("the bound constants need eta in (0, 1)")
    denom = math.log(2.0 / (1.0 + eta))
    return math.log(1.0 / eta) / denom, 1.0 / denom


def weighted_majority_robust(pool, stream, attack_oracle, eta_wm: float, rounds: int | None = None,
                             diagnostics=None):
    """Run the weighted-majority vote against the attack oracle; every member
    wrong on a successful attack point is down-weighted by eta. Stops after
    `rounds` draws or when a finite stream runs dry."""
    pool = list(pool)
    if not pool:
        raise EmptyPool("hypothesis pool must be non-empty")
    if not (0.0 <= eta_wm < 1.0):
        raise ValueError("eta must lie in [0, 1)")
    weights = EnsembleWeights(np.ones(len(pool)))
    predictor = WeightedMajority(pool, weights)
    mistakes = 0
    seen = 0
    while rounds is None or seen < rounds:
        try:
            batch = stream(1)
        except SourceExhausted:
            break
        seen += 1
        s = batch.sample(0)
        z = attack_oracle(predictor, s)
        if z is None:
            continue
        mistakes += 1
        z = as_vector(z)
        for j, h in enumerate(pool):
            if h.predict(z) != s.y:
                weights.weights[j] *= eta_wm
    if diagnostics is not None:
        diagnostics["mistakes"] = mistakes
        diagnostics["examples_seen"] = seen
    return weights, predictor
