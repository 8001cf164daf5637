"""Cascades of abstaining classifiers and the boosting loops that build them.

Two regimes live here. beta_roboost turns a learner that is only robust on a
beta fraction of its input into a cascade whose non-robust mass decays like
prod(1 - beta_hat_t); alpha_boost aggregates weak robust learners into a
majority vote, with optional sparsification of the vote. expand_g and
strong_to_barely go the other way, degrading a strong robust learner into a
one-sided barely-robust one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ABSTAIN,
    Dataset,
    FiniteOffsets,
    FinitePerExample,
    LinearModel,
    LpBall,
    Sample,
    as_vector,
    inverse_blowup,
    margin,
    robust_loss,
)
from .data import substream
from .errors import (
    RetryLimit,
    SourceExhausted,
    Unsupported,
    WeakLearnerFailed,
)
from .learners import WeightedDataset


# ---------------------------------------------------------------------------
# selective classifiers and cascades
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectiveClassifier:
    """A model that only speaks when every candidate preimage of the input
    agrees; otherwise it abstains (returns ABSTAIN, i.e. None)."""

    model: LinearModel
    abstain_spec: object

    def predict(self, z):
        return selective_predict(self, z)


def selective_predict(sc: SelectiveClassifier, z):
    z = as_vector(z)
    spec = sc.abstain_spec
    if isinstance(spec, LpBall):
        # closed form: prediction is stable on the inverse ball iff the
        # normalized margin clears the radius; ties abstain
        m = margin(sc.model, z, spec.p)
        if abs(m) > spec.gamma:
            return sc.model.predict(z)
        return ABSTAIN
    if isinstance(spec, FiniteOffsets):
        preds = {sc.model.predict(z - o) for o in spec.offsets}
        if len(preds) == 1:
            return preds.pop()
        return ABSTAIN
    if isinstance(spec, FinitePerExample):
        raise Unsupported("per-example tables have no input-indexed inverse")
    raise Unsupported(f"no abstention rule for {type(spec).__name__}")


class Cascade:
    """Ordered abstaining stages with a last-resort raw predictor.

    The fallback answers only when every stage abstains; by construction a
    non-abstaining earlier stage is never contradicted.
    """

    def __init__(self, stages, fallback: LinearModel):
        stages = list(stages)
        if not stages:
            raise ValueError("a cascade needs at least one stage")
        if fallback is None:
            raise ValueError("a cascade needs a fallback model")
        self.stages = stages
        self.fallback = fallback

    def predict(self, z) -> int:
        return cascade_predict(self, z)

    def predict_batch(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.array([cascade_predict(self, Z[i]) for i in range(Z.shape[0])], dtype=np.int64)

    def robust_loss_lp(self, sample: Sample, ball: LpBall) -> int:
        """Sound worst-case loss over the ball, never under-reporting.

        Normalized margins move by at most the ball radius, so each stage is
        classified from its margin at the center alone: surely-correct (and
        non-abstaining) everywhere, possibly-wrong somewhere, or safe
        (correct-or-abstaining) everywhere. A possibly-wrong stage counts as
        a loss; a safe stage defers to the rest of the cascade.
        """
        r = ball.gamma
        y = sample.y
        for stage in self.stages:
            spec = stage.abstain_spec
            if not isinstance(spec, LpBall) or spec.p != ball.p:
                raise Unsupported("stage abstention norm must match the evaluation ball")
            ym = y * margin(stage.model, sample.x, ball.p)
            if ym > spec.gamma + r:
                return 0
            if ym < r - spec.gamma:
                return 1
        ym = y * margin(self.fallback, sample.x, ball.p)
        return 0 if ym > r else 1


def cascade_predict(c: Cascade, z) -> int:
    z = as_vector(z)
    for stage in c.stages:
        label = selective_predict(stage, z)
        if label is not ABSTAIN:
            return label
    return c.fallback.predict(z)


# ---------------------------------------------------------------------------
# non-robust region and rejection sampling
# ---------------------------------------------------------------------------


def _stable_everywhere(model: LinearModel, spec, x) -> bool:
    # prediction constant over the inverse blowup of the perturbation set
    if isinstance(spec, LpBall):
        return abs(margin(model, x, spec.p)) > 2.0 * spec.gamma
    doubled = inverse_blowup(spec)
    pts = doubled.points(x)
    preds = model.predict_batch(pts)
    return bool(np.all(preds == preds[0]))


def in_nonrobust_region(models, x, U) -> bool:
    """True iff every model's prediction can be flipped or silenced within U:
    for balls, |margin(x)| <= 2 gamma for all of them."""
    models = list(models)
    if not models:
        raise ValueError("need at least one model")
    x = as_vector(x)
    return all(not _stable_everywhere(m, U, x) for m in models)


def _in_nonrobust_multi(models, specs, x) -> bool:
    return all(not _stable_everywhere(m, s, x) for m, s in zip(models, specs))


def finite_source(data: Dataset):
    """Consume a dataset front to back; raises SourceExhausted when the
    remaining rows cannot cover a request."""
    cursor = {"i": 0}

    def draw(k: int) -> Dataset:
        i = cursor["i"]
        if i + k > data.n:
            raise SourceExhausted(f"source has {data.n - i} rows left, needs {k}")
        cursor["i"] = i + k
        return data.subset(np.arange(i, i + k))

    return draw


def rejection_sample(source, models, m: int, budget_per_draw: int, U, specs=None):
    """Accept m labeled samples lying in the joint non-robust region of the
    models, or None once any single accept costs more than budget_per_draw
    source draws (evidence the region's mass is too small to matter)."""
    models = list(models)
    specs = list(specs) if specs is not None else [U] * len(models)
    xs, ys = [], []
    while len(xs) < m:
        for _ in range(budget_per_draw):
            batch = source(1)
            if _in_nonrobust_multi(models, specs, batch.X[0]):
                xs.append(batch.X[0])
                ys.append(batch.y[0])
                break
        else:
            return None
    return Dataset(np.array(xs), np.array(ys, dtype=np.int64))


# ---------------------------------------------------------------------------
# beta-RoBoost
# ---------------------------------------------------------------------------


@dataclass
class BoostConfig:
    beta: float
    eps: float
    delta: float = 0.05
    rounds: int | None = None
    per_round_m: int | None = None
    learner_m: int = 0  # sample size the base learner asks for
    sample_budget_per_draw: int | None = None
    multi_granularity: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError("beta must lie in (0, 1]")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.rounds is not None and self.rounds < 1:
            raise ValueError("rounds must be >= 1")

    @property
    def rounds_resolved(self) -> int:
        if self.rounds is not None:
            return self.rounds
        return math.ceil(math.log(2.0 / self.eps) / self.beta)

    @property
    def per_round_m_resolved(self) -> int:
        if self.per_round_m is not None:
            return self.per_round_m
        T = self.rounds_resolved
        return max(self.learner_m, math.ceil(4.0 * math.log(2.0 * T / self.delta)))

    @property
    def budget_per_draw_resolved(self) -> int:
        if self.sample_budget_per_draw is not None:
            return self.sample_budget_per_draw
        return math.ceil(4.0 / self.eps)


def _round_radius(cfg: BoostConfig, U: LpBall, t: int) -> LpBall:
    if not cfg.multi_granularity:
        return U
    return LpBall(U.p, U.gamma / (2.0 ** (t - 1)))


def beta_roboost(source, barely_learner, cfg: BoostConfig, U: LpBall, diagnostics=None) -> Cascade:
    """Round t trains on samples where all earlier models are unstable, then
    wraps each model in an abstaining stage at its round's radius.

    Round 1 trains on the raw source. Sampling that comes up empty (budget
    exceeded, or a finite source running dry after round 1) ends the loop
    early; the cascade then has fewer stages, with the last trained model as
    fallback. Per-round beta_hat values (fraction of the round's sample that
    the round's model holds at twice the radius) land in `diagnostics` when a
    dict is supplied.
    """
    T = cfg.rounds_resolved
    m = cfg.per_round_m_resolved
    budget = cfg.budget_per_draw_resolved
    models, specs, beta_hats, sizes = [], [], [], []
    stopped_early = False
    for t in range(1, T + 1):
        ball_t = _round_radius(cfg, U, t)
        if t == 1:
            round_data = source(m)
        else:
            try:
                round_data = rejection_sample(source, models, m, budget, U, specs=specs)
            except SourceExhausted:
                round_data = None
            if round_data is None:
                stopped_early = True
                break
        h_t = barely_learner(round_data)
        models.append(h_t)
        specs.append(ball_t)
        sizes.append(round_data.n)
        inv = inverse_blowup(ball_t)
        held = sum(
            robust_loss(h_t, round_data.sample(i), inv) == 0 for i in range(round_data.n)
        )
        beta_hats.append(held / round_data.n)
    if diagnostics is not None:
        diagnostics["beta_hats"] = beta_hats
        diagnostics["round_sizes"] = sizes
        diagnostics["rounds_run"] = len(models)
        diagnostics["stopped_early"] = stopped_early
    stages = [SelectiveClassifier(h, s) for h, s in zip(models, specs)]
    return Cascade(stages, fallback=models[-1])


def beta_uroboost(labeled: Dataset, unlabeled_source, learner, cfg: BoostConfig, U: LpBall, diagnostics=None) -> Cascade:
    """Pseudo-label an unlabeled source with a model trained on the labeled
    seed set, then boost as usual. An empty unlabeled source degenerates to a
    single abstaining stage around the seed model."""
    h_hat = learner(labeled)

    def pseudo_source(k: int) -> Dataset:
        batch = unlabeled_source(k)
        return Dataset(batch.X, h_hat.predict_batch(batch.X))

    try:
        return beta_roboost(pseudo_source, learner, cfg, U, diagnostics=diagnostics)
    except SourceExhausted:
        if diagnostics is not None:
            diagnostics.setdefault("beta_hats", [])
            diagnostics.setdefault("round_sizes", [])
            diagnostics["rounds_run"] = 1
            diagnostics["stopped_early"] = True
        return Cascade([SelectiveClassifier(h_hat, U)], fallback=h_hat)


# ---------------------------------------------------------------------------
# alpha-Boost and sparsification
# ---------------------------------------------------------------------------


class MajorityVote:
    """Unweighted vote over ±1 predictors; exact ties go to +1."""

    def __init__(self, models):
        models = list(models)
        if not models:
            raise ValueError("need at least one model")
        self.models = models

    def predict(self, z) -> int:
        z = as_vector(z)
        total = sum(m.predict(z) for m in self.models)
        return 1 if total >= 0 else -1

    def predict_batch(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        total = np.zeros(Z.shape[0])
        for m in self.models:
            total = total + m.predict_batch(Z)
        return np.where(total >= 0, 1, -1).astype(np.int64)


@dataclass
class AlphaBoostConfig:
    alpha: float | None = None
    rounds: int | None = None
    sparsify_N: int = 25
    delta: float = 0.05
    agreement_mode: bool = False  # alternative (T, alpha) pairing with the 5/9 agreement floor
    early_stop: bool = False  # break once the running majority has zero loss on the data
    rng_seed: int = 0

    def resolved(self, m: int) -> tuple[float, int]:
        if self.agreement_mode:
            T = self.rounds if self.rounds is not None else math.ceil(112.0 * math.log(m))
            alpha = (
                self.alpha
                if self.alpha is not None
                else 0.5 * math.log(1.0 + math.sqrt(2.0 * math.log(m) / T))
            )
        else:
            T = self.rounds if self.rounds is not None else math.ceil(1.0 + 48.0 * math.log(m))
            alpha = self.alpha if self.alpha is not None else 0.125
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if T < 1:
            raise ValueError("rounds must be >= 1")
        return alpha, T


def _example_loss(model, sample: Sample, U, index: int | None = None) -> int:
    if U is None:
        return 0 if model.predict(sample.x) == sample.y else 1
    return robust_loss(model, sample, U, index=index)


def alpha_boost(data: Dataset, weak_learner, cfg: AlphaBoostConfig, U=None, diagnostics=None):
    """Multiplicative-weights boosting of a weak (robust) learner.

    Examples the round's model holds (loss 0, robust when U is given) are
    downweighted by e^{-2 alpha}; the weak learner must reach weighted error
    <= 1/3 within ceil(ln(2T/delta)) attempts per round. Returns the model
    list and their unweighted majority vote.
    """
    m = data.n
    if m == 0:
        raise ValueError("cannot boost on an empty dataset")
    alpha, T = cfg.resolved(m)
    retries = max(1, math.ceil(math.log(2.0 * T / cfg.delta)))
    samples = [data.sample(i) for i in range(m)]
    D = np.full(m, 1.0 / m)
    models = []
    errors = []
    for _ in range(T):
        accepted = None
        for _attempt in range(retries):
            h = weak_learner(WeightedDataset(data, D))
            losses = np.array(
                [_example_loss(h, s, U, index=i) for i, s in enumerate(samples)], dtype=float
            )
            err = float(D @ losses)
            if err <= 1.0 / 3.0:
                accepted = (h, losses, err)
                break
        if accepted is None:
            raise WeakLearnerFailed(
                f"weighted error stayed above 1/3 for {retries} attempts"
            )
        h, losses, err = accepted
        models.append(h)
        errors.append(err)
        D = D * np.where(losses == 0.0, math.exp(-2.0 * alpha), 1.0)
        D = D / D.sum()
        if cfg.early_stop and _zero_loss(MajorityVote(models), data, U):
            break
    if diagnostics is not None:
        diagnostics["round_errors"] = errors
        diagnostics["alpha"] = alpha
        diagnostics["rounds"] = T
    return models, MajorityVote(models)


def vote_agreement(models, data: Dataset, U=None) -> np.ndarray:
    """Per-example fraction of models with zero (robust) loss."""
    samples = [data.sample(i) for i in range(data.n)]
    agree = np.zeros(data.n)
    for h in models:
        agree += np.array([1.0 - _example_loss(h, s, U, index=i) for i, s in enumerate(samples)])
    return agree / len(models)


def _zero_loss(predictor, data: Dataset, U) -> bool:
    for i in range(data.n):
        s = data.sample(i)
        if U is None:
            if predictor.predict(s.x) != s.y:
                return False
        elif robust_loss(predictor, s, U, index=i) != 0:
            return False
    return True


def sparsify_majority(models, check_data: Dataset, N: int = 25, seed: int = 0, U=None, retry_limit: int = 100):
    """Uniform with-replacement subsample of N vote members that still has
    zero (robust) loss on check_data; redraws until one does."""
    models = list(models)
    if isinstance(U, LpBall) and U.gamma > 0:
        raise Unsupported("majority votes over a ball need a finite perturbation set")
    if not _zero_loss(MajorityVote(models), check_data, U):
        raise ValueError("the full majority must have zero loss on check_data")
    rng = substream(seed, "sparsify")
    for _ in range(retry_limit):
        idx = rng.integers(0, len(models), size=N)
        sub = [models[i] for i in idx]
        if _zero_loss(MajorityVote(sub), check_data, U):
            return sub
    raise RetryLimit(f"no zero-loss subsample of size {N} in {retry_limit} attempts")


# ---------------------------------------------------------------------------
# strong robustness -> barely robust (one-sided expansion)
# ---------------------------------------------------------------------------


class ExpandedPredictor:
    """g_y: predicts y on the blowup of the region the base model labels y
    robustly; for a halfspace this is y * margin(x) > -gamma."""

    def __init__(self, model: LinearModel, ball: LpBall, y: int):
        if y not in (1, -1):
            raise ValueError("expansion label must be +1 or -1")
        self.model = model
        self.ball = ball
        self.y = y

    def predict(self, z) -> int:
        m = margin(self.model, as_vector(z), self.ball.p)
        return self.y if self.y * m > -self.ball.gamma else -self.y

    def predict_batch(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.array([self.predict(Z[i]) for i in range(Z.shape[0])], dtype=np.int64)


def expand_g(h_hat: LinearModel, U: LpBall, y: int) -> ExpandedPredictor:
    return ExpandedPredictor(h_hat, U, y)


def strong_to_barely(h_hat: LinearModel, source, U: LpBall, delta: float = 0.05, m_tilde: int | None = None, budget_per_draw: int = 1000):
    """Estimate which label dominates the robust region of h_hat from
    m_tilde = ceil((64/9) ln(1/delta)) samples of that region, then return
    the matching one-sided expansion."""
    if m_tilde is None:
        m_tilde = math.ceil(64.0 / 9.0 * math.log(1.0 / delta))
    accepted_labels = []
    while len(accepted_labels) < m_tilde:
        for _ in range(budget_per_draw):
            batch = source(1)
            if _stable_everywhere(h_hat, U, batch.X[0]):
                accepted_labels.append(int(batch.y[0]))
                break
        else:
            raise SourceExhausted("robust region of the base model is too rare to sample")
    m_plus = np.mean(np.array(accepted_labels) == 1)
    return expand_g(h_hat, U, 1 if m_plus >= 0.5 else -1)
