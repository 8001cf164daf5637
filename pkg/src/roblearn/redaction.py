"""Transductive selective classification: learn where to stay silent.

rejectron trains a base hypothesis, then repeatedly hunts for a discriminator
that disagrees with it on many still-selected test points but on few training
points; such a discriminator marks a region where the test distribution has
drifted, and the selection set shrinks away from it. urejectron does the same
without labels by finding pairs of classifiers that agree on the training
points but split the test points. transductive_pool is the finite-pool
variant that picks a single hypothesis by its two-sided stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ABSTAIN,
    Dataset,
    FiniteOffsets,
    LinearModel,
    LpBall,
    as_vector,
    margins_batch,
)
from .data import fmt_float
from .errors import EmptyPool, IoError, NoRealizableMember, ParseError, Unsupported
from .learners import ErmConfig, WeightedDataset, erm_linear


@dataclass(frozen=True)
class ConstantModel:
    """Always answers the same label; the degenerate half of a T=1 pair."""

    label: int = 1

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError("label must be +1 or -1")

    def predict(self, x) -> int:
        return self.label

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.full(X.shape[0], self.label, dtype=np.int64)


@dataclass(frozen=True)
class RedactConfig:
    eps: float
    weight: float | None = None  # None means n + 1, the realizable choice
    eta: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0):
            raise ValueError("eps must lie in (0, 1]")
        if self.weight is not None and self.weight < 1.0:
            raise ValueError("the training weight must be at least 1")

    def resolved_weight(self, n_train: int) -> float:
        return float(self.weight) if self.weight is not None else float(n_train + 1)


@dataclass(frozen=True)
class SelectionSet:
    """Region kept for prediction. Rejectron keeps x while every stored
    discriminator agrees with the base model there; the unsupervised variant
    keeps x while every stored pair agrees with itself."""

    mode: str
    members: tuple
    base: LinearModel | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.mode not in ("rejectron", "urejectron"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "rejectron" and self.base is None:
            raise ValueError("rejectron selection sets carry their base model")
        object.__setattr__(self, "members", tuple(self.members))

    def contains(self, x) -> bool:
        return select_member(self, x)


def select_member(S: SelectionSet, x) -> bool:
    x = as_vector(x)
    if S.mode == "rejectron":
        hx = S.base.predict(x)
        return all(c.predict(x) == hx for c in S.members)
    return all(c.predict(x) == c2.predict(x) for c, c2 in S.members)


def selective_classify(h, S: SelectionSet, x):
    x = as_vector(x)
    if select_member(S, x):
        return h.predict(x)
    return ABSTAIN


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(0, 0) if pts.size == 0 else pts.reshape(1, -1)
    return pts


def rejectron(train: Dataset, test_points, cfg: RedactConfig, erm=None, diagnostics=None):
    """Iteratively redact test regions where some hypothesis can disagree
    with the base model cheaply on test but barely on train.

    Each round fits a discriminator on the artificial mixture: training
    points labeled by the base model with weight Lambda / n each, selected
    test points with the flipped label and weight 1 / n_test each. The round
    score err_test(disagreement on selected) - Lambda * err_train(disagreement)
    stopping when it drops to eps. Runs at most floor(1 / eps) rounds, and
    every completed round removes strictly more than eps * n_test points.
    """
    if erm is None:
        erm = erm_linear
    tests = _as_points(test_points)
    n, n_test = train.n, tests.shape[0]
    lam = cfg.resolved_weight(n)
    h = erm(WeightedDataset.uniform(train))
    train_pred = h.predict_batch(train.X)
    selected = np.ones(n_test, dtype=bool)
    members = []
    scores = []
    max_rounds = int(math.floor(1.0 / cfg.eps))
    for _ in range(max_rounds):
        if n_test == 0 or not selected.any():
            break
        sel_idx = np.nonzero(selected)[0]
        X_art = np.concatenate([train.X, tests[sel_idx]])
        y_art = np.concatenate([train_pred, -h.predict_batch(tests[sel_idx])])
        w_art = np.concatenate(
            [np.full(n, lam / n), np.full(sel_idx.size, 1.0 / n_test)]
        )
        c = erm(WeightedDataset(Dataset(X_art, y_art), w_art))
        c_test = c.predict_batch(tests)
        c_train = c.predict_batch(train.X)
        disagree_sel = selected & (c_test != h.predict_batch(tests))
        err_test = disagree_sel.sum() / n_test
        err_train = float(np.mean(c_train != train_pred))
        s = err_test - lam * err_train
        scores.append(float(s))
        if s <= cfg.eps:
            break
        removed = int(disagree_sel.sum())
        assert removed > cfg.eps * n_test, "a kept round must redact more than an eps fraction"
        members.append(c)
        selected = selected & ~disagree_sel
    if diagnostics is not None:
        diagnostics["rounds"] = len(members)
        diagnostics["scores"] = scores
        diagnostics["selected_test_fraction"] = (
            float(selected.mean()) if n_test else 1.0
        )
    return h, SelectionSet("rejectron", members, base=h, eps=cfg.eps)


# ---------------------------------------------------------------------------
# unsupervised variant
# ---------------------------------------------------------------------------


@dataclass
class FinitePoolPairs:
    """Exhaustive pairwise search over a candidate pool; the maximizing pair
    is the lexicographically first among ties."""

    pool: list

    def __post_init__(self):
        self.pool = list(self.pool)
        if not self.pool:
            raise EmptyPool("candidate pool must be non-empty")


@dataclass
class DistinguisherT1:
    """Single-round practical mode: one classifier trained to tell train from
    test, thresholded; the selection set keeps points scored train-like."""

    cfg: ErmConfig = field(default_factory=lambda: ErmConfig(fit_bias=True))


def urejectron(train_points, test_points, cfg: RedactConfig, backend, diagnostics=None) -> SelectionSet:
    """Label-free redaction. With a finite pool, iterate the best
    agree-on-train / split-on-test pair until its score falls to eps. In the
    single-round mode, fit one train-vs-test separator and keep everything on
    the train side of a threshold; the full threshold sweep lands in
    diagnostics["tradeoff"].
    """
    train = _as_points(train_points)
    tests = _as_points(test_points)
    n, n_test = train.shape[0], tests.shape[0]
    lam = cfg.resolved_weight(n)
    if isinstance(backend, FinitePoolPairs):
        pool = backend.pool
        preds_train = [c.predict_batch(train) for c in pool]
        preds_test = [c.predict_batch(tests) for c in pool]
        selected = np.ones(n_test, dtype=bool)
        members = []
        scores = []
        for _ in range(int(math.floor(1.0 / cfg.eps))):
            if n_test == 0 or not selected.any():
                break
            best = None
            for i in range(len(pool)):
                for j in range(i + 1, len(pool)):
                    split = selected & (preds_test[i] != preds_test[j])
                    err_test = split.sum() / n_test
                    err_train = float(np.mean(preds_train[i] != preds_train[j])) if n else 0.0
                    s = err_test - lam * err_train
                    if best is None or s > best[0]:
                        best = (s, i, j, split)
            if best is None or best[0] <= cfg.eps:
                if best is not None:
                    scores.append(float(best[0]))
                break
            s, i, j, split = best
            scores.append(float(s))
            members.append((pool[i], pool[j]))
            selected = selected & ~split
        if diagnostics is not None:
            diagnostics["rounds"] = len(members)
            diagnostics["scores"] = scores
        return SelectionSet("urejectron", members, eps=cfg.eps)
    if isinstance(backend, DistinguisherT1):
        X = np.concatenate([train, tests])
        y = np.concatenate([np.ones(n), -np.ones(n_test)]).astype(np.int64)
        d = erm_linear(WeightedDataset.uniform(Dataset(X, y)), backend.cfg)
        train_scores = d.decisions(train)
        test_scores = d.decisions(tests)
        # sweep every test score as a threshold, plus one keeping everything
        grid = np.concatenate([[min(test_scores.min(), train_scores.min()) - 1.0], np.sort(test_scores)])
        rows = []
        for tau in grid:
            rows.append(
                {
                    "threshold": float(tau),
                    "rej_train": float(np.mean(train_scores < tau)) if n else 0.0,
                    "rej_test": float(np.mean(test_scores < tau)) if n_test else 0.0,
                }
            )
        tau_star = float(train_scores.min()) if n else 0.0  # keeps every training point
        # the member recomputes the score in a different association order, so
        # back the threshold off by a relative ulp or the argmin point can drop
        tau_star -= 1e-9 * (1.0 + abs(tau_star))
        shifted = LinearModel(d.w, d.bias - tau_star)
        if diagnostics is not None:
            diagnostics["tradeoff"] = rows
            diagnostics["threshold"] = tau_star
        return SelectionSet("urejectron", [(shifted, ConstantModel(1))], eps=cfg.eps)
    raise Unsupported(f"unknown backend {type(backend).__name__}")


def lambda_star(eta: float, n: int, d_proxy: int, delta: float) -> tuple[float, float]:
    """Agnostic parameter pair: the generalization radius eps* and the
    training weight 1 / sqrt(8 eta + eps*^2) it implies."""
    if not (0.0 <= eta < 1.0):
        raise ValueError("eta must lie in [0, 1)")
    if n < 1:
        raise ValueError("n must be >= 1")
    eps_star = 4.0 * math.sqrt((d_proxy * math.log(2.0 * n) + math.log(48.0 / delta)) / n)
    lam_star = math.sqrt(1.0 / (8.0 * eta + eps_star ** 2))
    return eps_star, lam_star


def massart_denoise_rejectron(extra_noisy: Dataset, heldout: Dataset, test_points,
                              cfg: RedactConfig, erm=None, diagnostics=None):
    """Fit on the large noisy sample, relabel the held-out set with that fit,
    then run the usual redaction on the cleaned labels."""
    if erm is None:
        erm = erm_linear
    h_hat = erm(WeightedDataset.uniform(extra_noisy))
    relabeled = Dataset(heldout.X, h_hat.predict_batch(heldout.X))
    return rejectron(relabeled, test_points, cfg, erm=erm, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# finite-pool transductive selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoolHypotheses:
    models: tuple

    def __post_init__(self):
        models = tuple(self.models)
        if not models:
            raise EmptyPool("hypothesis pool must be non-empty")
        object.__setattr__(self, "models", models)


def _preimage_risks(h: LinearModel, train: Dataset, tests: np.ndarray, U) -> tuple[float, float]:
    if isinstance(U, LpBall):
        m_train = margins_batch(h, train.X, U.p)
        r_lab = float(np.mean(train.y * m_train <= U.gamma))
        if tests.shape[0] == 0:
            return r_lab, 0.0
        m_test = margins_batch(h, tests, U.p)
        return r_lab, float(np.mean(np.abs(m_test) <= U.gamma))
    if isinstance(U, FiniteOffsets):
        bad_lab = 0
        for i in range(train.n):
            pre = train.X[i] - U.offsets
            if np.any(h.predict_batch(pre) != train.y[i]):
                bad_lab += 1
        bad_unl = 0
        for j in range(tests.shape[0]):
            pre = tests[j] - U.offsets
            preds = h.predict_batch(pre)
            if np.any(preds != preds[0]):
                bad_unl += 1
        r_lab = bad_lab / train.n
        r_unl = bad_unl / tests.shape[0] if tests.shape[0] else 0.0
        return r_lab, r_unl
    raise Unsupported("preimage risks need a ball or a shared offset set")


def transductive_pool(pool: PoolHypotheses, train: Dataset, test_points, U,
                      mode: str = "realizable", diagnostics=None):
    """Pick the pool member whose predictions are stable on the preimages of
    both samples. Realizable mode demands both risks be exactly zero;
    agnostic mode minimizes the larger of the two (lowest index on ties).
    Returns the chosen model and its labels for the test points."""
    tests = _as_points(test_points)
    if mode not in ("realizable", "agnostic"):
        raise ValueError(f"unknown mode {mode!r}")
    scores = []
    for h in pool.models:
        r_lab, r_unl = _preimage_risks(h, train, tests, U)
        scores.append((r_lab, r_unl))
    if diagnostics is not None:
        diagnostics["scores"] = [
            {"labeled": rl, "unlabeled": ru} for rl, ru in scores
        ]
    if mode == "realizable":
        for h, (r_lab, r_unl) in zip(pool.models, scores):
            if r_lab == 0.0 and r_unl == 0.0:
                return h, h.predict_batch(tests)
        raise NoRealizableMember("no pool member is stable on both samples")
    best_i = min(range(len(scores)), key=lambda i: max(scores[i]))
    h = pool.models[best_i]
    return h, h.predict_batch(tests)


# ---------------------------------------------------------------------------
# selection-set serialization
# ---------------------------------------------------------------------------


def _model_token(m) -> str:
    if isinstance(m, ConstantModel):
        return f"const {m.label:+d}"
    return "linear " + fmt_float(m.bias) + " " + " ".join(fmt_float(v) for v in m.w)


def _parse_model_token(tok: str, path: str, row: int):
    parts = tok.split()
    if parts[0] == "const":
        return ConstantModel(int(parts[1]))
    if parts[0] == "linear":
        return LinearModel(np.array([float(t) for t in parts[2:]]), float(parts[1]))
    raise ParseError(f"{path}: unknown model kind {parts[0]!r}", row=row, col=1)


def save_selection(path: str, S: SelectionSet) -> None:
    lines = ["selection-set v1", f"mode: {S.mode}"]
    if S.eps is not None:
        lines.append("eps: " + fmt_float(S.eps))
    if S.base is not None:
        lines.append("base: " + _model_token(S.base))
    for member in S.members:
        if S.mode == "rejectron":
            lines.append("c: " + _model_token(member))
        else:
            lines.append("pair: " + _model_token(member[0]) + " | " + _model_token(member[1]))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_selection(path: str) -> SelectionSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != "selection-set v1":
        raise ParseError(f"{path} is not a selection-set file", row=1, col=1)
    mode = None
    eps = None
    base = None
    members = []
    for rownum, ln in enumerate(lines[1:], start=2):
        if ln.startswith("mode:"):
            mode = ln[5:].strip()
        elif ln.startswith("eps:"):
            eps = float(ln[4:])
        elif ln.startswith("base:"):
            base = _parse_model_token(ln[5:].strip(), path, rownum)
        elif ln.startswith("c:"):
            members.append(_parse_model_token(ln[2:].strip(), path, rownum))
        elif ln.startswith("pair:"):
            left, _, right = ln[5:].partition("|")
            members.append(
                (
                    _parse_model_token(left.strip(), path, rownum),
                    _parse_model_token(right.strip(), path, rownum),
                )
            )
        else:
            raise ParseError(f"{path}: unrecognized line", row=rownum, col=1)
    if mode is None:
        raise ParseError(f"{path}: missing mode line", row=1, col=1)
    return SelectionSet(mode, members, base=base, eps=eps)
