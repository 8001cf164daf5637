"""Domain types and exact robust-loss evaluation for linear predictors.

Perturbation sets are closed lp balls or explicit finite point sets. For a
linear model and an lp ball the robust loss has a closed form: the attacker
wins iff the signed dual-normalized margin is at most the radius. Finite sets
are evaluated by enumeration against any predictor exposing .predict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidNorm,
    MissingPerturbations,
    SizeLimit,
    Unsupported,
    ZeroWeight,
)

ABSTAIN = None  # selective classifiers return +1, -1, or ABSTAIN

DEFAULT_INFLATE_CAP = 2_000_000


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


@dataclass(frozen=True)
class Sample:
    x: np.ndarray
    y: int

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x))
        if self.y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.y}")


class Dataset:
    """Ordered labeled samples stored as an (n, d) matrix plus a label vector."""

    def __init__(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-d, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError("label vector length must match row count")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if X.shape[0] and not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        self.X = X
        self.y = y.astype(np.int64)

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        samples = list(samples)
        if not samples:
            raise EmptyDataset("cannot build a dataset from zero samples")
        X = np.stack([s.x for s in samples])
        y = np.array([s.y for s in samples])
        return cls(X, y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(self.X[i].copy(), int(self.y[i]))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx])

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        for i in range(self.n):
            yield self.sample(i)

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True)
class LinearModel:
    w: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "w", as_vector(self.w))
        object.__setattr__(self, "bias", float(self.bias))
        if not np.any(self.w):
            raise ZeroWeight("linear model weights must not be all zero")

    def decision(self, x) -> float:
        return float(self.w @ np.asarray(x, dtype=float)) + self.bias

    def decisions(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w + self.bias

    def predict(self, x) -> int:
        return 1 if self.decision(x) >= 0.0 else -1

    def predict_batch(self, X) -> np.ndarray:
        return np.where(self.decisions(X) >= 0.0, 1, -1)


@dataclass(frozen=True)
class LpBall:
    p: float
    gamma: float

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise InvalidNorm(f"p must be >= 1, got {self.p}")
        if self.gamma < 0.0:
            raise ValueError("radius must be non-negative")


class FiniteOffsets:
    """Shared offset list applied to every example; must contain the zero offset."""

    def __init__(self, offsets):
        O = np.asarray(offsets, dtype=float)
        if O.ndim != 2:
            raise ValueError("offsets must be a list of vectors")
        if not np.any(np.all(O == 0.0, axis=1)):
            raise ValueError("offset list must include the zero vector")
        self.offsets = O

    @property
    def k(self) -> int:
        return self.offsets.shape[0]

    def points(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)[None, :] + self.offsets


class FinitePerExample:
    """Explicit perturbation points per example index; every listed set non-empty."""

    def __init__(self, table: dict):
        self.table = {}
        for i, pts in table.items():
            P = np.asarray(pts, dtype=float)
            if P.ndim != 2 or P.shape[0] == 0:
                raise ValueError(f"perturbation list for index {i} must be non-empty 2-d")
            self.table[int(i)] = P

    def points(self, index: int) -> np.ndarray:
        if index is None or index not in self.table:
            raise MissingPerturbations(f"no perturbation list for example index {index}")
        return self.table[index]


PerturbationSpec = LpBall | FiniteOffsets | FinitePerExample


def dual_exponent(p: float) -> float:
    """q with 1/p + 1/q = 1; p in [1, inf]."""
    if not (p >= 1.0):
        raise InvalidNorm(f"p must be >= 1, got {p}")
    if math.isinf(p):
        return 1.0
    if p == 1.0:
        return math.inf
    return p / (p - 1.0)


def lp_norm(v: np.ndarray, p: float) -> float:
    a = np.abs(np.asarray(v, dtype=float))
    if math.isinf(p):
        return float(np.max(a)) if a.size else 0.0
    if p == 1.0:
        return float(np.sum(a))
    # factor out the peak so powers of tiny or huge entries cannot under/overflow
    peak = float(np.max(a)) if a.size else 0.0
    if peak == 0.0 or not math.isfinite(peak):
        return peak
    if p == 2.0:
        return peak * float(np.sqrt(np.sum((a / peak) ** 2)))
    return peak * float(np.sum((a / peak) ** p) ** (1.0 / p))


def dual_norm(w: np.ndarray, p: float) -> float:
    """||w||_q for the exponent dual to p."""
    return lp_norm(np.asarray(w, dtype=float), dual_exponent(p))


def dual_maximizer(w: np.ndarray, p: float) -> np.ndarray:
    """Unit-lp-norm direction v with <w, v> = ||w||_q.

    Ties are broken deterministically: sign(0) maps to +1 for p = inf, and the
    p = 1 case picks the lowest index among maximal |w_j|.
    """
    w = as_vector(w)
    q = dual_exponent(p)
    nq = lp_norm(w, q)
    if nq == 0.0:
        raise ZeroWeight("dual maximizer of the zero vector is undefined")
    if p == 2.0:
        return w / nq
    if math.isinf(p):
        return np.where(w >= 0.0, 1.0, -1.0)
    if p == 1.0:
        j = int(np.argmax(np.abs(w)))
        v = np.zeros_like(w)
        v[j] = 1.0 if w[j] >= 0.0 else -1.0
        return v
    return np.sign(w) * (np.abs(w) / nq) ** (q / p)


def margin(model: LinearModel, x, p: float) -> float:
    """(<w, x> + bias) / ||w||_q, the signed distance scale of Lemma-style
    margin analysis; q dual to p."""
    nq = dual_norm(model.w, p)
    if nq == 0.0:
        raise ZeroWeight("margin undefined for all-zero weights")
    return (float(model.w @ as_vector(x)) + model.bias) / nq


def margins_batch(model: LinearModel, X, p: float) -> np.ndarray:
    nq = dual_norm(model.w, p)
    if nq == 0.0:
        raise ZeroWeight("margin undefined for all-zero weights")
    return model.decisions(X) / nq


def worst_case_point(model: LinearModel, x, y: int, ball: LpBall) -> np.ndarray:
    """The analytic attack point x - gamma * y * v, v the dual maximizer of w.

    Achieves the infimum of y * (<w, z> + bias) over the closed ball."""
    v = dual_maximizer(model.w, ball.p)
    return as_vector(x) - ball.gamma * y * v


def _finite_points(U: PerturbationSpec, x, index):
    if isinstance(U, FiniteOffsets):
        return U.points(x)
    if isinstance(U, FinitePerExample):
        return U.points(index)
    raise Unsupported(f"not a finite perturbation spec: {type(U).__name__}")


def robust_loss(predictor, sample: Sample, U: PerturbationSpec, index: int | None = None) -> int:
    """1 iff some allowed perturbation of the sample is misclassified.

    LpBall requires a LinearModel (closed form: 1 iff y * margin <= gamma,
    boundary counts as loss); finite specs enumerate against any predictor.
    """
    if isinstance(U, LpBall):
        if isinstance(predictor, LinearModel):
            return 1 if sample.y * margin(predictor, sample.x, U.p) <= U.gamma else 0
        lp = getattr(predictor, "robust_loss_lp", None)
        if lp is not None:
            return lp(sample, U)
        raise Unsupported(
            f"ball robust loss has no closed form for {type(predictor).__name__}"
        )
    Z = _finite_points(U, sample.x, index)
    if isinstance(predictor, LinearModel):
        return 1 if np.any(predictor.predict_batch(Z) != sample.y) else 0
    for z in Z:
        if predictor.predict(z) != sample.y:
            return 1
    return 0


def robust_risk(predictor, data: Dataset, U: PerturbationSpec) -> float:
    """Mean robust loss over the dataset."""
    if data.n == 0:
        raise EmptyDataset("robust risk needs at least one sample")
    total = 0
    for i in range(data.n):
        total += robust_loss(predictor, data.sample(i), U, index=i)
    return total / data.n


def inverse_blowup(U: PerturbationSpec) -> PerturbationSpec:
    """The perturbation set of U-inverse-of-U: natural points sharing an
    allowed perturbation. A gamma ball doubles its radius; a finite offset set
    becomes the deduplicated difference set O + (-O)."""
    if isinstance(U, LpBall):
        return LpBall(U.p, 2.0 * U.gamma)
    if isinstance(U, FiniteOffsets):
        O = U.offsets
        diffs = (O[:, None, :] - O[None, :, :]).reshape(-1, O.shape[1])
        uniq = sorted({tuple(row) for row in diffs})
        return FiniteOffsets(np.array(uniq))
    raise Unsupported("no closed-form inverse blowup for per-example perturbation tables")


@dataclass
class InflatedDataset:
    data: Dataset
    origins: np.ndarray  # origins[j] = index of the example row j came from


def inflate(data: Dataset, U: PerturbationSpec, cap: int = DEFAULT_INFLATE_CAP) -> InflatedDataset:
    """Expand every example into its perturbation list, keeping origin tags.

    Output order is example-major, perturbation-minor."""
    if isinstance(U, LpBall):
        raise Unsupported("only finite perturbation specs can be inflated")
    sizes = []
    for i in range(data.n):
        sizes.append(_finite_points(U, data.X[i], i).shape[0])
    total = int(sum(sizes))
    if total > cap:
        raise SizeLimit(f"inflated size {total} exceeds cap {cap}")
    rows = np.empty((total, data.d))
    labels = np.empty(total, dtype=np.int64)
    origins = np.empty(total, dtype=np.int64)
    pos = 0
    for i in range(data.n):
        Z = _finite_points(U, data.X[i], i)
        k = Z.shape[0]
        rows[pos : pos + k] = Z
        labels[pos : pos + k] = data.y[i]
        origins[pos : pos + k] = i
        pos += k
    return InflatedDataset(Dataset(rows, labels), origins)
