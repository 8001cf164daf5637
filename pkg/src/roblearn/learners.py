"""Base learners consumed by the boosting and reduction loops.

erm_linear is the workhorse: weighted hinge subgradient descent, deterministic
for a fixed input, adequate as an approximate ERM oracle. pool_erm is the
exact counterpart over a finite candidate list and is what invariant tests use
when exactness matters. The two mirror-descent trainers tolerate random label
flips: one minimizes a reweighted-slope margin surrogate, the other the
integral loss of a monotone link function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import Dataset, LinearModel, as_vector, dual_exponent, lp_norm, margins_batch
from .errors import AllZeroWeights, EmptyDataset, EmptyPool, InvalidNorm


class WeightedDataset:
    """Samples with non-negative real weights; the currency of boosting loops."""

    def __init__(self, data: Dataset, weights):
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (data.n,):
            raise ValueError("one weight per sample required")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and non-negative")
        self.data = data
        self.weights = weights

    @classmethod
    def uniform(cls, data: Dataset) -> "WeightedDataset":
        return cls(data, np.full(data.n, 1.0 / max(data.n, 1)))

    @property
    def total(self) -> float:
        return float(self.weights.sum())


@dataclass
class ErmConfig:
    epochs: int = 300
    lr0: float = 0.5
    reg: float = 1e-4
    fit_bias: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.reg < 0:
            raise ValueError("regularization must be non-negative")


def _nonzero_or_fallback(w: np.ndarray, fallback_dir: np.ndarray) -> np.ndarray:
    if np.any(w):
        return w
    if np.any(fallback_dir):
        return fallback_dir.copy()
    e1 = np.zeros(w.shape[0])
    e1[0] = 1.0
    return e1


def erm_linear(wdata: WeightedDataset, cfg: ErmConfig | None = None) -> LinearModel:
    """Approximate weighted ERM for halfspaces via hinge subgradient descent.

    Deterministic: the default path uses no randomness at all, so identical
    inputs give identical models. The returned weights are never all zero; on
    perfectly antisymmetric data where the subgradient vanishes at the origin,
    a fixed fallback direction is used.
    """
    cfg = cfg or ErmConfig()
    total = wdata.total
    if total <= 0.0:
        # covers the empty dataset too: no rows means no positive weight
        raise AllZeroWeights("training needs at least one positive weight")
    sw = wdata.weights / total
    X = np.ascontiguousarray(wdata.data.X)
    yf = wdata.data.y.astype(float)
    w, b = _kernels.hinge_train(X, yf, sw, cfg.epochs, cfg.lr0, cfg.reg, cfg.fit_bias)
    w = _nonzero_or_fallback(np.asarray(w), X.T @ (yf * sw))
    return LinearModel(w, b if cfg.fit_bias else 0.0)


@dataclass
class SvmConfig:
    c_hinge: float = 1e-6  # LinearSVC-style C; regularization is 1/(2 C n)
    epochs: int = 400
    lr0: float | None = None
    fit_bias: bool = False
    p: float = 2.0  # perturbation norm the margins are normalized against


@dataclass
class SvmResult:
    model: LinearModel
    beta_hat: float


def svm_margin(data: Dataset, two_gamma: float, cfg: SvmConfig | None = None) -> SvmResult:
    """Hinge-trained halfspace with its achieved robust fraction at radius
    two_gamma: beta_hat = fraction of training points with y*margin strictly
    above two_gamma (dual-normalized margin).

    The default c_hinge mirrors the tiny-C linear-SVM recipe, which at desk
    scales makes the minimizer track the class-mean direction.
    """
    cfg = cfg or SvmConfig()
    if data.n == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    n = data.n
    reg = 1.0 / (2.0 * cfg.c_hinge * n)
    lr0 = cfg.lr0 if cfg.lr0 is not None else 1.0 / (2.0 * reg)
    sw = np.full(n, 1.0 / n)
    X = np.ascontiguousarray(data.X)
    yf = data.y.astype(float)
    w, b = _kernels.hinge_train(X, yf, sw, cfg.epochs, lr0, reg, cfg.fit_bias)
    w = _nonzero_or_fallback(np.asarray(w), X.T @ (yf * sw))
    model = LinearModel(w, b if cfg.fit_bias else 0.0)
    m = margins_batch(model, data.X, cfg.p)
    beta_hat = float(np.mean(data.y * m > two_gamma))
    return SvmResult(model, beta_hat)


def pool_erm(pool, wdata: WeightedDataset) -> LinearModel:
    """Exact weighted 0-1 ERM over a finite candidate pool, lowest index wins ties."""
    pool = list(pool)
    if not pool:
        raise EmptyPool("candidate pool must be non-empty")
    if wdata.total <= 0.0:
        raise AllZeroWeights("training needs at least one positive weight")
    best, best_err = None, math.inf
    for cand in pool:
        wrong = cand.predict_batch(wdata.data.X) != wdata.data.y
        err = float(wdata.weights[wrong].sum())
        if err < best_err:
            best, best_err = cand, err
    return best


def make_pool_erm(pool):
    pool = list(pool)
    return lambda wdata: pool_erm(pool, wdata)


# ---------------------------------------------------------------------------
# online perceptron
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerceptronState:
    w: np.ndarray
    mistakes: int = 0

    def predict(self, z) -> int:
        return 1 if float(self.w @ np.asarray(z, dtype=float)) >= 0.0 else -1

    def update(self, z, y: int) -> "PerceptronState":
        return perceptron_update(self, z, y)


def perceptron_init(d: int) -> PerceptronState:
    return PerceptronState(np.zeros(d), 0)


def perceptron_update(state: PerceptronState, z, y: int) -> PerceptronState:
    """Conservative update: returns the state unchanged on a correct
    prediction, otherwise w + y z with the mistake counter bumped."""
    z = as_vector(z)
    if state.predict(z) == y:
        return state
    return PerceptronState(state.w + y * z, state.mistakes + 1)


def perceptron_model(state: PerceptronState) -> LinearModel:
    return LinearModel(state.w.copy())


# ---------------------------------------------------------------------------
# noise-tolerant trainers
# ---------------------------------------------------------------------------


def rcn_lambda(eps: float, gamma: float, eta: float) -> float:
    """Surrogate slope mix (eps*gamma/2 + eta) / (1 + eps*gamma); always lands
    in [eta, 1/2] for eta < 1/2."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if not (0.0 <= eta < 0.5):
        raise ValueError("eta must lie in [0, 0.5)")
    return (eps * gamma / 2.0 + eta) / (1.0 + eps * gamma)


def rcn_phi(s: float, lam: float, gamma: float) -> tuple[float, float]:
    """Piecewise-linear margin surrogate value and subgradient in s.

    Slope -lam/gamma above the margin, -(1-lam)/gamma at or below it; the
    boundary s == gamma uses the lower branch.
    """
    if s > gamma:
        return lam * (1.0 - s / gamma), -lam / gamma
    return (1.0 - lam) * (1.0 - s / gamma), -(1.0 - lam) / gamma


def mirror_step(w: np.ndarray, g: np.ndarray, step: float, q: float) -> np.ndarray:
    """One mirror-descent step under the half-squared-q-norm potential (q > 1),
    then the exact Bregman projection onto the unit q-ball (radial rescale)."""
    if q <= 1.0:
        raise InvalidNorm("mirror_step requires q > 1; q = 1 uses the simplex embedding")
    w = as_vector(w)
    p = q / (q - 1.0)
    nw = lp_norm(w, q)
    theta = np.sign(w) * np.abs(w) ** (q - 1.0) * nw ** (2.0 - q) if nw > 0 else np.zeros_like(w)
    theta = theta - step * np.asarray(g, dtype=float)
    nt = lp_norm(theta, p)
    w2 = np.sign(theta) * np.abs(theta) ** (p - 1.0) * nt ** (2.0 - p) if nt > 0 else np.zeros_like(theta)
    nq = lp_norm(w2, q)
    if nq > 1.0:
        w2 = w2 / nq
    return w2


@dataclass
class RcnConfig:
    gamma: float
    eta: float
    eps: float = 0.05
    q: float = 2.0
    steps: int | None = None  # None means 2n draws with replacement
    rng_seed: int = 0

    def __post_init__(self):
        if self.q < 1.0:
            raise InvalidNorm(f"q must be >= 1, got {self.q}")

    @property
    def lam(self) -> float:
        return rcn_lambda(self.eps, self.gamma, self.eta)


def _draw_indices(n: int, steps: int, seed: int, label: str) -> np.ndarray:
    from .data import substream

    return substream(seed, label).integers(0, n, size=steps)


def rcn_train_md(data: Dataset, cfg: RcnConfig) -> LinearModel:
    """Stochastic mirror descent on the flip-tolerant margin surrogate,
    constrained to the unit q-ball; returns the averaged iterate.

    The caller provides label-noisy data with ||x||_p <= 1; sampling is with
    replacement from the dataset, seeded.
    """
    if data.n == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    steps = cfg.steps if cfg.steps is not None else 2 * data.n
    idx = _draw_indices(data.n, steps, cfg.rng_seed, "rcn-md")
    X = np.ascontiguousarray(data.X)
    yf = data.y.astype(float)
    w = _kernels.md_rcn(X, yf, cfg.gamma, cfg.lam, float(cfg.q), idx)
    w = _nonzero_or_fallback(np.asarray(w), X.T @ yf)
    return LinearModel(w)


def glm_link_u(s: float, eta: float, gamma: float) -> float:
    """Monotone link: eta below -gamma, 1-eta above, linear in between."""
    if s < -gamma:
        return eta
    if s > gamma:
        return 1.0 - eta
    return (1.0 - 2.0 * eta) / (2.0 * gamma) * s + 0.5


def glm_loss(w: np.ndarray, x: np.ndarray, y01: float, eta: float, gamma: float) -> float:
    """Integral loss: antiderivative of the link at <w, x> minus y01 <w, x>.

    Piecewise quadratic; its gradient in w is (u(<w,x>) - y01) x.
    """
    s = float(np.asarray(w, dtype=float) @ np.asarray(x, dtype=float))
    slope = (1.0 - 2.0 * eta) / (2.0 * gamma)
    if -gamma <= s <= gamma:
        A = slope * s * s / 2.0 + s / 2.0
    elif s > gamma:
        A_g = slope * gamma * gamma / 2.0 + gamma / 2.0
        A = A_g + (1.0 - eta) * (s - gamma)
    else:
        A_mg = slope * gamma * gamma / 2.0 - gamma / 2.0
        A = A_mg + eta * (s + gamma)
    return A - y01 * s


@dataclass
class GlmConfig:
    gamma: float
    eta: float
    q: float = 2.0
    steps: int | None = None
    lr0: float | None = None  # None means 2 gamma / (1 - 2 eta)
    rng_seed: int = 0

    def __post_init__(self):
        if self.q < 1.0:
            raise InvalidNorm(f"q must be >= 1, got {self.q}")
        if not (0.0 <= self.eta < 0.5):
            raise ValueError("eta must lie in [0, 0.5)")


def glm_train(data: Dataset, cfg: GlmConfig) -> LinearModel:
    """Mirror descent on the link-integral loss; labels are mapped to {0,1}
    internally. Same constraint set and averaging as rcn_train_md."""
    if data.n == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    steps = cfg.steps if cfg.steps is not None else 2 * data.n
    lr0 = cfg.lr0 if cfg.lr0 is not None else 2.0 * cfg.gamma / (1.0 - 2.0 * cfg.eta)
    idx = _draw_indices(data.n, steps, cfg.rng_seed, "glm-md")
    X = np.ascontiguousarray(data.X)
    y01 = (data.y.astype(float) + 1.0) / 2.0
    w = _kernels.md_glm(X, y01, cfg.gamma, cfg.eta, float(cfg.q), lr0, idx)
    w = _nonzero_or_fallback(np.asarray(w), X.T @ data.y.astype(float))
    return LinearModel(w)
