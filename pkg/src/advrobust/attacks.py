"""Adversarial example generators and a batch evaluation harness.

All attacks take one example ``x`` of shape ``(d,)`` or a batch ``(n, d)``
and return an :class:`AttackResult` whose fields are scalars or per-example
arrays accordingly. Examples in a batch never interact.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import model as mlp
from .datasets import Dataset
from .errors import ArgumentError, DegenerateGradientError
from .model import MlpParams
from .numcore import batch_norms, clip, sign

ATTACK_NAMES = ("fgsm", "step_ll", "iter_basic", "iter_ll", "deepfool", "cw")
BUDGETED = ("fgsm", "step_ll", "iter_basic", "iter_ll")


@dataclass(frozen=True)
class AttackBudget:
    """l-inf budget. ``step_size`` None means ``epsilon / steps``."""

    epsilon: float
    steps: int = 1
    step_size: Optional[float] = None
    clip_lo: float = 0.0
    clip_hi: float = 1.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ArgumentError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.steps < 1:
            raise ArgumentError(f"steps must be >= 1, got {self.steps}")
        if self.step_size is not None and self.step_size < 0:
            raise ArgumentError(f"step_size must be >= 0, got {self.step_size}")
        if self.clip_lo > self.clip_hi:
            raise ArgumentError("clip_lo > clip_hi")

    @property
    def alpha(self) -> float:
        return self.epsilon / self.steps if self.step_size is None else self.step_size

    def with_epsilon(self, epsilon: float) -> "AttackBudget":
        return replace(self, epsilon=float(epsilon))


@dataclass(frozen=True)
class CwConfig:
    c: float = 1.0
    confidence: float = 0.0
    steps: int = 200
    learning_rate: float = 0.01
    binary_search_steps: int = 6
    clip_lo: float = 0.0
    clip_hi: float = 1.0
    box_shrink: float = 1e-6

    def __post_init__(self):
        if not self.c > 0 or self.confidence < 0 or self.steps < 1 or self.binary_search_steps < 0:
            raise ArgumentError(f"invalid C&W config {self}")


@dataclass
class AttackResult:
    x_adv: np.ndarray
    success: object  # bool or (n,) bool array: top-1 prediction != y_true
    l2: object
    linf: object
    iterations_used: object
    prediction: object = None


def _finish(p: MlpParams, x, x_adv, y_true, iterations, single: bool) -> AttackResult:
    pred = mlp.predict(p, x_adv)
    y = np.atleast_1d(y_true)
    l2, linf = batch_norms(np.atleast_2d(x_adv) - np.atleast_2d(x))
    success = np.atleast_1d(pred) != y
    iterations = np.broadcast_to(np.asarray(iterations), success.shape).copy()
    if single:
        return AttackResult(
            x_adv, bool(success[0]), float(l2[0]), float(linf[0]), int(iterations[0]), int(pred)
        )
    return AttackResult(x_adv, success, l2, linf, iterations, pred)


def _prepare(x, y):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    y = np.asarray(y, dtype=np.int64)
    if not single:
        y = np.broadcast_to(y, (x.shape[0],))
    return x, y, single


def fgsm(p: MlpParams, x, y_true, budget: AttackBudget) -> AttackResult:
    """One signed-gradient step up the true-class loss."""
    x, y, single = _prepare(x, y_true)
    g = mlp.input_gradient(p, x, y)
    x_adv = clip(x + budget.epsilon * sign(g), budget.clip_lo, budget.clip_hi)
    return _finish(p, x, x_adv, y, 1, single)


def step_ll(p: MlpParams, x, budget: AttackBudget, y_true=None) -> AttackResult:
    """One signed-gradient step down the loss of the least-likely class.

    ``y_true`` is only used to score success; without it success means the
    prediction moved away from the clean prediction.
    """
    x, _, single = _prepare(x, 0)
    y_ll = mlp.least_likely_class(p, x)
    g = mlp.input_gradient(p, x, y_ll)
    x_adv = clip(x - budget.epsilon * sign(g), budget.clip_lo, budget.clip_hi)
    if y_true is None:
        y_true = mlp.predict(p, x)
    return _finish(p, x, x_adv, np.asarray(y_true, dtype=np.int64), 1, single)


def iter_attack(p: MlpParams, x, y_true, budget: AttackBudget, mode: str = "basic") -> AttackResult:
    """``budget.steps`` steps of size alpha, projected onto the epsilon ball.

    ``mode="basic"`` climbs the true-class loss; ``"least_likely"`` descends
    the loss of the class that is least likely at the clean input. The
    target stays fixed: re-choosing it at every iterate makes the attack
    chase whichever class it just moved away from.
    """
    if mode not in ("basic", "least_likely"):
        raise ArgumentError(f"unknown iterative mode {mode!r}")
    alpha = budget.alpha
    if alpha > budget.epsilon:
        raise ArgumentError(f"step size {alpha} exceeds epsilon {budget.epsilon}")
    x, y, single = _prepare(x, y_true)
    lo, hi = x - budget.epsilon, x + budget.epsilon
    x_adv = x.copy()
    y_ll = mlp.least_likely_class(p, x) if mode == "least_likely" else None
    for _ in range(budget.steps):
        if mode == "basic":
            step = alpha * sign(mlp.input_gradient(p, x_adv, y))
        else:
            step = -alpha * sign(mlp.input_gradient(p, x_adv, y_ll))
        x_adv = np.minimum(np.maximum(x_adv + step, lo), hi)
        x_adv = clip(x_adv, budget.clip_lo, budget.clip_hi)
    return _finish(p, x, x_adv, y, budget.steps, single)


def deepfool(
    p: MlpParams,
    x,
    max_iter: int = 50,
    overshoot: float = 0.02,
    clip_lo: float = 0.0,
    clip_hi: float = 1.0,
    y_true=None,
) -> AttackResult:
    """Multiclass l2 DeepFool.

    Linearizes the logits around the current iterate and steps to the
    nearest linearized boundary of the originally predicted class. The
    label check and the final point use ``x + (1 + overshoot) * r_total``.
    ``success`` is scored against ``y_true`` when given, else against the
    clean prediction.
    """
    if max_iter < 1:
        raise ArgumentError(f"max_iter must be >= 1, got {max_iter}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    n = x2.shape[0]
    k0 = mlp.predict(p, x2)
    r_tot = np.zeros_like(x2)
    iters = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        x_cur = x2 + (1.0 + overshoot) * r_tot
        z = mlp.logits(p, x_cur)
        active &= np.argmax(z, axis=1) == k0
        if not active.any():
            break
        idx = np.flatnonzero(active)
        jac = mlp.logit_jacobian(p, x2[idx] + r_tot[idx])
        z_act = mlp.logits(p, x2[idx] + r_tot[idx])
        k_act = k0[idx]
        f = z_act - z_act[np.arange(idx.size), k_act][:, None]  # (m, C)
        w = jac - jac[np.arange(idx.size), k_act][:, None, :]  # (m, C, d)
        wnorm = np.sqrt(np.einsum("mcd,mcd->mc", w, w))
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.abs(f) / wnorm
        dist[np.arange(idx.size), k_act] = np.inf
        dist[wnorm == 0.0] = np.inf
        if np.any(np.all(np.isinf(dist), axis=1)):
            bad = idx[np.all(np.isinf(dist), axis=1)]
            raise DegenerateGradientError(
                f"all logit-difference gradients vanish for example(s) {bad.tolist()}"
            )
        k_star = np.argmin(dist, axis=1)
        m_rows = np.arange(idx.size)
        f_star = np.abs(f[m_rows, k_star])
        w_star = w[m_rows, k_star]
        # already sitting on a boundary: no further progress is possible
        moving = f_star > 0.0
        step = (f_star / wnorm[m_rows, k_star] ** 2)[:, None] * w_star
        r_tot[idx[moving]] += step[moving]
        iters[idx[moving]] += 1
        active[idx[~moving]] = False
    x_adv = clip(x2 + (1.0 + overshoot) * r_tot, clip_lo, clip_hi)
    y_ref = k0 if y_true is None else np.broadcast_to(np.asarray(y_true, dtype=np.int64), (n,))
    if single:
        return _finish(p, x, x_adv[0], y_ref[:1], iters[:1], True)
    return _finish(p, x2, x_adv, y_ref, iters, False)


def cw_margin(z: np.ndarray, y, confidence: float = 0.0) -> np.ndarray:
    """Hinge ``max(Z_y - max_{i != y} Z_i, -confidence)`` per example."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    rows = np.arange(z.shape[0])
    zy = z[rows, y]
    other = z.copy()
    other[rows, y] = -np.inf
    return np.maximum(zy - other.max(axis=1), -confidence)


def cw_l2(p: MlpParams, x, y_true, cfg: CwConfig = CwConfig()) -> AttackResult:
    """Carlini-Wagner l2 attack through the tanh box reparameterization.

    Optimizes ``||x' - x||^2 + c * hinge(Z(x'))`` over ``w`` with
    ``x' = lo + (hi - lo) * (tanh(w) + 1) / 2`` using Adam, with a per-example
    binary search on ``c``. Keeps the lowest-l2 misclassified candidate seen;
    examples never misclassified return the final iterate of the last round.
    """
    x, y, single = _prepare(x, y_true)
    x2 = np.atleast_2d(x)
    y = np.atleast_1d(y)
    n = x2.shape[0]
    lo, hi = cfg.clip_lo, cfg.clip_hi
    half = (hi - lo) / 2.0
    unit = np.clip((x2 - lo) / (hi - lo), cfg.box_shrink, 1.0 - cfg.box_shrink)
    w0 = np.arctanh(2.0 * unit - 1.0)
    rows = np.arange(n)
    onehot_y = np.zeros((n, p.spec.num_classes))
    onehot_y[rows, y] = 1.0

    c = np.full(n, float(cfg.c))
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    best_l2 = np.full(n, np.inf)
    best_x = x2.copy()
    last_x = x2.copy()
    rounds = max(1, cfg.binary_search_steps)
    beta1, beta2, eps_adam = 0.9, 0.999, 1e-8
    for _ in range(rounds):
        w = w0.copy()
        m = np.zeros_like(w)
        v = np.zeros_like(w)
        round_success = np.zeros(n, dtype=bool)
        for t in range(1, cfg.steps + 1):
            th = np.tanh(w)
            xp = lo + half * (th + 1.0)
            trace = mlp.forward(p, xp)
            z = trace.pre_activations[-1]
            # track candidates before stepping
            pred = np.argmax(z, axis=1)
            diff = xp - x2
            l2sq = np.einsum("ij,ij->i", diff, diff)
            ok = pred != y
            round_success |= ok
            better = ok & (l2sq < best_l2)
            best_l2[better] = l2sq[better]
            best_x[better] = xp[better]
            # hinge gradient: c * (e_y - e_j*) where the hinge is active
            other = z.copy()
            other[rows, y] = -np.inf
            j_star = np.argmax(other, axis=1)
            margin = z[rows, y] - other[rows, j_star]
            active = margin > -cfg.confidence
            g_logits = onehot_y.copy()
            g_logits[rows, j_star] -= 1.0
            g_logits *= (c * active)[:, None]
            g_x = 2.0 * diff + mlp.backward(p, trace, g_logits)[2]
            g_w = g_x * half * (1.0 - th * th)
            m = beta1 * m + (1 - beta1) * g_w
            v = beta2 * v + (1 - beta2) * g_w * g_w
            m_hat = m / (1 - beta1**t)
            v_hat = v / (1 - beta2**t)
            w = w - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps_adam)
        xp = lo + half * (np.tanh(w) + 1.0)
        pred = mlp.predict(p, xp)
        diff = xp - x2
        l2sq = np.einsum("ij,ij->i", diff, diff)
        ok = pred != y
        round_success |= ok
        better = ok & (l2sq < best_l2)
        best_l2[better] = l2sq[better]
        best_x[better] = xp[better]
        last_x = xp
        if cfg.binary_search_steps == 0:
            break
        upper = np.where(round_success, np.minimum(upper, c), upper)
        lower = np.where(round_success, lower, np.maximum(lower, c))
        c = np.where(np.isfinite(upper), (lower + upper) / 2.0, c * 10.0)
    found = np.isfinite(best_l2)
    x_adv = np.where(found[:, None], best_x, last_x)
    total_steps = rounds * cfg.steps
    if single:
        return _finish(p, x, x_adv[0], y[:1], total_steps, True)
    return _finish(p, x2, x_adv, y, total_steps, False)


# ----------------------------------------------------------- evaluation


@dataclass(frozen=True)
class AttackSpec:
    """Which attack to run, with everything it needs."""

    name: str
    budget: AttackBudget = AttackBudget(0.0)
    cw: CwConfig = CwConfig()
    deepfool_max_iter: int = 50
    deepfool_overshoot: float = 0.02

    def __post_init__(self):
        if self.name not in ATTACK_NAMES:
            raise ArgumentError(f"unknown attack {self.name!r}; expected one of {ATTACK_NAMES}")

    def with_epsilon(self, epsilon: float) -> "AttackSpec":
        return replace(self, budget=self.budget.with_epsilon(epsilon))


def run_attack(p: MlpParams, x, y, spec: AttackSpec) -> AttackResult:
    b = spec.budget
    if spec.name == "fgsm":
        return fgsm(p, x, y, b)
    if spec.name == "step_ll":
        return step_ll(p, x, b, y_true=y)
    if spec.name == "iter_basic":
        return iter_attack(p, x, y, b, "basic")
    if spec.name == "iter_ll":
        return iter_attack(p, x, y, b, "least_likely")
    if spec.name == "deepfool":
        return deepfool(
            p, x, spec.deepfool_max_iter, spec.deepfool_overshoot, b.clip_lo, b.clip_hi, y_true=y
        )
    return cw_l2(p, x, y, spec.cw)


@dataclass
class AttackReport:
    """Aggregate outcome of one attack over a dataset.

    ``success_rate`` is measured on the cleanly-correct examples, so it
    equals ``1 - clean_correct_adv_top1``; ``success_rate_all`` counts every
    example whose adversarial top-1 is wrong (``1 - adv_top1``). Top-5
    fields are None when there are fewer than 6 classes.
    """

    attack: str
    epsilon: Optional[float]
    n: int
    clean_top1: float
    clean_top5: Optional[float]
    adv_top1: float
    adv_top5: Optional[float]
    clean_correct: int
    clean_correct_adv_top1: float
    success_rate: float
    success_rate_all: float
    median_l2: float
    mean_l2: float
    median_linf: float
    mean_linf: float
    per_example: Optional[AttackResult] = field(default=None, repr=False, compare=False)

    def summary(self) -> dict:
        d = asdict(replace(self, per_example=None))
        d.pop("per_example")
        return d


def evaluate_attack(p: MlpParams, data: Dataset, spec: AttackSpec, keep_examples=False) -> AttackReport:
    if len(data) == 0:
        raise ArgumentError("cannot evaluate an attack on an empty dataset")
    x, y = data.features, data.labels
    top5 = p.spec.num_classes >= 6
    z_clean = mlp.logits(p, x)
    clean1 = mlp.topk_correct(z_clean, y, 1)
    res = run_attack(p, x, y, spec)
    z_adv = mlp.logits(p, res.x_adv)
    adv1 = mlp.topk_correct(z_adv, y, 1)
    n_correct = int(clean1.sum())
    cc_adv = float(adv1[clean1].mean()) if n_correct else 0.0
    return AttackReport(
        attack=spec.name,
        epsilon=float(spec.budget.epsilon) if spec.name in BUDGETED else None,
        n=len(data),
        clean_top1=float(clean1.mean()),
        clean_top5=float(mlp.topk_correct(z_clean, y, 5).mean()) if top5 else None,
        adv_top1=float(adv1.mean()),
        adv_top5=float(mlp.topk_correct(z_adv, y, 5).mean()) if top5 else None,
        clean_correct=n_correct,
        clean_correct_adv_top1=cc_adv,
        success_rate=1.0 - cc_adv if n_correct else 0.0,
        success_rate_all=float(1.0 - adv1.mean()),
        median_l2=float(np.median(res.l2)),
        mean_l2=float(np.mean(res.l2)),
        median_linf=float(np.median(res.linf)),
        mean_linf=float(np.mean(res.linf)),
        per_example=res if keep_examples else None,
    )
