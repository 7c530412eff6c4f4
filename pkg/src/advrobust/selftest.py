"""Quick numerical self-checks: gradients against finite differences and
DeepFool against its closed form on affine classifiers."""

from __future__ import annotations

import numpy as np

from . import model as mlp
from .attacks import deepfool
from .model import MlpParams, MlpSpec, init_params, loss_and_grads
from .numcore import RngStream, finite_diff_grad, gradient_mismatch

SELFTEST_SEED = 20240601


def random_case(rng: RngStream, widths=None):
    """A random small network (biases perturbed off zero), input and label."""
    if widths is None:
        depth = 1 + rng.below(3)
        widths = [2 + rng.below(4) for _ in range(depth)] + [2 + rng.below(4)]
    spec = MlpSpec(tuple(widths))
    p = init_params(spec, rng.next_u64())
    for b in p.biases:
        b[:] = rng.uniform_array(b.size, -0.5, 0.5)
    x = rng.uniform_array(spec.input_dim)
    y = rng.below(spec.num_classes)
    return p, x, y


def gradient_check(p: MlpParams, x: np.ndarray, y: int, h: float = 1e-5) -> float:
    """Worst tolerance ratio over input and all parameter gradients (<= 1 passes)."""
    lg = loss_and_grads(p, x, y)
    worst = gradient_mismatch(lg.input_grad, finite_diff_grad(lambda v: loss_and_grads(p, v, y).loss, x, h))
    analytic = lg.weight_grads + lg.bias_grads
    targets = [("weights", i) for i in range(len(p.weights))] + [("biases", i) for i in range(len(p.biases))]
    for (kind, i), g in zip(targets, analytic):
        def f(v, kind=kind, i=i):
            q = p.copy()
            getattr(q, kind)[i] = v
            return loss_and_grads(q, x, y).loss

        worst = max(worst, gradient_mismatch(g, finite_diff_grad(f, getattr(p, kind)[i], h)))
    return worst


def affine_model(w: np.ndarray, b: np.ndarray) -> MlpParams:
    """Single-layer network computing ``w @ x + b``."""
    w = np.asarray(w, dtype=np.float64)
    return MlpParams(MlpSpec((w.shape[1], w.shape[0])), [w.copy()], [np.asarray(b, dtype=np.float64).copy()])


def deepfool_closed_form_check(rng: RngStream) -> tuple[float, float]:
    """``(max |r - r_closed|, boundary residual)`` on one random affine classifier."""
    d, c = 2 + rng.below(6), 2 + rng.below(4)
    w = rng.uniform_array(d * c, -1, 1).reshape(c, d)
    b = rng.uniform_array(c, -0.5, 0.5)
    p = affine_model(w, b)
    x = rng.uniform_array(d)
    z = w @ x + b
    k0 = int(np.argmax(z))
    diffs = [(abs(z[k] - z[k0]) / np.linalg.norm(w[k] - w[k0]), k) for k in range(c) if k != k0]
    _, ks = min(diffs)
    wk = w[ks] - w[k0]
    r_closed = abs(z[ks] - z[k0]) / np.dot(wk, wk) * wk
    res = deepfool(p, x, max_iter=1, overshoot=0.0, clip_lo=-np.inf, clip_hi=np.inf)
    r = res.x_adv - x
    z_adv = mlp.logits(p, res.x_adv)
    return float(np.max(np.abs(r - r_closed))), float(abs(z_adv[ks] - z_adv[k0]))


def run(n_grad: int = 20, n_deepfool: int = 10, echo=print) -> bool:
    rng = RngStream(SELFTEST_SEED)
    ok = True
    worst = max(gradient_check(*random_case(rng)) for _ in range(n_grad))
    passed = worst <= 1.0
    ok &= passed
    echo(f"{'PASS' if passed else 'FAIL'} gradients vs finite differences ({n_grad} cases, worst ratio {worst:.3g})")
    errs = [deepfool_closed_form_check(rng) for _ in range(n_deepfool)]
    r_err = max(e[0] for e in errs)
    resid = max(e[1] for e in errs)
    passed = r_err <= 1e-6 and resid <= 1e-9
    ok &= passed
    echo(f"{'PASS' if passed else 'FAIL'} DeepFool closed form ({n_deepfool} affine cases, "
         f"max step error {r_err:.3g}, max boundary residual {resid:.3g})")
    return ok
