"""Finite-difference gradient verification."""

import numpy as np


def check_gradients(build_loss, params, h=1e-5):
    """Max relative error between analytic and central-difference grads.

    `build_loss` is a zero-argument callable that reconstructs the graph
    and returns the scalar loss; it is re-evaluated with each parameter
    element perturbed by +-h. Relative error is
    |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
    """
    if h <= 0:
        raise ValueError(f"h must be > 0, got {h}")
    params = list(params)
    for p in params:
        p.zero_grad()
    loss = build_loss()
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]
    for p in params:
        p.zero_grad()

    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.data.reshape(-1)
        aflat = ana.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = build_loss().item()
            flat[i] = orig - h
            lm = build_loss().item()
            flat[i] = orig
            num = (lp - lm) / (2.0 * h)
            err = abs(aflat[i] - num) / (abs(aflat[i]) + abs(num) + 1e-12)
            if err > worst:
                worst = err
    return worst
