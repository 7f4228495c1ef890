"""First-order optimization: Adam with bias correction.

Defaults follow the conventional lr=1e-3, betas=(0.9, 0.999), eps=1e-8.
"""

import numpy as np

from .. import kernels


class Adam:
    """Per-parameter moment state plus the update step.

    `step()` applies one bias-corrected update to every parameter whose
    grad is populated, then zeroes all grads. A missing grad is treated
    as zero (the parameter does not move).
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self._m = [np.zeros(p.data.size) for p in self.params]
        self._v = [np.zeros(p.data.size) for p in self.params]

    def step(self):
        self.step_count += 1
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                continue
            flat = p.data.reshape(-1)
            kernels.adam_update(flat, p.grad.reshape(-1), m, v,
                                self.step_count, self.lr, self.beta1,
                                self.beta2, self.eps)
        self.zero_grad()

    def zero_grad(self):
        for p in self.params:
            p.grad = None
