import numpy as np

from ..exceptions import ConfigurationError, UsageError


class Optimizer:
    kind = None

    def __init__(self, params, lr):
        self.params = list(params)
        if not lr > 0:
            raise ConfigurationError(f"learning rate must be > 0, got {lr!r}")
        self.lr = float(lr)
        self.step_count = 0

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        missing = [p.name or str(i) for i, p in enumerate(self.params) if p.grad is None]
        if missing:
            raise UsageError(f"no gradient for parameters {missing}; run backward() first")
        self._update()
        self.step_count += 1
        self.zero_grad()

    def _update(self):
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def __init__(self, params, lr=0.01, weight_decay=0.0):
        super().__init__(params, lr)
        self.weight_decay = weight_decay

    def _update(self):
        for p in self.params:
            g = p.grad + self.weight_decay * p.data if self.weight_decay else p.grad
            p.data -= self.lr * g


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        super().__init__(params, lr)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def _update(self):
        t = self.step_count + 1
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad + self.weight_decay * p.data if self.weight_decay else p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(kind, params, lr, weight_decay=0.0):
    if kind == "adam":
        return Adam(params, lr=lr, weight_decay=weight_decay)
    if kind == "sgd":
        return SGD(params, lr=lr, weight_decay=weight_decay)
    raise ConfigurationError(f"unknown optimizer {kind!r}")
