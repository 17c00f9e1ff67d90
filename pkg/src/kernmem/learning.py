"""Learning rules for bipolar associative memories.

Four rules produce recall-ready models from a pattern set:

* ``hebbian``  -- outer-product weights W = X^T X / N with zero diagonal.
* ``llr``      -- per-neuron logistic regression on the raw states, trained
                  by full-batch gradient descent (N independent problems).
* ``klr``      -- kernel logistic regression in the dual: one matrix
                  recurrence updates all P x N dual coefficients per sweep.
* ``krr``      -- kernel ridge regression; the dual coefficients solve the
                  single linear system (K + lam*I) A = X in closed form.

The two weight-based rules yield a :class:`WeightModel` (an N x N matrix);
the two kernel rules yield a :class:`DualModel` (coefficients over the
stored patterns plus the kernel configuration needed to evaluate them).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import KernelConfig, gram_matrix, solve_regularized
from .patterns import PatternSet, _atomic_write_text

__all__ = [
    "RULES",
    "TrainConfig",
    "WeightModel",
    "DualModel",
    "NonFiniteLossError",
    "binary_targets",
    "train_hebbian",
    "train_llr",
    "train_klr",
    "train_krr",
    "train_rule",
    "save_model",
    "load_model",
]

#: Canonical rule ordering used for reports, CSV output, and plots.
RULES = ("hebbian", "llr", "klr", "krr")

_WEIGHT_RULES = ("hebbian", "llr")
_DUAL_RULES = ("klr", "krr")


class NonFiniteLossError(FloatingPointError):
    """An optimization iterate produced NaN or Inf (step size too large)."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by the learning rules.

    ``gamma=None`` resolves to 1/N at training time, scaling the kernel
    width with the state dimension.  The defaults reproduce the benchmark
    operating point used throughout the experiment suite.
    """

    lam: float = 0.01
    eta: float = 0.1
    llr_iters: int = 100
    klr_iters: int = 200
    gamma: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"lam must be finite and > 0, got {self.lam}")
        if not (np.isfinite(self.eta) and self.eta > 0.0):
            raise ValueError(f"eta must be finite and > 0, got {self.eta}")
        if self.llr_iters < 0 or self.klr_iters < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.gamma is not None and not (np.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be finite and > 0 when set, got {self.gamma}")

    def resolve_gamma(self, n):
        """Kernel width actually used for an n-dimensional pattern set."""
        return self.gamma if self.gamma is not None else 1.0 / n


@dataclass(frozen=True, eq=False)
class WeightModel:
    """Recall model defined by an N x N weight matrix with zero diagonal.

    ``lam`` records the regularization strength used during training (0 for
    the Hebbian rule, which has none); it is provenance only and does not
    affect recall.
    """

    w: np.ndarray
    rule: str
    lam: float = 0.0
    loss_history: np.ndarray | None = None

    def __post_init__(self):
        if self.rule not in _WEIGHT_RULES:
            raise ValueError(f"rule must be one of {_WEIGHT_RULES}, got {self.rule!r}")
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weight matrix has non-finite entries")
        if np.any(w.diagonal() != 0.0):
            raise ValueError("weight matrix diagonal must be exactly zero")
        if self.rule == "hebbian" and not np.array_equal(w, w.T):
            raise ValueError("hebbian weights must be exactly symmetric")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self):
        return self.w.shape[0]


@dataclass(frozen=True, eq=False)
class DualModel:
    """Recall model defined by dual coefficients over the stored patterns.

    The local field at state s is h = k(s)^T alpha with k(s) the vector of
    kernel values between s and each stored pattern, so the model must carry
    the training patterns and kernel configuration alongside alpha.
    """

    patterns: PatternSet
    alpha: np.ndarray
    kernel: KernelConfig
    rule: str
    lam: float = 0.0
    loss_history: np.ndarray | None = None

    def __post_init__(self):
        if self.rule not in _DUAL_RULES:
            raise ValueError(f"rule must be one of {_DUAL_RULES}, got {self.rule!r}")
        alpha = np.asarray(self.alpha, dtype=np.float64)
        expected = (self.patterns.p, self.patterns.n)
        if alpha.shape != expected:
            raise ValueError(f"alpha must have shape {expected}, got {alpha.shape}")
        if not np.all(np.isfinite(alpha)):
            raise ValueError("alpha has non-finite entries")
        alpha = alpha.copy()
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self):
        return self.patterns.n

    @property
    def p(self):
        return self.patterns.p


def binary_targets(pattern_set):
    """Map the bipolar patterns to {0, 1} classification targets, (X+1)/2."""
    return (pattern_set.data.astype(np.float64) + 1.0) / 2.0


def _sigmoid(h):
    """Numerically stable logistic function, exact at h = +-inf."""
    out = np.empty_like(h, dtype=np.float64)
    pos = h >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-h[pos]))
    ez = np.exp(h[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_hebbian(pattern_set):
    """Outer-product weights W = X^T X / N with the diagonal zeroed.

    One-shot and hyperparameter-free; W is exactly symmetric because the
    accumulation over +-1 entries is exact in float64.
    """
    x = pattern_set.data.astype(np.float64)
    w = (x.T @ x) / pattern_set.n
    np.fill_diagonal(w, 0.0)
    return WeightModel(w=w, rule="hebbian")


def train_llr(pattern_set, config=None, record_loss=False):
    """Per-neuron logistic regression on the stored patterns.

    Neuron i is a binary classifier predicting target t_i = (xi_i + 1)/2 from
    the full state; its weight row follows full-batch gradient descent

        w_i <- w_i - (eta / P) * (X^T (sigma(X w_i) - t_i) + lam * w_i)

    for ``llr_iters`` steps from zero, with the self-coupling w_ii clamped to
    zero after every step.  The N problems are independent and are solved one
    neuron at a time.

    With ``record_loss=True`` the returned model carries ``loss_history`` of
    shape (llr_iters, N): the regularized logistic loss of each neuron's
    iterate, evaluated before each step.
    """
    cfg = config if config is not None else TrainConfig()
    x = pattern_set.data.astype(np.float64)
    p, n = x.shape
    targets = binary_targets(pattern_set)
    step = cfg.eta / p
    w = np.zeros((n, n))
    losses = np.zeros((cfg.llr_iters, n)) if record_loss else None
    for i in range(n):
        wi = np.zeros(n)
        ti = targets[:, i]
        for it in range(cfg.llr_iters):
            h = x @ wi
            if record_loss:
                losses[it, i] = (
                    np.sum(np.logaddexp(0.0, h) - ti * h) + 0.5 * cfg.lam * (wi @ wi)
                )
            wi -= step * (x.T @ (_sigmoid(h) - ti) + cfg.lam * wi)
            wi[i] = 0.0
        if not np.all(np.isfinite(wi)):
            raise NonFiniteLossError(
                f"non-finite weights for neuron {i}; reduce eta (got {cfg.eta})"
            )
        w[i] = wi
    return WeightModel(w=w, rule="llr", lam=cfg.lam, loss_history=losses)


def train_klr(pattern_set, config=None, record_loss=False):
    """Kernel logistic regression trained by one matrix recurrence.

    All N output units share the Gram matrix K, so the full P x N dual
    coefficient block updates jointly:

        A <- A - eta * ((sigma(K A) - T) + lam * A)

    from A = 0, where T = (X+1)/2.  The parenthesized term is the gradient of
    the dual-regularized logistic loss preconditioned by K^-1; keeping the
    per-pattern residual unscaled makes the effective step size independent
    of P, which is what lets a few hundred sweeps reach full recall even at
    loads near P = 1.5 N.

    ``loss_history`` (when recorded) has shape (klr_iters, N): per-unit
    regularized logistic loss at each iterate, before the step.
    """
    cfg = config if config is not None else TrainConfig()
    kcfg = KernelConfig(gamma=cfg.resolve_gamma(pattern_set.n))
    k = gram_matrix(pattern_set, kcfg)
    targets = binary_targets(pattern_set)
    alpha = np.zeros((pattern_set.p, pattern_set.n))
    losses = np.zeros((cfg.klr_iters, pattern_set.n)) if record_loss else None
    for it in range(cfg.klr_iters):
        h = k @ alpha
        if record_loss:
            losses[it] = (
                np.sum(np.logaddexp(0.0, h) - targets * h, axis=0)
                + 0.5 * cfg.lam * np.sum(alpha * h, axis=0)
            )
        alpha -= cfg.eta * ((_sigmoid(h) - targets) + cfg.lam * alpha)
        if not np.all(np.isfinite(alpha)):
            raise NonFiniteLossError(
                f"non-finite dual coefficients at sweep {it}; reduce eta (got {cfg.eta})"
            )
    return DualModel(
        patterns=pattern_set,
        alpha=alpha,
        kernel=kcfg,
        rule="klr",
        lam=cfg.lam,
        loss_history=losses,
    )


def train_krr(pattern_set, config=None):
    """Kernel ridge regression: solve (K + lam*I) A = X in closed form.

    The bipolar states themselves are the regression targets.  A single
    Cholesky solve replaces iterative optimization, which is why this rule's
    training time is dominated by building K and factoring one P x P matrix.
    The returned coefficients satisfy the system to a relative residual of
    1e-8 or better.
    """
    cfg = config if config is not None else TrainConfig()
    kcfg = KernelConfig(gamma=cfg.resolve_gamma(pattern_set.n))
    k = gram_matrix(pattern_set, kcfg)
    alpha = solve_regularized(k, cfg.lam, pattern_set.data.astype(np.float64))
    return DualModel(patterns=pattern_set, alpha=alpha, kernel=kcfg, rule="krr", lam=cfg.lam)


def train_rule(rule, pattern_set, config=None):
    """Train ``pattern_set`` under the named rule; see :data:`RULES`."""
    if rule == "hebbian":
        return train_hebbian(pattern_set)
    if rule == "llr":
        return train_llr(pattern_set, config)
    if rule == "klr":
        return train_klr(pattern_set, config)
    if rule == "krr":
        return train_krr(pattern_set, config)
    raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")


def _format_matrix(matrix):
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in matrix)


def save_model(model, path):
    """Serialize a trained model as text.

    Layout: a header line ``rule n p lam gamma`` followed by the model matrix
    in row-major order (one row per line, shortest round-trip float repr).
    Weight models write p = 0 and gamma = 0.0 since they retain neither the
    training set nor a kernel; dual models append the stored pattern set in
    the same format written by :func:`save_patterns`.
    """
    if isinstance(model, WeightModel):
        header = f"{model.rule} {model.n} 0 {float(model.lam)!r} 0.0"
        _atomic_write_text(path, header + "\n" + _format_matrix(model.w) + "\n")
        return
    if isinstance(model, DualModel):
        header = (
            f"{model.rule} {model.n} {model.p} "
            f"{float(model.lam)!r} {float(model.kernel.gamma)!r}"
        )
        pattern_rows = "\n".join(
            " ".join("1" if v > 0 else "-1" for v in row) for row in model.patterns.data
        )
        body = (
            _format_matrix(model.alpha)
            + f"\n{model.patterns.n} {model.patterns.p}\n"
            + pattern_rows
        )
        _atomic_write_text(path, header + "\n" + body + "\n")
        return
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _parse_float_rows(lines, count, width, what):
    if len(lines) < count:
        raise ValueError(f"model file truncated: expected {count} {what} rows")
    rows = np.empty((count, width))
    for r in range(count):
        parts = lines[r].split()
        if len(parts) != width:
            raise ValueError(
                f"{what} row {r} has {len(parts)} entries, expected {width}"
            )
        rows[r] = [float(t) for t in parts]
    return rows


def load_model(path):
    """Inverse of :func:`save_model`; returns a WeightModel or DualModel."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().split("\n")]
    header = lines[0].split()
    if len(header) != 5:
        raise ValueError(f"model header must have 5 fields, got {len(header)}")
    rule, n_text, p_text, lam_text, gamma_text = header
    n, p = int(n_text), int(p_text)
    lam, gamma = float(lam_text), float(gamma_text)
    body = lines[1:]
    if rule in _WEIGHT_RULES:
        w = _parse_float_rows(body, n, n, "weight")
        return WeightModel(w=w, rule=rule, lam=lam)
    if rule in _DUAL_RULES:
        alpha = _parse_float_rows(body, p, n, "coefficient")
        footer = body[p].split()
        if len(footer) != 2 or int(footer[0]) != n or int(footer[1]) != p:
            raise ValueError("embedded pattern header does not match model header")
        data = np.empty((p, n), dtype=np.int8)
        for r in range(p):
            data[r] = [int(t) for t in body[p + 1 + r].split()]
        return DualModel(
            patterns=PatternSet(data),
            alpha=alpha,
            kernel=KernelConfig(gamma=gamma),
            rule=rule,
            lam=lam,
        )
    raise ValueError(f"unknown rule {rule!r} in model header")
