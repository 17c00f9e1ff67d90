"""Synchronous recall dynamics and success scoring.

One update computes every neuron's local field from the *current* state and
thresholds all of them at once: s'_i = sign(h_i), with sign(0) = +1 by
convention so the map is total.  Iterating the map from a corrupted state
either reaches a fixed point (detected and stopped early) or runs for a
fixed step budget; recall succeeds when the final overlap with the target
pattern strictly exceeds the success threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import kernel_row
from .learning import DualModel, WeightModel
from .patterns import _check_state, overlap

__all__ = ["RecallTrace", "step", "run", "is_success"]


@dataclass(frozen=True, eq=False)
class RecallTrace:
    """Record of one recall run.

    ``overlaps`` holds the overlap with the target after 0, 1, ..., steps_run
    updates (length steps_run + 1).  ``reached_fixed_point`` marks whether the
    run stopped because an update left the state unchanged.
    """

    initial: np.ndarray
    final: np.ndarray
    overlaps: tuple
    steps_run: int
    reached_fixed_point: bool

    @property
    def final_overlap(self):
        return self.overlaps[-1]


def step(model, state):
    """One synchronous update of all neurons; returns the new state.

    Weight models use h = W s (the zero diagonal removes self-coupling);
    dual models use h = k(s)^T alpha with k(s) the kernel values between s
    and the stored patterns.  Ties h_i = 0 resolve to +1.
    """
    s = _check_state(state, n=model.n)
    if isinstance(model, WeightModel):
        h = model.w @ s.astype(np.float64)
    elif isinstance(model, DualModel):
        h = kernel_row(s, model.patterns, model.kernel) @ model.alpha
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    out = np.where(h >= 0.0, 1, -1).astype(np.int8)
    out.setflags(write=False)
    return out


def run(model, initial, target, max_steps=25):
    """Iterate :func:`step` from ``initial`` for at most ``max_steps`` updates.

    Stops as soon as a step returns the state unchanged (every later state
    would be identical).  The trace records the overlap with ``target``
    before any update and after each one.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    start = _check_state(initial, n=model.n, name="initial")
    goal = _check_state(target, n=model.n, name="target")
    state = start
    overlaps = [overlap(state, goal)]
    steps_run = 0
    fixed = False
    for _ in range(max_steps):
        new = step(model, state)
        steps_run += 1
        overlaps.append(overlap(new, goal))
        if np.array_equal(new, state):
            fixed = True
            state = new
            break
        state = new
    return RecallTrace(
        initial=start,
        final=state,
        overlaps=tuple(overlaps),
        steps_run=steps_run,
        reached_fixed_point=fixed,
    )


def is_success(trace, threshold=0.95):
    """True when the final overlap strictly exceeds ``threshold``.

    The inequality is strict: a run that ends exactly at the threshold does
    not count.  Requires 0 < threshold <= 1.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    return trace.final_overlap > threshold
