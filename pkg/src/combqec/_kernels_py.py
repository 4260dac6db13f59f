"""Pure-numpy trajectory-stepping kernels.

Same contracts as the compiled versions in ``_kernels_cy``; selected at
import time by ``combqec.kernels``.
"""

import numpy as np


def propagate_until(props: np.ndarray, psi: np.ndarray, threshold: float):
    """Apply ``props[k]`` in sequence until the squared norm drops below ``threshold``.

    Returns ``(k, state)`` where ``state`` is the vector *before* the crossing
    step ``k``, so the caller can locate the crossing inside that step.  If the
    norm never crosses, returns ``(-1, final_state)``.
    """
    cur = np.array(psi, dtype=complex)
    for k in range(props.shape[0]):
        nxt = props[k] @ cur
        if np.vdot(nxt, nxt).real < threshold:
            return k, cur
        cur = nxt
    return -1, cur


def propagate_repeat_until(prop: np.ndarray, n_steps: int, psi: np.ndarray, threshold: float):
    """Like ``propagate_until`` with the same propagator applied ``n_steps`` times."""
    cur = np.array(psi, dtype=complex)
    for k in range(n_steps):
        nxt = prop @ cur
        if np.vdot(nxt, nxt).real < threshold:
            return k, cur
        cur = nxt
    return -1, cur


def apply_sequence(props: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Product of all propagators applied to ``psi`` (no norm monitoring)."""
    cur = np.array(psi, dtype=complex)
    for k in range(props.shape[0]):
        cur = props[k] @ cur
    return cur
