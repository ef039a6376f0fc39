"""Heat-bath update probabilities of the Glauber dynamics."""

from __future__ import annotations

import numpy as np


def heat_bath_probs(n, beta, k, s_tilde):
    """Return ``(p_minus, p_zero, p_plus)`` for neighbour spin sum ``s_tilde``.

    Weights are ``exp(-2 beta K s/n)``, ``exp(beta - beta K/n)`` and
    ``exp(2 beta K s/n)``; the largest exponent is subtracted first.
    """
    s_tilde = np.asarray(s_tilde, dtype=float)
    field = 2.0 * beta * k * s_tilde / n
    middle = beta - beta * k / n
    top = np.maximum(np.abs(field), middle)
    w_minus = np.exp(-field - top)
    w_zero = np.exp(middle - top)
    w_plus = np.exp(field - top)
    total = w_minus + w_zero + w_plus
    return w_minus / total, w_zero / total, w_plus / total
