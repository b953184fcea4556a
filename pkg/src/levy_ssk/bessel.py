"""Logarithm of the order-zero modified Bessel function ``I0``."""
from __future__ import annotations

import math

SWITCH = 8.0


def log_i0(x: float) -> float:
    """``log I0(x)`` by power series below ``|x| = 8`` and the large-argument expansion above.

    The expansion is summed until its terms stop shrinking; at the switch
    point the smallest term is about 2e-8, which bounds the relative error.
    """
    x = abs(float(x))
    if x < SWITCH:
        q = 0.25 * x * x
        term, total, k = 1.0, 1.0, 0
        while term > 1e-17 * total:
            k += 1
            term *= q / (k * k)
            total += term
        return math.log(total)
    z = 1.0 / (8.0 * x)
    term, total, k = 1.0, 1.0, 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 * z / k
        if nxt >= term or nxt < 1e-17:
            break
        term = nxt
        total += term
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(total)
