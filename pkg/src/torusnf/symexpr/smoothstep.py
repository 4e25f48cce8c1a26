"""C-infinity bump built from exp(-1/t), with derivatives of any order.

Derivatives are obtained by Taylor-mode (jet) arithmetic rather than by
closed forms, so every order costs the same code path.
"""
from __future__ import annotations

from math import factorial

import numpy as np

# below this argument exp(-1/u) and all its derivatives vanish in double precision
_FLAT = 1.0 / 600.0


def _flat_jet(u: np.ndarray, order: int, sign: float) -> np.ndarray:
    """Taylor coefficients of u -> exp(-1/u) at u (sign=+1) or of the mirrored
    function h -> exp(-1/(u - h)) (sign=-1)."""
    n = order + 1
    out = np.zeros((n, u.size))
    live = u > _FLAT
    if not np.any(live):
        return out
    u0 = u[live]
    inv = 1.0 / u0
    g = np.empty((n, u0.size))
    for m in range(n):
        g[m] = -((-sign) ** m) * inv ** (m + 1)
    e = np.empty_like(g)
    e[0] = np.exp(g[0])
    for m in range(1, n):
        acc = np.zeros(u0.size)
        for j in range(1, m + 1):
            acc += j * g[j] * e[m - j]
        e[m] = acc / m
    out[:, live] = e
    return out


def smoothstep_jet(u: np.ndarray, order: int) -> np.ndarray:
    """Derivatives S^{(m)}(u), m = 0..order, of the step S rising from 0 on
    u <= 0 to 1 on u >= 1.  Returns shape (order + 1, len(u))."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    uc = np.clip(u, 0.0, 1.0)
    f = _flat_jet(uc, order, 1.0)
    g = _flat_jet(1.0 - uc, order, -1.0)
    den = f + g
    q = np.zeros_like(f)
    q[0] = f[0] / den[0]
    for m in range(1, order + 1):
        acc = f[m].copy()
        for j in range(1, m + 1):
            acc -= den[j] * q[m - j]
        q[m] = acc / den[0]
    for m in range(order + 1):
        q[m] *= factorial(m)
    # outside (0, 1) the step is constant
    outside = (u <= 0.0) | (u >= 1.0)
    q[1:, outside] = 0.0
    q[0, u <= 0.0] = 0.0
    q[0, u >= 1.0] = 1.0
    return q


def bump_derivative(t, gamma: float, order: int) -> np.ndarray:
    """n-th derivative of the even bump chi: 1 on [-gamma, gamma], 0 outside
    [-2 gamma, 2 gamma]."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = np.abs(t)
    out = np.zeros_like(a) if order else np.ones_like(a)
    band = (a > gamma) & (a < 2.0 * gamma)
    if order == 0:
        out[a >= 2.0 * gamma] = 0.0
    if np.any(band):
        u = (a[band] - gamma) / gamma
        s = smoothstep_jet(u, order)[order]
        if order == 0:
            out[band] = 1.0 - s
        else:
            sgn = np.sign(t[band]) ** order
            out[band] = -s * sgn / gamma ** order
    return out


def bump(t, gamma: float):
    """chi(t) for scalars or arrays."""
    scalar = np.ndim(t) == 0
    v = bump_derivative(t, gamma, 0)
    return float(v[0]) if scalar else v
