"""Radial profile factories shared by tests and verification families.

All profiles are callables r -> values; pair them with ``grid.sample``.
The log-Gaussian bump is the workhorse test function: smooth, effectively
supported on a controllable log-window, with spectral tails decaying like
e^{-c (log k)^2}, so it stays band-limited for every sector order.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

Profile = Callable[[np.ndarray], np.ndarray]


def log_gaussian_bump(center: float = 1.0, width: float = 0.4) -> Profile:
    """exp(-(log(r/center))^2 / (2 width^2)); width in e-folds."""
    lc = math.log(center)

    def f(r):
        x = (np.log(r) - lc) / width
        return np.exp(-0.5 * x * x)

    return f


def gaussian(scale: float = 1.0) -> Profile:
    """exp(-(r/scale)^2 / 2)."""
    return lambda r: np.exp(-0.5 * (r / scale) ** 2)


def dilate(profile: Profile, lam: float) -> Profile:
    """f(r / lam): stretches the profile by the factor lam."""
    return lambda r: profile(r / lam)


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x ** 4 * (35.0 - 84.0 * x + 70.0 * x ** 2 - 20.0 * x ** 3)


def ball_cutoff(inner: float = 0.5, outer: float = 1.0) -> Profile:
    """Radial plateau: 1 on [0, inner], smooth fall to 0 at outer."""

    def f(r):
        return 1.0 - _smoothstep((np.asarray(r, dtype=float) - inner) / (outer - inner))

    return f


def annulus_bump(center: float, halfwidth_efolds: float = 0.35) -> Profile:
    """Smooth bump concentrated on the annulus around |x| = center."""
    return log_gaussian_bump(center, halfwidth_efolds)


def power_with_taper(exponent: float, inner: float, outer: float) -> Profile:
    """r^exponent on [inner, outer], smoothly cut to zero outside (in log r).

    The taper spans half an e-fold beyond each end.
    """
    li, lo = math.log(inner), math.log(outer)

    def f(r):
        u = np.log(r)
        ramp_in = _smoothstep((u - (li - 0.5)) / 0.5)
        ramp_out = 1.0 - _smoothstep((u - lo) / 0.5)
        return r ** exponent * ramp_in * ramp_out

    return f


def hardy_kink_power(delta: float, lam: float) -> Profile:
    """r^{-lam+delta} for r <= 1, r^{-lam-delta} beyond: the sharp-Hardy
    near-optimizer with ratio of energies lam^2 + delta^2 exactly."""

    def f(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0, r ** (-lam + delta), r ** (-lam - delta))

    return f


def hardy_kink_power_derivative(delta: float, lam: float) -> Profile:
    def df(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0, (-lam + delta) * r ** (-lam + delta - 1.0),
                        (-lam - delta) * r ** (-lam - delta - 1.0))

    return df


def log_endpoint_profile(eps: float, lam: float) -> tuple[Profile, Profile]:
    """The endpoint witness u = r^{-lam} (log 1/r)^{-1/2} on [eps, 1/2].

    Returns (u, du/dr).  Inside r < eps the profile continues as the
    harmless power r^{-lam+1} (matched at eps); beyond 1/2 it tapers
    smoothly to zero by r = 1.  Quadratures of u, u', u/r stay finite and
    the divergence of the gradient energy as eps -> 0 is log log (1/eps).
    """
    if not (0 < eps < 0.25):
        raise ValueError("eps must sit well inside (0, 1/4)")
    ln2 = math.log(2.0)

    def base(rc):
        ell = np.log(1.0 / rc)
        return rc ** (-lam) * ell ** (-0.5)

    def dbase(rc):
        ell = np.log(1.0 / rc)
        return rc ** (-lam - 1.0) * ell ** (-0.5) * (-lam + 0.5 / ell)

    u_eps = float(base(np.array([eps]))[0])

    def taper(rc):
        return 1.0 - _smoothstep((np.log(rc) - math.log(0.5)) / ln2)

    def dtaper(rc):
        return -_smoothstep_derivative((np.log(rc) - math.log(0.5)) / ln2) / (rc * ln2)

    def u(r):
        r = np.asarray(r, dtype=float)
        rc = np.clip(r, eps, 1.0 - 1e-9)  # base is only consumed on [eps, 1)
        inner = u_eps * (r / eps) ** (-lam + 1.0)
        outer = base(rc) * taper(rc)
        return np.where(r < eps, inner, np.where(r >= 1.0, 0.0, outer))

    def du(r):
        r = np.asarray(r, dtype=float)
        rc = np.clip(r, eps, 1.0 - 1e-9)
        inner = u_eps * (-lam + 1.0) / eps * (r / eps) ** (-lam)
        outer = dbase(rc) * taper(rc) + base(rc) * dtaper(rc)
        return np.where(r < eps, inner, np.where(r >= 1.0, 0.0, outer))

    return u, du


def _smoothstep_derivative(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = (140.0 * xi ** 3 - 420.0 * xi ** 4 + 420.0 * xi ** 5 - 140.0 * xi ** 6)
    return out
