"""Special functions for the sector spectral calculus.

Bessel J_nu / I_nu (real order nu >= 0), the Gamma function, and Gegenbauer
polynomials for zonal kernel assembly.  J, I and Gamma are backed by
scipy.special; I_nu additionally gets a log-space series fallback so that
sector heat kernels can be evaluated at order/argument combinations where
the scaled scipy value underflows (large nu, moderate z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, ive, jv

from .errors import ParameterError


@dataclass(frozen=True)
class BesselOrder:
    """Real Bessel order; the calculus only ever needs the nonnegative root."""

    nu: float

    def __post_init__(self):
        if not (self.nu >= 0):
            raise ParameterError(f"Bessel order must be >= 0, got {self.nu}")


def _order(nu) -> float:
    return nu.nu if isinstance(nu, BesselOrder) else float(nu)


def bessel_j(nu, x):
    """J_nu(x) for x >= 0 (scalar or array)."""
    v = _order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ParameterError("bessel_j requires x >= 0")
    out = jv(v, xa)
    return float(out) if np.isscalar(x) else out


class ScaledBesselI(NamedTuple):
    """I_nu(x) in overflow-safe form: I = scaled * exp(exponent)."""

    scaled: float
    exponent: float


def bessel_i(nu, x) -> ScaledBesselI:
    """Scaled modified Bessel function: (e^{-x} I_nu(x), x)."""
    v = _order(nu)
    if x < 0:
        raise ParameterError("bessel_i requires x >= 0")
    return ScaledBesselI(float(ive(v, x)), float(x))


def log_bessel_i_scaled(nu, z: np.ndarray) -> np.ndarray:
    """log(e^{-z} I_nu(z)) elementwise, stable across all regimes.

    scipy's ``ive`` underflows when nu is large relative to z (the value is
    ~ (z/2)^nu / Gamma(nu+1) * e^{-z}); in that regime the power series in
    log space takes over.  Series and scipy agree to ~1e-13 in the overlap.
    """
    v = _order(nu)
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, -np.inf)
    pos = z > 0

    with np.errstate(divide="ignore"):
        direct = np.log(ive(v, z[pos]))
    # series whenever the argument is small relative to the order
    use_series = (z[pos] < 0.5 * (v + 1.0)) | ~np.isfinite(direct)
    if np.any(use_series):
        zs = z[pos][use_series]
        q = 0.25 * zs * zs
        term = np.ones_like(zs)
        acc = np.ones_like(zs)
        shift = np.zeros_like(zs)
        for k in range(1, 500):
            term = term * q / (k * (v + k))
            acc += term
            big = acc > 1e280
            if np.any(big):
                shift[big] += np.log(acc[big])
                term[big] /= acc[big]
                acc[big] = 1.0
            if float(np.max(term / acc)) < 1e-17:
                break
        direct[use_series] = (v * np.log(0.5 * zs) - gammaln(v + 1.0)
                              + shift + np.log(acc) - zs)
    out[pos] = direct
    if v == 0.0:
        out[~pos] = 0.0  # I_0(0) = 1, scaling factor e^0
    return out


def gamma_fn(x: float) -> float:
    """Gamma(x) away from the poles at 0, -1, -2, ..."""
    if x <= 0 and float(x) == int(x):
        raise ParameterError(f"Gamma pole at x = {x}")
    return float(math.gamma(x))


def gegenbauer(ell: int, lam: float, t) -> float | np.ndarray:
    """Gegenbauer polynomial C_ell^lam(t) on [-1, 1] by three-term recurrence."""
    if ell < 0:
        raise ParameterError("gegenbauer requires ell >= 0")
    if lam <= 0:
        raise ParameterError("gegenbauer requires lambda > 0")
    ta = np.asarray(t, dtype=float)
    if np.any(np.abs(ta) > 1 + 1e-12):
        raise ParameterError("gegenbauer requires |t| <= 1")
    table = gegenbauer_table(ell, lam, np.atleast_1d(ta))
    out = table[ell]
    return float(out[0]) if np.isscalar(t) else out.reshape(ta.shape)


def gegenbauer_table(ell_max: int, lam: float, t: np.ndarray) -> np.ndarray:
    """All degrees 0..ell_max at once; rows indexed by degree.

    The zonal sums of the heat kernel consume every degree, so the
    recurrence is run once per point set rather than once per degree.
    """
    t = np.asarray(t, dtype=float)
    table = np.empty((ell_max + 1,) + t.shape)
    table[0] = 1.0
    if ell_max >= 1:
        table[1] = 2.0 * lam * t
    for m in range(2, ell_max + 1):
        table[m] = (2.0 * (m + lam - 1.0) * t * table[m - 1]
                    - (m + 2.0 * lam - 2.0) * table[m - 2]) / m
    return table
