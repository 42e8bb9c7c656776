"""Parameterization of the operator -Delta + a/|x|^2 on R^d, d >= 3.

The coupling a >= -((d-2)/2)^2 is reparameterized by

    sigma = (d-2)/2 - sqrt((d-2)^2 + 4a)/2,

which has sign opposite to a, ranges over (-inf, (d-2)/2], and controls
both the |x|^{-sigma} kernel singularity at the origin and every exponent
window in the theory.  Each angular momentum sector ell carries a Bessel
order nu with nu^2 = ((d-2)/2)^2 + a + ell(ell+d-2).

Exponent windows are returned as intervals in 1/p; conversion to p is a
presentation concern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grids import RadialFunction

_FD_STENCIL = 7  # Fornberg stencil width for log-coordinate derivatives


@dataclass(frozen=True)
class OperatorParams:
    """Dimension, coupling, and every derived exponent the theorems use."""

    d: int
    a: float
    sigma: float
    r0: float        # d/(d - sigma); the lower multiplier exponent when sigma > 0
    r0_prime: float  # d/sigma when sigma > 0, else +inf

    @property
    def endpoint(self) -> float:
        """Smallest admissible coupling -((d-2)/2)^2."""
        return -(((self.d - 2) / 2.0) ** 2)

    @property
    def lam(self) -> float:
        """(d-2)/2, the free-Laplacian order offset."""
        return (self.d - 2) / 2.0


@dataclass(frozen=True)
class SectorOrder:
    """Angular momentum ell with its Bessel order nu (nonnegative root)."""

    ell: int
    nu: float


@dataclass(frozen=True)
class Interval:
    """Open interval for 1/p, possibly empty."""

    lo: float
    hi: float
    valid: bool = True

    def __bool__(self) -> bool:
        return self.valid and self.lo < self.hi

    def contains(self, one_over_p: float) -> bool:
        return bool(self) and self.lo < one_over_p < self.hi


def make_params(d: int, a: float) -> OperatorParams:
    """Build OperatorParams, rejecting couplings below the endpoint."""
    if int(d) != d or d < 3:
        raise ParameterError(f"need integer dimension d >= 3, got {d}")
    d = int(d)
    lam = (d - 2) / 2.0
    if a < -(lam * lam):
        raise ParameterError(
            f"coupling a = {a} below endpoint -((d-2)/2)^2 = {-lam * lam}; "
            "operator not semi-bounded")
    disc = (d - 2) ** 2 + 4.0 * a
    sigma = lam - 0.5 * math.sqrt(max(disc, 0.0))
    r0 = d / (d - sigma)
    r0_prime = d / sigma if sigma > 0 else math.inf
    return OperatorParams(d=d, a=float(a), sigma=sigma, r0=r0, r0_prime=r0_prime)


def endpoint_coupling(d: int) -> float:
    return -(((d - 2) / 2.0) ** 2)


def sector_order(params: OperatorParams, ell: int) -> SectorOrder:
    """Bessel order of sector ell: nu^2 = ((d-2)/2)^2 + a + ell(ell+d-2)."""
    if ell < 0:
        raise ParameterError(f"need ell >= 0, got {ell}")
    nu_sq = params.lam ** 2 + params.a + ell * (ell + params.d - 2)
    # at the endpoint coupling nu_sq cancels to zero up to rounding
    return SectorOrder(ell=ell, nu=math.sqrt(max(nu_sq, 0.0)))


def sector_orders(params: OperatorParams, ell_max: int) -> np.ndarray:
    """nu for all sectors 0..ell_max as an array."""
    ells = np.arange(ell_max + 1, dtype=float)
    nu_sq = params.lam ** 2 + params.a + ells * (ells + params.d - 2)
    return np.sqrt(np.maximum(nu_sq, 0.0))


def hardy_range(params: OperatorParams, s: float) -> Interval:
    """1/p interval where |||x|^{-s} f||_p <~ ||L_a^{s/2} f||_p holds.

    The inequality holds iff s + sigma < d/p < d - sigma, under the
    standing hypotheses 0 < s < d and d - s - 2 sigma > 0.
    """
    d, sigma = params.d, params.sigma
    if not (0 < s < d) or not (d - s - 2 * sigma > 0):
        return Interval(0.0, 0.0, valid=False)
    lo = max((s + sigma) / d, 0.0)
    hi = min((d - sigma) / d, 1.0)
    return Interval(lo, hi, valid=lo < hi)


def equiv_ranges(params: OperatorParams, s: float) -> tuple[Interval, Interval]:
    """1/p intervals for the two Sobolev-norm comparisons, 0 < s < 2.

    forward:  ||(-Delta)^{s/2} f||_p <~ ||L_a^{s/2} f||_p
    reverse:  ||L_a^{s/2} f||_p <~ ||(-Delta)^{s/2} f||_p
    """
    if not (0 < s < 2):
        raise ParameterError(f"need 0 < s < 2, got s = {s}")
    d, sigma = params.d, params.sigma
    hi = min(1.0, (d - sigma) / d)
    forward = Interval((s + sigma) / d, hi)
    reverse = Interval(max(s / d, sigma / d), hi)
    return forward, reverse


def mikhlin_range(params: OperatorParams) -> Interval:
    """1/p interval where Mikhlin multipliers of sqrt(L_a) are L^p-bounded."""
    if params.sigma <= 0:
        return Interval(0.0, 1.0)
    return Interval(params.sigma / params.d, 1.0 - params.sigma / params.d)


def _fornberg(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights at x0 on nodes xs for derivatives 0..m."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1, c4 = 1.0, xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def log_derivatives(f: RadialFunction, order: int = 2) -> list[np.ndarray]:
    """d^k/du^k of the samples in u = log r, k = 0..order, by local stencils."""
    u = np.log(f.grid.nodes)
    vals = f.values
    n = len(u)
    if n < _FD_STENCIL:
        raise ParameterError("grid too coarse for finite differences")
    outs = [vals.copy()] + [np.empty(n) for _ in range(order)]
    half = _FD_STENCIL // 2
    for i in range(n):
        j0 = min(max(i - half, 0), n - _FD_STENCIL)
        sl = slice(j0, j0 + _FD_STENCIL)
        w = _fornberg(u[i], u[sl], order)
        for k in range(1, order + 1):
            outs[k][i] = np.dot(w[:, k], vals[sl])
    return outs


def liouville_apply(g: RadialFunction, order: SectorOrder) -> RadialFunction:
    """Apply -g'' + (4 nu^2 - 1)/(4 r^2) g in the Liouville gauge.

    Derivatives are taken in u = log r (where the grid is uniform at panel
    scale and power laws are entire), then converted:
    g'' = e^{-2u} (g_uu - g_u).  Power-law zero-energy profiles
    r^{1/2 +- nu} (and r^{1/2} log r at nu = 0) are annihilated to stencil
    precision on interior nodes.
    """
    if len(g.grid) < 512:
        raise ParameterError("liouville_apply needs a grid with >= 512 nodes")
    r = g.grid.nodes
    _, du, duu = log_derivatives(g, order=2)
    g_rr = (duu - du) / (r * r)
    nu = order.nu
    vals = -g_rr + (4.0 * nu * nu - 1.0) / (4.0 * r * r) * g.values
    return g.with_values(vals)


def zero_energy_profiles(order: SectorOrder):
    """The two Liouville-gauge zero-energy branches g1, g2 as callables."""
    nu = order.nu
    if nu == 0.0:
        return (lambda r: np.sqrt(r)), (lambda r: np.sqrt(r) * np.log(r))
    return (lambda r: r ** (0.5 + nu)), (lambda r: r ** (0.5 - nu))
