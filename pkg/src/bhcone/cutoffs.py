"""Smooth cutoff functions with exact derivative recursions.

Two function families drive every estimate in this package:

* admissible bumps ``h``: nonnegative, smooth, supported inside an open
  interval ``(eta, xi)``, built so that ``sqrt(h)`` is itself smooth
  (``h = g**2`` for an exponential bump ``g``, or ``h = P**2`` for a smooth
  plateau ``P``);
* smooth steps ``f``: normalized antiderivatives of admissible bumps, equal
  to 0 at and below ``eta``, equal to 1 at and above ``xi``, and monotone
  nondecreasing in between.

Derivatives of both families are computed by exact recursions on the closed
forms, not by finite differences, so high orders stay accurate all the way to
the support endpoints.  Pointwise antiderivative values use composite
Gauss-Legendre panels aligned with the structural breakpoints of the bump;
normalization constants come from adaptive quadrature.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

__all__ = [
    "AdmissibleFunction",
    "CutoffFunction",
    "PlateauFunction",
    "ScaledCutoff",
    "antiderivative_normalized",
    "derivative",
    "make_admissible",
    "make_plateau_step",
    "make_smooth_step",
    "plateau_majorant",
    "rescale_class",
    "scaled_eval",
    "widened_step",
]

DEFAULT_MAX_ORDER = 8

# Points closer than _GUARD * (xi - eta) to a support endpoint are treated as
# outside: the bump underflows to zero there long before the pole factors in
# the derivative recursion can overflow.
_GUARD = 1e-13


@lru_cache(maxsize=8)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _as_float_array(r):
    arr = np.asarray(r, dtype=float)
    return arr, arr.ndim == 0


class AdmissibleFunction:
    """Smooth nonnegative bump supported in ``(eta, xi)`` with smooth root.

    Subclasses implement ``_deriv_inside`` and ``_sqrt_inside`` for points
    strictly inside the support; this base class handles masking, scalar /
    array dispatch, and the cached normalization integral.

    Parameters
    ----------
    eta, xi : float
        Endpoints of the open support interval, ``0 <= eta < xi``.
    max_order : int
        Highest derivative order served by :meth:`derivative`.
    """

    def __init__(self, eta, xi, max_order=DEFAULT_MAX_ORDER):
        eta = float(eta)
        xi = float(xi)
        if not (math.isfinite(eta) and math.isfinite(xi)):
            raise ValueError("support endpoints must be finite")
        if not eta < xi:
            raise ValueError(f"need eta < xi, got eta={eta}, xi={xi}")
        if max_order < 1:
            raise ValueError("max_order must be at least 1")
        self.eta = eta
        self.xi = xi
        self.max_order = int(max_order)
        self._integral = None

    # -- hooks ----------------------------------------------------------

    def _deriv_inside(self, k, r):
        raise NotImplementedError

    def _sqrt_inside(self, r):
        raise NotImplementedError

    def breakpoints(self):
        """Support points between which the bump is analytic."""
        return [self.eta, self.xi]

    # -- public surface ---------------------------------------------------

    def derivative(self, k, r):
        """k-th derivative of the bump, zero outside the support."""
        if k < 0:
            raise ValueError("derivative order must be nonnegative")
        if k > self.max_order:
            raise ValueError(
                f"order {k} beyond supported maximum {self.max_order}"
            )
        arr, scalar = _as_float_array(r)
        out = np.zeros_like(arr)
        guard = _GUARD * (self.xi - self.eta)
        inside = (arr > self.eta + guard) & (arr < self.xi - guard)
        if np.any(inside):
            out[inside] = self._deriv_inside(int(k), arr[inside])
        return float(out) if scalar else out

    def __call__(self, r):
        return self.derivative(0, r)

    def sqrt(self, r):
        """Smooth square root of the bump (exact by construction)."""
        arr, scalar = _as_float_array(r)
        out = np.zeros_like(arr)
        guard = _GUARD * (self.xi - self.eta)
        inside = (arr > self.eta + guard) & (arr < self.xi - guard)
        if np.any(inside):
            out[inside] = self._sqrt_inside(arr[inside])
        return float(out) if scalar else out

    def integral(self):
        """Total mass ``int h`` over the support (adaptive quadrature)."""
        if self._integral is None:
            total = 0.0
            pts = self.breakpoints()
            for lo, hi in zip(pts[:-1], pts[1:]):
                val, _ = quad(
                    lambda x: self.derivative(0, x),
                    lo,
                    hi,
                    epsabs=1e-13,
                    epsrel=1e-13,
                    limit=200,
                )
                total += val
            if total <= 0.0:
                raise ValueError("bump has nonpositive mass")
            self._integral = total
        return self._integral


class _ExponentialBump(AdmissibleFunction):
    """Canonical bump ``h = g**2`` with ``g = exp(-1/(r-eta) - 1/(xi-r))``."""

    def _phi_derivs(self, r, kmax):
        # phi(r) = -1/(r-eta) - 1/(xi-r); returns [phi', ..., phi^(kmax)]
        left = r - self.eta
        right = self.xi - r
        derivs = []
        fact = 1.0
        for j in range(1, kmax + 1):
            fact *= j
            sign = 1.0 if (j + 1) % 2 == 0 else -1.0
            derivs.append(sign * fact * left ** (-j - 1) - fact * right ** (-j - 1))
        return derivs

    def _exp_derivs(self, r, k, beta):
        # derivatives 0..k of exp(beta*phi) via the Leibniz recursion
        # b^(n+1) = beta * sum_j C(n,j) phi^(j+1) b^(n-j)
        phi = -1.0 / (r - self.eta) - 1.0 / (self.xi - r)
        b = [np.exp(beta * phi)]
        if k == 0:
            return b
        phid = self._phi_derivs(r, k)
        for n in range(k):
            acc = np.zeros_like(r)
            for j in range(n + 1):
                acc += math.comb(n, j) * phid[j] * b[n - j]
            b.append(beta * acc)
        return b

    def _deriv_inside(self, k, r):
        return self._exp_derivs(r, k, 2.0)[k]

    def _sqrt_inside(self, r):
        phi = -1.0 / (r - self.eta) - 1.0 / (self.xi - r)
        return np.exp(phi)


def make_admissible(eta, xi, max_order=DEFAULT_MAX_ORDER):
    """Canonical admissible bump ``g**2`` on ``(eta, xi)``.

    The square root ``g = exp(-1/(r-eta) - 1/(xi-r))`` is smooth on all of
    the real line, so the admissibility requirement holds by construction.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    return _ExponentialBump(eta, xi, max_order=max_order)


class CutoffFunction:
    """Smooth monotone step built from an admissible bump.

    ``f(r) = (1/c) * int_eta^r h`` with ``c = int h``, so ``f`` vanishes at
    and below ``eta``, equals 1 at and above ``xi``, and ``f' = h/c >= 0``
    with support inside ``(eta, xi)``.  The square root of the slope,
    ``sqrt(f') = sqrt(h)/sqrt(c)``, is smooth because the bump carries a
    smooth root.

    Values at and beyond the endpoints are exact 0.0 / 1.0 by branch, which
    the projector identities downstream rely on.
    """

    _PANEL_NODES = 40
    _PANEL_TARGET = 24  # minimum panel count across the support

    def __init__(self, bump, max_order=None):
        self.bump = bump
        self.eta = bump.eta
        self.xi = bump.xi
        self.max_order = bump.max_order + 1 if max_order is None else int(max_order)
        self._c = bump.integral()
        self._panel_edges = None
        self._panel_prefix = None

    # -- antiderivative machinery ----------------------------------------

    def _build_panels(self):
        pieces = self.bump.breakpoints()
        width = (self.xi - self.eta) / self._PANEL_TARGET
        edges = [self.eta]
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            n = max(4, int(math.ceil((hi - lo) / width)))
            edges.extend(np.linspace(lo, hi, n + 1)[1:])
        edges = np.asarray(edges)
        x, w = _leggauss(self._PANEL_NODES)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = mid[:, None] + half[:, None] * x[None, :]
        vals = self.bump(nodes.ravel()).reshape(nodes.shape)
        panel_ints = half * (vals @ w)
        prefix = np.concatenate([[0.0], np.cumsum(panel_ints)])
        if abs(prefix[-1] - self._c) > 1e-10 * max(1.0, self._c):
            raise RuntimeError(
                "panel quadrature disagrees with adaptive normalization: "
                f"{prefix[-1]!r} vs {self._c!r}"
            )
        self._panel_edges = edges
        self._panel_prefix = prefix

    def _antiderivative_inside(self, r):
        if self._panel_edges is None:
            self._build_panels()
        edges = self._panel_edges
        idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(edges) - 2)
        lo = edges[idx]
        x, w = _leggauss(self._PANEL_NODES)
        half = 0.5 * (r - lo)
        nodes = (lo + half)[:, None] + half[:, None] * x[None, :]
        vals = self.bump(nodes.ravel()).reshape(nodes.shape)
        return self._panel_prefix[idx] + half * (vals @ w)

    # -- public surface ---------------------------------------------------

    def __call__(self, r):
        arr, scalar = _as_float_array(r)
        out = np.zeros_like(arr)
        out[arr >= self.xi] = 1.0
        inside = (arr > self.eta) & (arr < self.xi)
        if np.any(inside):
            vals = self._antiderivative_inside(arr[inside]) / self._c
            out[inside] = np.clip(vals, 0.0, 1.0)
        return float(out) if scalar else out

    def derivative(self, k, r):
        """k-th derivative; ``k = 0`` returns the step itself."""
        if k < 0:
            raise ValueError("derivative order must be nonnegative")
        if k == 0:
            return self(r)
        if k > self.max_order:
            raise ValueError(
                f"order {k} beyond supported maximum {self.max_order}"
            )
        return self.bump.derivative(k - 1, r) / self._c

    def sqrt_derivative(self, r):
        """Smooth ``sqrt(f')``."""
        return self.bump.sqrt(r) / math.sqrt(self._c)

    def __repr__(self):
        return f"{type(self).__name__}(eta={self.eta}, xi={self.xi})"


def antiderivative_normalized(h, max_order=None):
    """Normalized antiderivative of an admissible bump.

    Returns the cutoff ``f(r) = int_eta^r h / int h``, the unique member of
    the step class whose slope is proportional to ``h``.
    """
    if not isinstance(h, AdmissibleFunction):
        raise TypeError("expected an AdmissibleFunction")
    return CutoffFunction(h, max_order=max_order)


def make_smooth_step(eta, xi, max_order=DEFAULT_MAX_ORDER):
    """Canonical smooth step on ``(eta, xi)``.

    The slope is the normalized canonical bump:
    ``f' = g**2 / c`` with ``g = exp(-1/(r-eta) - 1/(xi-r))``.
    """
    return CutoffFunction(make_admissible(eta, xi, max_order=max_order))


def derivative(f, k, r):
    """k-th derivative of a cutoff or bump at ``r`` (module-level helper)."""
    return f.derivative(k, r)


class PlateauFunction:
    """Smooth function equal to 1 on ``[lo, hi]``, supported in the widened
    interval ``(lo - delta, hi + delta)``.

    Used as a majorant: any function whose derivatives are supported in
    ``[lo, hi]`` is dominated there by this plateau.  Built as the product of
    a rising step on ``(lo - delta, lo)`` and a falling one on
    ``(hi, hi + delta)``; derivatives follow by the Leibniz rule.
    """

    def __init__(self, lo, hi, delta, max_order=DEFAULT_MAX_ORDER):
        if delta <= 0:
            raise ValueError("delta must be positive")
        if not lo < hi:
            raise ValueError("need lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)
        self.delta = float(delta)
        self.eta = self.lo - self.delta
        self.xi = self.hi + self.delta
        self.max_order = int(max_order)
        self._up = make_smooth_step(self.eta, self.lo, max_order=max_order)
        self._down = make_smooth_step(self.hi, self.xi, max_order=max_order)

    def derivative(self, k, r):
        if k < 0:
            raise ValueError("derivative order must be nonnegative")
        if k > self.max_order:
            raise ValueError(
                f"order {k} beyond supported maximum {self.max_order}"
            )
        arr, scalar = _as_float_array(r)
        up = [self._up.derivative(j, arr) for j in range(k + 1)]
        dn = [self._down.derivative(j, arr) for j in range(k + 1)]
        if k == 0:
            out = up[0] * (1.0 - dn[0])
        else:
            out = np.zeros_like(arr)
            for j in range(k + 1):
                m = k - j
                factor = (1.0 - dn[0]) if m == 0 else -dn[m]
                out += math.comb(k, j) * up[j] * factor
        return float(out) if scalar else out

    def __call__(self, r):
        return self.derivative(0, r)

    def breakpoints(self):
        return [self.eta, self.lo, self.hi, self.xi]


class _SquaredPlateau(AdmissibleFunction):
    """Admissible bump ``h = P**2`` for a smooth plateau ``P``.

    The root ``sqrt(h) = P`` is smooth by construction, and ``h`` is exactly
    1 on the plateau, which makes the scaled finite differences downstream
    hit their continuum values on coarse lattices.
    """

    def __init__(self, lo, hi, delta, max_order=DEFAULT_MAX_ORDER):
        self.plateau = PlateauFunction(lo, hi, delta, max_order=max_order + 1)
        super().__init__(lo - delta, hi + delta, max_order=max_order)

    def _deriv_inside(self, k, r):
        p = [self.plateau.derivative(j, r) for j in range(k + 1)]
        out = np.zeros_like(r)
        for j in range(k + 1):
            out += math.comb(k, j) * p[j] * p[k - j]
        return out

    def _sqrt_inside(self, r):
        return self.plateau.derivative(0, r)

    def breakpoints(self):
        return self.plateau.breakpoints()


def make_plateau_step(eta, xi, shoulder=0.25, max_order=DEFAULT_MAX_ORDER):
    """Flat-topped smooth step on ``(eta, xi)``.

    The slope is constant over the middle ``1 - 2*shoulder`` fraction of the
    window instead of sharply peaked, so lattice differences of the step
    realize ``sup f' / s`` exactly once a couple of sites fall in the window.
    ``shoulder`` is the fraction of the window used for each smooth ramp.
    """
    if not 0 < shoulder < 0.5:
        raise ValueError("shoulder fraction must lie in (0, 1/2)")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    w = xi - eta
    bump = _SquaredPlateau(
        eta + shoulder * w, xi - shoulder * w, shoulder * w, max_order=max_order
    )
    return CutoffFunction(bump)


def plateau_majorant(f, delta=None):
    """Smooth majorant of all derivatives of the step ``f``.

    Returns ``u`` with ``u = 1`` on ``[eta, xi]`` (which contains the support
    of every ``f^(k)``, ``k >= 1``) and support in ``(eta - delta, xi + delta)``,
    default ``delta = (xi - eta)/4``.
    """
    if delta is None:
        delta = (f.xi - f.eta) / 4.0
    return PlateauFunction(f.eta, f.xi, delta, max_order=f.max_order)


def widened_step(f, delta=None, max_order=None):
    """Comparison step whose slope dominates the derivatives of ``f``.

    With ``u`` the plateau majorant, returns the normalized antiderivative of
    ``u**2``; its slope satisfies ``c * fw' = u**2``, so ``sqrt(c * fw') = u``
    is smooth and equals 1 wherever any ``f^(k)`` is supported.  The result
    is a step on the widened window ``(eta - delta, xi + delta)``.
    """
    if delta is None:
        delta = (f.xi - f.eta) / 4.0
    if f.eta - delta < 0:
        raise ValueError("widened support would leave the positive half-line")
    if max_order is None:
        max_order = f.max_order
    bump = _SquaredPlateau(f.eta, f.xi, delta, max_order=max_order)
    return CutoffFunction(bump)


class _AffineImage(AdmissibleFunction):
    """Bump ``h(r) = base(a*r + b)`` for an affine change of variables."""

    def __init__(self, base, a, b):
        if a <= 0:
            raise ValueError("affine slope must be positive")
        self.base = base
        self.a = float(a)
        self.b = float(b)
        super().__init__(
            (base.eta - b) / a, (base.xi - b) / a, max_order=base.max_order
        )

    def _deriv_inside(self, k, r):
        return self.a**k * self.base.derivative(k, self.a * r + self.b)

    def _sqrt_inside(self, r):
        return self.base.sqrt(self.a * r + self.b)

    def breakpoints(self):
        return [(p - self.b) / self.a for p in self.base.breakpoints()]

    def integral(self):
        return self.base.integral() / self.a


def rescale_class(f1, eta, xi):
    """Transport a step on ``(1/2, 1)`` to a step on ``(eta, xi)``.

    The affine map ``a(r) = (r - 2*eta + xi) / (2*(xi - eta))`` sends
    ``[eta, xi]`` onto ``[1/2, 1]``; the result is ``f = f1 o a``, a member of
    the step class on ``(eta, xi)`` with
    ``f1^(k)(a(r)) = (2*(xi - eta))**k * f^(k)(r)``.
    """
    if abs(f1.eta - 0.5) > 1e-12 or abs(f1.xi - 1.0) > 1e-12:
        raise ValueError("reference step must live on (1/2, 1)")
    if eta < 0 or not eta < xi:
        raise ValueError("need 0 <= eta < xi")
    slope = 1.0 / (2.0 * (xi - eta))
    shift = 0.5 - slope * eta
    return CutoffFunction(_AffineImage(f1.bump, slope, shift))


class ScaledCutoff:
    """A cutoff bound to an adiabatic scale and a moving front.

    Evaluates ``chi((radius - r_min - v' * t) / s)`` and its radius
    derivatives; each derivative order carries one factor ``1/s``.
    ``params`` provides the fields ``s``, ``v_prime``, ``r_min_x``.
    """

    def __init__(self, chi, params, t):
        if params.s <= 0:
            raise ValueError("adiabatic scale s must be positive")
        if t < 0:
            raise ValueError("time must be nonnegative")
        self.chi = chi
        self.params = params
        self.t = float(t)

    @property
    def front(self):
        """Current front position ``r_min + v' * t``."""
        return self.params.r_min_x + self.params.v_prime * self.t

    def argument(self, radius):
        radius = np.asarray(radius, dtype=float)
        return (radius - self.front) / self.params.s

    def eval(self, radius, order=0):
        u = self.argument(radius)
        return self.chi.derivative(order, u) / self.params.s**order

    def __call__(self, radius):
        return self.eval(radius, 0)


def scaled_eval(chi, params, t, radius, order=0):
    """Scaled cutoff evaluation (see :class:`ScaledCutoff`)."""
    return ScaledCutoff(chi, params, t).eval(radius, order)
