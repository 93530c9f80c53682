"""One-particle hopping matrices, moment bounds, and commutator algebra.

The hopping matrix ``J`` is real symmetric with zero diagonal (diagonal
entries are dropped on construction; they belong in the on-site potential).
The central quantity is the p-th hopping moment

    kappa_p(J) = max_x sum_y |J_xy| |x - y|**p,

whose first moment bounds the group velocity of any transported observable.
Iterated commutators with functions of position stay one-particle objects:
``ad_F^k(J)`` has entries ``J_xy (F(x) - F(y))**k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import EmbeddedLattice, smallest_enclosing_ball

__all__ = [
    "HoppingMatrix",
    "LightConeParams",
    "choose_epsilon",
    "hopping_moment",
    "iterated_commutator_matrix",
    "lightcone_params",
    "max_speed",
    "nearest_neighbor",
    "one_particle_norm",
    "power_law",
    "schur_bound",
]

_SYM_TOL = 1e-12


class HoppingMatrix:
    """Real symmetric hopping amplitudes on an embedded lattice.

    Parameters
    ----------
    lattice : EmbeddedLattice
    matrix : array_like, shape (n, n)
        Symmetric real amplitudes.  The diagonal is zeroed by convention.
    """

    def __init__(self, lattice, matrix):
        mat = np.array(matrix, dtype=float)
        n = lattice.n_sites
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match {n} sites")
        if not np.all(np.isfinite(mat)):
            raise ValueError("hopping amplitudes must be finite")
        if np.max(np.abs(mat - mat.T)) > _SYM_TOL * max(1.0, np.max(np.abs(mat))):
            raise ValueError("hopping matrix must be symmetric")
        mat = 0.5 * (mat + mat.T)
        np.fill_diagonal(mat, 0.0)
        self.lattice = lattice
        self.matrix = mat

    @property
    def n_sites(self):
        return self.lattice.n_sites

    def to_csv(self, path):
        np.savetxt(path, self.matrix, delimiter=",")

    def __repr__(self):
        return f"HoppingMatrix(n_sites={self.n_sites})"


def nearest_neighbor(lattice, amplitude=1.0, rtol=1e-9):
    """Uniform hopping between closest site pairs.

    Pairs at the minimal positive pairwise distance (within ``rtol``) get
    amplitude ``amplitude``; all other pairs get zero.
    """
    dist = lattice.pairwise_distances()
    off = dist[~np.eye(lattice.n_sites, dtype=bool)]
    if off.size == 0:
        raise ValueError("a single site has no neighbor pairs")
    dmin = float(np.min(off))
    mat = np.where(np.abs(dist - dmin) <= rtol * dmin, float(amplitude), 0.0)
    np.fill_diagonal(mat, 0.0)
    return HoppingMatrix(lattice, mat)


def power_law(lattice, alpha, amplitude=1.0):
    """Hopping decaying as ``amplitude * distance**(-alpha)``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    dist = lattice.pairwise_distances()
    with np.errstate(divide="ignore"):
        mat = float(amplitude) * dist ** (-float(alpha))
    np.fill_diagonal(mat, 0.0)
    return HoppingMatrix(lattice, mat)


def hopping_moment(J, p):
    """p-th hopping moment ``max_x sum_y |J_xy| |x-y|**p``."""
    if p < 0:
        raise ValueError("moment order must be nonnegative")
    dist = J.lattice.pairwise_distances()
    weights = np.abs(J.matrix) * dist**p
    return float(np.max(np.sum(weights, axis=1)))


def max_speed(J):
    """Transport speed bound: the first hopping moment."""
    return hopping_moment(J, 1)


def iterated_commutator_matrix(J, F, k):
    """k-fold commutator of a position function with the hopping matrix.

    ``F`` maps a site index to a real number; the result has entries
    ``J_xy * (F(x) - F(y))**k``.  For ``k = 0`` this is ``J`` itself.  The
    result is symmetric for even ``k`` and antisymmetric for odd ``k``
    (``i**k`` times it is Hermitian either way).
    """
    if k < 0:
        raise ValueError("commutator order must be nonnegative")
    fvals = np.array([float(F(x)) for x in J.lattice.sites()])
    if not np.all(np.isfinite(fvals)):
        raise ValueError("position function must be finite on all sites")
    diff = fvals[:, None] - fvals[None, :]
    return J.matrix * diff**k


def one_particle_norm(A):
    """Spectral norm of a Hermitian or anti-Hermitian matrix.

    Anti-Hermitian input is rotated by ``i`` (same norm); anything else is
    rejected so a silent wrong-norm path cannot exist.
    """
    mat = np.asarray(A, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("need a square matrix")
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.conj().T)) <= 1e-12 * scale:
        herm = mat
    elif np.max(np.abs(mat + mat.conj().T)) <= 1e-12 * scale:
        herm = 1j * mat
    else:
        raise ValueError("matrix is neither Hermitian nor anti-Hermitian")
    return float(np.max(np.abs(np.linalg.eigvalsh(herm))))


def schur_bound(A):
    """Row-sum bound on the spectral norm: ``max_x sum_y |A_xy|``."""
    mat = np.asarray(A)
    return float(np.max(np.sum(np.abs(mat), axis=1)))


@dataclass(frozen=True)
class LightConeParams:
    """Parameters of an adiabatic moving front.

    Attributes
    ----------
    v : float
        Probe speed, strictly above the transport bound ``v_max``.
    v_max : float
        First hopping moment of the instance.
    epsilon : float
        Front-slowdown fraction in ``(0, 1/2]``.
    v_prime : float
        Front speed ``(1 - epsilon) * v``; always above ``v_max``.
    s : float
        Adiabatic scale (width of the smoothed front), positive.
    r_min_x : float
        Radius of the smallest ball enclosing the launch region.
    """

    v: float
    v_max: float
    epsilon: float
    v_prime: float
    s: float
    r_min_x: float

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("adiabatic scale s must be positive")
        if self.r_min_x < 0:
            raise ValueError("enclosing radius must be nonnegative")
        if self.v_prime <= self.v_max:
            raise ValueError("front speed must exceed the transport bound")


def choose_epsilon(v, v_max):
    """Front slowdown fraction ``min(1/4, (v - v_max) / (2 v))``.

    Any value in ``(0, (v - v_max)/v)`` keeps the slowed front faster than
    transport; this fixed rule stays well inside that window.
    """
    if v_max < 0:
        raise ValueError("v_max must be nonnegative")
    if v <= v_max:
        raise ValueError(f"probe speed v={v} must exceed v_max={v_max}")
    return min(0.25, (v - v_max) / (2.0 * v))


def lightcone_params(v, v_max, s, r_min_x):
    """Bundle front parameters, deriving epsilon and the front speed."""
    eps = choose_epsilon(v, v_max)
    return LightConeParams(
        v=float(v),
        v_max=float(v_max),
        epsilon=eps,
        v_prime=(1.0 - eps) * float(v),
        s=float(s),
        r_min_x=float(r_min_x),
    )
