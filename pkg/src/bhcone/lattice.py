"""Finite lattices embedded in Euclidean space, regions, and enclosing balls.

Sites are indexed ``0..n-1`` and carry coordinates in ``R^d``.  All distances
are Euclidean distances of the embedding; boundaries are open (no wrap-around
identification of edges).
"""

from __future__ import annotations

import itertools

import numpy as np

__all__ = [
    "EmbeddedLattice",
    "Region",
    "chain",
    "region_distance",
    "smallest_enclosing_ball",
]


class EmbeddedLattice:
    """A finite set of sites with coordinates in ``R^d``.

    Parameters
    ----------
    coords : array_like, shape (n, d)
        One coordinate row per site.  Rows must be finite and distinct.
    """

    def __init__(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise ValueError("coords must be a nonempty (n, d) array")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        n = coords.shape[0]
        if len({tuple(row) for row in coords}) != n:
            raise ValueError("sites must have distinct coordinates")
        self.coords = coords
        self.n_sites = n
        self.dim = coords.shape[1]

    def distance(self, x, y):
        """Euclidean distance between sites ``x`` and ``y``."""
        return float(np.linalg.norm(self.coords[x] - self.coords[y]))

    def pairwise_distances(self):
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        return np.linalg.norm(diff, axis=-1)

    def sites(self):
        return range(self.n_sites)

    def __len__(self):
        return self.n_sites

    def __repr__(self):
        return f"EmbeddedLattice(n_sites={self.n_sites}, dim={self.dim})"

    def to_csv(self, path):
        """Dump site coordinates, one row per site."""
        header = ",".join(f"x{i}" for i in range(self.dim))
        np.savetxt(path, self.coords, delimiter=",", header=header, comments="")


def chain(n_sites, spacing=1.0):
    """One-dimensional chain with ``n_sites`` equally spaced sites."""
    if n_sites < 1:
        raise ValueError("need at least one site")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    return EmbeddedLattice(spacing * np.arange(n_sites, dtype=float)[:, None])


class Region:
    """A nonempty subset of lattice sites.

    Stored as a sorted tuple of site indices together with the lattice it
    refers to.
    """

    def __init__(self, lattice, sites):
        sites = tuple(sorted(set(int(s) for s in sites)))
        if not sites:
            raise ValueError("region must be nonempty")
        if sites[0] < 0 or sites[-1] >= lattice.n_sites:
            raise ValueError("site index out of range")
        self.lattice = lattice
        self.sites = sites

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site):
        return site in set(self.sites)

    def complement(self):
        rest = [s for s in self.lattice.sites() if s not in set(self.sites)]
        return Region(self.lattice, rest)

    def coords(self):
        return self.lattice.coords[list(self.sites)]

    def is_disjoint(self, other):
        return not set(self.sites) & set(other.sites)

    def __repr__(self):
        return f"Region(sites={self.sites})"


def _circumcenter(points):
    """Center equidistant from all rows of ``points``, inside their affine
    hull, or None when the points are affinely degenerate."""
    base = points[0]
    rel = points[1:] - base
    # center = base + rel.T @ lam with |center - p_i| equal for all i
    gram = rel @ rel.T
    rhs = 0.5 * np.einsum("ij,ij->i", rel, rel)
    try:
        lam = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(lam)):
        return None
    return base + lam @ rel


def smallest_enclosing_ball(points):
    """Smallest Euclidean ball containing every row of ``points``.

    Returns ``(center, radius)``.  Solved by exhaustive enumeration of
    support sets of at most ``d + 1`` points: every candidate ball is the
    circumball of such a subset, and the smallest feasible one wins.
    Intended for the modest point counts of region geometry.

    The minimizer is unique; ties between support sets reproduce it exactly.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("need at least one point")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    n, d = pts.shape
    best_center = pts[0]
    best_radius = np.inf
    slack = 1e-9
    for size in range(1, min(n, d + 1) + 1):
        for subset in itertools.combinations(range(n), size):
            sub = pts[list(subset)]
            if size == 1:
                center = sub[0]
            elif size == 2:
                center = 0.5 * (sub[0] + sub[1])
            else:
                center = _circumcenter(sub)
                if center is None:
                    continue
            radius = float(np.max(np.linalg.norm(pts - center, axis=1)))
            support_radius = float(np.max(np.linalg.norm(sub - center, axis=1)))
            if radius <= support_radius * (1 + slack) + slack and radius < best_radius:
                best_radius = radius
                best_center = center
    return best_center, best_radius


def region_distance(X, Y):
    """Minimal Euclidean distance between two disjoint regions."""
    if X.lattice is not Y.lattice:
        raise ValueError("regions live on different lattices")
    if not X.is_disjoint(Y):
        raise ValueError("regions overlap")
    cx = X.coords()
    cy = Y.coords()
    diff = cx[:, None, :] - cy[None, :, :]
    return float(np.min(np.linalg.norm(diff, axis=-1)))
