"""Fixed-number bosonic Fock sectors and second quantization.

The sector with ``N`` particles on ``M`` sites has the occupation basis
``{n : sum_x n_x = N}``, enumerated in lexicographically descending order,
of dimension ``binomial(N + M - 1, N)``.  Diagonal observables are plain
value vectors over this basis; one-particle matrices lift to sparse sector
operators via ``b_x^dag A_xy b_y``.

Projector thresholds compare occupation counts to rational thresholds with
exact integer arithmetic, so basis states sitting exactly on a threshold are
classified deterministically (both boundary comparisons are inclusive).
"""

from __future__ import annotations

import math
import numbers
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DiagonalObservable",
    "FockSector",
    "SparseHermitian",
    "StateVector",
    "apply_function",
    "enumerate_sector",
    "local_number",
    "mott_state",
    "second_quantize",
    "second_quantize_diagonal",
    "spectral_projector",
    "transfer_operator",
]

DEFAULT_DIMENSION_CAP = 500_000


def _occupation_tuples(n_sites, n_particles):
    if n_sites == 1:
        yield (n_particles,)
        return
    for first in range(n_particles, -1, -1):
        for rest in _occupation_tuples(n_sites - 1, n_particles - first):
            yield (first,) + rest


class FockSector:
    """Occupation basis of the fixed-``N`` sector on ``M`` sites."""

    def __init__(self, n_sites, n_particles, dimension_cap=DEFAULT_DIMENSION_CAP):
        if n_sites < 1:
            raise ValueError("need at least one site")
        if n_particles < 0:
            raise ValueError("particle number must be nonnegative")
        dim = math.comb(n_particles + n_sites - 1, n_particles)
        if dim > dimension_cap:
            raise ValueError(
                f"sector dimension {dim} exceeds cap {dimension_cap}"
            )
        self.n_sites = int(n_sites)
        self.n_particles = int(n_particles)
        self.dim = dim
        occ = np.empty((dim, n_sites), dtype=np.int64)
        index = {}
        for i, tup in enumerate(_occupation_tuples(n_sites, n_particles)):
            occ[i] = tup
            index[tup] = i
        self.occupations = occ
        self._index = index

    def index_of(self, occupation):
        """Basis index of an occupation tuple."""
        key = tuple(int(n) for n in occupation)
        try:
            return self._index[key]
        except KeyError:
            raise ValueError(f"occupation {key} not in this sector") from None

    def __len__(self):
        return self.dim

    def __repr__(self):
        return (
            f"FockSector(n_sites={self.n_sites}, "
            f"n_particles={self.n_particles}, dim={self.dim})"
        )


def enumerate_sector(n_sites, n_particles, dimension_cap=DEFAULT_DIMENSION_CAP):
    """Build the fixed-number sector basis (see :class:`FockSector`)."""
    return FockSector(n_sites, n_particles, dimension_cap=dimension_cap)


class DiagonalObservable:
    """Observable diagonal in the occupation basis.

    ``counts``/``denominator`` carry an exact integer representation when the
    values are occupation counts over a region (possibly normalized); exact
    threshold projectors require it.
    """

    def __init__(self, sector, values, counts=None, denominator=1):
        values = np.asarray(values, dtype=float)
        if values.shape != (sector.dim,):
            raise ValueError("values length does not match sector dimension")
        self.sector = sector
        self.values = values
        self.counts = None if counts is None else np.asarray(counts, dtype=np.int64)
        self.denominator = int(denominator)

    def expectation(self, amplitudes):
        amp = np.asarray(amplitudes)
        return float(np.real(np.vdot(amp, self.values * amp)))

    def apply(self, amplitudes):
        return self.values * np.asarray(amplitudes)

    def min(self):
        return float(np.min(self.values))

    def max(self):
        return float(np.max(self.values))

    def as_matrix(self):
        return sp.diags(self.values, format="csr")

    def _binary(self, other, op):
        if isinstance(other, DiagonalObservable):
            if other.sector is not self.sector:
                raise ValueError("observables live on different sectors")
            other = other.values
        return DiagonalObservable(self.sector, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            return DiagonalObservable(self.sector, self.values * other)
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def to_csv(self, path):
        """Dump one row per basis state: occupations then the value."""
        occ = self.sector.occupations
        data = np.column_stack([occ, self.values])
        header = ",".join(
            [f"n{x}" for x in range(self.sector.n_sites)] + ["value"]
        )
        np.savetxt(path, data, delimiter=",", header=header, comments="")


class StateVector:
    """Complex amplitudes over the occupation basis."""

    def __init__(self, sector, amplitudes):
        amp = np.asarray(amplitudes, dtype=complex)
        if amp.shape != (sector.dim,):
            raise ValueError("amplitude length does not match sector dimension")
        self.sector = sector
        self.amplitudes = amp

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.sector, self.amplitudes / n)

    def to_csv(self, path):
        occ = self.sector.occupations
        data = np.column_stack(
            [occ, self.amplitudes.real, self.amplitudes.imag]
        )
        header = ",".join(
            [f"n{x}" for x in range(self.sector.n_sites)] + ["re", "im"]
        )
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def mott_state(sector, occupation):
    """Basis state with the given occupation pattern."""
    amp = np.zeros(sector.dim, dtype=complex)
    amp[sector.index_of(occupation)] = 1.0
    return StateVector(sector, amp)


def local_number(sector, sites, normalized=False):
    """Particle count in a set of sites, optionally divided by ``N``.

    The result carries exact integer counts, so threshold projectors built
    from it classify boundary states exactly.
    """
    site_list = sorted(set(int(s) for s in sites))
    if site_list and (site_list[0] < 0 or site_list[-1] >= sector.n_sites):
        raise ValueError("site index out of range")
    counts = sector.occupations[:, site_list].sum(axis=1)
    if normalized:
        if sector.n_particles == 0:
            raise ValueError("cannot normalize in the zero-particle sector")
        denom = sector.n_particles
    else:
        denom = 1
    return DiagonalObservable(
        sector, counts / denom, counts=counts, denominator=denom
    )


def _as_fraction(threshold):
    if isinstance(threshold, Fraction):
        return threshold
    if isinstance(threshold, numbers.Integral):
        return Fraction(int(threshold))
    if isinstance(threshold, str):
        return Fraction(threshold)
    if isinstance(threshold, numbers.Real):
        # shortest round-tripping decimal: reads 0.3 as 3/10, not as the
        # binary float underneath
        return Fraction(str(float(threshold)))
    raise TypeError(f"cannot interpret threshold {threshold!r}")


_COMPARES = {
    "<=": lambda lhs, rhs: lhs <= rhs,
    ">=": lambda lhs, rhs: lhs >= rhs,
    "<": lambda lhs, rhs: lhs < rhs,
    ">": lambda lhs, rhs: lhs > rhs,
}


def spectral_projector(obs, op, threshold):
    """Projector onto basis states whose exact value satisfies a comparison.

    ``obs`` must carry exact integer counts (see :func:`local_number`); the
    comparison ``counts/denominator  op  threshold`` is evaluated with
    integer cross-multiplication, so states exactly on the threshold land on
    the inclusive side of ``<=`` / ``>=`` deterministically.
    """
    if obs.counts is None:
        raise ValueError(
            "projector thresholds need an observable with exact counts"
        )
    if op not in _COMPARES:
        raise ValueError(f"unknown comparison {op!r}")
    thr = _as_fraction(threshold)
    lhs = obs.counts * thr.denominator
    rhs = thr.numerator * obs.denominator
    mask = _COMPARES[op](lhs, rhs)
    return DiagonalObservable(obs.sector, mask.astype(float))


def second_quantize_diagonal(sector, site_values):
    """Lift a site function to the diagonal observable ``sum_x F(x) n_x``."""
    fvals = np.asarray(
        [float(site_values(x)) for x in range(sector.n_sites)]
        if callable(site_values)
        else site_values,
        dtype=float,
    )
    if fvals.shape != (sector.n_sites,):
        raise ValueError("need one value per site")
    if not np.all(np.isfinite(fvals)):
        raise ValueError("site values must be finite")
    return DiagonalObservable(sector, sector.occupations @ fvals)


class SparseHermitian:
    """Hermitian sparse operator on a fixed-number sector."""

    def __init__(self, sector, matrix, validate=True):
        mat = sp.csr_matrix(matrix, dtype=complex)
        if mat.shape != (sector.dim, sector.dim):
            raise ValueError("matrix shape does not match sector dimension")
        mat.sum_duplicates()
        mat.sort_indices()
        if validate:
            gap = abs(mat - mat.conj().T)
            scale = max(1.0, abs(mat).max() if mat.nnz else 0.0)
            if gap.nnz and gap.max() > 1e-12 * scale:
                raise ValueError("matrix is not Hermitian")
        self.sector = sector
        self.matrix = mat

    def matvec(self, amplitudes):
        return self.matrix @ np.asarray(amplitudes, dtype=complex)

    def to_dense(self):
        return self.matrix.toarray()

    def add_diagonal(self, values):
        """New operator with real ``values`` added on the diagonal."""
        vals = np.asarray(values, dtype=float)
        if vals.shape != (self.sector.dim,):
            raise ValueError("diagonal length does not match sector")
        return SparseHermitian(
            self.sector, self.matrix + sp.diags(vals), validate=False
        )

    def scaled(self, factor):
        return SparseHermitian(self.sector, self.matrix * factor, validate=False)

    def __repr__(self):
        return (
            f"SparseHermitian(dim={self.sector.dim}, nnz={self.matrix.nnz})"
        )


def _lift_one_particle(sector, A):
    """Sparse matrix of ``sum_xy A_xy b_x^dag b_y`` (no symmetry assumed)."""
    A = np.asarray(A)
    occ = sector.occupations
    dim = sector.dim
    rows = []
    cols = []
    vals = []
    if np.any(np.diag(A) != 0):
        rows.append(np.arange(dim))
        cols.append(np.arange(dim))
        vals.append(occ @ np.diag(A))
    index = sector._index
    xs, ys = np.nonzero(A)
    for x, y in zip(xs, ys):
        if x == y:
            continue
        amp = A[x, y]
        has = occ[:, y] > 0
        if not np.any(has):
            continue
        src = np.nonzero(has)[0]
        weight = amp * np.sqrt((occ[src, x] + 1.0) * occ[src, y])
        target = occ[src].copy()
        target[:, y] -= 1
        target[:, x] += 1
        dst = np.fromiter(
            (index[tuple(row)] for row in target), dtype=np.int64, count=len(src)
        )
        rows.append(dst)
        cols.append(src)
        vals.append(weight)
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=complex)
    data = np.concatenate([np.asarray(v, dtype=complex) for v in vals])
    return sp.csr_matrix(
        (data, (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def second_quantize(sector, A):
    """Lift a Hermitian one-particle matrix to the sector.

    Matrix elements follow the bosonic ladder convention:
    moving one particle from ``y`` to ``x`` picks up
    ``sqrt((n_x + 1) * n_y)``.
    """
    A = np.asarray(A)
    if A.shape != (sector.n_sites, sector.n_sites):
        raise ValueError("one-particle matrix shape does not match sites")
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 0.0)
    if np.max(np.abs(A - A.conj().T)) > 1e-12 * scale:
        raise ValueError("one-particle matrix must be Hermitian")
    return SparseHermitian(sector, _lift_one_particle(sector, A), validate=False)


def transfer_operator(sector, source, target):
    """Sparse matrix of ``b_target^dag b_source`` (one particle moved).

    Not Hermitian on its own; its adjoint moves the particle back, so
    callers pair it with the local numbers at both ends when checking
    Cauchy-Schwarz-type estimates.
    """
    n = sector.n_sites
    for site in (source, target):
        if not 0 <= int(site) < n:
            raise ValueError(f"site {site} out of range for {n} sites")
    mat = np.zeros((n, n))
    mat[int(target), int(source)] = 1.0
    return _lift_one_particle(sector, mat)


def apply_function(obs, fn):
    """Functional calculus on a diagonal observable: values ``fn(value)``.

    ``fn`` is evaluated once per distinct value (vectorized when possible).
    """
    uniq, inverse = np.unique(obs.values, return_inverse=True)
    try:
        mapped = np.asarray(fn(uniq), dtype=float)
        if mapped.shape != uniq.shape:
            raise TypeError
    except TypeError:
        mapped = np.asarray([float(fn(v)) for v in uniq])
    return DiagonalObservable(obs.sector, mapped[inverse])
