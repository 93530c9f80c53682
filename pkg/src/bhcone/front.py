"""Observables that track particles relative to a moving radial front.

The monitored quantity is the normalized weighted number

    A_t = (1/N) sum_x chi((|x - c| - r_min - v' t) / s) n_x,

where ``c`` is the center of the smallest ball enclosing the protected
region, ``v'`` the slowed front speed, and ``s`` the smearing length.  The
weight vanishes on the protected region and reaches one well outside the
front, so ``A_t`` interpolates between the number fractions seen by the
region complement and by any far-away target region.  Composing with a
second smooth step ``f`` gives the near-projector ``Phi = f(A_t)`` whose
Heisenberg derivative the experiments bound.

Everything here is diagonal in the occupation basis, so all comparisons
against local particle numbers and spectral projectors can be made entry
by entry, with exact zero tolerances where the construction guarantees
them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cutoffs import widened_step
from .dynamics import commutator_with_diagonal
from .fock import (
    DiagonalObservable,
    apply_function,
    local_number,
    spectral_projector,
)
from .lattice import region_distance, smallest_enclosing_ball

__all__ = [
    "ConeConditionError",
    "FrontFamily",
    "RelationCheck",
    "SandwichReport",
    "build_front_observable",
    "check_sandwich",
]

VARIANTS = ("plain", "prime", "tilde", "tilde_prime")


class ConeConditionError(ValueError):
    """Raised when a check requires the cone condition and it fails."""


def _site_weights(radii, chi, chi_tilde, params, t, variant):
    u = (radii - params.r_min_x - params.v_prime * t) / params.s
    if variant == "plain":
        return chi(u)
    if variant == "prime":
        return chi.derivative(1, u)
    if variant == "tilde":
        return chi_tilde(u)
    if variant == "tilde_prime":
        return chi_tilde.derivative(1, u)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def build_front_observable(sector, lattice, chi, params, t, variant="plain"):
    """Diagonal observable ``(1/N) sum_x w(|x|) n_x`` for a front weight.

    Coordinates are used as given; the protected region is assumed to sit
    inside the ball of radius ``params.r_min_x`` around the origin.  The
    weight is the step ``chi`` (or its derivative, or the widened
    comparison step) evaluated at ``(|x| - r_min - v' t) / s``.
    """
    if lattice.n_sites != sector.n_sites:
        raise ValueError("lattice and sector disagree on site count")
    if t < 0:
        raise ValueError("time must be nonnegative")
    radii = np.linalg.norm(lattice.coords, axis=1)
    tilde = widened_step(chi) if variant in ("tilde", "tilde_prime") else None
    w = _site_weights(radii, chi, tilde, params, t, variant)
    values = (sector.occupations @ w) / sector.n_particles
    return DiagonalObservable(sector, values)


class FrontFamily:
    """Front observables anchored to a concrete protected region.

    Translates the lattice so the smallest enclosing ball of the region is
    centered at the origin, then exposes the weighted numbers ``A_t``,
    their primed and widened variants, the near-projector ``f(A_t)``, and
    its exact diagonal time derivative.
    """

    def __init__(self, sector, lattice, region_x, chi, params, *, center=None):
        if lattice.n_sites != sector.n_sites:
            raise ValueError("lattice and sector disagree on site count")
        if region_x is not None:
            if region_x.lattice is not lattice:
                raise ValueError("region does not belong to the given lattice")
            if center is not None:
                raise ValueError("pass a region or an explicit center, not both")
            center, r_ball = smallest_enclosing_ball(region_x.coords())
        else:
            if center is None:
                center = np.zeros(lattice.coords.shape[1])
            center = np.asarray(center, dtype=float)
            r_ball = 0.0
        if params.r_min_x < r_ball - 1e-9:
            raise ValueError(
                f"params.r_min_x={params.r_min_x} cannot cover the region "
                f"(needs radius {r_ball})"
            )
        self.sector = sector
        self.lattice = lattice
        self.region_x = region_x
        self.chi = chi
        self.params = params
        self.center = center
        self.ball_radius = float(r_ball)
        self.radii = np.linalg.norm(lattice.coords - center, axis=1)
        self._tilde = None

    @classmethod
    def centered(cls, sector, lattice, chi, params, center=None):
        """Family measured from an explicit center (default the origin).

        No protected region is attached, so the sandwich checks are
        unavailable; this is the frame for lattices placed at a distance
        from the launch point of the front.
        """
        return cls(sector, lattice, None, chi, params, center=center)

    def _widened(self):
        if self._tilde is None:
            self._tilde = widened_step(self.chi)
        return self._tilde

    def site_weights(self, t, variant="plain"):
        """Per-site weight values at time ``t`` (no 1/s factors)."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        tilde = (
            self._widened() if variant in ("tilde", "tilde_prime") else None
        )
        return _site_weights(self.radii, self.chi, tilde, self.params, t, variant)

    def observable(self, t, variant="plain"):
        """``A_t`` (or a variant) as a diagonal observable, values in [0,1]
        for the step variants."""
        w = self.site_weights(t, variant)
        values = (self.sector.occupations @ w) / self.sector.n_particles
        return DiagonalObservable(self.sector, values)

    def functional(self, f, t):
        """Near-projector ``Phi = f(A_t)`` by diagonal functional calculus."""
        return apply_function(self.observable(t), f)

    def functional_time_derivative(self, f, t):
        """Diagonal values of ``d/dt f(A_t) = -(v'/s) f'(A_t) A'_t``.

        Exact chain rule: ``A_t`` and its time derivative are simultaneously
        diagonal, and the front moves at speed ``v'``.
        """
        a = self.observable(t).values
        aprime = self.observable(t, "prime").values
        fprime = f.derivative(1, a)
        return -(self.params.v_prime / self.params.s) * fprime * aprime

    def heisenberg_derivative(self, f, H, t):
        """``DPhi = dPhi/dt + i[H, Phi(t)]`` as a sparse Hermitian operator."""
        phi = self.functional(f, t)
        return commutator_with_diagonal(H, phi).add_diagonal(
            self.functional_time_derivative(f, t)
        )

    def growth_operator(self, f, H, t):
        """``G(s) = DPhi + ((v' - v_max)/s) f'(A_t) A'_t``.

        The two diagonal pieces partially cancel, leaving
        ``i[H, Phi] - (v_max/s) f'(A_t) A'_t``; its top eigenvalue is the
        growth rate the smearing length is supposed to suppress.
        """
        p = self.params
        phi = self.functional(f, t)
        a = self.observable(t).values
        aprime = self.observable(t, "prime").values
        diag = -(p.v_max / p.s) * f.derivative(1, a) * aprime
        return commutator_with_diagonal(H, phi).add_diagonal(diag)


@dataclass
class RelationCheck:
    """Outcome of one entrywise relation.

    ``worst`` is the most violating value (negative slack for inequalities,
    absolute deviation for equalities); the witness identifies the basis
    state realizing it when the relation fails.
    """

    name: str
    passed: bool
    worst: float
    witness_index: int | None = None
    witness_occupation: tuple | None = None


@dataclass
class SandwichReport:
    passed: bool
    relations: list
    cone_margin: float

    def __str__(self):
        lines = [f"sandwich: {'pass' if self.passed else 'FAIL'} "
                 f"(cone margin {self.cone_margin:.6g})"]
        for rel in self.relations:
            mark = "ok " if rel.passed else "BAD"
            lines.append(f"  [{mark}] {rel.name}: worst {rel.worst:.3e}")
            if rel.witness_occupation is not None and not rel.passed:
                lines.append(f"        witness {rel.witness_occupation}")
        return "\n".join(lines)


def _inequality_check(name, sector, gap_values):
    worst_idx = int(np.argmin(gap_values))
    worst = float(gap_values[worst_idx])
    ok = worst >= 0.0
    return RelationCheck(
        name,
        ok,
        worst,
        None if ok else worst_idx,
        None if ok else tuple(int(n) for n in sector.occupations[worst_idx]),
    )


def _equality_check(name, sector, mask, deviations):
    if not np.any(mask):
        return RelationCheck(name, True, 0.0)
    idx = np.flatnonzero(mask)
    local = np.abs(deviations[idx])
    k = int(np.argmax(local))
    worst = float(local[k])
    ok = worst == 0.0
    return RelationCheck(
        name,
        ok,
        worst,
        None if ok else int(idx[k]),
        None if ok else tuple(int(n) for n in sector.occupations[int(idx[k])]),
    )


def check_sandwich(family, f, region_y, t, cone_factor=2.0):
    """Verify the four exact relations tying ``A_t`` to local numbers.

    Entrywise on the diagonal, with zero tolerance:

      1. ``A_0 <= N_bar(X^c)``   (the weight vanishes on the region)
      2. ``N_bar(Y) <= A_t``     (the weight is one across the target)
      3. ``P[N_bar(X^c) <= eta] f(A_0) = 0``
      4. ``P[N_bar(Y) >= xi] f(A_t) = P[N_bar(Y) >= xi]``

    Relation 2 is only meaningful inside the cone; the check refuses to
    run when ``d(X,Y) < v t + cone_factor * r_min``.  Gaps are computed as
    single dot products of nonnegative site weights, so the comparisons
    are exact in floating point, not tolerance-based.
    """
    sector = family.sector
    X = family.region_x
    if X is None:
        raise ValueError(
            "family has no protected region; build it from a region to "
            "run sandwich checks"
        )
    d_xy = region_distance(X, region_y)
    margin = d_xy - (family.params.v * t + cone_factor * family.params.r_min_x)
    if margin < 0:
        raise ConeConditionError(
            f"cone condition fails: d(X,Y)={d_xy:.6g} < "
            f"v*t + {cone_factor}*r_min = {d_xy - margin:.6g}"
        )

    occ = sector.occupations
    N = sector.n_particles
    w0 = family.site_weights(0.0)
    wt = family.site_weights(t)
    in_xc = np.zeros(family.lattice.n_sites)
    in_xc[list(X.complement().sites)] = 1.0
    in_y = np.zeros(family.lattice.n_sites)
    in_y[list(region_y.sites)] = 1.0

    rel1 = _inequality_check(
        "A(0) <= number fraction outside X", sector, occ @ (in_xc - w0) / N
    )
    rel2 = _inequality_check(
        "number fraction on Y <= A(t)", sector, occ @ (wt - in_y) / N
    )

    eta = Fraction(str(f.eta))
    xi = Fraction(str(f.xi))
    n_xc = local_number(sector, X.complement().sites, normalized=True)
    n_y = local_number(sector, region_y.sites, normalized=True)
    low = spectral_projector(n_xc, "<=", eta).values > 0.5
    high = spectral_projector(n_y, ">=", xi).values > 0.5
    phi0 = family.functional(f, 0.0).values
    phit = family.functional(f, t).values
    rel3 = _equality_check(
        "f(A(0)) vanishes where X holds almost all particles",
        sector, low, phi0,
    )
    rel4 = _equality_check(
        "f(A(t)) is one where Y holds at least xi of the particles",
        sector, high, phit - 1.0,
    )

    relations = [rel1, rel2, rel3, rel4]
    return SandwichReport(all(r.passed for r in relations), relations, float(margin))
