"""Acceptance gates: every shipped claim with its tolerance and budget.

Each test pins one externally visible guarantee.  Numbers asserted here
(slope windows, ceilings, ratios, time budgets) are the ones the shipped
configurations promise; loosening any of them is an interface change.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from bhcone.cli import main
from bhcone.config import load_config
from bhcone.cutoffs import make_plateau_step, make_smooth_step
from bhcone.dynamics import ModelSpec, assemble_hamiltonian, evolve, expectation
from bhcone.experiments import (
    exp_commutator_expansion,
    exp_heisenberg_bound,
    exp_hopping_moments,
)
from bhcone.fock import enumerate_sector, local_number, mott_state
from bhcone.front import FrontFamily, check_sandwich
from bhcone.hopping import lightcone_params, nearest_neighbor
from bhcone.lattice import Region, chain, region_distance, smallest_enclosing_ball

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def report_line(label, elapsed, budget, detail=""):
    extra = f"; {detail}" if detail else ""
    print(f"{label}: pass in {elapsed:.2f} s (budget {budget:g} s){extra}")


@pytest.fixture(scope="module")
def moments_report(tmp_path_factory):
    cfg = load_config(CONFIG_DIR / "moments.ini",
                      output_dir=tmp_path_factory.mktemp("moments"))
    return exp_hopping_moments(cfg)


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("default")
    t0 = time.perf_counter()
    code = main([str(CONFIG_DIR / "default.ini"), "-o", str(out)])
    elapsed = time.perf_counter() - t0
    summary = json.loads((out / "summary.json").read_text())
    return code, summary, elapsed


def test_exact_identities_and_sandwich_on_eight_site_chains():
    # the four diagonal relations between the front observable and the
    # local numbers hold with zero tolerance, at several in-cone times
    t0 = time.perf_counter()
    chi = make_plateau_step(0.5, 1.0)
    f = make_smooth_step(0.5, 1.0)
    cases = [(4, [0, 1], [6, 7]), (3, [0], [7])]
    for n_particles, x_sites, y_sites in cases:
        lat = chain(8)
        sec = enumerate_sector(8, n_particles)
        X = Region(lat, x_sites)
        Y = Region(lat, y_sites)
        _, r_ball = smallest_enclosing_ball(X.coords())
        params = lightcone_params(v=2.2, v_max=2.0, s=2.0, r_min_x=r_ball)
        family = FrontFamily(sec, lat, X, chi, params)
        psi0 = mott_state(
            sec, [n_particles // len(x_sites) if x in x_sites else 0
                  for x in range(8)]
        )
        assert family.observable(0.0).expectation(psi0.amplitudes) == 0.0
        assert family.functional(f, 0.0).expectation(psi0.amplitudes) == 0.0
        d = region_distance(X, Y)
        # the cone guard admits the time / the front tail (width s*xi)
        # has cleared the target, so the weight is exactly one across Y
        guard_limit = (d - 2.0 * params.r_min_x) / params.v
        r_y = min(family.radii[site] for site in Y.sites)
        weight_limit = (r_y - params.r_min_x
                        - params.s * chi.xi) / params.v_prime
        t_max = min(guard_limit, weight_limit)
        for t in (0.0, 0.5 * t_max, 0.99 * t_max):
            report = check_sandwich(family, f, Y, t)
            assert report.passed, str(report)
            assert report.cone_margin >= 0.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report_line("exact identities and sandwich", elapsed, 10)


def test_commutator_norm_bound_across_hopping_instances(moments_report):
    checks = {c.name: c for c in moments_report.checks}
    norm = next(c for n, c in checks.items()
                if n.startswith("position-commutator norm"))
    assert norm.passed and norm.observed <= 1e-10
    count = checks["at least 20 generated instances"]
    assert count.passed and count.observed >= 20
    zero = checks["zero hopping gives exactly zero norm"]
    assert zero.passed and zero.observed == 0.0
    assert moments_report.elapsed_seconds < 5.0
    report_line("commutator norm bound", moments_report.elapsed_seconds, 5,
                f"{count.observed:.0f} instances, worst excess "
                f"{norm.observed:.3g}")


def test_iterated_commutator_scaling_slopes(moments_report):
    exact = next(c for c in moments_report.checks
                 if c.name.startswith("iterated norms"))
    assert exact.passed and exact.observed <= 1e-9
    slopes = {}
    for k in (1, 2, 3):
        fit = moments_report.fits[f"nearest_neighbor_order_{k}"]
        assert fit is not None
        assert abs(fit.slope + k) <= 0.25
        assert fit.r_squared >= 0.9
        slopes[k] = fit.slope
    assert moments_report.elapsed_seconds < 10.0
    report_line("iterated commutator scaling", moments_report.elapsed_seconds,
                10, "slopes " + ", ".join(f"{slopes[k]:+.3f}" for k in slopes))


def test_expansion_remainder_scaling(tmp_path):
    cfg = load_config(CONFIG_DIR / "expansion.ini", output_dir=tmp_path)
    report = exp_commutator_expansion(cfg)
    assert report.passed, report.describe()
    fit = report.fits["order_2"]
    assert abs(fit.slope + 2.0) <= 0.3
    assert fit.r_squared >= 0.9
    ceiling = next(c for c in report.checks
                   if c.name.startswith("remainder within"))
    assert ceiling.passed
    assert report.elapsed_seconds < 60.0
    report_line("expansion remainder scaling", report.elapsed_seconds, 60,
                f"order-2 slope {fit.slope:+.4f}, R^2 {fit.r_squared:.4f}")


def test_growth_rate_decay_with_front_width(tmp_path):
    cfg = load_config(CONFIG_DIR / "heisenberg.ini", output_dir=tmp_path)
    report = exp_heisenberg_bound(cfg)
    assert report.passed, report.describe()
    fit = report.fits["growth_rate"]
    assert fit is not None and fit.slope <= -1.5
    assert fit.r_squared >= 0.9
    assert report.elapsed_seconds < 300.0
    report_line("growth rate decay", report.elapsed_seconds, 300,
                f"slope {fit.slope:+.4f}, R^2 {fit.r_squared:.4f}")


def test_monotonicity_constants_halve_under_doubling(default_run):
    code, summary, elapsed = default_run
    assert code == 0
    entry = summary["experiments"]["monotonicity"]
    assert entry["passed"] is True
    start = next(c for c in entry["checks"]
                 if c["name"].startswith("starting expectation"))
    assert start["observed"] == 0.0
    ratios = [c for c in entry["checks"]
              if c["name"].startswith("growth-rate ratio")]
    assert len(ratios) >= 3
    for check in ratios:
        assert check["passed"]
        observed = check["observed"]
        assert isinstance(observed, float) and observed <= 0.35
    transfer = next(c for c in entry["checks"]
                    if c["name"].startswith("transfer terms"))
    assert transfer["passed"]
    assert elapsed < 300.0
    worst = max(c["observed"] for c in ratios)
    report_line("monotonicity constant halving", elapsed, 300,
                f"worst ratio {worst:.3g} <= 0.35")


def test_lightcone_containment_and_contrast(default_run):
    code, summary, elapsed = default_run
    assert code == 0
    entry = summary["experiments"]["lightcone"]
    assert entry["passed"] is True
    by_prefix = {c["name"].split()[0]: c for c in entry["checks"]}
    assert by_prefix["target"]["observed"] == 0.0
    in_cone = by_prefix["in-cone"]
    assert in_cone["passed"] and in_cone["observed"] <= 0.05
    monotone = by_prefix["monotone"]
    assert monotone["passed"] and monotone["observed"] <= 1e-10
    contrast = by_prefix["out-of-cone"]
    assert contrast["passed"]
    contrast_value = contrast["observed"]
    assert contrast_value == "inf" or float(contrast_value) >= 5.0
    assert elapsed < 600.0
    report_line("light cone containment and contrast", elapsed, 600,
                f"in-cone max {in_cone['observed']:.3g}, contrast "
                f"{contrast_value}")


def test_two_site_exchange_against_closed_form():
    # <n_1>(t) = sin^2(J t), with norm and energy conserved on [0, 5/J]
    t0 = time.perf_counter()
    J = 1.0
    lat = chain(2)
    model = ModelSpec.standard(nearest_neighbor(lat, J), interaction=4.0)
    sec = enumerate_sector(2, 1)
    H = assemble_hamiltonian(sec, model)
    psi0 = mott_state(sec, (1, 0))
    times = np.linspace(0.0, 5.0 / J, 101)
    states = evolve(H, psi0, times)
    n1 = local_number(sec, [1])
    e0 = expectation(H, psi0)
    worst_value = worst_norm = worst_energy = 0.0
    for t, state in zip(times, states):
        worst_value = max(
            worst_value,
            abs(expectation(n1, state) - np.sin(J * t) ** 2),
        )
        worst_norm = max(worst_norm, abs(state.norm() - 1.0))
        worst_energy = max(worst_energy, abs(expectation(H, state) - e0))
    assert worst_value <= 1e-8
    assert worst_norm <= 1e-8
    assert worst_energy <= 1e-8
    elapsed = time.perf_counter() - t0
    report_line("two-site exchange closed form", elapsed, 10,
                f"worst deviation {worst_value:.3g}")
