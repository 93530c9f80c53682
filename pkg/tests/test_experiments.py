"""Experiment layer: fits, remainders, config loading, CLI exit codes."""

import json
from pathlib import Path

import numpy as np
import pytest

from bhcone.cli import main
from bhcone.config import ConfigError, load_config
from bhcone.cutoffs import make_plateau_step, make_smooth_step
from bhcone.dynamics import ModelSpec, assemble_hamiltonian
from bhcone.experiments import (
    exp_lightcone,
    exp_monotonicity,
    expansion_remainder,
    fit_power_law,
    run_experiments,
    write_reports,
)
from bhcone.fock import enumerate_sector
from bhcone.hopping import nearest_neighbor
from bhcone.lattice import chain

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


# -- power-law fitting ------------------------------------------------------


def test_fit_power_law_recovers_exact_exponent():
    xs = np.array([4.0, 8.0, 16.0, 32.0])
    fit = fit_power_law(xs, 3.0 * xs**-2)
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 4
    assert fit.conclusive(0.99)


def test_fit_power_law_drops_nonpositive_points():
    xs = np.array([1.0, 2.0, 4.0, 8.0])
    ys = np.array([1.0, 0.0, 1.0 / 16.0, 1.0 / 64.0])
    fit = fit_power_law(xs, ys)
    assert fit.n_points == 3
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit_power_law([1.0, 2.0], [0.0, 0.0]) is None
    assert fit_power_law([3.0], [1.0]) is None


def test_fit_power_law_flags_poor_fits():
    xs = np.array([1.0, 2.0, 4.0, 8.0])
    ys = np.array([1.0, 5.0, 0.1, 2.0])
    fit = fit_power_law(xs, ys)
    assert not fit.conclusive(0.99)


# -- expansion remainder ----------------------------------------------------


def small_hamiltonian(n_sites=5, n_particles=2, amplitude=1.0):
    lat = chain(n_sites)
    model = ModelSpec.standard(nearest_neighbor(lat, amplitude), 4.0)
    sec = enumerate_sector(n_sites, n_particles)
    return sec, assemble_hamiltonian(sec, model)


def test_remainder_vanishes_for_diagonal_hamiltonian():
    sec, _ = small_hamiltonian()
    H = assemble_hamiltonian(
        sec, ModelSpec.standard(nearest_neighbor(chain(5), 0.0), 4.0)
    )
    avals = np.linspace(0.0, 1.0, sec.dim)
    f = make_smooth_step(0.5, 1.0)
    for order in (1, 2, 3):
        rem = expansion_remainder(H, avals, f, order)
        assert np.max(np.abs(rem)) == 0.0


def test_first_order_remainder_is_the_full_commutator():
    sec, H = small_hamiltonian()
    rng = np.random.default_rng(2)
    avals = rng.uniform(0.0, 1.0, sec.dim)
    f = make_smooth_step(0.25, 0.75)
    rem = expansion_remainder(H, avals, f, 1)
    dense = H.to_dense()
    fa = np.diag(f(avals))
    ref = dense @ fa - fa @ dense
    assert np.max(np.abs(rem - ref)) < 1e-13


def test_second_order_remainder_vanishes_on_a_linear_window():
    # all diagonal values inside the flat-slope middle of a plateau step:
    # f is exactly linear there, so the quadratic remainder is zero
    sec, H = small_hamiltonian()
    f = make_plateau_step(0.0, 1.0)
    rng = np.random.default_rng(8)
    avals = rng.uniform(0.4, 0.6, sec.dim)
    rem = expansion_remainder(H, avals, f, 2)
    assert np.max(np.abs(rem)) < 1e-10


def test_remainder_rejects_bad_order():
    sec, H = small_hamiltonian()
    with pytest.raises(ValueError):
        expansion_remainder(H, np.zeros(sec.dim), make_smooth_step(0.5, 1.0), 0)


# -- configuration loading --------------------------------------------------


def base_sections(outdir):
    return {
        "lattice": {"kind": "chain", "n_sites": "6"},
        "hopping": {"kind": "nearest_neighbor", "amplitude": "1.0"},
        "model": {"interaction": "4.0"},
        "sector": {"n_particles": "3"},
        "regions": {"x_sites": "0 1 2"},
        "cone": {"speed_factor": "1.1"},
        "cutoffs": {
            "chi_kind": "plateau", "chi_eta": "0.5", "chi_xi": "1.0",
            "f_kind": "plateau", "f_eta": "0.05", "f_xi": "0.3",
        },
        "experiments": {
            "run": "monotonicity",
            "s_grid": "1 2",
            "time_grid": "linspace 0 1 5",
            "seed": "3",
        },
        "output": {"directory": str(outdir)},
    }


def write_config(tmp_path, name="run.ini", **changes):
    """Write the base INI with per-section overrides merged in."""
    sections = base_sections(tmp_path / "out")
    for section, values in changes.items():
        sections.setdefault(section, {}).update(values)
    lines = []
    for section, values in sections.items():
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {val}" for key, val in values.items())
        lines.append("")
    path = tmp_path / name
    path.write_text("\n".join(lines))
    return path


def test_load_config_materializes_objects(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.lattice.n_sites == 6
    assert cfg.sector.dim == 56
    assert cfg.region_x.sites == (0, 1, 2)
    assert cfg.v_max == pytest.approx(2.0)
    assert cfg.speed == pytest.approx(2.2)
    assert cfg.s_grid == (1.0, 2.0)
    assert np.allclose(cfg.time_grid, np.linspace(0.0, 1.0, 5))
    assert cfg.seed == 3
    assert cfg.run == ("monotonicity",)


def test_cli_overrides_take_effect(tmp_path):
    path = write_config(tmp_path)
    cfg = load_config(path, seed=11, output_dir=tmp_path / "other",
                      experiments=["monotonicity"])
    assert cfg.seed == 11
    assert cfg.output_dir == tmp_path / "other"


def test_unknown_keys_and_sections_are_rejected(tmp_path):
    path = write_config(tmp_path, mystery={"value": "1"})
    with pytest.raises(ConfigError, match="mystery"):
        load_config(path)
    path2 = write_config(tmp_path, lattice={"typo_key": "1"})
    with pytest.raises(ConfigError, match="typo_key"):
        load_config(path2)


def test_config_validation_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.ini")
    # probe speed must exceed the transport bound
    with pytest.raises(ConfigError, match="speed"):
        load_config(write_config(tmp_path, cone={"speed": "1.5"}))
    # unknown experiment name
    path = write_config(tmp_path)
    with pytest.raises(ConfigError, match="unknown experiment"):
        load_config(path, experiments=["teleportation"])


def test_config_region_and_grid_validation(tmp_path):
    # target region overlapping the protected one
    bad_region = write_config(tmp_path, regions={"y_sites": "2"})
    with pytest.raises(ConfigError):
        load_config(bad_region)
    bad_grid = write_config(tmp_path, experiments={"s_grid": "2 1"})
    with pytest.raises(ConfigError):
        load_config(bad_grid)


# -- experiments on degenerate instances ------------------------------------


def test_monotonicity_is_exact_without_hopping(tmp_path):
    # J = 0 freezes the state; the expectation stays at its exact zero
    # start and every growth rate underflows
    cfg = load_config(write_config(
        tmp_path, hopping={"amplitude": "0.0"}, cone={"speed": "1.0"},
    ))
    report = exp_monotonicity(cfg)
    assert report.passed
    assert any("underflows" in note for note in report.notes)
    rates = [row[3] for row in report.rows if row[0] == "rate"]
    assert rates == [0.0, 0.0]


def test_lightcone_without_hopping_fails_only_the_contrast(tmp_path):
    cfg = load_config(write_config(
        tmp_path,
        hopping={"amplitude": "0.0"},
        cone={"speed": "1.0"},
        regions={"y_sites": "5"},
        experiments={"run": "lightcone"},
    ))
    report = exp_lightcone(cfg)
    values = [row[5] for row in report.rows if row[0] == "target"]
    assert values == [0.0] * len(values)
    by_name = {c.name.split()[0]: c for c in report.checks}
    assert by_name["initial"].passed
    assert by_name["target"].passed
    assert by_name["in-cone"].passed
    assert by_name["monotone"].passed
    assert not by_name["out-of-cone"].passed  # nothing ever arrives
    assert not report.passed


def test_run_experiments_rejects_unknown_names(tmp_path):
    cfg = load_config(write_config(tmp_path))
    with pytest.raises(ConfigError, match="unknown experiment"):
        run_experiments(cfg, names=["warp_drive"])


# -- reports on disk --------------------------------------------------------


def test_reports_are_reproducible_byte_for_byte(tmp_path):
    path = CONFIG_DIR / "moments.ini"
    outputs = []
    for sub in ("a", "b"):
        cfg = load_config(path, output_dir=tmp_path / sub)
        write_reports(run_experiments(cfg), cfg)
        outputs.append((tmp_path / sub / "hopping_moments.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_summary_records_checks_and_fits(tmp_path):
    cfg = load_config(CONFIG_DIR / "moments.ini", output_dir=tmp_path)
    reports = run_experiments(cfg)
    written = write_reports(reports, cfg)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] is True
    entry = summary["experiments"]["hopping_moments"]
    assert entry["passed"] is True
    assert all(c["passed"] for c in entry["checks"])
    assert "nearest_neighbor_order_1" in entry["fits"]
    assert {p.name for p in written} >= {"hopping_moments.csv", "summary.json"}


def test_plots_are_written_when_requested(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = load_config(CONFIG_DIR / "moments.ini", output_dir=tmp_path,
                      plots=True)
    write_reports(run_experiments(cfg), cfg)
    assert (tmp_path / "hopping_moments.svg").exists()


# -- command line -----------------------------------------------------------


def test_cli_runs_a_config_end_to_end(tmp_path, capsys):
    code = main([str(CONFIG_DIR / "moments.ini"), "-o", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "all experiments pass" in out
    assert (tmp_path / "summary.json").exists()


def test_cli_exit_codes_for_bad_input(tmp_path, capsys):
    assert main([str(tmp_path / "nope.ini")]) == 2
    assert "config error" in capsys.readouterr().err
    bad = write_config(tmp_path, lattice={"typo_key": "1"})
    assert main([str(bad)]) == 2
    assert "typo_key" in capsys.readouterr().err


def test_cli_reports_acceptance_failure(tmp_path, capsys):
    # an impossible ceiling forces the lightcone check to fail: exit 1
    path = write_config(
        tmp_path,
        regions={"y_sites": "5"},
        experiments={"run": "lightcone", "bound_ceiling": "0.0"},
    )
    code = main([str(path)])
    out = capsys.readouterr().out
    assert code == 1
    assert "acceptance failure" in out
    assert "lightcone" in out


def test_cli_seed_override_changes_sampled_amplitudes(tmp_path):
    rows = []
    for seed in (0, 1):
        cfg = load_config(CONFIG_DIR / "moments.ini",
                          output_dir=tmp_path / str(seed), seed=seed)
        report = run_experiments(cfg, names=["hopping_moments"])[0]
        rows.append([r for r in report.rows if r[0] == "norm_bound"])
    assert rows[0] != rows[1]
