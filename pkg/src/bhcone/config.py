"""Run configuration: INI schema, validation, and instance assembly.

A run is described by one INI file with the sections

    [lattice] [hopping] [model] [sector] [regions]
    [cone] [cutoffs] [experiments] [output]

All numeric fields are plain decimals.  Parsing is strict: unknown
sections or keys are rejected, every cross-reference (region sites exist,
the potential table covers the sector, the probe speed clears the
transport bound) is checked here, before any computation starts.  The
full schema with defaults lives in docs/config.md; the shipped files
under configs/ are working examples.

``load_config`` returns a :class:`RunConfig` whose fields are already
materialized library objects (lattice, hopping matrix, model, sector,
cutoff functions), so the experiment code never touches raw strings.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cutoffs import make_plateau_step, make_smooth_step
from .dynamics import ModelSpec
from .fock import enumerate_sector
from .hopping import HoppingMatrix, max_speed, nearest_neighbor, power_law
from .lattice import EmbeddedLattice, Region, chain

__all__ = [
    "ConfigError",
    "RunConfig",
    "EXPERIMENT_NAMES",
    "load_config",
]

EXPERIMENT_NAMES = (
    "hopping_moments",
    "commutator_expansion",
    "heisenberg_bound",
    "monotonicity",
    "lightcone",
)

# Experiments that evolve a state and therefore need a model, a sector,
# and at least the protected region.
_NEEDS_INSTANCE = ("commutator_expansion", "heisenberg_bound",
                   "monotonicity", "lightcone")
_NEEDS_REGIONS = ("monotonicity", "lightcone")

_KNOWN_KEYS = {
    "lattice": {"kind", "n_sites", "spacing", "coordinates"},
    "hopping": {"kind", "amplitude", "alpha", "matrix"},
    "model": {"interaction", "mu", "potential"},
    "sector": {"n_particles", "filling", "dimension_cap"},
    "regions": {"x_sites", "y_sites", "monotone_sites"},
    "cone": {"speed", "speed_factor", "power", "radius_factor"},
    "cutoffs": {"chi_kind", "chi_eta", "chi_xi", "f_kind", "f_eta", "f_xi"},
    "experiments": {
        "run", "s_grid", "time_grid", "u_center", "front_offsets",
        "expansion_orders", "acceptance_order", "moment_sizes",
        "moment_alphas", "moment_orders", "slope_tolerance",
        "expansion_tolerance", "decay_slope_max", "min_r_squared",
        "bound_ceiling", "monotone_time", "contrast_time", "contrast_min",
        "ratio_bound", "ratio_tolerance", "seed",
    },
    "output": {"directory", "plots", "summary"},
}


class ConfigError(ValueError):
    """A configuration problem; the CLI maps this to exit code 2."""


@dataclass
class RunConfig:
    """A fully validated run: library objects plus experiment knobs."""

    lattice: EmbeddedLattice
    hopping: HoppingMatrix
    model: ModelSpec | None
    sector: object | None          # FockSector
    region_x: Region | None
    region_y: Region | None
    monotone_sites: tuple
    filling: int
    speed: float
    v_max: float
    power: int
    radius_factor: float
    chi: object                    # CutoffFunction
    f: object
    run: tuple
    s_grid: tuple
    time_grid: np.ndarray
    u_center: float
    front_offsets: int
    expansion_orders: tuple
    acceptance_order: int
    moment_sizes: tuple
    moment_alphas: tuple
    moment_orders: tuple
    slope_tolerance: float
    expansion_tolerance: float
    decay_slope_max: float
    min_r_squared: float
    bound_ceiling: float
    monotone_time: float | None
    contrast_time: float | None
    contrast_min: float
    ratio_bound: float
    ratio_tolerance: float
    seed: int
    output_dir: Path
    plots: bool
    summary_name: str
    source: str = "<direct>"


class _Section:
    """One INI section with typed getters and used-key tracking."""

    def __init__(self, name, items):
        self.name = name
        self.items = dict(items)

    def _raw(self, key, default):
        if key not in self.items:
            if default is _REQUIRED:
                raise ConfigError(f"[{self.name}] is missing required key {key!r}")
            return None
        return self.items[key]

    def get(self, key, cast, default=None, label="value"):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"[{self.name}] {key} = {raw!r}: not a valid {label} ({exc})"
            ) from None

    def floats(self, key, default=None):
        return self.get(key, lambda s: tuple(float(tok) for tok in s.split()),
                        default, "list of decimals")

    def ints(self, key, default=None):
        return self.get(key, _int_list, default, "list of integers")


class _Required:
    def __repr__(self):
        return "<required>"


_REQUIRED = _Required()


def _int_list(s):
    out = []
    for tok in s.split():
        val = float(tok)
        if val != int(val):
            raise ValueError(f"{tok} is not an integer")
        out.append(int(val))
    return tuple(out)


def _bool(s):
    low = str(s).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _parse_coordinates(text):
    rows = [row.strip() for row in text.replace("\n", ";").split(";")]
    rows = [row for row in rows if row]
    coords = [[float(tok) for tok in row.split()] for row in rows]
    widths = {len(row) for row in coords}
    if len(widths) != 1:
        raise ValueError("coordinate rows have inconsistent dimension")
    arr = np.array(coords, dtype=float)
    if arr.shape[0] == 1 and arr.shape[1] > 1:
        # a single row of scalars is a 1d chain written on one line
        arr = arr.reshape(-1, 1)
    return arr


def _parse_matrix(text):
    rows = [row.strip() for row in text.replace("\n", ";").split(";")]
    rows = [row for row in rows if row]
    return np.array([[float(tok) for tok in row.split()] for row in rows])


def _parse_time_grid(text):
    toks = text.split()
    if toks and toks[0].lower() == "linspace":
        if len(toks) != 4:
            raise ValueError("linspace takes start stop count")
        start, stop, count = float(toks[1]), float(toks[2]), float(toks[3])
        if count != int(count) or int(count) < 2:
            raise ValueError("linspace count must be an integer >= 2")
        return np.linspace(start, stop, int(count))
    return np.array([float(tok) for tok in toks])


def _build_lattice(sec):
    kind = sec.get("kind", str, "chain").strip().lower()
    if kind == "chain":
        n = sec.get("n_sites", int, _REQUIRED, "integer")
        spacing = sec.get("spacing", float, 1.0, "decimal")
        if n < 2:
            raise ConfigError("[lattice] n_sites must be at least 2")
        if spacing <= 0:
            raise ConfigError("[lattice] spacing must be positive")
        return chain(n, spacing)
    if kind == "coordinates":
        coords = sec.get("coordinates", _parse_coordinates, _REQUIRED,
                         "coordinate table")
        return EmbeddedLattice(coords)
    raise ConfigError(f"[lattice] kind = {kind!r}: expected chain or coordinates")


def _build_hopping(sec, lattice):
    kind = sec.get("kind", str, "nearest_neighbor").strip().lower()
    amplitude = sec.get("amplitude", float, 1.0, "decimal")
    if kind == "nearest_neighbor":
        return nearest_neighbor(lattice, amplitude)
    if kind == "power_law":
        alpha = sec.get("alpha", float, _REQUIRED, "decimal")
        return power_law(lattice, alpha, amplitude)
    if kind == "matrix":
        mat = sec.get("matrix", _parse_matrix, _REQUIRED, "matrix")
        if mat.shape != (lattice.n_sites, lattice.n_sites):
            raise ConfigError(
                f"[hopping] matrix shape {mat.shape} does not match "
                f"{lattice.n_sites} lattice sites"
            )
        try:
            return HoppingMatrix(lattice, amplitude * mat)
        except ValueError as exc:
            raise ConfigError(f"[hopping] matrix rejected: {exc}") from None
    raise ConfigError(
        f"[hopping] kind = {kind!r}: expected nearest_neighbor, power_law, "
        "or matrix"
    )


def _build_model(sec, hopping):
    if sec is None:
        return None
    table = sec.floats("potential")
    mu = sec.get("mu", float, 0.0, "decimal")
    if table is not None:
        if "interaction" in sec.items:
            raise ConfigError(
                "[model] give either interaction or potential, not both"
            )
        return ModelSpec.tabulated(hopping, table, mu)
    interaction = sec.get("interaction", float, _REQUIRED, "decimal")
    return ModelSpec.standard(hopping, interaction, mu)


def _build_cutoff(sec, prefix, default_eta, default_xi):
    kind = sec.get(prefix + "_kind", str, "plateau").strip().lower()
    eta = sec.get(prefix + "_eta", float, default_eta, "decimal")
    xi = sec.get(prefix + "_xi", float, default_xi, "decimal")
    if not (0.0 <= eta < xi):
        raise ConfigError(
            f"[cutoffs] need 0 <= {prefix}_eta < {prefix}_xi, "
            f"got ({eta}, {xi})"
        )
    if kind == "plateau":
        return make_plateau_step(eta, xi)
    if kind == "smooth":
        return make_smooth_step(eta, xi)
    raise ConfigError(
        f"[cutoffs] {prefix}_kind = {kind!r}: expected plateau or smooth"
    )


def _region(lattice, sites, label):
    try:
        return Region(lattice, sites)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[regions] {label}: {exc}") from None


def load_config(path, *, experiments=None, output_dir=None, seed=None,
                plots=None):
    """Parse, validate, and materialize a run configuration.

    The keyword arguments are command-line overrides applied before
    validation, so a bad override fails the same way a bad file does.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except (configparser.Error, UnicodeDecodeError, OSError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None

    sections = {}
    for name in parser.sections():
        if name not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(parser[name]) - _KNOWN_KEYS[name]
        if extra:
            raise ConfigError(
                f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}"
            )
        sections[name] = _Section(name, parser[name])

    for required in ("lattice", "hopping", "experiments"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")

    exp = sections["experiments"]
    run = tuple(exp.get("run", str, _REQUIRED).split())
    if experiments is not None:
        run = tuple(experiments)
    if not run:
        raise ConfigError("[experiments] run: no experiments selected")
    for name in run:
        if name not in EXPERIMENT_NAMES:
            raise ConfigError(
                f"unknown experiment {name!r}; known: "
                + ", ".join(EXPERIMENT_NAMES)
            )

    lattice = _build_lattice(sections["lattice"])
    hopping = _build_hopping(sections["hopping"], lattice)
    v_max = max_speed(hopping)

    cone = sections.get("cone", _Section("cone", {}))
    power = cone.get("power", int, 4, "integer")
    radius_factor = cone.get("radius_factor", float, 2.0, "decimal")
    speed = cone.get("speed", float, None, "decimal")
    if speed is None:
        factor = cone.get("speed_factor", float, 1.1, "decimal")
        if factor <= 1.0:
            raise ConfigError("[cone] speed_factor must exceed 1")
        speed = factor * v_max
    if power < 2:
        raise ConfigError("[cone] power must be at least 2")
    if v_max > 0 and speed <= v_max:
        raise ConfigError(
            f"[cone] probe speed {speed} does not clear the transport "
            f"bound {v_max}"
        )

    cut = sections.get("cutoffs", _Section("cutoffs", {}))
    chi = _build_cutoff(cut, "chi", 0.5, 1.0)
    f = _build_cutoff(cut, "f", 0.05, 0.3)

    needs_instance = any(name in _NEEDS_INSTANCE for name in run)
    model = None
    sector = None
    filling = 1
    if needs_instance:
        if "model" not in sections:
            raise ConfigError(
                "[model] section required by: "
                + ", ".join(n for n in run if n in _NEEDS_INSTANCE)
            )
        if "sector" not in sections:
            raise ConfigError("[sector] section required by the selected "
                              "experiments")
        model = _build_model(sections["model"], hopping)
        sec = sections["sector"]
        n_particles = sec.get("n_particles", int, _REQUIRED, "integer")
        filling = sec.get("filling", int, 1, "integer")
        cap = sec.get("dimension_cap", int, None, "integer")
        if n_particles < 1:
            raise ConfigError("[sector] n_particles must be positive")
        if filling < 1:
            raise ConfigError("[sector] filling must be positive")
        try:
            if cap is None:
                sector = enumerate_sector(lattice.n_sites, n_particles)
            else:
                sector = enumerate_sector(lattice.n_sites, n_particles, cap)
        except ValueError as exc:
            raise ConfigError(f"[sector] {exc}") from None
        # surface an undefined potential-table entry now, not mid-run
        for n in range(n_particles + 1):
            try:
                model.onsite(0, n)
            except ValueError as exc:
                raise ConfigError(f"[model] {exc}") from None

    region_x = region_y = None
    monotone_sites = ()
    needs_regions = any(name in _NEEDS_REGIONS for name in run)
    reg = sections.get("regions")
    if needs_regions:
        if reg is None:
            raise ConfigError("[regions] section required by the selected "
                              "experiments")
        x_sites = reg.ints("x_sites", _REQUIRED)
        region_x = _region(lattice, x_sites, "x_sites")
        y_sites = reg.ints("y_sites")
        if y_sites is not None:
            region_y = _region(lattice, y_sites, "y_sites")
            if not region_x.is_disjoint(region_y):
                raise ConfigError("[regions] x_sites and y_sites overlap")
        mono = reg.ints("monotone_sites")
        if mono is not None:
            for site in mono:
                if site in region_x:
                    raise ConfigError(
                        f"[regions] monotone site {site} lies in x_sites"
                    )
            monotone_sites = mono
        if "lightcone" in run and region_y is None:
            raise ConfigError("[regions] y_sites required by lightcone")
        if sector is not None and filling * len(region_x) != sector.n_particles:
            raise ConfigError(
                f"[regions] filling {filling} on {len(region_x)} sites does "
                f"not give {sector.n_particles} particles"
            )
    elif reg is not None:
        x_sites = reg.ints("x_sites")
        if x_sites is not None:
            region_x = _region(lattice, x_sites, "x_sites")
        y_sites = reg.ints("y_sites")
        if y_sites is not None:
            region_y = _region(lattice, y_sites, "y_sites")

    s_grid = exp.floats("s_grid", (1.0, 2.0, 4.0, 8.0))
    if any(s <= 0 for s in s_grid) or len(s_grid) < 2:
        raise ConfigError("[experiments] s_grid needs at least two positive "
                          "entries")
    if list(s_grid) != sorted(s_grid):
        raise ConfigError("[experiments] s_grid must be increasing")
    time_grid = exp.get("time_grid", _parse_time_grid,
                        np.linspace(0.0, 1.5, 13), "time grid")
    if len(time_grid) and (np.any(np.diff(time_grid) <= 0)
                           or time_grid[0] < 0):
        raise ConfigError("[experiments] time_grid must be nonnegative and "
                          "strictly increasing")

    u_center = exp.get("u_center", float, 0.75, "decimal")
    if not (0.0 < u_center <= 1.0):
        raise ConfigError("[experiments] u_center must lie in (0, 1]")
    front_offsets = exp.get("front_offsets", int, 9, "integer")
    if front_offsets < 1:
        raise ConfigError("[experiments] front_offsets must be positive")

    expansion_orders = exp.ints("expansion_orders", (1, 2, 3))
    acceptance_order = exp.get("acceptance_order", int, 2, "integer")
    if any(m < 1 for m in expansion_orders):
        raise ConfigError("[experiments] expansion orders must be positive")
    if acceptance_order not in expansion_orders:
        raise ConfigError(
            f"[experiments] acceptance_order {acceptance_order} is not in "
            f"expansion_orders {expansion_orders}"
        )

    moment_sizes = exp.ints("moment_sizes", (32, 64, 128, 256, 512))
    moment_alphas = exp.floats("moment_alphas", (2.0, 3.0, 4.0))
    moment_orders = exp.ints("moment_orders", (1, 2, 3))
    if any(n < 2 for n in moment_sizes):
        raise ConfigError("[experiments] moment_sizes must all be >= 2")
    if any(k < 1 for k in moment_orders):
        raise ConfigError("[experiments] moment_orders must be positive")

    bound_ceiling = exp.get("bound_ceiling", float, 0.05, "decimal")
    if bound_ceiling < 0:
        raise ConfigError("[experiments] bound_ceiling must be nonnegative")

    out = sections.get("output", _Section("output", {}))
    directory = Path(out.get("directory", str, "out"))
    if output_dir is not None:
        directory = Path(output_dir)
    plots_flag = out.get("plots", _bool, False, "boolean")
    if plots is not None:
        plots_flag = bool(plots)
    if plots_flag:
        try:
            import matplotlib  # noqa: F401
        except ImportError:
            raise ConfigError(
                "plots requested but matplotlib is not importable"
            ) from None

    seed_val = exp.get("seed", int, 0, "integer")
    if seed is not None:
        try:
            seed_val = int(seed)
        except (TypeError, ValueError):
            raise ConfigError(f"seed override {seed!r} is not an integer") \
                from None

    return RunConfig(
        lattice=lattice,
        hopping=hopping,
        model=model,
        sector=sector,
        region_x=region_x,
        region_y=region_y,
        monotone_sites=monotone_sites,
        filling=filling,
        speed=float(speed),
        v_max=float(v_max),
        power=power,
        radius_factor=radius_factor,
        chi=chi,
        f=f,
        run=run,
        s_grid=s_grid,
        time_grid=np.asarray(time_grid, dtype=float),
        u_center=u_center,
        front_offsets=front_offsets,
        expansion_orders=expansion_orders,
        acceptance_order=acceptance_order,
        moment_sizes=moment_sizes,
        moment_alphas=moment_alphas,
        moment_orders=moment_orders,
        slope_tolerance=exp.get("slope_tolerance", float, 0.25, "decimal"),
        expansion_tolerance=exp.get("expansion_tolerance", float, 0.3,
                                    "decimal"),
        decay_slope_max=exp.get("decay_slope_max", float, -1.5, "decimal"),
        min_r_squared=exp.get("min_r_squared", float, 0.9, "decimal"),
        bound_ceiling=bound_ceiling,
        monotone_time=exp.get("monotone_time", float, None, "decimal"),
        contrast_time=exp.get("contrast_time", float, None, "decimal"),
        contrast_min=exp.get("contrast_min", float, 5.0, "decimal"),
        ratio_bound=exp.get("ratio_bound", float, 0.25, "decimal"),
        ratio_tolerance=exp.get("ratio_tolerance", float, 0.1, "decimal"),
        seed=seed_val,
        output_dir=directory,
        plots=plots_flag,
        summary_name=out.get("summary", str, "summary.json"),
        source=str(path),
    )
