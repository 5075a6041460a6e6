"""Scenario-driven command line front end.

``simulate <config.ini>`` parses an INI scenario, dispatches one of the six
analysis workflows, and writes a machine-readable table (CSV by default, or
line-delimited JSON).  Atomic workflows run in scaled units (Gamma = 1); the
propagation workflows additionally require the [cell] section in SI units.

Exit codes: 0 success, 2 numerical failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .dynamics import (DegenerateSteadyStateError, build_liouvillian,
                       equal_ground_state, evolve, inversion_scan,
                       omega_from_saturation, pump_only_steady_state,
                       steady_state)
from .levels import (FieldConfig, LevelScheme, build_collapse, build_scheme,
                     pump_hamiltonian, two_level_collapse,
                     two_level_hamiltonian)
from .propagation import CellConfig, output_curve, propagate
from .spectra import (CorrelationWindowError, correlation_spectrum,
                      min_absorption_scan, parallel_dipole,
                      perpendicular_gain_spectrum, two_level_dipole)

EXIT_OK = 0
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3

WORKFLOWS = ("populations", "inversion-scan", "spectrum",
             "min-absorption-scan", "propagate", "output-curve")

_SCHEMA: Dict[str, Dict[str, str]] = {
    "transition": {"f_ground": "float", "f_excited": "float",
                   "two_level": "bool"},
    "fields": {"omega_p": "float", "saturation": "float", "omega_pr": "float",
               "delta_p": "float", "delta_pr": "float", "offset": "float",
               "probe_polarization": "str"},
    "scan": {"workflow": "str",
             "t_final": "float", "t_points": "int",
             "s_min": "float", "s_max": "float", "s_points": "int",
             "s_scale": "str",
             "delta_min": "float", "delta_max": "float", "delta_points": "int",
             "omega_p_min": "float", "omega_p_max": "float",
             "omega_p_points": "int",
             "pump_min": "float", "pump_max": "float", "pump_points": "int",
             "input_intensity": "float", "seed_intensity": "float",
             "mode": "str", "self_consistent": "bool"},
    "cell": {"length_m": "float", "density_m3": "float",
             "gamma_rad_s": "float", "wavelength_m": "float",
             "photon_energy_j": "float", "beam_radius_m": "float",
             "solid_angle_sr": "float", "grid_points": "int",
             "i_sat_ref_w_m2": "float"},
    "numerics": {"evolve_tol": "float", "decay_rel_tol": "float",
                 "t_max_correlation": "float", "n_harmonics": "int"},
    "output": {"path": "str", "format": "str"},
}

_CELL_WORKFLOWS = ("propagate", "output-curve")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    """Validated scenario: transition, fields, scan grids, cell, numerics."""

    workflow: str
    f_ground: float = 1.0
    f_excited: float = 2.0
    two_level: bool = False
    omega_p: float = 0.0
    omega_pr: float = 0.0
    delta_p: float = 0.0
    delta_pr: Optional[float] = None
    probe_polarization: str = "perpendicular"
    t_final: float = 50.0
    t_points: int = 201
    s_grid: Optional[np.ndarray] = None
    delta_grid: Optional[np.ndarray] = None
    omega_p_grid: Optional[np.ndarray] = None
    pump_grid: Optional[np.ndarray] = None
    input_intensity: Optional[float] = None
    seed_intensity: float = 0.0
    mode: str = "closed_form"
    self_consistent: bool = False
    cell: Optional[CellConfig] = None
    evolve_tol: float = 1e-8
    decay_rel_tol: float = 1e-8
    t_max_correlation: float = 40000.0
    n_harmonics: int = 2
    output_path: Optional[str] = None
    output_format: str = "csv"
    raw_text: str = ""
    source_sha256: str = ""

    def fields(self) -> FieldConfig:
        delta_pr = self.delta_p if self.delta_pr is None else self.delta_pr
        return FieldConfig(omega_p=self.omega_p, omega_pr=self.omega_pr,
                           delta_p=self.delta_p, delta_pr=delta_pr)

    def scheme(self) -> LevelScheme:
        return build_scheme(self.f_ground, self.f_excited)


@dataclass
class ResultTable:
    """Rectangular result with per-column units and a provenance block."""

    columns: List[Tuple[str, str]]
    rows: List[Tuple]
    provenance: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("ragged result table")

    def write_csv(self, fh) -> None:
        for key, val in self.provenance.items():
            fh.write(f"# {key}: {val}\n")
        fh.write(",".join(name for name, _ in self.columns) + "\n")
        fh.write(",".join(f"[{unit}]" for _, unit in self.columns) + "\n")
        for row in self.rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")

    def write_json(self, fh) -> None:
        fh.write(json.dumps({"provenance": self.provenance,
                             "units": {n: u for n, u in self.columns}},
                            sort_keys=True) + "\n")
        names = [n for n, _ in self.columns]
        for row in self.rows:
            fh.write(json.dumps(dict(zip(names, (float(v) for v in row))),
                                sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _coerce(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key]
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: not a valid {kind}") from exc


def _grid(vals: Dict, prefix: str, scale: str = "linear") -> Optional[np.ndarray]:
    lo = vals.get(f"{prefix}_min")
    hi = vals.get(f"{prefix}_max")
    n = vals.get(f"{prefix}_points")
    given = [k for k, v in ((f"{prefix}_min", lo), (f"{prefix}_max", hi),
                            (f"{prefix}_points", n)) if v is not None]
    if not given:
        return None
    if len(given) != 3:
        raise ConfigError(f"grid '{prefix}' needs {prefix}_min, {prefix}_max "
                          f"and {prefix}_points (got only {', '.join(given)})")
    if n < 1:
        raise ConfigError(f"empty grid: {prefix}_points must be >= 1")
    if n > 1 and not hi > lo:
        raise ConfigError(f"grid '{prefix}' must be increasing "
                          f"({prefix}_min < {prefix}_max)")
    if scale == "log":
        if lo <= 0:
            raise ConfigError(f"log-scale grid '{prefix}' needs {prefix}_min > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def parse_config(path: str) -> ScenarioConfig:
    """Read and validate a scenario file (INI key = value sections)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    text = raw.decode("utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    unknown = []
    vals: Dict[str, Dict] = {s: {} for s in _SCHEMA}
    for section in parser.sections():
        if section not in _SCHEMA:
            unknown.append(f"[{section}]")
            continue
        for key, rawval in parser.items(section):
            if key not in _SCHEMA[section]:
                unknown.append(f"[{section}] {key}")
            else:
                vals[section][key] = _coerce(section, key, rawval)
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))

    missing = []
    scan = vals["scan"]
    workflow = scan.get("workflow")
    if workflow is None:
        missing.append("[scan] workflow")
    elif workflow not in WORKFLOWS:
        raise ConfigError(f"unknown workflow {workflow!r}; expected one of "
                          + ", ".join(WORKFLOWS))

    tr = vals["transition"]
    two_level = tr.get("two_level", False)
    if not two_level:
        for key in ("f_ground", "f_excited"):
            if key not in tr and workflow is not None:
                missing.append(f"[transition] {key}")

    fl = vals["fields"]
    if "omega_p" in fl and "saturation" in fl:
        raise ConfigError(
            "[fields] omega_p and saturation are both given: overdetermined "
            "(S fixes omega_p at the given detuning)")
    if "delta_pr" in fl and "offset" in fl:
        raise ConfigError("[fields] delta_pr and offset are both given: "
                          "offset = delta_pr - delta_p is derived")

    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    delta_p = fl.get("delta_p", 0.0)
    if "saturation" in fl:
        omega_p = float(omega_from_saturation(fl["saturation"], delta_p))
    else:
        omega_p = fl.get("omega_p", 0.0)
    delta_pr = fl.get("delta_pr")
    if "offset" in fl:
        delta_pr = delta_p + fl["offset"]

    pol = fl.get("probe_polarization", "perpendicular")
    if pol not in ("parallel", "perpendicular"):
        raise ConfigError(f"[fields] probe_polarization must be parallel or "
                          f"perpendicular, got {pol!r}")

    cell = None
    if vals["cell"]:
        if workflow not in _CELL_WORKFLOWS:
            raise ConfigError(
                f"[cell] section is only valid for workflows "
                f"{', '.join(_CELL_WORKFLOWS)} (SI units); '{workflow}' runs "
                f"in scaled units")
        cl = vals["cell"]
        cell_missing = [k for k in ("length_m", "density_m3", "gamma_rad_s")
                        if k not in cl]
        if "wavelength_m" not in cl and "photon_energy_j" not in cl:
            cell_missing.append("wavelength_m (or photon_energy_j)")
        if "beam_radius_m" not in cl and "solid_angle_sr" not in cl:
            cell_missing.append("beam_radius_m (or solid_angle_sr)")
        if cell_missing:
            raise ConfigError("missing required [cell] keys: "
                              + ", ".join(cell_missing))
        if "photon_energy_j" in cl:
            photon_energy = cl["photon_energy_j"]
        else:
            from scipy.constants import c, hbar
            photon_energy = hbar * 2 * np.pi * c / cl["wavelength_m"]
        if "solid_angle_sr" in cl:
            solid_angle = cl["solid_angle_sr"]
        else:
            solid_angle = np.pi * cl["beam_radius_m"] ** 2 / cl["length_m"] ** 2
        cell = CellConfig(length=cl["length_m"], density=cl["density_m3"],
                          gamma_phys=cl["gamma_rad_s"],
                          photon_energy=photon_energy,
                          solid_angle=solid_angle,
                          grid=cl.get("grid_points", 200),
                          i_sat_ref=cl.get("i_sat_ref_w_m2"))
    elif workflow in _CELL_WORKFLOWS:
        raise ConfigError(f"workflow '{workflow}' requires the [cell] section")

    num = vals["numerics"]
    out = vals["output"]
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"[output] format must be csv or json, got {fmt!r}")

    cfg = ScenarioConfig(
        workflow=workflow,
        f_ground=tr.get("f_ground", 1.0), f_excited=tr.get("f_excited", 2.0),
        two_level=two_level,
        omega_p=omega_p, omega_pr=fl.get("omega_pr", 0.0),
        delta_p=delta_p, delta_pr=delta_pr,
        probe_polarization=pol,
        t_final=scan.get("t_final", 50.0), t_points=scan.get("t_points", 201),
        s_grid=_grid(scan, "s", scan.get("s_scale", "linear")),
        delta_grid=_grid(scan, "delta"),
        omega_p_grid=_grid(scan, "omega_p"),
        pump_grid=_grid(scan, "pump"),
        input_intensity=scan.get("input_intensity"),
        seed_intensity=scan.get("seed_intensity", 0.0),
        mode=scan.get("mode", "closed_form"),
        self_consistent=scan.get("self_consistent", False),
        cell=cell,
        evolve_tol=num.get("evolve_tol", 1e-8),
        decay_rel_tol=num.get("decay_rel_tol", 1e-8),
        t_max_correlation=num.get("t_max_correlation", 40000.0),
        n_harmonics=num.get("n_harmonics", 2),
        output_path=out.get("path"), output_format=fmt,
        raw_text=text, source_sha256=hashlib.sha256(raw).hexdigest(),
    )
    _validate_workflow_inputs(cfg)
    return cfg


def _validate_workflow_inputs(cfg: ScenarioConfig) -> None:
    need = {
        "inversion-scan": ("s_grid", "s"),
        "spectrum": ("delta_grid", "delta"),
        "min-absorption-scan": ("omega_p_grid", "omega_p"),
        "output-curve": ("pump_grid", "pump"),
    }.get(cfg.workflow)
    if need and getattr(cfg, need[0]) is None:
        raise ConfigError(f"workflow '{cfg.workflow}' requires the "
                          f"[scan] {need[1]}_min/{need[1]}_max/{need[1]}_points grid")
    if cfg.workflow == "propagate" and cfg.input_intensity is None \
            and cfg.omega_p == 0.0:
        raise ConfigError("workflow 'propagate' needs [scan] input_intensity "
                          "or [fields] omega_p")
    if cfg.two_level and cfg.workflow != "spectrum":
        raise ConfigError("two_level = true is only meaningful for the "
                          "spectrum workflow")
    if cfg.two_level and cfg.probe_polarization != "parallel":
        raise ConfigError("the two-level reference atom has no orthogonal "
                          "polarization; set probe_polarization = parallel")
    if cfg.workflow == "populations" and cfg.t_points < 2:
        raise ConfigError("empty grid: t_points must be >= 2")


def _sublevel_label(scheme: LevelScheme, i: int) -> str:
    man, m = scheme.sublevels[i]
    return f"{'e' if man == 'excited' else 'g'}{m:+.0f}" if float(m).is_integer() \
        else f"{'e' if man == 'excited' else 'g'}{m:+.1f}"


def _run_populations(cfg: ScenarioConfig) -> ResultTable:
    scheme = cfg.scheme()
    fields = cfg.fields()
    if cfg.omega_pr > 0:
        if abs(fields.delta) > 1e-12:
            raise ConfigError("populations workflow with a probe requires "
                              "offset = 0 (degenerate probe)")
        from .levels import probe_raising
        Vx = probe_raising(scheme) * cfg.omega_pr
        H = pump_hamiltonian(scheme, fields.omega_p, fields.delta_p) \
            + 0.5 * (Vx + Vx.conj().T)
    else:
        H = pump_hamiltonian(scheme, fields.omega_p, fields.delta_p)
    L = build_liouvillian(H, build_collapse(scheme))
    t_grid = np.linspace(0.0, cfg.t_final, cfg.t_points)
    ev = evolve(L, equal_ground_state(scheme), cfg.t_final, tol=cfg.evolve_tol,
                t_eval=t_grid)
    cols: List[Tuple[str, str]] = [("t", "1/Gamma")]
    cols += [(f"pop_{_sublevel_label(scheme, i)}", "1")
             for i in range(scheme.dim)]
    sigma_pairs = [(e, g) for g in scheme.ground_indices
                   for e in scheme.excited_indices
                   if abs(scheme.m_of(e) - scheme.m_of(g)) == 1]
    for e, g in sigma_pairs:
        lbl = f"{_sublevel_label(scheme, e)}_{_sublevel_label(scheme, g)}"
        cols += [(f"re_rho_{lbl}", "1"), (f"im_rho_{lbl}", "1")]
    rows = []
    for t, rho in zip(ev.times, ev.states):
        row = [t] + [float(np.real(rho[i, i])) for i in range(scheme.dim)]
        for e, g in sigma_pairs:
            row += [float(np.real(rho[e, g])), float(np.imag(rho[e, g]))]
        rows.append(tuple(row))
    return ResultTable(columns=cols, rows=rows)


def _run_inversion_scan(cfg: ScenarioConfig) -> ResultTable:
    scheme = cfg.scheme()
    scan = inversion_scan(scheme, cfg.delta_p, cfg.s_grid)
    cols = [("S", "1"), ("omega_p", "Gamma")]
    cols += [(f"pop_{_sublevel_label(scheme, i)}", "1")
             for i in range(scheme.dim)]
    cols += [("inversion_flag", "bool")]
    e0 = scheme.index("excited", 0.0)
    g_side = [scheme.index("ground", m) for m in (-1.0, 1.0)
              if ("ground", m) in scheme.index_map]
    rows = []
    for p in scan.points:
        inverted = p.populations[e0] > max(p.populations[i] for i in g_side)
        rows.append(tuple([p.S, p.omega_p] + [float(x) for x in p.populations]
                          + [bool(inverted)]))
    prov = {}
    if scan.s_star is not None:
        prov["s_star"] = repr(float(scan.s_star))
    return ResultTable(columns=cols, rows=rows, provenance=prov)


def _run_spectrum(cfg: ScenarioConfig) -> ResultTable:
    delta_grid = cfg.delta_grid
    if cfg.two_level:
        H = two_level_hamiltonian(cfg.omega_p, cfg.delta_p)
        L = build_liouvillian(H, two_level_collapse())
        rho = steady_state(L)
        spec = correlation_spectrum(L, rho, two_level_dipole(), delta_grid,
                                    decay_rel_tol=cfg.decay_rel_tol,
                                    t_max=cfg.t_max_correlation)
        return ResultTable(columns=[("delta", "Gamma"), ("absorption", "arb")],
                           rows=[(d, a) for d, a in zip(spec.delta,
                                                        spec.absorption)])
    scheme = cfg.scheme()
    if cfg.probe_polarization == "parallel":
        rho, L = pump_only_steady_state(scheme, cfg.omega_p, cfg.delta_p)
        spec = correlation_spectrum(L, rho, parallel_dipole(scheme), delta_grid,
                                    decay_rel_tol=cfg.decay_rel_tol,
                                    t_max=cfg.t_max_correlation)
        return ResultTable(columns=[("delta", "Gamma"), ("absorption", "arb")],
                           rows=[(d, a) for d, a in zip(spec.delta,
                                                        spec.absorption)])
    pg = perpendicular_gain_spectrum(scheme, cfg.fields(), delta_grid,
                                     t_max=cfg.t_max_correlation,
                                     n_harmonics=cfg.n_harmonics)
    return ResultTable(
        columns=[("delta", "Gamma"), ("absorption", "arb"),
                 ("absorption_weak_probe", "arb")],
        rows=[(d, a, b) for d, a, b in zip(pg.delta, pg.absorption,
                                           pg.weak_probe_absorption)])


def _run_min_absorption(cfg: ScenarioConfig, threads: int) -> ResultTable:
    scheme = cfg.scheme()
    grid = cfg.omega_p_grid

    def worker(omega):
        scan = min_absorption_scan(scheme, cfg.delta_p, [omega],
                                   delta_grid=cfg.delta_grid)
        return scan.points[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(worker, grid))
    else:
        points = [worker(w) for w in grid]
    rows = [(p.omega_p, p.min_absorption, p.delta_at_min) for p in points]
    return ResultTable(columns=[("omega_p", "Gamma"),
                                ("min_absorption", "arb"),
                                ("delta_at_min", "Gamma")], rows=rows)


def _run_propagate(cfg: ScenarioConfig) -> ResultTable:
    scheme = cfg.scheme()
    cell = cfg.cell
    if cfg.input_intensity is not None:
        I0 = cfg.input_intensity
        fields = FieldConfig(omega_p=cell.omega_p_from_intensity(I0),
                             omega_pr=0.0, delta_p=cfg.delta_p,
                             delta_pr=cfg.delta_p)
    else:
        fields = FieldConfig(omega_p=cfg.omega_p, omega_pr=0.0,
                             delta_p=cfg.delta_p, delta_pr=cfg.delta_p)
        I0 = cell.intensity_from_omega_p(cfg.omega_p)
    prof = propagate(cell, scheme, fields, I_z0=I0, I_x0=cfg.seed_intensity,
                     mode=cfg.mode, self_consistent=cfg.self_consistent)
    cols = [("y", "m"), ("I_z", "W/m^2"), ("I_x", "W/m^2"),
            ("alpha_z", "1/m"), ("alpha_x", "1/m"),
            ("Gamma_z", "1/s"), ("Gamma_x", "1/s")]
    rows = [tuple(v) for v in zip(prof.y, prof.I_z, prof.I_x, prof.alpha_z,
                                  prof.alpha_x, prof.Gamma_z, prof.Gamma_x)]
    prov = {"clamped": str(prof.clamped).lower()}
    return ResultTable(columns=cols, rows=rows, provenance=prov)


def _run_output_curve(cfg: ScenarioConfig, threads: int) -> ResultTable:
    scheme = cfg.scheme()
    cell = cfg.cell
    grid = cfg.pump_grid

    def worker(I_in):
        return output_curve(cell, scheme, [I_in], cfg.delta_p)[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(worker, grid))
    else:
        points = [worker(v) for v in grid]
    rows = [(p.I_z_in, p.omega_p, p.I_x_out) for p in points]
    return ResultTable(columns=[("I_z_in", "W/m^2"), ("omega_p", "Gamma"),
                                ("I_x_out", "W/m^2")], rows=rows)


def run(cfg: ScenarioConfig, threads: int = 1) -> ResultTable:
    """Execute the selected workflow and attach provenance."""
    t0 = time.perf_counter()
    dispatch = {
        "populations": lambda: _run_populations(cfg),
        "inversion-scan": lambda: _run_inversion_scan(cfg),
        "spectrum": lambda: _run_spectrum(cfg),
        "min-absorption-scan": lambda: _run_min_absorption(cfg, threads),
        "propagate": lambda: _run_propagate(cfg),
        "output-curve": lambda: _run_output_curve(cfg, threads),
    }
    table = dispatch[cfg.workflow]()
    prov = {"tool": f"mirrorless {__version__}",
            "workflow": cfg.workflow,
            "config_sha256": cfg.source_sha256}
    prov.update(table.provenance)
    prov["wall_time_s"] = f"{time.perf_counter() - t0:.3f}"
    table.provenance = prov
    return table


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run one analysis workflow of the mirrorless-lasing "
                    "simulator from an INI scenario file.")
    parser.add_argument("config", help="path to the scenario .ini file")
    parser.add_argument("--output", help="output file (default: [output] "
                                         "path from the config, else stdout)")
    parser.add_argument("--format", choices=("csv", "json"),
                        help="override the output format")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for grid fan-out")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        table = run(cfg, threads=max(1, args.threads))
    except (DegenerateSteadyStateError, CorrelationWindowError) as exc:
        print(f"numerical failure ({cfg.workflow}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure ({cfg.workflow}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    fmt = args.format or cfg.output_format
    path = args.output or cfg.output_path
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            table.write_csv(fh) if fmt == "csv" else table.write_json(fh)
    else:
        table.write_csv(sys.stdout) if fmt == "csv" \
            else table.write_json(sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
