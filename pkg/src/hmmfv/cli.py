"""Command-line front end: solve, convergence, diagnose, mesh-info.

Configuration is a flat ``key = value`` text file; any key can be
overridden on the command line with ``--set key=value`` (precedence:
command line > file > defaults).  All floating-point output is printed
with 9 significant digits.
"""

import argparse
import hashlib
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import S_SAMPLES, W_SAMPLES, gdm_quality_report
from .hmm import HmmDiscretisation
from .mesh import (MeshError, build_structured_triangular, load_mesh,
                   mesh_size, validate)
from .solver import (NewtonConfig, NewtonDiverged, LinearSolveFailure,
                     TimeGrid, solve_transient)
from .verify import manufactured_problem, run_convergence_study

COMMANDS = ("solve", "convergence", "diagnose", "mesh-info")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    command: str = "solve"
    level: int = 8
    mesh_file: str = ""
    dt: float = 1e-3
    T: float = 1.0
    kinetics: str = "brusselator"
    a: float = 0.0
    b: float = 1.0
    mu1: float = 0.25
    mu2: float = 0.25
    newton_tol: float = 1e-10
    newton_max_iter: int = 20
    out: str = "out"
    levels: tuple = (8, 16, 32)
    diag_levels: tuple = (4, 8, 16)
    s_labels: tuple = ("sin2d",)
    w_labels: tuple = ("linear_x", "constant")
    full_table: bool = False


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}


def _parse_value(key, raw, kind):
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() not in _BOOL_WORDS:
                raise ValueError
            return _BOOL_WORDS[raw.lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if all(p.lstrip("+-").isdigit() for p in parts):
                return tuple(int(p) for p in parts)
            return tuple(parts)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def _field_types():
    return {f.name: type(getattr(RunConfig(), f.name)) for f in fields(RunConfig)}


def _parse_pairs(lines, source):
    """key=value lines -> dict; blank lines and # comments ignored."""
    types = _field_types()
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source} line {lineno}: expected 'key = value', "
                              f"got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key == "command" or key not in types:
            raise ConfigError(f"{source} line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, value, types[key])
    return out


def _validate(cfg):
    checks = [
        ("dt", cfg.dt > 0, "must be > 0"),
        ("T", cfg.T > 0, "must be > 0"),
        ("mu1", cfg.mu1 > 0, "must be > 0"),
        ("mu2", cfg.mu2 > 0, "must be > 0"),
        ("newton_tol", cfg.newton_tol > 0, "must be > 0"),
        ("newton_max_iter", cfg.newton_max_iter >= 1, "must be >= 1"),
        ("level", cfg.level >= 1, "must be >= 1"),
        ("levels", len(cfg.levels) > 0 and all(
            isinstance(n, int) and n >= 1 for n in cfg.levels),
            "must be a nonempty list of integers >= 1"),
        ("diag_levels", len(cfg.diag_levels) > 0 and all(
            isinstance(n, int) and n >= 1 for n in cfg.diag_levels),
            "must be a nonempty list of integers >= 1"),
        ("kinetics", cfg.kinetics == "brusselator",
            "unknown preset (available: brusselator)"),
        ("s_labels", all(l in S_SAMPLES for l in cfg.s_labels),
            f"labels must be among {sorted(S_SAMPLES)}"),
        ("w_labels", all(l in W_SAMPLES for l in cfg.w_labels),
            f"labels must be among {sorted(W_SAMPLES)}"),
        ("command", cfg.command in COMMANDS, f"must be one of {COMMANDS}"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{key}: {msg}")
    return cfg


def parse_config(text, command="solve"):
    """Parse config file text into a fully validated RunConfig with defaults."""
    return build_config(command, file_text=text)


def build_config(command, file_text=None, overrides=()):
    """Merge defaults, file keys and --set overrides, then validate."""
    file_keys = _parse_pairs(file_text.splitlines(), "config") if file_text else {}
    types = _field_types()
    override_keys = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, _, value = item.partition("=")
        key = key.strip()
        if key == "command" or key not in types:
            raise ConfigError(f"--set: unknown key {key!r}")
        override_keys[key] = _parse_value(key, value, types[key])
    merged = {**file_keys, **override_keys}
    cfg = replace(RunConfig(command=command), **merged)
    if cfg.full_table:
        if "dt" not in merged:
            cfg = replace(cfg, dt=1e-4)
        if "levels" not in merged:
            cfg = replace(cfg, levels=(8, 16, 32, 64))
    return _validate(cfg)


def _fmt(x):
    return f"{x:.9g}" if isinstance(x, float) else str(x)


def _canonical_lines(cfg):
    out = []
    for f in sorted(fields(RunConfig), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        out.append(f"{f.name}={_fmt(value)}")
    return out


def config_hash(cfg):
    return hashlib.sha256("\n".join(_canonical_lines(cfg)).encode()).hexdigest()


def _load_meshes(cfg, levels):
    meshes = []
    if cfg.mesh_file:
        meshes.append(("file", load_mesh(Path(cfg.mesh_file).read_text())))
    else:
        for n in levels:
            meshes.append((str(n), build_structured_triangular(n)))
    return meshes


def _write_manifest(cfg, out_dir, meshes, extra=()):
    import numba
    import scipy

    lines = [f"command: {cfg.command}",
             f"config_hash: {config_hash(cfg)}"]
    lines += [f"config.{line}" for line in _canonical_lines(cfg)]
    for label, mesh in meshes:
        lines.append(f"mesh_checksum[{label}]: {mesh.checksum()}")
    lines += list(extra)
    lines += [
        f"hmmfv: {__version__}",
        f"python: {sys.version.split()[0]}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
        f"numba: {numba.__version__}",
    ]
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _newton_cfg(cfg):
    return NewtonConfig(tol_residual=cfg.newton_tol,
                        max_iter=cfg.newton_max_iter)


def _cmd_solve(cfg, out_dir):
    label, mesh = _load_meshes(cfg, [cfg.level])[0]
    disc = HmmDiscretisation(mesh)
    spec, _ = manufactured_problem(a=cfg.a, b=cfg.b, mu1=cfg.mu1, mu2=cfg.mu2)
    grid = TimeGrid.from_dt(cfg.T, cfg.dt)
    start = time.perf_counter()
    sol = solve_transient(disc, spec, grid, cfg=_newton_cfg(cfg), store="final")
    elapsed = time.perf_counter() - start
    u, v = sol.final
    for name, vec in (("final_u.dat", u), ("final_v.dat", v)):
        rows = [f"{x:.9g} {y:.9g} {val:.9g}" for (x, y), val
                in zip(mesh.cell_centers, vec.cell_values)]
        (out_dir / name).write_text("\n".join(rows) + "\n")
    iters = sol.newton_iterations
    log = [f"mesh={label} h={mesh_size(mesh):.9g} steps={grid.n_steps}",
           f"newton_total={sum(iters)} newton_max={max(iters) if iters else 0}",
           f"runtime_s={elapsed:.9g}"]
    (out_dir / "run.log").write_text("\n".join(log) + "\n")
    _write_manifest(cfg, out_dir, [(label, mesh)])
    return 0


def _cmd_convergence(cfg, out_dir):
    spec, exact = manufactured_problem(a=cfg.a, b=cfg.b, mu1=cfg.mu1, mu2=cfg.mu2)
    table = run_convergence_study(list(cfg.levels), cfg.dt, cfg.T, spec=spec,
                                  exact=exact, cfg=_newton_cfg(cfg))
    (out_dir / "errors.csv").write_text(table.to_csv())
    (out_dir / "grad_u.dat").write_text(table.plot_data("err_grad_u"))
    (out_dir / "grad_v.dat").write_text(table.plot_data("err_grad_v"))
    log = []
    for n, report, iters in zip(cfg.levels, table.reports,
                                table.newton_iterations):
        log.append(f"level={n} h={report.h:.9g} steps={len(iters)} "
                   f"newton_total={sum(iters)} newton_max={max(iters)} "
                   f"runtime_s={report.runtime:.9g}")
    (out_dir / "run.log").write_text("\n".join(log) + "\n")
    meshes = [(str(n), build_structured_triangular(n)) for n in cfg.levels]
    _write_manifest(cfg, out_dir, meshes)
    return 0


def _cmd_diagnose(cfg, out_dir):
    header = ["h", "C_D"]
    header += [f"S_D[{l}]" for l in cfg.s_labels]
    header += [f"W_D[{l}]" for l in cfg.w_labels]
    rows = [",".join(header)]
    meshes = []
    for n in cfg.diag_levels:
        mesh = build_structured_triangular(n)
        meshes.append((str(n), mesh))
        report = gdm_quality_report(HmmDiscretisation(mesh),
                                    s_labels=cfg.s_labels,
                                    w_labels=cfg.w_labels)
        row = [f"{report.h:.9g}", f"{report.coercivity:.9g}"]
        row += [f"{report.consistency[l]:.9g}" for l in cfg.s_labels]
        row += [f"{report.limit_conformity[l]:.9g}" for l in cfg.w_labels]
        rows.append(",".join(row))
    (out_dir / "diagnostics.csv").write_text("\n".join(rows) + "\n")
    _write_manifest(cfg, out_dir, meshes)
    return 0


def _cmd_mesh_info(cfg, out_dir):
    label, mesh = _load_meshes(cfg, [cfg.level])[0]
    report = validate(mesh)
    print(f"mesh: {label}")
    print(f"cells: {mesh.n_cells}")
    print(f"faces: {mesh.n_faces}")
    print(f"vertices: {mesh.n_vertices}")
    print(f"h: {mesh_size(mesh):.9g}")
    print(f"closedness_defect: {report.max_closedness_defect:.9g}")
    print(f"stokes_defect: {report.max_stokes_defect:.9g}")
    print(f"diamond_defect: {report.max_diamond_defect:.9g}")
    print(f"min_face_distance: {report.min_face_distance:.9g}")
    print(f"total_area: {report.total_area:.9g}")
    print(f"euler_characteristic: {report.euler_characteristic}")
    print(f"valid: {report.passed}")
    _write_manifest(cfg, out_dir, [(label, mesh)])
    return 0


_DISPATCH = {
    "solve": _cmd_solve,
    "convergence": _cmd_convergence,
    "diagnose": _cmd_diagnose,
    "mesh-info": _cmd_mesh_info,
}


def run(cfg):
    """Execute a validated config; returns a process exit status."""
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return _DISPATCH[cfg.command](cfg, out_dir)
    except (NewtonDiverged, LinearSolveFailure, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hmmfv",
        description="Hybrid finite-volume solver for two-species "
                    "reaction-diffusion systems")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="override a config key (repeatable)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--mesh-file", help="mesh file instead of a generator level")
    parser.add_argument("--level", type=int, help="structured mesh subdivisions")
    args = parser.parse_args(argv)

    overrides = list(args.set)
    if args.out:
        overrides.append(f"out={args.out}")
    if args.mesh_file:
        overrides.append(f"mesh_file={args.mesh_file}")
    if args.level is not None:
        overrides.append(f"level={args.level}")
    try:
        file_text = Path(args.config).read_text() if args.config else None
        cfg = build_config(args.command, file_text=file_text, overrides=overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
