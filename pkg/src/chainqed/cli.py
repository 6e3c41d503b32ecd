"""Command-line front end.

    chainqed single   --beta 0.01 --delta 0 --observable g2_trace
    chainqed ensemble --geometry antibragg --beta 0.01 --n 40 --observable psi_incoh_spectrum
    chainqed sweep    --geometry waveguide --beta 0.01 --n 1:300 --observable g2_zero
    chainqed mc       --beta 0.01 --n 4 --samples 100000 --seed 7
    chainqed figure   fig5 --out figures/

Every setting can also come from a ``key=value`` file given with
``--config``; flags override the file.  Output files start with a '#'
block echoing the resolved settings in the same ``key=value`` form, so an
output file is itself a valid config that regenerates it byte for byte.
Angles follow X_theta = (a e^{i theta} + a^dag e^{-i theta}) / 2; with this
convention the amplitude-quadrature squeezing of a resonant chain appears
at theta = pi/2.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata as importlib_metadata
from typing import Optional

import numpy as np

from . import ensemble, observables, single_emitter
from .core import DriveConfig, EmitterParams, Geometry, coherent_scattering_amplitude, input_amplitude
from .errors import ConfigError, GridTruncation, ModelError, UnsupportedGeometry
from .figures import DEFAULTS_VERSION, FIGURE_DEFAULTS, FIGURE_IDS, reproduce_figure
from .grid import FrequencyGrid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

HEADER = "# chainqed output"
# derived entries echoed for information only; ignored when read back
DERIVED_KEYS = {"version", "flags", "defaults_version", "panel"}


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"must be finite, got {text!r}")
    return value


def _optional_float(text):
    return None if text in ("", "none", "None") else _float(text)


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _n_range(text):
    """``a:b`` (inclusive), ``a:b:step`` or a comma list."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1 or hi < lo:
                raise ValueError
            values = list(range(lo, hi + 1, step))
        else:
            values = [int(x) for x in text.split(",")]
    except ValueError:
        raise ValueError(f"expected a:b, a:b:step or a comma list of integers, got {text!r}") from None
    if min(values) < 0:
        raise ValueError("emitter numbers must be non-negative")
    return text


SINGLE_OBSERVABLES = ("g2_trace", "g2_zero", "psi_incoh_spectrum", "psi_incoh_zero", "squeezing")

SCHEMA = {
    "format": (_choice("csv", "json"), "csv"),
    "grid_width": (_float, 20.0),
    "grid_points": (int, 2**14),
    "seed": (int, 0),
    "beta": (_float, 0.01),
    "delta": (_float, 0.0),
    "omega": (_float, 0.01),
    "ratio": (_float, 0.0),
    "drive": (_choice("external", "waveguide", "combined"), "external"),
    "geometry": (_choice("waveguide", "bragg", "antibragg", "combined"), "waveguide"),
    "n": (int, 1),
    "n_range": (_n_range, "1:300"),
    "observable": (_choice(*SINGLE_OBSERVABLES), "g2_zero"),
    "sweep_observable": (_choice("g2_zero", "psi_incoh_zero"), "g2_zero"),
    "theta": (_float, 0.0),
    "tau_max": (_float, 10.0),
    "omega_max": (_float, 5.0),
    "self_consistent": (_bool, False),
    "lattice_spacing": (_optional_float, None),
    "n_eff": (_float, 1.0),
    "order": (int, 1),
    "samples": (int, 100_000),
    "scale": (_float, 0.5),
    "chunk_size": (int, 10_000),
    "id": (_choice(*FIGURE_IDS), "fig5"),
}

GLOBAL_KEYS = ("format", "grid_width", "grid_points", "seed")
COMMAND_KEYS = {
    "single": ("drive", "beta", "delta", "omega", "ratio", "observable", "theta", "tau_max",
               "omega_max"),
    "ensemble": ("geometry", "beta", "delta", "n", "omega", "ratio", "observable", "theta",
                 "tau_max", "omega_max", "self_consistent", "lattice_spacing", "n_eff", "order"),
    "sweep": ("geometry", "beta", "delta", "n_range", "omega", "ratio", "sweep_observable",
              "self_consistent"),
    "mc": ("beta", "n", "samples", "scale", "chunk_size"),
    "figure": ("id",),
}
# the sweep command spells its range and observable like the others
ALIASES = {"sweep": {"n": "n_range", "observable": "sweep_observable"}}


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_config(path: str) -> dict:
    """Parse a ``key=value`` file; an output file's '#' block is accepted too."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    out = {}
    is_output = bool(lines) and lines[0].strip() == HEADER
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if is_output:
            if not line.startswith("#"):
                break
            line = line[1:].strip()
            if line == HEADER[1:].strip() or line.startswith("note.") or "=" not in line:
                continue
        elif not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}", f"expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in DERIVED_KEYS:
            continue
        if key != "command" and key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}", f"unknown key {key!r}")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    common.add_argument("--config", default=s, help="key=value settings file")
    common.add_argument("--out", default=s, help="output file (directory for 'figure')")
    common.add_argument("--format", default=s, help="csv or json")
    common.add_argument("--grid-width", dest="grid_width", default=s, help="half width W of the frequency grid, units of Gamma")
    common.add_argument("--grid-points", dest="grid_points", default=s, help="grid intervals, a power of two")
    common.add_argument("--seed", default=s, help="Monte Carlo seed")
    common.add_argument("--workers", type=int, default=s, help="threads for sweeps")

    parser = argparse.ArgumentParser(prog="chainqed", parents=[common],
                                     description="Photon statistics of emitter chains coupled to a chiral waveguide.")
    sub = parser.add_subparsers(dest="command")

    def option(p, name, help_text):
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=s, help=help_text)

    p = sub.add_parser("single", parents=[common], help="one emitter")
    for name, text in [("drive", "external, waveguide or combined"), ("beta", "coupling"),
                       ("delta", "detuning / Gamma"), ("omega", "Rabi drive / Gamma"),
                       ("ratio", "Omega_ext / Omega_wg for combined drive"),
                       ("observable", "|".join(SINGLE_OBSERVABLES)), ("theta", "quadrature angle"),
                       ("tau_max", "largest |tau| written"), ("omega_max", "largest |omega| written")]:
        option(p, name, text)

    p = sub.add_parser("ensemble", parents=[common], help="a chain of N emitters")
    for name, text in [("geometry", "waveguide, bragg, antibragg or combined"), ("beta", "coupling"),
                       ("delta", "detuning / Gamma"), ("n", "number of emitters"),
                       ("omega", "Rabi drive / Gamma"), ("ratio", "Omega_ext / Omega_wg"),
                       ("observable", "|".join(SINGLE_OBSERVABLES)), ("theta", "quadrature angle"),
                       ("tau_max", "largest |tau| written"), ("omega_max", "largest |omega| written"),
                       ("self_consistent", "combined drive: use the actual guided amplitude"),
                       ("lattice_spacing", "lattice spacing / wavelength (reports the angle)"),
                       ("n_eff", "effective index of the guided mode"), ("order", "Bragg order")]:
        option(p, name, text)

    p = sub.add_parser("sweep", parents=[common], help="zero-delay observables versus N")
    for name, text in [("geometry", "waveguide, bragg, antibragg or combined"), ("beta", "coupling"),
                       ("delta", "detuning / Gamma"), ("n", "a:b, a:b:step or a comma list"),
                       ("omega", "Rabi drive / Gamma"), ("ratio", "Omega_ext / Omega_wg"),
                       ("observable", "g2_zero or psi_incoh_zero"),
                       ("self_consistent", "combined drive: use the actual guided amplitude")]:
        option(p, name, text)

    p = sub.add_parser("mc", parents=[common], help="random-position Monte Carlo g2(0)")
    for name, text in [("beta", "coupling"), ("n", "number of emitters"), ("samples", "phase draws"),
                       ("scale", "pair-intensity weight"), ("chunk_size", "draws per seeded chunk")]:
        option(p, name, text)

    p = sub.add_parser("figure", parents=[common], help="tables behind a standard figure")
    p.add_argument("id", nargs="?", default=s, help=", ".join(FIGURE_IDS))
    return parser


def resolve(args: dict) -> dict:
    """Merge file, flags and defaults into a validated config."""
    raw = {}
    if "config" in args:
        raw.update(read_config(args["config"]))
    command = args.get("command") or raw.pop("command", None)
    raw.pop("command", None)
    if command not in COMMAND_KEYS:
        raise ConfigError("command", f"choose one of {', '.join(COMMAND_KEYS)}")
    aliases = ALIASES.get(command, {})
    for key, value in args.items():
        if key in ("command", "config", "out", "workers"):
            continue
        raw[aliases.get(key, key)] = value
    raw = {aliases.get(k, k): v for k, v in raw.items()}
    allowed = GLOBAL_KEYS + COMMAND_KEYS[command]
    cfg = {"command": command}
    for key in raw:
        if key not in allowed:
            raise ConfigError(key, f"not a setting of '{command}'")
    for key in allowed:
        parse, default = SCHEMA[key]
        if key in raw:
            try:
                cfg[key] = parse(raw[key]) if isinstance(raw[key], str) else raw[key]
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, str(exc)) from None
        else:
            cfg[key] = default
    try:
        FrequencyGrid(cfg["grid_width"], cfg["grid_points"])
    except ValueError as exc:
        raise ConfigError("grid_points" if "n_points" in str(exc) else "grid_width", str(exc)) from None
    if "beta" in cfg and not 0.0 < cfg["beta"] < 1.0:
        raise ConfigError("beta", f"must lie in (0, 1), got {cfg['beta']}")
    if "n" in cfg and cfg["n"] < (1 if command == "mc" else 0):
        raise ConfigError("n", f"must be at least {1 if command == 'mc' else 0}, got {cfg['n']}")
    if cfg.get("omega", 1.0) == 0.0:
        raise ConfigError("omega", "drive must be nonzero")
    return cfg


def _params(cfg):
    return EmitterParams(cfg["beta"], cfg["delta"])


def _drive(cfg, geometry, n):
    omega = cfg["omega"]
    if geometry == "waveguide":
        return DriveConfig.waveguide(omega, n)
    if geometry == "combined":
        return DriveConfig.combined(omega, cfg["ratio"], n)
    mode = {"external": Geometry.EXTERNAL_SINGLE, "bragg": Geometry.BRAGG,
            "antibragg": Geometry.ANTI_BRAGG}[geometry]
    return DriveConfig.external(omega, n, mode)


def _normalization(response):
    """Squared amplitude the ``_norm`` columns are divided by."""
    if response.geometry in (Geometry.WAVEGUIDE, Geometry.COMBINED):
        return input_amplitude(response.params, response.drive) ** 2
    return coherent_scattering_amplitude(response.params, response.drive) ** 2


def _observable_table(cfg, response, grid):
    obs = cfg["observable"]
    if obs == "g2_trace":
        trace = observables.g2_trace(response, grid)
        keep = np.abs(trace.tau) <= cfg["tau_max"]
        rows = list(zip(trace.tau[keep], trace.g2[keep]))
        notes = {"explanation": trace.explanation} if trace.explanation else {}
        return ["tau_gamma", "g2"], rows, notes
    if obs == "g2_zero":
        g2 = observables.g2_zero(response, grid)
        notes = {"explanation": observables.ZERO_POWER} if math.isinf(g2) else {}
        return ["n_emitters", "g2"], [(response.n_emitters, g2)], notes
    if obs == "psi_incoh_zero":
        v = observables.psi_incoh_at_zero(response, grid)
        return (["n_emitters", "re_psi", "im_psi", "abs_psi_norm"],
                [(response.n_emitters, v.real, v.imag, abs(v / _normalization(response)))], {})
    omega = grid.omega
    omega = omega[np.abs(omega) <= cfg["omega_max"]]
    if obs == "psi_incoh_spectrum":
        psi = response.psi_incoh_freq(omega)
        norm = np.abs(psi / _normalization(response))
        return (["omega_over_gamma", "re_psi", "im_psi", "abs_psi_norm"],
                list(zip(omega, psi.real, psi.imag, norm)), {})
    spec = observables.squeezing_spectrum(response, cfg["theta"], omega)
    return (["omega_over_gamma", "S_theta", "S_min", "optimal_theta_rad"],
            list(zip(spec.omega, spec.S, spec.S_min, spec.optimal_theta)), {})


def _run_single(cfg, grid, workers):
    p = _params(cfg)
    drive = _drive(cfg, cfg["drive"], 1)
    solver = {"external": single_emitter.response_external,
              "waveguide": single_emitter.response_waveguide,
              "combined": single_emitter.response_combined}[cfg["drive"]]
    response = solver(p, drive)
    cols, rows, notes = _observable_table(cfg, response, grid)
    return [("", cols, rows, notes, response.flags)]


def _run_ensemble(cfg, grid, workers):
    p = _params(cfg)
    drive = _drive(cfg, cfg["geometry"], cfg["n"])
    notes, flags = {}, set()
    if cfg["lattice_spacing"] is not None and cfg["geometry"] != "waveguide":
        geom = ensemble.BraggGeometry(cfg["lattice_spacing"], 1.0, cfg["n_eff"], cfg["order"])
        angle = (ensemble.anti_bragg_angle(geom) if cfg["geometry"] == "antibragg"
                 else ensemble.bragg_angle(geom))
        notes["angle_rad"] = angle
        flags |= geom.flags
    if cfg["geometry"] == "combined":
        response = ensemble.combined_chain(p, drive, grid, cfg["self_consistent"])
    else:
        response = ensemble.respond(p, drive, grid)
    cols, rows, extra = _observable_table(cfg, response, grid)
    notes.update(extra)
    return [("", cols, rows, notes, response.flags | flags)]


def _run_sweep(cfg, grid, workers):
    p = _params(cfg)
    text = cfg["n_range"]
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        ns = range(parts[0], parts[1] + 1, parts[2] if len(parts) == 3 else 1)
    else:
        ns = [int(x) for x in text.split(",")]
    template = _drive(cfg, cfg["geometry"], 1)

    def solver(params, drive, g):
        if cfg["geometry"] == "combined":
            return ensemble.combined_chain(params, drive, g, cfg["self_consistent"])
        return ensemble.respond(params, drive, g)

    flags = set(p.flags | template.flags)
    if cfg["geometry"] == "combined" and max(ns) > 0:
        # effective couplings only grow along the chain, so the longest one carries every flag
        flags |= solver(p, dataclasses.replace(template, n_emitters=max(ns)), grid).flags
    if cfg["sweep_observable"] == "g2_zero":
        n_sorted, values = observables.g2_zero_sweep(p, template, ns, grid, workers, solver=solver)
        rows = list(zip(n_sorted, values))
        k = int(np.argmin(values))
        notes = {"minimum_n": int(n_sorted[k]), "minimum_g2": float(values[k])}
        return [("", ["n_emitters", "g2"], rows, notes, flags)]
    n_sorted = sorted(set(ns))

    def one(n):
        r = solver(p, dataclasses.replace(template, n_emitters=n), grid)
        return observables.psi_incoh_at_zero(r, grid)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(one, n_sorted))
    rows = [(n, v.real, v.imag) for n, v in zip(n_sorted, values)]
    return [("", ["n_emitters", "re_psi", "im_psi"], rows, {}, flags)]


def _run_mc(cfg, grid, workers):
    p = EmitterParams(cfg["beta"])
    drive = DriveConfig.external(0.01, cfg["n"], Geometry.BRAGG)
    est = ensemble.random_distance_g2_mc(p, drive, cfg["samples"], cfg["seed"],
                                         chunk_size=cfg["chunk_size"], pair_scale=cfg["scale"])
    rows = [(est.n_emitters, est.estimate, est.stderr)]
    return [("", ["n_emitters", "g2", "g2_stderr"], rows, {}, p.flags)]


def _run_figure(cfg, grid, workers):
    out = []
    for panel in reproduce_figure(cfg["id"], grid, workers):
        notes = dict(panel.notes)
        for key, value in FIGURE_DEFAULTS[cfg["id"]].items():
            notes[f"defaults.{key}"] = value
        out.append((panel.name, panel.columns, panel.rows, notes, frozenset()))
    return out


RUNNERS = {"single": _run_single, "ensemble": _run_ensemble, "sweep": _run_sweep,
           "mc": _run_mc, "figure": _run_figure}


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    # shortest string that round-trips exactly
    return repr(value)


def _json_cell(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return int(value)
    value = float(value)
    return value if math.isfinite(value) else _cell(value)


def _version() -> str:
    try:
        return importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        return "unknown"


def _metadata(cfg, panel, notes, flags):
    meta = {"version": _version()}
    if cfg["command"] == "figure":
        meta["defaults_version"] = DEFAULTS_VERSION
        meta["panel"] = panel
    meta["command"] = cfg["command"]
    meta.update({k: _format_value(v) for k, v in sorted(cfg.items()) if k != "command"})
    meta["flags"] = " | ".join(sorted(flags))
    meta.update({f"note.{k}": _format_value(v) for k, v in notes.items()})
    return meta


def render(cfg, panel, columns, rows, notes, flags) -> str:
    meta = _metadata(cfg, panel, notes, flags)
    if cfg["format"] == "json":
        doc = {"metadata": meta, "columns": columns,
               "rows": [[_json_cell(v) for v in row] for row in rows]}
        return json.dumps(doc, indent=1) + "\n"
    lines = [HEADER] + [f"# {k}={v}" for k, v in meta.items()]
    lines.append(",".join(columns))
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _write(path: Optional[str], text: str):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run(cfg: dict, out: Optional[str] = None, workers: Optional[int] = None) -> list:
    """Execute a resolved config; returns the paths written (empty for stdout)."""
    grid = FrequencyGrid(cfg["grid_width"], cfg["grid_points"])
    tables = RUNNERS[cfg["command"]](cfg, grid, workers)
    written = []
    if cfg["command"] == "figure":
        directory = out or "."
        os.makedirs(directory, exist_ok=True)
        for panel, cols, rows, notes, flags in tables:
            path = os.path.join(directory, f"{panel}.{cfg['format']}")
            _write(path, render(cfg, panel, cols, rows, notes, flags))
            written.append(path)
        return written
    (panel, cols, rows, notes, flags), = tables
    _write(out, render(cfg, panel, cols, rows, notes, flags))
    return [out] if out else []


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    try:
        cfg = resolve(args)
        run(cfg, args.get("out"), args.get("workers"))
    except ConfigError as exc:
        print(f"chainqed: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsupportedGeometry as exc:
        print(f"chainqed: unsupported: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridTruncation as exc:
        print(f"chainqed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ModelError as exc:
        print(f"chainqed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"chainqed: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
