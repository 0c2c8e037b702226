"""Command-line driver: ``hyperturb <run|sweep|check|eigen> --config PATH``.

Configuration is line oriented::

    mode = run            # top-level keys: mode, seed, samples, backend
    [model]
    eps = 0.1
    [grid]
    cells = 64, 64

Sections are ``model``, ``grid``, ``time``, ``sweep``, ``init`` and
``output``. Unknown keys and repeated keys are errors. Exit codes: 0 ok,
2 configuration error, 3 numerical abort, 4 failed check.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .diagnostics import convergence_sweep, structural_sweep
from .eos import EosParams
from .errors import AbortedRun, ConfigError, HyperturbError, NumericalError, UsageError
from .grid import Grid
from .initial import TAGS, initial_field, limit_state
from .model import NVAR, ModelParams, eigenvalues
from .solver import RELAXATION_STRATEGIES, SCHEMES, TimeControls, run_simulation

MODES = ("run", "sweep", "check", "eigen")
CSV_MAGIC = "# hyperturb fields v1"
CSV_HEADER = "x,y,phi,u1,u2,u3,s11,s12,s13,s22,s23,s33,k,y1,y2,y3"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any binary64 value."""
    return "%.17g" % x


@dataclass(frozen=True)
class RunConfig:
    mode: str = "run"
    seed: int = 0
    samples: int = 1000
    backend: str = "auto"
    params: ModelParams = field(default_factory=ModelParams)
    cells: tuple = (64,)
    length: float = 2.0 * math.pi
    controls: TimeControls = field(default_factory=TimeControls)
    sweep_eps: tuple = (0.2, 0.1, 0.05)
    reference_dt: float = 1e-3
    condition: str = "rest"
    amplitude: float = 1.0
    state: tuple = (0.0,) * NVAR
    direction: tuple = (1.0, 0.0, 0.0)
    out_dir: str = "out"

    def grid(self) -> Grid:
        return Grid(self.cells, self.length)


# -- value parsers ---------------------------------------------------------

def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("expects a finite number")
    return v


def _int(text):
    return int(text)


def _floats(text):
    return tuple(_float(t) for t in text.split(",") if t.strip())


def _ints(text):
    return tuple(_int(t) for t in text.split(",") if t.strip())


def _word(text):
    return text.strip()


# section -> key -> (parser, RunConfig target)
_MODEL_KEYS = ("alpha1", "alpha2", "alpha3", "xi", "beta", "c_d", "l", "nu", "eps")
SCHEMA = {
    "": {"mode": _word, "seed": _int, "samples": _int, "backend": _word},
    "model": {**{k: _float for k in _MODEL_KEYS}, "c": _float, "rho0": _float},
    "grid": {"cells": _ints, "length": _float},
    "time": {"cfl": _float, "t_final": _float, "max_steps": _int, "scheme": _word,
             "relaxation": _word, "n_sub": _int, "snapshot_times": _floats},
    "sweep": {"eps": _floats, "reference_dt": _float},
    "init": {"condition": _word, "amplitude": _float, "state": _floats, "direction": _floats},
    "output": {"dir": _word},
}


def _split(text):
    """Yield ``(line_no, section, key, value)``; syntax errors name the line."""
    section = ""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {no}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA or not section:
                raise ConfigError(f"line {no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {no}: expected 'key = value'")
        yield no, section, key, value


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    seen = {}
    values = {}
    for no, section, key, value in _split(text):
        where = f"[{section}]" if section else "top level"
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {no}: unknown key {key!r} in {where}")
        if (section, key) in seen:
            raise ConfigError(f"line {no}: duplicate key {key!r} in {where} "
                              f"(first set on line {seen[section, key]})")
        seen[section, key] = no
        try:
            values[section, key] = SCHEMA[section][key](value)
        except ValueError:
            raise ConfigError(f"line {no}: invalid value {value!r} for {key!r}") from None
    return _build(values)


def _build(v) -> RunConfig:
    get = lambda s, k, d: v.get((s, k), d)  # noqa: E731
    base = RunConfig()
    mode = get("", "mode", base.mode)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    backend = get("", "backend", base.backend)
    if backend != "auto" and backend not in kernels.available():
        raise ConfigError(f"backend must be 'auto' or one of {kernels.available()}")
    samples = get("", "samples", base.samples)
    if samples < 0:
        raise ConfigError("samples must be >= 0")

    try:
        eos = EosParams(get("model", "c", 1.0), get("model", "rho0", 1.0))
        params = ModelParams(**{k: get("model", k, getattr(base.params, k)) for k in _MODEL_KEYS},
                             eos=eos)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    cells = get("grid", "cells", base.cells)
    length = get("grid", "length", base.length)
    try:
        Grid(cells, length)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    tc = base.controls
    scheme = get("time", "scheme", tc.scheme)
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}")
    relaxation = get("time", "relaxation", tc.relaxation)
    if relaxation not in RELAXATION_STRATEGIES:
        raise ConfigError(f"relaxation must be one of {RELAXATION_STRATEGIES}")
    snaps = get("time", "snapshot_times", tc.snapshot_times)
    if any(s < 0 for s in snaps):
        raise ConfigError("snapshot_times must be >= 0")
    try:
        controls = TimeControls(cfl=get("time", "cfl", tc.cfl),
                                t_final=get("time", "t_final", tc.t_final),
                                max_steps=get("time", "max_steps", tc.max_steps),
                                scheme=scheme, relaxation=relaxation,
                                n_sub=get("time", "n_sub", tc.n_sub),
                                snapshot_times=tuple(sorted(snaps)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    sweep_eps = get("sweep", "eps", base.sweep_eps)
    if len(sweep_eps) < 3:
        raise ConfigError("sweep requires >= 3 values")
    if any(not 0 < e <= 1 for e in sweep_eps):
        raise ConfigError("sweep eps values must be in (0, 1]")
    if any(a <= b for a, b in zip(sweep_eps, sweep_eps[1:])):
        raise ConfigError("sweep eps values must be strictly decreasing")
    reference_dt = get("sweep", "reference_dt", base.reference_dt)
    if not reference_dt > 0:
        raise ConfigError("reference_dt must be > 0")

    condition = get("init", "condition", base.condition)
    if condition not in TAGS:
        raise ConfigError(f"condition must be one of {TAGS}")
    state = get("init", "state", base.state)
    if len(state) != NVAR:
        raise ConfigError(f"state needs {NVAR} values")
    direction = get("init", "direction", base.direction)
    if len(direction) != 3:
        raise ConfigError("direction needs 3 values")
    if abs(math.sqrt(sum(d * d for d in direction)) - 1.0) > 1e-12:
        raise ConfigError("direction must be a unit vector")

    return RunConfig(mode=mode, seed=get("", "seed", base.seed), samples=samples,
                     backend=backend, params=params, cells=cells, length=length,
                     controls=controls, sweep_eps=sweep_eps, reference_dt=reference_dt,
                     condition=condition, amplitude=get("init", "amplitude", base.amplitude),
                     state=state, direction=direction,
                     out_dir=get("output", "dir", base.out_dir))


def serialize_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config` (every key written explicitly)."""
    p, tc = cfg.params, cfg.controls
    floats = lambda xs: ", ".join(fmt(x) for x in xs)  # noqa: E731
    lines = [f"mode = {cfg.mode}", f"seed = {cfg.seed}", f"samples = {cfg.samples}",
             f"backend = {cfg.backend}", "", "[model]"]
    lines += [f"{k} = {fmt(getattr(p, k))}" for k in _MODEL_KEYS]
    lines += [f"c = {fmt(p.eos.c)}", f"rho0 = {fmt(p.eos.rho0)}", "", "[grid]",
              "cells = " + ", ".join(str(n) for n in cfg.cells), f"length = {fmt(cfg.length)}",
              "", "[time]", f"cfl = {fmt(tc.cfl)}", f"t_final = {fmt(tc.t_final)}",
              f"max_steps = {tc.max_steps}", f"scheme = {tc.scheme}",
              f"relaxation = {tc.relaxation}", f"n_sub = {tc.n_sub}"]
    if tc.snapshot_times:
        lines.append(f"snapshot_times = {floats(tc.snapshot_times)}")
    lines += ["", "[sweep]", f"eps = {floats(cfg.sweep_eps)}",
              f"reference_dt = {fmt(cfg.reference_dt)}", "", "[init]",
              f"condition = {cfg.condition}", f"amplitude = {fmt(cfg.amplitude)}",
              f"state = {floats(cfg.state)}", f"direction = {floats(cfg.direction)}",
              "", "[output]", f"dir = {cfg.out_dir}", ""]
    return "\n".join(lines)


# -- output ----------------------------------------------------------------

def to_json(obj, indent=0) -> str:
    """JSON text with 17-digit floats; non-finite floats become null."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(isinstance(x, (int, float, np.number)) and not isinstance(x, bool) for x in seq):
            return "[" + ", ".join(to_json(x) for x in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(x, indent + 1) for x in seq) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_fields_csv(path, U, grid: Grid):
    """Write a field in the versioned CSV layout (row-major cell order)."""
    U = np.asarray(U, dtype=float)
    coords = grid.coordinates()
    x = coords[0].reshape(-1)
    y = coords[1].reshape(-1) if grid.dim == 2 else np.zeros_like(x)
    rows = np.column_stack([x, y, U.reshape(-1, NVAR)])
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_MAGIC + "\n" + CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_fields_csv(path):
    """Return ``(x, y, U)`` with ``U`` of shape ``(n_cells, 14)``."""
    with open(path) as fh:
        if fh.readline().rstrip("\n") != CSV_MAGIC:
            raise UsageError(f"{path}: not a hyperturb fields file")
        if fh.readline().rstrip("\n") != CSV_HEADER:
            raise UsageError(f"{path}: unexpected header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2:]


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _params_dict(p: ModelParams):
    d = {k: getattr(p, k) for k in _MODEL_KEYS}
    d.update(c=p.eos.c, rho0=p.eos.rho0)
    return d


# -- commands --------------------------------------------------------------

def command_run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    grid = cfg.grid()
    U0 = initial_field(cfg.condition, grid, cfg.params, cfg.amplitude)
    os.makedirs(cfg.out_dir, exist_ok=True)
    report = {"mode": "run", "backend": kernels.active_name(), "grid": list(cfg.cells),
              "params": _params_dict(cfg.params), "condition": cfg.condition}
    try:
        traj = run_simulation(U0, grid, cfg.params, cfg.controls)
    except AbortedRun as exc:
        report.update(status="aborted", error=str(exc), step=exc.step)
        _write(os.path.join(cfg.out_dir, "report.json"), to_json(report) + "\n")
        raise
    snapshots = []
    for idx, (t, U) in enumerate(traj.snapshots):
        name = f"fields_{idx:04d}.csv"
        write_fields_csv(os.path.join(cfg.out_dir, name), U, grid)
        snapshots.append({"t": t, "file": name})
    write_fields_csv(os.path.join(cfg.out_dir, "fields_final.csv"), traj.final, grid)
    report.update(status="ok", t=traj.t, steps=traj.steps, clamp_count=traj.clamp_count,
                  snapshots=snapshots,
                  log=[{"step": r.step, "t": r.t, "dt": r.dt, "mass": r.mass,
                        "momentum": list(r.momentum), "entropy": r.entropy,
                        "max_sigma": r.max_sigma, "clamp_count": r.clamp_count}
                       for r in traj.log])
    _write(os.path.join(cfg.out_dir, "report.json"), to_json(report) + "\n")
    print(f"run finished: t={fmt(traj.t)} steps={traj.steps} clamp_count={traj.clamp_count}",
          file=out)
    return EXIT_OK


def command_sweep(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if not cfg.params.limit_compatible:
        raise ConfigError("sweep requires limit-compatible parameters "
                          "(alpha2 = beta = xi**2 and rho0 = 1)")
    if cfg.condition not in ("shear-layer", "taylor-green"):
        raise ConfigError("sweep needs condition shear-layer or taylor-green")
    grid = cfg.grid()
    state = limit_state(cfg.condition, grid, cfg.params, cfg.amplitude)
    rep = convergence_sweep(state, grid, cfg.params, cfg.sweep_eps, cfg.controls.t_final,
                            cfg.controls, reference_dt=cfg.reference_dt)
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = [{"eps": e, "e_core": a, "e_relax": b, "e_core_m1": c, "e_relax_m1": d}
            for e, a, b, c, d in zip(rep.eps, rep.e_core, rep.e_relax, rep.e_core_m1,
                                     rep.e_relax_m1)]
    doc = {"mode": "sweep", "backend": kernels.active_name(), "t_final": cfg.controls.t_final,
           "scheme": cfg.controls.scheme, "rows": rows, "slope_core": rep.slope_core,
           "slope_relax": rep.slope_relax, "core_rate_ok": rep.core_rate_ok,
           "relax_monotone": rep.relax_monotone}
    _write(os.path.join(cfg.out_dir, "convergence.json"), to_json(doc) + "\n")
    for r in rows:
        print(f"eps={fmt(r['eps'])} e_core={fmt(r['e_core'])} e_relax={fmt(r['e_relax'])}",
              file=out)
    print(f"slope_core={fmt(rep.slope_core)} relax_monotone={rep.relax_monotone}", file=out)
    return EXIT_OK


def command_check(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    rep = structural_sweep(cfg.samples, cfg.seed, cfg.params)
    os.makedirs(cfg.out_dir, exist_ok=True)
    doc = {"mode": "check", "samples": rep.n_samples, "seed": cfg.seed,
           "violations": rep.violations, "passed": rep.passed,
           "constraint_violating_samples": rep.n_constraint_violating,
           "worst": {k: {"metric": m, "sample": i} for k, (m, i) in rep.worst.items()}}
    _write(os.path.join(cfg.out_dir, "check.json"), to_json(doc) + "\n")
    for name, count in rep.violations.items():
        print(f"{name}: {count} violations", file=out)
    return EXIT_OK if rep.passed else EXIT_CHECK


def command_eigen(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    lam = eigenvalues(np.array(cfg.state), np.array(cfg.direction), cfg.params)
    for v in lam:
        print(fmt(v), file=out)
    return EXIT_OK


COMMANDS = {"run": command_run, "sweep": command_sweep, "check": command_check,
            "eigen": command_eigen}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hyperturb")
    ap.add_argument("command", choices=MODES)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        if "mode" in {k.strip() for k in _top_level_keys(text)} and cfg.mode != args.command:
            raise ConfigError(f"config mode {cfg.mode!r} does not match command {args.command!r}")
        cfg = replace(cfg, mode=args.command)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        prev = kernels.use(cfg.backend) if cfg.backend != "auto" else None
        try:
            return COMMANDS[args.command](cfg)
        finally:
            if prev is not None:
                kernels.use(prev)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        step = getattr(exc, "step", None)
        where = f" (step {step})" if step is not None else ""
        print(f"numerical error{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HyperturbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _top_level_keys(text):
    return [key for _, section, key, _ in _split(text) if section == ""]


if __name__ == "__main__":
    sys.exit(main())
