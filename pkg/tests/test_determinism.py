"""Bit-for-bit regression of CLI outputs against recorded hashes.

Re-record after an intentional numerical change with
``python3 tests/test_determinism.py``.
"""
import hashlib
import json
import pathlib
import sys
import tempfile

import pytest

from hyperturb import kernels
from hyperturb.cli import main
from hyperturb.diagnostics import theorem_error
from hyperturb.grid import Grid
from hyperturb.incompressible import run_limit, well_prepared_initial_data
from hyperturb.initial import limit_state
from hyperturb.model import ModelParams
from hyperturb.solver import TimeControls, run_simulation

BASELINE = pathlib.Path(__file__).parent / "baselines" / "hashes.json"

CASES = {
    "acoustic-1d": ("mode = run\n[grid]\ncells = 64\n[time]\nt_final = 0.05\n"
                    "snapshot_times = 0.02\n[init]\ncondition = acoustic-pulse\namplitude = 0.1\n"),
    "shear-2d-rusanov": ("mode = run\n[grid]\ncells = 16, 16\n[time]\nt_final = 0.1\n"
                         "[init]\ncondition = shear-layer\n"),
    "taylor-green-central": ("mode = run\n[grid]\ncells = 16, 16\n[time]\nt_final = 0.05\n"
                             "cfl = 0.2\nscheme = central-rk3\n[init]\ncondition = taylor-green\n"),
}


def run_case(text, workdir):
    workdir = pathlib.Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    cfg = workdir / "case.cfg"
    cfg.write_text(text)
    out = workdir / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out.glob("*.csv"))}


def small_sweep_error():
    """E_core of a 16x16 shear run at eps = 0.2 and t = 0.1, as a hex float."""
    g = Grid((16, 16))
    p = ModelParams(eps=0.2)
    s = limit_state("shear-layer", g, p)
    ref = run_limit(s, g, p, 0.1).final
    U = run_simulation(well_prepared_initial_data(s, g, p), g, p,
                       TimeControls(t_final=0.1, cfl=0.1, scheme="central-rk3")).final
    return float.hex(theorem_error(U, ref, g, p)[0])


def produce():
    with tempfile.TemporaryDirectory() as tmp:
        doc = {name: run_case(text, pathlib.Path(tmp) / name) for name, text in CASES.items()}
    doc["e_core-16x16-eps0.2"] = small_sweep_error()
    return doc


def _recorded():
    if not BASELINE.exists():
        return {}
    return json.loads(BASELINE.read_text())


def test_repeated_runs_are_byte_identical(backend, tmp_path):
    text = CASES["shear-2d-rusanov"]
    assert run_case(text, tmp_path / "a") == run_case(text, tmp_path / "b")


def test_small_sweep_error_reproducible(backend):
    assert small_sweep_error() == small_sweep_error()


def test_matches_recorded_baseline(backend):
    recorded = _recorded().get(backend)
    if recorded is None:
        pytest.skip(f"no baseline recorded for backend {backend!r}")
    assert produce() == recorded


if __name__ == "__main__":
    data = _recorded()
    for name in kernels.available():
        prev = kernels.use(name)
        try:
            data[name] = produce()
        finally:
            kernels.use(prev)
    BASELINE.parent.mkdir(exist_ok=True)
    BASELINE.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"recorded {sorted(data)} -> {BASELINE}", file=sys.stderr)
