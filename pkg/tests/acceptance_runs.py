"""Stored outputs of the long experiment runs behind the acceptance tests.

Each run is executed through the CLI and its outputs kept under
``acceptance_runs/<name>/`` together with ``meta.json``. The metadata holds
a fingerprint of the package source and the config, so outputs are reused
only while neither has changed. Docstrings and comments are left out of the
fingerprint.

Run ``python3 tests/acceptance_runs.py [name ...]`` to produce them ahead of
``pytest``. Environment variables:

``SPATIALCV_ACCEPTANCE_DIR``
    storage directory (default ``<repo>/acceptance_runs``)
``SPATIALCV_ACCEPTANCE_FRESH=1``
    ignore stored outputs and recompute
``SPATIALCV_ACCEPTANCE_STORED_ONLY=1``
    never compute; a missing or stale run counts as a failure
"""

import ast
import hashlib
import json
import os
import resource
import sys
import time
from pathlib import Path

from spatialcv import cli

ROOT = Path(__file__).resolve().parents[1]
PACKAGE = ROOT / "src" / "spatialcv"

# name -> (bundled config, worker processes)
RUNS = {
    "paper-desk-j1": ("paper-desk", 1),
    "null": ("null", 1),
    "saturation": ("saturation", 1),
    "paper-desk-j4": ("paper-desk", 4),
}


class RunUnavailable(RuntimeError):
    pass


def storage() -> Path:
    return Path(os.environ.get("SPATIALCV_ACCEPTANCE_DIR", ROOT / "acceptance_runs"))


def _strip_docstrings(tree):
    for node in ast.walk(tree):
        if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
            body = node.body
            if body and isinstance(body[0], ast.Expr) and isinstance(body[0].value, ast.Constant) \
                    and isinstance(body[0].value.value, str):
                node.body = body[1:] or [ast.Pass()]
    return tree


def fingerprint(config: str) -> str:
    h = hashlib.sha256()
    for path in sorted(PACKAGE.rglob("*.py")):
        h.update(str(path.relative_to(PACKAGE)).encode())
        h.update(ast.dump(_strip_docstrings(ast.parse(path.read_text()))).encode())
    h.update(cli.resolve_config_path(config).read_bytes())
    return h.hexdigest()


def _cpu_seconds():
    own = resource.getrusage(resource.RUSAGE_SELF)
    kids = resource.getrusage(resource.RUSAGE_CHILDREN)
    return own.ru_utime + own.ru_stime + kids.ru_utime + kids.ru_stime


def load_meta(name):
    path = storage() / name / "meta.json"
    return json.loads(path.read_text()) if path.exists() else None


def ensure(name) -> Path:
    """Directory with up-to-date outputs of run ``name``; computes them if needed."""
    config, jobs = RUNS[name]
    out = storage() / name
    fp = fingerprint(config)
    meta = load_meta(name)
    fresh = os.environ.get("SPATIALCV_ACCEPTANCE_FRESH") == "1"
    if meta is not None and meta["fingerprint"] == fp and not fresh:
        return out
    if os.environ.get("SPATIALCV_ACCEPTANCE_STORED_ONLY") == "1":
        state = "missing" if meta is None else "stale (source or config changed)"
        raise RunUnavailable(f"run {name} is {state}; produce it with "
                             f"'python3 tests/acceptance_runs.py {name}'")
    out.mkdir(parents=True, exist_ok=True)
    (out / "meta.json").unlink(missing_ok=True)
    cpu0, t0 = _cpu_seconds(), time.perf_counter()
    code = cli.main(["run", config, "--out", str(out), "--jobs", str(jobs), "--quiet"])
    meta = {"config": config, "jobs": jobs, "exit_code": code, "fingerprint": fp,
            "wall_seconds": round(time.perf_counter() - t0, 1),
            "cpu_seconds": round(_cpu_seconds() - cpu0, 1),
            "cpu_count": os.cpu_count()}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return out


if __name__ == "__main__":
    for run in sys.argv[1:] or list(RUNS):
        start = time.perf_counter()
        print(f"{run}: started", flush=True)
        ensure(run)
        print(f"{run}: done in {time.perf_counter() - start:.0f}s", flush=True)
