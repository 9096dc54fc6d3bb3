"""Driving an external SMT solver over encoded scripts.

The solver is a command template with a `{file}` placeholder; absence of the
binary is a result status, not an error.  Scripts run as subprocesses with a
per-script timeout, optionally over a small thread pool, and results join in
input order.
"""

from __future__ import annotations

import shlex
import shutil
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..diagnostics import GazelleError
from .encode import SmtScript

DEFAULT_TIMEOUT = 10.0


@dataclass
class DischargeResult:
    vc_id: str
    status: str  # proved | unknown | disproved | timeout | solver-missing
    wall_time: float = 0.0
    detail: str = ""


def solver_available(template: str) -> bool:
    try:
        argv = shlex.split(template)
    except ValueError:
        return False
    return bool(argv) and shutil.which(argv[0]) is not None


def discharge(scripts: list[SmtScript], solver_template: str,
              timeout: float = DEFAULT_TIMEOUT,
              jobs: int = 1) -> list[DischargeResult]:
    """One result per script, order-preserving."""
    if "{file}" not in solver_template:
        raise GazelleError("solver template must contain a {file} placeholder")
    if not solver_available(solver_template):
        return [DischargeResult(s.vc_id, "solver-missing") for s in scripts]
    if jobs <= 1:
        return [_run_one(s, solver_template, timeout) for s in scripts]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_one, s, solver_template, timeout)
                   for s in scripts]
        return [f.result() for f in futures]


def _run_one(script: SmtScript, template: str,
             timeout: float) -> DischargeResult:
    with tempfile.NamedTemporaryFile(
            "w", suffix=".smt2", prefix="vc_", delete=False) as handle:
        handle.write(script.text)
        path = handle.name
    try:
        argv = [a.replace("{file}", path) for a in shlex.split(template)]
        start = time.monotonic()
        try:
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=timeout)
        except subprocess.TimeoutExpired:
            return DischargeResult(script.vc_id, "timeout",
                                   time.monotonic() - start)
        except OSError as err:
            return DischargeResult(script.vc_id, "solver-missing",
                                   0.0, str(err))
        elapsed = time.monotonic() - start
        verdict = _first_verdict(proc.stdout)
        if verdict == "unsat":
            return DischargeResult(script.vc_id, "proved", elapsed)
        if verdict == "sat":
            return DischargeResult(script.vc_id, "disproved", elapsed,
                                   proc.stdout.strip())
        return DischargeResult(script.vc_id, "unknown", elapsed,
                               (proc.stdout + proc.stderr).strip()[:2000])
    finally:
        Path(path).unlink(missing_ok=True)


def _first_verdict(stdout: str) -> Optional[str]:
    for line in stdout.splitlines():
        line = line.strip()
        if line in ("sat", "unsat", "unknown"):
            return line
    return None
