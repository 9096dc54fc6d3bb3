"""Command-line driver wiring the pipeline.

Subcommands: check, emit-mlw, emit-smt, erase, eval.  Configuration
precedence is flags over GAZELLE_-prefixed environment variables over
defaults.  Reports are printed as text or JSON (--json); the exit status is
zero exactly when every verification condition is discharged (with
--no-discharge: when everything was generated without errors).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click

from .diagnostics import GazelleError
from .eraser import erase as erase_program
from .frontend import check_spec, parse_file
from .interp import evaluate
from .printer import print_program
from .smt import discharge, encode, solver_available
from .target_ir import emit_text, well_formed
from .translator import translate_program
from .vcgen import build_context, vcs_for_module
from .vcgen.bruteforce import Domain, check_vc_bruteforce


@dataclass
class RunConfig:
    command: str
    inputs: list[Path]
    solver: str | None = None
    timeout: float = 10.0
    jobs: int = 1
    out: Path | None = None
    json_report: bool = False
    no_discharge: bool = False
    strict: bool = False
    enable_lemmas: bool = False
    bf_int: tuple[int, int] = (-4, 4)
    bf_depth: int = 2
    bf_budget: int = 10_000_000

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise click.BadParameter("timeout must be positive")
        if self.jobs < 1:
            raise click.BadParameter("jobs must be at least 1")


@dataclass
class FileReport:
    path: str
    module: str = ""
    diagnostics: list[dict] = field(default_factory=list)
    vcs: list[dict] = field(default_factory=list)
    error: str | None = None

    def failed(self, no_discharge: bool) -> bool:
        if self.error or self.diagnostics:
            return True
        if no_discharge:
            return False
        return any(v["status"] not in ("proved", "valid-on-domain")
                   for v in self.vcs)


def _diag_dict(d) -> dict:
    return {"severity": d.severity, "message": d.message,
            "file": d.loc.file, "line": d.loc.line, "col": d.loc.col,
            "rule": d.rule}


def _pipeline(path: Path, cfg: RunConfig):
    """parse -> check_spec -> translate -> well_formed -> context; returns
    (report, module, ctx, vcs) with vcs None when a stage failed."""
    report = FileReport(str(path))
    try:
        program = parse_file(path)
    except GazelleError as err:
        report.error = str(err)
        return report, None, None, None
    diags = check_spec(program)
    if diags:
        report.diagnostics = [_diag_dict(d) for d in diags]
        return report, None, None, None
    try:
        module = translate_program(program, strict=cfg.strict)
    except GazelleError as err:
        report.error = str(err)
        return report, None, None, None
    report.module = module.name
    wf = well_formed(module)
    if wf:
        report.diagnostics = [_diag_dict(d) for d in wf]
        return report, module, None, None
    ctx = build_context(module, enable_lemmas=cfg.enable_lemmas)
    if ctx.diagnostics:
        report.diagnostics = [_diag_dict(d) for d in ctx.diagnostics]
        return report, module, ctx, None
    try:
        vcs = vcs_for_module(module, ctx)
    except GazelleError as err:
        report.error = str(err)
        return report, module, ctx, None
    return report, module, ctx, vcs


def cmd_check(cfg: RunConfig) -> dict:
    files = []
    for path in cfg.inputs:
        report, module, ctx, vcs = _pipeline(path, cfg)
        if vcs is not None:
            entries = [{"id": vc.id, "category": vc.category,
                        "function": vc.function, "line": vc.loc.line,
                        "description": vc.description} for vc in vcs]
            if cfg.no_discharge:
                for e in entries:
                    e["status"] = "generated"
            elif cfg.solver:
                scripts = [encode(vc, ctx) for vc in vcs]
                results = discharge(scripts, cfg.solver, cfg.timeout,
                                    cfg.jobs)
                for e, r in zip(entries, results):
                    e["status"] = r.status
                    e["time"] = round(r.wall_time, 3)
            else:
                dom = Domain(int_lo=cfg.bf_int[0], int_hi=cfg.bf_int[1],
                             depth=cfg.bf_depth, budget=cfg.bf_budget)
                for e, vc in zip(entries, vcs):
                    r = check_vc_bruteforce(vc, ctx, dom)
                    e["status"] = r.status
                    if r.assignment:
                        e["counterexample"] = {
                            k: repr(v) for k, v in r.assignment.items()}
            report.vcs = entries
        files.append(report)
    return _assemble(files, cfg)


def _assemble(files: list[FileReport], cfg: RunConfig) -> dict:
    failed = any(f.failed(cfg.no_discharge) for f in files)
    statuses: dict[str, int] = {}
    for f in files:
        for v in f.vcs:
            statuses[v["status"]] = statuses.get(v["status"], 0) + 1
    return {
        "files": [vars(f) for f in files],
        "summary": {"files": len(files),
                    "vcs": sum(len(f.vcs) for f in files),
                    "statuses": statuses},
        "exit_status": 1 if failed else 0,
    }


def _print_report(report: dict, as_json: bool, out: Path | None) -> None:
    if as_json:
        text = json.dumps(report, indent=2, sort_keys=True)
        if out:
            out.mkdir(parents=True, exist_ok=True)
            (out / "report.json").write_text(text + "\n")
        else:
            click.echo(text)
        return
    for f in report["files"]:
        click.echo(f"== {f['path']}" + (f" (module {f['module']})"
                                        if f["module"] else ""))
        if f.get("error"):
            click.echo(f"  error: {f['error']}")
        for d in f["diagnostics"]:
            click.echo(f"  {d['file']}:{d['line']}:{d['col']}: "
                       f"{d['severity']}: {d['message']}")
        for v in f["vcs"]:
            time = f" ({v['time']}s)" if "time" in v else ""
            click.echo(f"  {v['id']:60s} {v['status']}{time}")
    s = report["summary"]
    click.echo(f"-- {s['files']} file(s), {s['vcs']} VC(s): "
               + ", ".join(f"{k}={v}" for k, v in sorted(s["statuses"].items()))
               if s["vcs"] else "-- no VCs")


_shared = [
    click.option("--solver", default=None,
                 help="solver command template with a {file} placeholder"),
    click.option("--timeout", default=10.0, show_default=True,
                 help="per-VC solver timeout in seconds"),
    click.option("--jobs", default=1, show_default=True,
                 help="parallel solver processes"),
    click.option("--out", type=click.Path(path_type=Path), default=None,
                 help="output directory"),
    click.option("--json", "json_report", is_flag=True,
                 help="machine-readable report"),
    click.option("--no-discharge", is_flag=True,
                 help="generate VCs without checking them"),
    click.option("--strict", is_flag=True,
                 help="reject extensions to the core fragment"),
    click.option("--enable-lemma-functions", "enable_lemmas", is_flag=True,
                 help="lemma-function contracts become axioms"),
    click.option("--bf-int", default="-4:4", show_default=True,
                 help="integer range for brute-force checking, lo:hi"),
    click.option("--bf-depth", default=2, show_default=True,
                 help="structure size bound for brute-force checking"),
    click.option("--bf-budget", default=10_000_000, show_default=True,
                 help="search-node budget for brute-force checking"),
]


def _with_shared(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


def _config(command: str, inputs, **kw) -> RunConfig:
    lo, _, hi = kw.pop("bf_int").partition(":")
    return RunConfig(command=command, inputs=[Path(p) for p in inputs],
                     bf_int=(int(lo), int(hi)), **kw)


@click.group(context_settings={"auto_envvar_prefix": "GAZELLE"})
def main() -> None:
    """Deductive verification for annotated mini-ML programs."""


@main.command()
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@_with_shared
def check(inputs, json_report, out, **kw):
    """Generate and discharge the verification conditions of each file."""
    cfg = _config("check", inputs, json_report=json_report, out=out, **kw)
    report = cmd_check(cfg)
    _print_report(report, cfg.json_report, cfg.out)
    sys.exit(report["exit_status"])


@main.command("emit-mlw")
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@_with_shared
def emit_mlw(inputs, json_report, out, **kw):
    """Translate each file and write its verification-IR text."""
    cfg = _config("emit-mlw", inputs, json_report=json_report, out=out, **kw)
    status = 0
    for path in cfg.inputs:
        try:
            program = parse_file(path)
            module = translate_program(program, strict=cfg.strict)
            text = emit_text(module)
        except GazelleError as err:
            click.echo(f"{path}: {err}", err=True)
            status = 1
            continue
        if cfg.out:
            cfg.out.mkdir(parents=True, exist_ok=True)
            target = cfg.out / (path.stem + ".mlw")
            target.write_text(text)
            click.echo(str(target))
        else:
            click.echo(text, nl=False)
    sys.exit(status)


@main.command("emit-smt")
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@_with_shared
def emit_smt(inputs, json_report, out, **kw):
    """Write one SMT-LIB script per verification condition."""
    cfg = _config("emit-smt", inputs, json_report=json_report, out=out, **kw)
    outdir = cfg.out or Path(".")
    status = 0
    for path in cfg.inputs:
        report, module, ctx, vcs = _pipeline(path, cfg)
        if vcs is None:
            click.echo(f"{path}: {report.error or 'diagnostics reported'}",
                       err=True)
            for d in report.diagnostics:
                click.echo(f"  {d['message']}", err=True)
            status = 1
            continue
        outdir.mkdir(parents=True, exist_ok=True)
        for vc in vcs:
            script = encode(vc, ctx)
            target = outdir / (vc.id + ".smt2")
            target.write_text(script.text)
            click.echo(str(target))
    sys.exit(status)


@main.command()
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@_with_shared
def erase(inputs, json_report, out, **kw):
    """Write ghost-free source for each file."""
    cfg = _config("erase", inputs, json_report=json_report, out=out, **kw)
    status = 0
    for path in cfg.inputs:
        try:
            program = parse_file(path)
            erased = erase_program(program)
            text = print_program(erased)
        except GazelleError as err:
            click.echo(f"{path}: {err}", err=True)
            status = 1
            continue
        if cfg.out:
            cfg.out.mkdir(parents=True, exist_ok=True)
            target = cfg.out / (path.stem + ".ml")
            target.write_text(text)
            click.echo(str(target))
        else:
            click.echo(text, nl=False)
    sys.exit(status)


@main.command("eval")
@click.argument("input", type=click.Path(exists=True, path_type=Path))
@click.argument("entry")
@click.argument("args", nargs=-1)
@click.option("--fuel", default=10_000_000, show_default=True,
              help="evaluation step budget")
def eval_cmd(input, entry, args, fuel):
    """Erase INPUT and run ENTRY on ARGS with the reference interpreter."""
    try:
        program = parse_file(input)
        erased = erase_program(program)
        values = [_parse_arg(a) for a in args]
        outcome = evaluate(erased, entry, values, fuel=fuel)
    except GazelleError as err:
        click.echo(str(err), err=True)
        sys.exit(1)
    if outcome.kind == "value":
        click.echo(_show_value(outcome.value))
        sys.exit(0)
    if outcome.kind == "raised":
        click.echo(f"exception {outcome.exn}"
                   + (f" {list(outcome.exn_args)}" if outcome.exn_args else ""))
        sys.exit(1)
    click.echo("out of fuel")
    sys.exit(1)


def _parse_arg(text: str):
    text = text.strip()
    if text == "true":
        return True
    if text == "false":
        return False
    if text == "()":
        return None
    if text.startswith("[|") and text.endswith("|]"):
        inner = text[2:-2].strip()
        return ("A", [_parse_arg(x) for x in inner.split(";") if x.strip()])
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_parse_arg(x) for x in inner.split(";") if x.strip()]
    return int(text)


def _show_value(v) -> str:
    if v is None:
        return "()"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, list):
        return "[" + "; ".join(_show_value(x) for x in v) + "]"
    if isinstance(v, tuple):
        if v and v[0] == "C":
            if not v[2]:
                return v[1]
            return f"{v[1]} (" + ", ".join(_show_value(x) for x in v[2]) + ")"
        if v and v[0] == "R":
            inner = "; ".join(f"{k} = {_show_value(x)}"
                              for k, x in v[2].items())
            return "{ " + inner + " }"
        if v and v[0] == "A":
            return "[|" + "; ".join(_show_value(x) for x in v[1]) + "|]"
        return "(" + ", ".join(_show_value(x) for x in v) + ")"
    return repr(v)


if __name__ == "__main__":
    main()
