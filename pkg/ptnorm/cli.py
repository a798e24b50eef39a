"""ptnorm command line

Run:
  python -m ptnorm norm --model oscillator --alpha 0.3 --c 1 --q +1 --n 0
  python -m ptnorm gram --model gpt --A 2.3 --B 3.1 --gamma 0.2 --labels +1:0,-1:0,+1:1
  python -m ptnorm evolve --model scarf --A 4.5 --B 4.6 --q +1 --n 0 --steps 256
  python -m ptnorm check --model oscillator --alpha 0.3 --c 0.5 --c2 1.5 --q +1 --n 0

Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 blow-up during evolution.
"""

import logging
import os
from typing import Annotated, Any, Dict, Optional

import typer
from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from ptnorm.app.commands import COMMANDS
from ptnorm.app.errors import BlowUp, NumericalFailure, ParameterError, ValidationFailure
from ptnorm.app.schemas import ResultRecord, RunConfig, parse_coeffs, parse_labels
from ptnorm.app.store.result_store import put_record, put_record_csv
from ptnorm.app.tools.model_tools import StateLabel

load_dotenv()

app = typer.Typer(add_completion=False, no_args_is_help=True, help="PT-symmetric pseudo-norms and dynamics.")
console = Console()
err_console = Console(stderr=True)

MODEL_KEYS = ("alpha", "c", "A", "B", "gamma")

ModelOpt = Annotated[Optional[str], typer.Option("--model", help="oscillator | gpt | scarf")]
AlphaOpt = Annotated[Optional[float], typer.Option("--alpha")]
COpt = Annotated[Optional[float], typer.Option("--c")]
AOpt = Annotated[Optional[float], typer.Option("--A")]
BOpt = Annotated[Optional[float], typer.Option("--B")]
GammaOpt = Annotated[Optional[float], typer.Option("--gamma")]
QOpt = Annotated[Optional[str], typer.Option("--q", help="+1 or -1")]
NOpt = Annotated[Optional[int], typer.Option("--n")]
LabelsOpt = Annotated[Optional[str], typer.Option("--labels", help="e.g. +1:0,-1:0,+1:1")]
TolOpt = Annotated[Optional[float], typer.Option("--tol")]
OutOpt = Annotated[Optional[str], typer.Option("--out")]
FormatOpt = Annotated[Optional[str], typer.Option("--format", help="json | csv")]
JobsOpt = Annotated[Optional[int], typer.Option("--jobs")]
NumericOpt = Annotated[bool, typer.Option("--numeric-only", help="skip the closed-form validity window")]
ConfigOpt = Annotated[Optional[str], typer.Option("--config", help="flat key=value file; flags override it")]


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@app.callback()
def main(
    log_level: Annotated[str, typer.Option("--log-level")] = os.getenv("PTNORM_LOG_LEVEL", "WARNING"),
) -> None:
    try:
        _setup_logging(log_level)
    except ValueError as exc:
        err_console.print(f"❌ invalid input: --log-level {escape(str(exc))}", soft_wrap=True)
        raise typer.Exit(code=2)


def _merge(flags: Dict[str, Any]) -> Dict[str, Any]:
    merged: Dict[str, Any] = {}
    path = flags.pop("config", None)
    if path:
        if not os.path.exists(path):
            raise ParameterError(f"config file not found: {path}")
        for key, value in dotenv_values(path).items():
            if value is not None and value != "":
                merged[key.replace("-", "_")] = value
    for key, value in flags.items():
        if value is None or value is False:
            continue
        merged[key] = value
    return merged


def build_config(command: str, flags: Dict[str, Any]) -> RunConfig:
    flat = _merge(dict(flags))
    if flags.get("q") is not None and flags.get("labels") is None:
        # a single state given by flags replaces a label list from the config file
        flat.pop("labels", None)
    family = flat.pop("model", None)
    if not family:
        raise ParameterError("--model is required (oscillator | gpt | scarf)")
    params: Dict[str, Any] = {"family": family}
    for key in MODEL_KEYS:
        if key in flat:
            params[key] = flat.pop(key)

    labels = parse_labels(str(flat.pop("labels", "")))
    q, n = flat.pop("q", None), flat.pop("n", None)
    if not labels and q is not None:
        try:
            labels = [StateLabel(q=int(str(q)), n=int(n or 0))]
        except ValueError as exc:
            raise ParameterError(f"--q must be +1 or -1 and --n a non-negative integer ({exc})") from exc
    coeffs = parse_coeffs(str(flat.pop("coeffs", "")))
    return RunConfig(command=command, model=params, labels=labels, coeffs=coeffs, **flat)


def _summary(record: ResultRecord, path: str) -> None:
    table = Table(title=f"{record.command} ({record.inputs.model.family})", show_header=True)
    table.add_column("quantity")
    table.add_column("value")
    table.add_column("error")
    for key, value in record.results.items():
        if isinstance(value, (list, dict)):
            continue
        err = record.errors.get(key)
        table.add_row(key, str(value), "" if err is None or isinstance(err, list) else f"{err:.2e}")
    console.print(table)
    console.print(f"✅ wrote {path} ({record.wall_time:.2f}s)")


def _run(command: str, flags: Dict[str, Any]) -> None:
    try:
        config = build_config(command, flags)
        record = COMMANDS[command](config)
        saved = put_record_csv(record, config.out) if config.format == "csv" else put_record(record, config.out)
    except BlowUp as exc:
        err_console.print(f"❌ blow-up at step {exc.step}: {escape(str(exc))}", soft_wrap=True)
        raise typer.Exit(code=4)
    except NumericalFailure as exc:
        err_console.print(f"❌ numerical failure: {escape(str(exc))}", soft_wrap=True)
        raise typer.Exit(code=3)
    except (ValidationFailure, ValidationError) as exc:
        err_console.print(f"❌ invalid input: {escape(str(exc))}", soft_wrap=True)
        raise typer.Exit(code=2)
    _summary(record, saved["path"])


@app.command()
def norm(
    model: ModelOpt = None,
    alpha: AlphaOpt = None,
    c: COpt = None,
    A: AOpt = None,
    B: BOpt = None,
    gamma: GammaOpt = None,
    q: QOpt = None,
    n: NOpt = None,
    tol: TolOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    numeric_only: NumericOpt = False,
    config: ConfigOpt = None,
) -> None:
    """|N| of one state: closed form against quadrature."""
    _run("norm", dict(locals()))


@app.command()
def gram(
    model: ModelOpt = None,
    alpha: AlphaOpt = None,
    c: COpt = None,
    A: AOpt = None,
    B: BOpt = None,
    gamma: GammaOpt = None,
    q: QOpt = None,
    n: NOpt = None,
    labels: LabelsOpt = None,
    tol: TolOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    jobs: JobsOpt = None,
    numeric_only: NumericOpt = False,
    config: ConfigOpt = None,
) -> None:
    """Normalized pseudo-inner-product Gram matrix, in energy order."""
    _run("gram", dict(locals()))


@app.command()
def evolve(
    model: ModelOpt = None,
    alpha: AlphaOpt = None,
    c: COpt = None,
    A: AOpt = None,
    B: BOpt = None,
    gamma: GammaOpt = None,
    q: QOpt = None,
    n: NOpt = None,
    labels: LabelsOpt = None,
    coeffs: Annotated[Optional[str], typer.Option("--coeffs", help="one complex coefficient per label")] = None,
    tol: TolOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    grid_half_width: Annotated[Optional[float], typer.Option("--grid-half-width")] = None,
    points: Annotated[Optional[int], typer.Option("--points")] = None,
    dt: Annotated[Optional[float], typer.Option("--dt")] = None,
    steps: Annotated[Optional[int], typer.Option("--steps")] = None,
    snapshot_every: Annotated[Optional[int], typer.Option("--snapshot-every")] = None,
    residual_time: Annotated[Optional[float], typer.Option("--residual-time")] = None,
    jobs: JobsOpt = None,
    numeric_only: NumericOpt = False,
    config: ConfigOpt = None,
) -> None:
    """Crank-Nicolson run: snapshots, pseudo-norm drift, continuity residual order."""
    _run("evolve", dict(locals()))


@app.command()
def check(
    model: ModelOpt = None,
    alpha: AlphaOpt = None,
    c: COpt = None,
    A: AOpt = None,
    B: BOpt = None,
    gamma: GammaOpt = None,
    q: QOpt = None,
    n: NOpt = None,
    c2: Annotated[Optional[float], typer.Option("--c2")] = None,
    tol: TolOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    config: ConfigOpt = None,
) -> None:
    """PT phase against a least-squares fit; contour-shift invariance for the oscillator."""
    _run("check", dict(locals()))


if __name__ == "__main__":
    app()
