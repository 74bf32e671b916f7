"""apm-lab CLI - Main entry point."""

import functools
import sys
from typing import Callable, Optional

import click
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn

from apm_lab import __version__
from apm_lab.config import (
    VALID_FORMATS,
    ExperimentConfig,
    get_config_file,
    get_default_format,
    get_default_seed,
    get_default_threads,
    get_enumeration_cap,
    set_preference,
    validate_seed,
)
from apm_lab.errors import handle_error

console = Console(stderr=True)

MODE_CHOICE = click.Choice(["exact", "mc"])


def common_options(f: Callable) -> Callable:
    """Attach the options every experiment shares."""

    @click.option("--seed", type=int, default=None, help="Seed (default: $APM_LAB_SEED or config)")
    @click.option(
        "--format", "fmt", type=click.Choice(VALID_FORMATS), default=None, help="Report format"
    )
    @click.option("--output", "-o", type=click.Path(), default=None, help="Write report to file")
    @click.option("--threads", type=int, default=None, help="Worker threads (default: config)")
    @click.option("--timing", is_flag=True, help="Include wall-clock seconds in the report")
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        return f(*args, **kwargs)

    return wrapper


def make_progress_callback(progress: Progress) -> Callable:
    """Turn oracle events into rich progress bars."""
    tasks = {}

    def callback(event: str, data: dict):
        if event == "oracle_start":
            label = "Enumerating" if data.get("mode") == "exact" else "Sampling"
            tasks["current"] = progress.add_task(label, total=data.get("total"))
        elif event == "block_done" and "current" in tasks:
            progress.advance(tasks["current"], data.get("items", 0))

    return callback


def execute(
    subcommand: str,
    params: dict,
    seed: Optional[int],
    fmt: Optional[str],
    output: Optional[str],
    threads: Optional[int],
    timing: bool,
) -> None:
    """Resolve defaults, run the experiment, and exit with its status."""
    from apm_lab.runner import run

    try:
        config = ExperimentConfig(
            subcommand=subcommand,
            params={key: value for key, value in params.items() if value is not None},
            seed=get_default_seed() if seed is None else seed,
            format=fmt or get_default_format(),
            output=output,
            threads=threads or get_default_threads(),
            timing=timing,
        )
    except Exception as e:
        sys.exit(handle_error(e))

    with Progress(
        TextColumn("[dim]{task.description}[/dim]"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    ) as progress:
        status = run(config, progress_callback=make_progress_callback(progress))

    if status:
        sys.exit(status)
    if output:
        console.print(f"[green]✓[/green] Report written to {output}")


@click.group()
@click.version_option(version=__version__, prog_name="apm-lab")
def main():
    """apm-lab - alpha-Partial Matching simulation and verification lab.

    Exact and Monte Carlo experiments on the matching-parity extractor, the
    quantum fingerprint protocol, its streaming variant and bounded-memory
    adversaries. Every run prints a CSV or JSON report.
    """
    pass


@main.command()
@click.option("--x", "x", required=True, help="Bitstring x, character k is bit k")
@click.option("--matching", default=None, help='Matching as "i j;i j"')
@click.option("--matching-file", type=click.Path(), default=None, help="Matching file")
@common_options
def extract(x, matching, matching_file, seed, fmt, output, threads, timing):
    """Compute the edge parities z(x, M).

    Examples:

        apm-lab extract --x 1010 --matching "0 1;2 3"
    """
    params = {"x": x, "matching": matching, "matching_file": matching_file}
    execute("extract", params, seed, fmt, output, threads, timing)


@main.command()
@click.option("--n", type=int, required=True, help="Number of vertices")
@click.option("--m", type=int, required=True, help="Number of edges")
@click.option("--k", type=int, default=None, help="Also report the hit probability for weight k")
@click.option("--enumerate", "enumerate_", is_flag=True, help="Check --k by enumeration")
@common_options
def count(n, m, k, enumerate_, seed, fmt, output, threads, timing):
    """Count m-edge matchings on n vertices."""
    params = {"n": n, "m": m, "k": k, "enumerate": enumerate_ or None}
    execute("count", params, seed, fmt, output, threads, timing)


@main.command("sample-matching")
@click.option("--n", type=int, required=True, help="Number of vertices")
@click.option("--m", type=int, required=True, help="Number of edges")
@click.option("--count", "count_", type=int, default=1, show_default=True, help="Samples")
@common_options
def sample_matching_cmd(n, m, count_, seed, fmt, output, threads, timing):
    """Draw uniform m-edge matchings."""
    params = {"n": n, "m": m, "count": count_}
    execute("sample-matching", params, seed, fmt, output, threads, timing)


@main.command()
@click.option("--n", type=int, required=True, help="Dimension of the cube")
@click.option("--family", default="full", show_default=True, help="Set family")
@click.option("--c", type=int, default=0, show_default=True, help="Deficiency parameter")
@click.option("--set-file", type=click.Path(), default=None, help="Set file (family 'file')")
@click.option("--levels", is_flag=True, help="Report level weights instead of coefficients")
@common_options
def fourier(n, family, c, set_file, levels, seed, fmt, output, threads, timing):
    """Dump the Fourier coefficients of the indicator of A.

    Examples:

        apm-lab fourier --n 4 --family prefix-parity --c 1 --format csv

        apm-lab fourier --n 10 --family random --c 3 --levels
    """
    params = {
        "n": n,
        "family": family,
        "c": c,
        "set_file": set_file,
        "levels": levels or None,
    }
    execute("fourier", params, seed, fmt, output, threads, timing)


@main.command("kkl-check")
@click.option("--n", type=int, required=True, help="Dimension of the cube")
@click.option("--functions", type=int, default=100, show_default=True, help="Random functions")
@click.option("--delta", "deltas", type=float, multiple=True, help="delta values (default 0.1..1)")
@common_options
def kkl_check(n, functions, deltas, seed, fmt, output, threads, timing):
    """Check the KKL inequality on random {-1, 0, 1}-valued functions."""
    params = {"n": n, "functions": functions, "deltas": list(deltas) or None}
    execute("kkl-check", params, seed, fmt, output, threads, timing)


@main.command()
@click.option("--n", type=int, required=True, help="Dimension of the cube")
@click.option("--m", type=int, required=True, help="Number of edges")
@click.option("--family", default="full", show_default=True, help="Set family")
@click.option("--c", type=int, default=0, show_default=True, help="Deficiency parameter")
@click.option("--set-file", type=click.Path(), default=None, help="Set file (family 'file')")
@click.option("--mode", type=MODE_CHOICE, default="exact", show_default=True)
@click.option("--trials", type=int, default=10_000, show_default=True, help="Matchings in mc mode")
@common_options
def tvd(n, m, family, c, set_file, mode, trials, seed, fmt, output, threads, timing):
    """Expected distance of z from uniform for one set A.

    Examples:

        apm-lab tvd --n 4 --m 1 --family prefix-parity --c 1 --mode exact
    """
    params = {
        "n": n,
        "m": m,
        "family": family,
        "c": c,
        "set_file": set_file,
        "mode": mode,
        "trials": trials if mode == "mc" else None,
    }
    execute("tvd", params, seed, fmt, output, threads, timing)


@main.command("tvd-sweep")
@click.option("--n", type=int, required=True, help="Dimension of the cube")
@click.option("--m", type=int, required=True, help="Number of edges")
@click.option("--family", default="first-bits-fixed", show_default=True, help="Set family")
@click.option("--c-min", type=int, default=0, show_default=True)
@click.option("--c-max", type=int, default=0, show_default=True)
@click.option("--set-file", type=click.Path(), default=None, help="Set file (family 'file')")
@click.option("--mode", type=MODE_CHOICE, default="exact", show_default=True)
@click.option("--trials", type=int, default=10_000, show_default=True, help="Matchings in mc mode")
@common_options
def tvd_sweep(
    n, m, family, c_min, c_max, set_file, mode, trials, seed, fmt, output, threads, timing
):
    """Expected distance from uniform across a family, one row per c.

    Examples:

        apm-lab tvd-sweep --n 12 --m 3 --c-min 0 --c-max 6 --format csv
    """
    params = {
        "n": n,
        "m": m,
        "family": family,
        "c_min": c_min,
        "c_max": c_max,
        "set_file": set_file,
        "mode": mode,
        "trials": trials if mode == "mc" else None,
    }
    execute("tvd-sweep", params, seed, fmt, output, threads, timing)


@main.command()
@click.option("--solver", type=click.Choice(["quantum", "classical"]), default="quantum")
@click.option("--n", type=int, required=True, help="Number of bits of x")
@click.option("--m", type=int, required=True, help="Number of edges")
@click.option("--copies", type=int, default=1, show_default=True, help="Quantum message copies")
@click.option("--d", type=int, default=0, show_default=True, help="Classical sample size")
@click.option("--trials", type=int, default=10_000, show_default=True)
@common_options
def protocol(solver, n, m, copies, d, trials, seed, fmt, output, threads, timing):
    """Success rate of a one-way solver on the hard distribution.

    Examples:

        apm-lab protocol --solver quantum --n 8 --m 2 --trials 100000

        apm-lab protocol --solver classical --n 8 --m 2 --d 4
    """
    params = {
        "solver": solver,
        "n": n,
        "m": m,
        "copies": copies if solver == "quantum" else None,
        "d": d if solver == "classical" else None,
        "trials": trials,
    }
    execute("protocol", params, seed, fmt, output, threads, timing)


@main.command()
@click.option("--n", type=int, required=True, help="Number of bits of x (even)")
@click.option("--m", type=int, default=0, show_default=True, help="Edges of a random matching")
@click.option("--x", "x", default=None, help="Fixed x (default: random)")
@click.option("--matching", default=None, help='Fixed matching as "i j;i j"')
@click.option("--matching-file", type=click.Path(), default=None, help="Matching file")
@click.option("--trials", type=int, default=10_000, show_default=True)
@click.option("--copies", type=int, default=0, help="Also learn distinct bits from t copies")
@common_options
def qsim(n, m, x, matching, matching_file, trials, copies, seed, fmt, output, threads, timing):
    """Repeat the fingerprint-state protocol on one (x, M)."""
    params = {
        "n": n,
        "m": m,
        "x": x,
        "matching": matching,
        "matching_file": matching_file,
        "trials": trials,
        "copies": copies or None,
    }
    execute("qsim", params, seed, fmt, output, threads, timing)


@main.command("stream-sim")
@click.option("--n", type=int, required=True, help="Number of bits of x")
@click.option("--events", "events_file", type=click.Path(), default=None, help="Event file")
@click.option("--random-instance", type=int, default=None, help="Random instance with m edges")
@click.option("--trials", type=int, default=10_000, show_default=True)
@common_options
def stream_sim(n, events_file, random_instance, trials, seed, fmt, output, threads, timing):
    """Run the small-space streaming algorithm.

    Event files hold one event per line: "b i v", "e i j" or "w i j v".
    """
    params = {
        "n": n,
        "events_file": events_file,
        "random_instance": random_instance,
        "trials": trials,
    }
    execute("stream-sim", params, seed, fmt, output, threads, timing)


def _parse_int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated integers") from None


@main.command()
@click.option("--n", type=int, default=None, help="Number of bits of x")
@click.option("--m", type=int, default=None, help="Number of edges")
@click.option(
    "--memory",
    default="none",
    show_default=True,
    help="first:c | subset:i,j,... | parity:FILE | file:PATH | none | full",
)
@click.option("--trials", type=int, default=10_000, show_default=True)
@click.option(
    "--table", callback=_parse_int_list, default=None, help="Tabulate over n, e.g. 8,10,12"
)
@click.option("--alpha", type=float, default=None, help="Fixed edge fraction m/n for --table")
@common_options
def adversary(n, m, memory, trials, table, alpha, seed, fmt, output, threads, timing):
    """Classical memory versus one stored fingerprint state.

    Examples:

        apm-lab adversary --n 12 --m 3 --memory first:3 --trials 100000

        apm-lab adversary --memory first:2 --table 8,10,12,14 --m 2 --format csv

    With --table every row uses the same --m (default 2), or the same
    edge fraction when --alpha is given.
    """
    if table is None and (n is None or m is None):
        raise click.UsageError("--n and --m are required unless --table is given")
    params = {"n": n, "m": m, "memory": memory, "trials": None if table else trials}
    params["table"] = table
    if table:
        params["alpha"] = alpha
    execute("adversary", params, seed, fmt, output, threads, timing)


@main.command()
@click.option("--seed", type=int, default=None, help="Default seed")
@click.option("--threads", type=int, default=None, help="Default worker threads")
@click.option("--cap", type=int, default=None, help="Enumeration cap for exact oracles")
@click.option("--format", "fmt", type=click.Choice(VALID_FORMATS), default=None)
@click.option("--show", is_flag=True, help="Print the stored preferences")
def configure(seed, threads, cap, fmt, show):
    """Store default preferences in ~/.config/apm-lab/config.json."""
    try:
        if seed is not None:
            set_preference("seed", validate_seed(seed))
        if threads is not None:
            if threads < 1:
                raise click.BadParameter("must be >= 1", param_hint="--threads")
            set_preference("threads", threads)
        if cap is not None:
            if cap < 1:
                raise click.BadParameter("must be >= 1", param_hint="--cap")
            set_preference("enumeration_cap", cap)
        if fmt is not None:
            set_preference("format", fmt)
    except click.ClickException:
        raise
    except Exception as e:
        sys.exit(handle_error(e))

    changed = any(value is not None for value in (seed, threads, cap, fmt))
    if changed:
        console.print(f"[green]✓[/green] Preferences saved to {get_config_file()}")
    if show or not changed:
        console.print()
        console.print("[bold]apm-lab preferences[/bold]")
        console.print(f"  seed:            [cyan]{get_default_seed()}[/cyan]")
        console.print(f"  threads:         [cyan]{get_default_threads()}[/cyan]")
        console.print(f"  enumeration_cap: [cyan]{get_enumeration_cap():,}[/cyan]")
        console.print(f"  format:          [cyan]{get_default_format()}[/cyan]")
        console.print()


if __name__ == "__main__":
    main()
