"""Dispatch a validated ExperimentConfig to the owning module and emit its report."""

from __future__ import annotations

import time
from typing import Callable, Dict, Optional, TextIO, Union

import numpy as np

from apm_lab.config import ExperimentConfig
from apm_lab.core import (
    BitString,
    Matching,
    SeededRng,
    count_matchings,
    extract_z,
    load_matching,
    sample_matching,
)
from apm_lab.errors import console, get_error, handle_error
from apm_lab.report import Report, emit_report

Handler = Callable[[ExperimentConfig, SeededRng, Optional[Callable]], Report]

DEFAULT_DELTAS = [round(0.1 * k, 1) for k in range(1, 11)]


def _report(config: ExperimentConfig, mode: str, columns) -> Report:
    return Report(
        command=config.subcommand, mode=mode, config=config.to_dict(), columns=list(columns)
    )


def _matching_from_params(params: dict, n: int) -> Matching:
    if params.get("matching_file"):
        return load_matching(params["matching_file"], n)
    if params.get("matching") is not None:
        return Matching.parse(params["matching"], n)
    raise get_error(
        "bad_syntax",
        what="matching",
        text="",
        hint='Pass --matching "i j;i j" or --matching-file PATH.',
    )


def _subset_from_params(params: dict, c, rng: SeededRng):
    from apm_lab.families.factory import get_family

    family = get_family(params.get("family", "full"), path=params.get("set_file"))
    return family.build(params["n"], c, rng)


# -- handlers ------------------------------------------------------------


def _run_extract(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    params = config.params
    x = BitString.from_string(params["x"])
    matching = _matching_from_params(params, len(x))
    report = _report(config, "exact", ["x", "matching", "m", "alpha", "z"])
    report.add_row(
        x=str(x),
        matching=str(matching),
        m=matching.m,
        alpha=matching.alpha,
        z=str(extract_z(x, matching)),
    )
    return report


def _run_count(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from apm_lab.analysis import matching_hit_fraction, matching_hit_prob

    params = config.params
    n, m, k = params["n"], params["m"], params.get("k")
    columns = ["n", "m", "count"]
    row = {"n": n, "m": m, "count": count_matchings(n, m)}
    if k is not None:
        columns += ["k", "hit_prob"]
        row.update(k=k, hit_prob=matching_hit_prob(n, m, k))
        if params.get("enumerate"):
            columns.append("hit_fraction")
            row["hit_fraction"] = matching_hit_fraction(n, m, k)
    report = _report(config, "exact", columns)
    report.add_row(**row)
    return report


def _run_sample_matching(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    params = config.params
    n, m = params["n"], params["m"]
    report = _report(config, "mc", ["index", "matching", "m", "alpha"])
    for index in range(params.get("count", 1)):
        matching = sample_matching(n, m, rng.child(index))
        report.add_row(index=index, matching=str(matching), m=matching.m, alpha=matching.alpha)
    return report


def _run_fourier(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from apm_lab.analysis import level_bound_check, normalized_level_weight
    from apm_lab.spectral import fwht, parseval_gap

    params = config.params
    subset = _subset_from_params(params, params.get("c", 0), rng)
    f = subset.indicator()
    if params.get("levels"):
        report = _report(config, "exact", ["k", "weight", "bound", "holds"])
        checked = {row["k"]: row for row in level_bound_check(subset)}
        spectrum = fwht(f)
        for k in range(subset.n + 1):
            row = checked.get(k, {})
            report.add_row(
                k=k,
                weight=normalized_level_weight(subset, k, spectrum),
                bound=row.get("bound"),
                holds=row.get("holds"),
            )
    else:
        report = _report(config, "exact", ["s", "s_bits", "coefficient"])
        coeffs = fwht(f).coeffs
        for s in range(coeffs.size):
            report.add_row(
                s=s, s_bits=BitString.from_int(s, subset.n).to_string(), coefficient=coeffs[s]
            )
    report.summary = {
        "size": subset.size,
        "deficiency": subset.deficiency,
        "parseval_gap": parseval_gap(f),
    }
    return report


def _run_kkl_check(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from apm_lab.spectral import kkl_margin, random_ternary_function

    params = config.params
    n = params["n"]
    functions = params.get("functions", 100)
    deltas = params.get("deltas") or DEFAULT_DELTAS
    report = _report(config, "mc", ["delta", "functions", "violations", "worst_margin"])
    samples = [random_ternary_function(n, rng.child(index)) for index in range(functions)]
    for delta in deltas:
        margins = np.array([lhs - rhs for lhs, rhs in (kkl_margin(f, delta) for f in samples)])
        report.add_row(
            delta=delta,
            functions=functions,
            violations=int(np.count_nonzero(margins > 1e-9)),
            worst_margin=float(np.max(margins)) if margins.size else 0.0,
        )
    return report


TVD_COLUMNS = [
    "n",
    "m",
    "family",
    "c",
    "size",
    "mode",
    "mean",
    "mean_sq",
    "stderr",
    "matchings_evaluated",
    "mean_l2_scaled",
    "cs_violations",
    "l2_via_levels",
]


def _run_tvd(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from apm_lab.analysis import MAX_EXACT_N, expected_l2_via_levels, expected_tvd

    params = config.params
    n, m, mode = params["n"], params["m"], params.get("mode", "exact")
    subset = _subset_from_params(params, params.get("c", 0), rng.child(0))
    result = expected_tvd(
        subset,
        m,
        mode,
        params.get("trials", 10_000),
        rng.child(1),
        threads=config.threads,
        progress_callback=progress,
    )
    report = _report(config, mode, TVD_COLUMNS)
    report.add_row(
        n=n,
        m=m,
        family=params.get("family", "full"),
        c=subset.deficiency if params.get("family") == "file" else params.get("c", 0),
        size=subset.size,
        mode=result.mode,
        mean=result.mean,
        mean_sq=result.mean_sq,
        stderr=result.stderr,
        matchings_evaluated=result.matchings_evaluated,
        mean_l2_scaled=result.mean_l2_scaled,
        cs_violations=result.cs_violations,
        l2_via_levels=expected_l2_via_levels(subset, m) if n <= MAX_EXACT_N else None,
    )
    return report


SWEEP_COLUMNS = [
    "c",
    "size",
    "mean",
    "mean_sq",
    "stderr",
    "mode",
    "matchings_evaluated",
    "reference",
    "proven_regime",
]


def _run_tvd_sweep(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from apm_lab.analysis import deficiency_sweep

    params = config.params
    mode = params.get("mode", "exact")
    rows = deficiency_sweep(
        params["n"],
        params["m"],
        params.get("family", "first-bits-fixed"),
        range(params.get("c_min", 0), params.get("c_max", 0) + 1),
        mode,
        params.get("trials", 10_000),
        rng,
        threads=config.threads,
        progress_callback=progress,
        path=params.get("set_file"),
    )
    report = _report(config, mode, SWEEP_COLUMNS)
    for row in rows:
        report.add_row(**{column: getattr(row, column) for column in SWEEP_COLUMNS})
    return report


def _run_protocol(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from apm_lab.protocols import covered_edge_formula, estimate_success, get_solver

    params = config.params
    n, m = params["n"], params["m"]
    name = params.get("solver", "quantum")
    solver = get_solver(name, copies=params.get("copies", 1), d=params.get("d", 0))
    result = estimate_success(
        solver, n, m, params.get("trials", 10_000), rng, config.threads, progress
    )
    if name == "quantum":
        # Fails only when every copy misses the matching, then guesses
        expected = 1.0 - (1.0 - 2.0 * m / n) ** solver.copies / 2.0
    else:
        expected = 1 - (1 - covered_edge_formula(n, m, solver.d)) / 2
    columns = ["solver", "n", "m", *result.params, "trials", "successes", "rate", "stderr"]
    columns += ["learned", "conditional_correct", "expected_rate", "degenerate"]
    columns += list(result.message_cost)
    report = _report(config, "mc", columns)
    report.add_row(
        solver=result.solver,
        n=n,
        m=m,
        trials=result.trials,
        successes=result.successes,
        rate=result.rate,
        stderr=result.stderr,
        learned=result.learned,
        conditional_correct=result.conditional_correct,
        expected_rate=expected,
        # No edges: w carries no information about b
        degenerate=m == 0,
        **result.params,
        **result.message_cost,
    )
    return report


def _run_qsim(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from apm_lab.qsim import learn_distinct_bits, protocol_trials

    params = config.params
    n = params["n"]
    x = BitString.from_string(params["x"]) if params.get("x") else rng.child(0).bits(n)
    if len(x) != n:
        raise get_error("length_mismatch", what="x", got=len(x), expected=n)
    if params.get("matching") or params.get("matching_file"):
        matching = _matching_from_params(params, n)
    else:
        matching = sample_matching(n, params.get("m", 0), rng.child(1))
    stats = protocol_trials(
        x, matching, params.get("trials", 10_000), rng.child(2), config.threads, progress
    )
    columns = ["n", "m", "x", "matching", "trials", "learned", "rate", "expected_rate"]
    columns += ["correct", "zero_sided"]
    row = dict(
        n=n,
        m=matching.m,
        x=str(x),
        matching=str(matching),
        trials=stats.trials,
        learned=stats.learned,
        rate=stats.rate,
        expected_rate=2.0 * matching.alpha,
        correct=stats.correct,
        zero_sided=stats.correct == stats.learned,
    )
    copies = params.get("copies", 0)
    if copies:
        columns += ["copies", "distinct_learned"]
        learned = learn_distinct_bits(x, matching, copies, rng.child(3))
        row.update(copies=copies, distinct_learned=len(learned))
    report = _report(config, "mc", columns)
    report.add_row(**row)
    return report


def _run_stream_sim(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from pathlib import Path

    from apm_lab.qsim import (
        expected_stream_bits,
        parse_stream,
        random_stream_instance,
        stream_trials,
    )

    params = config.params
    n = params["n"]
    if params.get("events_file"):
        path = Path(params["events_file"])
        if not path.exists():
            raise get_error("file_not_found", path=path)
        events = parse_stream(path.read_text())
    elif params.get("random_instance") is not None:
        events = random_stream_instance(n, params["random_instance"], rng.child(0)).events
    else:
        raise get_error(
            "bad_syntax",
            what="stream source",
            text="",
            hint="Pass --events FILE or --random-instance M.",
        )
    expected = expected_stream_bits(n, events)
    stats = stream_trials(
        n, events, params.get("trials", 10_000), rng.child(1), config.threads, progress
    )
    report = _report(config, "mc", ["edge", "fired", "zeros", "ones", "expected_bit", "fired_rate"])
    for pair, (zeros, ones) in stats.outcome_counts.items():
        report.add_row(
            edge=f"{pair[0]} {pair[1]}",
            fired=zeros + ones,
            zeros=zeros,
            ones=ones,
            expected_bit=expected[pair],
            fired_rate=(zeros + ones) / stats.trials,
        )
    report.summary = {
        "trials": stats.trials,
        "present": stats.present,
        "presence_rate": stats.present / stats.trials,
        "expected_presence_rate": 2.0 * len(expected) / n,
        "correct": stats.correct(expected),
    }
    return report


def _run_adversary(config: ExperimentConfig, rng: SeededRng, progress) -> Report:
    from dataclasses import asdict

    from apm_lab.adversary import (
        FirstBits,
        ScenarioReport,
        advantage_table,
        key_expansion_report,
        parse_memory_spec,
    )

    params = config.params
    spec = parse_memory_spec(params.get("memory", "none"))
    if params.get("table"):
        if not isinstance(spec, FirstBits):
            raise get_error(
                "bad_syntax",
                what="memory spec",
                text=params.get("memory"),
                hint="--table tabulates first:c memories only.",
            )
        rows = advantage_table(
            params["table"],
            spec.c,
            m=params.get("m"),
            alpha=params.get("alpha"),
            threads=config.threads,
        )
        report = _report(config, "exact", list(rows[0]) if rows else ["n", "m", "c"])
        for row in rows:
            report.add_row(**row)
        return report

    scenario = key_expansion_report(
        spec,
        params["n"],
        params["m"],
        params.get("trials", 10_000),
        rng,
        threads=config.threads,
        progress_callback=progress,
    )
    columns = list(ScenarioReport.__dataclass_fields__)
    report = _report(config, "exact+mc", columns)
    report.add_row(**asdict(scenario))
    return report


HANDLERS: Dict[str, Handler] = {
    "extract": _run_extract,
    "count": _run_count,
    "sample-matching": _run_sample_matching,
    "fourier": _run_fourier,
    "kkl-check": _run_kkl_check,
    "tvd": _run_tvd,
    "tvd-sweep": _run_tvd_sweep,
    "protocol": _run_protocol,
    "qsim": _run_qsim,
    "stream-sim": _run_stream_sim,
    "adversary": _run_adversary,
}


def build_report(config: ExperimentConfig, progress_callback: Optional[Callable] = None) -> Report:
    """Validate the config and run its subcommand.

    Returns:
        The report, with elapsed_seconds set when config.timing is on

    Raises:
        ApmLabError: On validation, resource or I/O failures
    """
    config.validate()
    handler = HANDLERS[config.subcommand]
    start = time.perf_counter()
    report = handler(config, SeededRng(config.seed), progress_callback)
    elapsed = time.perf_counter() - start
    if config.timing:
        report.elapsed_seconds = elapsed
    console.print(
        f"[dim]{config.subcommand}: {len(report.rows)} row(s), mode {report.mode}, "
        f"{elapsed:.2f} seconds[/dim]"
    )
    return report


def run(
    config: ExperimentConfig,
    sink: Union[None, str, TextIO] = None,
    progress_callback: Optional[Callable] = None,
) -> int:
    """Run one experiment end to end.

    Wall-clock time is always printed to stderr but goes into the report (as
    elapsed_seconds) only when config.timing is set, so that the same config
    and seed always give the same report bytes.

    Args:
        config: The experiment configuration
        sink: Report destination (default: config.output, else standard output)
        progress_callback: Optional callback(event, data)

    Returns:
        Exit status: 0 on success, 2 validation, 3 resource cap, 4 I/O
    """
    try:
        report = build_report(config, progress_callback)
        emit_report(report, config.format, sink if sink is not None else config.output)
    except Exception as e:
        return handle_error(e)
    return 0

