#!/usr/bin/env python3
"""Main CLI entry point for co-speech alignment"""

import functools
import json
import logging
import sys
from typing import Any, Dict, List, Optional

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn
from rich.table import Table

from src import __version__
from src.alignment.embeddings import load_embeddings, relevance_matrix
from src.alignment.instances import AlignmentInstance, instance_to_dict, random_instance
from src.alignment.oracle import brute_force_solve
from src.alignment.plan import load_catalog, load_plan, tokenize, validate_plan
from src.alignment.playback import events_to_json, render_gantt, simulate
from src.alignment.scheduler import alignment_report, solve
from src.alignment.timeline import build_timeline, load_lexicon
from src.distill.quantize import absmax_delta, quantize_codes, quantize_int4
from src.distill.simhash import dedup_corpus, load_corpus
from src.errors import AlignError, ConfigInvalid, FormatError, Infeasible, PlanNotExecutable, TooLarge
from src.models import DurationLexicon, OutputFormat, PauseConfig, QuantSpec, RunConfig
from src.utils.config import Config
from src.utils.io import read_text, write_atomic
from src.utils.logs import setup_logging

console = Console(stderr=True)
logger = logging.getLogger(__name__)

ON_OFF = click.Choice(["on", "off"])


def _fail(error: AlignError) -> None:
    """Emit the machine-readable error line and exit with the error's code"""
    click.echo(json.dumps(error.to_dict()), err=True)
    sys.exit(error.exit_code)


def handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except AlignError as e:
            _fail(e)
    return wrapper


def _run_config(**fields: Any) -> RunConfig:
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigInvalid(f"{where}: {first.get('msg', 'invalid value')}") from e


@click.group()
@click.version_option(version=__version__)
@click.option('--verbose', '-v', is_flag=True, help='Debug logging on stderr')
def cli(verbose: bool):
    """
    Co-speech alignment - schedule expressions and motions against speech

    Estimates word timing, scores words against planned actions and picks
    start times that line actions up with the words they fit.
    """
    setup_logging("DEBUG" if verbose else None)


@cli.command()
@click.option('--plan', 'plan_path', required=True, type=click.Path(), help='Plan JSON file')
@click.option('--catalog', 'catalog_path', required=True, type=click.Path(), help='Action catalog JSON file')
@click.option('--embeddings', 'embeddings_path', required=True, type=click.Path(),
              help='Embedding table (text or binary)')
@click.option('--lexicon', 'lexicon_path', type=click.Path(), help='Word duration lexicon JSON file')
@click.option('--theta', default=Config.THETA, type=float, help='Relevance threshold')
@click.option('--delta', default=Config.DELTA_S, type=float, help='Alignment window (s)')
@click.option('--tick', default=Config.TICK_S, type=float, help='Grid resolution (s)')
@click.option('--tail-margin', default=Config.TAIL_MARGIN_S, type=float,
              help='How far actions may run past the speech (s)')
@click.option('--speed', help='slow, normal, fast or a multiplier (overrides the plan)')
@click.option('--channel-mode', default='per-channel', type=click.Choice(['per-channel', 'merged']))
@click.option('--modal-sync', default='on', type=ON_OFF, help='Score only actions near their word')
@click.option('--context-map', default='on', type=ON_OFF, help='Weight matches by relevance')
@click.option('--temporal-plan', default='on', type=ON_OFF, help='Optimal solve (off: earliest start)')
@click.option('--pauses/--no-pauses', default=False, help='Pause after punctuation')
@click.option('--out', '-o', 'out_path', type=click.Path(), help='Output file')
@click.option('--format', 'output_format', default='json', type=click.Choice(['json', 'gantt', 'both']))
@click.option('--width', default=Config.GANTT_WIDTH, type=int, help='Gantt width in columns')
@click.option('--cols-per-second', type=float, help='Gantt horizontal scale')
@click.option('--gantt-out', 'gantt_path', type=click.Path(), help='Write the Gantt chart here')
@click.option('--events-out', 'events_path', type=click.Path(), help='Write the event log here')
@handle_errors
def align(**options):
    """
    Schedule a plan's actions against its speech

    Example:
        cospeech-align align --plan plan.json --catalog catalog.json --embeddings emb.txt
    """
    for toggle in ('modal_sync', 'context_map', 'temporal_plan'):
        options[toggle] = options[toggle] == 'on'
    run = _run_config(subcommand='align', **options)
    try:
        align_config = run.align_config()
    except ValidationError as e:
        raise ConfigInvalid(e.errors()[0].get('msg', 'invalid alignment settings')) from e

    plan = load_plan(run.plan_path)
    catalog = load_catalog(run.catalog_path)
    store = load_embeddings(run.embeddings_path)
    lexicon = load_lexicon(run.lexicon_path) if run.lexicon_path else DurationLexicon()

    words = tokenize(plan.speech_text)
    speed = run.speed if run.speed is not None else plan.speed
    timeline = build_timeline(words, lexicon, speed, pauses=PauseConfig(enabled=run.pauses))
    logger.debug("%d words, speech ends at %.3fs", len(timeline.words), timeline.speech_end)
    matrix = relevance_matrix(words, plan.action_ids, store, run.theta)
    schedule = solve(plan, timeline, matrix, catalog, align_config)
    schedule = schedule.model_copy(update={"metadata": {
        **schedule.metadata,
        "theta": run.theta,
        "speed_factor": timeline.speed_factor,
        "pauses": run.pauses,
    }})

    # Everything is computed before any file is written
    schedule_json = json.dumps(schedule.to_json_dict(), indent=2, ensure_ascii=False) + "\n"
    gantt = None
    events = None
    wants_gantt = run.output_format != OutputFormat.JSON or run.gantt_path
    if wants_gantt or run.events_path:
        log = simulate(schedule, timeline, catalog, align_config)
        if wants_gantt:
            gantt = render_gantt(log, run.width, run.cols_per_second)
        if run.events_path:
            events = json.dumps(events_to_json(log), indent=2, ensure_ascii=False) + "\n"

    primary = gantt if run.output_format == OutputFormat.GANTT else schedule_json
    if run.out_path:
        write_atomic(run.out_path, primary)
    else:
        click.echo(primary, nl=False)
    if gantt is not None and run.gantt_path:
        write_atomic(run.gantt_path, gantt)
    elif gantt is not None and run.output_format == OutputFormat.BOTH:
        click.echo(gantt, nl=False)
    if events is not None:
        write_atomic(run.events_path, events)

    checks = alignment_report(schedule, timeline, align_config.delta)
    table = Table(title=f"Schedule (objective {schedule.objective:.4f})")
    table.add_column("Action", style="cyan")
    table.add_column("Start", justify="right")
    table.add_column("Word")
    table.add_column("Offset", justify="right")
    table.add_column("Score", justify="right")
    for action, check in zip(schedule.actions, checks):
        table.add_row(
            action.action_id,
            f"{action.start_s:.2f}s",
            action.matched_word or "-",
            f"{check.offset_s:+.2f}s" if check.offset_s is not None else "-",
            f"{action.term_score:.3f}" + (" ✓" if check.aligned else ""),
        )
    console.print(table)


def _compare(instance: AlignmentInstance) -> Optional[str]:
    """Describe how the solver and the oracle disagree, or None when they match"""
    args = (instance.plan, instance.timeline, instance.matrix, instance.catalog, instance.config)
    outcomes = []
    for solver in (solve, brute_force_solve):
        try:
            outcomes.append(solver(*args))
        except Infeasible as e:
            outcomes.append(e)

    fast, slow = outcomes
    if isinstance(fast, Infeasible) or isinstance(slow, Infeasible):
        if isinstance(fast, Infeasible) and isinstance(slow, Infeasible) and fast.action_id == slow.action_id:
            return None
        return f"feasibility differs: solver {fast!r}, oracle {slow!r}"
    if fast.objective != slow.objective:
        return f"objective {fast.objective!r} != oracle {slow.objective!r}"
    if fast.start_vector != slow.start_vector:
        return f"starts {fast.start_vector} != oracle {slow.start_vector}"
    return None


@cli.command('oracle-check')
@click.option('--count', '-n', default=1000, type=click.IntRange(min=0), help='Number of random instances')
@click.option('--seed', default=42, type=int, help='Random seed')
@click.option('--out', '-o', 'out_path', default='counterexample.json', type=click.Path(),
              help='Where to dump the first mismatching instance')
@handle_errors
def oracle_check(count: int, seed: int, out_path: str):
    """
    Compare the optimal solver with exhaustive search on random instances

    Exits 1 and writes a reproducible instance file on the first mismatch.
    """
    rng = np.random.default_rng(seed)
    skipped = 0
    with Progress(TextColumn("[progress.description]{task.description}"), BarColumn(),
                  console=console, transient=True) as progress:
        task = progress.add_task("Checking instances...", total=count)
        for index in range(count):
            instance = random_instance(rng)
            try:
                reason = _compare(instance)
            except TooLarge:
                skipped += 1
                progress.advance(task)
                continue
            if reason is not None:
                write_atomic(out_path, json.dumps({
                    "seed": seed,
                    "index": index,
                    "reason": reason,
                    "instance": instance_to_dict(instance),
                }, indent=2) + "\n")
                click.echo(json.dumps({"error": "OracleMismatch", "code": 1, "index": index,
                                       "message": reason, "counterexample": out_path}), err=True)
                sys.exit(1)
            progress.advance(task)

    console.print(f"[green]✓ {count - skipped} instances match[/green]"
                  + (f" [dim]({skipped} too large, skipped)[/dim]" if skipped else ""))


@cli.command()
@click.argument('corpus', type=click.Path())
@click.option('--threshold', default=Config.HAMMING_THRESHOLD, type=click.IntRange(0, 64),
              help='Hamming distance still counted as duplicate')
@click.option('--out', '-o', 'out_path', type=click.Path(), help='Write retained indices here')
@handle_errors
def dedup(corpus: str, threshold: int, out_path: Optional[str]):
    """
    Drop near-duplicate documents from a corpus

    CORPUS is one document per line, or a JSON array of strings.
    """
    texts = load_corpus(read_text(corpus))
    result = dedup_corpus(texts, threshold)

    retained = json.dumps(result.retained)
    if out_path:
        write_atomic(out_path, retained + "\n")
    else:
        click.echo(retained)
    click.echo(f"duplication_rate={result.duplication_rate:.4f}")
    console.print(f"[dim]{len(result.retained)} of {len(texts)} documents retained[/dim]")


def _parse_values(text: str) -> List[float]:
    if text.lstrip().startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON values: {e.msg}", e.lineno) from e
        if not isinstance(data, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in data
        ):
            raise FormatError("values must be a JSON array of numbers")
        return [float(v) for v in data]

    values = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        for part in line.split():
            try:
                values.append(float(part))
            except ValueError as e:
                raise FormatError(f"not a number: {part!r}", line_no) from e
    return values


@cli.command()
@click.argument('values_file', type=click.Path())
@click.option('--delta', type=float, help='Quantization step (default: absmax / 7)')
@click.option('--out', '-o', 'out_path', type=click.Path(), help='Output file')
@handle_errors
def quantize(values_file: str, delta: Optional[float], out_path: Optional[str]):
    """
    INT4-quantize a list of numbers

    VALUES_FILE holds a JSON array or whitespace-separated numbers. Output
    values are rounded to 12 decimals.
    """
    values = _parse_values(read_text(values_file))
    if delta is None:
        delta = absmax_delta(values)
    try:
        spec = QuantSpec(delta=delta)
    except ValidationError as e:
        raise ConfigInvalid(f"delta: {e.errors()[0].get('msg', 'invalid value')}") from e

    payload: Dict[str, Any] = {
        "delta": spec.delta,
        "values": [round(float(v), 12) for v in quantize_int4(values, spec)],
        "codes": [int(c) for c in quantize_codes(values, spec)],
    }
    text = json.dumps(payload) + "\n"
    if out_path:
        write_atomic(out_path, text)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option('--plan', 'plan_path', required=True, type=click.Path(), help='Plan JSON file')
@click.option('--catalog', 'catalog_path', required=True, type=click.Path(), help='Action catalog JSON file')
@handle_errors
def validate(plan_path: str, catalog_path: str):
    """Check that every plan action is catalogued on its channel"""
    plan = load_plan(plan_path)
    catalog = load_catalog(catalog_path)
    report = validate_plan(plan, catalog)

    if report.ok:
        console.print(f"[green]✓ Plan is executable ({len(plan.actions)} actions)[/green]")
        return
    for issue in report.issues:
        console.print(f"[red]✗ {issue}[/red]")
    raise PlanNotExecutable(report.issues)


@cli.command()
def config():
    """Show current defaults"""
    console.print("\n[bold]Co-speech Alignment Configuration[/bold]\n")

    config_table = Table(show_header=False)
    config_table.add_column("Setting", style="cyan")
    config_table.add_column("Value", style="white")

    config_table.add_row("Relevance threshold (theta)", str(Config.THETA))
    config_table.add_row("Alignment window (delta)", f"{Config.DELTA_S} s")
    config_table.add_row("Grid tick", f"{Config.TICK_S} s")
    config_table.add_row("Tail margin", f"{Config.TAIL_MARGIN_S} s")
    config_table.add_row("Duration rule", f"{Config.RATE_S_PER_CHAR} s/char, "
                                           f"clamped to [{Config.MIN_WORD_S}, {Config.MAX_WORD_S}] s")
    config_table.add_row("Speed factors", ", ".join(f"{k}: {v}" for k, v in Config.SPEED_FACTORS.items()))
    config_table.add_row("Pauses", f"comma {Config.COMMA_PAUSE_S} s, sentence {Config.SENTENCE_PAUSE_S} s")
    config_table.add_row("Dedup Hamming threshold", str(Config.HAMMING_THRESHOLD))
    config_table.add_row("Oracle enumeration bound", str(Config.ORACLE_MAX_ENUMERATIONS))
    config_table.add_row("Log level", Config.LOG_LEVEL)

    console.print(config_table)

    console.print("\n[dim]Set LOG_LEVEL in .env to change logging verbosity[/dim]")


if __name__ == '__main__':
    cli()
