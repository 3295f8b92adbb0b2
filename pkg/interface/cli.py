import json
import traceback
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import typer

from dataset_io.export import ExportFormat, export_trace
from dataset_io.replay import load_trace, replay
from dataset_io.trace import parse_channels
from pipeline.batch import expand_matrix, load_matrix, run_batch
from pipeline.logging_setup import configure_logging
from pipeline.run_loop import execute_run, load_catalog_or_fail, resolve_scenario, run_config
from pipeline.settings import Settings, load_settings
from policy_harness.binding import parse_policy
from scenario_dsl.catalog import query_catalog
from scenario_dsl.parser import parse_scenario_file
from scenario_dsl.serializer import serialize_scenario
from scenario_model.errors import (
    ConfigurationError,
    CornerSimError,
    ReplayDivergenceError,
    ScenarioParseError,
    ScenarioValidationError,
)
from scenario_model.overrides import Overrides, shift_all_timed_triggers
from scenario_model.types import ScenarioSpec, TrafficDensity
from scenario_model.weather import WEATHER_PRESETS, weather_ids

app = typer.Typer(help="CornerSim: corner-case driving scenarios, runs, datasets and replay.",
                  no_args_is_help=True, add_completion=False)


@dataclass
class CliState:
    settings: Settings
    verbose: bool = False


def _state(ctx: typer.Context) -> CliState:
    return ctx.obj


@contextmanager
def _errors(state: Optional[CliState] = None):
    """Map CornerSim errors onto the stable exit codes"""
    try:
        yield
    except ScenarioValidationError as e:
        typer.echo(f"❌ {e}", err=True)
        for violation in e.violations:
            typer.echo(f"   - {violation}", err=True)
        raise typer.Exit(e.exit_code)
    except ReplayDivergenceError as e:
        typer.echo(f"❌ {e}", err=True)
        typer.echo(f"first divergent tick: {e.tick}", err=True)
        raise typer.Exit(e.exit_code)
    except CornerSimError as e:
        if state is not None and state.verbose:
            traceback.print_exc()
        typer.echo(f"❌ {e}", err=True)
        raise typer.Exit(e.exit_code)


@app.callback()
def main(
    ctx: typer.Context,
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging and tracebacks."),
    config: Optional[Path] = typer.Option(None, "--config", help="Settings file (default: $CORNERSIM_CONFIG or config/default.yaml)."),
):
    """Load settings and logging for every command."""
    with _errors():
        settings = load_settings(config)
    configure_logging("DEBUG" if verbose else settings.logging.level)
    ctx.obj = CliState(settings=settings, verbose=verbose)


@app.command("list")
def list_scenarios(
    ctx: typer.Context,
    category: Optional[str] = typer.Option(None, "--category", "-c", help="state, behavior or evidence."),
    prefix: Optional[str] = typer.Option(None, "--prefix", help="Only ids starting with this."),
    search: Optional[str] = typer.Option(None, "--search", "-s", help="Substring of id, name or description."),
):
    """List catalog scenarios: id, category, name."""
    state = _state(ctx)
    with _errors(state):
        catalog = load_catalog_or_fail(state.settings.catalog_dir())
        rows = query_catalog(catalog, category=category, id_prefix=prefix, text=search)
    for row in rows:
        typer.echo(f"{row.id:<40} {row.category.value:<16} {row.name}")


@app.command()
def validate(ctx: typer.Context, file: Path = typer.Argument(..., help="Scenario file (.3cs).")):
    """Parse and validate a scenario file."""
    state = _state(ctx)
    with _errors(state):
        try:
            spec = parse_scenario_file(file)
        except ScenarioParseError as e:
            typer.echo(f"❌ {file}:{e}", err=True)
            raise typer.Exit(e.exit_code)
    typer.echo(f"✔️ {file}: scenario '{spec.id}' is valid")


def _overrides(spec: ScenarioSpec, weather: Optional[str], density: Optional[TrafficDensity],
               trigger_shift: float, ego_speed: Optional[float]) -> Overrides:
    return Overrides(
        weather=weather,
        traffic_density=density,
        trigger_shifts=shift_all_timed_triggers(spec, trigger_shift),
        ego_speed=ego_speed,
    )


def _binding(settings: Settings, policy: str):
    p = settings.policy
    return parse_policy(policy, handshake_timeout_s=p.handshake_timeout_s, tick_timeout_ms=p.tick_timeout_ms,
                        max_consecutive_substitutions=p.max_consecutive_substitutions)


def _config(settings: Settings, record: Optional[str]):
    try:
        channels = parse_channels(record) if record is not None else settings.output.record
    except ValueError as e:
        raise ConfigurationError(str(e)) from None
    return run_config(settings.engine.dt, settings.perception.config(), channels)


@app.command()
def run(
    ctx: typer.Context,
    scenario: str = typer.Argument(..., help="Catalog id or path to a .3cs file."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Run seed (default: the scenario's)."),
    weather: Optional[str] = typer.Option(None, "--weather", "-w", help="Weather preset id."),
    density: Optional[TrafficDensity] = typer.Option(None, "--density", "-d", help="Background traffic density."),
    policy: str = typer.Option("builtin:emergency_brake", "--policy", "-p", help="builtin:<name> or exec:<command>."),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Run directory (default: <root>/<id>/<seed>)."),
    record: Optional[str] = typer.Option(None, "--record", help="Comma list of lidar, detections, raster."),
    trigger_shift: float = typer.Option(0.0, "--trigger-shift", help="Seconds added to every timed trigger."),
    ego_speed: Optional[float] = typer.Option(None, "--ego-speed", help="Initial ego speed in m/s."),
):
    """Run one scenario to its end and write manifest, trace and exports."""
    state = _state(ctx)
    settings = state.settings
    with _errors(state):
        base = resolve_scenario(scenario, settings.catalog_dir())
        overrides = _overrides(base, weather, density, trigger_shift, ego_speed)
        binding = _binding(settings, policy)
        config = _config(settings, record)
        run_seed = seed if seed is not None else base.default_seed
        out_dir = out or Path(settings.output.root) / base.id / str(run_seed)
        artifacts = execute_run(base, binding, out_dir, seed=run_seed, overrides=overrides, config=config)

    result = artifacts.output.result
    typer.echo(f"scenario:   {base.id}")
    typer.echo(f"seed:       {run_seed}")
    typer.echo(f"policy:     {binding.descriptor}")
    typer.echo(f"outcome:    {result.outcome.value} ({result.terminal_reason.value})")
    typer.echo(f"severity:   {result.severity_score:g}")
    typer.echo(f"collisions: {len(result.collisions)}")
    typer.echo(f"ticks:      {len(artifacts.output.trace)}")
    typer.echo(f"trace hash: {artifacts.manifest.trace_hash}")
    typer.echo(f"directory:  {artifacts.directory}")
    raise typer.Exit(result.exit_code)


@app.command()
def batch(
    ctx: typer.Context,
    matrix_file: Path = typer.Argument(..., help="Batch matrix YAML file."),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Parallel worker processes."),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output root (default: the matrix's 'out')."),
    record: Optional[str] = typer.Option(None, "--record", help="Comma list of lidar, detections, raster."),
):
    """
    Run every cell of a batch matrix and write summary.csv.

    Exits 0 when every cell ran to a terminal state, whatever its outcome.
    Exits 1 when at least one cell could not run; its summary row carries the error.
    """
    state = _state(ctx)
    settings = state.settings
    with _errors(state):
        matrix = load_matrix(matrix_file)
        catalog = load_catalog_or_fail(settings.catalog_dir())
        cells = expand_matrix(matrix, catalog)
        binding = _binding(settings, matrix.policy)
        config = _config(settings, record)
        typer.echo(f"Matrix: {len(cells)} cells")
        report = run_batch(cells, binding, out or Path(matrix.out), config=config, jobs=jobs)

    for row in report.rows:
        status = row["outcome"] if row["completed"] else f"error: {row['error']}"
        typer.echo(f"{row['scenario_id']:<40} {row['seed']:>6} {row['weather']:<17} "
                   f"{row['density']:<7} {row['trigger_shift']:>6g} {status:<18} {row['severity_score']:g}")
    typer.echo(f"summary: {report.summary_path}")
    raise typer.Exit(0 if report.all_completed else 1)


@app.command("replay")
def replay_cmd(ctx: typer.Context, manifest: Path = typer.Argument(..., help="manifest.json or its run directory.")):
    """Re-simulate a recorded run and check it is bit-exact."""
    state = _state(ctx)
    with _errors(state):
        report = replay(manifest)
    typer.echo(f"✔️ replay of {report.manifest.scenario_id} seed {report.manifest.seed} matches "
               f"({report.ticks} ticks, {report.trace_hash})")


@app.command("export")
def export_cmd(
    ctx: typer.Context,
    trace: Path = typer.Argument(..., help="Run directory, manifest.json or trace.jsonl."),
    fmt: ExportFormat = typer.Option(..., "--format", "-f", help="full-jsonl, flat-csv or raster-pack."),
    out: Path = typer.Option(Path("export"), "--out", "-o", help="Destination directory."),
):
    """Export a recorded trace in one dataset format."""
    state = _state(ctx)
    with _errors(state):
        loaded = load_trace(trace)
        written: List[Path] = export_trace(loaded, fmt, out)
    for path in written:
        typer.echo(str(path))


@app.command()
def weathers():
    """List the weather presets."""
    for weather_id in weather_ids():
        w = WEATHER_PRESETS[weather_id]
        typer.echo(f"{w.id:<17} mu={w.friction_mu:<5g} visibility={w.visibility_range:<6g} "
                   f"lidar_sigma={w.lidar_noise_sigma:<5g} {w.description}")


@app.command()
def show(ctx: typer.Context, scenario: str = typer.Argument(..., help="Catalog id or .3cs path.")):
    """Print a scenario in canonical form."""
    state = _state(ctx)
    with _errors(state):
        spec = resolve_scenario(scenario, state.settings.catalog_dir())
        text = serialize_scenario(spec)
    typer.echo(text, nl=False)


@app.command()
def schema():
    """Print the JSON schema of the scenario model."""
    typer.echo(json.dumps(ScenarioSpec.model_json_schema(), indent=2, sort_keys=True))
