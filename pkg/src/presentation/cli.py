# src/presentation/cli.py
"""
Línea de comandos: train, verify, ablate y trace.

Códigos de salida: 0 correcto, 1 criterio fallido o ejecución abortada,
2 uso o configuración inválidos.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from src.application.use_cases.export_traces import create_export_traces_use_case
from src.application.use_cases.run_ablation import create_run_ablation_use_case
from src.application.use_cases.run_training import create_run_training_use_case
from src.application.use_cases.run_verify import SUITES, VerifySizes, create_run_verify_use_case
from src.config.constants import EXIT_FAILED, EXIT_OK, EXIT_USAGE
from src.config.experiment import ExperimentConfig
from src.config.logging_setup import configure_logging
from src.config.settings import (
    DEFAULT_SEED, RUNS_DIR, VERIFY_BOUND_INITS, VERIFY_BOUND_LENGTHS, VERIFY_FD_INSTANCES,
    VERIFY_INSTANCES
)
from src.domain.exceptions import ConfigError, InputError
from src.domain.oracle.report import OracleReport
from src.domain.value_objects.variant import VariantFlag
from src.infrastructure.persistence.config_file import read_config

app = typer.Typer(
    help="Entrenamiento y verificación de redes recurrentes duales.",
    add_completion=False,
    no_args_is_help=True,
)
console = Console()


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING o ERROR"),
):
    configure_logging(log_level)


def _finish(result: Dict[str, Any]) -> None:
    """Muestra el mensaje del caso de uso y sale con el código correspondiente."""
    if result['success']:
        console.print(f"[green]{result['message']}[/green]")
        raise typer.Exit(EXIT_OK)
    console.print(f"[red]{result['message']}[/red]")
    usage = result.get('data', {}).get('failure') == 'usage'
    raise typer.Exit(EXIT_USAGE if usage else EXIT_FAILED)


def _usage_error(message: str) -> None:
    console.print(f"[red]{message}[/red]")
    raise typer.Exit(EXIT_USAGE)


def _load_config(path: Path, seed: Optional[int]) -> ExperimentConfig:
    """
    Lee la configuración, aplica --seed y completa las rutas de salida
    en runs/ con el nombre del fichero si no están indicadas.
    """
    try:
        config = read_config(path)
    except ConfigError as error:
        _usage_error(str(error))
    if seed is not None:
        config = config.with_overrides(seed=seed)
    return config.with_overrides(
        checkpoint_path=config.checkpoint_path or str(RUNS_DIR / f"{path.stem}.ckpt"),
        log_path=config.log_path or str(RUNS_DIR / f"{path.stem}.csv"),
    )


def _parse_lengths(value: str) -> List[int]:
    try:
        lengths = [int(part) for part in value.split(',') if part.strip()]
    except ValueError:
        _usage_error(f"Longitudes no válidas: '{value}'")
    if not lengths or min(lengths) < 1:
        _usage_error(f"Longitudes no válidas: '{value}'")
    return lengths


def _metrics_table(title: str, metrics: Dict[str, Any]) -> Table:
    table = Table(title=title)
    table.add_column("Métrica")
    table.add_column("Valor", justify="right")
    for name, value in metrics.items():
        table.add_row(name, f"{value:.6g}" if isinstance(value, float) else str(value))
    return table


def _report_table(report: OracleReport) -> Table:
    table = Table(title="Verificación")
    for column in ("Estado", "Comprobación", "Parámetro", "Error rel.", "Error abs.", "Tol.", "Posición"):
        table.add_column(column)
    for entry in report.summary():
        status = "[green]OK[/green]" if entry.passed else "[red]FALLO[/red]"
        table.add_row(status, entry.check, entry.parameter, f"{entry.max_rel:.3e}",
                      f"{entry.max_abs:.3e}", f"{entry.tolerance:.1e}", str(entry.location))
    return table


@app.command()
def train(
    config: Path = typer.Option(..., "--config", help="Fichero de experimento"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Sustituye la semilla del fichero"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Checkpoint desde el que seguir"),
    progress: bool = typer.Option(True, "--progress/--no-progress", help="Barra de progreso"),
):
    """Entrena una red según un fichero de experimento."""
    experiment = _load_config(config, seed)
    use_case = create_run_training_use_case(progress=progress)
    result = use_case.execute(experiment, resume=resume)
    if result['success']:
        console.print(_metrics_table(f"Entrenamiento ({config.name})", result['data']['metrics']))
        console.print(f"Checkpoint: {result['data']['checkpoint']}  Log: {experiment.log_path}")
    _finish(result)


@app.command()
def verify(
    sizes: Optional[str] = typer.Option(None, "--sizes", help="Tamaños máximos N,M,L,B"),
    corrupt: Optional[str] = typer.Option(None, "--corrupt", help="Perturba el gradiente de un parámetro"),
    json_out: Optional[Path] = typer.Option(None, "--json-out", help="Fichero de líneas JSON"),
    seed: int = typer.Option(DEFAULT_SEED, "--seed"),
    suite: Optional[List[str]] = typer.Option(None, "--suite", help=f"Una o varias de {', '.join(SUITES)}"),
    instances: int = typer.Option(VERIFY_INSTANCES, "--instances", min=1),
    fd_instances: int = typer.Option(VERIFY_FD_INSTANCES, "--fd-instances", min=1),
    bound_inits: int = typer.Option(VERIFY_BOUND_INITS, "--bound-inits", min=1),
    bound_lengths: str = typer.Option(",".join(str(n) for n in VERIFY_BOUND_LENGTHS), "--bound-lengths"),
):
    """Compara la retropropagación con los oráculos y comprueba las cotas."""
    try:
        parsed_sizes = VerifySizes.from_string(sizes) if sizes else VerifySizes()
    except InputError as error:
        _usage_error(str(error))
    use_case = create_run_verify_use_case(
        seed=seed, instances=instances, fd_instances=fd_instances,
        bound_inits=bound_inits, bound_lengths=_parse_lengths(bound_lengths),
    )
    result = use_case.execute(sizes=parsed_sizes, corrupt=corrupt, suites=suite or SUITES)
    report = result.get('data', {}).get('report')
    if report is not None:
        console.print(_report_table(report))
        lines = report.to_json_lines()
        if json_out is not None:
            json_out.parent.mkdir(parents=True, exist_ok=True)
            json_out.write_text(lines + "\n", encoding='utf-8')
        else:
            typer.echo(lines)
    _finish(result)


@app.command()
def ablate(
    variants: str = typer.Option(..., "--variants", help="Lista separada por comas"),
    config: Path = typer.Option(..., "--config", help="Fichero de experimento"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV combinado"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Entrena varias variantes con la misma semilla y reúne sus curvas."""
    try:
        flags = VariantFlag.parse_list(variants)
    except InputError as error:
        _usage_error(str(error))
    experiment = _load_config(config, seed)
    out = out or RUNS_DIR / f"{config.stem}_ablation.csv"
    result = create_run_ablation_use_case().execute(experiment, flags, out=out)
    metrics = result.get('data', {}).get('metrics', {})
    for name, values in metrics.items():
        console.print(_metrics_table(name, values))
    if result['success']:
        console.print(f"Curvas: {out}")
    _finish(result)


@app.command()
def trace(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint entrenado"),
    out: Path = typer.Option(..., "--out", help="CSV de activaciones"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Semilla de la secuencia de entrada"),
    zero_input: bool = typer.Option(False, "--zero-input", help="Secuencia de ceros"),
):
    """Exporta las activaciones de cada subcapa a lo largo de una secuencia."""
    result = create_export_traces_use_case().execute(ckpt, out=out, seed=seed, zero_input=zero_input)
    if result['success']:
        stats = result['data']['stats']
        table = Table(title="Actividad por subcapa")
        for column in stats.columns:
            table.add_column(str(column))
        for row in stats.itertuples(index=False):
            table.add_row(*(f"{value:.4g}" if isinstance(value, float) else str(value) for value in row))
        console.print(table)
    _finish(result)
