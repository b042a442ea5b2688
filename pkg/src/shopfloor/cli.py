"""Command-line front door: validate, generate, plan, train, evaluate, gantt,
serve, replay.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 guard exceeded.
Machine-readable outputs carry no wall-clock timestamps; everything is
deterministic given the seeds.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import instances as inst_io
from .env import EnvFeatures, RewardConfig, rollout, replay_trajectory, trajectory_to_jsonl
from .evaluation import compute_kpis, validate_schedule
from .gantt import render_gantt
from .model import DomainError
from .policies import (
    GuardExceeded,
    HEURISTIC_KINDS,
    PgHyperparams,
    QHyperparams,
    curve_to_csv,
    load_policy,
    make_policy,
    save_policy,
    train_pg,
    train_q,
)
from .schedule import schedule_from_dict

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_GUARD = 3


class ValidationFailure(click.ClickException):
    exit_code = EXIT_VALIDATION


class GuardFailure(click.ClickException):
    exit_code = EXIT_GUARD


def _instance(ref: str):
    try:
        return inst_io.resolve_instance(ref)
    except FileNotFoundError:
        raise click.UsageError(f"no such instance file or bundled name: {ref}")
    except DomainError as err:
        raise ValidationFailure(str(err))


def _policy(name: str, instance, seed: int):
    name = name.lower()
    if name.endswith(".json") or "/" in name:
        return name, load_policy(name)
    try:
        return name, make_policy(name, instance=instance, seed=seed)
    except GuardExceeded as err:
        raise GuardFailure(str(err))
    except DomainError as err:
        raise click.UsageError(str(err))


def _kpi_table(rows: dict[str, dict]) -> str:
    headers = ["policy", "makespan", "tardiness", "tardy", "setup_total", "peak_buffer"]
    table = [headers]
    for name, k in rows.items():
        table.append([
            name,
            f"{k['makespan']:.2f}",
            f"{k['total_tardiness']:.2f}",
            str(k["tardy_jobs"]),
            f"{k['setup_time_total']:.2f}",
            "/".join(f"{p:g}" for p in k["peak_buffer"]),
        ])
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


@click.group()
def cli():
    """Extended job-shop scheduling: plan, train, evaluate, serve."""


@cli.command()
@click.option("--instance", "ref", required=True, help="instance file or bundled name")
def validate(ref):
    """Check an instance document against all model invariants."""
    instance = _instance(ref)
    click.echo(f"{instance.name}: {instance.n_jobs} jobs, {instance.n_machines} machines, ok")


@cli.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--jobs", default=3, show_default=True)
@click.option("--machines", default=3, show_default=True)
@click.option("--tight-buffers", is_flag=True, help="sample binding buffer capacities")
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
def generate(seed, jobs, machines, tight_buffers, output):
    """Write a random instance document."""
    spec = inst_io.GenSpec(seed=seed, n_jobs=jobs, n_machines=machines,
                           generous_buffers=not tight_buffers)
    instance = inst_io.generate_instance(spec)
    inst_io.save_instance(instance, output)
    click.echo(f"wrote {output} ({instance.name})")


@cli.command()
@click.option("--instance", "ref", required=True)
@click.option("--policy", "policies", multiple=True, default=("edd",), show_default=True,
              help="heuristic name, 'exact', or a trained policy file")
@click.option("--seed", default=0, show_default=True)
@click.option("--presetup", is_flag=True, help="enable proactive setup actions")
@click.option("--w-time", default=1.0, show_default=True)
@click.option("--w-tardy", default=5.0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="plan-out", show_default=True)
@click.option("--csv/--no-csv", "write_csv", default=True, show_default=True)
def plan(ref, policies, seed, presetup, w_time, w_tardy, out, write_csv):
    """Schedule an instance with one or more policies; write schedules,
    Gantt charts and a KPI report."""
    instance = _instance(ref)
    config = RewardConfig(w_time=w_time, w_tardy=w_tardy)
    features = EnvFeatures(presetup=presetup)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    kpi_rows: dict[str, dict] = {}
    failures = []
    for name in policies:
        name, policy = _policy(name, instance, seed)
        try:
            result = rollout(instance, policy, config=config, features=features, seed=seed)
        except DomainError as err:
            raise ValidationFailure(str(err))
        violations = validate_schedule(instance, result.schedule)
        if violations:
            failures.append((name, violations))
            continue
        kpis = compute_kpis(instance, result.schedule)
        kpi_rows[name] = kpis.as_dict()
        tag = "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
        (outdir / f"schedule_{tag}.json").write_text(result.schedule.to_json(kpis))
        if write_csv:
            (outdir / f"schedule_{tag}.csv").write_text(result.schedule.intervals_csv())
        (outdir / f"gantt_{tag}.svg").write_text(render_gantt(result.schedule, "svg"))
        (outdir / f"trajectory_{tag}.jsonl").write_text(
            trajectory_to_jsonl(result.trajectory)
        )
    if kpi_rows:
        click.echo(_kpi_table(kpi_rows))
        lines = ["policy,makespan,total_tardiness,tardy_jobs,setup_time_total"]
        for name, k in kpi_rows.items():
            lines.append(
                f"{name},{k['makespan']:.6f},{k['total_tardiness']:.6f},"
                f"{k['tardy_jobs']},{k['setup_time_total']:.6f}"
            )
        (outdir / "kpis.csv").write_text("\n".join(lines) + "\n")
        from .report import save_kpi_figure
        from .schedule import Kpis

        save_kpi_figure(
            {
                name: Kpis(
                    makespan=k["makespan"], total_tardiness=k["total_tardiness"],
                    tardy_jobs=k["tardy_jobs"], peak_buffer=tuple(k["peak_buffer"]),
                    machine_utilization=tuple(k["machine_utilization"]),
                    setup_time_total=k["setup_time_total"],
                )
                for name, k in kpi_rows.items()
            },
            outdir / "kpis.png",
        )
        click.echo(f"outputs in {outdir}/")
    if failures:
        for name, violations in failures:
            click.echo(f"{name}: schedule failed validation:", err=True)
            for v in violations[:5]:
                click.echo(f"  {v.code} at t={v.time:g}: {v.detail}", err=True)
        raise ValidationFailure("some schedules failed validation")


@cli.command()
@click.option("--instance", "ref", required=True)
@click.option("--algo", type=click.Choice(["pg", "q"]), default="pg", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--episodes", default=2000, show_default=True, help="q-learning episodes")
@click.option("--updates", default=150, show_default=True, help="policy-gradient updates")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default="policy.json",
              show_default=True)
def train(ref, algo, seed, episodes, updates, output):
    """Train a scheduling policy and write it with its training curve."""
    instance = _instance(ref)
    try:
        if algo == "q":
            result = train_q(instance, QHyperparams(seed=seed, episodes=episodes))
        else:
            result = train_pg(instance, PgHyperparams(seed=seed, max_updates=updates))
    except DomainError as err:
        raise ValidationFailure(str(err))
    save_policy(result.policy, output)
    stem = str(Path(output).with_suffix(""))
    Path(stem + ".curve.csv").write_text(curve_to_csv(result.curve))
    from .report import save_curve_figure

    save_curve_figure(result.curve, stem + ".curve.png")
    final = result.curve[-1]
    click.echo(f"trained {algo} policy -> {output} (final makespan {final[2]:.2f})")


@cli.command()
@click.option("--instance", "ref", required=True)
@click.option("--policy", "policies", multiple=True, default=("fcfs", "edd", "spt", "lpt"),
              show_default=True)
@click.option("--rollouts", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="eval-out", show_default=True)
def evaluate(ref, policies, rollouts, seed, out):
    """Compare policies over seeded rollouts; write CSV and a boxplot."""
    instance = _instance(ref)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    makespans: dict[str, list[float]] = {}
    for name in policies:
        name, policy = _policy(name, instance, seed)
        values = []
        for i in range(rollouts):
            result = rollout(instance, policy, config=RewardConfig.makespan_only(),
                             seed=seed + i, record_observations=False)
            values.append(result.kpis.makespan)
        makespans[name] = values
    lines = ["policy,rollout,makespan"]
    for name, values in makespans.items():
        for i, v in enumerate(values):
            lines.append(f"{name},{i},{v:.6f}")
    (outdir / "evaluation.csv").write_text("\n".join(lines) + "\n")
    from .report import save_evaluation_figure

    save_evaluation_figure(makespans, outdir / "evaluation.png")
    width = max(len(n) for n in makespans)
    for name, values in makespans.items():
        arr = np.array(values)
        click.echo(
            f"{name.ljust(width)}  mean {arr.mean():8.2f}  min {arr.min():8.2f}  "
            f"max {arr.max():8.2f}"
        )
    click.echo(f"outputs in {outdir}/")


@cli.command()
@click.option("--schedule", "schedule_path", required=True, type=click.Path(exists=True))
@click.option("--instance", "ref", required=True)
@click.option("--format", "fmt", type=click.Choice(["svg", "text"]), default="svg",
              show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def gantt(schedule_path, ref, fmt, output):
    """Render a stored schedule document as a Gantt chart."""
    instance = _instance(ref)
    doc = json.loads(Path(schedule_path).read_text())
    schedule = schedule_from_dict(doc, instance)
    rendered = render_gantt(schedule, fmt)
    if output:
        Path(output).write_text(rendered)
        click.echo(f"wrote {output}")
    else:
        click.echo(rendered, nl=False)


@cli.command()
@click.option("--instance", "ref", required=True)
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--presetup", is_flag=True)
@click.option("--w-time", default=1.0, show_default=True)
@click.option("--w-tardy", default=5.0, show_default=True)
def replay(ref, log_path, presetup, w_time, w_tardy):
    """Re-execute a trajectory log and verify byte-identical observations."""
    instance = _instance(ref)
    problems = replay_trajectory(
        instance,
        Path(log_path).read_text(),
        config=RewardConfig(w_time=w_time, w_tardy=w_tardy),
        features=EnvFeatures(presetup=presetup),
    )
    if problems:
        for p in problems:
            click.echo(p, err=True)
        raise ValidationFailure(f"replay diverged in {len(problems)} places")
    click.echo("replay ok: trajectory reproduced exactly")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--data-dir", default="shopfloor-data", show_default=True)
@click.option("--workers", default=2, show_default=True)
@click.option("--exact-budget", default=30.0, show_default=True,
              help="seconds before exact search degrades to an error")
def serve(host, port, data_dir, workers, exact_budget):
    """Run the planning service."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir, workers=workers, exact_budget=exact_budget)
    uvicorn.run(app, host=host, port=port, log_level="info")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as err:
        return err.exit_code
    except click.UsageError as err:
        err.show()
        return EXIT_USAGE
    except (ValidationFailure, GuardFailure) as err:
        err.show()
        return err.exit_code
    except click.ClickException as err:
        err.show()
        return err.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
