"""Instance documents: parse/serialize, random generation, and article expansion.

The on-disk format is a single JSON document whose field names mirror the
operation-table columns (machine, setup, machining_time, quantity, volume,
deadline).  Machines are referenced by name inside operations; setup id 0 is
always the neutral setup.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .model import (
    BufferSpec,
    DomainError,
    Instance,
    Job,
    Machine,
    Operation,
)

FORMAT_VERSION = 1


class ParseError(DomainError):
    """A document that does not match the instance schema."""


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ParseError(f"{where}: missing field '{key}'")
    return doc[key]


def _matrix(rows, where: str) -> tuple[tuple[float, ...], ...]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError(f"{where}: expected a list of rows")
    try:
        return tuple(tuple(float(x) for x in row) for row in rows)
    except (TypeError, ValueError) as err:
        raise ParseError(f"{where}: non-numeric entry ({err})") from None


def parse_instance(document: dict | str) -> Instance:
    """Build a validated Instance from a JSON document (dict or JSON text)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as err:
            raise ParseError(f"invalid JSON: {err}") from None
    if not isinstance(document, dict):
        raise ParseError("instance document must be a JSON object")
    version = document.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version}")

    machines = []
    names: dict[str, int] = {}
    for idx, mdoc in enumerate(_require(document, "machines", "instance")):
        where = f"machines[{idx}]"
        name = str(_require(mdoc, "name", where))
        if name in names:
            raise ParseError(f"{where}: duplicate machine name '{name}'")
        names[name] = idx
        machines.append(
            Machine(
                machine_id=idx,
                name=name,
                setup_time=_matrix(_require(mdoc, "setup_time", where), f"{where}.setup_time"),
                initial_setup=int(mdoc.get("initial_setup", 0)),
            )
        )

    def machine_ref(value, where: str) -> int:
        if isinstance(value, str):
            if value not in names:
                raise ParseError(f"{where}: unknown machine '{value}'")
            return names[value]
        if isinstance(value, int) and 0 <= value < len(machines):
            return value
        raise ParseError(f"{where}: unknown machine {value!r}")

    jobs = []
    for jdx, jdoc in enumerate(_require(document, "jobs", "instance")):
        where = f"jobs[{jdx}]"
        ops = []
        for odx, odoc in enumerate(_require(jdoc, "operations", where)):
            owhere = f"{where}.operations[{odx}]"
            ops.append(
                Operation(
                    machine_id=machine_ref(_require(odoc, "machine", owhere), owhere),
                    setup=int(_require(odoc, "setup", owhere)),
                    unit_time=float(_require(odoc, "machining_time", owhere)),
                    volume=float(_require(odoc, "volume", owhere)),
                )
            )
        start = jdoc.get("start_machine")
        jobs.append(
            Job(
                job_id=jdx,
                name=str(jdoc.get("name", f"J{jdx + 1}")),
                quantity=int(_require(jdoc, "quantity", where)),
                deadline=float(_require(jdoc, "deadline", where)),
                ops=tuple(ops),
                start_machine=None if start is None else machine_ref(start, where),
            )
        )

    raw_buffers = _require(document, "buffers", "instance")
    if not isinstance(raw_buffers, list):
        raise ParseError("instance.buffers: expected a list of capacities")
    buffers = tuple(
        BufferSpec(machine_id=i, capacity=float(c)) for i, c in enumerate(raw_buffers)
    )

    instance = Instance(
        machines=tuple(machines),
        jobs=tuple(jobs),
        buffers=buffers,
        transport=_matrix(_require(document, "transport", "instance"), "instance.transport"),
        name=str(document.get("name", "instance")),
    )
    problems = instance.problems()
    if problems:
        raise ParseError("; ".join(problems))
    return instance


def serialize_instance(instance: Instance) -> dict:
    """Normalized document for an Instance; parse(serialize(x)) == x."""
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "name": instance.name,
        "machines": [],
        "transport": [list(row) for row in instance.transport],
        "buffers": [buf.capacity for buf in instance.buffers],
        "jobs": [],
    }
    for machine in instance.machines:
        mdoc: dict = {"name": machine.name, "setup_time": [list(r) for r in machine.setup_time]}
        if machine.initial_setup != 0:
            mdoc["initial_setup"] = machine.initial_setup
        doc["machines"].append(mdoc)
    for job in instance.jobs:
        jdoc: dict = {
            "name": job.name,
            "quantity": job.quantity,
            "deadline": job.deadline,
            "operations": [
                {
                    "machine": instance.machines[op.machine_id].name,
                    "setup": op.setup,
                    "machining_time": op.unit_time,
                    "volume": op.volume,
                }
                for op in job.ops
            ],
        }
        if job.start_machine is not None:
            jdoc["start_machine"] = instance.machines[job.start_machine].name
        doc["jobs"].append(jdoc)
    return doc


def instance_to_json(instance: Instance) -> str:
    return json.dumps(serialize_instance(instance), indent=2, sort_keys=True) + "\n"


def load_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(instance_to_json(instance))


def instance_hash(instance: Instance) -> str:
    import hashlib

    return hashlib.sha256(
        json.dumps(serialize_instance(instance), sort_keys=True).encode()
    ).hexdigest()


def paper_instance() -> Instance:
    """The bundled 3-machine / 3-job example instance."""
    text = resources.files("shopfloor").joinpath("data/paper3x3.json").read_text()
    return parse_instance(text)


BUNDLED = {"paper3x3": paper_instance}


def resolve_instance(ref: str | Path) -> Instance:
    """Accept either a bundled instance name or a path to a document."""
    if isinstance(ref, str) and ref in BUNDLED:
        return BUNDLED[ref]()
    return load_instance(ref)


# ---------------------------------------------------------------------------
# Article catalogs: expand (article, quantity, deadline) orders into jobs.


@dataclass(frozen=True)
class ComponentSpec:
    """One component of an article: an operation template plus units per article."""

    name: str
    quantity_per_article: int
    ops: tuple[Operation, ...]


@dataclass(frozen=True)
class ArticleSpec:
    article_id: str
    components: tuple[ComponentSpec, ...]


@dataclass(frozen=True)
class Order:
    article_id: str
    quantity: int
    deadline: float


def parse_catalog(document: dict | str, instance_machines: Instance) -> dict[str, ArticleSpec]:
    """Article catalog keyed by article id; machine names resolve against the instance."""
    if isinstance(document, str):
        document = json.loads(document)
    names = {m.name: m.machine_id for m in instance_machines.machines}
    catalog: dict[str, ArticleSpec] = {}
    for adoc in _require(document, "articles", "catalog"):
        article_id = str(_require(adoc, "article_id", "article"))
        components = []
        for cdoc in _require(adoc, "components", article_id):
            ops = tuple(
                Operation(
                    machine_id=names[str(odoc["machine"])],
                    setup=int(odoc["setup"]),
                    unit_time=float(odoc["machining_time"]),
                    volume=float(odoc["volume"]),
                )
                for odoc in _require(cdoc, "operations", article_id)
            )
            components.append(
                ComponentSpec(
                    name=str(_require(cdoc, "name", article_id)),
                    quantity_per_article=int(cdoc.get("quantity_per_article", 1)),
                    ops=ops,
                )
            )
        if not components:
            raise ParseError(f"article {article_id}: needs at least one component")
        catalog[article_id] = ArticleSpec(article_id=article_id, components=tuple(components))
    return catalog


def expand_orders(catalog: dict[str, ArticleSpec], orders: list[Order]) -> tuple[Job, ...]:
    """One job per (order, component); batch size multiplies through the BOM."""
    jobs: list[Job] = []
    for order in orders:
        if order.quantity < 1:
            raise DomainError(f"order for {order.article_id}: quantity must be >= 1")
        article = catalog.get(order.article_id)
        if article is None:
            raise DomainError(f"unknown article '{order.article_id}'")
        for component in article.components:
            jobs.append(
                Job(
                    job_id=len(jobs),
                    name=f"{order.article_id}/{component.name}#{len(jobs)}",
                    quantity=order.quantity * component.quantity_per_article,
                    deadline=order.deadline,
                    ops=component.ops,
                )
            )
    return tuple(jobs)


# ---------------------------------------------------------------------------
# Random instance generation.


@dataclass(frozen=True)
class GenSpec:
    """Bounds for the random instance generator; deterministic per seed."""

    seed: int = 0
    n_jobs: int = 3
    n_machines: int = 3
    setups_per_machine: tuple[int, int] = (2, 4)
    unit_time: tuple[float, float] = (0.05, 0.2)
    quantity: tuple[int, int] = (20, 200)
    volume: tuple[float, float] = (5.0, 30.0)
    transport: tuple[float, float] = (2.0, 15.0)
    setup: tuple[float, float] = (2.0, 10.0)
    deadline_slack: tuple[float, float] = (1.2, 2.5)
    generous_buffers: bool = True

    def check(self) -> None:
        if self.n_jobs < 0 or self.n_machines < 1:
            raise DomainError("generator needs n_machines >= 1 and n_jobs >= 0")
        for name in ("setups_per_machine", "unit_time", "quantity", "volume",
                     "transport", "setup", "deadline_slack"):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi < lo:
                raise DomainError(f"generator bound {name} must be positive and ordered")


def generate_instance(spec: GenSpec) -> Instance:
    """A random, always-valid instance.

    Job volumes are non-increasing along each route (material is cut down,
    never grows), and with generous_buffers every capacity covers the worst
    co-location of jobs so random rollouts cannot deadlock.
    """
    spec.check()
    rng = np.random.default_rng(spec.seed)
    m = spec.n_machines

    machines = []
    for k in range(m):
        n_setups = int(rng.integers(spec.setups_per_machine[0], spec.setups_per_machine[1] + 1))
        matrix = rng.uniform(spec.setup[0], spec.setup[1], size=(n_setups, n_setups))
        matrix = np.round(matrix, 2)
        np.fill_diagonal(matrix, 0.0)
        machines.append(
            Machine(
                machine_id=k,
                name=f"M{k + 1}",
                setup_time=tuple(tuple(float(x) for x in row) for row in matrix),
            )
        )

    transport = rng.uniform(spec.transport[0], spec.transport[1], size=(m, m))
    transport = np.round((transport + transport.T) / 2.0, 2)
    np.fill_diagonal(transport, 0.0)

    jobs = []
    for j in range(spec.n_jobs):
        route = [int(x) for x in rng.permutation(m)]
        volumes = np.sort(
            np.round(rng.uniform(spec.volume[0], spec.volume[1], size=len(route)), 2)
        )[::-1]
        ops = []
        for step, k in enumerate(route):
            ops.append(
                Operation(
                    machine_id=k,
                    setup=int(rng.integers(0, machines[k].setup_count)),
                    unit_time=float(np.round(rng.uniform(*spec.unit_time), 4)),
                    volume=float(volumes[step]),
                )
            )
        quantity = int(rng.integers(spec.quantity[0], spec.quantity[1] + 1))
        work = sum(quantity * op.unit_time for op in ops)
        slack = float(rng.uniform(*spec.deadline_slack))
        jobs.append(
            Job(
                job_id=j,
                name=f"J{j + 1}",
                quantity=quantity,
                deadline=float(np.round(work * slack + m * spec.transport[1], 2)),
                ops=tuple(ops),
            )
        )

    initial = [0.0] * m
    for job in jobs:
        initial[job.start] += job.ops[0].volume
    worst_case = sum(max(op.volume for op in job.ops) for job in jobs)
    buffers = []
    for k in range(m):
        if spec.generous_buffers:
            capacity = max(worst_case, 1.0)
        else:
            capacity = max(initial[k], float(rng.uniform(spec.volume[1], 2 * spec.volume[1])))
        buffers.append(BufferSpec(machine_id=k, capacity=float(np.round(capacity, 2))))

    return Instance(
        machines=tuple(machines),
        jobs=tuple(jobs),
        buffers=tuple(buffers),
        transport=tuple(tuple(float(x) for x in row) for row in transport),
        name=f"gen-{spec.seed}-{spec.n_jobs}x{spec.n_machines}",
    ).validate()
