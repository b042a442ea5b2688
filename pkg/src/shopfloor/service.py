"""HTTP planning service: submit orders, run candidate schedulers, compare,
accept or override, and re-plan from a mid-episode clock.

State lives in a single JSON file under the data directory; planning and
training jobs run on a bounded worker pool so the API stays responsive.
Every schedule is validated before it is served, and decisions are
append-only audit records.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel, Field

from . import instances as inst_io
from .env import RewardConfig, rollout
from .evaluation import compute_kpis, validate_schedule
from .gantt import render_gantt
from .model import EPS, DomainError, Instance, Job, Machine
from .policies import (
    HEURISTIC_KINDS,
    ExactPolicy,
    GuardExceeded,
    HeuristicPolicy,
    NeuralPolicy,
    PgHyperparams,
    QHyperparams,
    decision_tree_estimate,
    policy_from_dict,
    policy_to_dict,
    train_pg,
    train_q,
)
from .schedule import PROCESS, Schedule, schedule_from_dict

GOALS = ("makespan", "tardiness", "balanced")
EXACT_NODE_LIMIT = 2_000_000


class OrdersPayload(BaseModel):
    client_token: str = ""
    instance: dict | None = None
    shop: dict | None = None
    catalog: dict | None = None
    orders: list[dict] | None = None


class PlanPayload(BaseModel):
    order_set_id: str | None = None
    instance: dict | None = None
    goal: str = "makespan"
    weights: dict[str, float] | None = None
    policies: list[str] = Field(default_factory=list)
    seed: int = 0


class DecisionPayload(BaseModel):
    action: str
    policy: str | None = None
    schedule: dict | None = None


class ReplanPayload(BaseModel):
    clock: float
    policy: str | None = None


class TrainPayload(BaseModel):
    order_set_id: str | None = None
    instance: dict | None = None
    algo: str = "pg"
    seed: int = 0
    episodes: int | None = None
    max_updates: int | None = None


class Store:
    """Single-file JSON persistence with coarse locking; desk-scale by design."""

    def __init__(self, data_dir: str | Path):
        self.path = Path(data_dir) / "store.json"
        self.lock = threading.RLock()
        if self.path.exists():
            self.data = json.loads(self.path.read_text())
        else:
            self.data = {"orders": {}, "plans": {}, "policies": {},
                         "next_plan": 1, "next_policy": 1}
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._flush()

    def _flush(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.data, sort_keys=True))
        tmp.replace(self.path)

    def put(self, section: str, key: str, value: dict) -> None:
        with self.lock:
            self.data[section][key] = value
            self._flush()

    def get(self, section: str, key: str) -> dict | None:
        with self.lock:
            value = self.data[section].get(key)
            return None if value is None else json.loads(json.dumps(value))

    def update_plan(self, plan_id: str, mutate) -> dict:
        with self.lock:
            plan = self.data["plans"].get(plan_id)
            if plan is None:
                raise KeyError(plan_id)
            mutate(plan)
            self._flush()
            return json.loads(json.dumps(plan))

    def next_id(self, counter: str, prefix: str) -> str:
        with self.lock:
            n = self.data[counter]
            self.data[counter] = n + 1
            self._flush()
            return f"{prefix}-{n}"


def _public_plan(plan: dict) -> dict:
    return {k: v for k, v in plan.items() if not k.startswith("_")}


def residual_instance(instance: Instance, schedule: Schedule, clock: float) -> Instance:
    """The remaining work at `clock`: completed operations stripped, jobs
    located where their last finished operation ran, machine setups carried
    over.  Operations still in flight at `clock` are rescheduled from scratch.
    """
    if clock < 0:
        raise DomainError("replan clock must be >= 0")
    done: dict[int, list] = {}
    for iv in schedule.intervals:
        if iv.kind == PROCESS and iv.job_id is not None and iv.end <= clock + EPS:
            done.setdefault(iv.job_id, []).append(iv)
    machines = []
    for machine in instance.machines:
        setting = (None, machine.initial_setup)
        for iv in schedule.machine_lane(machine.machine_id):
            if iv.job_id is None:
                if iv.stop <= clock + EPS and iv.setup_to is not None:
                    if setting[0] is None or iv.stop >= setting[0]:
                        setting = (iv.stop, iv.setup_to)
            elif iv.kind == PROCESS and iv.end <= clock + EPS:
                op = instance.jobs[iv.job_id].ops[iv.op_index]
                if setting[0] is None or iv.end >= setting[0]:
                    setting = (iv.end, op.setup)
        machines.append(
            Machine(
                machine_id=machine.machine_id,
                name=machine.name,
                setup_time=machine.setup_time,
                initial_setup=setting[1],
            )
        )
    jobs = []
    for job in instance.jobs:
        finished = sorted(done.get(job.job_id, []), key=lambda iv: iv.op_index)
        remaining = job.ops[len(finished):]
        if not remaining:
            continue
        location = finished[-1].machine_id if finished else job.start
        jobs.append(
            Job(
                job_id=len(jobs),
                name=job.name,
                quantity=job.quantity,
                deadline=max(0.0, job.deadline - clock),
                ops=remaining,
                start_machine=location,
            )
        )
    return Instance(
        machines=tuple(machines),
        jobs=tuple(jobs),
        buffers=instance.buffers,
        transport=instance.transport,
        name=f"{instance.name}@t{clock:g}",
    ).validate()


def create_app(data_dir: str | Path, workers: int = 2, exact_budget: float = 30.0) -> FastAPI:
    app = FastAPI(title="shopfloor planning service", version="1")
    store = Store(data_dir)
    pool = ThreadPoolExecutor(max_workers=max(1, workers))

    def resolve_instance(payload) -> tuple[Instance, dict]:
        if payload.instance is not None:
            instance = inst_io.parse_instance(payload.instance)
        elif payload.order_set_id is not None:
            order_set = store.get("orders", payload.order_set_id)
            if order_set is None:
                raise HTTPException(404, f"unknown order set {payload.order_set_id}")
            instance = inst_io.parse_instance(order_set["instance"])
        else:
            raise HTTPException(400, "provide either an instance or an order_set_id")
        return instance, inst_io.serialize_instance(instance)

    def build_policy(name: str, instance: Instance, seed: int, goal: str):
        name = name.lower()
        if name in HEURISTIC_KINDS:
            return HeuristicPolicy(name, seed=seed)
        if name == "exact":
            objective = "total_tardiness" if goal == "tardiness" else "makespan"
            return ExactPolicy(instance, objective=objective,
                               node_limit=EXACT_NODE_LIMIT, time_budget=exact_budget)
        if name.startswith("trained:"):
            policy_id = name.split(":", 1)[1]
            record = store.get("policies", policy_id)
            if record is None or record.get("status") != "trained":
                raise DomainError(f"policy {policy_id} unknown or not trained yet")
            policy = policy_from_dict(record["policy"])
            if isinstance(policy, NeuralPolicy) and not policy.compatible_with(instance):
                raise DomainError("policy/instance incompatible: observation shape differs")
            return policy
        raise DomainError(f"unknown policy kind {name!r}")

    def compute_plan(plan_id: str) -> None:
        plan = store.get("plans", plan_id)
        instance = inst_io.parse_instance(plan["instance"])
        candidates: dict[str, dict] = {}
        for name in plan["request"]["policies"]:
            try:
                policy = build_policy(name, instance, plan["request"]["seed"], plan["goal"])
                result = rollout(
                    instance, policy, config=RewardConfig(),
                    seed=plan["request"]["seed"], record_observations=False,
                )
                violations = validate_schedule(instance, result.schedule)
                if violations:
                    raise DomainError(
                        "schedule failed validation: "
                        + "; ".join(v.code for v in violations[:3])
                    )
                kpis = compute_kpis(instance, result.schedule)
                candidates[name] = {
                    "kpis": kpis.as_dict(),
                    "schedule": result.schedule.as_dict(kpis),
                    "complete": result.schedule.complete,
                    "deadlock": result.deadlock,
                    "gantt": f"/plans/{plan_id}/gantt.svg?policy={name}",
                }
            except (DomainError, GuardExceeded) as err:
                candidates[name] = {"error": str(err)}

        def finish(record: dict) -> None:
            record["candidates"] = candidates
            ok = {n: c for n, c in candidates.items() if "kpis" in c}
            record["recommended"] = _recommend(ok, record["goal"], record.get("weights"))
            record["status"] = "draft" if ok else "failed"

        store.update_plan(plan_id, finish)

    def _recommend(candidates: dict[str, dict], goal: str, weights: dict | None) -> str | None:
        if not candidates:
            return None

        def score(item):
            name, c = item
            k = c["kpis"]
            if goal == "tardiness":
                return (k["total_tardiness"], k["makespan"], name)
            if goal == "balanced":
                w = weights or {"makespan": 1.0, "tardiness": 1.0}
                return (
                    w.get("makespan", 1.0) * k["makespan"]
                    + w.get("tardiness", 1.0) * k["total_tardiness"],
                    name,
                )
            return (k["makespan"], k["total_tardiness"], name)

        return min(candidates.items(), key=score)[0]

    def run_training(policy_id: str) -> None:
        record = store.get("policies", policy_id)
        instance = inst_io.parse_instance(record["instance"])
        try:
            if record["algo"] == "q":
                hp = QHyperparams(seed=record["seed"],
                                  episodes=record.get("episodes") or 2000)
                result = train_q(instance, hp)
            else:
                hp = PgHyperparams(seed=record["seed"],
                                   max_updates=record.get("max_updates") or 150)
                result = train_pg(instance, hp)
            record["policy"] = policy_to_dict(result.policy)
            record["status"] = "trained"
            record["final_makespan"] = result.curve[-1][2] if result.curve else None
        except DomainError as err:
            record["status"] = "failed"
            record["error"] = str(err)
        store.put("policies", policy_id, record)

    # -- endpoints ----------------------------------------------------------

    @app.post("/orders")
    def submit_orders(payload: OrdersPayload):
        try:
            if payload.instance is not None:
                instance = inst_io.parse_instance(payload.instance)
            elif payload.shop is not None and payload.catalog and payload.orders is not None:
                if not payload.orders:
                    raise inst_io.ParseError("order list is empty")
                shop = dict(payload.shop)
                shop.setdefault("jobs", [])
                shop.setdefault("name", "orders")
                base = inst_io.parse_instance({**shop, "jobs": [], "format_version": 1})
                catalog = inst_io.parse_catalog(payload.catalog, base)
                orders = [
                    inst_io.Order(
                        article_id=str(o["article_id"]),
                        quantity=int(o["quantity"]),
                        deadline=float(o["deadline"]),
                    )
                    for o in payload.orders
                ]
                jobs = inst_io.expand_orders(catalog, orders)
                instance = Instance(
                    machines=base.machines, jobs=jobs, buffers=base.buffers,
                    transport=base.transport, name=base.name,
                ).validate()
            else:
                raise inst_io.ParseError(
                    "provide an inline instance, or shop + catalog + orders"
                )
        except DomainError as err:
            raise HTTPException(400, str(err)) from None
        if instance.n_jobs == 0:
            raise HTTPException(400, "order set contains no jobs to schedule")
        doc = inst_io.serialize_instance(instance)
        digest = hashlib.sha256(
            (json.dumps(doc, sort_keys=True) + payload.client_token).encode()
        ).hexdigest()[:16]
        order_set_id = f"orders-{digest}"
        if store.get("orders", order_set_id) is None:
            store.put("orders", order_set_id, {
                "id": order_set_id, "instance": doc, "client_token": payload.client_token,
            })
        return {"order_set_id": order_set_id}

    @app.get("/orders/{order_set_id}")
    def get_orders(order_set_id: str):
        record = store.get("orders", order_set_id)
        if record is None:
            raise HTTPException(404, f"unknown order set {order_set_id}")
        return record

    @app.post("/plans", status_code=202)
    def create_plan(payload: PlanPayload):
        if not payload.policies:
            raise HTTPException(400, "at least one policy is required")
        if payload.goal not in GOALS:
            raise HTTPException(400, f"goal must be one of {GOALS}")
        try:
            instance, doc = resolve_instance(payload)
            for name in payload.policies:
                if name.lower() == "exact":
                    if decision_tree_estimate(instance) > EXACT_NODE_LIMIT * 100:
                        raise HTTPException(
                            400,
                            "exact search guard: instance is too large for "
                            f"exhaustive optimization ({instance.n_jobs} jobs x "
                            f"{instance.n_machines} machines)",
                        )
                else:
                    build_policy(name, instance, payload.seed, payload.goal)
        except DomainError as err:
            raise HTTPException(400, str(err)) from None
        plan_id = store.next_id("next_plan", "plan")
        store.put("plans", plan_id, {
            "id": plan_id,
            "status": "pending",
            "goal": payload.goal,
            "weights": payload.weights,
            "instance": doc,
            "instance_name": instance.name,
            "request": {"policies": payload.policies, "seed": payload.seed},
            "candidates": {},
            "audit": [],
        })
        pool.submit(compute_plan, plan_id)
        return {"plan_id": plan_id, "status": "pending"}

    @app.get("/plans/{plan_id}")
    def get_plan(plan_id: str):
        plan = store.get("plans", plan_id)
        if plan is None:
            raise HTTPException(404, f"unknown plan {plan_id}")
        return _public_plan(plan)

    @app.post("/plans/{plan_id}/decision")
    def decide_plan(plan_id: str, payload: DecisionPayload):
        plan = store.get("plans", plan_id)
        if plan is None:
            raise HTTPException(404, f"unknown plan {plan_id}")
        if plan["status"] != "draft":
            raise HTTPException(409, f"plan is {plan['status']}, decisions need a draft")
        if payload.action == "accept":
            if payload.policy not in plan["candidates"] or \
                    "kpis" not in plan["candidates"][payload.policy]:
                raise HTTPException(400, f"no usable candidate {payload.policy!r}")

            def apply(record: dict) -> None:
                record["status"] = "accepted"
                record["chosen"] = payload.policy
                record["audit"].append({
                    "seq": len(record["audit"]), "action": "accept", "policy": payload.policy,
                })

            return _public_plan(store.update_plan(plan_id, apply))
        if payload.action == "override":
            if payload.schedule is None:
                raise HTTPException(400, "override needs a schedule document")
            instance = inst_io.parse_instance(plan["instance"])
            try:
                schedule = schedule_from_dict(payload.schedule, instance)
            except (KeyError, TypeError, ValueError) as err:
                raise HTTPException(400, f"malformed schedule document: {err}") from None
            violations = validate_schedule(instance, schedule)
            if violations:
                raise HTTPException(
                    422,
                    detail={
                        "message": "override rejected: schedule is infeasible",
                        "violations": [v.as_dict() for v in violations],
                    },
                )
            kpis = compute_kpis(instance, schedule)

            def apply(record: dict) -> None:
                record["candidates"]["override"] = {
                    "kpis": kpis.as_dict(),
                    "schedule": schedule.as_dict(kpis),
                    "complete": schedule.complete,
                    "gantt": f"/plans/{plan_id}/gantt.svg?policy=override",
                }
                record["status"] = "overridden"
                record["chosen"] = "override"
                record["audit"].append({
                    "seq": len(record["audit"]), "action": "override",
                })

            return _public_plan(store.update_plan(plan_id, apply))
        raise HTTPException(400, f"unknown decision action {payload.action!r}")

    @app.post("/plans/{plan_id}/replan", status_code=202)
    def trigger_replan(plan_id: str, payload: ReplanPayload):
        plan = store.get("plans", plan_id)
        if plan is None:
            raise HTTPException(404, f"unknown plan {plan_id}")
        if plan["status"] in ("pending",):
            raise HTTPException(409, "plan is still being computed")
        name = payload.policy or plan.get("chosen") or plan.get("recommended")
        candidate = plan["candidates"].get(name)
        if candidate is None or "schedule" not in candidate:
            raise HTTPException(400, f"no usable candidate {name!r} to replan from")
        instance = inst_io.parse_instance(plan["instance"])
        schedule = schedule_from_dict(candidate["schedule"], instance)
        try:
            residual = residual_instance(instance, schedule, payload.clock)
        except DomainError as err:
            raise HTTPException(400, str(err)) from None
        warning = None
        if residual.n_jobs == 0:
            warning = f"nothing left to schedule at clock {payload.clock:g}"
        policies = [p for p in plan["request"]["policies"] if not p.startswith("trained:")]
        policies = policies or ["fcfs"]
        new_id = store.next_id("next_plan", "plan")
        store.put("plans", new_id, {
            "id": new_id,
            "status": "pending",
            "goal": plan["goal"],
            "weights": plan.get("weights"),
            "instance": inst_io.serialize_instance(residual),
            "instance_name": residual.name,
            "request": {"policies": policies, "seed": plan["request"]["seed"]},
            "candidates": {},
            "audit": [],
            "replanned_from": {"plan": plan_id, "clock": payload.clock, "policy": name},
            "warning": warning,
        })
        pool.submit(compute_plan, new_id)
        return {"plan_id": new_id, "status": "pending", "warning": warning}

    @app.get("/plans/{plan_id}/gantt.svg")
    def plan_gantt(plan_id: str, policy: str | None = Query(default=None)):
        plan = store.get("plans", plan_id)
        if plan is None:
            raise HTTPException(404, f"unknown plan {plan_id}")
        name = policy or plan.get("chosen") or plan.get("recommended")
        candidate = (plan.get("candidates") or {}).get(name)
        if candidate is None or "schedule" not in candidate:
            raise HTTPException(404, f"no schedule for policy {name!r}")
        instance = inst_io.parse_instance(plan["instance"])
        schedule = schedule_from_dict(candidate["schedule"], instance)
        return Response(content=render_gantt(schedule, "svg"), media_type="image/svg+xml")

    @app.get("/policies")
    def list_policies():
        with store.lock:
            records = [
                {k: v for k, v in record.items() if k not in ("policy", "instance")}
                for record in store.data["policies"].values()
            ]
        return {"policies": sorted(records, key=lambda r: r["id"])}

    @app.get("/policies/{policy_id}")
    def get_policy(policy_id: str):
        record = store.get("policies", policy_id)
        if record is None:
            raise HTTPException(404, f"unknown policy {policy_id}")
        return {k: v for k, v in record.items() if k != "policy"}

    @app.post("/policies/train", status_code=202)
    def train_policy(payload: TrainPayload):
        if payload.algo not in ("q", "pg"):
            raise HTTPException(400, "algo must be 'q' or 'pg'")
        try:
            instance, doc = resolve_instance(payload)
        except DomainError as err:
            raise HTTPException(400, str(err)) from None
        policy_id = store.next_id("next_policy", "policy")
        store.put("policies", policy_id, {
            "id": policy_id, "status": "training", "algo": payload.algo,
            "seed": payload.seed, "instance": doc, "instance_name": instance.name,
            "episodes": payload.episodes, "max_updates": payload.max_updates,
        })
        pool.submit(run_training, policy_id)
        return {"policy_id": policy_id, "status": "training"}

    return app
