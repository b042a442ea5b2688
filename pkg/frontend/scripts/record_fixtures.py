"""Record service responses as fixtures for the dashboard contract tests.

Run from the repository root with the shopfloor package installed:

    python frontend/scripts/record_fixtures.py

Every fixture is a verbatim HTTP response body from the planning service;
the dashboard tests replay them through a fake fetch.
"""

import json
import time
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from shopfloor.env import Action, ShopEnv
from shopfloor.evaluation import compute_kpis
from shopfloor.instances import paper_instance, serialize_instance
from shopfloor.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def wait_plan(client, plan_id):
    for _ in range(600):
        plan = client.get(f"/plans/{plan_id}").json()
        if plan["status"] != "pending":
            return plan
        time.sleep(0.02)
    raise TimeoutError(plan_id)


def paper_trace_schedule_doc(paper):
    """The worked-example schedule: J3 on M1 [0,29], J1 on M1 [29,53], then drain."""
    env = ShopEnv(paper)
    env.step(Action.assign(2))
    env.step(Action.noop())
    env.step(Action.assign(2))
    env.step(Action.assign(0))
    while not env.done:
        eligible = np.flatnonzero(env.eligible_mask())
        env.step(int(eligible[0]))
    schedule = env.schedule()
    return schedule.as_dict(compute_kpis(paper, schedule))


def dump(name, payload):
    (FIXTURES / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote fixtures/{name}")


def main(tmp_dir="/tmp/shopfloor-fixtures"):
    FIXTURES.mkdir(parents=True, exist_ok=True)
    paper = paper_instance()
    app = create_app(tmp_dir, workers=2)
    with TestClient(app) as client:
        doc = serialize_instance(paper)
        orders = client.post("/orders", json={"instance": doc, "client_token": "dashboard"})
        dump("orders_response.json", orders.json())
        order_set_id = orders.json()["order_set_id"]

        created = client.post("/plans", json={
            "order_set_id": order_set_id, "goal": "makespan",
            "policies": ["edd", "fcfs"], "seed": 0,
        })
        dump("plan_pending.json", created.json())
        plan = wait_plan(client, created.json()["plan_id"])
        dump("plan_draft.json", plan)

        accepted = client.post(f"/plans/{plan['id']}/decision",
                               json={"action": "accept", "policy": "edd"})
        dump("plan_accepted.json", accepted.json())

        trace_plan_id = client.post("/plans", json={
            "order_set_id": order_set_id, "goal": "makespan",
            "policies": ["edd"], "seed": 0,
        }).json()["plan_id"]
        wait_plan(client, trace_plan_id)
        overridden = client.post(
            f"/plans/{trace_plan_id}/decision",
            json={"action": "override", "schedule": paper_trace_schedule_doc(paper)},
        )
        dump("plan_trace_override.json", overridden.json())

        replanned = client.post(f"/plans/{plan['id']}/replan",
                                json={"clock": 29, "policy": "edd"})
        dump("replan_response.json", replanned.json())
        dump("replan_draft.json", wait_plan(client, replanned.json()["plan_id"]))


if __name__ == "__main__":
    main()
