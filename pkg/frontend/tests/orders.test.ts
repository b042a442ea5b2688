import assert from "node:assert/strict";
import { test } from "node:test";

import { PlanningClient } from "../src/client.js";
import { rowsSubmittable, submitInstance, validateRow } from "../src/orders.js";
import type { InstanceDoc, OrdersResponse, PlanCreatedResponse, PlanDoc } from "../src/types.js";
import { fakeFetch, fixture } from "./helpers.js";

const ordersResponse = fixture<OrdersResponse>("orders_response.json");
const planPending = fixture<PlanCreatedResponse>("plan_pending.json");
const planDraft = fixture<PlanDoc>("plan_draft.json");

test("rows with quantity zero block submission", () => {
  const row = { article: "table", quantity: 0, deadline: 120 };
  const problems = validateRow(row);
  assert.equal(problems.length, 1);
  assert.equal(problems[0]?.field, "quantity");
  assert.equal(rowsSubmittable([row]), false);
});

test("valid rows are submittable, empty sets are not", () => {
  assert.equal(rowsSubmittable([]), false);
  assert.equal(
    rowsSubmittable([{ article: "table", quantity: 3, deadline: 90 }]),
    true,
  );
  assert.equal(
    rowsSubmittable([
      { article: "table", quantity: 3, deadline: 90 },
      { article: "", quantity: 1, deadline: 10 },
    ]),
    false,
  );
});

test("negative deadline and fractional quantity are rejected", () => {
  const fields = validateRow({ article: "x", quantity: 1.5, deadline: -1 })
    .map((p) => p.field)
    .sort();
  assert.deepEqual(fields, ["deadline", "quantity"]);
});

test("order entry round-trip: POST /orders then POST /plans then poll", async () => {
  const { fetchFn, calls } = fakeFetch([
    { method: "POST", path: "/orders", reply: ordersResponse },
    { method: "POST", path: "/plans", reply: planPending },
    {
      method: "GET",
      path: `/plans/${planPending.plan_id}`,
      // first poll still pending, then the draft appears
      reply: (n: number) => (n === 0 ? { ...planDraft, status: "pending" } : planDraft),
    },
  ]);
  const client = new PlanningClient("http://svc", fetchFn);
  const result = await submitInstance(client, planDraft.instance as InstanceDoc, {
    goal: "makespan",
    policies: ["edd", "fcfs"],
    seed: 0,
    clientToken: "dashboard",
  });

  assert.equal(result.orderSetId, ordersResponse.order_set_id);
  assert.equal(result.planId, planPending.plan_id);
  assert.equal(result.plan.status, "draft");

  // contract: the client posted exactly what the service expects
  const orderCall = calls.find((c) => c.url.endsWith("/orders"));
  assert.ok(orderCall);
  const orderBody = orderCall.body as Record<string, unknown>;
  assert.equal(orderBody.client_token, "dashboard");
  assert.ok(orderBody.instance);
  const planCall = calls.find((c) => c.url.endsWith("/plans"));
  assert.ok(planCall);
  assert.deepEqual(planCall.body, {
    order_set_id: ordersResponse.order_set_id,
    goal: "makespan",
    policies: ["edd", "fcfs"],
    seed: 0,
  });
});

test("service 4xx surfaces as a typed error with the service detail", async () => {
  const { fetchFn } = fakeFetch([
    {
      method: "POST",
      path: "/orders",
      status: 400,
      reply: { detail: "order set contains no jobs to schedule" },
    },
  ]);
  const client = new PlanningClient("http://svc", fetchFn);
  await assert.rejects(
    () =>
      submitInstance(client, planDraft.instance as InstanceDoc, {
        goal: "makespan",
        policies: ["edd"],
        seed: 0,
      }),
    (error: Error & { status?: number }) => {
      assert.equal(error.name, "ServiceError");
      assert.equal(error.status, 400);
      assert.match(error.message, /no jobs/);
      return true;
    },
  );
});
