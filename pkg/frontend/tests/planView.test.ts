import assert from "node:assert/strict";
import { test } from "node:test";

import { PlanningClient } from "../src/client.js";
import {
  acceptCandidate,
  canDecide,
  deltaRow,
  kpiCards,
  planTabs,
  replanFrom,
  statusBadge,
} from "../src/planView.js";
import type { PlanCreatedResponse, PlanDoc } from "../src/types.js";
import { fakeFetch, fixture } from "./helpers.js";

const planDraft = fixture<PlanDoc>("plan_draft.json");
const planAccepted = fixture<PlanDoc>("plan_accepted.json");
const replanResponse = fixture<PlanCreatedResponse>("replan_response.json");
const replanDraft = fixture<PlanDoc>("replan_draft.json");

test("two-tab comparison shows served KPIs and the correct makespan delta", () => {
  const tabs = planTabs(planDraft);
  assert.deepEqual(tabs.map((t) => t.policy), ["edd", "fcfs"]);

  // every displayed number comes straight from the service response
  const edd = tabs.find((t) => t.policy === "edd")!;
  const fcfs = tabs.find((t) => t.policy === "fcfs")!;
  assert.equal(edd.kpis.makespan, planDraft.candidates.edd!.kpis!.makespan);
  assert.equal(fcfs.kpis.makespan, planDraft.candidates.fcfs!.kpis!.makespan);
  assert.equal(fcfs.recommended, true);

  const deltas = deltaRow(tabs, "fcfs");
  assert.equal(deltas.length, 1);
  assert.equal(deltas[0]?.policy, "edd");
  assert.equal(
    deltas[0]?.makespanDelta,
    planDraft.candidates.edd!.kpis!.makespan - planDraft.candidates.fcfs!.kpis!.makespan,
  );
  assert.equal(deltas[0]?.makespanDelta, 14); // 177 - 163 on the bundled example
});

test("kpi cards render the served fields verbatim", () => {
  const edd = planTabs(planDraft).find((t) => t.policy === "edd")!;
  const cards = Object.fromEntries(kpiCards(edd).map((c) => [c.label, c.value]));
  assert.equal(cards["makespan"], `${planDraft.candidates.edd!.kpis!.makespan} min`);
  assert.equal(
    cards["total tardiness"],
    `${planDraft.candidates.edd!.kpis!.total_tardiness} min`,
  );
  assert.equal(cards["tardy jobs"], `${planDraft.candidates.edd!.kpis!.tardy_jobs}`);
});

test("accept flow reaches ACCEPTED without extra fetches", async () => {
  const { fetchFn, calls } = fakeFetch([
    { method: "POST", path: `/plans/${planDraft.id}/decision`, reply: planAccepted },
  ]);
  const client = new PlanningClient("http://svc", fetchFn);
  assert.equal(statusBadge(planDraft), "DRAFT");
  assert.equal(canDecide(planDraft), true);

  const { plan, conflict } = await acceptCandidate(client, planDraft, "edd");
  assert.equal(conflict, false);
  assert.equal(statusBadge(plan), "ACCEPTED");
  assert.equal(plan.chosen, "edd");
  assert.equal(canDecide(plan), false);
  assert.deepEqual(calls[0]?.body, { action: "accept", policy: "edd" });
});

test("conflicting decision refreshes the plan instead of throwing", async () => {
  const { fetchFn } = fakeFetch([
    {
      method: "POST",
      path: `/plans/${planDraft.id}/decision`,
      status: 409,
      reply: { detail: "plan is accepted, decisions need a draft" },
    },
    { method: "GET", path: `/plans/${planDraft.id}`, reply: planAccepted },
  ]);
  const client = new PlanningClient("http://svc", fetchFn);
  const { plan, conflict } = await acceptCandidate(client, planDraft, "fcfs");
  assert.equal(conflict, true);
  assert.equal(plan.status, "accepted");
});

test("replan button opens the new draft plan", async () => {
  const { fetchFn, calls } = fakeFetch([
    { method: "POST", path: `/plans/${planDraft.id}/replan`, reply: replanResponse },
    { method: "GET", path: `/plans/${replanResponse.plan_id}`, reply: replanDraft },
  ]);
  const client = new PlanningClient("http://svc", fetchFn);
  const plan = await replanFrom(client, planDraft, 29, "edd");
  assert.equal(plan.id, replanResponse.plan_id);
  assert.equal(plan.status, "draft");
  assert.deepEqual(calls[0]?.body, { clock: 29, policy: "edd" });
  // the replanned instance is the t29 residual: J3 has shed its first op
  const j3 = plan.instance.jobs.find((j) => j.name === "J3")!;
  assert.equal(j3.operations.length, 2);
  assert.equal(j3.start_machine, "M1");
  assert.equal(j3.deadline, 71);
});

test("failed candidates are kept off the tab bar", () => {
  const broken: PlanDoc = JSON.parse(JSON.stringify(planDraft));
  broken.candidates["exact"] = { error: "exact search time budget exceeded" };
  const tabs = planTabs(broken);
  assert.deepEqual(tabs.map((t) => t.policy), ["edd", "fcfs"]);
});
