import assert from "node:assert/strict";
import { test } from "node:test";

import { jobSpans, laneGeometry, renderGanttSvg } from "../src/gantt.js";
import type { PlanDoc } from "../src/types.js";
import { fixture } from "./helpers.js";

const tracePlan = fixture<PlanDoc>("plan_trace_override.json");
const planDraft = fixture<PlanDoc>("plan_draft.json");

function traceSchedule() {
  const schedule = tracePlan.candidates["override"]?.schedule;
  assert.ok(schedule, "trace fixture has an override schedule");
  return schedule;
}

test("paper-trace lane M1 shows J3 over [0,29] and J1 over [29,53]", () => {
  const lanes = laneGeometry(traceSchedule(), tracePlan.instance);
  const m1 = lanes.find((lane) => lane.machine === "M1");
  assert.ok(m1);
  const spans = jobSpans(m1);
  const j3 = spans.find((s) => s.job === "J3");
  const j1 = spans.find((s) => s.job === "J1");
  assert.ok(j3 && j1);
  assert.equal(j3.start, 0);
  assert.equal(j3.end, 29);
  assert.equal(j1.start, 29);
  assert.equal(j1.end, 53);
});

test("blocks carry kinds so setup and process render distinctly", () => {
  const lanes = laneGeometry(traceSchedule(), tracePlan.instance);
  const m1 = lanes.find((lane) => lane.machine === "M1")!;
  const j3Blocks = m1.blocks.filter((b) => b.job === "J3");
  assert.deepEqual(
    j3Blocks.map((b) => [b.kind, b.start, b.end]),
    [["setup", 0, 4], ["process", 4, 29]],
  );
});

test("lanes exist for every machine and blocks are time-sorted", () => {
  const schedule = planDraft.candidates["edd"]!.schedule!;
  const lanes = laneGeometry(schedule, planDraft.instance);
  assert.deepEqual(lanes.map((l) => l.machine), ["M1", "M2", "M3"]);
  for (const lane of lanes) {
    for (let i = 1; i < lane.blocks.length; i++) {
      assert.ok(lane.blocks[i]!.start >= lane.blocks[i - 1]!.start);
    }
  }
});

test("svg contains one rect per block plus hover titles", () => {
  const schedule = traceSchedule();
  const svg = renderGanttSvg(schedule, tracePlan.instance);
  const lanes = laneGeometry(schedule, tracePlan.instance);
  const blockCount = lanes.reduce((sum, lane) => sum + lane.blocks.length, 0);
  assert.equal((svg.match(/<rect /g) ?? []).length, blockCount);
  assert.match(svg, /<title>J3 process \[4, 29\)<\/title>/);
});

test("zoom window crops blocks outside the range", () => {
  const schedule = traceSchedule();
  const full = renderGanttSvg(schedule, tracePlan.instance);
  const zoomed = renderGanttSvg(schedule, tracePlan.instance, {
    zoom: { from: 0, to: 30 },
  });
  assert.ok((zoomed.match(/<rect /g) ?? []).length < (full.match(/<rect /g) ?? []).length);
});
