/** Plan-view model: candidate tabs, KPI cards, deltas, decisions.
 *
 * This module performs no scheduling arithmetic of its own; every displayed
 * value is lifted verbatim from service response fields (the only derived
 * figures are differences between two served KPIs, labelled as such). */

import type { PlanningClient } from "./client.js";
import type { Candidate, Kpis, PlanDoc } from "./types.js";

export interface PlanTab {
  policy: string;
  kpis: Kpis;
  ganttUrl: string;
  recommended: boolean;
  chosen: boolean;
}

export interface FailedCandidate {
  policy: string;
  error: string;
}

export function planTabs(plan: PlanDoc): PlanTab[] {
  const tabs: PlanTab[] = [];
  for (const [policy, candidate] of Object.entries(plan.candidates)) {
    if (!candidate.kpis || !candidate.gantt) continue;
    tabs.push({
      policy,
      kpis: candidate.kpis,
      ganttUrl: candidate.gantt,
      recommended: plan.recommended === policy,
      chosen: plan.chosen === policy,
    });
  }
  tabs.sort((a, b) => a.policy.localeCompare(b.policy));
  return tabs;
}

export function failedCandidates(plan: PlanDoc): FailedCandidate[] {
  return Object.entries(plan.candidates)
    .filter((entry): entry is [string, Candidate & { error: string }] => !!entry[1].error)
    .map(([policy, candidate]) => ({ policy, error: candidate.error }));
}

export interface KpiCard {
  label: string;
  value: string;
}

export function kpiCards(tab: PlanTab): KpiCard[] {
  return [
    { label: "makespan", value: `${tab.kpis.makespan} min` },
    { label: "total tardiness", value: `${tab.kpis.total_tardiness} min` },
    { label: "tardy jobs", value: `${tab.kpis.tardy_jobs}` },
    { label: "peak buffer", value: tab.kpis.peak_buffer.join(" / ") },
  ];
}

export interface DeltaCell {
  policy: string;
  makespanDelta: number;
  tardinessDelta: number;
}

/** Differences of each tab against a baseline tab (e.g. the recommended
 * one); positive numbers mean the tab is worse than the baseline. */
export function deltaRow(tabs: PlanTab[], baselinePolicy: string): DeltaCell[] {
  const baseline = tabs.find((tab) => tab.policy === baselinePolicy);
  if (!baseline) throw new Error(`no tab named ${baselinePolicy}`);
  return tabs
    .filter((tab) => tab.policy !== baselinePolicy)
    .map((tab) => ({
      policy: tab.policy,
      makespanDelta: tab.kpis.makespan - baseline.kpis.makespan,
      tardinessDelta: tab.kpis.total_tardiness - baseline.kpis.total_tardiness,
    }));
}

export type Badge = "DRAFT" | "ACCEPTED" | "OVERRIDDEN" | "PENDING" | "FAILED";

export function statusBadge(plan: PlanDoc): Badge {
  return plan.status.toUpperCase() as Badge;
}

export function canDecide(plan: PlanDoc): boolean {
  return plan.status === "draft";
}

/** Accept one candidate; resolves with the refreshed plan (badge ACCEPTED).
 * A 409 means someone decided first: re-fetch and surface the fresh state. */
export async function acceptCandidate(
  client: PlanningClient,
  plan: PlanDoc,
  policy: string,
): Promise<{ plan: PlanDoc; conflict: boolean }> {
  try {
    const updated = await client.decide(plan.id, { action: "accept", policy });
    return { plan: updated, conflict: false };
  } catch (error) {
    if (error instanceof Error && "status" in error && (error as { status: number }).status === 409) {
      return { plan: await client.getPlan(plan.id), conflict: true };
    }
    throw error;
  }
}

/** Kick off a replan at the given clock and wait for the new draft. */
export async function replanFrom(
  client: PlanningClient,
  plan: PlanDoc,
  clock: number,
  policy?: string,
): Promise<PlanDoc> {
  const created = await client.replan(plan.id, clock, policy);
  return client.waitForPlan(created.plan_id);
}
