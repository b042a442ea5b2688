/** Browser wiring: order entry, plan tabs, decision buttons.
 * All state transitions live in the view-model modules; this file only
 * touches the DOM. */

import { PlanningClient, ServiceError } from "./client.js";
import {
  rowsSubmittable,
  submitInstance,
  submitOrderRows,
  validateRow,
  type OrderRow,
} from "./orders.js";
import {
  acceptCandidate,
  canDecide,
  deltaRow,
  kpiCards,
  planTabs,
  replanFrom,
  statusBadge,
} from "./planView.js";
import { renderGanttSvg } from "./gantt.js";
import type { PlanDoc } from "./types.js";

const serviceUrl =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000";
const client = new PlanningClient(serviceUrl);

let currentPlan: PlanDoc | null = null;
let activeTab: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function selectedPolicies(): string[] {
  return [...document.querySelectorAll<HTMLInputElement>("input[name=policy]:checked")]
    .map((box) => box.value);
}

function readRows(): OrderRow[] {
  const rows: OrderRow[] = [];
  for (const tr of document.querySelectorAll<HTMLTableRowElement>("#order-rows tr")) {
    const value = (name: string) =>
      tr.querySelector<HTMLInputElement>(`input[name=${name}]`)?.value ?? "";
    if (!value("article") && !value("quantity") && !value("deadline")) continue;
    rows.push({
      article: value("article"),
      quantity: Number(value("quantity")),
      deadline: Number(value("deadline")),
    });
  }
  return rows;
}

function showError(message: string, retry?: () => void) {
  const banner = el<HTMLDivElement>("error-banner");
  banner.replaceChildren(document.createTextNode(message));
  banner.hidden = false;
  if (retry) {
    const button = document.createElement("button");
    button.textContent = "retry";
    button.onclick = () => {
      banner.hidden = true;
      retry();
    };
    banner.appendChild(button);
  }
}

function clearError() {
  el<HTMLDivElement>("error-banner").hidden = true;
}

function renderPlan(plan: PlanDoc) {
  currentPlan = plan;
  el<HTMLSpanElement>("plan-id").textContent = plan.id;
  el<HTMLSpanElement>("plan-badge").textContent = statusBadge(plan);
  const tabs = planTabs(plan);
  if (!activeTab || !tabs.some((tab) => tab.policy === activeTab)) {
    activeTab = plan.recommended ?? tabs[0]?.policy ?? null;
  }
  const tabBar = el<HTMLDivElement>("tab-bar");
  tabBar.replaceChildren();
  for (const tab of tabs) {
    const button = document.createElement("button");
    button.textContent =
      tab.policy + (tab.recommended ? " ★" : "") + (tab.chosen ? " ✓" : "");
    button.disabled = tab.policy === activeTab;
    button.onclick = () => {
      activeTab = tab.policy;
      renderPlan(plan);
    };
    tabBar.appendChild(button);
  }
  const active = tabs.find((tab) => tab.policy === activeTab);
  if (!active) return;

  const cards = el<HTMLDivElement>("kpi-cards");
  cards.replaceChildren();
  for (const card of kpiCards(active)) {
    const div = document.createElement("div");
    div.className = "kpi-card";
    const label = document.createElement("span");
    label.className = "kpi-label";
    label.textContent = card.label;
    const value = document.createElement("span");
    value.className = "kpi-value";
    value.textContent = card.value;
    div.append(label, value);
    cards.appendChild(div);
  }

  const deltas = el<HTMLDivElement>("delta-row");
  deltas.replaceChildren();
  if (tabs.length > 1) {
    for (const cell of deltaRow(tabs, active.policy)) {
      const span = document.createElement("span");
      const sign = cell.makespanDelta > 0 ? "+" : "";
      span.textContent = `${cell.policy}: ${sign}${cell.makespanDelta} min makespan`;
      deltas.appendChild(span);
    }
  }

  const schedule = plan.candidates[active.policy]?.schedule;
  if (schedule) {
    el<HTMLDivElement>("gantt").innerHTML = renderGanttSvg(schedule, plan.instance);
  }
  el<HTMLButtonElement>("accept-button").disabled = !canDecide(plan);
}

function submitRequest() {
  return {
    goal: el<HTMLSelectElement>("goal-select").value,
    policies: selectedPolicies(),
    seed: Number(el<HTMLInputElement>("seed-input").value || "0"),
  };
}

async function onSubmitRows() {
  clearError();
  const rows = readRows();
  if (!rowsSubmittable(rows)) {
    const problems = rows.flatMap(validateRow);
    showError(
      problems.length
        ? problems.map((p) => `${p.field}: ${p.message}`).join("; ")
        : "enter at least one order row",
    );
    return;
  }
  try {
    const shop = JSON.parse(el<HTMLTextAreaElement>("shop-json").value);
    const catalog = JSON.parse(el<HTMLTextAreaElement>("catalog-json").value);
    const result = await submitOrderRows(client, shop, catalog, rows, submitRequest());
    renderPlan(result.plan);
  } catch (error) {
    if (error instanceof ServiceError) showError(`service: ${error.message}`, onSubmitRows);
    else showError(error instanceof Error ? error.message : String(error));
  }
}

async function onSubmitInstance() {
  clearError();
  el<HTMLSpanElement>("plan-badge").textContent = "PENDING";
  try {
    const instance = JSON.parse(el<HTMLTextAreaElement>("instance-json").value);
    const result = await submitInstance(client, instance, submitRequest());
    renderPlan(result.plan);
  } catch (error) {
    if (error instanceof ServiceError) {
      showError(`service: ${error.message}`, onSubmitInstance);
    } else {
      showError(error instanceof Error ? error.message : String(error));
    }
  }
}

async function onAccept() {
  if (!currentPlan || !activeTab) return;
  try {
    const { plan, conflict } = await acceptCandidate(client, currentPlan, activeTab);
    if (conflict) showError("plan was already decided; showing the current state");
    renderPlan(plan);
  } catch (error) {
    if (error instanceof ServiceError) showError(`service: ${error.message}`);
    else throw error;
  }
}

async function onReplan() {
  if (!currentPlan) return;
  const clock = Number(el<HTMLInputElement>("replan-clock").value);
  try {
    renderPlan(await replanFrom(client, currentPlan, clock, activeTab ?? undefined));
  } catch (error) {
    if (error instanceof ServiceError) showError(`service: ${error.message}`);
    else throw error;
  }
}

export function wire() {
  el<HTMLButtonElement>("submit-orders").onclick = onSubmitRows;
  el<HTMLButtonElement>("submit-instance").onclick = onSubmitInstance;
  el<HTMLButtonElement>("accept-button").onclick = onAccept;
  el<HTMLButtonElement>("replan-button").onclick = onReplan;
}

if (typeof document !== "undefined") {
  if (document.readyState !== "loading") wire();
  else document.addEventListener("DOMContentLoaded", wire);
}
