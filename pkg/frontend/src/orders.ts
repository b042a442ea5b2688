/** Order-entry view model: row validation and the submit flow
 * (POST /orders, then POST /plans, then poll). */

import type { PlanningClient } from "./client.js";
import type { InstanceDoc, OrderLine, PlanDoc } from "./types.js";

export interface OrderRow {
  article: string;
  quantity: number;
  deadline: number;
}

export interface RowProblem {
  field: "article" | "quantity" | "deadline";
  message: string;
}

export function validateRow(row: OrderRow): RowProblem[] {
  const problems: RowProblem[] = [];
  if (!row.article.trim()) {
    problems.push({ field: "article", message: "article is required" });
  }
  if (!Number.isFinite(row.quantity) || row.quantity < 1 || !Number.isInteger(row.quantity)) {
    problems.push({ field: "quantity", message: "quantity must be a whole number ≥ 1" });
  }
  if (!Number.isFinite(row.deadline) || row.deadline < 0) {
    problems.push({ field: "deadline", message: "deadline must be ≥ 0 minutes" });
  }
  return problems;
}

/** Invalid rows block submission entirely. */
export function rowsSubmittable(rows: OrderRow[]): boolean {
  return rows.length > 0 && rows.every((row) => validateRow(row).length === 0);
}

export interface SubmitRequest {
  goal: string;
  policies: string[];
  seed: number;
  clientToken?: string;
}

export interface SubmitResult {
  orderSetId: string;
  planId: string;
  plan: PlanDoc;
}

/** Article-based entry: shop layout + catalog + order rows. */
export async function submitOrderRows(
  client: PlanningClient,
  shop: Record<string, unknown>,
  catalog: Record<string, unknown>,
  rows: OrderRow[],
  request: SubmitRequest,
): Promise<SubmitResult> {
  if (!rowsSubmittable(rows)) {
    throw new Error("cannot submit: fix invalid order rows first");
  }
  const orders: OrderLine[] = rows.map((row) => ({
    article_id: row.article,
    quantity: row.quantity,
    deadline: row.deadline,
  }));
  const { order_set_id } = await client.submitOrders({
    shop,
    catalog,
    orders,
    client_token: request.clientToken,
  });
  return createAndAwaitPlan(client, order_set_id, request);
}

/** Direct entry of a full instance document (e.g. the bundled example). */
export async function submitInstance(
  client: PlanningClient,
  instance: InstanceDoc,
  request: SubmitRequest,
): Promise<SubmitResult> {
  const { order_set_id } = await client.submitOrders({
    instance,
    client_token: request.clientToken,
  });
  return createAndAwaitPlan(client, order_set_id, request);
}

async function createAndAwaitPlan(
  client: PlanningClient,
  orderSetId: string,
  request: SubmitRequest,
): Promise<SubmitResult> {
  const created = await client.createPlan({
    order_set_id: orderSetId,
    goal: request.goal,
    policies: request.policies,
    seed: request.seed,
  });
  const plan = await client.waitForPlan(created.plan_id);
  return { orderSetId, planId: created.plan_id, plan };
}
