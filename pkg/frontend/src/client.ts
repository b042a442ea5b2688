/** Typed client for the planning service; every dashboard number comes
 * through here. The fetch function is injectable so contract tests can
 * replay recorded responses. */

import type {
  DecisionPayload,
  OrdersPayload,
  OrdersResponse,
  PlanCreatedResponse,
  PlanDoc,
  PlanRequestPayload,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ServiceError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class PlanningClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = text;
      }
    }
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? (payload as { detail: unknown }).detail
          : payload;
      throw new ServiceError(response.status, detail);
    }
    return payload as T;
  }

  submitOrders(payload: OrdersPayload): Promise<OrdersResponse> {
    return this.request("POST", "/orders", payload);
  }

  createPlan(payload: PlanRequestPayload): Promise<PlanCreatedResponse> {
    return this.request("POST", "/plans", payload);
  }

  getPlan(planId: string): Promise<PlanDoc> {
    return this.request("GET", `/plans/${planId}`);
  }

  decide(planId: string, decision: DecisionPayload): Promise<PlanDoc> {
    return this.request("POST", `/plans/${planId}/decision`, decision);
  }

  replan(planId: string, clock: number, policy?: string): Promise<PlanCreatedResponse> {
    return this.request("POST", `/plans/${planId}/replan`, { clock, policy });
  }

  ganttUrl(planId: string, policy: string): string {
    return `${this.baseUrl}/plans/${planId}/gantt.svg?policy=${encodeURIComponent(policy)}`;
  }

  /** Poll until the plan leaves "pending"; resolves with the finished plan. */
  async waitForPlan(
    planId: string,
    opts: { intervalMs?: number; timeoutMs?: number; signal?: AbortSignal } = {},
  ): Promise<PlanDoc> {
    const interval = opts.intervalMs ?? 250;
    const deadline = Date.now() + (opts.timeoutMs ?? 60_000);
    for (;;) {
      if (opts.signal?.aborted) throw new Error("cancelled");
      const plan = await this.getPlan(planId);
      if (plan.status !== "pending") return plan;
      if (Date.now() > deadline) throw new Error(`plan ${planId} still pending`);
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }
}
