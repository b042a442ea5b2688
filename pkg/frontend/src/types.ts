/** Wire types of the planning service API. */

export interface Kpis {
  makespan: number;
  total_tardiness: number;
  tardy_jobs: number;
  peak_buffer: number[];
  machine_utilization: number[];
  setup_time_total: number;
}

export type IntervalKind = "setup" | "transport" | "process";

export interface IntervalDoc {
  job: number | null;
  op: number | null;
  machine: number;
  kind: IntervalKind;
  transport_start: number;
  setup_start: number;
  proc_start: number;
  end: number;
  setup_from: number | null;
  setup_to: number | null;
}

export interface ScheduleDoc {
  format_version: number;
  instance: string;
  instance_hash: string;
  complete: boolean;
  completion: Record<string, number>;
  intervals: IntervalDoc[];
  kpis?: Kpis;
}

export interface OperationDoc {
  machine: string;
  setup: number;
  machining_time: number;
  volume: number;
}

export interface JobDoc {
  name: string;
  quantity: number;
  deadline: number;
  operations: OperationDoc[];
  start_machine?: string;
}

export interface MachineDoc {
  name: string;
  setup_time: number[][];
  initial_setup?: number;
}

export interface InstanceDoc {
  format_version: number;
  name: string;
  machines: MachineDoc[];
  transport: number[][];
  buffers: number[];
  jobs: JobDoc[];
}

export interface Candidate {
  kpis?: Kpis;
  schedule?: ScheduleDoc;
  complete?: boolean;
  deadlock?: boolean;
  gantt?: string;
  error?: string;
}

export type PlanStatus = "pending" | "draft" | "accepted" | "overridden" | "failed";

export interface PlanDoc {
  id: string;
  status: PlanStatus;
  goal: string;
  instance: InstanceDoc;
  instance_name: string;
  request: { policies: string[]; seed: number };
  candidates: Record<string, Candidate>;
  recommended?: string | null;
  chosen?: string;
  audit: Array<Record<string, unknown>>;
  warning?: string | null;
  replanned_from?: { plan: string; clock: number; policy: string };
}

export interface OrdersResponse {
  order_set_id: string;
}

export interface PlanCreatedResponse {
  plan_id: string;
  status: string;
  warning?: string | null;
}

export interface OrderLine {
  article_id: string;
  quantity: number;
  deadline: number;
}

export interface OrdersPayload {
  client_token?: string;
  instance?: InstanceDoc;
  shop?: Record<string, unknown>;
  catalog?: Record<string, unknown>;
  orders?: OrderLine[];
}

export interface PlanRequestPayload {
  order_set_id?: string;
  instance?: InstanceDoc;
  goal: string;
  weights?: Record<string, number>;
  policies: string[];
  seed: number;
}

export type DecisionPayload =
  | { action: "accept"; policy: string }
  | { action: "override"; schedule: ScheduleDoc };
