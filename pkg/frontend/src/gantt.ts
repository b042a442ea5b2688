/** Client-side Gantt: interval documents -> lane geometry -> inline SVG.
 *
 * Drawn from the served interval data (not the server-side SVG) so the
 * dashboard can offer hover titles and zooming; the server SVG remains the
 * canonical export. Times are used exactly as served. */

import type { InstanceDoc, IntervalDoc, ScheduleDoc } from "./types.js";

export interface GanttBlock {
  job: string | null;
  opIndex: number | null;
  kind: "setup" | "transport" | "process";
  start: number;
  end: number;
}

export interface GanttLane {
  machine: string;
  blocks: GanttBlock[];
}

function span(interval: IntervalDoc): [number, number] {
  switch (interval.kind) {
    case "transport":
      return [interval.transport_start, interval.setup_start];
    case "setup":
      return [interval.setup_start, interval.proc_start];
    default:
      return [interval.proc_start, interval.end];
  }
}

export function laneGeometry(schedule: ScheduleDoc, instance: InstanceDoc): GanttLane[] {
  return instance.machines.map((machine, machineIndex) => {
    const blocks: GanttBlock[] = [];
    for (const interval of schedule.intervals) {
      if (interval.machine !== machineIndex) continue;
      const [start, end] = span(interval);
      if (end - start <= 0) continue;
      blocks.push({
        job: interval.job === null ? null : (instance.jobs[interval.job]?.name ?? `#${interval.job}`),
        opIndex: interval.op,
        kind: interval.kind,
        start,
        end,
      });
    }
    blocks.sort((a, b) => a.start - b.start || a.end - b.end);
    return { machine: machine.name, blocks };
  });
}

/** Contiguous occupation of one job on one machine (its setup + transport +
 * processing segments merged), e.g. J3 on M1 over [0, 29]. */
export interface JobSpan {
  job: string;
  start: number;
  end: number;
}

export function jobSpans(lane: GanttLane): JobSpan[] {
  const byJob = new Map<string, JobSpan>();
  for (const block of lane.blocks) {
    if (block.job === null) continue;
    const key = `${block.job}#${block.opIndex}`;
    const existing = byJob.get(key);
    if (existing) {
      existing.start = Math.min(existing.start, block.start);
      existing.end = Math.max(existing.end, block.end);
    } else {
      byJob.set(key, { job: block.job, start: block.start, end: block.end });
    }
  }
  return [...byJob.values()].sort((a, b) => a.start - b.start);
}

const JOB_COLORS = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
  "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
];

export interface RenderOptions {
  width?: number;
  laneHeight?: number;
  zoom?: { from: number; to: number } | null;
}

export function renderGanttSvg(
  schedule: ScheduleDoc,
  instance: InstanceDoc,
  options: RenderOptions = {},
): string {
  const width = options.width ?? 900;
  const laneHeight = options.laneHeight ?? 30;
  const left = 70;
  const lanes = laneGeometry(schedule, instance);
  const horizon = Math.max(1, ...lanes.flatMap((lane) => lane.blocks.map((b) => b.end)));
  const from = options.zoom?.from ?? 0;
  const to = options.zoom?.to ?? horizon;
  const scale = (width - left - 20) / Math.max(1e-9, to - from);
  const height = lanes.length * (laneHeight + 8) + 40;
  const x = (t: number) => left + (t - from) * scale;
  const jobColor = new Map(instance.jobs.map((job, i) => [job.name, JOB_COLORS[i % 10]]));

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" font-family="sans-serif" font-size="11">`,
  ];
  lanes.forEach((lane, index) => {
    const top = 10 + index * (laneHeight + 8);
    parts.push(`<text x="6" y="${top + laneHeight / 2 + 4}">${lane.machine}</text>`);
    for (const block of lane.blocks) {
      if (block.end < from || block.start > to) continue;
      const x0 = Math.max(x(block.start), left);
      const x1 = Math.min(x(block.end), width - 10);
      const isProcess = block.kind === "process";
      const color = isProcess
        ? (block.job ? (jobColor.get(block.job) ?? "#666666") : "#666666")
        : block.kind === "setup" ? "#888888" : "#cccccc";
      const h = isProcess ? laneHeight : laneHeight * 0.5;
      const y = isProcess ? top : top + laneHeight * 0.5;
      const title = `${block.job ?? "setup"} ${block.kind} [${block.start}, ${block.end})`;
      parts.push(
        `<rect x="${x0.toFixed(1)}" y="${y.toFixed(1)}" width="${Math.max(x1 - x0, 0.5).toFixed(1)}" ` +
          `height="${h.toFixed(1)}" fill="${color}" stroke="#333"><title>${title}</title></rect>`,
      );
    }
  });
  parts.push("</svg>");
  return parts.join("\n");
}
