// HTTP client for the axiom service. fetch is injected so tests can
// run against a scripted transport.

import {
  ActivityInfo,
  AxiomRowDoc,
  AxiomTableDoc,
  MetricsReportDoc,
  ObjectInfo,
  RunStatusDoc,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface SaveResult {
  ok: boolean;
  /** true when the server rejected a stale version token (409) */
  conflict: boolean;
  table: AxiomTableDoc | null;
  /** [code, mass] diagnostics from a 400 constraint rejection */
  violations: Array<[string, number]>;
  message: string | null;
}

export interface RunDiff {
  report: MetricsReportDoc;
  previous: MetricsReportDoc | null;
  weightedFDelta: number | null;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class ApiClient {
  private lastReport: MetricsReportDoc | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
    private readonly pollMs = 150,
  ) {}

  async loadAxioms(property: "LAP" | "BHO"): Promise<AxiomTableDoc> {
    const resp = await this.fetchFn(`${this.baseUrl}/axioms/${property}`);
    if (!resp.ok) throw new Error(`GET axioms ${property}: ${resp.status}`);
    return (await resp.json()) as AxiomTableDoc;
  }

  /**
   * PUT the full table under its version token. A 409 reports a
   * conflict (the caller should reload); a 400 carries per-row
   * violation diagnostics.
   */
  async saveAxioms(
    property: "LAP" | "BHO",
    rows: AxiomRowDoc[],
    version: number,
    trainingSize: number,
  ): Promise<SaveResult> {
    const body: Omit<AxiomTableDoc, "version"> & { version: number } = {
      property,
      training_size: trainingSize,
      rows,
      version,
    };
    const resp = await this.fetchFn(`${this.baseUrl}/axioms/${property}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (resp.ok) {
      return {
        ok: true,
        conflict: false,
        table: (await resp.json()) as AxiomTableDoc,
        violations: [],
        message: null,
      };
    }
    const detail = await resp.json().then(
      (d) => d.detail,
      () => null,
    );
    if (resp.status === 409) {
      return {
        ok: false,
        conflict: true,
        table: null,
        violations: [],
        message: typeof detail === "string" ? detail : "version conflict",
      };
    }
    return {
      ok: false,
      conflict: false,
      table: null,
      violations: detail?.violations ?? [],
      message: detail?.message ?? `save failed: ${resp.status}`,
    };
  }

  async activities(): Promise<ActivityInfo[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/meta/activities`);
    if (!resp.ok) throw new Error(`GET activities: ${resp.status}`);
    return (await resp.json()).activities as ActivityInfo[];
  }

  async objects(): Promise<ObjectInfo[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/meta/objects`);
    if (!resp.ok) throw new Error(`GET objects: ${resp.status}`);
    return (await resp.json()).objects as ObjectInfo[];
  }

  async triggerRun(): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/runs`, { method: "POST" });
    if (!resp.ok) throw new Error(`POST runs: ${resp.status}`);
    return (await resp.json()).run_id as string;
  }

  async runStatus(runId: string): Promise<RunStatusDoc> {
    const resp = await this.fetchFn(`${this.baseUrl}/runs/${runId}`);
    if (!resp.ok) throw new Error(`GET run ${runId}: ${resp.status}`);
    return (await resp.json()) as RunStatusDoc;
  }

  /**
   * Start a run, wait for it, and report the metrics next to the
   * previous run's so the editor can show the delta of an edit.
   */
  async runAndDiff(timeoutMs = 120_000): Promise<RunDiff> {
    const runId = await this.triggerRun();
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.runStatus(runId);
      if (status.status === "done" && status.report) {
        const previous = this.lastReport;
        this.lastReport = status.report;
        return {
          report: status.report,
          previous,
          weightedFDelta: previous
            ? status.report.weighted_f - previous.weighted_f
            : null,
        };
      }
      if (status.status === "failed") {
        throw new Error(`run ${runId} failed: ${status.error}`);
      }
      if (Date.now() > deadline) throw new Error(`run ${runId} timed out`);
      await sleep(this.pollMs);
    }
  }
}
