import { describe, expect, it } from "vitest";

import { ApiClient, FetchLike } from "../src/client.js";
import { AxiomRowDoc, AxiomTableDoc, MetricsReportDoc } from "../src/types.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function report(weightedF: number): MetricsReportDoc {
  return {
    hit_rate: { k1: 0.9, k2: 0.95, k3: 1.0 },
    per_activity: [{ code: 101, precision: 1, recall: 1, f: weightedF }],
    weighted_f: weightedF,
    confusion: [[1]],
  };
}

const row: AxiomRowDoc = {
  code: "2000",
  p101: 0.1,
  p102: 0,
  p103: 0.4,
  p104: 0,
  p105: 0,
  provenance: "learned",
};

/** Scripted server: versioned table store plus a one-poll run queue. */
function fakeServer(): { fetch: FetchLike; state: { version: number; puts: number } } {
  const state = { version: 3, puts: 0 };
  let runCounter = 0;
  const pending = new Map<string, number>();
  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    if (url.endsWith("/axioms/BHO") && method === "GET") {
      const table: AxiomTableDoc = {
        property: "BHO",
        training_size: 1000,
        rows: [row],
        version: state.version,
      };
      return jsonResponse(table);
    }
    if (url.endsWith("/axioms/BHO") && method === "PUT") {
      const body = JSON.parse(String(init?.body)) as AxiomTableDoc;
      if (body.version !== state.version) {
        return jsonResponse(
          { detail: `version token mismatch; current version is ${state.version}` },
          409,
        );
      }
      const overfull = body.rows.filter(
        (r) => r.p101 + r.p102 + r.p103 + r.p104 + r.p105 > 1 + 1e-9,
      );
      if (overfull.length > 0) {
        return jsonResponse(
          {
            detail: {
              message: "rows exceed unit activity mass",
              violations: overfull.map((r) => [r.code, 1.2]),
            },
          },
          400,
        );
      }
      state.version += 1;
      state.puts += 1;
      return jsonResponse({ ...body, version: state.version });
    }
    if (url.endsWith("/runs") && method === "POST") {
      runCounter += 1;
      const id = `run-${runCounter}`;
      pending.set(id, 0);
      return jsonResponse({ run_id: id, status: "pending" }, 202);
    }
    const match = url.match(/\/runs\/(run-\d+)$/);
    if (match && method === "GET") {
      const id = match[1];
      const polls = pending.get(id) ?? 0;
      pending.set(id, polls + 1);
      if (polls < 1) {
        return jsonResponse({ run_id: id, status: "running", report: null, error: null });
      }
      return jsonResponse({
        run_id: id,
        status: "done",
        report: report(runCounter === 1 ? 0.8 : 0.9),
        error: null,
      });
    }
    return jsonResponse({ detail: "not found" }, 404);
  };
  return { fetch: fetchFn, state };
}

describe("axiom save", () => {
  it("succeeds with the current version token", async () => {
    const server = fakeServer();
    const client = new ApiClient("", server.fetch, 1);
    const table = await client.loadAxioms("BHO");
    const result = await client.saveAxioms("BHO", table.rows, table.version, table.training_size);
    expect(result.ok).toBe(true);
    expect(result.table?.version).toBe(4);
  });

  it("reports a conflict for a stale token", async () => {
    const server = fakeServer();
    const client = new ApiClient("", server.fetch, 1);
    const table = await client.loadAxioms("BHO");
    await client.saveAxioms("BHO", table.rows, table.version, table.training_size);
    const replay = await client.saveAxioms("BHO", table.rows, table.version, table.training_size);
    expect(replay.ok).toBe(false);
    expect(replay.conflict).toBe(true);
    expect(server.state.puts).toBe(1); // second write never landed
  });

  it("surfaces constraint violations with offending codes", async () => {
    const server = fakeServer();
    const client = new ApiClient("", server.fetch, 1);
    const table = await client.loadAxioms("BHO");
    const bad = [{ ...row, p101: 0.8, p102: 0.5 }];
    const result = await client.saveAxioms("BHO", bad, table.version, table.training_size);
    expect(result.ok).toBe(false);
    expect(result.conflict).toBe(false);
    expect(result.violations.map(([code]) => code)).toEqual(["2000"]);
  });

  it("save then load round-trips the table", async () => {
    const server = fakeServer();
    const client = new ApiClient("", server.fetch, 1);
    const table = await client.loadAxioms("BHO");
    const saved = await client.saveAxioms("BHO", table.rows, table.version, table.training_size);
    expect(saved.table?.rows).toEqual(table.rows);
  });
});

describe("run and diff", () => {
  it("polls until done and diffs against the previous run", async () => {
    const server = fakeServer();
    const client = new ApiClient("", server.fetch, 1);
    const first = await client.runAndDiff();
    expect(first.report.weighted_f).toBe(0.8);
    expect(first.previous).toBeNull();
    expect(first.weightedFDelta).toBeNull();

    const second = await client.runAndDiff();
    expect(second.report.weighted_f).toBe(0.9);
    expect(second.previous?.weighted_f).toBe(0.8);
    expect(second.weightedFDelta).toBeCloseTo(0.1, 12);
  });
});
