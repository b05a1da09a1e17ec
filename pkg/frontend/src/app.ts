// Editor page wiring: two grid editors (BHO hands matrix, LAP rosette
// grid with posture tabs) bound to the axiom service. Edits apply to
// the current selection under live constraint checking; rejected edits
// flash the offending units and change nothing.

import { ApiClient } from "./client.js";
import { BhoGridModel, OBJECT_COUNT, bhoCode } from "./bho.js";
import { GRID_SIZE, LapWedgeModel, POSTURES, POSTURE_NAMES, WEDGES, lapCode } from "./lap.js";
import { cssColor } from "./color.js";
import { ACTIVITY_CODES, AxiomTableDoc, MetricsReportDoc } from "./types.js";

const CELL = 44; // LAP rosette cell size in px
const state = {
  bho: new BhoGridModel(),
  lap: new LapWedgeModel(),
  bhoTable: null as AxiomTableDoc | null,
  lapTable: null as AxiomTableDoc | null,
  activity: 101,
  offending: new Set<string>(),
  objectNames: new Map<number, string>(),
  activityNames: new Map<number, string>(),
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false): void {
  const bar = el<HTMLElement>("status");
  bar.textContent = text;
  bar.className = isError ? "status error" : "status";
}

// ---- BHO table ----------------------------------------------------------

function renderBho(): void {
  const table = el<HTMLTableElement>("bho-grid");
  table.innerHTML = "";
  const header = table.insertRow();
  header.insertCell().textContent = "R\\L";
  for (let l = 0; l < OBJECT_COUNT; l++) {
    const cell = header.insertCell();
    cell.textContent = String(l);
    cell.title = state.objectNames.get(l) ?? String(l);
  }
  for (let r = 0; r < OBJECT_COUNT; r++) {
    const row = table.insertRow();
    const head = row.insertCell();
    head.textContent = String(r);
    head.title = state.objectNames.get(r) ?? String(r);
    for (let l = 0; l < OBJECT_COUNT; l++) {
      const code = bhoCode(r, l);
      const cell = row.insertCell();
      const p = state.bho.probability(code, state.activity);
      cell.style.background = cssColor(p);
      cell.title = `${code} idle ${state.bho.idleMass(code).toFixed(2)}`;
      if (state.bho.selection.has(code)) cell.classList.add("selected");
      if (state.offending.has(code)) cell.classList.add("offending");
      cell.addEventListener("click", (ev) => {
        state.bho.selectCell(r, l, ev.shiftKey);
        state.offending.clear();
        renderBho();
      });
    }
  }
}

// ---- LAP rosettes --------------------------------------------------------

function wedgePath(ctx: CanvasRenderingContext2D, cx: number, cy: number, w: number): void {
  const r = CELL / 2 - 3;
  // wedge w covers [60w, 60w+60) degrees, drawn clockwise from north
  const a0 = ((60 * w - 90) * Math.PI) / 180;
  const a1 = ((60 * w - 30) * Math.PI) / 180;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.arc(cx, cy, r, a0, a1);
  ctx.closePath();
}

function renderLap(): void {
  const canvas = el<HTMLCanvasElement>("lap-grid");
  canvas.width = GRID_SIZE * CELL;
  canvas.height = GRID_SIZE * CELL;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let x = 1; x <= GRID_SIZE; x++) {
    for (let y = 1; y <= GRID_SIZE; y++) {
      const cx = (x - 0.5) * CELL;
      const cy = (GRID_SIZE - y + 0.5) * CELL;
      for (let w = 0; w < WEDGES; w++) {
        const code = lapCode(x, y, w, state.lap.posture);
        wedgePath(ctx, cx, cy, w);
        ctx.fillStyle = cssColor(state.lap.probability(code, state.activity));
        ctx.fill();
        if (state.offending.has(code)) {
          ctx.strokeStyle = "#f90";
          ctx.lineWidth = 3;
        } else if (state.lap.selection.has(code)) {
          ctx.strokeStyle = "#06c";
          ctx.lineWidth = 2;
        } else {
          ctx.strokeStyle = "#bbb";
          ctx.lineWidth = 0.5;
        }
        ctx.stroke();
      }
    }
  }
}

function lapHit(ev: MouseEvent): { x: number; y: number; wedge: number } | null {
  const canvas = el<HTMLCanvasElement>("lap-grid");
  const rect = canvas.getBoundingClientRect();
  const px = ev.clientX - rect.left;
  const py = ev.clientY - rect.top;
  const x = Math.floor(px / CELL) + 1;
  const yRow = Math.floor(py / CELL);
  const y = GRID_SIZE - yRow;
  if (x < 1 || x > GRID_SIZE || y < 1 || y > GRID_SIZE) return null;
  const cx = (x - 0.5) * CELL;
  const cy = (yRow + 0.5) * CELL;
  const angle = (Math.atan2(py - cy, px - cx) * 180) / Math.PI; // -180..180, 0 = east
  const fromNorth = (angle + 90 + 360) % 360;
  return { x, y, wedge: Math.floor(fromNorth / 60) % WEDGES };
}

// ---- controls ------------------------------------------------------------

function currentModel(): BhoGridModel | LapWedgeModel {
  return el<HTMLSelectElement>("property").value === "BHO" ? state.bho : state.lap;
}

function rerender(): void {
  const prop = el<HTMLSelectElement>("property").value;
  el<HTMLElement>("bho-pane").style.display = prop === "BHO" ? "" : "none";
  el<HTMLElement>("lap-pane").style.display = prop === "LAP" ? "" : "none";
  if (prop === "BHO") renderBho();
  else renderLap();
}

function applyEdit(): void {
  const p = Number(el<HTMLInputElement>("prob").value);
  const result = currentModel().setProbability(state.activity, p);
  state.offending = new Set(result.offending);
  if (!result.ok) {
    setStatus(`edit rejected: ${result.offending.length} unit(s) would exceed mass 1`, true);
  } else {
    setStatus(`set ${ACTIVITY_CODES.includes(state.activity as 101) ? state.activityNames.get(state.activity) : state.activity} = ${p}`);
  }
  rerender();
}

function renderReport(diff: { report: MetricsReportDoc; weightedFDelta: number | null }): void {
  const fmt = (x: number) => x.toFixed(4);
  const delta =
    diff.weightedFDelta === null
      ? ""
      : ` (${diff.weightedFDelta >= 0 ? "+" : ""}${fmt(diff.weightedFDelta)})`;
  const lines = [`weighted F ${fmt(diff.report.weighted_f)}${delta}`];
  for (const s of diff.report.per_activity) {
    lines.push(`  ${state.activityNames.get(s.code) ?? s.code}: F ${fmt(s.f)}`);
  }
  el<HTMLElement>("report").textContent = lines.join("\n");
}

export async function start(baseUrl = ""): Promise<void> {
  const client = new ApiClient(baseUrl);
  for (const a of await client.activities()) state.activityNames.set(a.code, a.name);
  for (const o of await client.objects()) state.objectNames.set(o.id, o.name);

  const activitySel = el<HTMLSelectElement>("activity");
  for (const code of ACTIVITY_CODES) {
    const opt = document.createElement("option");
    opt.value = String(code);
    opt.textContent = `${code} ${state.activityNames.get(code) ?? ""}`;
    activitySel.appendChild(opt);
  }
  activitySel.addEventListener("change", () => {
    state.activity = Number(activitySel.value);
    rerender();
  });

  const postureSel = el<HTMLSelectElement>("posture");
  for (const posture of POSTURES) {
    const opt = document.createElement("option");
    opt.value = String(posture);
    opt.textContent = POSTURE_NAMES[posture];
    postureSel.appendChild(opt);
  }
  postureSel.addEventListener("change", () => {
    state.lap.setPosture(Number(postureSel.value));
    rerender();
  });

  el<HTMLCanvasElement>("lap-grid").addEventListener("click", (ev) => {
    const hit = lapHit(ev as MouseEvent);
    if (!hit) return;
    state.lap.selectWedge(hit.x, hit.y, hit.wedge, (ev as MouseEvent).shiftKey);
    state.offending.clear();
    rerender();
  });

  el<HTMLSelectElement>("property").addEventListener("change", rerender);
  el<HTMLButtonElement>("apply").addEventListener("click", applyEdit);

  async function reload(): Promise<void> {
    state.bhoTable = await client.loadAxioms("BHO");
    state.lapTable = await client.loadAxioms("LAP");
    state.bho.loadRows(state.bhoTable.rows);
    state.lap.loadRows(state.lapTable.rows);
    state.offending.clear();
    setStatus(
      `loaded BHO v${state.bhoTable.version} (${state.bhoTable.rows.length} rows), ` +
        `LAP v${state.lapTable.version} (${state.lapTable.rows.length} rows)`,
    );
    rerender();
  }

  el<HTMLButtonElement>("reload").addEventListener("click", () => void reload());

  el<HTMLButtonElement>("save").addEventListener("click", async () => {
    const prop = el<HTMLSelectElement>("property").value as "LAP" | "BHO";
    const model = prop === "BHO" ? state.bho : state.lap;
    const table = prop === "BHO" ? state.bhoTable : state.lapTable;
    if (!table) return;
    const result = await client.saveAxioms(
      prop,
      model.toRows(),
      table.version,
      table.training_size,
    );
    if (result.conflict) {
      setStatus("save conflict: someone edited this table; reload to continue", true);
    } else if (!result.ok) {
      state.offending = new Set(result.violations.map(([code]) => code));
      setStatus(`save rejected: ${result.message}`, true);
      rerender();
    } else if (result.table) {
      if (prop === "BHO") state.bhoTable = result.table;
      else state.lapTable = result.table;
      setStatus(`saved ${prop} v${result.table.version}`);
    }
  });

  el<HTMLButtonElement>("run").addEventListener("click", async () => {
    setStatus("running inference...");
    try {
      const diff = await client.runAndDiff();
      renderReport(diff);
      setStatus("run finished");
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  await reload();
}
