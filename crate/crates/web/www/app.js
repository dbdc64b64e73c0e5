// SPDX-License-Identifier: Apache-2.0
import init, { simulate_replica, diagnose_replica, instrument_source, replica_program } from "./pkg/spectra_lab_web.js";

const $ = (id) => document.getElementById(id);

function params() {
  return JSON.stringify({
    fault: $("fault").checked,
    poll_period: Number($("poll").value),
    capacity: Number($("capacity").value),
    baud: Number($("baud").value),
    seed: Number($("seed").value),
  });
}

function call(f, ...args) {
  const v = JSON.parse(f(...args));
  if (v.error) throw new Error(v.error);
  return v;
}

function drawLoad(r) {
  const c = $("load"), g = c.getContext("2d");
  const w = c.width, h = c.height, pad = 30;
  const end = r.phases.length ? r.phases[r.phases.length - 1].end / 1000 : r.seconds.length;
  const x = (s) => pad + (s / end) * (w - 2 * pad);
  const y = (l) => h - pad - l * (h - 2 * pad);
  g.clearRect(0, 0, w, h);
  r.phases.forEach((p, i) => {
    g.fillStyle = i % 2 ? "#eef3fb" : "#fafafa";
    g.fillRect(x(p.start / 1000), pad, x(p.end / 1000) - x(p.start / 1000), h - 2 * pad);
    g.fillStyle = "#666";
    g.fillText(p.name, x(p.start / 1000) + 4, pad - 6);
  });
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  g.fillStyle = "#666";
  for (const l of [0, 0.5, 1]) g.fillText(l.toFixed(1), 2, y(l) + 4);
  g.strokeStyle = "#c33";
  g.beginPath();
  r.seconds.forEach((s, i) => (i ? g.lineTo : g.moveTo).call(g, x(s + 0.5), y(r.load[i])));
  g.stroke();
}

function drawHeat(r) {
  const c = $("heat"), g = c.getContext("2d");
  const names = r.functions, left = 110;
  const rows = names.length, cols = Math.max(1, ...r.epochs.map((e) => e + 1));
  const cw = (c.width - left) / cols, rh = c.height / rows;
  g.clearRect(0, 0, c.width, c.height);
  g.fillStyle = "#333";
  names.forEach((n, i) => g.fillText(n, 2, (i + 0.7) * rh));
  r.epochs.forEach((e, k) => {
    r.counts[k].forEach((v, i) => {
      if (!v) return;
      const a = 0.25 + 0.75 * Math.min(1, v / 127);
      g.fillStyle = `rgba(30, 80, 200, ${a})`;
      g.fillRect(left + e * cw, i * rh + 1, Math.max(1, cw), rh - 2);
    });
  });
}

function simulate() {
  try {
    const r = call(simulate_replica, params());
    const s = r.summary;
    $("sim-summary").textContent =
      `TV1 mean ${(r.tv1_mean * 100).toFixed(1)}%, TV2 mean ${(r.tv2_mean * 100).toFixed(1)}%, ` +
      `delta ${r.delta_points.toFixed(2)} points; ${s.spectra_received} spectra, ` +
      `${s.epochs_extended} epochs extended, ${s.dropped_probes} probes dropped`;
    $("sim-summary").className = "";
    drawLoad(r);
    drawHeat(r);
  } catch (e) {
    $("sim-summary").textContent = e.message;
    $("sim-summary").className = "err";
  }
}

function diagnose() {
  try {
    const truth = $("truth").value.split(/[\s,]+/).filter(Boolean).join("\n");
    $("report").textContent = call(diagnose_replica, params(), $("pass").value, $("fail").value, truth).report;
    $("report").className = "";
  } catch (e) {
    $("report").textContent = e.message;
    $("report").className = "err";
  }
}

function instrument() {
  try {
    const handlers = $("handlers").value.split(/[\s,]+/).filter(Boolean).join("\n");
    const r = call(instrument_source, $("source").value, $("scope").value, handlers);
    $("instrumented").value = r.source;
    $("manifest").textContent = r.manifest;
    $("manifest").className = "";
  } catch (e) {
    $("manifest").textContent = e.message;
    $("manifest").className = "err";
  }
}

await init();
$("source").value = replica_program();
$("simulate").onclick = simulate;
$("diagnose").onclick = diagnose;
$("instrument").onclick = instrument;
simulate();
diagnose();
