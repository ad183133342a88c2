import init, { map_graph, equivariant_density, markov_table } from "./pkg/tentcocycle_wasm_demo.js";

const $ = (id) => document.getElementById(id);

function frame(ctx, x0, w, h, ylo, yhi) {
  const sx = (x) => x0 + ((x + 1) / 2) * w;
  const sy = (y) => h - 10 - ((y - ylo) / (yhi - ylo)) * (h - 20);
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(x0, 10, w, h - 20);
  ctx.beginPath();
  ctx.moveTo(sx(0), 10);
  ctx.lineTo(sx(0), h - 10);
  ctx.moveTo(x0, sy(0));
  ctx.lineTo(x0 + w, sy(0));
  ctx.stroke();
  return [sx, sy];
}

function drawBranches(ctx, pts, sx, sy, colour) {
  ctx.strokeStyle = colour;
  ctx.lineWidth = 1.5;
  for (let i = 0; i + 1 < pts.length; i += 2) {
    ctx.beginPath();
    ctx.moveTo(sx(pts[i][0]), sy(pts[i][1]));
    ctx.lineTo(sx(pts[i + 1][0]), sy(pts[i + 1][1]));
    ctx.stroke();
  }
}

function drawStep(canvas, b, v, colour) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const top = Math.max(...v) * 1.1 || 1;
  const [sx, sy] = frame(ctx, 10, canvas.width - 20, canvas.height, 0, top);
  ctx.strokeStyle = colour;
  ctx.beginPath();
  for (let i = 0; i < v.length; i++) {
    ctx.moveTo(sx(b[i]), sy(v[i]));
    ctx.lineTo(sx(b[i + 1]), sy(v[i]));
  }
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.fillText(`max ${Math.max(...v).toPrecision(4)}`, 16, 22);
}

const eps = [0.5, 0.25, 1.0, 0.0];

function sliders() {
  const host = $("sliders");
  ["ε1", "ε2", "ε1'", "ε2'"].forEach((name, i) => {
    const label = document.createElement("label");
    label.textContent = `${name} `;
    const input = document.createElement("input");
    Object.assign(input, { type: "range", min: 0, max: 1, step: 0.01, value: eps[i] });
    const out = document.createElement("span");
    out.textContent = eps[i].toFixed(2);
    input.addEventListener("input", () => {
      eps[i] = Number(input.value);
      out.textContent = eps[i].toFixed(2);
      drawMaps();
    });
    label.append(input, " ", out);
    host.append(label);
  });
}

function drawMaps() {
  const canvas = $("maps");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  try {
    const g = JSON.parse(map_graph(...eps));
    const w = canvas.width / 3 - 20;
    [["first", "#1565c0"], ["second", "#2e7d32"], ["composite", "#c62828"]].forEach(([key, colour], k) => {
      const [sx, sy] = frame(ctx, 10 + k * (w + 20), w, canvas.height, -1, 1);
      drawBranches(ctx, g[key], sx, sy, colour);
    });
    $("maps-info").textContent = `first map, second map, and their composite (${g.branches} branches)`;
  } catch (e) {
    $("maps-info").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function runDensity() {
  try {
    const d = JSON.parse(equivariant_density($("driving").value, Number($("omega").value), Number($("depth").value)));
    drawStep($("density"), d.breakpoints, d.values, "#6a1b9a");
    const c = d.bound ? `, C = ${d.bound.C.toExponential(3)} (k_P = ${d.bound.k_P})` : ", no explicit bound";
    $("density-info").textContent =
      `φ = ${d.phi.toFixed(6)}, residual ${d.residual.toExponential(2)}, last increment ${d.cauchy_increment.toExponential(2)}${c}`;
  } catch (e) {
    $("density-info").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function runMarkov() {
  const table = $("markov");
  try {
    const rows = JSON.parse(markov_table(Number($("n-from").value), Number($("n-to").value)));
    table.innerHTML = "<tr><th>n</th><th>κₙ</th><th>rₙ</th><th>λ₂</th><th>λ₂/(−2κₙ)</th><th>char. poly</th></tr>";
    for (const r of rows) {
      const tr = document.createElement("tr");
      tr.className = "pick";
      tr.innerHTML = `<td>${r.n}</td><td>${r.kappa.toExponential(5)}</td><td>${r.r_n.toExponential(5)}</td>` +
        `<td>${r.lambda2.toExponential(5)}</td><td>${r.ratio.toFixed(5)}</td><td>${r.charpoly_ok ? "✓" : "✗"}</td>`;
      tr.addEventListener("click", () => drawStep($("markov-density"), r.density.breakpoints, r.density.values, "#ef6c00"));
      table.append(tr);
    }
    if (rows.length) drawStep($("markov-density"), rows[0].density.breakpoints, rows[0].density.values, "#ef6c00");
  } catch (e) {
    table.innerHTML = `<tr><td class="err">${e.message ?? e}</td></tr>`;
  }
}

await init();
sliders();
drawMaps();
$("run-density").addEventListener("click", runDensity);
$("run-markov").addEventListener("click", runMarkov);
runDensity();
runMarkov();
