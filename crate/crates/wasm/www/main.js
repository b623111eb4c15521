import init, { analyze, hwp_sweep, explore } from "./pkg/hyperbsa_wasm.js";

const $ = (id) => document.getElementById(id);

function call(f, ...args) {
  const v = JSON.parse(f(...args));
  if (v.error) throw new Error(v.error);
  return v;
}

function drawGrid() {
  const v = call(analyze, $("label").value, $("impl").value);
  $("success").textContent = `success probability: ${v.success_probability.toFixed(12)}`;
  const head = "<tr><th></th>" + v.cols.map((c) => `<th>${c}</th>`).join("") + "</tr>";
  const body = v.rows
    .map((r, i) => {
      const cells = v.probabilities[i]
        .map((p, j) => {
          if (p < 1e-12) return "<td></td>";
          const cls = v.labels[i][j] === v.input ? "hit" : "wrong";
          return `<td class="${cls}" title="${v.labels[i][j]}">${p.toFixed(4)}</td>`;
        })
        .join("");
      return `<tr><th>${r}</th>${cells}</tr>`;
    })
    .join("");
  $("grid").innerHTML = `<table class="grid">${head}${body}</table>`;
}

let sweep = null;

function drawSweep() {
  const canvas = $("sweep");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  const x = (theta) => pad + ((w - 2 * pad) * theta) / (Math.PI / 2);
  const y = (p) => h - pad - (h - 2 * pad) * p;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText("1", 10, y(1) + 4);
  ctx.fillText("0", 10, y(0) + 4);
  ctx.fillText("0°", pad - 4, h - 10);
  ctx.fillText("90°", w - pad - 12, h - 10);
  ctx.strokeStyle = "#2a6fb0";
  ctx.beginPath();
  sweep.points.forEach((pt, i) => {
    const px = x(pt.theta);
    const py = y(pt.success);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  const theta = (Number($("theta").value) * Math.PI) / 180;
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ctx.moveTo(x(theta), pad);
  ctx.lineTo(x(theta), h - pad);
  ctx.stroke();
}

function updateTheta() {
  const deg = Number($("theta").value);
  $("theta-value").textContent = deg.toFixed(1);
  const nearest = sweep.points.reduce((a, b) =>
    Math.abs(b.theta - (deg * Math.PI) / 180) < Math.abs(a.theta - (deg * Math.PI) / 180) ? b : a,
  );
  $("theta-success").textContent = `success probability ≈ ${nearest.success.toFixed(6)}`;
  drawSweep();
}

function runExplorer() {
  try {
    const v = call(explore, $("element").value, Number($("angle").value), $("pol").value, Number($("oam").value));
    $("explore").textContent = v.output
      .map((t) => {
        const sign = t.im < 0 ? "-" : "+";
        return `|${t.pol}, ${t.oam >= 0 ? "+" : ""}${t.oam}⟩  ${t.re.toFixed(4)} ${sign} ${Math.abs(t.im).toFixed(4)}i   p = ${t.probability.toFixed(4)}`;
      })
      .join("\n");
  } catch (e) {
    $("explore").textContent = e.message;
  }
}

async function main() {
  await init();
  $("status").textContent = "";
  sweep = call(hwp_sweep, 180);
  for (const id of ["label", "impl"]) $(id).addEventListener("change", drawGrid);
  $("theta").addEventListener("input", updateTheta);
  for (const id of ["element", "angle", "pol", "oam"]) $(id).addEventListener("input", runExplorer);
  drawGrid();
  updateTheta();
  runExplorer();
}

main().catch((e) => {
  $("status").textContent = `failed to start: ${e.message}`;
});
