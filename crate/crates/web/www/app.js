import init, { jointGrid, marginalCurves, simulateAndFit } from "./pkg/brbs_web.js";

const $ = (id) => document.getElementById(id);
const GRID = 120;

function params() {
  return ["mu1", "mu2", "d1", "d2", "rho"].map((k) => parseFloat($(k).value));
}

// upper plotting limit: mean plus three standard deviations
function upper(mu, delta) {
  const sd = (mu * Math.sqrt(2 * delta + 5)) / (delta + 1);
  return mu + 3 * sd;
}

function color(v) {
  // dark blue -> teal -> yellow
  const stops = [[13, 8, 135], [33, 145, 140], [253, 231, 37]];
  const x = Math.min(Math.max(v, 0), 1) * 2;
  const i = Math.min(Math.floor(x), 1);
  const f = x - i;
  return stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
}

function drawJoint() {
  const [mu1, mu2, d1, d2, rho] = params();
  const what = document.querySelector("input[name=surf]:checked").value;
  const hi1 = upper(mu1, d1), hi2 = upper(mu2, d2);
  const lo1 = hi1 / GRID, lo2 = hi2 / GRID;
  const v = jointGrid(mu1, mu2, d1, d2, rho, what, lo1, hi1, lo2, hi2, GRID);
  // hazard grows without bound in the upper tail, so clip at a high percentile
  const sorted = Float64Array.from(v).sort();
  const top = sorted[Math.floor(0.98 * (sorted.length - 1))] || 1;
  const cv = $("joint"), ctx = cv.getContext("2d");
  const img = ctx.createImageData(GRID, GRID);
  for (let i = 0; i < GRID; i++) {
    for (let j = 0; j < GRID; j++) {
      // row i is t2 increasing; flip so t2 points up
      const [r, g, b] = color(v[i * GRID + j] / top);
      const p = 4 * ((GRID - 1 - i) * GRID + j);
      img.data.set([r, g, b, 255], p);
    }
  }
  const off = new OffscreenCanvas(GRID, GRID);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = true;
  ctx.drawImage(off, 0, 0, cv.width, cv.height);
  $("jinfo").textContent =
    `t₁ ∈ [${lo1.toFixed(3)}, ${hi1.toFixed(3)}] (horizontal), t₂ ∈ [${lo2.toFixed(3)}, ${hi2.toFixed(3)}] (vertical), colour scale top ${top.toPrecision(4)}`;
}

function line(ctx, xs, ys, w, h, stroke) {
  const max = Math.max(...ys.filter(Number.isFinite)) || 1;
  ctx.strokeStyle = stroke;
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((_, i) => {
    const x = (i / (xs.length - 1)) * (w - 20) + 10;
    const y = h - 10 - (ys[i] / max) * (h - 20);
    i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  });
  ctx.stroke();
}

function drawMarginal() {
  const [mu1, mu2, d1, d2] = params();
  const second = document.querySelector("input[name=marg]:checked").value === "2";
  const [mu, d] = second ? [mu2, d2] : [mu1, d1];
  const hi = upper(mu, d);
  const c = JSON.parse(marginalCurves(mu, d, hi / 400, hi, 400));
  const cv = $("marg"), ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  ctx.fillStyle = "#555";
  ctx.fillText(`t from ${c.t[0].toPrecision(3)} to ${hi.toPrecision(4)}`, 12, 14);
  line(ctx, c.t, c.pdf, cv.width, cv.height, "#1f77b4");
  line(ctx, c.t, c.hazard, cv.width, cv.height, "#d62728");
}

function redraw() {
  $("perr").textContent = "";
  try {
    drawJoint();
    drawMarginal();
  } catch (e) {
    $("perr").textContent = e.message ?? String(e);
  }
}

function fmt(x) {
  return x == null ? "–" : Number(x).toPrecision(5);
}

function simulate() {
  $("serr").textContent = "";
  const [mu1, mu2, d1, d2, rho] = params();
  let r;
  try {
    r = JSON.parse(simulateAndFit(mu1, mu2, d1, d2, rho, parseInt($("n").value, 10), parseInt($("seed").value, 10) >>> 0));
  } catch (e) {
    $("serr").textContent = e.message ?? String(e);
    return;
  }
  const cv = $("scatter"), ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const xs = r.sample.map((p) => p[0]), ys = r.sample.map((p) => p[1]);
  const mx = Math.max(...xs), my = Math.max(...ys);
  ctx.fillStyle = "rgba(31,119,180,0.6)";
  for (const [x, y] of r.sample) {
    ctx.fillRect(10 + (x / mx) * (cv.width - 20) - 1.5, cv.height - 10 - (y / my) * (cv.height - 20) - 1.5, 3, 3);
  }
  const keys = ["mu1", "mu2", "delta1", "delta2", "rho"];
  const names = ["μ₁", "μ₂", "δ₁", "δ₂", "ρ"];
  let html = "<table><tr><th></th><th>true</th><th>ML</th><th>SE</th><th>MM</th><th>SE</th></tr>";
  keys.forEach((k, i) => {
    html += `<tr><th>${names[i]}</th><td>${fmt(r.truth[k])}</td><td>${fmt(r.ml.estimates[k])}</td>` +
      `<td>${fmt(r.ml.std_errors[k])}</td><td>${fmt(r.mm.estimates[k])}</td><td>${fmt(r.mm.std_errors[k])}</td></tr>`;
  });
  html += `</table><p>log-likelihood: ML ${fmt(r.ml.loglik)}, MM ${fmt(r.mm.loglik)}<br>` +
    `KS test of transformed Mahalanobis distances at the ML fit: D = ${fmt(r.ks_statistic)}, p = ${fmt(r.ks_pvalue)}</p>`;
  $("fit").innerHTML = html;
}

await init();
for (const id of ["mu1", "mu2", "d1", "d2", "rho"]) $(id).addEventListener("change", redraw);
document.querySelectorAll("input[name=surf], input[name=marg]").forEach((el) => el.addEventListener("change", redraw));
$("go").addEventListener("click", simulate);
redraw();
simulate();
