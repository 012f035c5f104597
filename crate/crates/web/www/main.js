import init, { transform_json, envelope_json, xset_json } from "./pkg/hj_inverse_web.js";

const colors = ["#888", "#1f77b4", "#d62728", "#2ca02c"];
const $ = (id) => document.getElementById(id);

function draw(plot) {
  const canvas = $("plot");
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 50;
  ctx.clearRect(0, 0, W, H);
  // the 0/1 "pinned" indicator is shown as shading, not as a curve
  const curves = plot.series.filter((s) => s.name !== "pinned");
  const xs = plot.x;
  let lo = Infinity, hi = -Infinity;
  for (const s of curves) for (const v of s.values) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  const m = 0.08 * (hi - lo); lo -= m; hi += m;
  const X = (x) => pad + ((x - xs[0]) / (xs[xs.length - 1] - xs[0])) * (W - 2 * pad);
  const Y = (y) => H - pad - ((y - lo) / (hi - lo)) * (H - 2 * pad);

  ctx.fillStyle = "rgba(255, 200, 0, 0.2)";
  for (const [a, b] of plot.bands) ctx.fillRect(X(a), pad, X(b) - X(a), H - 2 * pad);

  ctx.strokeStyle = "#ccc"; ctx.lineWidth = 1; ctx.fillStyle = "#555"; ctx.font = "20px sans-serif";
  for (let k = 0; k <= 8; k++) {
    const x = xs[0] + (k / 8) * (xs[xs.length - 1] - xs[0]);
    ctx.beginPath(); ctx.moveTo(X(x), H - pad); ctx.lineTo(X(x), H - pad + 6); ctx.stroke();
    ctx.fillText(x.toFixed(1), X(x) - 14, H - pad + 28);
  }
  for (let k = 0; k <= 4; k++) {
    const y = lo + (k / 4) * (hi - lo);
    ctx.beginPath(); ctx.moveTo(pad, Y(y)); ctx.lineTo(W - pad, Y(y)); ctx.stroke();
    ctx.fillText(y.toFixed(2), 2, Y(y) + 6);
  }

  const legend = $("legend");
  legend.innerHTML = "";
  curves.forEach((s, i) => {
    ctx.strokeStyle = colors[i % colors.length];
    ctx.lineWidth = i === 0 ? 2 : 3;
    ctx.setLineDash(i === 0 ? [8, 6] : []);
    ctx.beginPath();
    s.values.forEach((v, k) => (k ? ctx.lineTo(X(xs[k]), Y(v)) : ctx.moveTo(X(xs[k]), Y(v))));
    ctx.stroke();
    const tag = document.createElement("span");
    tag.textContent = "■ " + s.name;
    tag.style.color = colors[i % colors.length];
    legend.appendChild(tag);
  });
  ctx.setLineDash([]);
}

function update() {
  const op = $("op").value;
  const t = parseFloat($("t").value);
  const res = parseInt($("res").value, 10);
  $("t-value").textContent = t.toFixed(2);
  $("example-label").style.display = op === "xset" ? "none" : "";
  $("dir-label").style.display = op === "transform" ? "" : "none";
  const example = $("example").value;
  try {
    let json;
    if (op === "transform") json = transform_json(example, $("backward").checked, t, res);
    else if (op === "envelope") json = envelope_json(example === "u1" ? "u3" : example, t, res);
    else json = xset_json(t, res);
    const plot = JSON.parse(json);
    draw(plot);
    $("summary").textContent = plot.summary;
    $("summary").className = "";
  } catch (e) {
    $("summary").textContent = String(e.message || e);
    $("summary").className = "error";
  }
}

await init();
for (const id of ["op", "example", "backward", "t", "res"]) $(id).addEventListener("input", update);
update();
