import init, { nullZigzag, slimTable, bigbangLevels } from "./pkg/nullcone_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const list = (id) => new Float64Array($(id).value.split(",").map((s) => parseFloat(s)));

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

// Maps data ranges onto a canvas with a margin.
function frame(canvas, xs, ys) {
  const m = 30;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (canvas.width - 2 * m) / (x1 - x0 || 1);
  const sy = (canvas.height - 2 * m) / (y1 - y0 || 1);
  return {
    x: (v) => m + (v - x0) * sx,
    y: (v) => canvas.height - m - (v - y0) * sy,
  };
}

function drawZigzag(z) {
  const c = $("z-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const pts = z.samples.flat();
  const f = frame(c, pts.map((p) => p[1]), pts.map((p) => p[0]));
  g.strokeStyle = "#999";
  g.fillStyle = "#555";
  g.fillText("x →", c.width - 40, c.height - 8);
  g.fillText("t ↑", 6, 14);
  g.lineWidth = 2;
  g.strokeStyle = "#1565c0";
  for (const seg of z.samples) {
    g.beginPath();
    seg.forEach(([t, x], i) => (i ? g.lineTo(f.x(x), f.y(t)) : g.moveTo(f.x(x), f.y(t))));
    g.stroke();
  }
  g.fillStyle = "#c62828";
  for (const [t, x] of z.breakpoints) {
    g.beginPath();
    g.arc(f.x(x), f.y(t), 4, 0, 2 * Math.PI);
    g.fill();
  }
}

function runZigzag() {
  try {
    const z = JSON.parse(
      nullZigzag($("z-scale").value, num("z-side"), num("z-pt"), num("z-px"), num("z-qt"), num("z-qx"),
        num("z-n"), BigInt(Math.max(0, Math.floor(num("z-seed")))))
    );
    show("z-out", `upper ${z.upper.toFixed(6)}   lower |Δτ| ${z.lower.toFixed(6)}   breakpoints ${z.breakpoints.length}`);
    drawZigzag(z);
  } catch (e) {
    show("z-out", String(e.message || e), true);
  }
}

function runSlim() {
  try {
    const t = JSON.parse(slimTable(list("s-eps"), list("s-s")));
    const head = "<tr><th>ε</th><th>s</th><th>t*/s</th><th>L̂/s</th><th>valid</th></tr>";
    const body = t.rows
      .map((r) => `<tr><td>${r.epsilon}</td><td>${r.s}</td><td>${r.t_star_over_s.toFixed(6)}</td>` +
        `<td>${r.ratio.toFixed(6)}</td><td>${r.valid}</td></tr>`)
      .join("");
    $("s-table").innerHTML = `<table>${head}${body}</table>`;
    const lims = t.limits
      .map((l) => `ε ${l.epsilon}: limit ${l.extrapolated.toFixed(6)} (expected ${l.expected.toFixed(6)})`)
      .join("\n");
    show("s-out", `${lims}\ndiagonal ${t.diagonal.toFixed(6)} (expected ${t.constant})`);
  } catch (e) {
    show("s-out", String(e.message || e), true);
  }
}

function runBigbang() {
  try {
    const r = JSON.parse(bigbangLevels($("b-scale").value, list("b-t"), num("b-n"), 7n));
    show("b-out", `hypothesis ${r.hypothesis}; pass ${r.pass}\n` +
      r.levels.map((l) => `t ${l.t}: diam ${l.diam_ht.toFixed(5)}, max pair ${l.max_pair_nulldist.toFixed(5)}`).join("\n"));
    const c = $("b-canvas");
    const g = c.getContext("2d");
    g.clearRect(0, 0, c.width, c.height);
    const ts = r.levels.map((l) => l.t);
    const vals = r.levels.flatMap((l) => [l.diam_ht, l.max_pair_nulldist, 0]);
    const f = frame(c, [0, ...ts], vals);
    const series = [["diam_ht", "#1565c0"], ["max_pair_nulldist", "#c62828"]];
    for (const [key, color] of series) {
      g.strokeStyle = color;
      g.fillStyle = color;
      g.beginPath();
      r.levels.forEach((l, i) => (i ? g.lineTo(f.x(l.t), f.y(l[key])) : g.moveTo(f.x(l.t), f.y(l[key]))));
      g.stroke();
      g.fillText(key, c.width - 140, key === "diam_ht" ? 20 : 36);
    }
  } catch (e) {
    show("b-out", String(e.message || e), true);
  }
}

await init();
$("z-run").onclick = runZigzag;
$("s-run").onclick = runSlim;
$("b-run").onclick = runBigbang;
runZigzag();
