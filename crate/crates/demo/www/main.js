// Built by: wasm-pack build crates/demo --target web --out-dir www/pkg
import init, { Demo } from "./pkg/genre_nb_demo.js";

const $ = (id) => document.getElementById(id);
let demo = null;

function status(msg, isError = false) {
  $("status").textContent = msg;
  $("status").className = isError ? "error" : "";
}

function guarded(fn) {
  return async () => {
    try {
      await fn();
    } catch (e) {
      status(String(e.message ?? e), true);
    }
  };
}

function setDemo(d, label) {
  demo = d;
  const s = JSON.parse(d.summary());
  $("summary").textContent =
    `${label}: ${s.users} users, ${s.movies} movies (${s.labeled_movies} labeled), ` +
    `${s.ratings} ratings\ngenres: ${s.genres.join(", ")}`;
  $("p-movie").max = s.movies;
  status("ready");
}

function need() {
  if (!demo) throw new Error("load a dataset first");
  return demo;
}

const num = (id) => Number($(id).value);
const model = () => [$("prior").value, $("smoothing").value, num("threshold")];

// blue for negative, red for positive, grey for undefined
function colour(v) {
  if (v === null) return "#ccc";
  const t = Math.min(1, Math.abs(v));
  const fade = Math.round(255 * (1 - t));
  return v >= 0 ? `rgb(255,${fade},${fade})` : `rgb(${fade},${fade},255)`;
}

function drawHeatmap(h) {
  const c = $("heatmap");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const n = h.genres.length;
  const left = 110, top = 20;
  const cell = Math.floor(Math.min(c.width - left - 10, c.height - top - 100) / n);
  ctx.font = "11px sans-serif";
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      ctx.fillStyle = colour(h.values[i][j]);
      ctx.fillRect(left + j * cell, top + i * cell, cell - 1, cell - 1);
    }
    ctx.fillStyle = "#222";
    ctx.textAlign = "right";
    ctx.fillText(h.genres[i], left - 4, top + i * cell + cell * 0.65);
    ctx.save();
    ctx.translate(left + i * cell + cell * 0.6, top + n * cell + 4);
    ctx.rotate(Math.PI / 3);
    ctx.textAlign = "left";
    ctx.fillText(h.genres[i], 0, 0);
    ctx.restore();
  }
  c.onmousemove = (ev) => {
    const r = c.getBoundingClientRect();
    const j = Math.floor((ev.clientX - r.left - left) / cell);
    const i = Math.floor((ev.clientY - r.top - top) / cell);
    if (i >= 0 && j >= 0 && i < n && j < n) {
      const v = h.values[i][j];
      c.title = `${h.genres[i]} / ${h.genres[j]}: ${v === null ? "undefined" : v.toFixed(3)}`;
    }
  };
}

function drawBars(p) {
  const c = $("bars");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const n = p.genres.length;
  const left = 40, bottom = 80, top = 10;
  const w = (c.width - left - 10) / n;
  const h = c.height - top - bottom;
  ctx.font = "11px sans-serif";
  ctx.strokeStyle = "#ddd";
  for (let k = 0; k <= 4; k++) {
    const y = top + h * (1 - k / 4);
    ctx.beginPath(); ctx.moveTo(left, y); ctx.lineTo(c.width - 10, y); ctx.stroke();
    ctx.fillStyle = "#555";
    ctx.textAlign = "right";
    ctx.fillText((k / 4).toFixed(2), left - 4, y + 4);
  }
  p.genres.forEach((g, i) => {
    const v = p.probabilities[i];
    ctx.fillStyle = p.true_genres.includes(g) ? "#2a9d3f" : g === p.predicted ? "#d62728" : "#1f77b4";
    ctx.fillRect(left + i * w + 2, top + h * (1 - v), w - 4, h * v);
    ctx.save();
    ctx.translate(left + i * w + w / 2, top + h + 6);
    ctx.rotate(Math.PI / 3);
    ctx.fillStyle = "#222";
    ctx.textAlign = "left";
    ctx.fillText(g, 0, 0);
    ctx.restore();
  });
}

function drawCurve(cv) {
  const c = $("curve-canvas");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const left = 50, right = 20, top = 20, bottom = 40;
  const xmax = Math.max(...cv.fractions);
  const px = (f) => left + (f / xmax) * (c.width - left - right);
  const py = (a) => top + (1 - a) * (c.height - top - bottom);
  ctx.font = "11px sans-serif";
  ctx.strokeStyle = "#ddd";
  for (let k = 0; k <= 10; k++) {
    ctx.beginPath(); ctx.moveTo(left, py(k / 10)); ctx.lineTo(c.width - right, py(k / 10)); ctx.stroke();
    ctx.fillStyle = "#555";
    ctx.textAlign = "right";
    ctx.fillText(`${k * 10}%`, left - 4, py(k / 10) + 4);
  }
  ctx.textAlign = "center";
  cv.fractions.forEach((f) => ctx.fillText(String(f), px(f), c.height - bottom + 14));
  ctx.fillText("training fraction", (left + c.width - right) / 2, c.height - 6);
  const series = [
    ["exact", "#1f77b4", cv.exact_mean, cv.exact_std],
    ["with similar", "#d62728", cv.similar_mean, cv.similar_std],
  ];
  series.forEach(([label, col, mean, std], k) => {
    ctx.strokeStyle = col;
    ctx.fillStyle = col;
    ctx.lineWidth = 2;
    ctx.beginPath();
    cv.fractions.forEach((f, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, px(f), py(mean[i])));
    ctx.stroke();
    ctx.lineWidth = 1;
    cv.fractions.forEach((f, i) => {
      ctx.beginPath();
      ctx.moveTo(px(f), py(Math.max(0, mean[i] - std[i])));
      ctx.lineTo(px(f), py(Math.min(1, mean[i] + std[i])));
      ctx.stroke();
    });
    ctx.fillRect(c.width - right - 120, top + 14 * k + 4, 12, 3);
    ctx.textAlign = "left";
    ctx.fillText(label, c.width - right - 104, top + 14 * k + 9);
  });
}

const readText = (file) => file.text();
const readBytes = async (file) => new Uint8Array(await file.arrayBuffer());

$("synth").onclick = guarded(async () => {
  setDemo(Demo.synthetic(num("synth-seed")), "synthetic");
});

$("ds-file").onchange = guarded(async () => {
  const f = $("ds-file").files[0];
  if (f) setDemo(Demo.fromDatasetFile(await readText(f)), f.name);
});

$("ml").onclick = guarded(async () => {
  const d = $("udata").files[0], i = $("uitem").files[0];
  if (!d || !i) throw new Error("choose both u.data and u.item");
  status("parsing...");
  setDemo(Demo.fromMovieLens(await readBytes(d), await readBytes(i)), "MovieLens");
});

$("corr").onclick = guarded(async () => {
  drawHeatmap(JSON.parse(need().correlation($("estimator").value)));
});

$("post").onclick = guarded(async () => {
  const [prior, smoothing, threshold] = model();
  const fraction = $("p-mode").value === "split" ? num("p-fraction") : undefined;
  const p = JSON.parse(
    need().posterior(num("p-rating"), num("p-movie"), fraction, num("seed"), prior, smoothing, threshold),
  );
  $("p-info").textContent =
    `movie ${p.movie} ${p.title}\ntrue: ${p.true_genres.join(", ") || "none"}   ` +
    `predicted: ${p.predicted} (${p.verdict})   rated by ${p.rated_by} users   ` +
    `trained on ${p.training_movies} movies`;
  drawBars(p);
});

$("curve").onclick = guarded(async () => {
  const [prior, smoothing, threshold] = model();
  const fractions = new Float64Array($("c-fractions").value.split(",").map(Number));
  status("running...");
  const cv = JSON.parse(
    need().learningCurve(num("c-rating"), fractions, num("c-reps"), num("seed"), prior, smoothing, threshold),
  );
  drawCurve(cv);
  status("ready");
});

await init();
setDemo(Demo.synthetic(1), "synthetic");
