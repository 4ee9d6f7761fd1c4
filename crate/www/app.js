// Static front-end for the curveflow wasm bindings. No framework: the page
// drives a WasmRunner from requestAnimationFrame and injects the SVG frames
// it returns, with the barrier indicator shaded on an aligned canvas overlay.

const $ = (id) => document.getElementById(id);

let wasm = null;
try {
  wasm = await import("./pkg/curveflow_wasm.js");
  await wasm.default();
} catch (err) {
  $("missing-pkg").style.display = "block";
  $("run-status").textContent = `could not load ./pkg/curveflow_wasm.js — ${err}`;
  $("run-status").className = "status error";
  throw err;
}

const state = {
  runner: null,
  viewbox: null, // [min_x, min_y(SVG space), width, height]
  running: false,
  rafId: 0,
};

const HEAT_NX = 160;

// ---------------------------------------------------------------- scenario

function setRunStatus(text, cls = "") {
  const el = $("run-status");
  el.textContent = text;
  el.className = `status ${cls}`;
}

function loadRunner() {
  stopLoop();
  if (state.runner) {
    state.runner.free();
    state.runner = null;
  }
  try {
    state.runner = new wasm.WasmRunner($("config").value);
  } catch (err) {
    setRunStatus(`${err}`, "error");
    $("toggle").disabled = true;
    return;
  }
  state.viewbox = JSON.parse(state.runner.viewbox_json());
  const [, , w, h] = state.viewbox;
  $("viewport").style.aspectRatio = `${w} / ${h}`;
  const heat = $("heat");
  heat.width = 800;
  heat.height = Math.max(1, Math.round((800 * h) / w));
  $("toggle").disabled = false;
  $("toggle").textContent = "Run";
  setRunStatus(wasm.validate_config($("config").value), "ok");
  drawFrame();
}

function stopLoop() {
  state.running = false;
  cancelAnimationFrame(state.rafId);
  $("toggle").textContent = "Run";
}

function tick() {
  if (!state.running || !state.runner) return;
  let alive = true;
  try {
    alive = state.runner.step(Number($("speed").value));
  } catch (err) {
    stopLoop();
    setRunStatus(`aborted: ${err}`, "error");
    return;
  }
  drawFrame();
  if (!alive) {
    stopLoop();
    setRunStatus(`finished: ${state.runner.stop_reason()} after ${state.runner.completed_iterations()} iterations`, "ok");
    $("toggle").disabled = true;
    return;
  }
  state.rafId = requestAnimationFrame(tick);
}

function drawFrame() {
  const r = state.runner;
  if (!r) return;
  $("stage").innerHTML = r.frame_svg();
  drawHeat();
  const reason = r.stop_reason();
  $("frame-status").textContent =
    `iteration ${r.completed_iterations()}   t = ${r.time().toPrecision(6)}` +
    (reason ? `   stopped: ${reason}` : "");
  renderMetrics(JSON.parse(r.metrics_json()));
}

function drawHeat() {
  const heat = $("heat");
  const ctx = heat.getContext("2d");
  ctx.clearRect(0, 0, heat.width, heat.height);
  if (!state.runner || !$("show-heat").checked) return;
  const [, , w, h] = state.viewbox;
  const nx = HEAT_NX;
  const ny = Math.max(1, Math.round((nx * h) / w));
  const px = state.runner.heatmap(nx, ny);
  if (px.length === 0) return;
  const img = new ImageData(nx, ny);
  for (let i = 0; i < px.length; i++) {
    img.data[4 * i] = 214; // muted red wash where the indicator is high
    img.data[4 * i + 1] = 39;
    img.data[4 * i + 2] = 40;
    img.data[4 * i + 3] = Math.round(px[i] * 0.3);
  }
  const off = new OffscreenCanvas(nx, ny);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = true;
  ctx.drawImage(off, 0, 0, heat.width, heat.height);
}

function renderMetrics(rows) {
  const cols = ["vesicle", "step", "length", "W", "H_B", "D", "J", "lambda", "newton_iters"];
  const fmt = (c, v) =>
    c === "vesicle" || c === "step" || c === "newton_iters"
      ? String(v)
      : Number(v).toPrecision(6);
  let html = "<table><tr>" + cols.map((c) => `<th>${c}</th>`).join("") + "</tr>";
  for (const row of rows) {
    html += "<tr>" + cols.map((c) => `<td>${fmt(c, row[c])}</td>`).join("") + "</tr>";
  }
  $("metrics").innerHTML = html + "</table>";
}

// ---------------------------------------------------------------- controls

const presetSelect = $("preset");
for (const name of JSON.parse(wasm.preset_names())) {
  const opt = document.createElement("option");
  opt.value = name;
  opt.textContent = name;
  presetSelect.appendChild(opt);
}
presetSelect.addEventListener("change", () => {
  $("config").value = wasm.preset_config(presetSelect.value);
  loadRunner();
});

$("validate").addEventListener("click", () => {
  const report = wasm.validate_config($("config").value);
  setRunStatus(report, report.startsWith("OK") ? "ok" : "error");
});

$("reset").addEventListener("click", loadRunner);

$("toggle").addEventListener("click", () => {
  if (state.running) {
    stopLoop();
  } else if (state.runner) {
    state.running = true;
    $("toggle").textContent = "Pause";
    state.rafId = requestAnimationFrame(tick);
  }
});

$("speed").addEventListener("input", () => {
  $("speed-label").textContent = $("speed").value;
});

$("show-heat").addEventListener("change", drawHeat);

// ---------------------------------------------------------- shape playground

function refreshShape() {
  $("shape-n-label").textContent = $("shape-n").value;
  try {
    const svg = wasm.shape_preview_svg($("shape").value, Number($("shape-n").value));
    $("shape-preview").innerHTML = svg;
    $("shape-status").textContent = "";
    $("shape-status").className = "status";
  } catch (err) {
    $("shape-status").textContent = `${err}`;
    $("shape-status").className = "status error";
  }
}
let shapeTimer = 0;
const shapeSoon = () => {
  clearTimeout(shapeTimer);
  shapeTimer = setTimeout(refreshShape, 150);
};
$("shape").addEventListener("input", shapeSoon);
$("shape-n").addEventListener("input", shapeSoon);
refreshShape();

// ------------------------------------------------------------------- boot

presetSelect.value = "example4-barriers";
$("config").value = wasm.preset_config(presetSelect.value);
loadRunner();
