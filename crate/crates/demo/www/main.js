import init, { Demo } from "./pkg/evsim_demo.js";

const $ = (id) => document.getElementById(id);
let demo = null;

function draw(canvas, rgba, width, height) {
  if (rgba.length === 0) return;
  canvas.width = width;
  canvas.height = height;
  const image = new ImageData(new Uint8ClampedArray(rgba), width, height);
  canvas.getContext("2d").putImageData(image, 0, 0);
}

function showFrame() {
  if (!demo) return;
  const k = Number($("frame").value);
  const [w, h] = [demo.width(), demo.height()];
  $("frame-label").textContent = k;
  draw($("events"), demo.event_frame(k), w, h);
  for (const view of ["noisy", "denoised", "clean"]) {
    draw($(view), demo.preview(k, view), w, h);
  }
}

function drawCurve() {
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  const taus = Demo.curve_taus();
  const f1 = demo.f1_curve();
  const pad = 32;
  const [w, h] = [canvas.width - 2 * pad, canvas.height - 2 * pad];
  const lo = Math.log10(taus[0]);
  const hi = Math.log10(taus[taus.length - 1]);
  const px = (t) => pad + (w * (Math.log10(t) - lo)) / (hi - lo);
  const py = (v) => pad + h * (1 - v);

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText("1", 8, py(1) + 4);
  ctx.fillText("0", 8, py(0) + 4);
  ctx.fillText(taus[0].toExponential(0), pad, canvas.height - 10);
  ctx.fillText(taus[taus.length - 1].toExponential(0), pad + w - 24, canvas.height - 10);
  ctx.fillText("tau", pad + w / 2, canvas.height - 10);

  ctx.strokeStyle = "#c00";
  ctx.beginPath();
  f1.forEach((v, i) => (i === 0 ? ctx.moveTo(px(taus[i]), py(v)) : ctx.lineTo(px(taus[i]), py(v))));
  ctx.stroke();
}

function generate() {
  const size = Number($("size").value);
  demo = new Demo(
    $("scene").value, size, size, Number($("frames").value), Number($("spp").value), Number($("seed").value),
  );
  $("frame").max = demo.frame_count() - 1;
  $("frame").value = 0;
  $("detect").disabled = false;
  $("status").textContent = "scene ready";
  showFrame();
}

function detect() {
  const start = performance.now();
  demo.detect($("method").value, Number($("contrast").value));
  const [p, r, f1, cd] = demo.scores();
  const ms = (performance.now() - start).toFixed(0);
  $("status").textContent =
    `${demo.event_count()} events, P ${p.toFixed(3)} R ${r.toFixed(3)} F1 ${f1.toFixed(3)} CD ${cd.toFixed(4)}, ` +
    `solve fraction ${demo.solve_fraction().toFixed(4)}, ${ms} ms`;
  showFrame();
  drawCurve();
}

function guarded(action) {
  return () => {
    try {
      action();
    } catch (e) {
      $("status").textContent = `error: ${e.message ?? e}`;
    }
  };
}

await init();
for (const name of Demo.scenes()) {
  $("scene").add(new Option(name, name, name === "moving_blob", name === "moving_blob"));
}
$("generate").addEventListener("click", guarded(generate));
$("detect").addEventListener("click", guarded(detect));
$("frame").addEventListener("input", guarded(showFrame));
