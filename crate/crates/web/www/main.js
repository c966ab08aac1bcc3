import init, { FusionScene, sigma_trace, opening_view } from "./pkg/fg_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function paint(canvas, rgba) {
  const ctx = canvas.getContext("2d");
  ctx.putImageData(new ImageData(new Uint8ClampedArray(rgba), 256, 256), 0, 0);
}

let scene = null;

function buildScene() {
  if (scene) scene.free();
  scene = new FusionScene(num("seed"), num("count"), num("speckle"));
  const thumbs = $("thumbs");
  thumbs.replaceChildren();
  scene.ratios().forEach((r, i) => {
    const c = document.createElement("canvas");
    c.width = c.height = 256;
    c.title = `prediction ${i}: ratio ${(r * 100).toFixed(1)}%`;
    paint(c, scene.prediction_image(i));
    thumbs.append(c);
  });
  fuse();
}

function fuse() {
  const ok = scene.fuse(num("k1"), num("k2"), num("threshold"), num("element"));
  const report = JSON.parse(scene.report());
  if (!ok) {
    $("scores").textContent = report.error;
    return;
  }
  [...$("thumbs").children].forEach((c, i) => {
    c.className = report.stage1.removed.includes(i) ? "removed" : report.stage2.removed.includes(i) ? "late" : "";
  });
  paint($("fused"), scene.fused_image());
  const [acc, f1, iou] = scene.scores();
  const kept = report.candidates - report.stage1.removed.length;
  $("scores").textContent =
    `trace      ${report.candidates} -> ${kept} -> ${report.retained}\n` +
    `stage 1    mean ${report.stage1.mean.toFixed(4)}  std ${report.stage1.std.toFixed(4)}\n` +
    `stage 2    mean ${report.stage2.mean.toFixed(4)}  std ${report.stage2.std.toFixed(4)}\n` +
    `accuracy   ${acc.toFixed(4)}\nf1         ${f1.toFixed(4)}\niou        ${iou.toFixed(4)}`;
}

function trace() {
  const ratios = new Float64Array($("ratios").value.split(",").map(Number).filter((v) => !Number.isNaN(v)));
  const out = JSON.parse(sigma_trace(ratios, num("k1"), num("k2"), $("sample").checked));
  $("trace").textContent = out.error ?? [
    `stage 1  mean ${out.stage1.mean.toFixed(4)}  std ${out.stage1.std.toFixed(4)}  removed [${out.stage1.removed}]`,
    `stage 2  mean ${out.stage2.mean.toFixed(4)}  std ${out.stage2.std.toFixed(4)}  removed [${out.stage2.removed}]`,
    `kept     ${out.retained.length} of ${ratios.length}: [${out.retained}]`,
  ].join("\n");
}

function opening() {
  paint($("opening"), opening_view(num("oseed"), num("density"), num("osize")));
}

await init();
$("regen").onclick = buildScene;
for (const id of ["k1", "k2", "threshold", "element"]) $(id).oninput = () => { fuse(); trace(); };
for (const id of ["ratios", "sample"]) $(id).oninput = trace;
for (const id of ["oseed", "density", "osize"]) $(id).oninput = opening;
buildScene();
trace();
opening();
