import init, { blur_curve, max_exposure_us, flow_demo, ransac_demo } from "./pkg/planar_eof_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function bind(ids, draw) {
  for (const id of ids) {
    const show = () => { $(id + "-v").textContent = $(id).value; };
    show();
    $(id).addEventListener("input", () => { show(); draw(); });
  }
}

function drawBlur() {
  const budget = num("budget") / 100, z = num("z"), fov = num("fov");
  const vmax = 50, pts = blur_curve(budget, z, fov, vmax, 200);
  const c = $("blur"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const left = 50, bottom = c.height - 30;
  let emax = 0;
  for (let i = 1; i < pts.length; i += 2) if (pts[i] < 20000) emax = Math.max(emax, pts[i]);
  const ymax = Math.min(emax, 5000);
  g.strokeStyle = "#000";
  g.strokeRect(left, 10, c.width - left - 10, bottom - 10);
  g.fillText("speed [m/s] 0 .. " + vmax, c.width / 2 - 40, c.height - 10);
  g.fillText(ymax.toFixed(0) + " us", 2, 18);
  g.beginPath();
  g.strokeStyle = "#1f77b4";
  for (let i = 0; i < pts.length; i += 2) {
    const x = left + (pts[i] / vmax) * (c.width - left - 10);
    const y = bottom - Math.min(pts[i + 1] / ymax, 1) * (bottom - 10);
    i === 0 ? g.moveTo(x, y) : g.lineTo(x, y);
  }
  g.stroke();
  const rows = [5, 10, 20, 40].map((v) => `${String(v).padStart(3)} m/s  ${max_exposure_us(v, budget, z, fov).toFixed(1)} us`);
  $("blur-out").textContent = rows.join("\n");
}

function drawFlow() {
  const d = flow_demo(num("dx"), num("dy"), num("yaw"), num("seed") | 0);
  const w = d.width, h = d.height, scale = 6;
  const c = $("flow"), g = c.getContext("2d");
  const img = g.createImageData(w, h), gray = d.gray();
  for (let i = 0; i < w * h; i++) {
    img.data.set([gray[i], gray[i], gray[i], 255], 4 * i);
  }
  const tmp = new OffscreenCanvas(w, h);
  tmp.getContext("2d").putImageData(img, 0, 0);
  g.imageSmoothingEnabled = false;
  g.drawImage(tmp, 0, 0, w * scale, h * scale);
  const a = d.arrows();
  g.strokeStyle = "#ff3030";
  g.lineWidth = 1.5;
  for (let i = 0; i < a.length; i += 4) {
    const x = a[i] * scale, y = a[i + 1] * scale;
    g.beginPath();
    g.moveTo(x, y);
    g.lineTo(x + a[i + 2] * scale, y + a[i + 3] * scale);
    g.stroke();
    g.fillStyle = "#ff3030";
    g.fillRect(x - 1.5, y - 1.5, 3, 3);
  }
  $("flow-out").textContent =
    `mean flow      (${d.mean_u.toFixed(2)}, ${d.mean_v.toFixed(2)}) px, ${(100 * d.valid_fraction).toFixed(1)} % valid\n` +
    `recovered      forward ${d.est_dx.toFixed(2)} mm, sideways ${d.est_dy.toFixed(2)} mm, yaw ${d.est_yaw_deg.toFixed(2)} deg\n` +
    `commanded      forward ${num("dx").toFixed(2)} mm, sideways ${num("dy").toFixed(2)} mm, yaw ${num("yaw").toFixed(2)} deg`;
  d.free();
}

let ransacSeed = 1;
function drawRansac() {
  const tx = 6, ty = -4;
  const d = ransac_demo(150, num("frac") / 100, num("rot"), tx, ty, num("noise"), ransacSeed);
  const c = $("ransac"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const s = c.width / 260, o = c.width / 2;
  const p = d.points();
  for (let i = 0; i < p.length; i += 5) {
    g.strokeStyle = p[i + 4] ? "#d62728" : "#888";
    g.beginPath();
    g.moveTo(o + p[i] * s, o + p[i + 1] * s);
    g.lineTo(o + p[i + 2] * s, o + p[i + 3] * s);
    g.stroke();
  }
  const fmt = (m) => `rot ${m[0].toFixed(3)} deg, shift (${m[1].toFixed(2)}, ${m[2].toFixed(2)}) px`;
  $("ransac-out").textContent =
    `truth          rot ${num("rot").toFixed(3)} deg, shift (${tx.toFixed(2)}, ${ty.toFixed(2)}) px\n` +
    `least squares  ${fmt(d.plain())}\n` +
    `consensus      ${fmt(d.robust())}, ${d.n_inliers} inliers`;
  d.free();
}

await init();
bind(["budget", "z", "fov"], drawBlur);
bind(["dx", "dy", "yaw", "seed"], drawFlow);
bind(["frac", "rot", "noise"], drawRansac);
$("reseed").addEventListener("click", () => { ransacSeed += 1; drawRansac(); });
drawBlur();
drawFlow();
drawRansac();
