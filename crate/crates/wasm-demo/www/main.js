import init, { analyze_system, ensemble_error_curve, bivariate_links } from "./pkg/robust_causal_wasm.js";

const $ = (id) => document.getElementById(id);

function fields(form) {
  const out = {};
  for (const el of form.querySelectorAll("input, select")) out[el.name] = el.value;
  return out;
}

function fail(target, err) {
  target.innerHTML = `<p class="error">${String(err.message ?? err)}</p>`;
}

function fmt(x, digits = 3) {
  return Number.isFinite(x) ? x.toFixed(digits) : "";
}

function renderEnsemble(view) {
  const robust = new Set(view.robust.map((l) => `${l.source}>${l.target}@${l.lag}`));
  const full = new Set(view.full.map((l) => `${l.source}>${l.target}@${l.lag}`));
  const byLag = new Map();
  for (const f of view.frequencies) {
    if (!byLag.has(f.lag)) byLag.set(f.lag, []);
    byLag.get(f.lag).push(f);
  }
  let html = `<p>Full sample: ${view.full.length} significant links. Robust (at least ${view.required_count} subsamples): ${view.robust.length}.
    Robust graph vs truth: ${view.robust_score.tp} true, ${view.robust_score.fn} missed, ${view.robust_score.indirect} indirect, ${view.robust_score.fp} spurious.</p>`;
  html += `<div class="grid">`;
  for (const [lag, rows] of [...byLag.entries()].sort((a, b) => a[0] - b[0])) {
    rows.sort((a, b) => b.fraction - a.fraction);
    html += `<table><tr><th colspan="3">lag ${lag}</th></tr><tr><th>link</th><th>full</th><th>subsamples</th></tr>`;
    for (const r of rows.slice(0, 6)) {
      const id = `${r.source}>${r.target}@${r.lag}`;
      html += `<tr class="${robust.has(id) ? "robust" : ""}"><td class="link">${r.source} &rarr; ${r.target}</td>
        <td>${full.has(id) ? "yes" : ""}</td><td>${(100 * r.fraction).toFixed(0)}%</td></tr>`;
    }
    html += `</table>`;
  }
  html += `</div>`;
  $("ens-out").innerHTML = html;
}

function runEnsemble() {
  const f = fields($("ens-form"));
  $("ens-status").textContent = "running...";
  // Let the status paint before the synchronous computation starts.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      const json = analyze_system(f.system, +f.length, +f.n, +f.q, f.mode, +f.threshold, f.bins, BigInt(f.seed));
      renderEnsemble(JSON.parse(json));
      $("ens-status").textContent = `${((performance.now() - t0) / 1000).toFixed(1)} s`;
    } catch (e) {
      $("ens-status").textContent = "";
      fail($("ens-out"), e);
    }
  }, 10);
}

function drawBinomial() {
  const n = +$("bin-n").value;
  const k = +$("bin-k").value;
  let curve;
  try {
    curve = JSON.parse(ensemble_error_curve(n, k, 101));
  } catch (e) {
    fail($("bin-out"), e);
    return;
  }
  const c = $("bin-canvas");
  const g = c.getContext("2d");
  const pad = 36;
  const w = c.width - 2 * pad;
  const h = c.height - 2 * pad;
  const px = (x) => pad + x * w;
  const py = (y) => pad + (1 - y) * h;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#bbb";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#555";
  g.font = "12px system-ui";
  g.fillText("per-subsample error rate", pad + w / 2 - 60, c.height - 8);
  g.fillText("0", pad - 4, c.height - pad + 14);
  g.fillText("1", pad + w - 4, c.height - pad + 14);
  g.fillText("1", pad - 14, pad + 4);
  const line = (color, key, dash) => {
    g.strokeStyle = color;
    g.setLineDash(dash);
    g.beginPath();
    curve.forEach((p, i) => (i ? g.lineTo(px(p.e_s), py(p[key])) : g.moveTo(px(p.e_s), py(p[key]))));
    g.stroke();
  };
  g.strokeStyle = "#ccc";
  g.setLineDash([2, 3]);
  g.beginPath();
  g.moveTo(px(0), py(0));
  g.lineTo(px(1), py(1));
  g.stroke();
  line("#c0392b", "false_link", []);
  line("#2c6fbb", "missed_link", [6, 4]);
  g.setLineDash([]);
  const at = (e) => curve[Math.round(e * 100)];
  $("bin-out").innerHTML = `<p><span style="color:#c0392b">solid</span>: spurious link kept (at least ${k} of ${n} subsamples err);
    <span style="color:#2c6fbb">dashed</span>: real link dropped (at least ${n - k + 1} misses); dotted: single sample.
    At e = 0.1: ${at(0.1).false_link.toExponential(2)} and ${at(0.1).missed_link.toExponential(2)}.</p>`;
}

function runBivariate() {
  const f = fields($("bi-form"));
  try {
    const rows = JSON.parse(bivariate_links(f.nonlinear === "1", +f.length, +f.m, +f.eps, BigInt(f.seed)));
    let html = `<table><tr><th>lag</th><th>link</th><th>TE (bits)</th><th>MI t</th><th>TE t</th></tr>`;
    for (const r of rows) {
      html += `<tr class="${r.link ? "robust" : ""}"><td>${r.lag}</td><td>${r.link ? "yes" : "no"}</td>
        <td>${fmt(r.te)}</td><td>${fmt(r.mi_statistic, 2)}</td><td>${r.te_statistic == null ? "" : fmt(r.te_statistic, 2)}</td></tr>`;
    }
    $("bi-out").innerHTML = html + `</table><p>Only lag 1 carries a real dependence.</p>`;
  } catch (e) {
    fail($("bi-out"), e);
  }
}

await init();
$("ens-run").addEventListener("click", runEnsemble);
$("bi-run").addEventListener("click", runBivariate);
$("bin-n").addEventListener("input", drawBinomial);
$("bin-k").addEventListener("input", drawBinomial);
drawBinomial();
runBivariate();
