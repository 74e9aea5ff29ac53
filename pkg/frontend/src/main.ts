/**
 * Browser shell: binds the view controllers to the page.
 *
 * Serve the risk service (`risk serve --port 8000`), then open
 * index.html with `?portfolio=<id>&api=http://127.0.0.1:8000`.
 */

import { RiskServiceClient, TradeDraft } from "./client.js";
import { get, numberOf, rawText } from "./rawJson.js";
import { ConsoleSession } from "./session.js";
import { dashboardView } from "./views/dashboard.js";
import { histogramFromResponse, histogramSvg } from "./views/histogram.js";
import { loadLeveragePlan } from "./views/leverage.js";
import { WhatIfController } from "./views/whatif.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "";
const portfolioId = params.get("portfolio") ?? "demo";

const client = new RiskServiceClient(apiBase);
const session = new ConsoleSession(portfolioId);
const whatIf = new WhatIfController(client, session);

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

function cell(text: string): string {
  return `<td>${text.replace(/&/g, "&amp;").replace(/</g, "&lt;")}</td>`;
}

let lastHC: number | null = null;  // -h*C marker for the EOD panel

async function refreshDashboard(): Promise<void> {
  const res = await client.getPortfolio(portfolioId);
  if (res.status !== 200) {
    $("dashboard").innerHTML =
      `<p class="error">portfolio load failed (${res.status})</p>`;
    return;
  }
  const view = dashboardView(res.body);
  lastHC = numberOf(get(res.body, "policy", "h")) *
    numberOf(get(res.body, "capital"));
  session.syncTo(view.version);
  if (view.portfolioVar !== null) {
    whatIf.setBaseline({
      marginFactor: numberOf(get(res.body, "risk", "margin_factor")),
      availability: numberOf(get(res.body, "risk", "availability")),
      portfolioVar: numberOf(get(res.body, "risk", "portfolio_var")),
    });
  }
  const rows = view.positions.map((p) =>
    `<tr>${cell(p.label)}${cell(p.amount)}${cell(p.leverage)}</tr>`).join("");
  const weights = view.weights.map((w) =>
    `<tr>${cell(w.label)}${cell(w.value)}</tr>`).join("");
  $("dashboard").innerHTML = `
    ${view.blockingAlert
      ? '<div class="alert">Availability is negative: close positions ' +
        "or deposit funds before trading.</div>"
      : ""}
    <p>portfolio <b>${view.id}</b> v${view.version} — capital
       ${view.capital}, invested ${view.invested}</p>
    <p>margin factor <b>${view.marginFactor}</b>,
       availability <b>${view.availability}</b>,
       VaR <b>${view.portfolioVar ?? "n/a"}</b></p>
    <table><tr><th>position</th><th>amount</th><th>leverage</th></tr>
      ${rows}</table>
    <table><tr><th>asset</th><th>weight</th></tr>${weights}</table>`;
}

whatIf.subscribe((d) => {
  $("banner").className = d.banner ?? "";
  $("banner").textContent = d.pending
    ? "evaluating…"
    : d.error ?? (d.banner === null ? "" : d.banner.toUpperCase());
  $("whatif-out").innerHTML = d.marginFactor === null ? "" : `
    <p>a* <b>${d.marginFactor}</b> (Δ ${d.deltaMarginFactor ?? "—"}),
       M <b>${d.availability}</b> (Δ ${d.deltaAvailability ?? "—"}),
       VaR <b>${d.portfolioVar}</b> (Δ ${d.deltaVar ?? "—"})</p>`;
  ($("commit") as HTMLButtonElement).disabled = !d.commitEnabled;
  $("refresh-prompt").hidden = !d.refreshPrompt;
});

function tradeFromForm(): TradeDraft {
  return {
    asset: ($("asset") as HTMLInputElement).value.trim(),
    amount: Number(($("amount") as HTMLInputElement).value || "0"),
  };
}

$("asset").addEventListener("input", () => whatIf.onInput(tradeFromForm()));
$("amount").addEventListener("input", () => whatIf.onInput(tradeFromForm()));
$("commit").addEventListener("click", () => {
  void whatIf.commit().then(async (r) => {
    if (r.status === 201) await refreshDashboard();
  });
});
$("reload").addEventListener("click", () => void refreshDashboard());

$("plan").addEventListener("click", () => {
  void loadLeveragePlan(client, portfolioId).then((plan) => {
    const rows = plan.rows.map((r) =>
      `<tr>${cell(r.asset)}${cell(r.sequentialMax ?? r.sequentialStatus)}` +
      `${cell(r.optimized ?? "—")}</tr>`).join("");
    $("leverage").innerHTML = `
      <p>status ${plan.status}; objective ${plan.objectiveValue ?? "—"};
         VaR ${plan.portfolioVar ?? "—"}</p>
      <table><tr><th>asset</th><th>max sequential</th><th>optimized</th></tr>
        ${rows}</table>`;
  });
});

$("simulate").addEventListener("click", () => {
  void client.simulate(portfolioId, {
    method: "monte_carlo",
    m: 100_000,
    seed: 0,
  }).then((res) => {
    if (res.status !== 200) {
      $("eod").innerHTML = `<p class="error">simulate failed ` +
        `(${res.status})</p>`;
      return;
    }
    const avail = histogramFromResponse(res.body, "availability");
    const quantiles = get(res.body, "availability", "quantiles");
    const markers = [];
    if (quantiles?.kind === "object") {
      const first = quantiles.entries.entries().next();
      if (!first.done) {
        const [alpha, node] = first.value;
        markers.push({
          label: `q(${alpha})`,
          value: numberOf(node),
          cssClass: "quantile",
        });
      }
    }
    if (lastHC !== null) {
      markers.push({
        label: `-h*C = ${(-lastHC).toFixed(4)}`,
        value: -lastHC,
        cssClass: "threshold",
      });
    }
    const hEmp = rawText(get(res.body, "availability", "h_emp"));
    $("eod").innerHTML = `
      <p>availability at end of day (h_emp = ${hEmp})</p>
      ${histogramSvg(avail, markers)}
      <p>portfolio value</p>
      ${histogramSvg(histogramFromResponse(res.body, "portfolio_value"), [])}`;
  });
});

void refreshDashboard();
