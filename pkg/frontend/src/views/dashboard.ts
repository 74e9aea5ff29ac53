/**
 * Portfolio dashboard view-model: positions, weights, current risk and
 * margin state. A negative availability renders as a blocking alert —
 * the position must be closed or funded before anything else happens.
 */

import { Json, get, numberOf, rawText } from "../rawJson.js";

export interface PositionRow {
  label: string;
  amount: string;   // server-formatted
  leverage: string;
}

export interface DashboardView {
  id: string;
  owner: string;
  version: number;
  capital: string;
  invested: string;
  marginFactor: string;
  availability: string;
  positions: PositionRow[];
  /** Live weights/VaR recomputed by the service; null if data missing. */
  portfolioVar: string | null;
  weights: Array<{ label: string; value: string }>;
  riskError: string | null;
  blockingAlert: boolean;
}

function positionLabel(entry: Json): string {
  const asset = get(entry, "asset");
  if (asset !== undefined) return rawText(asset);
  const u = rawText(get(entry, "option", "underlying"));
  const kind = rawText(get(entry, "option", "kind"));
  const strike = rawText(get(entry, "option", "strike"));
  return `${u} ${kind} @ ${strike}`;
}

/** Build the dashboard from a GET /v1/portfolios/{id} response body. */
export function dashboardView(body: Json): DashboardView {
  const positionsNode = get(body, "positions");
  const positions: PositionRow[] = [];
  if (positionsNode?.kind === "array") {
    for (const entry of positionsNode.items) {
      positions.push({
        label: positionLabel(entry),
        amount: rawText(get(entry, "amount")),
        leverage: rawText(get(entry, "leverage")) || "1",
      });
    }
  }

  const risk = get(body, "risk");
  const weights: Array<{ label: string; value: string }> = [];
  let portfolioVar: string | null = null;
  if (risk !== undefined && risk.kind === "object") {
    portfolioVar = rawText(get(risk, "portfolio_var"));
    const w = get(risk, "weights");
    if (w?.kind === "object") {
      for (const [label, value] of w.entries) {
        weights.push({ label, value: rawText(value) });
      }
    }
  }

  const availabilityNode = get(body, "availability");
  return {
    id: rawText(get(body, "id")),
    owner: rawText(get(body, "owner")),
    version: numberOf(get(body, "version")),
    capital: rawText(get(body, "capital")),
    invested: rawText(get(body, "invested")),
    marginFactor: rawText(get(body, "margin_factor")),
    availability: rawText(availabilityNode),
    positions,
    portfolioVar,
    weights,
    riskError: get(body, "risk_error") !== undefined
      ? rawText(get(body, "risk_error"))
      : null,
    blockingAlert: numberOf(availabilityNode) < 0,
  };
}
