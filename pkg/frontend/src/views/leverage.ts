/**
 * Leverage planner: optimized factors next to the sequential maxima,
 * one row per asset (the two columns a margin desk compares).
 */

import { RiskServiceClient } from "../client.js";
import { get, rawText } from "../rawJson.js";

export interface LeverageRow {
  asset: string;
  sequentialMax: string | null;   // null when rejected/unbounded
  sequentialStatus: string;
  optimized: string | null;
}

export interface LeveragePlan {
  status: string;
  objectiveValue: string | null;
  portfolioVar: string | null;
  constraintResidual: string | null;
  rows: LeverageRow[];
}

/** Query the optimizer and the per-asset sequential caps, then join. */
export async function loadLeveragePlan(
  client: RiskServiceClient,
  portfolioId: string,
  alpha?: number,
): Promise<LeveragePlan> {
  const opt = await client.leverageOptimize(portfolioId, "max_mean", alpha);
  if (opt.status !== 200) {
    return {
      status: `error ${opt.status}`,
      objectiveValue: null,
      portfolioVar: null,
      constraintResidual: null,
      rows: [],
    };
  }
  const assetsNode = get(opt.body, "assets");
  const lNode = get(opt.body, "l");
  const assets: string[] = assetsNode?.kind === "array"
    ? assetsNode.items.map((n) => rawText(n))
    : [];

  const rows: LeverageRow[] = [];
  for (let i = 0; i < assets.length; i++) {
    const seq = await client.leverageMax(
      portfolioId, assets[i]!,
      alpha === undefined ? {} : { alpha });
    const seqStatus = rawText(get(seq.body, "status"));
    const seqMax = get(seq.body, "l_max");
    rows.push({
      asset: assets[i]!,
      sequentialMax: seqMax !== undefined && seqMax.kind === "number"
        ? seqMax.raw
        : null,
      sequentialStatus: seqStatus,
      optimized: lNode?.kind === "array" && lNode.items[i]?.kind === "number"
        ? (lNode.items[i] as { raw: string }).raw
        : null,
    });
  }
  return {
    status: rawText(get(opt.body, "status")),
    objectiveValue: rawText(get(opt.body, "objective_value")) || null,
    portfolioVar: rawText(get(opt.body, "portfolio_var")) || null,
    constraintResidual: rawText(get(opt.body, "constraint_residual")) || null,
    rows,
  };
}
