/**
 * Typed client for the risk service HTTP API.
 *
 * Every response is returned as a raw-preserving JSON tree plus the
 * status code; display layers read server-formatted digits from the
 * tree and never re-derive them. The fetch implementation is
 * injectable so tests can intercept traffic.
 */

import { Json, parseRaw } from "./rawJson.js";

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ status: number; text(): Promise<string> }>;

export interface ApiResponse {
  status: number;
  body: Json;
  /** The exact body text, for audit/debug. */
  text: string;
}

export interface TradeDraft {
  asset?: string;
  amount: number;
  option?: {
    underlying: string;
    kind: "call" | "put";
    strike: number | "last";
    expiry_years: number;
    rate: number;
    vol_annual: number | "fit";
  };
}

export class RiskServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request(method: string, path: string,
                        payload?: unknown): Promise<ApiResponse> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: payload === undefined
        ? {}
        : { "content-type": "application/json" },
      body: payload === undefined ? undefined : JSON.stringify(payload),
    });
    const text = await res.text();
    const body: Json = text.length > 0
      ? parseRaw(text)
      : { kind: "null" };
    return { status: res.status, body, text };
  }

  getPortfolio(id: string): Promise<ApiResponse> {
    return this.request("GET", `/v1/portfolios/${id}`);
  }

  whatIf(id: string, trade: TradeDraft): Promise<ApiResponse> {
    return this.request("POST", `/v1/portfolios/${id}/whatif`, { trade });
  }

  commitTrade(id: string, trade: TradeDraft,
              expectedVersion: number): Promise<ApiResponse> {
    return this.request("POST", `/v1/portfolios/${id}/trades`, {
      trade,
      expected_version: expectedVersion,
    });
  }

  riskReport(id: string, params: Record<string, string | number>
             ): Promise<ApiResponse> {
    const qs = new URLSearchParams(
      Object.entries(params).map(([k, v]) => [k, String(v)]),
    );
    return this.request("GET", `/v1/portfolios/${id}/risk?${qs}`);
  }

  leverageMax(id: string, asset: string,
              params: Record<string, string | number> = {}
              ): Promise<ApiResponse> {
    const qs = new URLSearchParams({
      asset,
      ...Object.fromEntries(
        Object.entries(params).map(([k, v]) => [k, String(v)]),
      ),
    });
    return this.request("GET", `/v1/portfolios/${id}/leverage/max?${qs}`);
  }

  leverageOptimize(id: string, objective: string,
                   alpha?: number): Promise<ApiResponse> {
    return this.request("POST", `/v1/portfolios/${id}/leverage/optimize`,
                        alpha === undefined
                          ? { objective }
                          : { objective, alpha });
  }

  simulate(id: string, options: { method?: string; m?: number;
           seed?: number; alphas?: number[] }): Promise<ApiResponse> {
    return this.request("POST", `/v1/portfolios/${id}/simulate`, options);
  }

  uploadPrices(assetId: string, csv: string): Promise<ApiResponse> {
    return this.fetchFn(`${this.baseUrl}/v1/assets/${assetId}/prices`, {
      method: "PUT",
      headers: { "content-type": "text/csv" },
      body: csv,
    }).then(async (res) => ({
      status: res.status,
      body: { kind: "null" } as Json,
      text: await res.text(),
    }));
  }

  createPortfolio(payload: unknown): Promise<ApiResponse> {
    return this.request("POST", "/v1/portfolios", payload);
  }
}
