/**
 * What-if trade form controller.
 *
 * Input edits trigger a debounced (300 ms) call to the pure /whatif
 * endpoint; the banner, margin factor, availability and VaR all come
 * straight from the response text. Deltas against the currently
 * committed book are display subtraction of two server numbers — no
 * risk quantity is computed here. Commit posts to /trades with the
 * session's expected version and is disabled the moment the server
 * reports a different version.
 */

import { RiskServiceClient, TradeDraft } from "../client.js";
import { debounce } from "../debounce.js";
import { Json, booleanOf, get, numberOf, rawText } from "../rawJson.js";
import { ConsoleSession } from "../session.js";

export const WHATIF_DEBOUNCE_MS = 300;

export interface WhatIfDisplay {
  pending: boolean;
  banner: "allowed" | "denied" | null;
  /** Server-formatted figures (verbatim response text). */
  marginFactor: string | null;
  availability: string | null;
  portfolioVar: string | null;
  invested: string | null;
  weights: Array<{ label: string; value: string }>;
  /** Differences vs the committed book, shown to 4 decimals. */
  deltaMarginFactor: string | null;
  deltaAvailability: string | null;
  deltaVar: string | null;
  commitEnabled: boolean;
  refreshPrompt: boolean;
  error: string | null;
}

export interface Baseline {
  marginFactor: number;
  availability: number;
  portfolioVar: number;
}

const EMPTY: WhatIfDisplay = {
  pending: false,
  banner: null,
  marginFactor: null,
  availability: null,
  portfolioVar: null,
  invested: null,
  weights: [],
  deltaMarginFactor: null,
  deltaAvailability: null,
  deltaVar: null,
  commitEnabled: false,
  refreshPrompt: false,
  error: null,
};

export class WhatIfController {
  private display: WhatIfDisplay = { ...EMPTY };
  private baseline: Baseline | null = null;
  private lastTrade: TradeDraft | null = null;
  private lastResponseAllowed = false;
  private readonly listeners: Array<(d: WhatIfDisplay) => void> = [];
  private readonly scheduleEvaluate: ((trade: TradeDraft) => void) & {
    cancel(): void;
  };

  constructor(
    private readonly client: RiskServiceClient,
    private readonly session: ConsoleSession,
    debounceMs: number = WHATIF_DEBOUNCE_MS,
  ) {
    this.scheduleEvaluate = debounce((trade: TradeDraft) => {
      void this.evaluateNow(trade);
    }, debounceMs);
  }

  subscribe(listener: (d: WhatIfDisplay) => void): void {
    this.listeners.push(listener);
  }

  current(): WhatIfDisplay {
    return this.display;
  }

  /** Committed-book figures the deltas are measured against. */
  setBaseline(baseline: Baseline): void {
    this.baseline = baseline;
  }

  /** Called on every form keystroke; evaluation happens after the pause. */
  onInput(trade: TradeDraft): void {
    this.lastTrade = trade;
    this.update({ ...this.display, pending: true });
    this.scheduleEvaluate(trade);
  }

  /** Evaluate immediately (used by the debounced path and tests). */
  async evaluateNow(trade: TradeDraft): Promise<WhatIfDisplay> {
    this.lastTrade = trade;
    try {
      const res = await this.client.whatIf(this.session.portfolioId, trade);
      if (res.status !== 200) {
        this.lastResponseAllowed = false;
        this.update({
          ...EMPTY,
          error: `${res.status}: ${rawText(get(res.body, "detail"))}`,
          commitEnabled: false,
        });
        return this.display;
      }
      this.session.observeServerVersion(
        numberOf(get(res.body, "current_version")));
      this.applyResult(res.body);
    } catch (err) {
      this.lastResponseAllowed = false;
      this.update({ ...EMPTY, error: String(err) });
    }
    return this.display;
  }

  private applyResult(body: Json): void {
    const allowed = booleanOf(get(body, "allowed"));
    this.lastResponseAllowed = allowed;
    const weights: Array<{ label: string; value: string }> = [];
    const w = get(body, "weights");
    if (w?.kind === "object") {
      for (const [label, value] of w.entries) {
        weights.push({ label, value: rawText(value) });
      }
    }
    const stale = this.session.stale;
    this.update({
      pending: false,
      banner: allowed ? "allowed" : "denied",
      marginFactor: rawText(get(body, "new_margin_factor")),
      availability: rawText(get(body, "new_availability")),
      portfolioVar: rawText(get(body, "portfolio_var")),
      invested: rawText(get(body, "invested")),
      weights,
      deltaMarginFactor: this.delta(
        numberOf(get(body, "new_margin_factor")),
        this.baseline?.marginFactor),
      deltaAvailability: this.delta(
        numberOf(get(body, "new_availability")),
        this.baseline?.availability),
      deltaVar: this.delta(
        numberOf(get(body, "portfolio_var")),
        this.baseline?.portfolioVar),
      commitEnabled: allowed && this.session.commitEnabled,
      refreshPrompt: stale,
      error: null,
    });
  }

  private delta(now: number, base: number | undefined): string | null {
    if (base === undefined) return null;
    const d = now - base;
    return `${d >= 0 ? "+" : ""}${d.toFixed(4)}`;
  }

  /**
   * Commit the evaluated trade with the session's expected version.
   * Blocked client-side when the session is stale; a server 412 marks
   * the session stale and prompts a refresh.
   */
  async commit(): Promise<{ status: number; body: Json | null }> {
    if (this.lastTrade === null || !this.lastResponseAllowed) {
      throw new Error("nothing evaluated to commit");
    }
    if (!this.session.commitEnabled) {
      this.update({
        ...this.display,
        commitEnabled: false,
        refreshPrompt: true,
      });
      return { status: 0, body: null };  // blocked client-side, no request
    }
    const res = await this.client.commitTrade(
      this.session.portfolioId, this.lastTrade,
      this.session.lastSeenVersion as number);
    if (res.status === 201) {
      this.session.syncTo(numberOf(get(res.body, "current_version")));
      this.update({ ...this.display, refreshPrompt: false });
    } else if (res.status === 412) {
      this.session.observeServerVersion(
        numberOf(get(res.body, "actual")));
      this.update({
        ...this.display,
        commitEnabled: false,
        refreshPrompt: true,
      });
    } else if (res.status === 409) {
      this.update({ ...this.display, banner: "denied" });
    }
    return { status: res.status, body: res.body };
  }

  private update(next: WhatIfDisplay): void {
    this.display = next;
    for (const listener of this.listeners) listener(next);
  }
}
