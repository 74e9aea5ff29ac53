/**
 * Console session: which portfolio is open and which version we saw.
 *
 * Optimistic concurrency is enforced in two layers: the commit button is
 * disabled client-side as soon as the server reports a version other
 * than the one this session last loaded, and the server itself rejects
 * stale commits with 412. Conflicts are surfaced, never auto-retried.
 */

export class ConsoleSession {
  private lastSeen: number | null = null;
  private serverSide: number | null = null;

  constructor(readonly portfolioId: string) {}

  /** Record the version this session loaded (portfolio fetch / refresh). */
  syncTo(version: number): void {
    this.lastSeen = version;
    this.serverSide = version;
  }

  /** Record a version reported by any later response. */
  observeServerVersion(version: number): void {
    this.serverSide = version;
  }

  get lastSeenVersion(): number | null {
    return this.lastSeen;
  }

  /** True when the server moved past the version this session loaded. */
  get stale(): boolean {
    return this.lastSeen !== null && this.serverSide !== null &&
      this.lastSeen !== this.serverSide;
  }

  /** Commit actions stay disabled until a version is loaded and fresh. */
  get commitEnabled(): boolean {
    return this.lastSeen !== null && !this.stale;
  }
}
