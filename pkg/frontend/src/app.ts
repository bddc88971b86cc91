/** Review flow state machine: fetch queue → render card → keystroke →
 * post decision → advance. Keyboard-only; one in-flight decision per tab,
 * optimistic advance, rollback + banner on conflict. */

import { ApiClient, ApiError, newRequestId } from "./api.js";
import { renderCard, renderEmptyStage, updateCountdown } from "./card.js";
import type { TaxonomySelection } from "./card.js";
import { ProgressView } from "./progress.js";
import type { DecisionPayload, QueueItem, Stage } from "./types.js";
import { CATEGORY_KEYS, FACTOR_KEYS, STAGES, TAG_CATEGORIES, TAG_FACTORS } from "./types.js";

export interface AppOptions {
  annotator: string;
  batchSize?: number;
  clock?: () => number;
  pollMs?: number;
}

export class ReviewApp {
  stage: Stage = "model_review";
  current: QueueItem | null = null;

  private queue: QueueItem[] = [];
  private inFlight = false;
  private pending: Promise<void> = Promise.resolve();
  private taxonomy: TaxonomySelection = { category: null, factors: new Set() };
  private requestIds = new Map<string, string>(); // mention -> request id, reused on retry
  private decidedCount = 0;

  private readonly bannerRoot: HTMLElement;
  private readonly cardRoot: HTMLElement;
  private readonly progressRoot: HTMLElement;
  readonly progress: ProgressView;

  private keyListener = (event: KeyboardEvent) => {
    this.pending = this.pending.then(() => this.onKey(event.key)).catch(() => undefined);
  };
  private countdownTimer: ReturnType<typeof setInterval> | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: AppOptions,
  ) {
    this.bannerRoot = document.createElement("div");
    this.bannerRoot.className = "banner-root";
    this.cardRoot = document.createElement("div");
    this.cardRoot.className = "card-root";
    this.progressRoot = document.createElement("aside");
    this.progressRoot.className = "progress-root";
    root.append(this.bannerRoot, this.cardRoot, this.progressRoot);
    this.progress = new ProgressView(this.progressRoot);
  }

  get decided(): number {
    return this.decidedCount;
  }

  async start(): Promise<void> {
    document.addEventListener("keydown", this.keyListener);
    const clock = this.options.clock ?? (() => Date.now() / 1000);
    this.countdownTimer = setInterval(() => updateCountdown(this.cardRoot, clock()), 1000);
    const pollMs = this.options.pollMs ?? 5000;
    if (pollMs > 0) {
      this.pollTimer = setInterval(() => void this.refreshProgress(), pollMs);
    }
    await this.ensureCard();
    await this.refreshProgress();
  }

  stop(): void {
    document.removeEventListener("keydown", this.keyListener);
    if (this.countdownTimer) clearInterval(this.countdownTimer);
    if (this.pollTimer) clearInterval(this.pollTimer);
  }

  /** Settles when every queued keystroke has been fully processed. */
  whenIdle(): Promise<void> {
    return this.pending;
  }

  async setStage(stage: Stage): Promise<void> {
    this.stage = stage;
    this.queue = [];
    this.current = null;
    this.resetTaxonomy();
    await this.ensureCard();
  }

  private async onKey(key: string): Promise<void> {
    if (key === "]" || key === "[") {
      const delta = key === "]" ? 1 : STAGES.length - 1;
      const next = STAGES[(STAGES.indexOf(this.stage) + delta) % STAGES.length];
      await this.setStage(next);
      return;
    }
    if (!this.current || this.inFlight) return;
    switch (this.stage) {
      case "model_review":
        if (key === "a") await this.submit({ action: "accept" });
        else if (key === "r") await this.submit({ action: "reject" });
        break;
      case "search_review":
        if (key === "n") await this.submit({ action: "no_match" });
        else if (/^[0-9]$/.test(key)) {
          const index = key === "0" ? 9 : Number(key) - 1;
          if (index < this.current.candidates.length) {
            await this.submit({ action: "select", index });
          }
        }
        break;
      case "taxonomy":
        await this.onTaxonomyKey(key);
        break;
    }
  }

  private async onTaxonomyKey(key: string): Promise<void> {
    const categoryIndex = CATEGORY_KEYS.indexOf(key);
    const factorIndex = FACTOR_KEYS.indexOf(key);
    if (categoryIndex >= 0) {
      this.taxonomy.category = TAG_CATEGORIES[categoryIndex];
      this.renderCurrent();
      return;
    }
    if (factorIndex >= 0) {
      const factor = TAG_FACTORS[factorIndex];
      if (this.taxonomy.factors.has(factor)) this.taxonomy.factors.delete(factor);
      else this.taxonomy.factors.add(factor);
      this.renderCurrent();
      return;
    }
    if (key === "Enter" && this.taxonomy.category) {
      await this.submit({
        action: "tag",
        category: this.taxonomy.category,
        factors: [...this.taxonomy.factors].sort(),
      });
    }
  }

  private async submit(
    partial: Omit<DecisionPayload, "lease_token" | "request_id">,
  ): Promise<void> {
    const card = this.current;
    if (!card || this.inFlight) return;
    this.inFlight = true;
    // one request id per card: a retry after a timeout must not double-post
    let requestId = this.requestIds.get(card.mention_id);
    if (!requestId) {
      requestId = newRequestId();
      this.requestIds.set(card.mention_id, requestId);
    }
    const payload: DecisionPayload = {
      ...partial,
      lease_token: card.lease_token,
      request_id: requestId,
    };
    // optimistic advance: the next card shows while the POST is in flight
    this.current = this.queue.shift() ?? null;
    this.resetTaxonomy();
    this.renderCurrent();
    try {
      await this.api.postDecision(payload);
      this.decidedCount += 1;
      this.requestIds.delete(card.mention_id);
      this.clearBanner();
    } catch (error) {
      if (error instanceof ApiError && error.isConflict) {
        // rollback: drop local assumptions, let the queue re-deliver the card
        this.showBanner("decision conflicted (lease expired?) — card refreshed, nothing re-posted");
        this.requestIds.delete(card.mention_id);
        this.queue = [];
        this.current = null;
      } else {
        // transient failure: same card, same request id, explicit retry
        this.showBanner(`decision not saved (${String(error)}) — press the key again to retry`);
        if (this.current) this.queue.unshift(this.current);
        this.current = card;
      }
    } finally {
      this.inFlight = false;
    }
    await this.ensureCard();
    await this.refreshProgress();
  }

  private async ensureCard(): Promise<void> {
    if (!this.current) {
      if (!this.queue.length) {
        try {
          this.queue = await this.api.getQueue(
            this.stage,
            this.options.annotator,
            this.options.batchSize ?? 5,
          );
        } catch (error) {
          this.showBanner(`queue fetch failed: ${String(error)}`);
          this.queue = [];
        }
      }
      this.current = this.queue.shift() ?? null;
      this.resetTaxonomy();
    }
    this.renderCurrent();
  }

  private renderCurrent(): void {
    if (this.current) {
      renderCard(this.cardRoot, this.current, this.taxonomy);
    } else {
      renderEmptyStage(this.cardRoot, this.stage);
    }
  }

  async refreshProgress(): Promise<void> {
    try {
      this.progress.update(await this.api.getProgress());
    } catch {
      this.progress.markStale();
    }
  }

  private resetTaxonomy(): void {
    this.taxonomy = { category: null, factors: new Set() };
  }

  private showBanner(message: string): void {
    this.bannerRoot.textContent = "";
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.setAttribute("role", "alert");
    banner.textContent = message;
    this.bannerRoot.appendChild(banner);
  }

  private clearBanner(): void {
    this.bannerRoot.textContent = "";
  }
}
