/** Progress panel: partition bar plus per-stage remaining counts.
 * Every displayed number is the service's own string — nothing is
 * recomputed on the client. */

import type { ProgressPayload } from "./types.js";
import { STAGES } from "./types.js";

export class ProgressView {
  private stale = false;

  constructor(private readonly root: HTMLElement) {}

  update(payload: ProgressPayload): void {
    this.stale = false;
    this.render(payload);
  }

  markStale(): void {
    if (this.stale) return;
    this.stale = true;
    const badge = document.createElement("span");
    badge.className = "stale-badge";
    badge.textContent = "stale data — service unreachable";
    this.root.appendChild(badge);
  }

  private render(payload: ProgressPayload): void {
    this.root.textContent = "";
    const coverage = payload.coverage;

    const bar = document.createElement("div");
    bar.className = "partition-bar";
    const segments: Array<[string, string]> = [
      ["model", coverage.pct_model_labeled],
      ["search", coverage.pct_search_labeled],
      ["unlabeled", coverage.pct_unlabeled],
    ];
    for (const [name, pct] of segments) {
      const segment = document.createElement("div");
      segment.className = `segment segment-${name}`;
      segment.style.width = `${pct}%`; // the service string, verbatim
      segment.dataset.pct = pct;
      bar.appendChild(segment);
    }
    this.root.appendChild(bar);

    const labels = document.createElement("p");
    labels.className = "partition-labels";
    labels.textContent =
      `model ${coverage.pct_model_labeled}% · search ${coverage.pct_search_labeled}% · ` +
      `unlabeled ${coverage.pct_unlabeled}% · pending ${coverage.pending}`;
    this.root.appendChild(labels);

    const stages = document.createElement("p");
    stages.className = "stage-counts";
    stages.textContent = STAGES.map((stage) => `${stage}: ${payload.stages[stage] ?? 0}`).join(" · ");
    this.root.appendChild(stages);

    if (payload.finalized) {
      const done = document.createElement("p");
      done.className = "finalized-note";
      done.textContent = "store finalized";
      this.root.appendChild(done);
    } else if (coverage.pending === coverage.total && coverage.total > 0) {
      const fresh = document.createElement("p");
      fresh.className = "all-pending-note";
      fresh.textContent = "all mentions pending";
      this.root.appendChild(fresh);
    }
  }
}
