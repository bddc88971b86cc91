/** Review card rendering: the mention highlighted inside its context, the
 * candidate list with language badges and Wikidata links, lease countdown,
 * stage indicator and key hints. Text nodes only — the surface string must
 * reach the DOM byte-identical, never through innerHTML. */

import type { QueueItem } from "./types.js";
import { CATEGORY_KEYS, FACTOR_KEYS, TAG_CATEGORIES, TAG_FACTORS } from "./types.js";

export interface TaxonomySelection {
  category: string | null;
  factors: Set<string>;
}

const STAGE_LABELS: Record<string, string> = {
  model_review: "model review — a accept · r reject",
  search_review: "search review — 1–9/0 pick · n no match",
  taxonomy: "taxonomy — 1–9/a–c category · q–p factors · Enter save",
};

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderCard(
  container: HTMLElement,
  item: QueueItem,
  taxonomy?: TaxonomySelection,
): void {
  container.textContent = "";
  const card = el("div", "card");
  card.dataset.mentionId = item.mention_id;
  card.dataset.stage = item.stage;

  const header = el("div", "card-header");
  header.appendChild(el("span", "stage-indicator", STAGE_LABELS[item.stage] ?? item.stage));
  header.appendChild(el("span", "ne-type", item.ne_type));
  const countdown = el("span", "lease-countdown");
  countdown.dataset.expiresAt = String(item.expires_at);
  header.appendChild(countdown);
  card.appendChild(header);

  const context = el("p", "context");
  context.appendChild(el("span", "left-context", item.left_context));
  context.appendChild(document.createTextNode(item.left_context ? " " : ""));
  context.appendChild(el("mark", "mention-surface", item.surface));
  context.appendChild(document.createTextNode(item.right_context ? " " : ""));
  context.appendChild(el("span", "right-context", item.right_context));
  card.appendChild(context);

  card.appendChild(
    el("p", "provenance", `${item.doc_id} · ${item.subcategory} · ${item.mention_id}`),
  );

  if (item.stage === "taxonomy") {
    card.appendChild(renderTaxonomyMenu(taxonomy ?? { category: null, factors: new Set() }));
  } else {
    card.appendChild(renderCandidates(item));
  }
  container.appendChild(card);
}

function renderCandidates(item: QueueItem): HTMLElement {
  const list = el("ol", "candidates");
  item.candidates.forEach((candidate, index) => {
    const row = el("li", "candidate");
    row.dataset.index = String(index);
    if (item.stage === "search_review") {
      row.appendChild(el("kbd", "key-hint", index === 9 ? "0" : String(index + 1)));
    }
    row.appendChild(el("span", "lang-badge", candidate.language));
    row.appendChild(el("span", "candidate-title", candidate.title));
    if (candidate.score !== undefined) {
      row.appendChild(el("span", "score", candidate.score.toFixed(3)));
    }
    if (candidate.qid) {
      const link = el("a", "qid-link", candidate.qid) as HTMLAnchorElement;
      link.href = `https://www.wikidata.org/wiki/${candidate.qid}`;
      link.target = "_blank";
      link.rel = "noopener";
      row.appendChild(link);
    }
    list.appendChild(row);
  });
  if (!item.candidates.length) {
    list.appendChild(el("li", "candidate empty", "(no candidates)"));
  }
  return list;
}

function renderTaxonomyMenu(selection: TaxonomySelection): HTMLElement {
  const wrap = el("div", "taxonomy");
  const categories = el("ul", "categories");
  TAG_CATEGORIES.forEach((category, index) => {
    const row = el("li", selection.category === category ? "category selected" : "category");
    row.dataset.category = category;
    row.appendChild(el("kbd", "key-hint", CATEGORY_KEYS[index]));
    row.appendChild(el("span", undefined, category));
    categories.appendChild(row);
  });
  const factors = el("ul", "factors");
  TAG_FACTORS.forEach((factor, index) => {
    const row = el("li", selection.factors.has(factor) ? "factor selected" : "factor");
    row.dataset.factor = factor;
    row.appendChild(el("kbd", "key-hint", FACTOR_KEYS[index]));
    row.appendChild(el("span", undefined, factor));
    factors.appendChild(row);
  });
  wrap.appendChild(el("h3", undefined, "category"));
  wrap.appendChild(categories);
  wrap.appendChild(el("h3", undefined, "factors"));
  wrap.appendChild(factors);
  return wrap;
}

export function renderEmptyStage(container: HTMLElement, stage: string): void {
  container.textContent = "";
  const note = el("div", "card empty-stage");
  note.appendChild(el("p", undefined, `nothing left to review in ${stage}`));
  note.appendChild(el("p", "hint", "press ] or [ to switch stage"));
  container.appendChild(note);
}

export function updateCountdown(container: HTMLElement, now: number): void {
  const node = container.querySelector<HTMLElement>(".lease-countdown");
  if (!node) return;
  const expires = Number(node.dataset.expiresAt ?? 0);
  const left = Math.max(0, Math.round(expires - now));
  node.textContent = `lease ${left}s`;
}
