// DOM shell: renders session snapshots and forwards events. All state
// lives in AnnotationSession; this file only paints.

import { HarnessClient } from "./api.js";
import { AnnotationSession, type SessionState } from "./session.js";
import { LIKERT_QUESTIONS } from "./types.js";

const SAME_SCREEN = new URLSearchParams(location.search).get("same_screen") === "1";

function annotatorId(): string {
  const fromQuery = new URLSearchParams(location.search).get("annotator");
  if (fromQuery) {
    return fromQuery;
  }
  const stored = localStorage.getItem("annotator_id");
  if (stored) {
    return stored;
  }
  const generated = `ann_${Math.random().toString(36).slice(2, 10)}`;
  localStorage.setItem("annotator_id", generated);
  return generated;
}

const app = document.getElementById("app") as HTMLElement;
const session = new AnnotationSession(new HarnessClient(""), annotatorId(), {
  sameScreen: SAME_SCREEN,
});

function el(tag: string, attrs: Record<string, string> = {}, text = ""): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function renderImages(state: SessionState, root: HTMLElement): void {
  const pair = state.pair;
  if (!pair) {
    return;
  }
  const row = el("div", { class: "pair-row" });
  for (const side of ["left", "right"] as const) {
    const panel = el("figure", {
      class: `panel ${state.choice === side ? "selected" : ""}`,
      "data-side": side,
    });
    const img = el("img", {
      src: side === "left" ? pair.left_url : pair.right_url,
      alt: `${side} scene rendering`,
    });
    panel.appendChild(img);
    panel.appendChild(el("figcaption", {}, side === "left" ? "Scene 1" : "Scene 2"));
    panel.addEventListener("click", () => {
      session.selectChoice(side);
    });
    row.appendChild(panel);
  }
  root.appendChild(row);
}

function renderLikert(state: SessionState, root: HTMLElement): void {
  LIKERT_QUESTIONS.forEach((question, qi) => {
    const fieldset = el("fieldset", { class: "likert" });
    fieldset.appendChild(el("legend", {}, question));
    const scale = el("div", { class: "scale" });
    for (let value = 1; value <= 7; value++) {
      const label = el("label", {});
      const input = el("input", {
        type: "radio",
        name: `q${qi}`,
        value: String(value),
      }) as HTMLInputElement;
      input.checked = state.likert[qi] === value;
      input.addEventListener("change", () => session.setLikert(qi, value));
      label.appendChild(input);
      label.appendChild(el("span", {}, String(value)));
      scale.appendChild(label);
    }
    fieldset.appendChild(scale);
    root.appendChild(fieldset);
  });
}

function render(state: SessionState): void {
  app.textContent = "";
  const header = el("header", {});
  header.appendChild(el("h1", {}, "Scene comparison study"));
  if (state.total > 0 && state.phase !== "done") {
    header.appendChild(
      el("p", { class: "progress" }, `Pair ${state.answered + 1} of ${state.total}`),
    );
  }
  app.appendChild(header);

  if (state.offline) {
    const banner = el("div", { class: "banner error" });
    banner.appendChild(el("span", {}, state.notice ?? "Connection lost."));
    const retry = el("button", {}, "Retry");
    retry.addEventListener("click", () => void session.retry());
    banner.appendChild(retry);
    app.appendChild(banner);
    return;
  }

  if (state.phase === "loading" || state.phase === "submitting") {
    app.appendChild(el("p", { class: "muted" }, "Loading…"));
    return;
  }

  if (state.phase === "done") {
    app.appendChild(el("p", { class: "done" }, "All pairs answered. Thank you!"));
    app.appendChild(
      el("p", { class: "muted" }, `${state.answered} of ${state.total} recorded.`),
    );
    return;
  }

  if (state.pair) {
    app.appendChild(el("p", { class: "goal" }, `Goal: ${state.pair.goal_text}`));
  }

  if (state.phase === "choice" || SAME_SCREEN) {
    app.appendChild(
      el("p", {}, "Which scene better satisfies the goal? Click to select."),
    );
    renderImages(state, app);
  }
  if (state.phase === "likert" || SAME_SCREEN) {
    renderLikert(state, app);
  }

  if (state.notice) {
    app.appendChild(el("p", { class: "banner notice" }, state.notice));
  }

  const actions = el("div", { class: "actions" });
  if (state.phase === "choice" && !SAME_SCREEN) {
    const next = el("button", {}, "Continue to ratings");
    next.addEventListener("click", () => session.confirmChoice());
    actions.appendChild(next);
  } else {
    const submit = el("button", {}, "Submit answer") as HTMLButtonElement;
    submit.addEventListener("click", () => void session.submit());
    actions.appendChild(submit);
  }
  app.appendChild(actions);
}

session.onChange(render);
void session.start();
