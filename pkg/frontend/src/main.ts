import { Api } from "./api.js";
import { renderAdjudicator, renderAnnotator } from "./dom.js";
import { AdjudicatorSession, AnnotatorSession } from "./state.js";

function must<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

async function progressText(api: Api): Promise<string> {
  const progress = await api.progress();
  const counts = progress.counts;
  const done =
    (counts["double-annotated"] ?? 0) + (counts["adjudicated"] ?? 0) + (counts["discarded"] ?? 0);
  return `${done} / ${counts["total"] ?? 0} resolved, ${counts["disagreed"] ?? 0} disagreed`;
}

function startAnnotator(api: Api, root: HTMLElement, id: string): void {
  const session = new AnnotatorSession(api, id);
  const rerender = () => renderAnnotator(root, session, rerender);
  void session.start().then(rerender);
}

function startAdjudicator(api: Api, root: HTMLElement, id: string): void {
  const session = new AdjudicatorSession(api, id);
  const rerender = () => {
    void progressText(api).then((text) => renderAdjudicator(root, session, text, rerender));
  };
  void session.refresh().then(rerender);
}

function boot(): void {
  const api = new Api("");
  const form = must<HTMLFormElement>("login");
  const root = must<HTMLDivElement>("workspace");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const id = must<HTMLInputElement>("annotator-id").value.trim();
    const role = must<HTMLSelectElement>("role").value;
    if (!id) {
      return;
    }
    form.hidden = true;
    if (role === "adjudicator") {
      startAdjudicator(api, root, id);
    } else {
      startAnnotator(api, root, id);
    }
  });
}

boot();
