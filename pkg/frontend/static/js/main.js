import { Api } from "./api.js";
import { renderAdjudicator, renderAnnotator } from "./dom.js";
import { AdjudicatorSession, AnnotatorSession } from "./state.js";
function must(id) {
    const node = document.getElementById(id);
    if (node === null) {
        throw new Error(`missing #${id}`);
    }
    return node;
}
async function progressText(api) {
    const progress = await api.progress();
    const counts = progress.counts;
    const done = (counts["double-annotated"] ?? 0) + (counts["adjudicated"] ?? 0) + (counts["discarded"] ?? 0);
    return `${done} / ${counts["total"] ?? 0} resolved, ${counts["disagreed"] ?? 0} disagreed`;
}
function startAnnotator(api, root, id) {
    const session = new AnnotatorSession(api, id);
    const rerender = () => renderAnnotator(root, session, rerender);
    void session.start().then(rerender);
}
function startAdjudicator(api, root, id) {
    const session = new AdjudicatorSession(api, id);
    const rerender = () => {
        void progressText(api).then((text) => renderAdjudicator(root, session, text, rerender));
    };
    void session.refresh().then(rerender);
}
function boot() {
    const api = new Api("");
    const form = must("login");
    const root = must("workspace");
    form.addEventListener("submit", (event) => {
        event.preventDefault();
        const id = must("annotator-id").value.trim();
        const role = must("role").value;
        if (!id) {
            return;
        }
        form.hidden = true;
        if (role === "adjudicator") {
            startAdjudicator(api, root, id);
        }
        else {
            startAnnotator(api, root, id);
        }
    });
}
boot();
