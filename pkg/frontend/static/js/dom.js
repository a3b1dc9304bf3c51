/** DOM rendering. All displayed text comes verbatim from the API. */
import { CHOICE_CASES, isBothPlausible, isRange } from "./types.js";
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className) {
        node.className = className;
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}
function describePayload(payload) {
    if (isBothPlausible(payload)) {
        return "both plausible";
    }
    if (isRange(payload)) {
        return `turns ${payload.start}–${payload.end}`;
    }
    return `choice ${payload.choice}, units ${payload.units.join(", ")} (${payload.case})`;
}
export function renderAnnotator(root, session, rerender) {
    root.replaceChildren();
    if (session.phase === "done") {
        root.append(el("p", "done", "Queue exhausted. Thank you!"));
        return;
    }
    const task = session.current;
    if (task === null) {
        return;
    }
    root.append(el("h2", "task-id", `Example ${task.example_id}`));
    if (session.lastError) {
        root.append(el("p", "error", session.lastError));
    }
    const refresh = () => {
        rerender();
    };
    if (task.example.task === "entailment") {
        renderEntailmentForm(root, session, task.example, refresh);
    }
    else {
        renderChoiceForm(root, session, task.example, refresh);
    }
    const submit = el("button", "submit", "Submit");
    submit.addEventListener("click", () => {
        void session.submit().then(refresh, (error) => {
            session.lastError = String(error instanceof Error ? error.message : error);
            refresh();
        });
    });
    root.append(submit);
}
function renderEntailmentForm(root, session, view, refresh) {
    root.append(el("p", "hint", "Click the first and last turn of the evidence range."));
    const list = el("ol", "units");
    for (const unit of view.units) {
        const item = el("li", "unit");
        const inRange = session.range !== null && unit.index >= session.range.start && unit.index <= session.range.end;
        if (inRange) {
            item.classList.add("selected");
        }
        item.append(el("span", "speaker", unit.speaker ? `${unit.speaker}:` : ""));
        item.append(el("span", "text", unit.text));
        item.addEventListener("click", () => {
            session.clickUnit(unit.index);
            refresh();
        });
        list.append(item);
    }
    root.append(list);
    root.append(el("p", "hypothesis", `Hypothesis: ${view.hypothesis}`));
}
function renderChoiceForm(root, session, view, refresh) {
    root.append(el("p", "hint", "Mark the sentences that make one story implausible, then pick a case."));
    view.choices.forEach((choice, i) => {
        const block = el("div", "choice");
        block.append(el("h3", "choice-title", `Story ${i + 1}`));
        const list = el("ol", "units");
        for (const unit of choice) {
            const item = el("li", "unit");
            if (session.selectedChoice === i + 1 && session.selectedUnits.has(unit.index)) {
                item.classList.add("selected");
            }
            item.append(el("span", "text", unit.text));
            item.addEventListener("click", () => {
                session.toggleChoiceUnit(i + 1, unit.index);
                refresh();
            });
            list.append(item);
        }
        block.append(list);
        root.append(block);
    });
    const cases = el("div", "cases");
    for (const tag of CHOICE_CASES) {
        const label = el("label", "case");
        const radio = el("input");
        radio.type = "radio";
        radio.name = "case";
        radio.checked = session.caseTag === tag;
        radio.addEventListener("change", () => {
            session.setCase(tag);
            refresh();
        });
        label.append(radio, el("span", undefined, tag));
        cases.append(label);
    }
    root.append(cases);
    const both = el("button", session.bothPlausible ? "both active" : "both", "Both plausible");
    both.addEventListener("click", () => {
        session.toggleBothPlausible();
        refresh();
    });
    root.append(both);
}
export function renderAdjudicator(root, session, progressText, rerender) {
    root.replaceChildren();
    root.append(el("p", "progress", progressText));
    const current = session.current;
    if (current === null) {
        root.append(el("p", "done", "No disagreements to resolve."));
        return;
    }
    root.append(el("h2", "task-id", `Example ${current.example_id}`));
    if (session.lastError) {
        root.append(el("p", "error", session.lastError));
    }
    const diff = session.diffUnits();
    const example = current.example;
    const units = example.task === "entailment" ? [example.units] : example.choices;
    units.forEach((group, i) => {
        const list = el("ol", "units");
        if (example.task === "choice") {
            root.append(el("h3", "choice-title", `Story ${i + 1}`));
        }
        for (const unit of group) {
            const item = el("li", diff.has(unit.index) ? "unit differs" : "unit");
            item.append(el("span", "text", unit.text));
            list.append(item);
        }
        root.append(list);
    });
    const table = el("div", "payloads");
    for (const [annotator, payload] of Object.entries(current.payloads)) {
        const row = el("div", "payload-row");
        row.append(el("span", "annotator", annotator));
        row.append(el("span", "payload", describePayload(payload)));
        const pick = el("button", "pick", `Use ${annotator}'s`);
        pick.addEventListener("click", () => {
            void session.pick(annotator).then(rerender);
        });
        row.append(pick);
        table.append(row);
    }
    root.append(table);
}
