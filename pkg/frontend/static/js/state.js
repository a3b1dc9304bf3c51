/** Session state machines for annotators and the adjudicator.
 *
 * All task state lives on the server; these controllers only hold the
 * selection being built for the current task. An empty selection can never
 * be submitted unless both-plausible is chosen.
 */
import { ApiError } from "./api.js";
import { payloadUnits } from "./types.js";
export class SelectionError extends Error {
}
export class AnnotatorSession {
    constructor(api, annotatorId) {
        this.api = api;
        this.annotatorId = annotatorId;
        this.phase = "working";
        this.current = null;
        this.submitted = 0;
        this.lastError = null;
        // entailment selection: inclusive range anchored at the first click
        this.anchor = null;
        this.range = null;
        // choice selection: unit set within one choice, plus a case tag
        this.selectedChoice = null;
        this.selectedUnits = new Set();
        this.caseTag = null;
        this.bothPlausible = false;
    }
    async start() {
        await this.loadNext();
    }
    resetSelection() {
        this.anchor = null;
        this.range = null;
        this.selectedChoice = null;
        this.selectedUnits = new Set();
        this.caseTag = null;
        this.bothPlausible = false;
        this.lastError = null;
    }
    async loadNext() {
        this.resetSelection();
        this.current = await this.api.nextTask(this.annotatorId);
        this.phase = this.current === null ? "done" : "working";
    }
    /** Entailment: first click anchors the range, later clicks extend it;
     * clicking the anchor again clears the selection. */
    clickUnit(index) {
        if (this.anchor === null) {
            this.anchor = index;
            this.range = { start: index, end: index };
            return;
        }
        if (index === this.anchor && this.range?.start === index && this.range?.end === index) {
            this.anchor = null;
            this.range = null;
            return;
        }
        this.range = {
            start: Math.min(this.anchor, index),
            end: Math.max(this.anchor, index),
        };
    }
    /** Choice: toggle a unit within one choice; switching choices resets. */
    toggleChoiceUnit(choice, unit) {
        this.bothPlausible = false;
        if (this.selectedChoice !== choice) {
            this.selectedChoice = choice;
            this.selectedUnits = new Set([unit]);
            return;
        }
        if (this.selectedUnits.has(unit)) {
            this.selectedUnits.delete(unit);
        }
        else {
            this.selectedUnits.add(unit);
        }
    }
    setCase(tag) {
        this.bothPlausible = false;
        this.caseTag = tag;
    }
    toggleBothPlausible() {
        this.bothPlausible = !this.bothPlausible;
        if (this.bothPlausible) {
            this.selectedChoice = null;
            this.selectedUnits = new Set();
            this.caseTag = null;
        }
    }
    /** The payload the current selection represents; throws SelectionError
     * when the selection is incomplete (never submits an empty selection). */
    buildPayload() {
        if (this.current === null) {
            throw new SelectionError("no task loaded");
        }
        if (this.current.task === "entailment") {
            if (this.range === null) {
                throw new SelectionError("select the range of turns that entails the hypothesis");
            }
            return { start: this.range.start, end: this.range.end };
        }
        if (this.bothPlausible) {
            return { both_plausible: true };
        }
        if (this.selectedChoice === null || this.selectedUnits.size === 0) {
            throw new SelectionError("mark the implausible story's evidence, or choose both-plausible");
        }
        if (this.caseTag === null) {
            throw new SelectionError("pick a case tag");
        }
        return {
            choice: this.selectedChoice,
            units: [...this.selectedUnits].sort((a, b) => a - b),
            case: this.caseTag,
        };
    }
    /** Submit the current selection and advance to the next task. */
    async submit() {
        if (this.current === null) {
            throw new SelectionError("no task loaded");
        }
        const payload = this.buildPayload();
        try {
            await this.api.submit(this.annotatorId, this.current.example_id, payload);
        }
        catch (error) {
            if (error instanceof ApiError) {
                this.lastError = error.message;
                return;
            }
            throw error;
        }
        this.submitted += 1;
        await this.loadNext();
    }
}
export class AdjudicatorSession {
    constructor(api, adjudicatorId) {
        this.api = api;
        this.adjudicatorId = adjudicatorId;
        this.queue = [];
        this.current = null;
        this.resolved = 0;
        this.lastError = null;
    }
    async refresh() {
        this.queue = await this.api.disagreements();
        this.current = this.queue.length > 0 ? this.queue[0] : null;
    }
    /** Unit indices covered by exactly one of the two payloads. */
    diffUnits() {
        if (this.current === null) {
            return new Set();
        }
        const sets = Object.values(this.current.payloads).map(payloadUnits);
        if (sets.length !== 2) {
            return new Set();
        }
        const [a, b] = sets;
        const diff = new Set();
        for (const u of a) {
            if (!b.has(u)) {
                diff.add(u);
            }
        }
        for (const u of b) {
            if (!a.has(u)) {
                diff.add(u);
            }
        }
        return diff;
    }
    /** Resolve the current disagreement by picking one annotator's payload. */
    async pick(annotator) {
        if (this.current === null) {
            throw new SelectionError("no disagreement loaded");
        }
        const payload = this.current.payloads[annotator];
        if (payload === undefined) {
            throw new SelectionError(`no payload from ${annotator}`);
        }
        await this.author(payload);
    }
    /** Resolve the current disagreement with an adjudicator-authored payload. */
    async author(payload) {
        if (this.current === null) {
            throw new SelectionError("no disagreement loaded");
        }
        try {
            await this.api.adjudicate(this.adjudicatorId, this.current.example_id, payload);
        }
        catch (error) {
            if (error instanceof ApiError) {
                this.lastError = error.message;
                return;
            }
            throw error;
        }
        this.lastError = null;
        this.resolved += 1;
        await this.refresh();
    }
}
