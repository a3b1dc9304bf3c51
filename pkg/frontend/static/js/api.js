/** Thin typed client over the annotation HTTP API. */
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
async function errorMessage(response) {
    try {
        const body = await response.json();
        if (body && typeof body.error === "string") {
            return body.error;
        }
        return JSON.stringify(body);
    }
    catch {
        return `HTTP ${response.status}`;
    }
}
export class Api {
    constructor(base = "", fetchFn) {
        this.base = base;
        this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    }
    async get(path) {
        const response = await this.fetchFn(this.base + path);
        if (!response.ok && response.status !== 204) {
            throw new ApiError(response.status, await errorMessage(response));
        }
        return response;
    }
    async post(path, body) {
        const response = await this.fetchFn(this.base + path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!response.ok) {
            throw new ApiError(response.status, await errorMessage(response));
        }
        return response;
    }
    /** Next task for this identity, or null when the queue is exhausted. */
    async nextTask(annotator) {
        const response = await this.get(`/api/tasks/next?annotator=${encodeURIComponent(annotator)}`);
        if (response.status === 204) {
            return null;
        }
        return (await response.json());
    }
    async submit(annotator, exampleId, payload) {
        const response = await this.post("/api/annotations", {
            annotator,
            example_id: exampleId,
            payload,
        });
        return (await response.json()).status;
    }
    async disagreements() {
        return (await (await this.get("/api/disagreements")).json());
    }
    async adjudicate(adjudicator, exampleId, payload) {
        const response = await this.post("/api/adjudications", {
            adjudicator,
            example_id: exampleId,
            payload,
        });
        return (await response.json()).status;
    }
    async agreement() {
        return (await (await this.get("/api/agreement")).json());
    }
    async progress() {
        return (await (await this.get("/api/progress")).json());
    }
}
