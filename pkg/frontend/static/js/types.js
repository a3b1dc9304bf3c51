/** Wire types for the annotation HTTP API. */
export const CHOICE_CASES = [
    "conflict-with-context",
    "malformed",
    "context-conflict-unresolved",
];
export function isRange(p) {
    return "start" in p;
}
export function isChoice(p) {
    return "choice" in p;
}
export function isBothPlausible(p) {
    return "both_plausible" in p;
}
/** Units a payload covers, for diff highlighting (ranges expand to sets). */
export function payloadUnits(p) {
    if (isBothPlausible(p)) {
        return new Set();
    }
    if (isRange(p)) {
        const units = new Set();
        for (let i = p.start; i <= p.end; i++) {
            units.add(i);
        }
        return units;
    }
    return new Set(p.units);
}
