/** Wire types for the annotation HTTP API. */

export type TaskKind = "entailment" | "choice";

export type ChoiceCase =
  | "conflict-with-context"
  | "malformed"
  | "context-conflict-unresolved";

export const CHOICE_CASES: ChoiceCase[] = [
  "conflict-with-context",
  "malformed",
  "context-conflict-unresolved",
];

export interface DialogUnit {
  index: number;
  speaker?: string | null;
  text: string;
}

export interface ChoiceUnit {
  index: number;
  text: string;
}

export interface EntailmentView {
  example_id: string;
  task: "entailment";
  units: DialogUnit[];
  hypothesis: string;
}

export interface ChoiceView {
  example_id: string;
  task: "choice";
  choices: ChoiceUnit[][];
}

export type ExampleView = EntailmentView | ChoiceView;

export type RangePayload = { start: number; end: number };
export type ChoicePayload = { choice: number; units: number[]; case: ChoiceCase };
export type BothPlausiblePayload = { both_plausible: true };
export type Payload = RangePayload | ChoicePayload | BothPlausiblePayload;

export interface NextTask {
  example_id: string;
  task: TaskKind;
  status: string;
  example: ExampleView;
  /** present only in the adjudicator's view of a disagreement */
  payloads?: Record<string, Payload>;
}

export interface Disagreement {
  example_id: string;
  task: TaskKind;
  status: string;
  example: ExampleView;
  payloads: Record<string, Payload>;
}

export interface AgreementReport {
  kappa: number;
  observed: number;
  expected: number;
  n_items: number;
  labels: string[];
  confusion: number[][];
}

export interface Progress {
  counts: Record<string, number>;
}

export function isRange(p: Payload): p is RangePayload {
  return "start" in p;
}

export function isChoice(p: Payload): p is ChoicePayload {
  return "choice" in p;
}

export function isBothPlausible(p: Payload): p is BothPlausiblePayload {
  return "both_plausible" in p;
}

/** Units a payload covers, for diff highlighting (ranges expand to sets). */
export function payloadUnits(p: Payload): Set<number> {
  if (isBothPlausible(p)) {
    return new Set();
  }
  if (isRange(p)) {
    const units = new Set<number>();
    for (let i = p.start; i <= p.end; i++) {
      units.add(i);
    }
    return units;
  }
  return new Set(p.units);
}
