// Payload types mirroring the annotation API. A pair view carries no
// system-identifying information: opaque pair id, neutral image URLs,
// the goal text, and a progress counter.

export interface Progress {
  answered: number;
  total: number;
}

export interface PairView {
  pair_id: string;
  left_url: string;
  right_url: string;
  goal_text: string;
  progress: Progress;
}

export interface DoneView {
  done: true;
  progress: Progress;
}

export type NextResponse = PairView | DoneView;

export type Choice = "left" | "right";

export type LikertTriple = [number, number, number];

export interface SubmitBody {
  pair_id: string;
  annotator_id: string;
  choice: Choice;
  likert: LikertTriple;
}

export function isDone(r: NextResponse): r is DoneView {
  return (r as DoneView).done === true;
}

export const LIKERT_QUESTIONS: readonly string[] = [
  "Effectiveness: Are doors effectively blocked by large objects?",
  "Arrangement: Is the object placement intentional and well-structured?",
  "Scale Appropriateness: Are the blocking objects properly sized for their function?",
];
