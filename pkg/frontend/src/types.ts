// Client-side mirrors of the service's wire types.

export type TemplateId = "A" | "B" | "C" | "D";

export interface PromptDoc {
  template: TemplateId;
  keyword: string;
  content: string | null;
}

export interface TuneConfigDoc {
  prompt: PromptDoc;
  prompt_b: PromptDoc | null;
  alpha: number;
  temperature: number;
  tau: number;
  iterations: number;
  learning_rate: number;
  optimizer: "adam" | "adamw" | "sgd";
  gradient: "auto" | "analytic" | "fd_central" | "spsa";
  seed: number;
  snapshot_every: number;
  backend: string;
  early_stop: boolean;
}

export type JobStatus = "queued" | "running" | "done" | "failed";

export interface JobView {
  id: string;
  status: JobStatus;
  submitted_at: string;
  updated_at: string;
  error: string | null;
  config: TuneConfigDoc & Record<string, unknown>;
  progress: { iteration: number; total: number };
  artifacts: Record<string, string>;
}

export interface TrajectoryRecord {
  iter: number;
  loss: number;
  sim_a: number;
  sim_b: number | null;
  p_a: number | null;
}

export interface SnapshotDoc {
  iter: number;
  phi: Record<string, number>;
}

export interface BackendEntry {
  name: string;
  kind: string;
  available: boolean;
  descriptor?: {
    name: string;
    architecture_id: string;
    weights_id: string;
    embed_dim: number;
    input_size: number;
    supports_pullback: boolean;
  };
  error?: string;
}

export interface MatrixDoc {
  version: number;
  matrix: number[][];
  phi: Record<string, number>;
  tau: number;
}
