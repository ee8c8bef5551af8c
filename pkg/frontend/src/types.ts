// Wire types mirroring the server's JSON API. The UI renders only numbers the
// server provides; the sole client-side math is chart scaling.

export type Phase = "awaiting-response" | "ready-for-item" | "finished";

export type RuleName =
  | "max-info"
  | "pw-info"
  | "min-epv"
  | "bayes-risk-sq"
  | "bayes-risk-abs";

export const RULE_NAMES: readonly RuleName[] = [
  "max-info",
  "pw-info",
  "min-epv",
  "bayes-risk-sq",
  "bayes-risk-abs",
];

export type EstimatorName = "mean" | "median" | "mode";

export const ESTIMATOR_NAMES: readonly EstimatorName[] = [
  "mean",
  "median",
  "mode",
];

export interface ItemView {
  id: string;
  difficulty: number;
}

export interface EstimateView {
  value: number;
  estimator: string;
  trials_used: number;
  posterior_variance: number;
}

export interface HistoryEntryView {
  item_id: string;
  difficulty: number;
  response: 0 | 1;
}

export interface SessionView {
  session_id: string;
  phase: Phase;
  rule: string;
  estimator: string;
  max_trials: number;
  trials_used: number;
  current_item: ItemView | null;
  estimate: EstimateView | null;
  history: HistoryEntryView[];
  estimate_trajectory: number[];
}

export interface PosteriorView {
  nodes: number[];
  density: number[];
  mean: number;
  median: number;
  mode: number | null;
  variance: number;
}

export interface WhatIfEntryView {
  rule: string;
  item_id: string;
  difficulty: number;
  criterion: number;
}

export interface PriorSpecIn {
  kind: "uniform" | "truncated-normal";
  mu: number;
  sigma: number;
}

export interface SessionCreateIn {
  prior: PriorSpecIn;
  rule: RuleName;
  estimator: EstimatorName;
  max_trials: number;
  grid_size?: number;
  items?: ItemView[];
}
