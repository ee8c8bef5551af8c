import { ApiClient, ApiError, MutationGate } from "./api.js";
import {
  densityChart,
  formatNumber,
  sparkline,
  trapezoidArea,
} from "./chart.js";
import {
  ESTIMATOR_NAMES,
  RULE_NAMES,
  type EstimatorName,
  type PosteriorView,
  type RuleName,
  type SessionView,
  type WhatIfEntryView,
} from "./types.js";

/** Where the current session id lives, so a page reload can restore it. */
export interface HashRouter {
  get(): string;
  set(value: string): void;
}

const HASH_PREFIX = "#/session/";

export function sessionIdFromHash(hash: string): string | null {
  if (!hash.startsWith(HASH_PREFIX)) return null;
  const id = decodeURIComponent(hash.slice(HASH_PREFIX.length));
  return id.length > 0 ? id : null;
}

export function hashForSession(sessionId: string): string {
  return HASH_PREFIX + encodeURIComponent(sessionId);
}

/** Everything the UI currently renders; also the export payload. */
export interface Snapshot {
  view: SessionView;
  posterior: PosteriorView | null;
  whatIf: WhatIfEntryView[];
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) return `${err.message} [${err.code}]`;
  return err instanceof Error ? err.message : String(err);
}

/**
 * The single-page app. All state is rebuilt from the server: the only local
 * inputs are the session id in the URL hash and the user's clicks, so a
 * reload mid-session restores an identical view.
 */
export class App {
  private readonly doc: Document;
  private readonly gate = new MutationGate();
  private view: SessionView | null = null;
  private posterior: PosteriorView | null = null;
  private whatIf: WhatIfEntryView[] = [];
  private error: string | null = null;
  private work: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly router: HashRouter,
  ) {
    this.doc = root.ownerDocument;
  }

  /** Restore the session named in the URL hash, or show the setup form. */
  init(): Promise<void> {
    const sessionId = sessionIdFromHash(this.router.get());
    return this.perform(async () => {
      if (sessionId !== null) {
        this.view = await this.client.getSession(sessionId);
        await this.refreshPanels();
      }
    });
  }

  /** Resolves once every user action started so far has finished rendering. */
  whenIdle(): Promise<void> {
    return this.work;
  }

  snapshot(): Snapshot | null {
    if (this.view === null) return null;
    return { view: this.view, posterior: this.posterior, whatIf: this.whatIf };
  }

  // -- actions ------------------------------------------------------------

  private perform(action: () => Promise<void>): Promise<void> {
    const task = (async () => {
      try {
        this.error = null;
        await action();
      } catch (err) {
        this.error = errorText(err);
      }
      this.render();
    })();
    this.work = this.work.then(
      () => task,
      () => task,
    );
    return task;
  }

  private startSession(form: HTMLFormElement): Promise<void> {
    const data = new FormData(form);
    const str = (name: string) => String(data.get(name) ?? "");
    return this.perform(async () => {
      const created = await this.gate.run(() =>
        this.client.createSession({
          prior: {
            kind: str("prior") === "uniform" ? "uniform" : "truncated-normal",
            mu: Number(str("mu") || "0"),
            sigma: Number(str("sigma") || "1"),
          },
          rule: str("rule") as RuleName,
          estimator: str("estimator") as EstimatorName,
          max_trials: Number(str("max_trials") || "30"),
        }),
      );
      this.view = created;
      this.router.set(hashForSession(created.session_id));
      await this.refreshPanels();
    });
  }

  private answer(value: 0 | 1): Promise<void> {
    const view = this.view;
    if (view === null || view.current_item === null) return this.work;
    const itemId = view.current_item.id;
    return this.perform(async () => {
      await this.gate.run(async () => {
        const current = this.view;
        // A double-click queues a second submit for an item that is no
        // longer pending once the first one lands; drop it here.
        if (
          current === null ||
          current.phase !== "awaiting-response" ||
          current.current_item?.id !== itemId
        ) {
          return;
        }
        this.view = await this.client.submitResponse(
          current.session_id,
          itemId,
          value,
        );
      });
      await this.refreshPanels();
    });
  }

  private newSession(): Promise<void> {
    return this.perform(async () => {
      this.view = null;
      this.posterior = null;
      this.whatIf = [];
      this.router.set("");
    });
  }

  /** Refetch the read-only panels; runs only after mutations have settled. */
  private async refreshPanels(): Promise<void> {
    const view = this.view;
    if (view === null) return;
    const [posterior, whatIf] = await Promise.all([
      this.client.getPosterior(view.session_id),
      view.phase === "finished"
        ? Promise.resolve([] as WhatIfEntryView[])
        : this.client.getWhatIf(view.session_id),
    ]);
    this.posterior = posterior;
    this.whatIf = whatIf;
  }

  // -- rendering ----------------------------------------------------------

  private h<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    attrs: Record<string, string> = {},
    children: (Node | string)[] = [],
  ): HTMLElementTagNameMap[K] {
    const node = this.doc.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
      node.setAttribute(key, value);
    }
    for (const child of children) {
      node.append(child);
    }
    return node;
  }

  render(): void {
    const children: (Node | string)[] = [
      this.h("header", {}, [
        this.h("h1", {}, ["bayescat"]),
        this.h("p", { class: "subtitle" }, [
          "Adaptive testing console — the engine picks each item from your answers.",
        ]),
      ]),
    ];
    if (this.error !== null) {
      children.push(
        this.h("div", { id: "error-banner", class: "error", role: "alert" }, [
          this.error,
        ]),
      );
    }
    children.push(
      this.view === null ? this.renderSetup() : this.renderSession(this.view),
    );
    this.root.replaceChildren(...children);
  }

  private renderSetup(): HTMLElement {
    const select = (name: string, options: readonly string[], value: string) =>
      this.h(
        "select",
        { name, id: `field-${name}` },
        options.map((option) =>
          this.h(
            "option",
            option === value
              ? { value: option, selected: "selected" }
              : { value: option },
            [option],
          ),
        ),
      );
    const field = (label: string, control: HTMLElement) =>
      this.h("label", { class: "field" }, [
        this.h("span", {}, [label]),
        control,
      ]);
    const form = this.h("form", { id: "setup-form" }, [
      field(
        "Prior",
        select("prior", ["truncated-normal", "uniform"], "truncated-normal"),
      ),
      field(
        "Prior mean",
        this.h("input", {
          name: "mu",
          id: "field-mu",
          type: "number",
          step: "any",
          value: "0",
        }),
      ),
      field(
        "Prior sd",
        this.h("input", {
          name: "sigma",
          id: "field-sigma",
          type: "number",
          step: "any",
          value: "1",
        }),
      ),
      field("Selection rule", select("rule", RULE_NAMES, "bayes-risk-sq")),
      field("Estimator", select("estimator", ESTIMATOR_NAMES, "mean")),
      field(
        "Trials",
        this.h("input", {
          name: "max_trials",
          id: "field-max-trials",
          type: "number",
          min: "1",
          step: "1",
          value: "30",
        }),
      ),
      this.h("button", { type: "submit", id: "start-button" }, [
        "Start session",
      ]),
    ]);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.startSession(form);
    });
    return this.h("section", { class: "card" }, [
      this.h("h2", {}, ["New session"]),
      form,
    ]);
  }

  private renderSession(view: SessionView): HTMLElement {
    const sections: HTMLElement[] = [this.renderMeta(view)];
    if (view.phase === "finished") {
      sections.push(this.renderResults(view));
    } else if (view.current_item !== null) {
      sections.push(this.renderItemCard(view));
    }
    if (this.posterior !== null) {
      sections.push(this.renderPosterior(this.posterior));
    }
    sections.push(this.renderTrajectory(view));
    if (view.phase !== "finished") {
      sections.push(this.renderWhatIf(view));
    }
    if (view.history.length > 0) {
      sections.push(this.renderHistory(view));
    }
    return this.h("main", {}, sections);
  }

  private renderMeta(view: SessionView): HTMLElement {
    return this.h("section", { class: "meta card" }, [
      this.h("span", { id: "trial-counter" }, [
        `Trial ${view.trials_used} / ${view.max_trials}`,
      ]),
      this.h("span", { class: "tag", id: "phase-tag" }, [view.phase]),
      this.h("span", { class: "tag" }, [`rule ${view.rule}`]),
      this.h("span", { class: "tag" }, [`estimator ${view.estimator}`]),
      this.h("code", { id: "session-id" }, [view.session_id]),
    ]);
  }

  private renderItemCard(view: SessionView): HTMLElement {
    const item = view.current_item!;
    const button = (value: 0 | 1, label: string) => {
      const attrs: Record<string, string> = {
        type: "button",
        class: "answer",
        "data-answer": String(value),
      };
      if (this.gate.busy) attrs.disabled = "disabled";
      const node = this.h("button", attrs, [label]);
      node.addEventListener("click", () => {
        void this.answer(value);
      });
      return node;
    };
    return this.h("section", { class: "card", id: "item-card" }, [
      this.h("h2", {}, ["Current item"]),
      this.h("p", {}, [
        "Item ",
        this.h("code", { id: "item-id" }, [item.id]),
        " — difficulty ",
        this.h("strong", { id: "item-difficulty" }, [
          formatNumber(item.difficulty),
        ]),
      ]),
      this.h("div", { class: "answers" }, [
        button(0, "Wrong (0)"),
        button(1, "Correct (1)"),
      ]),
    ]);
  }

  private renderResults(view: SessionView): HTMLElement {
    const estimate = view.estimate;
    const exportHref =
      "data:application/json;charset=utf-8," +
      encodeURIComponent(JSON.stringify(this.snapshot(), null, 2));
    return this.h("section", { class: "card results", id: "results" }, [
      this.h("h2", {}, ["Test finished"]),
      this.h("p", { class: "final-estimate" }, [
        "Ability estimate ",
        this.h("strong", { id: "final-estimate" }, [
          estimate === null ? "—" : formatNumber(estimate.value),
        ]),
        estimate === null
          ? ""
          : ` (${estimate.estimator} of the posterior, ${estimate.trials_used} trials,` +
            ` posterior variance ${formatNumber(estimate.posterior_variance)})`,
      ]),
      this.h(
        "a",
        {
          id: "export-link",
          href: exportHref,
          download: `session-${view.session_id}.json`,
        },
        ["Export session JSON"],
      ),
      (() => {
        const again = this.h("button", { type: "button", id: "new-session" }, [
          "Start a new session",
        ]);
        again.addEventListener("click", () => {
          void this.newSession();
        });
        return again;
      })(),
    ]);
  }

  private renderPosterior(posterior: PosteriorView): HTMLElement {
    const area = trapezoidArea(posterior.nodes, posterior.density);
    const cell = (id: string, label: string, value: number | null) =>
      this.h("div", { class: "stat" }, [
        this.h("span", { class: "stat-label" }, [label]),
        this.h("strong", { id }, [
          value === null ? "—" : formatNumber(value),
        ]),
      ]);
    const areaLabel = this.h(
      "p",
      { id: "posterior-area", "data-area": String(area) },
      [`Integrated area ${formatNumber(area, 7)}`],
    );
    return this.h("section", { class: "card", id: "posterior-panel" }, [
      this.h("h2", {}, ["Posterior density"]),
      densityChart(this.doc, posterior.nodes, posterior.density, {
        marker: posterior.mean,
      }),
      areaLabel,
      this.h("div", { class: "stats", id: "estimates" }, [
        cell("est-mean", "mean", posterior.mean),
        cell("est-median", "median", posterior.median),
        cell("est-mode", "mode", posterior.mode),
        cell("est-variance", "variance", posterior.variance),
      ]),
    ]);
  }

  private renderTrajectory(view: SessionView): HTMLElement {
    const body: (Node | string)[] = [this.h("h2", {}, ["Estimate by trial"])];
    if (view.estimate_trajectory.length === 0) {
      body.push(this.h("p", { class: "placeholder" }, ["No answers yet."]));
    } else {
      body.push(
        sparkline(this.doc, view.estimate_trajectory, { width: 560 }),
        this.h("p", {}, [
          `After trial ${view.estimate_trajectory.length}: `,
          this.h("strong", { id: "trajectory-last" }, [
            formatNumber(
              view.estimate_trajectory[view.estimate_trajectory.length - 1],
            ),
          ]),
        ]),
      );
    }
    return this.h("section", { class: "card", id: "trajectory-panel" }, body);
  }

  private renderWhatIf(view: SessionView): HTMLElement {
    const rows = this.whatIf.map((entry) =>
      this.h(
        "tr",
        entry.rule === view.rule
          ? { class: "active-rule", "data-rule": entry.rule }
          : { "data-rule": entry.rule },
        [
          this.h("td", {}, [entry.rule]),
          this.h("td", {}, [this.h("code", {}, [entry.item_id])]),
          this.h("td", {}, [formatNumber(entry.difficulty)]),
          this.h("td", {}, [formatNumber(entry.criterion, 6)]),
        ],
      ),
    );
    return this.h("section", { class: "card", id: "whatif-panel" }, [
      this.h("h2", {}, ["What-if: next item by rule"]),
      this.h("p", { class: "hint" }, [
        "The item each selection rule would serve next; refreshed after every answer.",
      ]),
      this.h("table", { id: "whatif" }, [
        this.h("thead", {}, [
          this.h("tr", {}, [
            this.h("th", {}, ["rule"]),
            this.h("th", {}, ["item"]),
            this.h("th", {}, ["difficulty"]),
            this.h("th", {}, ["criterion"]),
          ]),
        ]),
        this.h("tbody", {}, rows),
      ]),
    ]);
  }

  private renderHistory(view: SessionView): HTMLElement {
    const rows = view.history.map((entry, index) =>
      this.h("tr", {}, [
        this.h("td", {}, [String(index + 1)]),
        this.h("td", {}, [this.h("code", {}, [entry.item_id])]),
        this.h("td", {}, [formatNumber(entry.difficulty)]),
        this.h(
          "td",
          { class: entry.response === 1 ? "correct" : "wrong" },
          [entry.response === 1 ? "correct" : "wrong"],
        ),
      ]),
    );
    return this.h("section", { class: "card", id: "history-panel" }, [
      this.h("h2", {}, ["History"]),
      this.h("table", { id: "history" }, [
        this.h("thead", {}, [
          this.h("tr", {}, [
            this.h("th", {}, ["trial"]),
            this.h("th", {}, ["item"]),
            this.h("th", {}, ["difficulty"]),
            this.h("th", {}, ["response"]),
          ]),
        ]),
        this.h("tbody", {}, rows),
      ]),
    ]);
  }
}
