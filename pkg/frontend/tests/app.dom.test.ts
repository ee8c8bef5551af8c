// @vitest-environment jsdom
import { describe, expect, it } from "vitest";
import type { ApiClient } from "../src/api.js";
import { App, hashForSession, sessionIdFromHash } from "../src/app.js";
import { formatNumber } from "../src/chart.js";
import type {
  PosteriorView,
  SessionCreateIn,
  SessionView,
  WhatIfEntryView,
} from "../src/types.js";

function makeView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s1",
    phase: "awaiting-response",
    rule: "bayes-risk-sq",
    estimator: "mean",
    max_trials: 5,
    trials_used: 0,
    current_item: { id: "item-a", difficulty: 0.25 },
    estimate: null,
    history: [],
    estimate_trajectory: [],
    ...overrides,
  };
}

function makePosterior(overrides: Partial<PosteriorView> = {}): PosteriorView {
  const nodes = Array.from({ length: 25 }, (_, i) => -6 + 0.5 * i);
  const density = nodes.map(
    (x) => Math.exp(-0.5 * x * x) / Math.sqrt(2 * Math.PI),
  );
  return {
    nodes,
    density,
    mean: 0.1,
    median: 0.08,
    mode: 0.05,
    variance: 0.9,
    ...overrides,
  };
}

const WHAT_IF: WhatIfEntryView[] = [
  { rule: "max-info", item_id: "i1", difficulty: 0.1, criterion: 0.25 },
  { rule: "pw-info", item_id: "i1", difficulty: 0.1, criterion: 0.24 },
  { rule: "min-epv", item_id: "i2", difficulty: 0.2, criterion: 0.8 },
  { rule: "bayes-risk-sq", item_id: "i2", difficulty: 0.2, criterion: 0.8 },
  { rule: "bayes-risk-abs", item_id: "i3", difficulty: 0.3, criterion: 0.7 },
];

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((res) => {
    resolve = res;
  });
  return { promise, resolve };
}

/** Canned client that records calls; individual methods are overridable. */
class FakeClient {
  created: SessionCreateIn[] = [];
  submitted: { itemId: string; response: 0 | 1 }[] = [];
  fetchedSessions: string[] = [];
  view: SessionView = makeView();
  posterior: PosteriorView = makePosterior();
  whatIf: WhatIfEntryView[] = WHAT_IF;
  submitGate: Deferred<void> | null = null;

  async createSession(body: SessionCreateIn): Promise<SessionView> {
    this.created.push(body);
    return this.view;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    this.fetchedSessions.push(sessionId);
    return this.view;
  }

  async submitResponse(
    _sessionId: string,
    itemId: string,
    response: 0 | 1,
  ): Promise<SessionView> {
    this.submitted.push({ itemId, response });
    if (this.submitGate !== null) await this.submitGate.promise;
    this.view = makeView({
      trials_used: this.view.trials_used + 1,
      current_item: { id: "item-b", difficulty: -0.5 },
      history: [
        ...this.view.history,
        { item_id: itemId, difficulty: 0.25, response },
      ],
      estimate_trajectory: [...this.view.estimate_trajectory, 0.2],
    });
    return this.view;
  }

  async getPosterior(): Promise<PosteriorView> {
    return this.posterior;
  }

  async getWhatIf(): Promise<WhatIfEntryView[]> {
    return this.whatIf;
  }

  asClient(): ApiClient {
    return this as unknown as ApiClient;
  }
}

class MemoryRouter {
  constructor(public value = "") {}
  get(): string {
    return this.value;
  }
  set(value: string): void {
    this.value = value;
  }
}

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.append(root);
  return root;
}

describe("hash routing", () => {
  it("round-trips session ids, including ones needing escapes", () => {
    for (const id of ["abc123", "a b/c"]) {
      expect(sessionIdFromHash(hashForSession(id))).toBe(id);
    }
  });

  it("rejects unrelated hashes", () => {
    expect(sessionIdFromHash("")).toBeNull();
    expect(sessionIdFromHash("#/other/x")).toBeNull();
    expect(sessionIdFromHash("#/session/")).toBeNull();
  });
});

describe("App", () => {
  it("renders the setup form when there is no session in the URL", async () => {
    const root = mount();
    const app = new App(root, new FakeClient().asClient(), new MemoryRouter());
    await app.init();
    expect(root.querySelector("#setup-form")).not.toBeNull();
    const rules = root.querySelectorAll("#field-rule option");
    expect(rules.length).toBe(5);
    expect(root.querySelector("#item-card")).toBeNull();
  });

  it("creates a session from the form and stores its id in the hash", async () => {
    const root = mount();
    const fake = new FakeClient();
    const router = new MemoryRouter();
    const app = new App(root, fake.asClient(), router);
    await app.init();

    (root.querySelector("#field-max-trials") as HTMLInputElement).value = "7";
    (root.querySelector("#field-rule") as HTMLSelectElement).value = "max-info";
    const form = root.querySelector("#setup-form") as HTMLFormElement;
    form.dispatchEvent(new window.Event("submit", { cancelable: true }));
    await app.whenIdle();

    expect(fake.created).toEqual([
      {
        prior: { kind: "truncated-normal", mu: 0, sigma: 1 },
        rule: "max-info",
        estimator: "mean",
        max_trials: 7,
      },
    ]);
    expect(router.value).toBe("#/session/s1");
    expect(root.querySelector("#item-card")).not.toBeNull();
    expect(root.querySelector("#item-difficulty")?.textContent).toBe("0.25");
    expect(root.querySelector("#trial-counter")?.textContent).toBe(
      "Trial 0 / 5",
    );
    expect(root.querySelectorAll("#whatif tbody tr").length).toBe(5);
    expect(
      root.querySelector('#whatif tr[data-rule="bayes-risk-sq"]')?.className,
    ).toBe("active-rule");
  });

  it("submits an answer and refreshes history, trajectory, and posterior", async () => {
    const root = mount();
    const fake = new FakeClient();
    const router = new MemoryRouter(hashForSession("s1"));
    const app = new App(root, fake.asClient(), router);
    await app.init();

    (root.querySelector('button[data-answer="1"]') as HTMLButtonElement).click();
    await app.whenIdle();

    expect(fake.submitted).toEqual([{ itemId: "item-a", response: 1 }]);
    expect(root.querySelectorAll("#history tbody tr").length).toBe(1);
    expect(root.querySelector("#trajectory-last")?.textContent).toBe("0.2");
    expect(root.querySelector("#item-id")?.textContent).toBe("item-b");
    const areaText = root.querySelector("#posterior-area")?.textContent ?? "";
    expect(areaText).toMatch(/Integrated area/);
    expect(root.querySelector("#est-mean")?.textContent).toBe("0.1");
  });

  it("drops a second click on the same item instead of double-submitting", async () => {
    const root = mount();
    const fake = new FakeClient();
    fake.submitGate = deferred();
    const router = new MemoryRouter(hashForSession("s1"));
    const app = new App(root, fake.asClient(), router);
    await app.init();

    const yes = root.querySelector(
      'button[data-answer="1"]',
    ) as HTMLButtonElement;
    const no = root.querySelector(
      'button[data-answer="0"]',
    ) as HTMLButtonElement;
    yes.click();
    no.click(); // queued behind the first; stale by the time it runs
    fake.submitGate.resolve();
    await app.whenIdle();

    expect(fake.submitted).toEqual([{ itemId: "item-a", response: 1 }]);
    expect(root.querySelectorAll("#history tbody tr").length).toBe(1);
  });

  it("restores a mid-flight session from the hash alone", async () => {
    const root = mount();
    const fake = new FakeClient();
    fake.view = makeView({
      trials_used: 3,
      history: [
        { item_id: "i1", difficulty: 0.1, response: 1 },
        { item_id: "i2", difficulty: 0.6, response: 0 },
        { item_id: "i3", difficulty: 0.2, response: 1 },
      ],
      estimate_trajectory: [0.4, 0.1, 0.3],
    });
    const app = new App(
      root,
      fake.asClient(),
      new MemoryRouter(hashForSession("s77")),
    );
    await app.init();

    expect(fake.fetchedSessions).toEqual(["s77"]);
    expect(root.querySelector("#trial-counter")?.textContent).toBe(
      "Trial 3 / 5",
    );
    expect(root.querySelectorAll("#history tbody tr").length).toBe(3);
    expect(root.querySelector("#setup-form")).toBeNull();
  });

  it("shows the results screen with an export link when finished", async () => {
    const root = mount();
    const fake = new FakeClient();
    fake.view = makeView({
      phase: "finished",
      trials_used: 5,
      current_item: null,
      estimate: {
        value: 0.8132,
        estimator: "mean",
        trials_used: 5,
        posterior_variance: 0.21,
      },
      history: [{ item_id: "i1", difficulty: 0.1, response: 1 }],
      estimate_trajectory: [0.4, 0.5, 0.7, 0.75, 0.8132],
    });
    const app = new App(
      root,
      fake.asClient(),
      new MemoryRouter(hashForSession("s1")),
    );
    await app.init();

    expect(root.querySelector("#results")).not.toBeNull();
    expect(root.querySelector("#final-estimate")?.textContent).toBe(
      formatNumber(0.8132),
    );
    expect(root.querySelector("#whatif-panel")).toBeNull();
    expect(root.querySelector("#item-card")).toBeNull();

    const href =
      root.querySelector("#export-link")?.getAttribute("href") ?? "";
    expect(href.startsWith("data:application/json")).toBe(true);
    const exported = JSON.parse(
      decodeURIComponent(href.slice(href.indexOf(",") + 1)),
    );
    expect(exported.view.session_id).toBe("s1");
    expect(exported.view.estimate.value).toBe(0.8132);
    expect(exported.posterior.nodes.length).toBe(25);
  });

  it("surfaces API failures in the error banner", async () => {
    const root = mount();
    const fake = new FakeClient();
    fake.getSession = async () => {
      throw new Error("connection refused");
    };
    const app = new App(
      root,
      fake.asClient(),
      new MemoryRouter(hashForSession("gone")),
    );
    await app.init();

    const banner = root.querySelector("#error-banner");
    expect(banner?.textContent).toContain("connection refused");
    // Falls back to the setup form so the user can start over.
    expect(root.querySelector("#setup-form")).not.toBeNull();
  });
});
