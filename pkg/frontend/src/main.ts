import { ApiClient } from "./api.js";
import { App, type HashRouter } from "./app.js";
import { resolveApiBase } from "./config.js";

const base = resolveApiBase(window as unknown as Record<string, unknown>, document);
const router: HashRouter = {
  get: () => window.location.hash,
  set: (value) => {
    window.location.hash = value;
  },
};
const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
void new App(root, new ApiClient(base), router).init();
