import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 60_000,
    // The end-to-end test spawns one API server; keep files sequential so
    // only a single server runs at a time.
    fileParallelism: false,
  },
});
